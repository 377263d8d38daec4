use thiserror::Error;

use crate::crt::Incompatible;
use crate::topology::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("gcd(0, 0) is undefined")]
    UndefinedGcd,

    #[error("congruence modulus must be at least 1")]
    ZeroModulus,

    #[error("bit length {0} is outside the supported range 2..=64")]
    InvalidBitLength(u32),

    #[error("requested {requested} distinct {bit_length}-bit primes but only {available} exist")]
    InsufficientPrimes {
        requested: usize,
        available: usize,
        bit_length: u32,
    },

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("invalid prime pool: {0}")]
    InvalidPool(String),

    #[error("invalid packet: {0}")]
    InvalidPacket(String),

    #[error("message of {bits} bits exceeds the {limit}-bit limit")]
    MessageTooLarge { bits: u64, limit: u32 },

    #[error("message is not below the product of identity pair {pair:?}")]
    MessageExceedsIdentity { pair: (u64, u64) },

    #[error("incompatible congruences at node {node:?}: {source}")]
    Corruption {
        node: Option<NodeId>,
        #[source]
        source: Incompatible,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("field size q = {q} must exceed the receiver count {receivers}")]
    InvalidField { q: u64, receivers: u64 },

    #[error("topology parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Wire(#[from] crate::wire::WireError),
}

impl Error {
    pub(crate) fn corruption(source: Incompatible) -> Self {
        Error::Corruption { node: None, source }
    }

    pub(crate) fn at_node(self, node: NodeId) -> Self {
        match self {
            Error::Corruption { source, .. } => Error::Corruption {
                node: Some(node),
                source,
            },
            other => other,
        }
    }
}
