//! Runs multicast sessions over a [`Topology`] and collects recovery statistics.
//!
//! Nodes fire once, level by level. Every node draws from its own ChaCha
//! stream derived from the session seed, so results do not depend on the
//! order in which nodes of one level are evaluated.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::{BigUint, RandBigInt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{
    assign_identities, classify_recovery, draw_picks, finalize_single, receiver_solve,
    recode_fast_many, source_encode_multi, source_encode_parallel, Packet, PrimePair, RecodePath,
    RecodePolicy, RecoveryOutcome, SessionConfig, SessionMode, SourceIdentity,
};
use crate::crt::CongruenceClass;
use crate::error::{Error, Result};
use crate::primes::{generate_identity_primes, generate_primes, PrimePool};
use crate::topology::{generate_layered, LayeredParams, NodeId, Topology};

const STREAM_POOL: u64 = 1;
const STREAM_TOPOLOGY: u64 = 2;
const STREAM_MESSAGES: u64 = 3;
const STREAM_NODE_BASE: u64 = 1 << 32;

/// Independent random stream `stream` of the session seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// What one receiver ends up with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverReport {
    pub node: NodeId,
    pub label: String,
    pub in_degree: usize,
    /// Distinct header primes seen on the input links, ascending.
    pub collected_primes: Vec<u64>,
    /// Per payload slot, the merged class `c mod N`.
    pub solution: Vec<CongruenceClass>,
    /// `outcomes[i][slot]`: source `i` in multi-source mode; a single entry in
    /// single-source mode.
    pub outcomes: Vec<Vec<RecoveryOutcome>>,
}

impl ReceiverReport {
    /// `t_i`, the number of distinct primes collected.
    pub fn primes_collected(&self) -> usize {
        self.collected_primes.len()
    }

    /// Number of messages recovered in full (judged on slot 0).
    pub fn full_count(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.first().is_some_and(RecoveryOutcome::is_full))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub config: SessionConfig,
    pub pool: PrimePool,
    /// Identity pairs in multi-source mode; the source's link pairs in single-source mode.
    pub identities: Vec<SourceIdentity>,
    pub receivers: Vec<ReceiverReport>,
}

/// A finished session together with the packet carried by every edge.
#[derive(Debug, Clone)]
pub struct SessionTrace {
    pub report: RecoveryReport,
    /// Indexed by edge; `None` when the tail node had nothing to send.
    pub edge_packets: Vec<Option<Packet>>,
}

/// Configurable session runner.
#[derive(Debug, Clone)]
pub struct Session<'a> {
    topology: &'a Topology,
    config: SessionConfig,
    pool: Option<PrimePool>,
    picks: HashMap<NodeId, PrimePair>,
}

impl<'a> Session<'a> {
    pub fn new(topology: &'a Topology, config: SessionConfig) -> Self {
        Self {
            topology,
            config,
            pool: None,
            picks: HashMap::new(),
        }
    }

    /// Uses `pool` instead of drawing `2k` fresh `m`-bit primes.
    pub fn with_pool(mut self, pool: PrimePool) -> Self {
        self.pool = Some(pool);
        self
    }

    /// Forces the prime pick of an internal node for all of its output links.
    pub fn with_pick(mut self, node: NodeId, pick: PrimePair) -> Self {
        self.picks.insert(node, pick);
        self
    }

    pub fn run(&self, messages: &[Vec<BigUint>]) -> Result<RecoveryReport> {
        self.run_traced(messages).map(|t| t.report)
    }

    pub fn run_traced(&self, messages: &[Vec<BigUint>]) -> Result<SessionTrace> {
        let topo = self.topology;
        let cfg = &self.config;
        cfg.validate()?;

        let pool = match &self.pool {
            Some(pool) => pool.clone(),
            None => {
                let mut rng = stream_rng(cfg.seed, STREAM_POOL);
                match cfg.mode {
                    SessionMode::Single => generate_primes(2 * cfg.k, cfg.m, &mut rng)?,
                    SessionMode::Multi => generate_identity_primes(2 * cfg.k, cfg.m, &mut rng)?,
                }
            }
        };
        if pool.len() != 2 * cfg.k {
            return Err(Error::Config(format!(
                "pool holds {} primes, session needs 2k = {}",
                pool.len(),
                2 * cfg.k
            )));
        }
        let identities = assign_identities(&pool)?;
        let mut edge_packets: Vec<Option<Packet>> = vec![None; topo.edge_count()];

        self.emit_sources(&identities, messages, &mut edge_packets)?;

        for level in 1..topo.level_count() - 1 {
            let emitted = topo
                .level(level)
                .into_par_iter()
                .map(|node| self.fire_internal(node, &edge_packets))
                .collect::<Result<Vec<_>>>()?;
            for (edge, pkt) in emitted.into_iter().flatten() {
                edge_packets[edge] = Some(pkt);
            }
        }

        let receivers = topo
            .receivers()
            .into_par_iter()
            .map(|t| self.decode_receiver(t, &identities, &edge_packets))
            .collect::<Result<Vec<_>>>()?;

        Ok(SessionTrace {
            report: RecoveryReport {
                config: cfg.clone(),
                pool,
                identities,
                receivers,
            },
            edge_packets,
        })
    }

    fn emit_sources(
        &self,
        identities: &[SourceIdentity],
        messages: &[Vec<BigUint>],
        edge_packets: &mut [Option<Packet>],
    ) -> Result<()> {
        let topo = self.topology;
        let cfg = &self.config;
        let check_slots = |msgs: &Vec<BigUint>| {
            if msgs.len() == cfg.u {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "expected {} messages per source, got {}",
                    cfg.u,
                    msgs.len()
                )))
            }
        };

        match cfg.mode {
            SessionMode::Single => {
                if topo.level_sizes()[0] != 1 || messages.len() != 1 {
                    return Err(Error::Config(
                        "single-source mode needs one source node and one message list".into(),
                    ));
                }
                check_slots(&messages[0])?;
                let out = topo.out_edges(0);
                if out.len() != cfg.k {
                    return Err(Error::Config(format!(
                        "source out-degree {} differs from k = {}",
                        out.len(),
                        cfg.k
                    )));
                }
                for (&edge, id) in out.iter().zip(identities) {
                    edge_packets[edge] = Some(source_encode_parallel(&messages[0], cfg.n, id.pair)?);
                }
            }
            SessionMode::Multi => {
                let sources = topo.sources();
                if sources.len() != cfg.k || messages.len() != cfg.k {
                    return Err(Error::Config(format!(
                        "multi-source mode needs k = {} sources and message lists, got {} and {}",
                        cfg.k,
                        sources.len(),
                        messages.len()
                    )));
                }
                for ((node, id), msgs) in sources.zip(identities).zip(messages) {
                    check_slots(msgs)?;
                    let pkt = source_encode_multi(id, msgs, cfg.m)?;
                    for &edge in topo.out_edges(node) {
                        edge_packets[edge] = Some(pkt.clone());
                    }
                }
            }
        }
        Ok(())
    }

    fn inputs(&self, node: NodeId, edge_packets: &[Option<Packet>]) -> Vec<Packet> {
        self.topology
            .in_edges(node)
            .iter()
            .filter_map(|&e| edge_packets[e].clone())
            .collect()
    }

    fn fire_internal(
        &self,
        node: NodeId,
        edge_packets: &[Option<Packet>],
    ) -> Result<Vec<(usize, Packet)>> {
        let inputs = self.inputs(node, edge_packets);
        let out = self.topology.out_edges(node);
        if inputs.is_empty() || out.is_empty() {
            return Ok(Vec::new());
        }
        let cfg = &self.config;
        let picks = match self.picks.get(&node) {
            Some(&pick) => vec![pick; out.len()],
            None => {
                let mut rng = stream_rng(cfg.seed, STREAM_NODE_BASE + node as u64);
                draw_picks(&inputs, out.len(), cfg.recode_policy, &mut rng)?
            }
        };
        let recoded = match cfg.recode_path {
            RecodePath::Full => {
                // one solve per node, reused for every pick
                let solutions = receiver_solve(&inputs).map_err(|e| e.at_node(node))?;
                let available: HashSet<u64> =
                    inputs.iter().flat_map(|p| [p.pair().0, p.pair().1]).collect();
                picks
                    .iter()
                    .map(|&pick| reduce_for(&available, &solutions, pick))
                    .collect::<Result<Vec<_>>>()
            }
            RecodePath::Fast => recode_fast_many(&inputs, &picks),
        }
        .map_err(|e| e.at_node(node))?;
        Ok(out.iter().copied().zip(recoded).collect())
    }

    fn decode_receiver(
        &self,
        node: NodeId,
        identities: &[SourceIdentity],
        edge_packets: &[Option<Packet>],
    ) -> Result<ReceiverReport> {
        let topo = self.topology;
        let cfg = &self.config;
        let inputs = self.inputs(node, edge_packets);
        let collected: BTreeSet<u64> = inputs
            .iter()
            .flat_map(|p| [p.pair().0, p.pair().1])
            .collect();
        let mut solution = receiver_solve(&inputs).map_err(|e| e.at_node(node))?;
        if solution.is_empty() {
            solution = vec![CongruenceClass::universe(); cfg.u];
        }
        let outcomes = match cfg.mode {
            SessionMode::Single => vec![solution
                .iter()
                .map(|c| finalize_single(c.residue(), c.modulus(), cfg.n))
                .collect()],
            SessionMode::Multi => identities
                .iter()
                .map(|id| solution.iter().map(|c| classify_recovery(c, id)).collect())
                .collect(),
        };
        Ok(ReceiverReport {
            node,
            label: topo.label(node).to_string(),
            in_degree: topo.in_degree(node),
            collected_primes: collected.into_iter().collect(),
            solution,
            outcomes,
        })
    }
}

fn reduce_for(
    available: &HashSet<u64>,
    solutions: &[CongruenceClass],
    pick: PrimePair,
) -> Result<Packet> {
    if pick.0 == pick.1 || !available.contains(&pick.0) || !available.contains(&pick.1) {
        return Err(Error::Config(format!(
            "pick ({}, {}) is not available at this node",
            pick.0, pick.1
        )));
    }
    let modulus = BigUint::from(pick.0) * pick.1;
    Ok(Packet::recoded(
        solutions.iter().map(|c| c.residue() % &modulus).collect(),
        pick,
    ))
}

/// Runs one session with a freshly drawn prime pool.
pub fn run_session(
    topology: &Topology,
    config: &SessionConfig,
    messages: &[Vec<BigUint>],
) -> Result<RecoveryReport> {
    Session::new(topology, config.clone()).run(messages)
}

/// Uniform `bits`-bit-bounded messages (`< 2^bits`), `u` per source.
pub fn random_messages(seed: u64, sources: usize, u: usize, bits: u32) -> Vec<Vec<BigUint>> {
    let mut rng = stream_rng(seed, STREAM_MESSAGES);
    (0..sources)
        .map(|_| (0..u).map(|_| rng.gen_biguint(u64::from(bits))).collect())
        .collect()
}

/// Per-receiver recover rate `R*` and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverRates {
    pub per_receiver: Vec<f64>,
    pub mean: f64,
}

/// `R* = (number of Full outcomes) / k` for every receiver.
pub fn recover_rate(report: &RecoveryReport) -> RecoverRates {
    let k = report.receivers.first().map_or(1, |r| r.outcomes.len().max(1));
    let per_receiver: Vec<f64> = report
        .receivers
        .iter()
        .map(|r| r.full_count() as f64 / k as f64)
        .collect();
    let mean = mean(&per_receiver);
    RecoverRates { per_receiver, mean }
}

/// `R' = mean(t_i) / 2k`.
pub fn prime_coverage(report: &RecoveryReport) -> f64 {
    let t: Vec<f64> = report
        .receivers
        .iter()
        .map(|r| r.primes_collected() as f64)
        .collect();
    mean(&t) / report.pool.len() as f64
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Fixed network parameters of the layered experiment.
pub const EXPERIMENT_SOURCES: usize = 100;
pub const EXPERIMENT_RECEIVERS: usize = 10;
pub const EXPERIMENT_SIGMA: f64 = 0.8;

/// Reference `R'` values for `(M, L)`.
pub const REFERENCE_R_PRIME: [(usize, usize, f64); 6] = [
    (200, 5, 0.787),
    (200, 3, 0.785),
    (250, 5, 0.861),
    (250, 3, 0.853),
    (400, 5, 0.965),
    (400, 3, 0.963),
];

pub fn reference_r_prime(width: usize, depth: usize) -> Option<f64> {
    REFERENCE_R_PRIME
        .iter()
        .find(|&&(w, d, _)| w == width && d == depth)
        .map(|&(_, _, r)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub m: u32,
    pub policy: RecodePolicy,
    pub path: RecodePath,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            widths: vec![200, 250, 400],
            depths: vec![5, 3],
            seeds: (0..10).collect(),
            m: 16,
            policy: RecodePolicy::PerNode,
            path: RecodePath::Full,
        }
    }
}

/// One session of the layered experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
    /// `t_1..t_10`: distinct primes collected by each receiver.
    pub primes_collected: Vec<usize>,
    pub r_prime: f64,
    /// Mean `R*` over receivers, for comparison with `r_prime`.
    pub recover_rate: f64,
}

/// Seed average of the rows sharing `(width, depth)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub width: usize,
    pub depth: usize,
    pub seeds: usize,
    pub mean_primes_collected: Vec<f64>,
    pub mean_r_prime: f64,
    pub mean_recover_rate: f64,
    pub reference_r_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub params: ExperimentParams,
    pub rows: Vec<ExperimentRow>,
    pub summaries: Vec<ExperimentSummary>,
}

/// Runs one layered-experiment session: builds the network from `seed`,
/// injects random `(2m-1)`-bit messages and reports prime coverage.
pub fn experiment_session(
    width: usize,
    depth: usize,
    seed: u64,
    m: u32,
    policy: RecodePolicy,
    path: RecodePath,
) -> Result<(Topology, RecoveryReport)> {
    let params = LayeredParams {
        sources: EXPERIMENT_SOURCES,
        width,
        depth,
        receivers: EXPERIMENT_RECEIVERS,
        sigma: EXPERIMENT_SIGMA,
    };
    let topo = generate_layered(&params, &mut stream_rng(seed, STREAM_TOPOLOGY))?;
    let config = SessionConfig::multi_source(m, 1, EXPERIMENT_SOURCES, seed)
        .with_policy(policy)
        .with_path(path);
    let messages = random_messages(seed, EXPERIMENT_SOURCES, 1, 2 * m - 1);
    let report = run_session(&topo, &config, &messages)?;
    Ok((topo, report))
}

/// Reproduces the layered-network coverage table over a grid of `(M, L)`
/// and seeds. Rows are ordered by width, then depth, then seed.
pub fn experiment_table2(params: &ExperimentParams) -> Result<ExperimentTable> {
    let mut grid: Vec<(usize, usize, u64)> = Vec::new();
    for &w in &params.widths {
        for &d in &params.depths {
            grid.extend(params.seeds.iter().map(|&s| (w, d, s)));
        }
    }
    let mut rows = grid
        .into_par_iter()
        .map(|(width, depth, seed)| {
            let (_, report) =
                experiment_session(width, depth, seed, params.m, params.policy, params.path)?;
            Ok(ExperimentRow {
                width,
                depth,
                seed,
                primes_collected: report.receivers.iter().map(|r| r.primes_collected()).collect(),
                r_prime: prime_coverage(&report),
                recover_rate: recover_rate(&report).mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|a| (a.width, a.depth, a.seed));

    let mut summaries: Vec<ExperimentSummary> = Vec::new();
    for chunk in rows.chunk_by(|a, b| (a.width, a.depth) == (b.width, b.depth)) {
        let n = chunk.len() as f64;
        let receivers = chunk[0].primes_collected.len();
        let mean_primes_collected = (0..receivers)
            .map(|i| chunk.iter().map(|r| r.primes_collected[i] as f64).sum::<f64>() / n)
            .collect();
        summaries.push(ExperimentSummary {
            width: chunk[0].width,
            depth: chunk[0].depth,
            seeds: chunk.len(),
            mean_primes_collected,
            mean_r_prime: chunk.iter().map(|r| r.r_prime).sum::<f64>() / n,
            mean_recover_rate: chunk.iter().map(|r| r.recover_rate).sum::<f64>() / n,
            reference_r_prime: reference_r_prime(chunk[0].width, chunk[0].depth),
        });
    }

    Ok(ExperimentTable {
        params: params.clone(),
        rows,
        summaries,
    })
}
