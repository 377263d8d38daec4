//! Leveled directed acyclic networks.
//!
//! Nodes are numbered level by level starting at 0. Level 0 holds the
//! sources, the last level holds the receivers, and every edge points from a
//! lower level to a strictly higher one. Random instances produced by
//! [`generate_layered`] only link consecutive levels.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Internal,
    Receiver,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    level_sizes: Vec<usize>,
    level_of: Vec<usize>,
    edges: Vec<(NodeId, NodeId)>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    labels: Vec<String>,
}

impl Topology {
    /// Builds a topology from level sizes and an edge list over node ids
    /// `0..sum(level_sizes)`.
    pub fn new(level_sizes: Vec<usize>, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        if level_sizes.len() < 2 {
            return Err(Error::Config("a topology needs at least two levels".into()));
        }
        if level_sizes.contains(&0) {
            return Err(Error::Config("every level needs at least one node".into()));
        }
        let level_of: Vec<usize> = level_sizes
            .iter()
            .enumerate()
            .flat_map(|(lvl, &n)| std::iter::repeat_n(lvl, n))
            .collect();
        let nodes = level_of.len();
        let mut in_edges = vec![Vec::new(); nodes];
        let mut out_edges = vec![Vec::new(); nodes];
        for (i, &(from, to)) in edges.iter().enumerate() {
            if from >= nodes || to >= nodes {
                return Err(Error::Config(format!(
                    "edge {from} -> {to} references a node outside 0..{nodes}"
                )));
            }
            if level_of[from] >= level_of[to] {
                return Err(Error::Config(format!(
                    "edge {from} -> {to} does not point to a higher level"
                )));
            }
            out_edges[from].push(i);
            in_edges[to].push(i);
        }
        let topo = Self {
            labels: (0..nodes).map(|v| format!("v{v}")).collect(),
            level_sizes,
            level_of,
            edges,
            in_edges,
            out_edges,
        };
        if let Some(s) = topo.sources().find(|&s| topo.out_degree(s) == 0) {
            return Err(Error::Config(format!("source {s} has no output links")));
        }
        if let Some(t) = topo.receivers().find(|&t| topo.in_degree(t) == 0) {
            return Err(Error::Config(format!("receiver {t} has no input links")));
        }
        Ok(topo)
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Self {
        for (slot, label) in self.labels.iter_mut().zip(labels) {
            *slot = label.into();
        }
        self
    }

    pub fn node_count(&self) -> usize {
        self.level_of.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (NodeId, NodeId) {
        self.edges[index]
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn level_count(&self) -> usize {
        self.level_sizes.len()
    }

    pub fn level_of(&self, node: NodeId) -> usize {
        self.level_of[node]
    }

    /// Node ids of one level.
    pub fn level(&self, level: usize) -> std::ops::Range<NodeId> {
        let start: usize = self.level_sizes[..level].iter().sum();
        start..start + self.level_sizes[level]
    }

    pub fn role(&self, node: NodeId) -> Role {
        match self.level_of[node] {
            0 => Role::Source,
            l if l + 1 == self.level_sizes.len() => Role::Receiver,
            _ => Role::Internal,
        }
    }

    pub fn sources(&self) -> std::ops::Range<NodeId> {
        self.level(0)
    }

    pub fn receivers(&self) -> std::ops::Range<NodeId> {
        self.level(self.level_sizes.len() - 1)
    }

    /// Edge indices entering `node`, in edge-list order.
    pub fn in_edges(&self, node: NodeId) -> &[usize] {
        &self.in_edges[node]
    }

    /// Edge indices leaving `node`, in edge-list order.
    pub fn out_edges(&self, node: NodeId) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.in_edges[node].len()
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_edges[node].len()
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label)
    }

    /// True when every edge joins consecutive levels.
    pub fn is_strictly_layered(&self) -> bool {
        self.edges
            .iter()
            .all(|&(a, b)| self.level_of[b] == self.level_of[a] + 1)
    }

    /// Node ids in an order where every edge goes forward.
    pub fn topological_order(&self) -> Vec<NodeId> {
        (0..self.node_count()).collect()
    }

    /// Receiver in-degrees, the `l_t` of each receiver.
    pub fn receiver_in_degrees(&self) -> Vec<usize> {
        self.receivers().map(|t| self.in_degree(t)).collect()
    }
}

/// The seven-node butterfly: `s → a, b`; `a, b → c`; `c → d`; `a, d → t1`; `b, d → t2`.
pub fn butterfly() -> Topology {
    // ids: s=0 | a=1 b=2 | c=3 | d=4 | t1=5 t2=6
    let edges = vec![(0, 1), (0, 2), (1, 3), (2, 3), (1, 5), (2, 6), (3, 4), (4, 5), (4, 6)];
    Topology::new(vec![1, 2, 1, 1, 2], edges)
        .expect("butterfly is well formed")
        .with_labels(["s", "a", "b", "c", "d", "t1", "t2"])
}

/// Parameters of a random layered network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayeredParams {
    /// `|V_0|`, the number of sources.
    pub sources: usize,
    /// `M`, the size of each internal level.
    pub width: usize,
    /// `L`, the number of internal levels.
    pub depth: usize,
    /// `|V_{L+1}|`, the number of receivers.
    pub receivers: usize,
    /// Fraction of the next level each node links to.
    pub sigma: f64,
}

impl LayeredParams {
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.sources];
        sizes.extend(std::iter::repeat_n(self.width, self.depth));
        sizes.push(self.receivers);
        sizes
    }

    /// Out-degree of a node whose next level has `next` nodes.
    pub fn fanout(&self, next: usize) -> usize {
        ((self.sigma * next as f64).round() as usize).clamp(1, next)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::Config(format!("sigma {} is not in (0, 1]", self.sigma)));
        }
        if self.sources == 0 || self.receivers == 0 || (self.depth > 0 && self.width == 0) {
            return Err(Error::Config("every level needs at least one node".into()));
        }
        Ok(())
    }
}

/// Random layered network: each node of level `i` links to
/// `round(sigma·|V_{i+1}|)` distinct nodes of level `i + 1`, drawn uniformly
/// without replacement.
pub fn generate_layered<R: Rng + ?Sized>(params: &LayeredParams, rng: &mut R) -> Result<Topology> {
    params.validate()?;
    let sizes = params.level_sizes();
    let mut edges = Vec::new();
    let mut start = 0;
    for pair in sizes.windows(2) {
        let (here, next) = (pair[0], pair[1]);
        let next_start = start + here;
        let fanout = params.fanout(next);
        for node in start..next_start {
            let mut targets: Vec<usize> = index::sample(rng, next, fanout).into_vec();
            targets.sort_unstable();
            edges.extend(targets.into_iter().map(|t| (node, next_start + t)));
        }
        start = next_start;
    }
    Topology::new(sizes, edges)
}

/// Text form: a `levels:` header with the level sizes, then one `u -> v` per edge.
/// Blank lines and `#` comments are ignored when parsing.
impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut header = String::from("levels:");
        for n in &self.level_sizes {
            write!(header, " {n}")?;
        }
        writeln!(f, "{header}")?;
        for (a, b) in &self.edges {
            writeln!(f, "{a} -> {b}")?;
        }
        Ok(())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let mut levels: Option<Vec<usize>> = None;
        let mut edges = Vec::new();
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("levels:") {
                if levels.is_some() {
                    return Err(parse_err(line_no, "duplicate levels header".into()));
                }
                let sizes = rest
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| parse_err(line_no, format!("bad level size: {e}")))?;
                levels = Some(sizes);
                continue;
            }
            if levels.is_none() {
                return Err(parse_err(line_no, "edge before the levels header".into()));
            }
            let (a, b) = line
                .split_once("->")
                .ok_or_else(|| parse_err(line_no, format!("expected `u -> v`, got `{line}`")))?;
            let node = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(line_no, format!("bad node id `{}`: {e}", t.trim())))
            };
            edges.push((node(a)?, node(b)?));
        }
        let levels = levels.ok_or_else(|| parse_err(0, "missing levels header".into()))?;
        Topology::new(levels, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn butterfly_shape() {
        let b = butterfly();
        assert_eq!(b.node_count(), 7);
        assert_eq!(b.edge_count(), 9);
        let t1 = b.node_by_label("t1").unwrap();
        assert_eq!(b.in_degree(t1), 2);
        let feeders: Vec<&str> = b
            .in_edges(t1)
            .iter()
            .map(|&e| b.label(b.edge(e).0))
            .collect();
        assert_eq!(feeders, ["a", "d"]);
        let order = b.topological_order();
        let pos = |v: NodeId| order.iter().position(|&x| x == v).unwrap();
        assert!(b.edges().iter().all(|&(x, y)| pos(x) < pos(y)));
        assert!(!b.is_strictly_layered());
        assert_eq!(b.role(0), Role::Source);
        assert_eq!(b.role(3), Role::Internal);
        assert_eq!(b.role(6), Role::Receiver);
    }

    #[test]
    fn layered_degrees() {
        let params = LayeredParams {
            sources: 100,
            width: 200,
            depth: 5,
            receivers: 10,
            sigma: 0.8,
        };
        let topo = generate_layered(&params, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(topo.is_strictly_layered());
        assert_eq!(topo.level_sizes(), &[100, 200, 200, 200, 200, 200, 10]);
        assert!(topo.sources().all(|s| topo.out_degree(s) == 160));
        assert!(topo.level(5).all(|v| topo.out_degree(v) == 8));
        for v in 0..topo.node_count() {
            let targets: std::collections::HashSet<_> =
                topo.out_edges(v).iter().map(|&e| topo.edge(e).1).collect();
            assert_eq!(targets.len(), topo.out_degree(v));
        }
    }

    #[test]
    fn sigma_one_is_complete() {
        let params = LayeredParams {
            sources: 3,
            width: 4,
            depth: 2,
            receivers: 2,
            sigma: 1.0,
        };
        let topo = generate_layered(&params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(topo.edge_count(), 3 * 4 + 4 * 4 + 4 * 2);
    }

    #[test]
    fn fanout_rounds_with_floor_of_one() {
        let p = LayeredParams {
            sources: 1,
            width: 1,
            depth: 1,
            receivers: 1,
            sigma: 0.01,
        };
        assert_eq!(p.fanout(10), 1);
        assert_eq!(LayeredParams { sigma: 0.8, ..p }.fanout(10), 8);
        assert_eq!(LayeredParams { sigma: 0.25, ..p }.fanout(10), 3);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let base = LayeredParams {
            sources: 2,
            width: 2,
            depth: 1,
            receivers: 2,
            sigma: 0.5,
        };
        assert!(generate_layered(&LayeredParams { sigma: 0.0, ..base }, &mut rng).is_err());
        assert!(generate_layered(&LayeredParams { sigma: 1.5, ..base }, &mut rng).is_err());
        assert!(generate_layered(&LayeredParams { sources: 0, ..base }, &mut rng).is_err());
    }

    #[test]
    fn text_round_trip() {
        let b = butterfly();
        let text = b.to_string();
        assert!(text.starts_with("levels: 1 2 1 1 2\n0 -> 1\n"));
        let parsed: Topology = text.parse().unwrap();
        assert_eq!(parsed.edges(), b.edges());
        assert_eq!(parsed.level_sizes(), b.level_sizes());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("0 -> 1".parse::<Topology>(), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            "levels: 1 1\n0 => 1".parse::<Topology>(),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!("levels: 1 1\n1 -> 0".parse::<Topology>().is_err());
        assert!("levels: 1 1\n# nothing\n".parse::<Topology>().is_err());
        assert!("levels: 1 1\n0 -> 1 # edge\n".parse::<Topology>().is_ok());
    }
}
