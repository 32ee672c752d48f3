//! Static problem instance: a directed acyclic erasure network with one
//! source, one destination and finite-buffer relays.
//!
//! Relays are renumbered in topological order during validation, so relay
//! `i` (1-based) always maps to bit `i - 1` of a subset mask. Edges are kept
//! in the canonical processing order used by every engine in this crate:
//! an edge is listed before every edge that feeds its tail, which means a
//! node always transmits from its start-of-epoch buffer.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of decimal places accepted for an erasure probability.
const MAX_SCALE: u32 = 18;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("network has a cycle through node `{0}`")]
    CycleDetected(String),
    #[error("relay `{0}` is not on any source-to-destination path")]
    DisconnectedRelay(String),
    #[error("invalid erasure probability `{value}` on edge {from}->{to}")]
    InvalidProbability { from: String, to: String, value: String },
    #[error("relay `{node}` needs a positive buffer size")]
    NonPositiveBuffer { node: String },
    #[error("missing or unknown source/destination: {0}")]
    MissingSourceOrDest(String),
    #[error("edge {from}->{to} references an unknown node")]
    UnknownNode { from: String, to: String },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge {from}->{to}")]
    DuplicateEdge { from: String, to: String },
}

/// An erasure probability kept as an exact decimal `mantissa / 10^scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Probability {
    mantissa: u64,
    scale: u32,
}

impl Probability {
    pub const ZERO: Probability = Probability { mantissa: 0, scale: 0 };
    pub const ONE: Probability = Probability { mantissa: 1, scale: 0 };

    fn normalized(mut mantissa: u64, mut scale: u32) -> Self {
        if mantissa == 0 {
            return Self::ZERO;
        }
        while scale > 0 && mantissa % 10 == 0 {
            mantissa /= 10;
            scale -= 1;
        }
        Probability { mantissa, scale }
    }

    pub fn value(&self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    pub fn as_ratio(&self) -> Ratio<i128> {
        Ratio::new(self.mantissa as i128, 10i128.pow(self.scale))
    }

    /// Digits after the decimal point in normalized form.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// `(1 - p) * 10^scale`, exact. `scale` must be at least `self.scale()`.
    fn complement_scaled(&self, scale: u32) -> i128 {
        let denom = 10i128.pow(scale);
        denom - self.mantissa as i128 * 10i128.pow(scale - self.scale)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let denom = 10u64.pow(self.scale);
        write!(
            f,
            "{}.{:0width$}",
            self.mantissa / denom,
            self.mantissa % denom,
            width = self.scale as usize
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseProbabilityError(String);

impl fmt::Display for ParseProbabilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a probability in [0, 1]: `{}`", self.0)
    }
}

impl std::error::Error for ParseProbabilityError {}

impl FromStr for Probability {
    type Err = ParseProbabilityError;

    /// Accepts plain decimals (`0.25`, `1`, `.5`) with an optional exponent
    /// (`1e-3`). The value is kept exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseProbabilityError(s.to_string());
        let t = s.trim();
        let (body, exp) = match t.find(['e', 'E']) {
            Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let body = body.strip_prefix('+').unwrap_or(body);
        let (int_part, frac_part) = match body.split_once('.') {
            Some((a, b)) => (a, b),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits: String = format!("{int_part}{frac_part}");
        let digits = digits.trim_start_matches('0');
        let mut scale = frac_part.len() as i64 - exp as i64;
        let mut digits = digits.to_string();
        if scale < 0 {
            digits.extend(std::iter::repeat('0').take((-scale) as usize));
            scale = 0;
        }
        // Trailing zeros do not count against the precision limit.
        while scale > 0 && digits.ends_with('0') {
            digits.pop();
            scale -= 1;
        }
        if scale > MAX_SCALE as i64 || digits.len() > 19 {
            return Err(err());
        }
        let mantissa = if digits.is_empty() { 0 } else { digits.parse::<u64>().map_err(|_| err())? };
        let p = Probability::normalized(mantissa, scale as u32);
        if p.mantissa > 10u64.pow(p.scale) {
            return Err(err());
        }
        Ok(p)
    }
}

/// A node of a validated network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Source,
    /// Zero-based relay index; relay `i` in the usual 1-based numbering is `Relay(i - 1)`.
    Relay(usize),
    Dest,
}

impl Node {
    fn sort_key(&self, n: usize) -> usize {
        match *self {
            Node::Source => 0,
            Node::Relay(i) => i + 1,
            Node::Dest => n + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub tail: Node,
    pub head: Node,
    pub erasure: Probability,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relay {
    pub id: String,
    pub buffer: u32,
}

/// A validated erasure network. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasureNetwork {
    source_id: String,
    dest_id: String,
    relays: Vec<Relay>,
    /// Edges in canonical processing order.
    edges: Vec<Edge>,
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer: Option<i64>,
}

/// Erasure values may be written as strings (exact) or JSON numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ErasureSpec {
    Text(String),
    Number(f64),
}

impl ErasureSpec {
    fn literal(&self) -> String {
        match self {
            ErasureSpec::Text(s) => s.clone(),
            // Shortest round-trip formatting recovers the decimal literal.
            ErasureSpec::Number(x) => format!("{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub erasure: ErasureSpec,
}

/// Raw, unvalidated network description as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub dest: Option<String>,
}

impl ErasureNetwork {
    /// Validates a raw description and canonicalizes it.
    pub fn validate(spec: &NetworkSpec) -> Result<Self, NetworkError> {
        let source_id = spec
            .source
            .clone()
            .ok_or_else(|| NetworkError::MissingSourceOrDest("no \"source\" given".into()))?;
        let dest_id = spec
            .dest
            .clone()
            .ok_or_else(|| NetworkError::MissingSourceOrDest("no \"dest\" given".into()))?;
        if source_id == dest_id {
            return Err(NetworkError::MissingSourceOrDest("source and dest are the same node".into()));
        }

        let mut position: HashMap<&str, usize> = HashMap::new();
        for (pos, node) in spec.nodes.iter().enumerate() {
            if position.insert(node.id.as_str(), pos).is_some() {
                return Err(NetworkError::DuplicateNode(node.id.clone()));
            }
        }
        let src = *position
            .get(source_id.as_str())
            .ok_or_else(|| NetworkError::MissingSourceOrDest(format!("source `{source_id}` is not a node")))?;
        let dst = *position
            .get(dest_id.as_str())
            .ok_or_else(|| NetworkError::MissingSourceOrDest(format!("dest `{dest_id}` is not a node")))?;

        for (pos, node) in spec.nodes.iter().enumerate() {
            if pos != src && pos != dst && node.buffer.is_none_or(|b| b <= 0 || b > u32::MAX as i64) {
                return Err(NetworkError::NonPositiveBuffer { node: node.id.clone() });
            }
        }

        let count = spec.nodes.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut raw_edges = Vec::with_capacity(spec.edges.len());
        let mut seen = HashSet::new();
        for e in &spec.edges {
            let (Some(&u), Some(&v)) = (position.get(e.from.as_str()), position.get(e.to.as_str())) else {
                return Err(NetworkError::UnknownNode { from: e.from.clone(), to: e.to.clone() });
            };
            if u == v {
                return Err(NetworkError::CycleDetected(e.from.clone()));
            }
            if v == src {
                return Err(NetworkError::MissingSourceOrDest(format!(
                    "edge {}->{} enters the source",
                    e.from, e.to
                )));
            }
            if u == dst {
                return Err(NetworkError::MissingSourceOrDest(format!(
                    "edge {}->{} leaves the destination",
                    e.from, e.to
                )));
            }
            if !seen.insert((u, v)) {
                return Err(NetworkError::DuplicateEdge { from: e.from.clone(), to: e.to.clone() });
            }
            let literal = e.erasure.literal();
            let erasure = literal.parse::<Probability>().map_err(|_| NetworkError::InvalidProbability {
                from: e.from.clone(),
                to: e.to.clone(),
                value: literal.clone(),
            })?;
            succ[u].push(v);
            pred[v].push(u);
            raw_edges.push((u, v, erasure));
        }

        // Kahn's algorithm, ties broken by declaration position.
        let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..count).filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(count);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        if topo.len() < count {
            let culprit = (0..count).find(|&v| indeg[v] > 0).unwrap();
            return Err(NetworkError::CycleDetected(spec.nodes[culprit].id.clone()));
        }

        let from_source = reach(src, &succ);
        let to_dest = reach(dst, &pred);
        for v in topo.iter().copied().filter(|&v| v != src && v != dst) {
            if !from_source[v] || !to_dest[v] {
                return Err(NetworkError::DisconnectedRelay(spec.nodes[v].id.clone()));
            }
        }

        let mut node_of = vec![Node::Source; count];
        let mut relays = Vec::new();
        for &v in &topo {
            node_of[v] = if v == src {
                Node::Source
            } else if v == dst {
                Node::Dest
            } else {
                relays.push(Relay { id: spec.nodes[v].id.clone(), buffer: spec.nodes[v].buffer.unwrap() as u32 });
                Node::Relay(relays.len() - 1)
            };
        }

        let edges = raw_edges
            .into_iter()
            .map(|(u, v, erasure)| Edge { tail: node_of[u], head: node_of[v], erasure })
            .collect();
        let mut net = ErasureNetwork { source_id, dest_id, relays, edges };
        net.edges = net.topological_edge_order();
        Ok(net)
    }

    /// Parses and validates a JSON network description.
    pub fn from_json(text: &str) -> Result<Self, crate::cli::ConfigError> {
        let spec: NetworkSpec = serde_json::from_str(text)?;
        Ok(Self::validate(&spec)?)
    }

    /// Canonical description: source, relays in index order, destination;
    /// edges in processing order with exact decimal erasures.
    pub fn to_spec(&self) -> NetworkSpec {
        let mut nodes = vec![NodeSpec { id: self.source_id.clone(), buffer: None }];
        nodes.extend(self.relays.iter().map(|r| NodeSpec { id: r.id.clone(), buffer: Some(r.buffer as i64) }));
        nodes.push(NodeSpec { id: self.dest_id.clone(), buffer: None });
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec {
                from: self.node_id(e.tail).to_string(),
                to: self.node_id(e.head).to_string(),
                erasure: ErasureSpec::Text(e.erasure.to_string()),
            })
            .collect();
        NetworkSpec { nodes, edges, source: Some(self.source_id.clone()), dest: Some(self.dest_id.clone()) }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("network spec serializes")
    }

    /// Number of relays `n`.
    pub fn relay_count(&self) -> usize {
        self.relays.len()
    }

    pub fn relays(&self) -> &[Relay] {
        &self.relays
    }

    pub fn buffer(&self, relay: usize) -> u32 {
        self.relays[relay].buffer
    }

    pub fn buffers(&self) -> Vec<u32> {
        self.relays.iter().map(|r| r.buffer).collect()
    }

    /// Edges in canonical processing order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_id(&self, node: Node) -> &str {
        match node {
            Node::Source => &self.source_id,
            Node::Relay(i) => &self.relays[i].id,
            Node::Dest => &self.dest_id,
        }
    }

    /// Same topology with every relay buffer replaced by `m`.
    pub fn with_uniform_buffer(&self, m: u32) -> Self {
        assert!(m > 0, "buffer size must be positive");
        let mut net = self.clone();
        for r in &mut net.relays {
            r.buffer = m;
        }
        net
    }

    /// Same topology with new erasure probabilities, given in processing order.
    pub fn with_erasures(&self, erasures: &[Probability]) -> Self {
        assert_eq!(erasures.len(), self.edges.len());
        let mut net = self.clone();
        for (e, &p) in net.edges.iter_mut().zip(erasures) {
            e.erasure = p;
        }
        net
    }

    /// Longest hop count from each node to the destination, indexed by
    /// `Node::sort_key`.
    fn longest_to_dest(&self) -> Vec<usize> {
        let n = self.relays.len();
        let mut dist = vec![0usize; n + 2];
        // Relays are in topological order, so walk them backwards.
        let mut order: Vec<Node> = vec![Node::Dest];
        order.extend((0..n).rev().map(Node::Relay));
        order.push(Node::Source);
        for node in order {
            let best = self
                .edges
                .iter()
                .filter(|e| e.tail == node)
                .map(|e| dist[e.head.sort_key(n)] + 1)
                .max()
                .unwrap_or(0);
            dist[node.sort_key(n)] = best;
        }
        dist
    }

    /// Downstream-first processing order: edges sorted by the longest hop
    /// distance from their tail to `d`, then by (tail, head) index. Every
    /// edge precedes the edges that feed its tail.
    pub fn topological_edge_order(&self) -> Vec<Edge> {
        let n = self.relays.len();
        let dist = self.longest_to_dest();
        let mut edges = self.edges.clone();
        edges.sort_by_key(|e| (dist[e.tail.sort_key(n)], e.tail.sort_key(n), e.head.sort_key(n)));
        edges
    }

    /// Max-flow value from `s` to `d` with capacities `1 - ε_e`, exact.
    pub fn min_cut_capacity(&self) -> Ratio<i128> {
        let n = self.relays.len();
        let scale = self.edges.iter().map(|e| e.erasure.scale()).max().unwrap_or(0);
        let mut flow = MaxFlow::new(n + 2);
        for e in &self.edges {
            flow.add_edge(e.tail.sort_key(n), e.head.sort_key(n), e.erasure.complement_scaled(scale));
        }
        Ratio::new(flow.run(0, n + 1), 10i128.pow(scale))
    }

    pub fn min_cut_value(&self) -> f64 {
        let r = self.min_cut_capacity();
        *r.numer() as f64 / *r.denom() as f64
    }

    /// Draws one epoch's channel realization, indexed in processing order.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let mut out = ChannelRealization::all_failed(self.edges.len());
        self.sample_realization_into(rng, &mut out);
        out
    }

    pub fn sample_realization_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut ChannelRealization) {
        out.success.clear();
        out.success.extend(self.edges.iter().map(|e| rng.gen::<f64>() >= e.erasure.value()));
    }

    /// Probability of a realization, product of `ε` over failures and
    /// `1 - ε` over successes.
    pub fn realization_probability(&self, realization: &ChannelRealization) -> f64 {
        self.edges
            .iter()
            .zip(&realization.success)
            .map(|(e, &ok)| if ok { 1.0 - e.erasure.value() } else { e.erasure.value() })
            .product()
    }
}

fn reach(start: usize, adj: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Per-edge success bits for one epoch (`true` = packet not erased),
/// indexed by the canonical edge order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelRealization {
    pub success: Vec<bool>,
}

impl ChannelRealization {
    pub fn all_failed(edges: usize) -> Self {
        ChannelRealization { success: vec![false; edges] }
    }

    pub fn all_success(edges: usize) -> Self {
        ChannelRealization { success: vec![true; edges] }
    }

    /// Bit `i` of `mask` is the outcome of edge `i`.
    pub fn from_mask(mask: u64, edges: usize) -> Self {
        ChannelRealization { success: (0..edges).map(|i| mask >> i & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.success.len()
    }

    pub fn is_empty(&self) -> bool {
        self.success.is_empty()
    }
}

/// Edmonds-Karp over exact integer capacities.
struct MaxFlow {
    // (to, capacity, reverse index)
    adj: Vec<Vec<(usize, i128, usize)>>,
}

impl MaxFlow {
    fn new(nodes: usize) -> Self {
        MaxFlow { adj: vec![Vec::new(); nodes] }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: i128) {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push((v, cap, ru));
        self.adj[v].push((u, 0, rv));
    }

    fn run(&mut self, s: usize, t: usize) -> i128 {
        let mut total = 0;
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut found = false;
            while let Some(v) = queue.pop_front() {
                if v == t {
                    found = true;
                    break;
                }
                for (idx, &(w, cap, _)) in self.adj[v].iter().enumerate() {
                    if cap > 0 && w != s && prev[w].is_none() {
                        prev[w] = Some((v, idx));
                        queue.push_back(w);
                    }
                }
            }
            if !found {
                return total;
            }
            let mut bottleneck = i128::MAX;
            let mut v = t;
            while let Some((u, idx)) = prev[v] {
                bottleneck = bottleneck.min(self.adj[u][idx].1);
                v = u;
            }
            let mut v = t;
            while let Some((u, idx)) = prev[v] {
                let rev = self.adj[u][idx].2;
                self.adj[u][idx].1 -= bottleneck;
                self.adj[v][rev].1 += bottleneck;
                v = u;
            }
            total += bottleneck;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn line(erasures: &[&str], buffer: i64) -> NetworkSpec {
        let n = erasures.len() - 1;
        let mut nodes = vec![NodeSpec { id: "s".into(), buffer: None }];
        for i in 1..=n {
            nodes.push(NodeSpec { id: i.to_string(), buffer: Some(buffer) });
        }
        nodes.push(NodeSpec { id: "d".into(), buffer: None });
        let names: Vec<String> =
            std::iter::once("s".to_string()).chain((1..=n).map(|i| i.to_string())).chain(["d".to_string()]).collect();
        let edges = erasures
            .iter()
            .enumerate()
            .map(|(k, e)| EdgeSpec {
                from: names[k].clone(),
                to: names[k + 1].clone(),
                erasure: ErasureSpec::Text(e.to_string()),
            })
            .collect();
        NetworkSpec { nodes, edges, source: Some("s".into()), dest: Some("d".into()) }
    }

    fn names(net: &ErasureNetwork) -> Vec<(String, String)> {
        net.edges().iter().map(|e| (net.node_id(e.tail).to_string(), net.node_id(e.head).to_string())).collect()
    }

    #[test]
    fn parses_decimal_probabilities_exactly() {
        let p: Probability = "0.10".parse().unwrap();
        assert_eq!(p.to_string(), "0.1");
        assert_eq!(p.as_ratio(), Ratio::new(1, 10));
        assert_eq!("1".parse::<Probability>().unwrap(), Probability::ONE);
        assert_eq!("0".parse::<Probability>().unwrap(), Probability::ZERO);
        assert_eq!("1e-3".parse::<Probability>().unwrap().to_string(), "0.001");
        assert_eq!(".5".parse::<Probability>().unwrap().to_string(), "0.5");
        assert_eq!("1.000".parse::<Probability>().unwrap(), Probability::ONE);
        for bad in ["1.3", "-0.1", "", "abc", "0.5.1", "2e0", "."] {
            assert!(bad.parse::<Probability>().is_err(), "{bad}");
        }
    }

    #[test]
    fn two_relay_line_is_valid() {
        let net = ErasureNetwork::validate(&line(&["0.5", "0.5", "0.5"], 1)).unwrap();
        assert_eq!(net.relay_count(), 2);
        assert_eq!(
            names(&net),
            vec![("2".into(), "d".into()), ("1".into(), "2".into()), ("s".into(), "1".into())]
        );
    }

    #[test]
    fn one_relay_order() {
        let net = ErasureNetwork::validate(&line(&["0.5", "0.5"], 1)).unwrap();
        assert_eq!(names(&net), vec![("1".into(), "d".into()), ("s".into(), "1".into())]);
    }

    #[test]
    fn rejects_edge_out_of_destination() {
        let mut spec = line(&["0.5", "0.5", "0.5"], 1);
        spec.edges.push(EdgeSpec { from: "d".into(), to: "1".into(), erasure: ErasureSpec::Number(0.5) });
        assert!(matches!(ErasureNetwork::validate(&spec), Err(NetworkError::MissingSourceOrDest(_))));
    }

    #[test]
    fn rejects_cycles_and_dead_ends() {
        let mut spec = line(&["0.5", "0.5", "0.5"], 1);
        spec.edges.push(EdgeSpec { from: "2".into(), to: "1".into(), erasure: ErasureSpec::Number(0.5) });
        assert!(matches!(ErasureNetwork::validate(&spec), Err(NetworkError::CycleDetected(_))));

        let mut spec = line(&["0.5", "0.5", "0.5"], 1);
        spec.nodes.insert(2, NodeSpec { id: "x".into(), buffer: Some(1) });
        spec.edges.push(EdgeSpec { from: "1".into(), to: "x".into(), erasure: ErasureSpec::Number(0.5) });
        assert_eq!(ErasureNetwork::validate(&spec), Err(NetworkError::DisconnectedRelay("x".into())));
    }

    #[test]
    fn rejects_bad_fields() {
        let spec = line(&["0.5", "1.3"], 1);
        assert!(matches!(ErasureNetwork::validate(&spec), Err(NetworkError::InvalidProbability { .. })));
        let spec = line(&["0.5", "0.5"], 0);
        assert!(matches!(ErasureNetwork::validate(&spec), Err(NetworkError::NonPositiveBuffer { .. })));
        let mut spec = line(&["0.5", "0.5"], 1);
        spec.dest = None;
        assert!(matches!(ErasureNetwork::validate(&spec), Err(NetworkError::MissingSourceOrDest(_))));
    }

    #[test]
    fn relays_renumbered_topologically() {
        let mut spec = line(&["0.5", "0.5", "0.5"], 1);
        spec.nodes.swap(1, 2);
        let net = ErasureNetwork::validate(&spec).unwrap();
        assert_eq!(net.relays()[0].id, "1");
        assert_eq!(net.relays()[1].id, "2");
    }

    #[test]
    fn series_min_cut() {
        let net = ErasureNetwork::validate(&line(&["0.5", "0.5"], 1)).unwrap();
        assert_eq!(net.min_cut_capacity(), Ratio::new(1, 2));
    }

    #[test]
    fn lossless_diamond_min_cut_is_two() {
        let text = r#"{"nodes":[{"id":"s"},{"id":"a","buffer":1},{"id":"b","buffer":1},{"id":"d"}],
            "edges":[{"from":"s","to":"a","erasure":"0"},{"from":"s","to":"b","erasure":"0"},
                     {"from":"a","to":"d","erasure":"0"},{"from":"b","to":"d","erasure":"0"}],
            "source":"s","dest":"d"}"#;
        let net = ErasureNetwork::from_json(text).unwrap();
        assert_eq!(net.min_cut_capacity(), Ratio::from_integer(2));
    }

    #[test]
    fn realization_extremes_and_determinism() {
        let lossless = ErasureNetwork::validate(&line(&["0", "0", "0"], 1)).unwrap();
        let lossy = ErasureNetwork::validate(&line(&["1", "1", "1"], 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(lossless.sample_realization(&mut rng).success.iter().all(|&b| b));
            assert!(lossy.sample_realization(&mut rng).success.iter().all(|&b| !b));
        }
        let half = ErasureNetwork::validate(&line(&["0.5", "0.5", "0.5"], 1)).unwrap();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            (0..50).map(|_| half.sample_realization(&mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            (0..50).map(|_| half.sample_realization(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn realization_frequency_matches_erasure() {
        // Binomial(1e6, 0.5): sd = 5e-4, so 0.002 is a 4-sigma band.
        let net = ErasureNetwork::validate(&line(&["0.5", "0.5"], 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let trials = 1_000_000;
        let mut hits = [0usize; 2];
        let mut r = ChannelRealization::all_failed(2);
        for _ in 0..trials {
            net.sample_realization_into(&mut rng, &mut r);
            for (h, &ok) in hits.iter_mut().zip(&r.success) {
                *h += ok as usize;
            }
        }
        for h in hits {
            assert!((h as f64 / trials as f64 - 0.5).abs() < 0.002);
        }
    }
}
