//! Reference networks and random network generators used by the CLI,
//! the examples in the README and the test suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::netmodel::{EdgeSpec, ErasureNetwork, ErasureSpec, NetworkSpec, NodeSpec};

fn node(id: &str, buffer: Option<i64>) -> NodeSpec {
    NodeSpec { id: id.to_string(), buffer }
}

fn edge(from: &str, to: &str, erasure: &str) -> EdgeSpec {
    EdgeSpec { from: from.into(), to: to.into(), erasure: ErasureSpec::Text(erasure.into()) }
}

/// The four-relay diamond: s→1, 1→2, 1→3, 2→4, 3→4, 4→d.
pub fn network1_spec(buffer: u32) -> NetworkSpec {
    let m = Some(buffer as i64);
    NetworkSpec {
        nodes: vec![node("s", None), node("1", m), node("2", m), node("3", m), node("4", m), node("d", None)],
        edges: vec![
            edge("s", "1", "0.1"),
            edge("1", "2", "0.6"),
            edge("1", "3", "0.5"),
            edge("2", "4", "0.4"),
            edge("3", "4", "0.5"),
            edge("4", "d", "0.1"),
        ],
        source: Some("s".into()),
        dest: Some("d".into()),
    }
}

pub fn network1(buffer: u32) -> ErasureNetwork {
    ErasureNetwork::validate(&network1_spec(buffer)).expect("network 1 is valid")
}

/// Layered stand-in with two source-side and two destination-side relays:
/// s→{1,2}, {1,2}→{3,4} fully connected, {3,4}→{5,6} fully connected,
/// {5,6}→d. Edges touching s or d erase with 0.25, all others with 0.5.
pub fn network2_standin(buffer: u32) -> ErasureNetwork {
    let m = Some(buffer as i64);
    let mut nodes = vec![node("s", None)];
    nodes.extend((1..=6).map(|i| node(&i.to_string(), m)));
    nodes.push(node("d", None));
    let mut edges = vec![edge("s", "1", "0.25"), edge("s", "2", "0.25")];
    for (a, b) in [(1, 3), (1, 4), (2, 3), (2, 4), (3, 5), (3, 6), (4, 5), (4, 6)] {
        edges.push(edge(&a.to_string(), &b.to_string(), "0.5"));
    }
    edges.push(edge("5", "d", "0.25"));
    edges.push(edge("6", "d", "0.25"));
    ErasureNetwork::validate(&NetworkSpec { nodes, edges, source: Some("s".into()), dest: Some("d".into()) })
        .expect("stand-in network is valid")
}

/// Line network `s → 1 → … → n → d` with `erasures.len() - 1` relays.
pub fn line_spec(erasures: &[&str], buffer: u32) -> NetworkSpec {
    let n = erasures.len() - 1;
    let names: Vec<String> =
        std::iter::once("s".to_string()).chain((1..=n).map(|i| i.to_string())).chain(["d".to_string()]).collect();
    let nodes = names
        .iter()
        .enumerate()
        .map(|(k, id)| node(id, if k == 0 || k == n + 1 { None } else { Some(buffer as i64) }))
        .collect();
    let edges = erasures.iter().enumerate().map(|(k, e)| edge(&names[k], &names[k + 1], e)).collect();
    NetworkSpec { nodes, edges, source: Some("s".into()), dest: Some("d".into()) }
}

pub fn line(erasures: &[&str], buffer: u32) -> ErasureNetwork {
    ErasureNetwork::validate(&line_spec(erasures, buffer)).expect("line network is valid")
}

/// Random DAG with `n` relays: relays are ordered, each relay gets at least
/// one edge from an earlier node (or `s`) and one to a later node (or `d`),
/// plus random extra forward edges.
pub fn random_dag<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_buffer: u32,
    erasures: &[&str],
    extra_edge_prob: f64,
) -> ErasureNetwork {
    let names: Vec<String> =
        std::iter::once("s".to_string()).chain((1..=n).map(|i| i.to_string())).chain(["d".to_string()]).collect();
    let mut nodes = vec![node("s", None)];
    nodes.extend((1..=n).map(|i| node(&i.to_string(), Some(rng.gen_range(1..=max_buffer) as i64))));
    nodes.push(node("d", None));
    let mut pairs = std::collections::BTreeSet::new();
    for v in 1..=n {
        pairs.insert((rng.gen_range(0..v), v));
        pairs.insert((v, rng.gen_range(v + 1..=n + 1)));
    }
    for u in 0..=n {
        for v in u + 1..=n + 1 {
            if !(u == 0 && v == n + 1) && rng.gen_bool(extra_edge_prob) {
                pairs.insert((u, v));
            }
        }
    }
    let edges = pairs.into_iter().map(|(u, v)| edge(&names[u], &names[v], erasures.choose(rng).unwrap())).collect();
    ErasureNetwork::validate(&NetworkSpec { nodes, edges, source: Some("s".into()), dest: Some("d".into()) })
        .expect("generated DAG is valid")
}

/// Random layered network: relays sit in layers `H_1..H_L` by hop distance
/// to `d`, every relay link joins adjacent layers, and `s` feeds the top
/// layer (plus optional deeper relays).
pub fn random_layered<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_buffer: u32,
    erasures: &[&str],
) -> ErasureNetwork {
    assert!(n >= 1);
    // Split n relays into layers of random positive sizes.
    let mut layers: Vec<usize> = Vec::new();
    let mut left = n;
    while left > 0 {
        let size = rng.gen_range(1..=left.min(3));
        layers.push(size);
        left -= size;
    }
    // ids: layer L (farthest) first so names follow topological order.
    let mut layer_nodes: Vec<Vec<String>> = vec![Vec::new(); layers.len()];
    let mut next = 1;
    for k in (0..layers.len()).rev() {
        for _ in 0..layers[k] {
            layer_nodes[k].push(next.to_string());
            next += 1;
        }
    }
    let mut nodes = vec![node("s", None)];
    let mut ordered: Vec<&String> = Vec::new();
    for k in (0..layers.len()).rev() {
        ordered.extend(layer_nodes[k].iter());
    }
    nodes.extend(ordered.iter().map(|id| node(id, Some(rng.gen_range(1..=max_buffer) as i64))));
    nodes.push(node("d", None));

    let mut edges = Vec::new();
    let pick = |rng: &mut R| erasures.choose(rng).unwrap().to_string();
    for v in &layer_nodes[0] {
        let e = pick(rng);
        edges.push(edge(v, "d", &e));
    }
    for k in 1..layers.len() {
        let lower = &layer_nodes[k - 1];
        let mut has_in = vec![false; lower.len()];
        for v in &layer_nodes[k] {
            let mut targets: Vec<usize> = (0..lower.len()).filter(|_| rng.gen_bool(0.5)).collect();
            if targets.is_empty() {
                targets.push(rng.gen_range(0..lower.len()));
            }
            for t in targets {
                has_in[t] = true;
                let e = pick(rng);
                edges.push(edge(v, &lower[t], &e));
            }
        }
        // Lower relays without an upstream link get one from s below.
        for (t, ok) in has_in.iter().enumerate() {
            if !ok {
                let e = pick(rng);
                edges.push(edge("s", &lower[t], &e));
            }
        }
    }
    for v in &layer_nodes[layers.len() - 1] {
        let e = pick(rng);
        edges.push(edge("s", v, &e));
    }
    ErasureNetwork::validate(&NetworkSpec { nodes, edges, source: Some("s".into()), dest: Some("d".into()) })
        .expect("generated layered network is valid")
}
