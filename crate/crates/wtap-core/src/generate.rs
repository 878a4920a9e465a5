//! Deterministic instance generators: tree shapes, link styles and cost
//! models, all driven by a seeded ChaCha8 stream so the same configuration
//! always yields the same instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{LinkClass, NodeId, WtapInstance};
use crate::rational::{rat, ratio, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeShape {
    /// Uniform random labelled tree (decoded from a random Prüfer sequence).
    Random,
    /// Path 0-1-...-(n-1).
    Path,
    /// Star with center 0.
    Star,
    /// Spine with every other node hanging off it as a leg.
    Caterpillar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkStyle {
    /// Arbitrary distinct endpoint pairs.
    Random,
    /// Ancestor links and links whose paths top out at the root only.
    UpCross,
    /// Both endpoints are tree leaves.
    LeafToLeaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModel {
    /// Every cost is 1.
    Unit,
    /// Integer costs uniform in 1..=max.
    UniformInt { max: i64 },
    /// Rationals p/q with q uniform in 1..=denom and p/q in [1, max].
    UniformRatio { max: i64, denom: i64 },
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub nodes: u32,
    pub shape: TreeShape,
    /// Number of style-drawn links (on top of the feasibility links).
    pub links: usize,
    pub style: LinkStyle,
    pub costs: CostModel,
    pub root: Option<u32>,
    /// Add one parallel link per tree edge so every edge is coverable.
    pub ensure_feasible: bool,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(nodes: u32, seed: u64) -> Self {
        Self {
            nodes,
            shape: TreeShape::Random,
            links: 2 * nodes as usize,
            style: LinkStyle::Random,
            costs: CostModel::Unit,
            root: None,
            ensure_feasible: true,
            seed,
        }
    }
}

fn tree_edges(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let n = cfg.nodes;
    match cfg.shape {
        _ if n <= 1 => Vec::new(),
        _ if n == 2 => vec![(0, 1)],
        TreeShape::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
        TreeShape::Star => (1..n).map(|i| (0, i)).collect(),
        TreeShape::Caterpillar => {
            // Nodes 0..spine form the spine; the rest attach round-robin.
            let spine = n.div_ceil(2);
            let mut edges: Vec<(u32, u32)> = (0..spine - 1).map(|i| (i, i + 1)).collect();
            for (k, leg) in (spine..n).enumerate() {
                edges.push((k as u32 % spine, leg));
            }
            edges
        }
        TreeShape::Random => prufer_decode(n, rng),
    }
}

/// Decode a uniform random Prüfer sequence into tree edges.
fn prufer_decode(n: u32, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let seq: Vec<u32> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1u32; n as usize];
    for &s in &seq {
        degree[s as usize] += 1;
    }
    let mut leaves: std::collections::BTreeSet<u32> = (0..n)
        .filter(|&i| degree[i as usize] == 1)
        .collect();
    let mut edges = Vec::with_capacity(n as usize - 1);
    for &s in &seq {
        let leaf = *leaves.iter().next().expect("a tree always has a leaf");
        leaves.remove(&leaf);
        edges.push((leaf, s));
        degree[s as usize] -= 1;
        if degree[s as usize] == 1 {
            leaves.insert(s);
        }
    }
    let mut rest = leaves.into_iter();
    let (a, b) = (rest.next().unwrap(), rest.next().unwrap());
    edges.push((a, b));
    edges
}

fn draw_cost(model: &CostModel, rng: &mut ChaCha8Rng) -> Rat {
    match model {
        CostModel::Unit => rat(1),
        CostModel::UniformInt { max } => rat(rng.gen_range(1..=(*max).max(1))),
        CostModel::UniformRatio { max, denom } => {
            let q = rng.gen_range(1..=(*denom).max(1));
            let p = rng.gen_range(q..=q * (*max).max(1));
            ratio(p, q)
        }
    }
}

/// Generate an instance. Styles that need structure (leaves, a root with at
/// least two branches) fall back to plain random pairs when the drawn tree
/// cannot support them, so generation never stalls.
pub fn generate(cfg: &GeneratorConfig) -> Result<WtapInstance> {
    if cfg.nodes == 0 {
        return Err(Error::InvalidArgument("node count must be positive".into()));
    }
    if cfg.nodes == 1 && cfg.links > 0 {
        return Err(Error::InvalidArgument(
            "links need at least two nodes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let edges = tree_edges(cfg, &mut rng);
    let root = cfg.root.unwrap_or(0);
    // Rooted skeleton used to draw style-conforming endpoints.
    let skeleton = WtapInstance::new(edges.clone(), Vec::new(), Some(root))?;
    let leaves: Vec<u32> = skeleton
        .nodes()
        .iter()
        .filter(|n| skeleton.tree_degree(**n) <= 1)
        .map(|n| n.0)
        .collect();
    let n = cfg.nodes;
    let random_pair = |rng: &mut ChaCha8Rng| -> (u32, u32) {
        let u = rng.gen_range(0..n);
        let mut v = rng.gen_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        (u, v)
    };
    let mut links: Vec<(u32, u32, Rat)> = Vec::new();
    for _ in 0..cfg.links {
        let (u, v) = match cfg.style {
            LinkStyle::Random => random_pair(&mut rng),
            LinkStyle::LeafToLeaf => {
                if leaves.len() < 2 {
                    random_pair(&mut rng)
                } else {
                    let i = rng.gen_range(0..leaves.len());
                    let mut j = rng.gen_range(0..leaves.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    (leaves[i], leaves[j])
                }
            }
            LinkStyle::UpCross => {
                let mut drawn = None;
                for _ in 0..64 {
                    let (u, v) = random_pair(&mut rng);
                    let top = skeleton.lca(NodeId(u), NodeId(v))?;
                    let class = if top == NodeId(u) || top == NodeId(v) {
                        LinkClass::Up
                    } else if top == NodeId(root) {
                        LinkClass::Cross
                    } else {
                        LinkClass::InNotUp
                    };
                    if class != LinkClass::InNotUp {
                        drawn = Some((u, v));
                        break;
                    }
                }
                // An in-link that is not an up-link can always be replaced by
                // an up-link to the root, which every tree supports.
                drawn.unwrap_or_else(|| {
                    let v = rng.gen_range(1..n);
                    (root, if v == root { (v + 1) % n } else { v })
                })
            }
        };
        links.push((u, v, draw_cost(&cfg.costs, &mut rng)));
    }
    if cfg.ensure_feasible {
        for &(u, v) in &edges {
            links.push((u, v, draw_cost(&cfg.costs, &mut rng)));
        }
    }
    WtapInstance::new(edges, links, Some(root))
}
