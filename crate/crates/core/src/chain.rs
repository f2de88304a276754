//! Embedding of a finite-horizon nonnegative discrete-time supermartingale
//! in a geometric Brownian motion.
//!
//! The chain is given as a rooted tree: depth-k nodes carry the possible
//! values of `X_k`, and each non-leaf node carries the distribution of its
//! children. A replica first embeds the root law in the GBM, then, step by
//! step, embeds the conditional one-step ratio law of the reached node in
//! the fresh relative GBM `Y_{t+tau_k} / Y_{tau_k}` with an independent
//! uniform draw, so the realized value sequence has exactly the joint law of
//! the chain. A node of value zero is absorbing: its ratio law is the point
//! mass at 1 (ratio of zeros taken as 1), and from the first absorption
//! onward the stopping times are infinite and the values zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{GCalculus, TargetDistribution};
use crate::embed::{fmt_ext, ExitLaw};
use crate::error::{Error, Result};
use crate::paths::{first_exit_with_qv, ExitSide, PathConfig};
use crate::rng::Stream;

const PROB_SUM_TOL: f64 = 1e-12;
const ROOT_MEAN_TOL: f64 = 1e-9;
const SUPERMARTINGALE_TOL: f64 = 1e-12;
/// Relative tolerance for matching a realized pathwise ratio to a tree atom.
const MATCH_RTOL: f64 = 1e-9;

/// Raw tree as it appears in chain spec files:
/// `{"root": [{"prob": p, "node": {"value": x, "children": [...]}}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainTree {
    pub root: Vec<ChainEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainEdge {
    pub prob: f64,
    pub node: ChainNode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainNode {
    pub value: f64,
    #[serde(default)]
    pub children: Vec<ChainEdge>,
}

impl ChainTree {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidSpec(format!("chain file: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialization cannot fail")
    }

    /// Apply `f` to every node value, keeping the shape.
    pub fn map_values(&self, f: &impl Fn(f64) -> f64) -> ChainTree {
        fn map_node(n: &ChainNode, f: &impl Fn(f64) -> f64) -> ChainNode {
            ChainNode {
                value: f(n.value),
                children: n
                    .children
                    .iter()
                    .map(|e| ChainEdge { prob: e.prob, node: map_node(&e.node, f) })
                    .collect(),
            }
        }
        ChainTree {
            root: self
                .root
                .iter()
                .map(|e| ChainEdge { prob: e.prob, node: map_node(&e.node, f) })
                .collect(),
        }
    }

    pub fn min_value(&self) -> f64 {
        fn min_node(n: &ChainNode) -> f64 {
            n.children.iter().map(|e| min_node(&e.node)).fold(n.value, f64::min)
        }
        self.root.iter().map(|e| min_node(&e.node)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
struct Node {
    value: f64,
    /// `(prob, child index)`, children sorted by value, sibling values
    /// strictly distinct after canonicalization.
    children: Vec<(f64, usize)>,
    depth: usize,
}

/// A validated, canonicalized chain: values nonnegative, root mean at most
/// one, the supermartingale inequality at every non-leaf node, zero values
/// absorbing, and uniform leaf depth. Sibling nodes with equal values are
/// merged (their child distributions mixed with the matching weights), which
/// realizes the conditional law given the observed value history.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    nodes: Vec<Node>,
    root: Vec<(f64, usize)>,
    depth: usize,
}

impl ChainSpec {
    pub fn new(tree: &ChainTree) -> Result<Self> {
        if tree.root.is_empty() {
            return Err(Error::InvalidSpec("root: empty distribution".into()));
        }
        let merged_root = merge_edges(&tree.root);
        check_probs("root", &merged_root)?;
        let mut nodes = Vec::new();
        let mut root = Vec::new();
        for (p, node) in &merged_root {
            let idx = build(node, 0, &mut nodes)?;
            root.push((*p, idx));
        }
        let mut depths: Vec<usize> = Vec::new();
        collect_leaf_depths(&nodes, root.iter().map(|&(_, i)| i), &mut depths);
        depths.sort_unstable();
        depths.dedup();
        if depths.len() != 1 {
            return Err(Error::InvalidSpec(format!(
                "tree: leaves at mixed depths {depths:?}; all paths must have the horizon length"
            )));
        }
        let spec = ChainSpec { nodes, root, depth: depths[0] };
        let root_mean: f64 = spec.root.iter().map(|&(p, i)| p * spec.nodes[i].value).sum();
        if root_mean > 1.0 + ROOT_MEAN_TOL {
            return Err(Error::InvalidSpec(format!(
                "root: mean {root_mean} exceeds 1; the chain is not embeddable"
            )));
        }
        Ok(spec)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_value(&self, node: usize) -> f64 {
        self.nodes[node].value
    }

    pub fn node_children(&self, node: usize) -> &[(f64, usize)] {
        &self.nodes[node].children
    }

    pub fn root_edges(&self) -> &[(f64, usize)] {
        &self.root
    }

    /// Root law of `X_0` as a target distribution, with the node index
    /// aligned to each atom.
    pub fn root_law(&self) -> Result<(TargetDistribution, Vec<usize>)> {
        atoms_to_target(self.root.iter().map(|&(p, i)| (self.nodes[i].value, p, i)))
    }

    /// Conditional one-step ratio law at `node`: atoms `(child/node, prob)`
    /// for positive nodes, the point mass at 1 for a zero node (ratio of
    /// zeros taken as 1). Errors at a leaf.
    pub fn ratio_distribution(&self, node: usize) -> Result<TargetDistribution> {
        Ok(self.ratio_law(node)?.0)
    }

    /// Ratio law plus the child node aligned with each atom. For a zero
    /// node all children are zero-valued and already merged into one.
    pub fn ratio_law(&self, node: usize) -> Result<(TargetDistribution, Vec<usize>)> {
        let n = &self.nodes[node];
        if n.children.is_empty() {
            return Err(Error::LeafHasNoRatio { node });
        }
        if n.value == 0.0 {
            let child = n.children[0].1;
            let dist = TargetDistribution::point_mass(1.0)?;
            return Ok((dist, vec![child]));
        }
        atoms_to_target(n.children.iter().map(|&(p, c)| (self.nodes[c].value / n.value, p, c)))
    }

    /// Marginal law of `X_k` as `(value, prob)` atoms (equal values merged).
    pub fn marginal(&self, k: usize) -> Vec<(f64, f64)> {
        let mut level: Vec<(f64, usize)> = self.root.clone();
        for _ in 0..k {
            let mut next = Vec::new();
            for &(p, i) in &level {
                for &(q, c) in &self.nodes[i].children {
                    next.push((p * q, c));
                }
            }
            level = next;
        }
        let mut atoms: Vec<(f64, f64)> =
            level.into_iter().map(|(p, i)| (self.nodes[i].value, p)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (v, p) in atoms {
            if let Some(last) = merged.last_mut() {
                if last.0 == v {
                    last.1 += p;
                    continue;
                }
            }
            merged.push((v, p));
        }
        merged
    }

    /// All root-to-leaf value paths with their probabilities.
    pub fn path_probabilities(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out = Vec::new();
        for &(p, i) in &self.root {
            self.walk_paths(i, p, &mut vec![], &mut out);
        }
        out
    }

    fn walk_paths(
        &self,
        node: usize,
        p: f64,
        prefix: &mut Vec<f64>,
        out: &mut Vec<(Vec<f64>, f64)>,
    ) {
        prefix.push(self.nodes[node].value);
        if self.nodes[node].children.is_empty() {
            out.push((prefix.clone(), p));
        } else {
            for &(q, c) in &self.nodes[node].children {
                self.walk_paths(c, p * q, prefix, out);
            }
        }
        prefix.pop();
    }

    /// Subsample a chain living on the dyadic grid of step `2^-m` to the
    /// coarser grid of step `2^-n`, composing transition probabilities along
    /// skipped levels. Depths past the last multiple of the stride are
    /// dropped.
    pub fn dyadic_coarsen(&self, m: u32, n: u32) -> Result<ChainSpec> {
        if n > m {
            return Err(Error::CoarsenLevel { m, n });
        }
        let stride = 1usize << (m - n);
        if stride == 1 {
            return Ok(self.clone());
        }
        let new_depth = self.depth / stride;
        let tree = ChainTree {
            root: self
                .root
                .iter()
                .map(|&(p, i)| ChainEdge {
                    prob: p,
                    node: self.coarsen_node(i, stride, new_depth),
                })
                .collect(),
        };
        ChainSpec::new(&tree)
    }

    fn coarsen_node(&self, node: usize, stride: usize, levels_left: usize) -> ChainNode {
        let mut children = Vec::new();
        if levels_left > 0 {
            // Descend `stride` levels multiplying probabilities.
            let mut frontier: Vec<(f64, usize)> = vec![(1.0, node)];
            for _ in 0..stride {
                let mut next = Vec::new();
                for &(p, i) in &frontier {
                    for &(q, c) in &self.nodes[i].children {
                        next.push((p * q, c));
                    }
                }
                frontier = next;
            }
            children = frontier
                .into_iter()
                .map(|(p, c)| ChainEdge {
                    prob: p,
                    node: self.coarsen_node(c, stride, levels_left - 1),
                })
                .collect();
        }
        ChainNode { value: self.nodes[node].value, children }
    }
}

fn atoms_to_target<I>(entries: I) -> Result<(TargetDistribution, Vec<usize>)>
where
    I: Iterator<Item = (f64, f64, usize)>,
{
    let mut rows: Vec<(f64, f64, usize)> = entries.collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let atoms: Vec<(f64, f64)> = rows.iter().map(|&(v, p, _)| (v, p)).collect();
    let ids: Vec<usize> = rows.iter().map(|&(_, _, i)| i).collect();
    let dist = TargetDistribution::from_atoms(&atoms)?;
    debug_assert_eq!(dist.atoms().map(|a| a.len()), Some(ids.len()));
    Ok((dist, ids))
}

/// Merge sibling edges whose nodes carry equal values; child distributions
/// are mixed with the matching conditional weights.
fn merge_edges(edges: &[ChainEdge]) -> Vec<(f64, ChainNode)> {
    let mut groups: Vec<(f64, Vec<&ChainEdge>)> = Vec::new();
    for e in edges {
        match groups.iter_mut().find(|(v, _)| *v == e.node.value) {
            Some((_, list)) => list.push(e),
            None => groups.push((e.node.value, vec![e])),
        }
    }
    groups
        .into_iter()
        .map(|(value, list)| {
            let total: f64 = list.iter().map(|e| e.prob).sum();
            let mut children = Vec::new();
            for e in &list {
                let w = e.prob / total;
                for c in &e.node.children {
                    children.push(ChainEdge { prob: w * c.prob, node: c.node.clone() });
                }
            }
            (total, ChainNode { value, children })
        })
        .collect()
}

fn check_probs(where_: &str, edges: &[(f64, ChainNode)]) -> Result<()> {
    for (i, (p, _)) in edges.iter().enumerate() {
        if !(*p > 0.0 && *p <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "{where_}[{i}].prob: must lie in (0, 1], got {p}"
            )));
        }
    }
    let sum: f64 = edges.iter().map(|(p, _)| p).sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidSpec(format!(
            "{where_}: probabilities sum to {sum}, expected 1 within {PROB_SUM_TOL:e}"
        )));
    }
    Ok(())
}

fn build(raw: &ChainNode, depth: usize, nodes: &mut Vec<Node>) -> Result<usize> {
    if !(raw.value >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "node at depth {depth}: value must be nonnegative, got {}",
            raw.value
        )));
    }
    let mut children = Vec::new();
    if !raw.children.is_empty() {
        let merged = merge_edges(&raw.children);
        check_probs(&format!("node(depth {depth}).children"), &merged)?;
        let step_mean: f64 = merged.iter().map(|(p, c)| p * c.value).sum();
        if step_mean > raw.value + SUPERMARTINGALE_TOL {
            return Err(Error::InvalidSpec(format!(
                "node at depth {depth}: child mean {step_mean} exceeds node value {}; \
                 the supermartingale inequality fails",
                raw.value
            )));
        }
        if raw.value == 0.0 && merged.iter().any(|(_, c)| c.value != 0.0) {
            return Err(Error::InvalidSpec(format!(
                "node at depth {depth}: a zero-valued node must have all children zero"
            )));
        }
        for (p, c) in &merged {
            let idx = build(c, depth + 1, nodes)?;
            children.push((*p, idx));
        }
        children.sort_by(|a, b| nodes[a.1].value.total_cmp(&nodes[b.1].value));
    }
    nodes.push(Node { value: raw.value, children, depth });
    Ok(nodes.len() - 1)
}

fn collect_leaf_depths(nodes: &[Node], roots: impl Iterator<Item = usize>, out: &mut Vec<usize>) {
    let mut stack: Vec<usize> = roots.collect();
    while let Some(i) = stack.pop() {
        if nodes[i].children.is_empty() {
            out.push(nodes[i].depth);
        } else {
            stack.extend(nodes[i].children.iter().map(|&(_, c)| c));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMode {
    Analytic,
    Pathwise,
}

/// One chain replica: realized values `y_0..y_K`, the matched node path,
/// and (pathwise mode) the nondecreasing stopping times, infinite from the
/// first absorption on.
#[derive(Debug, Clone)]
pub struct ChainEmbeddingSample {
    pub values: Vec<f64>,
    pub node_path: Vec<usize>,
    pub taus: Option<Vec<f64>>,
    pub censored: bool,
}

/// Embed the chain `n` times. In analytic mode each step draws the exit
/// value from the two-point exit law of the step's barrier pair; in
/// pathwise mode each step simulates the fresh relative GBM to its first
/// barrier crossing and the stopping times accumulate.
pub fn embed_chain(
    spec: &ChainSpec,
    seed: u64,
    n: usize,
    mode: ChainMode,
    cfg: &PathConfig,
) -> Result<Vec<ChainEmbeddingSample>> {
    let tables = EmbedTables::new(spec)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed, i);
            embed_one(spec, &tables, &mut rng, mode, cfg)
        })
        .collect()
}

/// Per-node barrier calculi with atom-to-node alignment, built once.
pub(crate) struct EmbedTables {
    pub root_calc: GCalculus,
    pub root_ids: Vec<usize>,
    /// Indexed by node id; `None` at leaves.
    pub step: Vec<Option<(GCalculus, Vec<usize>)>>,
}

impl EmbedTables {
    pub(crate) fn new(spec: &ChainSpec) -> Result<Self> {
        let (root_dist, root_ids) = spec.root_law()?;
        let root_calc = GCalculus::new(&root_dist)?;
        let mut step = Vec::with_capacity(spec.nodes.len());
        for i in 0..spec.nodes.len() {
            if spec.nodes[i].children.is_empty() {
                step.push(None);
            } else {
                let (dist, ids) = spec.ratio_law(i)?;
                step.push(Some((GCalculus::new(&dist)?, ids)));
            }
        }
        Ok(EmbedTables { root_calc, root_ids, step })
    }
}

/// Outcome of one embedding step: matched atom index and the (relative)
/// stopping time, infinite on absorption.
struct StepOutcome {
    atom: usize,
    tau: f64,
    censored: bool,
}

fn embed_step(
    rng: &mut Stream,
    calc: &GCalculus,
    scale: f64,
    mode: ChainMode,
    cfg: &PathConfig,
) -> Result<StepOutcome> {
    let r = rng.uniform();
    let b = calc.barrier_pair(r)?;
    let atoms = calc.dist().atoms().expect("step laws are discrete");
    match mode {
        ChainMode::Analytic => {
            let y = ExitLaw::of(&b).sample(rng.uniform());
            let atom = match_atom(&atoms, y)?;
            let tau = if y == 0.0 { f64::INFINITY } else { 0.0 };
            Ok(StepOutcome { atom, tau, censored: false })
        }
        ChainMode::Pathwise => {
            // The absorption threshold applies to the absolute path level;
            // this segment runs relative to `scale`.
            let mut local = *cfg;
            local.absorption_threshold = (cfg.absorption_threshold / scale).min(0.5);
            let (ev, _) = first_exit_with_qv(rng, 1.0, b.alpha, b.beta, &local);
            if ev.side == ExitSide::Censored {
                // Attribute to the nearest atom so the replica stays
                // well-formed; it is excluded from law checks.
                let atom = nearest_atom(&atoms, ev.value);
                return Ok(StepOutcome { atom, tau: ev.time, censored: true });
            }
            let atom = match_atom(&atoms, ev.value)?;
            Ok(StepOutcome { atom, tau: ev.time, censored: false })
        }
    }
}

fn nearest_atom(atoms: &[(f64, f64)], y: f64) -> usize {
    let mut best = 0usize;
    let mut best_err = f64::INFINITY;
    for (i, &(v, _)) in atoms.iter().enumerate() {
        let err = (v - y).abs();
        if err < best_err {
            best_err = err;
            best = i;
        }
    }
    best
}

fn match_atom(atoms: &[(f64, f64)], y: f64) -> Result<usize> {
    let best = nearest_atom(atoms, y);
    let err = (atoms[best].0 - y).abs();
    let scale = atoms[best].0.abs().max(1.0);
    if err > MATCH_RTOL * scale {
        return Err(Error::InternalConsistency(format!(
            "realized value {y} matches no step atom (closest {} off by {err:e})",
            atoms[best].0
        )));
    }
    Ok(best)
}

fn embed_one(
    spec: &ChainSpec,
    tables: &EmbedTables,
    rng: &mut Stream,
    mode: ChainMode,
    cfg: &PathConfig,
) -> Result<ChainEmbeddingSample> {
    let mut values = Vec::with_capacity(spec.depth + 1);
    let mut node_path = Vec::with_capacity(spec.depth + 1);
    let mut taus = if mode == ChainMode::Pathwise { Some(Vec::new()) } else { None };
    let mut censored = false;

    // Root step: absolute GBM from 1.
    let out = embed_step(rng, &tables.root_calc, 1.0, mode, cfg)?;
    censored |= out.censored;
    let node = tables.root_ids[out.atom];
    values.push(spec.node_value(node));
    node_path.push(node);
    if let Some(t) = taus.as_mut() {
        t.push(out.tau);
    }
    let mut absorbed = values[0] == 0.0;

    for _ in 0..spec.depth {
        let current = *node_path.last().unwrap();
        let y = *values.last().unwrap();
        let (calc, ids) =
            tables.step[current].as_ref().expect("uniform depth guarantees non-leaf here");
        if absorbed {
            // Zero values are absorbing; the merged tree has a unique zero
            // child continuing the path.
            let child = ids[0];
            values.push(0.0);
            node_path.push(child);
            if let Some(t) = taus.as_mut() {
                t.push(f64::INFINITY);
            }
            continue;
        }
        let out = embed_step(rng, calc, y, mode, cfg)?;
        censored |= out.censored;
        let child = ids[out.atom];
        values.push(spec.node_value(child));
        node_path.push(child);
        if let Some(t) = taus.as_mut() {
            let prev = *t.last().unwrap();
            t.push(prev + out.tau);
        }
        absorbed = spec.node_value(child) == 0.0;
    }

    Ok(ChainEmbeddingSample { values, node_path, taus, censored })
}

/// Comparison of empirical path frequencies against the tree's path
/// probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct JointLawReport {
    pub paths: Vec<PathFrequency>,
    pub max_abs_deviation: f64,
    pub n: usize,
    pub censored: usize,
    pub pass: bool,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathFrequency {
    pub values: Vec<f64>,
    pub expected: f64,
    pub observed: f64,
}

/// Tally realized value paths and compare with the exact path law.
/// Unmatched realized paths contribute their whole frequency to the
/// deviation. Needs at least 1000 samples.
pub fn verify_joint_law(
    samples: &[ChainEmbeddingSample],
    spec: &ChainSpec,
    threshold: f64,
) -> Result<JointLawReport> {
    let used: Vec<&ChainEmbeddingSample> = samples.iter().filter(|s| !s.censored).collect();
    if used.len() < 1000 {
        return Err(Error::TooFewSamples { needed: 1000, got: used.len() });
    }
    let expected = spec.path_probabilities();
    let key = |vals: &[f64]| -> Vec<u64> { vals.iter().map(|v| v.to_bits()).collect() };
    let mut counts: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
    for s in &used {
        *counts.entry(key(&s.values)).or_insert(0) += 1;
    }
    let n = used.len();
    let mut rows = Vec::with_capacity(expected.len());
    let mut max_dev: f64 = 0.0;
    for (vals, p) in &expected {
        let obs = counts.remove(&key(vals)).unwrap_or(0) as f64 / n as f64;
        max_dev = max_dev.max((obs - p).abs());
        rows.push(PathFrequency { values: vals.clone(), expected: *p, observed: obs });
    }
    for (_, leftover) in counts {
        max_dev = max_dev.max(leftover as f64 / n as f64);
    }
    Ok(JointLawReport {
        paths: rows,
        max_abs_deviation: max_dev,
        n,
        censored: samples.len() - n,
        pass: max_dev <= threshold,
        threshold,
    })
}

/// Render chain samples as CSV with header `replica,k,y,tau`; `tau` is
/// empty in analytic mode and `inf` after absorption.
pub fn render_csv(samples: &[ChainEmbeddingSample]) -> String {
    let mut out = String::from("replica,k,y,tau\n");
    for (rep, s) in samples.iter().enumerate() {
        for (k, &y) in s.values.iter().enumerate() {
            let tau = match &s.taus {
                None => String::new(),
                Some(t) => fmt_ext(t[k]),
            };
            out.push_str(&format!("{rep},{k},{},{}\n", fmt_ext(y), tau));
        }
    }
    out
}
