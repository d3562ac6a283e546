//! And-Or graph construction from a sparse explanation, with coalition
//! extraction under a minimum-description-length objective.
//!
//! The graph is a layered DAG: `n` leaves at the bottom, AND coalition nodes
//! over leaves, AND pattern nodes carrying the retained effects `w_S`, and an
//! OR root that sums every triggered pattern. A node triggers exactly when
//! all of its children trigger, so for any mask the root reproduces the
//! subset sum of retained effects — rewrites change descriptions, never
//! semantics.
//!
//! Coalitions are chosen greedily. With vocabulary `M` = leaves plus
//! coalitions, member probability `p(m) ∝ Σ_{patterns S using m} |w_S|`, and
//! pattern probability `p(S) ∝ |w_S|`, the description length is
//!
//! ```text
//! L = L(M) + L_M(g)
//! L(M)   = -κ Σ_m p(m) log2 p(m),          κ = 10 / Σ_S |w_S|
//! L_M(g) = -Σ_S p(S) Σ_{m ∈ Child(S)} log2 p(m)
//! ```
//!
//! Each round scores every pairwise intersection of the patterns'
//! still-individual leaf sets, normalized per covered variable, and accepts
//! the most negative; extraction stops when nothing reduces `L` or no
//! candidate is shared by at least two patterns.

use crate::lattice::{LatticeError, VariableSet};
use crate::sparsify::SparseExplanation;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AogError {
    #[error("cannot build a graph from an empty pattern set")]
    EmptyOmega,
    #[error("coalitions need at least two variables")]
    TrivialCoalition,
    #[error("pattern {0} is not in the graph")]
    UnknownPattern(String),
    #[error("malformed graph file: {0}")]
    Format(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A child of an AND node: either an input variable or an extracted
/// coalition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeRef {
    Leaf(usize),
    Coalition(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternNode {
    expansion: VariableSet,
    weight: f64,
    children: Vec<NodeRef>,
}

impl PatternNode {
    pub fn expansion(&self) -> VariableSet {
        self.expansion
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn children(&self) -> &[NodeRef] {
        &self.children
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AndOrGraph {
    n: usize,
    variables: Vec<String>,
    coalitions: Vec<VariableSet>,
    patterns: Vec<PatternNode>,
}

impl AndOrGraph {
    /// The flat three-layer graph: every pattern described by its leaves.
    pub fn from_explanation(expl: &SparseExplanation, names: Option<&[String]>) -> Result<Self, AogError> {
        if expl.is_empty() {
            return Err(AogError::EmptyOmega);
        }
        let n = expl.n();
        let variables = match names {
            Some(list) => {
                if list.len() != n {
                    return Err(AogError::Format(format!("{} names for {n} variables", list.len())));
                }
                list.to_vec()
            }
            None => (1..=n).map(|i| format!("x{i}")).collect(),
        };
        let patterns = expl
            .patterns()
            .iter()
            .map(|(s, w)| PatternNode {
                expansion: *s,
                weight: *w,
                children: s.members().map(NodeRef::Leaf).collect(),
            })
            .collect();
        Ok(Self { n, variables, coalitions: Vec::new(), patterns })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn coalitions(&self) -> &[VariableSet] {
        &self.coalitions
    }

    pub fn patterns(&self) -> &[PatternNode] {
        &self.patterns
    }

    /// Leaves of a pattern still present as individual children.
    fn individual_leaves(&self, pattern: &PatternNode) -> VariableSet {
        let mut out = VariableSet::empty(self.n);
        for child in &pattern.children {
            if let NodeRef::Leaf(i) = child {
                out = out.union(&VariableSet::singleton(*i, self.n));
            }
        }
        out
    }

    /// Leaf set a child reference stands for.
    fn child_leaves(&self, child: NodeRef) -> VariableSet {
        match child {
            NodeRef::Leaf(i) => VariableSet::singleton(i, self.n),
            NodeRef::Coalition(c) => self.coalitions[c],
        }
    }

    /// Adds `alpha` as a coalition node and rewrites every pattern whose
    /// description still holds all of `alpha`'s leaves individually.
    fn apply_coalition(&mut self, alpha: VariableSet) -> usize {
        let idx = self.coalitions.len();
        self.coalitions.push(alpha);
        for p in &mut self.patterns {
            let individual: u32 = p
                .children
                .iter()
                .filter_map(|c| match c {
                    NodeRef::Leaf(i) => Some(1u32 << i),
                    NodeRef::Coalition(_) => None,
                })
                .sum();
            if alpha.bits() & !individual == 0 {
                p.children.retain(|c| match c {
                    NodeRef::Leaf(i) => !alpha.contains(*i),
                    NodeRef::Coalition(_) => true,
                });
                p.children.push(NodeRef::Coalition(idx));
                p.children.sort();
            }
        }
        idx
    }

    /// Root output on mask `s`: the sum of effects of triggered patterns,
    /// where a node triggers iff all of its children do.
    pub fn evaluate(&self, s: VariableSet) -> f64 {
        let coalition_on: Vec<bool> = self.coalitions.iter().map(|c| c.is_subset_of(&s)).collect();
        self.patterns
            .iter()
            .filter(|p| {
                p.children.iter().all(|c| match c {
                    NodeRef::Leaf(i) => s.contains(*i),
                    NodeRef::Coalition(k) => coalition_on[*k],
                })
            })
            .map(|p| p.weight)
            .sum()
    }
}

/// Per-member usage mass and probabilities over leaves and coalitions.
#[derive(Debug, Clone)]
pub struct NodeVocabulary {
    counts: Vec<f64>,
    total: f64,
    /// Σ over patterns of `|w_S|`.
    z: f64,
}

impl NodeVocabulary {
    pub fn from_graph(g: &AndOrGraph) -> Self {
        let mut counts = vec![0.0; g.n + g.coalitions.len()];
        let mut z = 0.0;
        for p in &g.patterns {
            let mass = p.weight.abs();
            z += mass;
            for child in &p.children {
                let slot = match child {
                    NodeRef::Leaf(i) => *i,
                    NodeRef::Coalition(c) => g.n + c,
                };
                counts[slot] += mass;
            }
        }
        let total: f64 = counts.iter().sum();
        Self { counts, total, z }
    }

    fn prob(&self, slot: usize) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.counts[slot] / self.total
        }
    }

    fn prob_of(&self, g: &AndOrGraph, child: NodeRef) -> f64 {
        match child {
            NodeRef::Leaf(i) => self.prob(i),
            NodeRef::Coalition(c) => self.prob(g.n + c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptionLength {
    pub total: f64,
    pub vocabulary: f64,
    pub patterns: f64,
}

/// Evaluates the MDL objective on the graph as it stands. Zero-count members
/// follow the `0·log 0 = 0` convention; logarithms are base 2.
pub fn description_length(g: &AndOrGraph, vocab: &NodeVocabulary) -> Result<DescriptionLength, AogError> {
    if g.patterns.is_empty() {
        return Err(AogError::EmptyOmega);
    }
    if vocab.z == 0.0 {
        return Ok(DescriptionLength { total: 0.0, vocabulary: 0.0, patterns: 0.0 });
    }
    let kappa = 10.0 / vocab.z;
    let mut vocabulary = 0.0;
    for slot in 0..vocab.counts.len() {
        let p = vocab.prob(slot);
        if p > 0.0 {
            vocabulary -= p * p.log2();
        }
    }
    vocabulary *= kappa;

    let mut patterns = 0.0;
    for p in &g.patterns {
        let mass = p.weight.abs();
        if mass == 0.0 {
            continue;
        }
        let cost: f64 = p.children.iter().map(|&c| vocab.prob_of(g, c).log2()).sum();
        patterns -= (mass / vocab.z) * cost;
    }
    Ok(DescriptionLength { total: vocabulary + patterns, vocabulary, patterns })
}

/// Description-length change per covered variable if `alpha` were added as a
/// coalition and every eligible pattern rewritten:
/// `δ(α) = [L(g ∪ α) - L(g)] / |α|`.
pub fn coalition_gain(g: &AndOrGraph, vocab: &NodeVocabulary, alpha: VariableSet) -> Result<f64, AogError> {
    if alpha.cardinality() < 2 {
        return Err(AogError::TrivialCoalition);
    }
    let before = description_length(g, vocab)?.total;
    let mut hypothetical = g.clone();
    hypothetical.apply_coalition(alpha);
    let after = description_length(&hypothetical, &NodeVocabulary::from_graph(&hypothetical))?.total;
    Ok((after - before) / alpha.cardinality() as f64)
}

/// One accepted coalition extraction.
#[derive(Debug, Clone)]
pub struct BuildStep {
    pub coalition: VariableSet,
    pub gain_per_var: f64,
    pub total_after: f64,
}

/// Builds the And-Or graph for a retained pattern set, greedily extracting
/// shared coalitions while doing so shortens the description.
pub fn build_aog(expl: &SparseExplanation, names: Option<&[String]>) -> Result<(AndOrGraph, Vec<BuildStep>), AogError> {
    let mut graph = AndOrGraph::from_explanation(expl, names)?;
    let mut trace = Vec::new();
    loop {
        let vocab = NodeVocabulary::from_graph(&graph);
        if vocab.z == 0.0 {
            break;
        }

        // Candidate pool: pairwise intersections of the still-individual
        // leaf sets, at least two variables, shared by construction.
        let leaf_sets: Vec<VariableSet> = graph.patterns.iter().map(|p| graph.individual_leaves(p)).collect();
        let mut candidates = BTreeSet::new();
        for (i, a) in leaf_sets.iter().enumerate() {
            for b in leaf_sets.iter().skip(i + 1) {
                let shared = a.intersection(b);
                if shared.cardinality() >= 2 {
                    candidates.insert(shared.bits());
                }
            }
        }
        if candidates.is_empty() {
            break;
        }

        let mut best: Option<(f64, VariableSet)> = None;
        for bits in candidates {
            let alpha = VariableSet::new(bits, graph.n)?;
            let gain = coalition_gain(&graph, &vocab, alpha)?;
            let better = match &best {
                None => true,
                Some((g0, a0)) => {
                    gain < *g0
                        || (gain == *g0
                            && (alpha.cardinality() > a0.cardinality()
                                || (alpha.cardinality() == a0.cardinality() && alpha.bits() < a0.bits())))
                }
            };
            if better {
                best = Some((gain, alpha));
            }
        }
        let (gain, alpha) = best.expect("nonempty candidate pool");
        if gain >= 0.0 {
            break;
        }
        graph.apply_coalition(alpha);
        let total_after = description_length(&graph, &NodeVocabulary::from_graph(&graph))?.total;
        trace.push(BuildStep { coalition: alpha, gain_per_var: gain, total_after });
    }
    Ok((graph, trace))
}

/// The root→pattern→(coalitions)→leaves subgraph grounding one pattern.
#[derive(Debug, Clone)]
pub struct ParseGraph {
    pub pattern: VariableSet,
    pub weight: f64,
    pub children: Vec<NodeRef>,
    /// For each coalition child, its leaf set.
    pub coalition_leaves: Vec<(usize, VariableSet)>,
    pub leaf_frontier: VariableSet,
}

pub fn extract_parse_graph(g: &AndOrGraph, pattern: VariableSet) -> Result<ParseGraph, AogError> {
    let node = g
        .patterns
        .iter()
        .find(|p| p.expansion == pattern)
        .ok_or_else(|| AogError::UnknownPattern(pattern.to_string()))?;
    let mut frontier = VariableSet::empty(g.n);
    let mut coalition_leaves = Vec::new();
    for &child in &node.children {
        frontier = frontier.union(&g.child_leaves(child));
        if let NodeRef::Coalition(c) = child {
            coalition_leaves.push((c, g.coalitions[c]));
        }
    }
    Ok(ParseGraph {
        pattern,
        weight: node.weight,
        children: node.children.clone(),
        coalition_leaves,
        leaf_frontier: frontier,
    })
}

/// DOT export: layered digraph, pattern nodes annotated with their effects
/// and colored by sign (red positive, blue negative).
pub fn to_dot(g: &AndOrGraph, config_hash: Option<&str>) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    out.push_str("digraph aog {\n");
    if let Some(hash) = config_hash {
        let _ = writeln!(out, "  // config_hash={hash}");
    }
    out.push_str("  rankdir=TB;\n");
    out.push_str("  root [label=\"OR +\", shape=doubleoctagon];\n");
    for (k, p) in g.patterns.iter().enumerate() {
        let color = if p.weight >= 0.0 { "lightcoral" } else { "lightblue" };
        let desc: Vec<String> = p
            .children
            .iter()
            .map(|c| match c {
                NodeRef::Leaf(i) => g.variables[*i].clone(),
                NodeRef::Coalition(i) => format!("c{i}"),
            })
            .collect();
        let _ = writeln!(
            out,
            "  p{k} [label=\"{{{}}}\\nw={:.4}\", style=filled, fillcolor={color}];",
            desc.join(","),
            p.weight
        );
    }
    for (k, c) in g.coalitions.iter().enumerate() {
        let members: Vec<&str> = c.members().map(|i| g.variables[i].as_str()).collect();
        let _ = writeln!(out, "  c{k} [label=\"c{k}={{{}}}\", shape=hexagon];", members.join(","));
    }
    for (i, name) in g.variables.iter().enumerate() {
        let _ = writeln!(out, "  x{i} [label=\"{name}\", shape=box];");
    }
    for (k, p) in g.patterns.iter().enumerate() {
        let _ = writeln!(out, "  root -> p{k};");
        for child in &p.children {
            match child {
                NodeRef::Leaf(i) => {
                    let _ = writeln!(out, "  p{k} -> x{i};");
                }
                NodeRef::Coalition(c) => {
                    let _ = writeln!(out, "  p{k} -> c{c};");
                }
            }
        }
    }
    for (k, c) in g.coalitions.iter().enumerate() {
        for i in c.members() {
            let _ = writeln!(out, "  c{k} -> x{i};");
        }
    }
    // Rank layers bottom-up: leaves, coalitions (when present), patterns, root.
    let leaves: Vec<String> = (0..g.n).map(|i| format!("x{i}")).collect();
    let _ = writeln!(out, "  {{rank=sink; {};}}", leaves.join("; "));
    if !g.coalitions.is_empty() {
        let cs: Vec<String> = (0..g.coalitions.len()).map(|k| format!("c{k}")).collect();
        let _ = writeln!(out, "  {{rank=same; {};}}", cs.join("; "));
    }
    let ps: Vec<String> = (0..g.patterns.len()).map(|k| format!("p{k}")).collect();
    let _ = writeln!(out, "  {{rank=same; {};}}", ps.join("; "));
    out.push_str("  {rank=source; root;}\n");
    out.push_str("}\n");
    out
}

/// JSON export, lossless and byte-stable under re-export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AogFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub n: usize,
    pub variables: Vec<String>,
    pub coalitions: Vec<CoalitionEntry>,
    pub patterns: Vec<PatternFileEntry>,
    pub root: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoalitionEntry {
    pub mask: u32,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternFileEntry {
    pub mask: u32,
    pub w: f64,
    pub children: Vec<ChildEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChildEntry {
    Leaf(usize),
    Coalition(usize),
}

impl AogFile {
    pub fn from_graph(g: &AndOrGraph, config_hash: Option<String>) -> Self {
        AogFile {
            config_hash,
            n: g.n,
            variables: g.variables.clone(),
            coalitions: g
                .coalitions
                .iter()
                .map(|c| CoalitionEntry {
                    mask: c.bits(),
                    members: c.members().map(|i| g.variables[i].clone()).collect(),
                })
                .collect(),
            patterns: g
                .patterns
                .iter()
                .map(|p| PatternFileEntry {
                    mask: p.expansion.bits(),
                    w: p.weight,
                    children: p
                        .children
                        .iter()
                        .map(|c| match c {
                            NodeRef::Leaf(i) => ChildEntry::Leaf(*i),
                            NodeRef::Coalition(i) => ChildEntry::Coalition(*i),
                        })
                        .collect(),
                })
                .collect(),
            root: "or_sum".into(),
        }
    }

    pub fn to_graph(&self) -> Result<AndOrGraph, AogError> {
        if self.variables.len() != self.n {
            return Err(AogError::Format("variable list length mismatch".into()));
        }
        if self.root != "or_sum" {
            return Err(AogError::Format(format!("unknown root kind '{}'", self.root)));
        }
        let coalitions: Vec<VariableSet> = self
            .coalitions
            .iter()
            .map(|c| {
                let s = VariableSet::new(c.mask, self.n)?;
                if s.cardinality() < 2 {
                    return Err(AogError::TrivialCoalition);
                }
                Ok(s)
            })
            .collect::<Result<_, AogError>>()?;
        let mut patterns = Vec::with_capacity(self.patterns.len());
        for p in &self.patterns {
            let expansion = VariableSet::new(p.mask, self.n)?;
            if !p.w.is_finite() {
                return Err(AogError::Format("non-finite pattern weight".into()));
            }
            let mut covered = VariableSet::empty(self.n);
            let mut children = Vec::with_capacity(p.children.len());
            for child in &p.children {
                let (node, leaves) = match child {
                    ChildEntry::Leaf(i) => {
                        if *i >= self.n {
                            return Err(AogError::Format(format!("leaf {i} out of range")));
                        }
                        (NodeRef::Leaf(*i), VariableSet::singleton(*i, self.n))
                    }
                    ChildEntry::Coalition(i) => {
                        let leaves = *coalitions
                            .get(*i)
                            .ok_or_else(|| AogError::Format(format!("coalition {i} out of range")))?;
                        (NodeRef::Coalition(*i), leaves)
                    }
                };
                if covered.intersects(&leaves) {
                    return Err(AogError::Format(format!("pattern {:#x} children overlap", p.mask)));
                }
                covered = covered.union(&leaves);
                children.push(node);
            }
            if covered != expansion {
                return Err(AogError::Format(format!(
                    "pattern {:#x} children expand to {:#x}",
                    p.mask,
                    covered.bits()
                )));
            }
            patterns.push(PatternNode { expansion, weight: p.w, children });
        }
        if patterns.is_empty() {
            return Err(AogError::EmptyOmega);
        }
        Ok(AndOrGraph { n: self.n, variables: self.variables.clone(), coalitions, patterns })
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("graph serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, AogError> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// Build trace CSV: `step,coalition_mask,gain_per_var,total_len`.
pub fn write_build_trace(mut out: impl Write, trace: &[BuildStep]) -> std::io::Result<()> {
    writeln!(out, "step,coalition_mask,gain_per_var,total_len")?;
    for (i, row) in trace.iter().enumerate() {
        writeln!(out, "{},{},{},{}", i + 1, row.coalition.bits(), row.gain_per_var, row.total_after)?;
    }
    Ok(())
}
