//! M-ary coding through chains of adaptive binary decisions.
//!
//! A [`DecisionTree`] decomposes an alphabet into yes/no questions walked
//! root to leaf, coding one bit per node with that node's own two-counter
//! estimate. Balanced trees keep every walk near log2 M decisions; trees
//! built from occurrence counts move frequent symbols close to the root,
//! which shortens the average walk without losing compression, since the
//! conditional estimates along a path multiply out to the symbol's
//! overall estimate.

use crate::coder::{CoderError, Decoder, Encoder};
use crate::model::{BinaryFrequency, Child, ModelError, StaticDistribution, TreeShape};

/// Where a decision branch leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Node(usize),
    Leaf(usize),
}

#[derive(Debug, Clone)]
struct DecisionNode {
    left: Branch,
    right: Branch,
    /// Split key for trees whose in-order leaves are sorted, `None` for
    /// trees that order leaves by weight instead.
    key: Option<usize>,
    freq: BinaryFrequency,
}

/// A binary decision tree over symbols `0..M` with per-node adaptive
/// estimates. A zero bit takes the left branch.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<DecisionNode>,
    /// Root-to-leaf walk per symbol as (node index, take right) pairs.
    paths: Vec<Vec<(usize, bool)>>,
}

impl DecisionTree {
    /// Balanced tree splitting every symbol span at its midpoint.
    pub fn bisection(m: usize) -> Result<Self, ModelError> {
        Ok(Self::from_shape(&TreeShape::bisection(m)?))
    }

    /// Tree with the given key structure and fresh estimates.
    pub fn from_shape(shape: &TreeShape) -> Self {
        let m = shape.len();
        let mut nodes = Vec::with_capacity(m - 1);
        let mut index_of_key = vec![usize::MAX; m];
        // Nodes get indices in preorder; children patched afterwards.
        let mut stack = vec![shape.root()];
        while let Some(key) = stack.pop() {
            index_of_key[key] = nodes.len();
            nodes.push(DecisionNode {
                left: Branch::Leaf(usize::MAX),
                right: Branch::Leaf(usize::MAX),
                key: Some(key),
                freq: BinaryFrequency::new(),
            });
            if let Child::Node(k) = shape.right(key) {
                stack.push(k);
            }
            if let Child::Node(k) = shape.left(key) {
                stack.push(k);
            }
        }
        for node in &mut nodes {
            let key = node.key.expect("shape nodes are keyed");
            node.left = match shape.left(key) {
                Child::Node(k) => Branch::Node(index_of_key[k]),
                Child::Leaf(s) => Branch::Leaf(s),
            };
            node.right = match shape.right(key) {
                Child::Node(k) => Branch::Node(index_of_key[k]),
                Child::Leaf(s) => Branch::Leaf(s),
            };
        }
        let paths = trace_paths(&nodes, m);
        DecisionTree { nodes, paths }
    }

    /// Tree built from occurrence counts by repeatedly joining the two
    /// lightest subtrees, ties broken by weight then lowest symbol, with
    /// the lighter side on the left. Frequent symbols end up on short
    /// walks, so leaves are not in symbol order and the walk for each
    /// symbol is kept as a stored path.
    pub fn optimal(counts: &[u64]) -> Result<Self, ModelError> {
        let m = counts.len();
        if m < 2 {
            return Err(ModelError::AlphabetTooSmall { min: 2, got: m });
        }
        for (s, &c) in counts.iter().enumerate() {
            if c == 0 {
                return Err(ModelError::ZeroCount { symbol: s });
            }
        }
        let mut nodes: Vec<DecisionNode> = Vec::with_capacity(m - 1);
        // (weight, lowest symbol underneath, branch)
        let mut forest: Vec<(u64, usize, Branch)> = counts
            .iter()
            .enumerate()
            .map(|(s, &c)| (c, s, Branch::Leaf(s)))
            .collect();
        while forest.len() > 1 {
            forest.sort_by_key(|a| (a.0, a.1));
            let light = forest.remove(0);
            let heavy = forest.remove(0);
            nodes.push(DecisionNode {
                left: light.2,
                right: heavy.2,
                key: None,
                freq: BinaryFrequency::new(),
            });
            forest.push((
                light.0 + heavy.0,
                light.1.min(heavy.1),
                Branch::Node(nodes.len() - 1),
            ));
        }
        // The walk starts at the last node joined.
        let root = nodes.len() - 1;
        nodes.swap(0, root);
        for node in &mut nodes {
            for branch in [&mut node.left, &mut node.right] {
                if let Branch::Node(i) = branch {
                    if *i == 0 {
                        *i = root;
                    } else if *i == root {
                        *i = 0;
                    }
                }
            }
        }
        let paths = trace_paths(&nodes, m);
        Ok(DecisionTree { nodes, paths })
    }

    /// Number of symbols at the leaves.
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Decisions on the walk to symbol `s`.
    pub fn depth(&self, s: usize) -> usize {
        self.paths[s].len()
    }

    /// Per-node (left outcomes plus one, visits plus two) counter pairs,
    /// indexed from the root in the tree's internal order.
    pub fn branch_counts(&self) -> Vec<(u64, u64)> {
        self.nodes
            .iter()
            .map(|n| (n.freq.zeros(), n.freq.total()))
            .collect()
    }

    /// Average decisions per symbol under `dist`.
    pub fn expected_tests(&self, dist: &StaticDistribution) -> Result<f64, ModelError> {
        if dist.len() != self.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.len(),
                got: dist.len(),
            });
        }
        Ok(dist
            .probabilities_f64()
            .iter()
            .enumerate()
            .map(|(s, p)| p * self.paths[s].len() as f64)
            .sum())
    }

    /// Codes `s` as its root-to-leaf decision sequence.
    pub fn encode_symbol(&mut self, enc: &mut Encoder, s: usize) -> Result<(), CoderError> {
        if s >= self.len() {
            return Err(CoderError::SymbolOutOfRange {
                symbol: s,
                alphabet: self.len(),
            });
        }
        let (paths, nodes) = (&self.paths, &mut self.nodes);
        for &(node, right) in &paths[s] {
            enc.encode_bit(&mut nodes[node].freq, u8::from(right))?;
        }
        Ok(())
    }

    /// Decodes one symbol by walking decisions until a leaf.
    pub fn decode_symbol(&mut self, dec: &mut Decoder<'_>) -> Result<usize, CoderError> {
        let mut at = Branch::Node(0);
        loop {
            match at {
                Branch::Node(i) => {
                    let bit = dec.decode_bit(&mut self.nodes[i].freq)?;
                    at = if bit == 0 {
                        self.nodes[i].left
                    } else {
                        self.nodes[i].right
                    };
                }
                Branch::Leaf(s) => return Ok(s),
            }
        }
    }

    /// Serializes the shape (not the adaptive counters) as a preorder
    /// walk: an internal node is tag 0 followed by its split key, or
    /// 0xFFFF when leaves are weight-ordered; a leaf is tag 1 followed by
    /// its symbol. Keys and symbols are unsigned 16-bit little-endian.
    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelError> {
        if self.len() > usize::from(u16::MAX) {
            return Err(ModelError::InvalidConfiguration);
        }
        let mut out = Vec::with_capacity(self.nodes.len() * 3 + self.len() * 3);
        self.write_branch(Branch::Node(0), &mut out);
        Ok(out)
    }

    fn write_branch(&self, branch: Branch, out: &mut Vec<u8>) {
        match branch {
            Branch::Node(i) => {
                out.push(0);
                let key = self.nodes[i].key.map_or(u16::MAX, |k| k as u16);
                out.extend_from_slice(&key.to_le_bytes());
                self.write_branch(self.nodes[i].left, out);
                self.write_branch(self.nodes[i].right, out);
            }
            Branch::Leaf(s) => {
                out.push(1);
                out.extend_from_slice(&(s as u16).to_le_bytes());
            }
        }
    }

    /// Rebuilds a tree serialized by [`DecisionTree::to_bytes`], with
    /// fresh estimates. Returns the tree and the bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize), ModelError> {
        let mut nodes = Vec::new();
        let mut pos = 0usize;
        let root = parse_branch(bytes, &mut pos, &mut nodes, 0)?;
        let Branch::Node(root_index) = root else {
            return Err(ModelError::InvalidTreeShape(
                "tree must have at least one decision".into(),
            ));
        };
        if root_index != 0 {
            // parse_branch allocates the root first by construction
            return Err(ModelError::InvalidTreeShape("root must come first".into()));
        }
        let mut seen = Vec::new();
        collect_leaves(&nodes, root, &mut seen);
        let m = seen.len();
        let mut present = vec![false; m];
        for &s in &seen {
            if s >= m || present[s] {
                return Err(ModelError::InvalidTreeShape(format!(
                    "leaves must cover each symbol once, saw {s} twice or out of range"
                )));
            }
            present[s] = true;
        }
        let paths = trace_paths(&nodes, m);
        Ok((DecisionTree { nodes, paths }, pos))
    }
}

fn parse_branch(
    bytes: &[u8],
    pos: &mut usize,
    nodes: &mut Vec<DecisionNode>,
    depth: usize,
) -> Result<Branch, ModelError> {
    if depth > u16::MAX as usize {
        return Err(ModelError::InvalidTreeShape("tree too deep".into()));
    }
    let tag = *bytes
        .get(*pos)
        .ok_or_else(|| ModelError::InvalidTreeShape("truncated tree bytes".into()))?;
    let lo = bytes
        .get(*pos + 1)
        .copied()
        .ok_or_else(|| ModelError::InvalidTreeShape("truncated tree bytes".into()))?;
    let hi = bytes
        .get(*pos + 2)
        .copied()
        .ok_or_else(|| ModelError::InvalidTreeShape("truncated tree bytes".into()))?;
    let value = u16::from_le_bytes([lo, hi]);
    *pos += 3;
    match tag {
        0 => {
            let index = nodes.len();
            nodes.push(DecisionNode {
                left: Branch::Leaf(usize::MAX),
                right: Branch::Leaf(usize::MAX),
                key: (value != u16::MAX).then_some(value as usize),
                freq: BinaryFrequency::new(),
            });
            let left = parse_branch(bytes, pos, nodes, depth + 1)?;
            let right = parse_branch(bytes, pos, nodes, depth + 1)?;
            nodes[index].left = left;
            nodes[index].right = right;
            Ok(Branch::Node(index))
        }
        1 => Ok(Branch::Leaf(value as usize)),
        other => Err(ModelError::InvalidTreeShape(format!(
            "unknown node tag {other}"
        ))),
    }
}

fn collect_leaves(nodes: &[DecisionNode], branch: Branch, out: &mut Vec<usize>) {
    match branch {
        Branch::Node(i) => {
            collect_leaves(nodes, nodes[i].left, out);
            collect_leaves(nodes, nodes[i].right, out);
        }
        Branch::Leaf(s) => out.push(s),
    }
}

fn trace_paths(nodes: &[DecisionNode], m: usize) -> Vec<Vec<(usize, bool)>> {
    let mut paths = vec![Vec::new(); m];
    let mut walk = Vec::new();
    descend(nodes, Branch::Node(0), &mut walk, &mut paths);
    paths
}

fn descend(
    nodes: &[DecisionNode],
    branch: Branch,
    walk: &mut Vec<(usize, bool)>,
    paths: &mut Vec<Vec<(usize, bool)>>,
) {
    match branch {
        Branch::Node(i) => {
            walk.push((i, false));
            descend(nodes, nodes[i].left, walk, paths);
            walk.pop();
            walk.push((i, true));
            descend(nodes, nodes[i].right, walk, paths);
            walk.pop();
        }
        Branch::Leaf(s) => paths[s] = walk.clone(),
    }
}

/// Average probes of the descending sequential interval scan, which tests
/// symbols M-1 down to the answer, the always-true probe at the answer
/// included: M minus the mean symbol index.
pub fn sequential_expected_tests(dist: &StaticDistribution) -> f64 {
    let mean: f64 = dist
        .probabilities_f64()
        .iter()
        .enumerate()
        .map(|(s, p)| s as f64 * p)
        .sum();
    dist.len() as f64 - mean
}
