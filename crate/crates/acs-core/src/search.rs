//! Decoder-side symbol search beyond plain scanning and halving.
//!
//! Locating the decoded symbol means finding the cumulative interval
//! holding the value register, and every scheme here probes the same
//! predicate the plain searches use, so they all land on the same symbol
//! and leave the decoder in the same state. They differ only in how many
//! probes that takes: [`LookupTable`] jump-starts the halving search from
//! a quantized register ratio, [`QuantileIndex`] picks probability-guided
//! pivots, and [`SearchTree`] fixes the whole probe order in advance,
//! shaped like a prefix code so frequent symbols resolve first.

use crate::bench::ops;
use crate::coder::{encode_all, CoderConfig, CoderError, Decoder};
use crate::model::{ModelError, ScaledDistribution};

/// Caps table and index sizes; beyond this the build cost outweighs any
/// probe savings.
const MAX_TABLE_BITS: u32 = 16;

/// Per-row symbol bounds indexed by the quantized ratio of the decoder's
/// value and length registers.
///
/// Row `E` brackets every symbol whose interval can intersect the ratio
/// window `[E/K, (E+1)/K)`. Rows hold the bounds implied by exact
/// fractions; because the decoder compares truncated products, the true
/// symbol can sit one past the upper bound when some cumulative count
/// falls within `K * D` scaled units of the window's right edge. Such
/// rows are marked fragile and searched one symbol wider.
#[derive(Debug, Clone)]
pub struct LookupTable {
    size: u64,
    symbols: usize,
    radix: u64,
    precision: u32,
    rows: Vec<LookupRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupRow {
    pub lo: usize,
    pub hi: usize,
    pub fragile: bool,
}

/// The usual table size; even this small a table resolves most symbols
/// of a skewed alphabet without probing.
pub const DEFAULT_LOOKUP_SIZE: u64 = 16;

impl LookupTable {
    /// Builds the row bounds for a `size`-way quantization of the ratio.
    pub fn build(dist: &ScaledDistribution, size: u64) -> Result<Self, ModelError> {
        if size < 2 || !size.is_power_of_two() || size > 1 << MAX_TABLE_BITS {
            return Err(ModelError::InvalidConfiguration);
        }
        let m = dist.len();
        let total = dist.cumulative(m);
        let slack = size * dist.radix();
        let mut rows = Vec::with_capacity(size as usize);
        for e in 0..size {
            let lo = (0..m)
                .rev()
                .find(|&s| dist.cumulative(s) * size <= e * total)
                .expect("cumulative count below symbol zero is zero");
            let hi = (0..m)
                .rev()
                .find(|&s| dist.cumulative(s) * size < (e + 1) * total)
                .expect("cumulative count below symbol zero is zero");
            let fragile =
                hi + 1 < m && dist.cumulative(hi + 1) * size < (e + 1) * total + slack;
            rows.push(LookupRow { lo, hi, fragile });
        }
        Ok(LookupTable {
            size,
            symbols: m,
            radix: dist.radix(),
            precision: dist.precision(),
            rows,
        })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// Symbols in the distribution the table was built from.
    pub fn len(&self) -> usize {
        self.symbols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, e: usize) -> LookupRow {
        self.rows[e]
    }

    /// Quantizes the register ratio: one multiplication, one division.
    pub fn quantize(&self, value: u64, length: u64) -> usize {
        ops::count_mul();
        ops::count_div();
        ((value * self.size / length).min(self.size - 1)) as usize
    }

    fn check(&self, dist: &ScaledDistribution) -> Result<(), CoderError> {
        if self.radix != dist.radix() || self.precision != dist.precision() {
            return Err(CoderError::ScaleMismatch {
                dist_radix: dist.radix(),
                dist_precision: dist.precision(),
                radix: self.radix,
                precision: self.precision,
            });
        }
        if self.symbols != dist.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.symbols,
                got: dist.len(),
            }
            .into());
        }
        Ok(())
    }
}

/// Symbols holding the dyadic fractions of the cumulative distribution,
/// one level per halving of the unit interval.
///
/// Level `v` stores, for each fraction `j / 2^v`, the symbol whose
/// cumulative interval contains it. Guided bisection reads its pivots
/// here instead of halving the symbol range blindly, which steers the
/// first probes toward the probable symbols; on sorted alphabets the walk
/// then behaves like a search tree shaped by the distribution.
#[derive(Debug, Clone)]
pub struct QuantileIndex {
    symbols: usize,
    radix: u64,
    precision: u32,
    /// `levels[v - 1][j - 1]` holds the symbol containing `j / 2^v`.
    levels: Vec<Vec<usize>>,
}

impl QuantileIndex {
    pub fn build(dist: &ScaledDistribution, levels: u32) -> Result<Self, ModelError> {
        if !(1..=MAX_TABLE_BITS).contains(&levels) {
            return Err(ModelError::InvalidConfiguration);
        }
        let m = dist.len();
        let total = dist.cumulative(m);
        let mut table = Vec::with_capacity(levels as usize);
        for v in 1..=levels {
            let denom = 1u64 << v;
            let mut row = Vec::with_capacity(denom as usize - 1);
            for j in 1..denom {
                let s = (0..m)
                    .rev()
                    .find(|&s| dist.cumulative(s) * denom <= j * total)
                    .expect("cumulative count below symbol zero is zero");
                row.push(s);
            }
            table.push(row);
        }
        Ok(QuantileIndex {
            symbols: m,
            radix: dist.radix(),
            precision: dist.precision(),
            levels: table,
        })
    }

    pub fn levels(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn len(&self) -> usize {
        self.symbols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Symbol whose interval contains `j / 2^level`.
    pub fn symbol_at(&self, level: u32, j: u64) -> usize {
        self.levels[level as usize - 1][j as usize - 1]
    }

    fn check(&self, dist: &ScaledDistribution) -> Result<(), CoderError> {
        if self.radix != dist.radix() || self.precision != dist.precision() {
            return Err(CoderError::ScaleMismatch {
                dist_radix: dist.radix(),
                dist_precision: dist.precision(),
                radix: self.radix,
                precision: self.precision,
            });
        }
        if self.symbols != dist.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.symbols,
                got: dist.len(),
            }
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SearchChild {
    Node(usize),
    Symbol(usize),
}

#[derive(Debug, Clone)]
struct SearchNode {
    /// Probing `pivot` asks whether the decoded symbol is at or above it;
    /// yes goes right.
    pivot: usize,
    left: SearchChild,
    right: SearchChild,
}

/// A fixed probe order over the symbol range, stored as a tree whose
/// in-order leaves are the symbols in index order.
///
/// Built from occurrence counts, it gives frequent symbols short probe
/// sequences. When the prefix-code depths for the counts can be laid out
/// over leaves kept in index order, the tree matches them exactly, which
/// always works out for counts sorted in increasing order; otherwise the
/// build falls back to halving the total weight, which stays within two
/// probes of the entropy on average.
#[derive(Debug, Clone)]
pub struct SearchTree {
    symbols: usize,
    nodes: Vec<SearchNode>,
    depths: Vec<usize>,
}

impl SearchTree {
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
        let lengths = prefix_code_lengths(counts)?;
        let nodes = match ordered_tree_from_depths(&lengths) {
            Some(nodes) => nodes,
            None => weight_balanced_tree(counts),
        };
        let mut depths = vec![0usize; m];
        record_depths(&nodes, SearchChild::Node(0), 0, &mut depths);
        Ok(SearchTree {
            symbols: m,
            nodes,
            depths,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Probes on the walk to symbol `s`.
    pub fn depth(&self, s: usize) -> usize {
        self.depths[s]
    }

    /// Average probes per symbol under `dist`.
    pub fn expected_tests(&self, dist: &ScaledDistribution) -> Result<f64, ModelError> {
        if dist.len() != self.symbols {
            return Err(ModelError::LengthMismatch {
                expected: self.symbols,
                got: dist.len(),
            });
        }
        Ok(dist
            .probabilities()
            .iter()
            .enumerate()
            .map(|(s, p)| p * self.depths[s] as f64)
            .sum())
    }
}

/// Per-symbol depths of an optimal prefix code for the counts, from
/// repeatedly joining the two lightest subtrees.
fn prefix_code_lengths(counts: &[u64]) -> Result<Vec<usize>, ModelError> {
    let tree = crate::binary::DecisionTree::optimal(counts)?;
    Ok((0..counts.len()).map(|s| tree.depth(s)).collect())
}

/// Lays the given depths over leaves kept in symbol order, or reports
/// that no such tree exists. Walks a grid of `2^L` slots: leaf `s` needs
/// a block of `2^(L - depth)` slots starting at a multiple of its size.
fn ordered_tree_from_depths(depths: &[usize]) -> Option<Vec<SearchNode>> {
    let max = *depths.iter().max().unwrap();
    if max == 0 || max > 60 {
        return None;
    }
    let grid = 1u64 << max;
    let mut starts = Vec::with_capacity(depths.len());
    let mut at = 0u64;
    for &d in depths {
        let block = 1u64 << (max - d);
        if !at.is_multiple_of(block) {
            return None;
        }
        starts.push(at);
        at = at.checked_add(block)?;
    }
    if at != grid {
        return None;
    }
    let mut nodes = Vec::new();
    build_grid_node(&starts, 0, depths.len() - 1, 0, grid, &mut nodes);
    Some(nodes)
}

/// Splits symbols `lo..=hi` occupying grid `[a, b)` at the grid midpoint.
fn build_grid_node(
    starts: &[u64],
    lo: usize,
    hi: usize,
    a: u64,
    b: u64,
    nodes: &mut Vec<SearchNode>,
) -> SearchChild {
    if lo == hi {
        return SearchChild::Symbol(lo);
    }
    let mid = (a + b) / 2;
    // First symbol at or past the midpoint; alignment guarantees the
    // split is clean.
    let split = starts[lo..=hi].partition_point(|&x| x < mid) + lo;
    debug_assert!(lo < split && split <= hi && starts[split] == mid);
    let index = nodes.len();
    nodes.push(SearchNode {
        pivot: split,
        left: SearchChild::Symbol(usize::MAX),
        right: SearchChild::Symbol(usize::MAX),
    });
    let left = build_grid_node(starts, lo, split - 1, a, mid, nodes);
    let right = build_grid_node(starts, split, hi, mid, b, nodes);
    nodes[index].left = left;
    nodes[index].right = right;
    SearchChild::Node(index)
}

/// Ordered tree splitting each range where the two halves' weights come
/// closest to equal.
fn weight_balanced_tree(counts: &[u64]) -> Vec<SearchNode> {
    let mut prefix = Vec::with_capacity(counts.len() + 1);
    let mut acc = 0u64;
    prefix.push(0);
    for &c in counts {
        acc += c;
        prefix.push(acc);
    }
    let mut nodes = Vec::new();
    build_balanced_node(&prefix, 0, counts.len() - 1, &mut nodes);
    nodes
}

fn build_balanced_node(
    prefix: &[u64],
    lo: usize,
    hi: usize,
    nodes: &mut Vec<SearchNode>,
) -> SearchChild {
    if lo == hi {
        return SearchChild::Symbol(lo);
    }
    let span = prefix[hi + 1] - prefix[lo];
    let split = (lo + 1..=hi)
        .min_by_key(|&k| {
            let left = prefix[k] - prefix[lo];
            span.abs_diff(2 * left)
        })
        .unwrap();
    let index = nodes.len();
    nodes.push(SearchNode {
        pivot: split,
        left: SearchChild::Symbol(usize::MAX),
        right: SearchChild::Symbol(usize::MAX),
    });
    let left = build_balanced_node(prefix, lo, split - 1, nodes);
    let right = build_balanced_node(prefix, split, hi, nodes);
    nodes[index].left = left;
    nodes[index].right = right;
    SearchChild::Node(index)
}

fn record_depths(nodes: &[SearchNode], child: SearchChild, depth: usize, out: &mut Vec<usize>) {
    match child {
        SearchChild::Node(i) => {
            record_depths(nodes, nodes[i].left, depth + 1, out);
            record_depths(nodes, nodes[i].right, depth + 1, out);
        }
        SearchChild::Symbol(s) => out[s] = depth,
    }
}

/// How the decoder locates the symbol interval holding its value.
#[derive(Debug, Clone, Copy)]
pub enum Strategy<'a> {
    /// Top-down scan; cheap only when high symbols dominate.
    Sequential,
    /// Plain halving of the symbol range.
    Bisection,
    /// Halving, skipping probes the table row already answers.
    Lookup(&'a LookupTable),
    /// Halving with pivots read off the cumulative quantiles.
    Quantile(&'a QuantileIndex),
    /// Fixed probe order from a weighted tree.
    Tree(&'a SearchTree),
}

/// Locates the symbol under `strategy` without consuming it. Returns the
/// symbol and the probes spent; every strategy returns the same symbol.
pub fn select_with(
    dec: &Decoder<'_>,
    dist: &ScaledDistribution,
    strategy: Strategy<'_>,
) -> Result<(usize, u32), CoderError> {
    match strategy {
        Strategy::Sequential => dec.select_sequential(dist),
        Strategy::Bisection => dec.select_bisection(dist),
        Strategy::Lookup(table) => select_lookup(dec, dist, table),
        Strategy::Quantile(index) => select_quantile(dec, dist, index),
        Strategy::Tree(tree) => select_tree(dec, dist, tree),
    }
}

/// Selects and consumes one symbol under `strategy`.
pub fn decode_with(
    dec: &mut Decoder<'_>,
    dist: &ScaledDistribution,
    strategy: Strategy<'_>,
) -> Result<(usize, u32), CoderError> {
    let (s, probes) = select_with(dec, dist, strategy)?;
    dec.apply(dist, s)?;
    Ok((s, probes))
}

/// Replays the plain halving walk, paying only for probes whose outcome
/// the table row leaves open. Rows bracketing a single symbol decode it
/// for free, and no symbol ever costs more probes than plain halving.
fn select_lookup(
    dec: &Decoder<'_>,
    dist: &ScaledDistribution,
    table: &LookupTable,
) -> Result<(usize, u32), CoderError> {
    dec.config().check_dist(dist)?;
    table.check(dist)?;
    let (value, length) = dec.registers();
    let e = table.quantize(value, length);
    let row = table.row(e);
    let known_hi = if row.fragile {
        (row.hi + 1).min(dist.len() - 1)
    } else {
        row.hi
    };
    let mut lo = 0usize;
    let mut hi = dist.len();
    let mut probes = 0;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let at_or_above = if mid <= row.lo {
            true
        } else if mid > known_hi {
            false
        } else {
            probes += 1;
            dec.product_of(dist.cumulative(mid)) <= dec.value()
        };
        if at_or_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, probes))
}

/// Bisection whose first pivots come from the cumulative quantiles: the
/// dyadic window tracking the probed ratio range is halved alongside the
/// symbol range, and each level's pivot is the symbol holding the
/// window's midpoint. Once the levels run out the walk finishes as plain
/// halving of whatever range is left.
fn select_quantile(
    dec: &Decoder<'_>,
    dist: &ScaledDistribution,
    index: &QuantileIndex,
) -> Result<(usize, u32), CoderError> {
    dec.config().check_dist(dist)?;
    index.check(dist)?;
    let mut lo = 0usize;
    let mut hi = dist.len() - 1;
    let mut probes = 0u32;
    // Window endpoints as numerators at the previous level's denominator;
    // their sum is the midpoint numerator one level down, and it stays
    // odd, so every lookup lands on a fraction new to its level.
    let (mut num_lo, mut num_hi) = (0u64, 1u64);
    for level in 1..=index.levels() {
        if lo == hi {
            break;
        }
        let j = num_lo + num_hi;
        let pivot = index.symbol_at(level, j).clamp(lo + 1, hi);
        probes += 1;
        if dec.product_of(dist.cumulative(pivot)) <= dec.value() {
            lo = pivot;
            (num_lo, num_hi) = (j, 2 * num_hi);
        } else {
            hi = pivot - 1;
            (num_lo, num_hi) = (2 * num_lo, j);
        }
    }
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        probes += 1;
        if dec.product_of(dist.cumulative(mid)) <= dec.value() {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok((lo, probes))
}

/// Walks the fixed probe order; each internal node costs one probe.
fn select_tree(
    dec: &Decoder<'_>,
    dist: &ScaledDistribution,
    tree: &SearchTree,
) -> Result<(usize, u32), CoderError> {
    dec.config().check_dist(dist)?;
    if tree.symbols != dist.len() {
        return Err(ModelError::LengthMismatch {
            expected: tree.symbols,
            got: dist.len(),
        }
        .into());
    }
    let mut at = SearchChild::Node(0);
    let mut probes = 0;
    loop {
        match at {
            SearchChild::Node(i) => {
                let node = &tree.nodes[i];
                probes += 1;
                at = if dec.product_of(dist.cumulative(node.pivot)) <= dec.value() {
                    node.right
                } else {
                    node.left
                };
            }
            SearchChild::Symbol(s) => return Ok((s, probes)),
        }
    }
}

/// Encodes the workload under `dist`, decodes it back with `strategy`,
/// and reports the mean probes per symbol.
pub fn average_probes(
    cfg: CoderConfig,
    dist: &ScaledDistribution,
    symbols: &[usize],
    strategy: Strategy<'_>,
) -> Result<f64, CoderError> {
    if symbols.is_empty() {
        return Ok(0.0);
    }
    let stream = encode_all(cfg, dist, symbols)?;
    let mut dec = Decoder::new(cfg, &stream.digits);
    let mut total = 0u64;
    for &expect in symbols {
        let (s, probes) = decode_with(&mut dec, dist, strategy)?;
        debug_assert_eq!(s, expect);
        total += u64::from(probes);
    }
    Ok(total as f64 / symbols.len() as f64)
}
