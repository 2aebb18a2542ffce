//! Probability models: static distributions, adaptive occurrence counters
//! (direct, tree-structured, binary), periodic rebuilds into scaled integer
//! distributions, and information-theoretic diagnostics.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::bench::ops;

/// Adaptive counters are halved once the total reaches this bound, keeping
/// register products inside 64 bits even for the widest configurations.
pub const COUNTER_RESCALE_LIMIT: u64 = 1 << 30;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("alphabet must contain at least {min} symbols, got {got}")]
    AlphabetTooSmall { min: usize, got: usize },
    #[error("probabilities must be positive")]
    NonpositiveProbability,
    #[error("probabilities must sum to one")]
    ProbabilitySumNotOne,
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("symbol {symbol} out of range for alphabet of {alphabet} symbols")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error(
        "precision insufficient: {symbols} symbols need gap {radix} each but the scale is {total}"
    )]
    PrecisionInsufficient { symbols: usize, radix: u64, total: u64 },
    #[error("cumulative vector is not strictly increasing from 0 to the scale total")]
    InvalidCumulative,
    #[error("zero occurrence count for symbol {symbol}")]
    ZeroCount { symbol: usize },
    #[error("occurrence counts overflow a 64-bit total")]
    CountOverflow,
    #[error("radix must be at least 2 and precision at least 2, with radix^precision <= 2^32")]
    InvalidConfiguration,
    #[error("invalid tree shape: {0}")]
    InvalidTreeShape(String),
}

fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

/// Exact probability distribution over symbols `0..M`.
///
/// Probabilities are arbitrary-precision rationals so the reference coder
/// can reproduce hand-worked decimal examples without rounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticDistribution {
    p: Vec<BigRational>,
    c: Vec<BigRational>,
}

impl StaticDistribution {
    /// Builds a distribution from exact probabilities.
    ///
    /// A single-symbol alphabet is accepted only so degenerate entropy
    /// queries work; coders require at least two symbols.
    pub fn new(p: Vec<BigRational>) -> Result<Self, ModelError> {
        if p.is_empty() {
            return Err(ModelError::AlphabetTooSmall { min: 1, got: 0 });
        }
        if p.iter().any(|x| !x.is_positive()) {
            return Err(ModelError::NonpositiveProbability);
        }
        let mut c = Vec::with_capacity(p.len() + 1);
        let mut acc = BigRational::zero();
        c.push(acc.clone());
        for x in &p {
            acc += x;
            c.push(acc.clone());
        }
        if !c[p.len()].is_one() {
            return Err(ModelError::ProbabilitySumNotOne);
        }
        Ok(Self { p, c })
    }

    /// Builds a distribution with probabilities proportional to `counts`.
    pub fn from_counts(counts: &[u64]) -> Result<Self, ModelError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(ModelError::NonpositiveProbability);
        }
        for (s, &k) in counts.iter().enumerate() {
            if k == 0 {
                return Err(ModelError::ZeroCount { symbol: s });
            }
        }
        let p = counts
            .iter()
            .map(|&k| BigRational::new(big(k), big(total)))
            .collect();
        Self::new(p)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probability(&self, s: usize) -> &BigRational {
        &self.p[s]
    }

    /// Cumulative probability of all symbols below `m`; `c(0)=0`, `c(M)=1`.
    pub fn cumulative(&self, m: usize) -> &BigRational {
        &self.c[m]
    }

    /// Shannon entropy in bits per symbol.
    pub fn entropy(&self) -> f64 {
        -self
            .p
            .iter()
            .map(|x| {
                let p = x.to_f64().unwrap();
                p * p.log2()
            })
            .sum::<f64>()
    }

    /// Length in bits of an ideal binary code word for symbol `s`.
    pub fn optimal_bits(&self, s: usize) -> f64 {
        -self.p[s].to_f64().unwrap().log2()
    }

    /// Probabilities converted to floating point for diagnostics.
    pub fn probabilities_f64(&self) -> Vec<f64> {
        self.p.iter().map(|x| x.to_f64().unwrap()).collect()
    }

    /// Average extra bits per symbol paid for coding with `p_approx`
    /// instead of the true probabilities.
    ///
    /// The approximation does not need to sum to one, which lets callers
    /// measure truncation effects directly.
    pub fn compression_loss(&self, p_approx: &[f64]) -> Result<f64, ModelError> {
        if p_approx.len() != self.p.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.p.len(),
                got: p_approx.len(),
            });
        }
        if p_approx.iter().any(|&q| q <= 0.0) {
            return Err(ModelError::NonpositiveProbability);
        }
        Ok(self
            .p
            .iter()
            .zip(p_approx)
            .map(|(x, &q)| {
                let p = x.to_f64().unwrap();
                p * (p / q).log2()
            })
            .sum())
    }
}

/// Integer distribution scaled so the cumulative counts end at `D^P`.
///
/// This is the form the fixed-precision coder consumes. Every symbol's
/// count is at least `D`, the smallest probability the engine can code
/// without collapsing an interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledDistribution {
    radix: u64,
    precision: u32,
    cum: Vec<u64>,
}

impl ScaledDistribution {
    /// Scales occurrence counts to total `radix^precision` by largest
    /// remainder, then repairs any gap below `radix` by taking mass from
    /// the widest symbol. Deterministic, so both ends of a channel can
    /// rebuild the same distribution from the same counts.
    pub fn from_counts(counts: &[u64], radix: u64, precision: u32) -> Result<Self, ModelError> {
        let m = counts.len();
        if m < 2 {
            return Err(ModelError::AlphabetTooSmall { min: 2, got: m });
        }
        let total_scale = scale_total(radix, precision)?;
        if (m as u64).saturating_mul(radix) > total_scale {
            return Err(ModelError::PrecisionInsufficient {
                symbols: m,
                radix,
                total: total_scale,
            });
        }
        let mut sum: u64 = 0;
        for (s, &k) in counts.iter().enumerate() {
            if k == 0 {
                return Err(ModelError::ZeroCount { symbol: s });
            }
            sum = sum.checked_add(k).ok_or(ModelError::CountOverflow)?;
        }

        // Largest-remainder rounding of k*D^P/sum.
        let mut widths: Vec<u64> = Vec::with_capacity(m);
        let mut rems: Vec<(u128, usize)> = Vec::with_capacity(m);
        let mut assigned: u64 = 0;
        for (s, &k) in counts.iter().enumerate() {
            ops::count_div();
            let num = k as u128 * total_scale as u128;
            let q = (num / sum as u128) as u64;
            widths.push(q);
            rems.push((num % sum as u128, s));
            assigned += q;
        }
        let mut deficit = total_scale - assigned;
        rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, s) in rems.iter() {
            if deficit == 0 {
                break;
            }
            widths[s] += 1;
            deficit -= 1;
        }

        // Gap repair: lift narrow symbols to the minimum width, paying out
        // of the widest symbol so the total is preserved.
        while let Some(short) = (0..m).find(|&s| widths[s] < radix) {
            let wide = (0..m)
                .max_by(|&a, &b| widths[a].cmp(&widths[b]).then(b.cmp(&a)))
                .unwrap();
            let need = radix - widths[short];
            let spare = widths[wide] - radix;
            let give = need.min(spare);
            debug_assert!(give > 0, "feasibility was checked up front");
            widths[wide] -= give;
            widths[short] += give;
        }

        let mut cum = Vec::with_capacity(m + 1);
        let mut acc = 0u64;
        cum.push(0);
        for w in &widths {
            acc += w;
            cum.push(acc);
        }
        Ok(Self {
            radix,
            precision,
            cum,
        })
    }

    /// Wraps an explicit cumulative vector, validating the invariants.
    pub fn from_cumulative(cum: Vec<u64>, radix: u64, precision: u32) -> Result<Self, ModelError> {
        let total_scale = scale_total(radix, precision)?;
        if cum.len() < 3 {
            return Err(ModelError::AlphabetTooSmall {
                min: 2,
                got: cum.len().saturating_sub(1),
            });
        }
        if cum[0] != 0 || *cum.last().unwrap() != total_scale {
            return Err(ModelError::InvalidCumulative);
        }
        for w in cum.windows(2) {
            if w[1] <= w[0] || w[1] - w[0] < radix {
                return Err(ModelError::InvalidCumulative);
            }
        }
        Ok(Self {
            radix,
            precision,
            cum,
        })
    }

    pub fn len(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radix(&self) -> u64 {
        self.radix
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Scaled cumulative count of symbols below `s`; ends at `D^P`.
    pub fn cumulative(&self, s: usize) -> u64 {
        self.cum[s]
    }

    pub fn cumulative_slice(&self) -> &[u64] {
        &self.cum
    }

    /// Scaled count of symbol `s`.
    pub fn width(&self, s: usize) -> u64 {
        self.cum[s + 1] - self.cum[s]
    }

    /// Effective probabilities implied by the scaled counts.
    pub fn probabilities(&self) -> Vec<f64> {
        let t = *self.cum.last().unwrap() as f64;
        (0..self.len()).map(|s| self.width(s) as f64 / t).collect()
    }
}

fn scale_total(radix: u64, precision: u32) -> Result<u64, ModelError> {
    if radix < 2 || precision < 1 {
        return Err(ModelError::InvalidConfiguration);
    }
    radix
        .checked_pow(precision)
        .filter(|&t| t <= 1 << 32)
        .ok_or(ModelError::InvalidConfiguration)
}

/// Adaptive model keeping one occurrence counter per symbol plus the
/// running cumulative vector.
///
/// Estimates start uniform: every counter begins at one, so after `k`
/// updates the total is `k + M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyModel {
    counts: Vec<u64>,
    cum: Vec<u64>,
}

impl FrequencyModel {
    pub fn new(m: usize) -> Result<Self, ModelError> {
        if m < 2 {
            return Err(ModelError::AlphabetTooSmall { min: 2, got: m });
        }
        Ok(Self {
            counts: vec![1; m],
            cum: (0..=m as u64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn count(&self, s: usize) -> u64 {
        self.counts[s]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Cumulative count of symbols below `m`.
    pub fn cumulative(&self, m: usize) -> u64 {
        self.cum[m]
    }

    pub fn cumulative_slice(&self) -> &[u64] {
        &self.cum
    }

    pub fn total(&self) -> u64 {
        *self.cum.last().unwrap()
    }

    /// Records one occurrence of `s` by incrementing every cumulative
    /// entry above it. Linear in the alphabet size by design; the tree
    /// model exists for alphabets where that loop is too slow.
    pub fn update(&mut self, s: usize) {
        for c in &mut self.cum[s + 1..] {
            *c += 1;
            ops::count_add();
        }
        self.counts[s] += 1;
        ops::count_add();
        if self.total() >= COUNTER_RESCALE_LIMIT {
            self.rescale_counters();
        }
    }

    /// Halves every counter, keeping each at least one. Called on counter
    /// overflow and by coders that need the total below their precision
    /// bound.
    pub fn rescale_counters(&mut self) {
        for k in &mut self.counts {
            *k = (*k).div_ceil(2).max(1);
        }
        let mut acc = 0;
        for (c, &k) in self.cum[1..].iter_mut().zip(&self.counts) {
            acc += k;
            *c = acc;
        }
        self.cum[0] = 0;
    }

    /// Rescales the counters into a `ScaledDistribution` and returns the
    /// permutation of symbols sorted by increasing occurrence count,
    /// ties broken by symbol index. Both ends of a channel derive the same
    /// pair from the same counter state.
    pub fn rebuild_periodic(
        &self,
        radix: u64,
        precision: u32,
    ) -> Result<(ScaledDistribution, Vec<usize>), ModelError> {
        let dist = ScaledDistribution::from_counts(&self.counts, radix, precision)?;
        let mut perm: Vec<usize> = (0..self.counts.len()).collect();
        perm.sort_by(|&a, &b| self.counts[a].cmp(&self.counts[b]).then(a.cmp(&b)));
        Ok((dist, perm))
    }
}

/// Two-counter adaptive model for a binary source.
///
/// `ones_boundary` plays the role of a one-entry cumulative vector: it is
/// the zero-symbol count plus one, while `total` is the symbol count plus
/// two. Estimates start at one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryFrequency {
    zeros: u64,
    total: u64,
}

impl Default for BinaryFrequency {
    fn default() -> Self {
        Self::new()
    }
}

impl BinaryFrequency {
    pub fn new() -> Self {
        Self { zeros: 1, total: 2 }
    }

    /// Count of zero bits plus one.
    pub fn zeros(&self) -> u64 {
        self.zeros
    }

    /// Count of all bits plus two.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn update(&mut self, bit: u8) {
        debug_assert!(bit <= 1);
        self.total += 1;
        ops::count_add();
        if bit == 0 {
            self.zeros += 1;
            ops::count_add();
        }
        if self.total >= COUNTER_RESCALE_LIMIT {
            self.rescale();
        }
    }

    /// Halves both counters, preserving `0 < zeros < total`.
    pub fn rescale(&mut self) {
        self.zeros = self.zeros.div_ceil(2).max(1);
        self.total = self.total.div_ceil(2).max(self.zeros + 1);
    }
}

/// Which side of a search-tree node a descent continues into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    /// Another internal node, identified by its split key.
    Node(usize),
    /// A leaf holding one symbol.
    Leaf(usize),
}

/// Shape of a binary search tree over symbols `0..M`.
///
/// Internal nodes carry split keys `1..M`; the node with key `k` has
/// exactly the symbols below `k` in its left subtree. Shapes are built
/// once and shared by models, coders, and decoder search strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeShape {
    m: usize,
    root: usize,
    // Indexed by split key; slot 0 is unused padding.
    left: Vec<Child>,
    right: Vec<Child>,
}

impl TreeShape {
    /// Balanced shape splitting every span at its midpoint.
    pub fn bisection(m: usize) -> Result<Self, ModelError> {
        if m < 2 {
            return Err(ModelError::AlphabetTooSmall { min: 2, got: m });
        }
        let mut left = vec![Child::Leaf(0); m];
        let mut right = vec![Child::Leaf(0); m];
        let root = build_bisection(0, m, &mut left, &mut right);
        let Child::Node(root) = root else {
            unreachable!("m >= 2 always yields an internal root");
        };
        Ok(Self {
            m,
            root,
            left,
            right,
        })
    }

    /// Builds an arbitrary shape from explicit child links, validating
    /// that it is an order-consistent tree over `0..m`.
    pub fn from_children(
        m: usize,
        root: usize,
        children: &[(usize, Child, Child)],
    ) -> Result<Self, ModelError> {
        if m < 2 {
            return Err(ModelError::AlphabetTooSmall { min: 2, got: m });
        }
        if children.len() != m - 1 {
            return Err(ModelError::InvalidTreeShape(format!(
                "expected {} internal nodes, got {}",
                m - 1,
                children.len()
            )));
        }
        let mut left = vec![Child::Leaf(usize::MAX); m];
        let mut right = vec![Child::Leaf(usize::MAX); m];
        let mut seen = vec![false; m];
        for &(key, l, r) in children {
            if key == 0 || key >= m {
                return Err(ModelError::InvalidTreeShape(format!(
                    "split key {key} out of range 1..{m}"
                )));
            }
            if seen[key] {
                return Err(ModelError::InvalidTreeShape(format!(
                    "split key {key} appears twice"
                )));
            }
            seen[key] = true;
            left[key] = l;
            right[key] = r;
        }
        let shape = Self {
            m,
            root,
            left,
            right,
        };
        shape.validate()?;
        Ok(shape)
    }

    fn validate(&self) -> Result<(), ModelError> {
        // An in-order walk must visit leaves 0..m with node k sitting
        // between leaves k-1 and k.
        let mut next_leaf = 0usize;
        let mut stack = vec![(Child::Node(self.root), false)];
        let mut visited = 0usize;
        while let Some((c, expanded)) = stack.pop() {
            match c {
                Child::Leaf(s) => {
                    if s != next_leaf {
                        return Err(ModelError::InvalidTreeShape(format!(
                            "leaf {s} out of order, expected {next_leaf}"
                        )));
                    }
                    next_leaf += 1;
                }
                Child::Node(k) => {
                    if expanded {
                        if k != next_leaf {
                            return Err(ModelError::InvalidTreeShape(format!(
                                "node {k} out of order, expected key {next_leaf}"
                            )));
                        }
                        continue;
                    }
                    visited += 1;
                    if visited > self.m - 1 {
                        return Err(ModelError::InvalidTreeShape("cycle detected".into()));
                    }
                    stack.push((self.right[k], false));
                    stack.push((Child::Node(k), true));
                    stack.push((self.left[k], false));
                }
            }
        }
        if next_leaf != self.m || visited != self.m - 1 {
            return Err(ModelError::InvalidTreeShape(format!(
                "walk covered {next_leaf} leaves and {visited} nodes for m={}",
                self.m
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn left(&self, key: usize) -> Child {
        self.left[key]
    }

    pub fn right(&self, key: usize) -> Child {
        self.right[key]
    }

    /// Number of leaves in the left subtree of `key`, which is also the
    /// initial branch counter for an all-ones leaf model.
    pub fn left_leaves(&self, key: usize) -> usize {
        // Leaves under the left child of node k are exactly the symbols in
        // [span_lo(k), k); computing by walk avoids storing spans.
        let mut n = 0;
        let mut stack = vec![self.left[key]];
        while let Some(c) = stack.pop() {
            match c {
                Child::Leaf(_) => n += 1,
                Child::Node(k) => {
                    stack.push(self.left[k]);
                    stack.push(self.right[k]);
                }
            }
        }
        n
    }

    /// Depth of the leaf for `s`, counting one per internal node passed.
    pub fn leaf_depth(&self, s: usize) -> usize {
        let mut depth = 0;
        let mut at = Child::Node(self.root);
        loop {
            match at {
                Child::Leaf(leaf) => {
                    debug_assert_eq!(leaf, s);
                    return depth;
                }
                Child::Node(k) => {
                    depth += 1;
                    at = if s < k { self.left[k] } else { self.right[k] };
                }
            }
        }
    }
}

fn build_bisection(lo: usize, hi: usize, left: &mut [Child], right: &mut [Child]) -> Child {
    if hi - lo == 1 {
        return Child::Leaf(lo);
    }
    let key = (lo + hi) / 2;
    left[key] = build_bisection(lo, key, left, right);
    right[key] = build_bisection(key, hi, left, right);
    Child::Node(key)
}

/// Adaptive model whose counters live on the internal nodes of a search
/// tree instead of in a cumulative vector.
///
/// Slot 0 holds the total count; slot `k` holds how many coded symbols
/// fell in the left subtree of node `k`. Updates touch only the nodes on
/// one root-to-leaf path, so they cost the leaf depth rather than the
/// alphabet size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeModel {
    shape: TreeShape,
    counters: Vec<u64>,
}

impl TreeModel {
    /// Fresh model over `shape` with every leaf count at one.
    pub fn new(shape: TreeShape) -> Self {
        let m = shape.len();
        let mut counters = vec![0; m];
        counters[0] = m as u64;
        for (k, c) in counters.iter_mut().enumerate().skip(1) {
            *c = shape.left_leaves(k) as u64;
        }
        Self { shape, counters }
    }

    /// Restores a model from explicit counters, validating the total.
    pub fn from_counters(shape: TreeShape, counters: Vec<u64>) -> Result<Self, ModelError> {
        if counters.len() != shape.len() {
            return Err(ModelError::LengthMismatch {
                expected: shape.len(),
                got: counters.len(),
            });
        }
        let model = Self { shape, counters };
        // The reconstructed cumulative vector checks every branch counter
        // for consistency with the claimed total.
        let cum = model.cumulative();
        for w in cum.windows(2) {
            if w[1] <= w[0] {
                return Err(ModelError::InvalidCumulative);
            }
        }
        Ok(model)
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total(&self) -> u64 {
        self.counters[0]
    }

    /// Branch counter of node `key`, or the total for key 0.
    pub fn counter(&self, key: usize) -> u64 {
        self.counters[key]
    }

    pub(crate) fn counter_mut(&mut self, key: usize) -> &mut u64 {
        &mut self.counters[key]
    }

    /// Records one occurrence of `s` along its root-to-leaf path.
    pub fn update(&mut self, s: usize) {
        self.counters[0] += 1;
        ops::count_add();
        let mut at = Child::Node(self.shape.root);
        while let Child::Node(k) = at {
            if s < k {
                self.counters[k] += 1;
                ops::count_add();
                at = self.shape.left(k);
            } else {
                at = self.shape.right(k);
            }
        }
        if self.counters[0] >= COUNTER_RESCALE_LIMIT {
            self.rescale_counters();
        }
    }

    /// Halves every leaf count (keeping each at least one) and rebuilds
    /// the branch counters.
    pub fn rescale_counters(&mut self) {
        let leaf_counts: Vec<u64> = self
            .leaf_counts()
            .iter()
            .map(|&k| k.div_ceil(2).max(1))
            .collect();
        *self = Self::from_leaf_counts(self.shape.clone(), &leaf_counts)
            .expect("halved counts stay positive");
    }

    /// Builds branch counters matching explicit per-symbol counts.
    pub fn from_leaf_counts(shape: TreeShape, leaf_counts: &[u64]) -> Result<Self, ModelError> {
        if leaf_counts.len() != shape.len() {
            return Err(ModelError::LengthMismatch {
                expected: shape.len(),
                got: leaf_counts.len(),
            });
        }
        for (s, &k) in leaf_counts.iter().enumerate() {
            if k == 0 {
                return Err(ModelError::ZeroCount { symbol: s });
            }
        }
        let m = shape.len();
        let mut counters = vec![0; m];
        counters[0] = leaf_counts.iter().sum();
        for (k, c) in counters.iter_mut().enumerate().skip(1) {
            *c = left_span_sum(&shape, k, leaf_counts);
        }
        Ok(Self { shape, counters })
    }

    /// Per-symbol occurrence counts recovered from the branch counters.
    pub fn leaf_counts(&self) -> Vec<u64> {
        let cum = self.cumulative();
        cum.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cumulative occurrence vector equivalent to this tree's counters.
    ///
    /// Entry `m` sums the branch counters of every node on the path to
    /// node `m` that the path leaves to the right, plus node `m`'s own.
    pub fn cumulative(&self) -> Vec<u64> {
        let m = self.shape.len();
        let mut cum = vec![0u64; m + 1];
        cum[m] = self.counters[0];
        for (key, slot) in cum.iter_mut().enumerate().take(m).skip(1) {
            let mut acc = 0u64;
            let mut at = self.shape.root;
            loop {
                if key == at {
                    acc += self.counters[at];
                    break;
                }
                if key < at {
                    let Child::Node(next) = self.shape.left(at) else {
                        unreachable!("key {key} must sit below node {at}");
                    };
                    at = next;
                } else {
                    acc += self.counters[at];
                    let Child::Node(next) = self.shape.right(at) else {
                        unreachable!("key {key} must sit below node {at}");
                    };
                    at = next;
                }
            }
            *slot = acc;
        }
        cum
    }
}

fn left_span_sum(shape: &TreeShape, key: usize, leaf_counts: &[u64]) -> u64 {
    let mut acc = 0;
    let mut stack = vec![shape.left(key)];
    while let Some(c) = stack.pop() {
        match c {
            Child::Leaf(s) => acc += leaf_counts[s],
            Child::Node(k) => {
                stack.push(shape.left(k));
                stack.push(shape.right(k));
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn entropy_of_uniform_alphabet_is_log2_m() {
        let d = StaticDistribution::from_counts(&[1, 1, 1, 1]).unwrap();
        assert_eq!(d.entropy(), 2.0);
    }

    #[test]
    fn entropy_of_degenerate_single_symbol_is_zero() {
        let d = StaticDistribution::new(vec![BigRational::one()]).unwrap();
        assert_eq!(d.entropy(), 0.0);
    }

    #[test]
    fn entropy_of_skewed_four_symbol_source() {
        let d = StaticDistribution::from_counts(&[2, 5, 2, 1]).unwrap();
        let h = d.entropy();
        assert!((h - 1.7609640474436813).abs() < 1e-12, "h = {h}");
    }

    #[test]
    fn optimal_bits_matches_negative_log() {
        let d = StaticDistribution::from_counts(&[1, 1]).unwrap();
        assert_eq!(d.optimal_bits(0), 1.0);

        let e = StaticDistribution::new(vec![
            ratio(1033, 10000),
            ratio(10000 - 1033, 10000),
        ])
        .unwrap();
        assert!((e.optimal_bits(0) - 3.275).abs() < 1e-3);

        // -log2(0.0005) is 10.966; a printed table rounding this value to
        // 11.069 was computed from a different, unrounded probability.
        let z = StaticDistribution::new(vec![ratio(5, 10000), ratio(9995, 10000)]).unwrap();
        assert!((z.optimal_bits(0) - 10.966).abs() < 1e-3);
    }

    #[test]
    fn compression_loss_of_exact_model_is_zero() {
        let d = StaticDistribution::from_counts(&[2, 5, 2, 1]).unwrap();
        let q: Vec<f64> = d.probabilities_f64();
        assert_eq!(d.compression_loss(&q).unwrap(), 0.0);
    }

    #[test]
    fn compression_loss_of_skewed_binary_approximation() {
        let d = StaticDistribution::from_counts(&[1, 1]).unwrap();
        let loss = d.compression_loss(&[0.25, 0.75]).unwrap();
        let expected = 0.5 * 2.0f64.log2() + 0.5 * (2.0f64 / 3.0).log2();
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 0.2075).abs() < 1e-4);
    }

    #[test]
    fn compression_loss_rejects_nonpositive_entries() {
        let d = StaticDistribution::from_counts(&[1, 1]).unwrap();
        assert_eq!(
            d.compression_loss(&[0.0, 1.0]),
            Err(ModelError::NonpositiveProbability)
        );
    }

    #[test]
    fn small_uniform_relative_error_gives_small_loss() {
        // Saturating p/q = 1+e everywhere meets the loss bound
        // log2(1+e), roughly 1.4e, with equality.
        let d = StaticDistribution::from_counts(&[2, 5, 2, 1]).unwrap();
        let q: Vec<f64> = d.probabilities_f64().iter().map(|p| p / 1.001).collect();
        let loss = d.compression_loss(&q).unwrap();
        assert!(loss > 0.0);
        assert!(loss <= 1.001f64.log2() + 1e-12, "loss = {loss}");
        assert!((loss - 0.001 / std::f64::consts::LN_2).abs() < 2e-6);
    }

    #[test]
    fn frequency_model_update_increments_tail() {
        let mut f = FrequencyModel::new(4).unwrap();
        assert_eq!(f.cumulative_slice(), &[0, 1, 2, 3, 4]);
        f.update(2);
        assert_eq!(f.cumulative_slice(), &[0, 1, 2, 4, 5]);
        assert_eq!(f.count(2), 2);
    }

    #[test]
    fn frequency_model_total_tracks_update_count() {
        let mut f = FrequencyModel::new(6).unwrap();
        for s in [0, 5, 5, 3, 1, 2, 5, 0] {
            f.update(s);
        }
        assert_eq!(f.total(), 6 + 8);
    }

    #[test]
    fn cumulative_counters_from_leaf_counts() {
        let mut f = FrequencyModel::new(6).unwrap();
        let target = [4u64, 8, 10, 15, 19, 65];
        for (s, &k) in target.iter().enumerate() {
            for _ in 1..k {
                f.update(s);
            }
        }
        assert_eq!(f.counts(), &target);
        assert_eq!(f.cumulative_slice(), &[0, 4, 12, 22, 37, 56, 121]);
    }

    #[test]
    fn rescale_counters_halves_with_floor_one() {
        let mut f = FrequencyModel::new(2).unwrap();
        f.rescale_counters();
        assert_eq!(f.counts(), &[1, 1]);

        let mut g = FrequencyModel::new(2).unwrap();
        for _ in 0..4 {
            g.update(0);
        }
        for _ in 0..2 {
            g.update(1);
        }
        assert_eq!(g.counts(), &[5, 3]);
        g.rescale_counters();
        assert_eq!(g.counts(), &[3, 2]);
        assert_eq!(g.cumulative_slice(), &[0, 3, 5]);
    }

    #[test]
    fn binary_frequency_counts_zeros_and_total() {
        let mut b = BinaryFrequency::new();
        b.update(0);
        assert_eq!((b.zeros(), b.total()), (2, 3));
        let mut c = BinaryFrequency::new();
        c.update(1);
        assert_eq!((c.zeros(), c.total()), (1, 3));
    }

    #[test]
    fn binary_frequency_after_three_zeros_and_seven_ones() {
        let mut b = BinaryFrequency::new();
        for _ in 0..3 {
            b.update(0);
        }
        for _ in 0..7 {
            b.update(1);
        }
        assert_eq!((b.zeros(), b.total()), (4, 12));
    }

    #[test]
    fn scaled_distribution_exact_quarters() {
        let d = ScaledDistribution::from_counts(&[1, 1, 1, 1], 2, 8).unwrap();
        assert_eq!(d.cumulative_slice(), &[0, 64, 128, 192, 256]);
    }

    #[test]
    fn scaled_distribution_rejects_insufficient_precision() {
        let err = ScaledDistribution::from_counts(&[1, 1, 1, 1], 16, 1).unwrap_err();
        assert!(matches!(err, ModelError::PrecisionInsufficient { .. }));
    }

    #[test]
    fn scaled_distribution_tracks_ideal_cumulative_counts() {
        let counts = [4u64, 8, 10, 15, 19, 65];
        let d = ScaledDistribution::from_counts(&counts, 2, 16).unwrap();
        let total: u64 = counts.iter().sum();
        assert_eq!(d.cumulative(0), 0);
        assert_eq!(d.cumulative(6), 1 << 16);
        for s in 1..6 {
            let ideal = (counts[..s].iter().sum::<u64>() as u128 * (1u128 << 16)
                / total as u128) as i128;
            let got = d.cumulative(s) as i128;
            assert!((got - ideal).abs() <= 1, "s={s} got={got} ideal={ideal}");
        }
        for s in 0..6 {
            assert!(d.width(s) >= 2);
        }
    }

    #[test]
    fn gap_repair_steals_from_widest() {
        // One symbol with overwhelming count squeezes the others below the
        // minimum width until repair lifts them back.
        let d = ScaledDistribution::from_counts(&[1, 1, 100_000], 16, 2).unwrap();
        assert_eq!(d.width(0), 16);
        assert_eq!(d.width(1), 16);
        assert_eq!(d.width(2), 256 - 32);
    }

    #[test]
    fn rebuild_periodic_sorts_by_increasing_count() {
        let mut f = FrequencyModel::new(4).unwrap();
        for s in [1, 1, 1, 3, 3, 0] {
            f.update(s);
        }
        // Counts are [2, 4, 1, 3].
        let (dist, perm) = f.rebuild_periodic(2, 8).unwrap();
        assert_eq!(perm, vec![2, 0, 3, 1]);
        assert_eq!(dist.cumulative(0), 0);
        assert_eq!(dist.cumulative(4), 256);
    }

    #[test]
    fn bisection_shape_of_six_symbols() {
        let t = TreeShape::bisection(6).unwrap();
        assert_eq!(t.root(), 3);
        assert_eq!(t.left(3), Child::Node(1));
        assert_eq!(t.right(3), Child::Node(4));
        assert_eq!(t.left(1), Child::Leaf(0));
        assert_eq!(t.right(1), Child::Node(2));
        assert_eq!(t.left(2), Child::Leaf(1));
        assert_eq!(t.right(2), Child::Leaf(2));
        assert_eq!(t.left(4), Child::Leaf(3));
        assert_eq!(t.right(4), Child::Node(5));
        assert_eq!(t.left(5), Child::Leaf(4));
        assert_eq!(t.right(5), Child::Leaf(5));
    }

    #[test]
    fn fresh_tree_model_counts_left_leaves() {
        let t = TreeModel::new(TreeShape::bisection(6).unwrap());
        assert_eq!(
            (0..6).map(|k| t.counter(k)).collect::<Vec<_>>(),
            vec![6, 1, 1, 3, 1, 1]
        );
    }

    #[test]
    fn bisection_tree_counters_give_cumulative_vector() {
        let shape = TreeShape::bisection(6).unwrap();
        let model = TreeModel::from_counters(shape, vec![121, 4, 8, 22, 15, 19]).unwrap();
        assert_eq!(model.cumulative(), vec![0, 4, 12, 22, 37, 56, 121]);
    }

    #[test]
    fn skewed_tree_counters_give_same_cumulative_vector() {
        // Depth-optimized shape for leaf counts [4, 8, 10, 15, 19, 65].
        let shape = TreeShape::from_children(
            6,
            5,
            &[
                (5, Child::Node(3), Child::Leaf(5)),
                (3, Child::Node(2), Child::Node(4)),
                (2, Child::Node(1), Child::Leaf(2)),
                (1, Child::Leaf(0), Child::Leaf(1)),
                (4, Child::Leaf(3), Child::Leaf(4)),
            ],
        )
        .unwrap();
        let model = TreeModel::from_counters(shape, vec![121, 4, 12, 22, 15, 56]).unwrap();
        assert_eq!(model.cumulative(), vec![0, 4, 12, 22, 37, 56, 121]);
    }

    #[test]
    fn two_symbol_tree_cumulative() {
        let shape = TreeShape::bisection(2).unwrap();
        let model = TreeModel::from_counters(shape, vec![9, 4]).unwrap();
        assert_eq!(model.cumulative(), vec![0, 4, 9]);
    }

    #[test]
    fn tree_updates_match_direct_updates() {
        let shape = TreeShape::bisection(6).unwrap();
        let mut tree = TreeModel::new(shape);
        let mut flat = FrequencyModel::new(6).unwrap();
        for s in [0, 5, 2, 2, 4, 1, 3, 5, 5, 0, 2] {
            tree.update(s);
            flat.update(s);
        }
        assert_eq!(tree.cumulative(), flat.cumulative_slice());
        assert_eq!(tree.leaf_counts(), flat.counts());
    }

    #[test]
    fn malformed_tree_shapes_are_rejected() {
        assert!(TreeShape::from_children(
            3,
            1,
            &[
                (1, Child::Leaf(0), Child::Leaf(1)),
                (2, Child::Leaf(1), Child::Leaf(2)),
            ],
        )
        .is_err());
        assert!(TreeShape::from_children(
            3,
            2,
            &[
                (2, Child::Node(1), Child::Leaf(2)),
                (1, Child::Leaf(1), Child::Leaf(0)),
            ],
        )
        .is_err());
    }
}
