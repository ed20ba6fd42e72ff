//! The input universe of Collision and Element Distinctness: functions
//! `g_x: [N] -> [R]` stored as value tables, their bit encoding, orbit
//! classification under relabeling of domain and range, class counting, and
//! exhaustive enumeration at tiny scale.
//!
//! Encoding convention, fixed here and reflected in the JSON schema: value
//! `v` in block `i` is the binary representation of `v - 1` over `log2(R)`
//! bits, most significant bit first, with bit 0 mapping to +1 and bit 1 to
//! -1. Block `i` occupies hypercube coordinates `i*log2(R) .. (i+1)*log2(R)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{factorial, Rat};

/// Shape of a problem instance: `N` domain points mapped into a range of
/// size `R`, with `R >= N` a power of two. Total bit length `n = N log2 R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProblemShape {
    #[serde(rename = "N")]
    pub n_points: u32,
    #[serde(rename = "R")]
    pub range: u32,
}

impl ProblemShape {
    pub fn new(n_points: u32, range: u32) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidParam("N must be positive".into()));
        }
        if range < n_points {
            return Err(Error::InvalidParam(format!(
                "range R = {range} must be at least N = {n_points}"
            )));
        }
        if !range.is_power_of_two() {
            return Err(Error::InvalidParam(format!(
                "range R = {range} must be a power of two"
            )));
        }
        Ok(ProblemShape { n_points, range })
    }

    /// Bits per block, `log2 R`.
    pub fn block_bits(&self) -> u32 {
        self.range.trailing_zeros()
    }

    /// Total bit length `n = N log2 R`.
    pub fn total_bits(&self) -> u32 {
        self.n_points * self.block_bits()
    }

    /// `R^N` as a big integer.
    pub fn input_count(&self) -> BigInt {
        BigInt::from(self.range).pow(self.n_points)
    }

    /// `R^N` if it fits the budget, else a budget error.
    pub fn enumerable(&self, budget: u64) -> Result<u64> {
        let count = self.input_count();
        match count.to_u64() {
            Some(c) if c <= budget => Ok(c),
            _ => Err(Error::BudgetExceeded {
                required: count.to_u128().unwrap_or(u128::MAX),
                budget,
            }),
        }
    }
}

/// An input `x`, stored as the value table of `g_x` (entries in `1..=R`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionInput {
    #[serde(flatten)]
    pub shape: ProblemShape,
    pub values: Vec<u32>,
}

impl FunctionInput {
    pub fn new(shape: ProblemShape, values: Vec<u32>) -> Result<Self> {
        if values.len() != shape.n_points as usize {
            return Err(Error::InvalidParam(format!(
                "expected {} values, got {}",
                shape.n_points,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| v == 0 || v > shape.range) {
            return Err(Error::InvalidParam(format!(
                "value {v} outside 1..={}",
                shape.range
            )));
        }
        Ok(FunctionInput { shape, values })
    }

    /// Mixed-radix index of this table in `0..R^N`; block 0 is the most
    /// significant digit.
    pub fn index(&self) -> u64 {
        let r = self.shape.range as u64;
        self.values
            .iter()
            .fold(0u64, |acc, &v| acc * r + (v as u64 - 1))
    }

    /// Inverse of [`FunctionInput::index`].
    pub fn from_index(shape: ProblemShape, mut idx: u64) -> Self {
        let r = shape.range as u64;
        let mut values = vec![0u32; shape.n_points as usize];
        for slot in values.iter_mut().rev() {
            *slot = (idx % r) as u32 + 1;
            idx /= r;
        }
        FunctionInput { shape, values }
    }

    /// Bit encoding as a mask: bit `i*w + j` (MSB first within a block) is
    /// set iff the corresponding hypercube coordinate equals -1.
    pub fn encode_mask(&self) -> u64 {
        let w = self.shape.block_bits();
        debug_assert!(self.shape.total_bits() <= 64);
        let mut mask = 0u64;
        for (i, &v) in self.values.iter().enumerate() {
            let bits = (v - 1) as u64;
            for j in 0..w {
                // MSB of the block first.
                if bits >> (w - 1 - j) & 1 == 1 {
                    mask |= 1 << (i as u32 * w + j);
                }
            }
        }
        mask
    }

    /// Parity `chi_S(x)` for the bit subset given as a mask; the empty
    /// parity is +1.
    pub fn parity(&self, subset_mask: u64) -> i32 {
        parity_of_mask(self.encode_mask(), subset_mask)
    }

    /// Multiset of nonzero fiber sizes, sorted descending.
    pub fn fiber_profile(&self) -> Vec<u32> {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for &v in &self.values {
            *counts.entry(v).or_insert(0) += 1;
        }
        let mut profile: Vec<u32> = counts.into_values().collect();
        profile.sort_unstable_by(|a, b| b.cmp(a));
        profile
    }
}

/// Parity of `x` (encoded mask) restricted to `S` (subset mask): the product
/// of the selected +/-1 coordinates.
#[inline]
pub fn parity_of_mask(encoded: u64, subset_mask: u64) -> i32 {
    if (encoded & subset_mask).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Symmetry class of an input under relabeling of domain (`S_N`) and range
/// (`S_R`), determined by the multiset of fiber sizes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitClass {
    /// Every nonzero fiber has size exactly `k`.
    KToOne { k: u32 },
    /// `a`-to-1 on `m` points and `b`-to-1 on the rest, canonicalized so
    /// that `a < b` (equal fiber sizes collapse to `KToOne`).
    Regular { m: u32, a: u32, b: u32 },
    /// Fiber multiset matching no valid triple; profile sorted descending.
    Irregular { profile: Vec<u32> },
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitClass::KToOne { k } => write!(f, "k_to_one:{k}"),
            OrbitClass::Regular { m, a, b } => write!(f, "regular:{m},{a},{b}"),
            OrbitClass::Irregular { profile } => {
                let parts: Vec<String> = profile.iter().map(u32::to_string).collect();
                write!(f, "irregular:{}", parts.join(","))
            }
        }
    }
}

impl OrbitClass {
    /// Fiber profile of the class under `shape`, sorted descending.
    pub fn profile(&self, shape: ProblemShape) -> Result<Vec<u32>> {
        let n = shape.n_points;
        match self {
            OrbitClass::KToOne { k } => {
                if *k == 0 || !n.is_multiple_of(*k) {
                    return Err(Error::Unrealizable(self.to_string()));
                }
                Ok(vec![*k; (n / k) as usize])
            }
            OrbitClass::Regular { m, a, b } => {
                if *a == 0 || *b == 0 || a >= b || *m == 0 || *m >= n {
                    return Err(Error::Unrealizable(self.to_string()));
                }
                if m % a != 0 || !(n - m).is_multiple_of(*b) {
                    return Err(Error::Unrealizable(self.to_string()));
                }
                let mut profile = vec![*b; ((n - m) / b) as usize];
                profile.extend(std::iter::repeat_n(*a, (m / a) as usize));
                profile.sort_unstable_by(|x, y| y.cmp(x));
                Ok(profile)
            }
            OrbitClass::Irregular { profile } => {
                let total: u32 = profile.iter().sum();
                if total != n || profile.contains(&0) {
                    return Err(Error::Unrealizable(self.to_string()));
                }
                Ok(profile.clone())
            }
        }
    }
}

/// Canonical class for a fiber profile (any order, zero entries ignored).
pub fn class_of_profile(profile: &[u32]) -> OrbitClass {
    let mut sizes: BTreeMap<u32, u32> = BTreeMap::new();
    for &s in profile {
        if s > 0 {
            *sizes.entry(s).or_insert(0) += 1;
        }
    }
    match sizes.len() {
        0 => panic!("empty fiber profile"),
        1 => {
            let (&k, _) = sizes.iter().next().unwrap();
            OrbitClass::KToOne { k }
        }
        2 => {
            let mut it = sizes.iter();
            let (&a, &ca) = it.next().unwrap();
            let (&b, _) = it.next().unwrap();
            OrbitClass::Regular { m: a * ca, a, b }
        }
        _ => {
            let mut profile: Vec<u32> = Vec::new();
            for (&s, &c) in &sizes {
                profile.extend(std::iter::repeat_n(s, c as usize));
            }
            profile.sort_unstable_by(|x, y| y.cmp(x));
            OrbitClass::Irregular { profile }
        }
    }
}

/// Canonical class of an input; invariant under any relabeling of domain
/// or range.
pub fn classify(x: &FunctionInput) -> OrbitClass {
    class_of_profile(&x.fiber_profile())
}

/// A triple `(m, a, b)` with `a | m` and `b | (N - m)`, indexing the orbit
/// of functions `a`-to-1 on `m` points and `b`-to-1 on the rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ValidTriple {
    pub m: u32,
    pub a: u32,
    pub b: u32,
}

impl ValidTriple {
    pub fn new(m: u32, a: u32, b: u32, shape: ProblemShape) -> Result<Self> {
        let n = shape.n_points;
        if a == 0 || b == 0 || m > n {
            return Err(Error::InvalidParam(format!("bad triple ({m},{a},{b})")));
        }
        if !m.is_multiple_of(a) || !(n - m).is_multiple_of(b) {
            return Err(Error::InvalidParam(format!(
                "triple ({m},{a},{b}) is not valid for N = {n}"
            )));
        }
        Ok(ValidTriple { m, a, b })
    }

    /// Fiber profile induced by this triple (aliases collapse here: `m = 0`
    /// drops the `a` part, `m = N` drops the `b` part).
    pub fn profile(&self, shape: ProblemShape) -> Vec<u32> {
        let n = shape.n_points;
        let mut profile = Vec::new();
        if self.m > 0 {
            profile.extend(std::iter::repeat_n(self.a, (self.m / self.a) as usize));
        }
        if self.m < n {
            profile.extend(std::iter::repeat_n(
                self.b,
                ((n - self.m) / self.b) as usize,
            ));
        }
        profile
    }

    /// The canonical orbit class this triple denotes.
    pub fn class(&self, shape: ProblemShape) -> OrbitClass {
        class_of_profile(&self.profile(shape))
    }
}

/// `|{x : classify(x) = c}|` by the multinomial formula: with `t` nonzero
/// fibers of sizes `s_1..s_t` and multiplicity `mult_v` per distinct size,
/// the count is `[N!/prod s_i!] * [R!/((R-t)! prod_v mult_v!)]`.
pub fn class_size(class: &OrbitClass, shape: ProblemShape) -> Result<BigInt> {
    let profile = class.profile(shape)?;
    let t = profile.len() as u32;
    if t > shape.range {
        return Err(Error::Unrealizable(class.to_string()));
    }
    let mut count = factorial(shape.n_points as u64);
    for &s in &profile {
        count /= factorial(s as u64);
    }
    let mut range_part = BigInt::one();
    let r = shape.range as u64;
    for i in 0..t as u64 {
        range_part *= BigInt::from(r - i);
    }
    let mut mults: BTreeMap<u32, u64> = BTreeMap::new();
    for &s in &profile {
        *mults.entry(s).or_insert(0) += 1;
    }
    for (_, c) in mults {
        range_part /= factorial(c);
    }
    Ok(count * range_part)
}

/// The target functions of this artifact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetFn {
    Collision,
    Ed,
}

impl fmt::Display for TargetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFn::Collision => write!(f, "collision"),
            TargetFn::Ed => write!(f, "ed"),
        }
    }
}

/// Value of a target function on (the class of) an input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetValue {
    Plus,
    Minus,
    OutsidePromise,
}

impl TargetValue {
    pub fn sign(&self) -> Option<i32> {
        match self {
            TargetValue::Plus => Some(1),
            TargetValue::Minus => Some(-1),
            TargetValue::OutsidePromise => None,
        }
    }
}

/// Target value by class. Collision: +1 on 1-to-1, -1 on 2-to-1, outside the
/// promise elsewhere. ED: +1 iff 1-to-1 (total function).
pub fn target_value_of_class(class: &OrbitClass, f: TargetFn) -> TargetValue {
    match f {
        TargetFn::Collision => match class {
            OrbitClass::KToOne { k: 1 } => TargetValue::Plus,
            OrbitClass::KToOne { k: 2 } => TargetValue::Minus,
            _ => TargetValue::OutsidePromise,
        },
        TargetFn::Ed => match class {
            OrbitClass::KToOne { k: 1 } => TargetValue::Plus,
            _ => TargetValue::Minus,
        },
    }
}

pub fn target_value(x: &FunctionInput, f: TargetFn) -> TargetValue {
    target_value_of_class(&classify(x), f)
}

/// Iterator over all `R^N` tables in index order.
#[derive(Debug)]
pub struct InputIter {
    shape: ProblemShape,
    next: u64,
    count: u64,
}

impl Iterator for InputIter {
    type Item = FunctionInput;

    fn next(&mut self) -> Option<FunctionInput> {
        if self.next >= self.count {
            return None;
        }
        let x = FunctionInput::from_index(self.shape, self.next);
        self.next += 1;
        Some(x)
    }
}

/// Yields all `R^N` tables exactly once; errors if the count exceeds the
/// budget.
pub fn enumerate_inputs(shape: ProblemShape, budget: u64) -> Result<InputIter> {
    let count = shape.enumerable(budget)?;
    Ok(InputIter {
        shape,
        next: 0,
        count,
    })
}

/// All integer partitions of `n`, parts descending, lexicographically
/// sorted. These are exactly the realizable fiber profiles when `R >= N`.
pub fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=remaining.min(max_part)).rev() {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// All realizable orbit classes of a shape, in canonical order.
pub fn all_classes(shape: ProblemShape) -> Vec<OrbitClass> {
    let mut classes: Vec<OrbitClass> = partitions(shape.n_points)
        .iter()
        .filter(|p| p.len() as u32 <= shape.range)
        .map(|p| class_of_profile(p))
        .collect();
    classes.sort();
    classes
}

/// Exhaustively accumulated parity statistics of a shape: for every
/// realizable class `c` and every bit subset `S` with `|S| <= max_degree`,
/// the integer sum of `chi_S(x)` over `x` in `c`, plus exact class counts.
///
/// This single pass backs pure-high-degree verification, orbit averages for
/// the symmetrization checks, and the class-size cross-checks.
pub struct ParityTable {
    pub shape: ProblemShape,
    pub max_degree: u32,
    pub classes: Vec<OrbitClass>,
    /// Exact per-class input counts observed during enumeration.
    pub counts: Vec<u64>,
    /// Subset masks grouped by degree: `subsets[d]` lists all `|S| = d`.
    pub subsets: Vec<Vec<u64>>,
    /// `sums[class][flat subset index]`, flat index in degree-major order.
    pub sums: Vec<Vec<i64>>,
}

/// All bit masks over `n` bits with exactly `d` bits set, ascending.
pub fn subsets_of_size(n: u32, d: u32) -> Vec<u64> {
    assert!(n <= 63);
    let mut out = Vec::new();
    if d == 0 {
        out.push(0);
        return out;
    }
    if d > n {
        return out;
    }
    // Gosper's hack.
    let mut v: u64 = (1 << d) - 1;
    let limit: u64 = 1 << n;
    while v < limit {
        out.push(v);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

impl ParityTable {
    pub fn build(shape: ProblemShape, max_degree: u32, budget: u64) -> Result<ParityTable> {
        let count = shape.enumerable(budget)?;
        let n = shape.total_bits();
        if n > 63 {
            return Err(Error::InvalidParam(format!(
                "shape has {n} bits; parity masks support at most 63"
            )));
        }
        let classes = all_classes(shape);
        let subsets: Vec<Vec<u64>> = (0..=max_degree).map(|d| subsets_of_size(n, d)).collect();
        let flat_subsets: Vec<u64> = subsets.iter().flatten().copied().collect();
        let n_classes = classes.len();
        let n_subsets = flat_subsets.len();

        // Profiles packed into u64 keys (sizes fit a byte each for any
        // enumerable shape) so the hot loop needs no allocation.
        let pack = |profile: &[u32]| -> u64 {
            profile.iter().fold(0u64, |k, &s| (k << 8) | s as u64)
        };
        let profile_index: std::collections::HashMap<u64, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let p = c.profile(shape).expect("listed classes are realizable");
                (pack(&p), i)
            })
            .collect();
        let width = shape.block_bits();
        let r = shape.range as u64;

        let identity = || {
            (
                vec![0u64; n_classes],
                vec![vec![0i64; n_subsets]; n_classes],
            )
        };
        let fold_chunk = |mut acc: (Vec<u64>, Vec<Vec<i64>>), range: std::ops::Range<u64>| {
            let mut fibers = vec![0u32; shape.range as usize];
            let mut sizes: Vec<u32> = Vec::with_capacity(shape.n_points as usize);
            for idx in range {
                // Decode digits, count fibers, and build the bit mask in one
                // pass; block 0 is the most significant digit and the MSB of
                // each value comes first within its block.
                fibers.iter_mut().for_each(|f| *f = 0);
                let mut encoded = 0u64;
                let mut v = idx;
                for block in (0..shape.n_points).rev() {
                    let digit = v % r;
                    v /= r;
                    fibers[digit as usize] += 1;
                    for j in 0..width {
                        if digit >> (width - 1 - j) & 1 == 1 {
                            encoded |= 1 << (block * width + j);
                        }
                    }
                }
                sizes.clear();
                sizes.extend(fibers.iter().copied().filter(|&f| f > 0));
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                let key = sizes.iter().fold(0u64, |k, &s| (k << 8) | s as u64);
                let ci = profile_index[&key];
                acc.0[ci] += 1;
                let row = &mut acc.1[ci];
                for (si, &mask) in flat_subsets.iter().enumerate() {
                    row[si] += parity_of_mask(encoded, mask) as i64;
                }
            }
            acc
        };
        let merge = |mut a: (Vec<u64>, Vec<Vec<i64>>), b: (Vec<u64>, Vec<Vec<i64>>)| {
            for (x, y) in a.0.iter_mut().zip(b.0) {
                *x += y;
            }
            for (row_a, row_b) in a.1.iter_mut().zip(b.1) {
                for (x, y) in row_a.iter_mut().zip(row_b) {
                    *x += y;
                }
            }
            a
        };

        let chunk = 1u64 << 12;
        let ranges: Vec<std::ops::Range<u64>> = (0..count.div_ceil(chunk))
            .map(|i| i * chunk..((i + 1) * chunk).min(count))
            .collect();
        let (counts, sums) = ranges
            .into_par_iter()
            .fold(identity, fold_chunk)
            .reduce(identity, merge);

        // The multinomial class sizes must match what enumeration saw.
        for (i, class) in classes.iter().enumerate() {
            let expected = class_size(class, shape)?;
            if BigInt::from(counts[i]) != expected {
                return Err(Error::Inconsistent(format!(
                    "class {class}: enumerated {} inputs, formula gives {expected}",
                    counts[i]
                )));
            }
        }
        Ok(ParityTable {
            shape,
            max_degree,
            classes,
            counts,
            subsets,
            sums,
        })
    }

    pub fn class_index(&self, class: &OrbitClass) -> Option<usize> {
        self.classes.binary_search(class).ok()
    }

    /// Flat offset of the first subset of the given degree.
    pub fn degree_offset(&self, degree: u32) -> usize {
        self.subsets[..degree as usize].iter().map(Vec::len).sum()
    }

    /// Exact orbit average `E_{x in class}[chi_S(x)]`.
    pub fn orbit_average(&self, class: &OrbitClass, subset_mask: u64) -> Result<Rat> {
        let ci = self
            .class_index(class)
            .ok_or_else(|| Error::Unrealizable(class.to_string()))?;
        let degree = subset_mask.count_ones();
        if degree > self.max_degree {
            return Err(Error::InvalidParam(format!(
                "subset degree {degree} exceeds table degree {}",
                self.max_degree
            )));
        }
        let pos = self.subsets[degree as usize]
            .binary_search(&subset_mask)
            .map_err(|_| Error::InvalidParam("subset mask not in table".into()))?;
        let flat = self.degree_offset(degree) + pos;
        Rat::new(self.sums[ci][flat], self.counts[ci] as i64)
    }
}
