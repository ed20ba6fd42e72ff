//! The two univariate dual building blocks: an OR-style dual `omega` on
//! `{1..L}` and a MAJ-style dual `eta_k` on `{0..N}`, plus the alternating
//! binomial identity they rest on.
//!
//! Both builders compute the node weights from the closed-form product
//! formula in exact rationals, normalize to unit L1 mass, fix the global
//! sign so the designated node carries positive weight, and then gate the
//! result on an exact post-construction check of all four defining
//! properties. A dual that fails its gate is never returned.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{binomial, factorial, Rat, UnivariatePolynomial};

/// A signed rational weight function on an integer range with unit L1 mass,
/// zero moments up to `achieved_phd`, and support inside `node_set`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnivariateDual {
    pub domain_lo: i64,
    pub domain_hi: i64,
    /// Nonzero values only.
    pub values: BTreeMap<i64, Rat>,
    pub node_set: BTreeSet<i64>,
    /// Largest `d` with all moment sums of degree `<= d` exactly zero;
    /// `-1` when even the degree-0 sum is nonzero.
    pub achieved_phd: i64,
}

impl UnivariateDual {
    pub fn l1(&self) -> Rat {
        let mut acc = Rat::zero();
        for v in self.values.values() {
            acc += v.abs();
        }
        acc
    }

    pub fn value(&self, r: i64) -> Rat {
        self.values.get(&r).cloned().unwrap_or_else(Rat::zero)
    }

    /// Moment sum of degree `j`.
    pub fn moment(&self, j: u32) -> Rat {
        let mut acc = Rat::zero();
        for (&r, v) in &self.values {
            acc += v * &Rat::from_int(r).pow(j);
        }
        acc
    }

    /// Applies `-1` to every value.
    fn negate(&mut self) {
        for v in self.values.values_mut() {
            *v = -v.clone();
        }
    }
}

/// Largest `j <= cap` such that all moment sums of degree `<= j` vanish
/// exactly; `-1` if the degree-0 sum is already nonzero.
pub fn measure_achieved_phd(dual: &UnivariateDual, cap: u32) -> i64 {
    for j in 0..=cap {
        if !dual.moment(j).is_zero() {
            return j as i64 - 1;
        }
    }
    cap as i64
}

/// `sum_{k=0}^{L} (-1)^k C(L,k) q(k)`, exactly.
pub fn alternating_binomial_sum(l: u32, q: &UnivariatePolynomial) -> Rat {
    let mut acc = Rat::zero();
    for k in 0..=l {
        let term = Rat::from_int(binomial(l as u64, k as i64)) * q.eval_int(k as i64);
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= &term;
        }
    }
    acc
}

/// An OR-style dual together with its construction data, kept for the exact
/// pre-normalization checks.
#[derive(Clone, Debug)]
pub struct OrDual {
    pub dual: UnivariateDual,
    pub c: u64,
    pub m: u64,
    /// Raw (pre-normalization) node weights, indexed by node in `[[L-1]]`.
    pub raw: BTreeMap<i64, Rat>,
    pub raw_l1: Rat,
    /// Whether the global sign had to be flipped to make the weight at 1
    /// positive.
    pub sign_flipped: bool,
}

/// Builds the OR-style dual on `{1..L}`: `c = ceil(16/delta)`,
/// `m = floor(sqrt((L-1)/c))`, node set `T = {1} union {c i^2 : 0 <= i <= m}`
/// (a set, so coincidences merge), raw weights from the closed-form product,
/// then the shift `k -> k + 1`, normalization, and a global sign making the
/// weight at 1 positive.
pub fn build_or_dual(l: u32, delta: &Rat) -> Result<OrDual> {
    if l < 2 {
        return Err(Error::InvalidParam("L must be at least 2".into()));
    }
    if !delta.is_positive() || delta >= &Rat::one() {
        return Err(Error::InvalidParam("delta must lie in (0, 1)".into()));
    }
    let c = (Rat::from_int(16) / delta)
        .ceil_int()
        .to_u64()
        .ok_or_else(|| Error::InvalidParam("delta too small".into()))?;
    // Largest m with c m^2 <= L - 1.
    let mut m = 0u64;
    while c * (m + 1) * (m + 1) <= (l - 1) as u64 {
        m += 1;
    }
    let mut nodes: BTreeSet<i64> = BTreeSet::new();
    nodes.insert(1);
    for i in 0..=m {
        nodes.insert((c * i * i) as i64);
    }
    if nodes.len() < 2 {
        return Err(Error::Degenerate(format!(
            "node set collapsed to {} node(s) for L = {l}",
            nodes.len()
        )));
    }

    // kappa = c^m (m!)^2 / L!; raw(k) = C(L,k) kappa prod_{j in [[L]] \ T} (k - j).
    let kappa = Rat::from_big(
        BigInt::from(c).pow(m as u32) * factorial(m).pow(2),
        factorial(l as u64),
    )?;
    let mut raw: BTreeMap<i64, Rat> = BTreeMap::new();
    let mut raw_l1 = Rat::zero();
    for &k in &nodes {
        let mut prod = BigInt::one();
        for j in 0..=l as i64 {
            if !nodes.contains(&j) {
                prod *= BigInt::from(k - j);
            }
        }
        let w = Rat::from_int(binomial(l as u64, k)) * &kappa * Rat::from_int(prod);
        raw_l1 += w.abs();
        raw.insert(k, w);
    }

    // Shift to {1..L}, normalize, apply (-1)^(k+b) with the parity rule,
    // then flip globally if the weight at 1 came out negative.
    let b = if nodes.len().is_multiple_of(2) { 0 } else { 1 };
    let mut values: BTreeMap<i64, Rat> = BTreeMap::new();
    for (&node, w) in &raw {
        let k = node + 1;
        let signed = if (k + b) % 2 == 0 {
            w / &raw_l1
        } else {
            -(w / &raw_l1)
        };
        values.insert(k, signed);
    }
    let mut dual = UnivariateDual {
        domain_lo: 1,
        domain_hi: l as i64,
        node_set: values.keys().copied().collect(),
        achieved_phd: -1,
        values,
    };
    let sign_flipped = dual.value(1).is_negative();
    if sign_flipped {
        dual.negate();
    }
    dual.achieved_phd = measure_achieved_phd(&dual, nodes.len() as u32);

    let half = Rat::new(1, 2)?;
    let target = (Rat::one() - delta) * &half;
    if dual.value(1) < target {
        return Err(Error::Degenerate(format!(
            "weight at 1 is {} < (1 - delta)/2",
            dual.value(1)
        )));
    }
    if -dual.value(2) < target {
        return Err(Error::Degenerate(format!(
            "weight at 2 is {}, want at most -(1 - delta)/2",
            dual.value(2)
        )));
    }
    if dual.l1() != Rat::one() {
        return Err(Error::Inconsistent("L1 normalization failed".into()));
    }
    if dual.achieved_phd < nodes.len() as i64 - 2 {
        return Err(Error::Inconsistent(format!(
            "achieved pure high degree {} below node count - 2 = {}",
            dual.achieved_phd,
            nodes.len() as i64 - 2
        )));
    }
    Ok(OrDual {
        dual,
        c,
        m,
        raw,
        raw_l1,
        sign_flipped,
    })
}

/// A MAJ-style dual together with its construction data.
#[derive(Clone, Debug)]
pub struct MajDual {
    pub dual: UnivariateDual,
    pub k: u32,
    pub c: u64,
    pub t: u64,
    pub h: u64,
    /// True when `N/2` coincided with `t` (i.e. `2k` divides `N/2`) and the
    /// vanishing `(N/2 - t)` factor was dropped from the construction.
    pub degenerate: bool,
    pub raw: BTreeMap<i64, Rat>,
    pub raw_l1: Rat,
    pub sign_flipped: bool,
}

/// Builds the MAJ-style dual on `{0..N}` for even `N` and `k in [N]`:
/// `c = ceil(10/sqrt(delta))`, `t = 2 floor(N/4k) k`,
/// `S = {t +/- 2c l k : 0 <= l <= floor(t/2ck)}`, `T = S union {t-2k, N/2}`,
/// raw weights from the closed-form product, normalization and a global
/// sign making the weight at `N/2` positive.
///
/// When `N/2 = t` the `(N/2 - t)` factor vanishes; it is dropped and the
/// node set becomes `S union {t - 2k}`. The exact post-construction gate
/// decides whether the repaired dual is acceptable.
pub fn build_maj_dual(n: u32, k: u32, delta: &Rat) -> Result<MajDual> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParam(
            "N must be a positive even integer".into(),
        ));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParam("k must lie in [N]".into()));
    }
    if !delta.is_positive() || delta >= &Rat::one() {
        return Err(Error::InvalidParam("delta must lie in (0, 1)".into()));
    }
    // Smallest c with c^2 delta >= 100, i.e. c = ceil(10 / sqrt(delta)).
    let hundred_over = Rat::from_int(100) / delta;
    let mut c = hundred_over
        .floor_int()
        .sqrt()
        .to_u64()
        .ok_or_else(|| Error::InvalidParam("delta too small".into()))?;
    while Rat::from_int((c * c) as i64) < hundred_over {
        c += 1;
    }
    let n64 = n as u64;
    let k64 = k as u64;
    let t = 2 * (n64 / (4 * k64)) * k64;
    if t == 0 {
        return Err(Error::Degenerate(format!(
            "N = {n} is too small relative to k = {k}: the step set is empty"
        )));
    }
    let half_n = n64 / 2;
    let degenerate = t == half_n;
    let h = t / (2 * c * k64);

    let mut nodes: BTreeSet<i64> = BTreeSet::new();
    for ell in 0..=h {
        nodes.insert((t - 2 * c * ell * k64) as i64);
        nodes.insert((t + 2 * c * ell * k64) as i64);
    }
    nodes.insert((t - 2 * k64) as i64);
    if !degenerate {
        nodes.insert(half_n as i64);
    }
    if nodes.len() < 2 {
        return Err(Error::Degenerate(format!(
            "node set collapsed to {} node(s) for N = {n}, k = {k}",
            nodes.len()
        )));
    }

    // base = (2ck)^(2h) (h!)^2 (2k) [* (N/2 - t) unless degenerate].
    let mut base =
        BigInt::from(2 * c * k64).pow(2 * h as u32) * factorial(h).pow(2) * BigInt::from(2 * k64);
    if !degenerate {
        base *= BigInt::from(half_n - t);
    }
    let kappa = Rat::from_big(base, factorial(n64))?;
    let mut raw: BTreeMap<i64, Rat> = BTreeMap::new();
    let mut raw_l1 = Rat::zero();
    for &r in &nodes {
        let mut prod = BigInt::one();
        for j in 0..=n as i64 {
            if !nodes.contains(&j) {
                prod *= BigInt::from(r - j);
            }
        }
        let w = Rat::from_int(binomial(n64, r)) * &kappa * Rat::from_int(prod);
        raw_l1 += w.abs();
        raw.insert(r, w);
    }

    let mut values: BTreeMap<i64, Rat> = BTreeMap::new();
    for (&r, w) in &raw {
        let signed = if (r as u64 + h + half_n).is_multiple_of(2) {
            w / &raw_l1
        } else {
            -(w / &raw_l1)
        };
        values.insert(r, signed);
    }
    let mut dual = UnivariateDual {
        domain_lo: 0,
        domain_hi: n as i64,
        node_set: values.keys().copied().collect(),
        achieved_phd: -1,
        values,
    };
    let sign_flipped = dual.value(half_n as i64).is_negative();
    if sign_flipped {
        dual.negate();
    }
    dual.achieved_phd = measure_achieved_phd(&dual, nodes.len() as u32);

    // Exact gate: the four defining properties.
    let claimed_support: BTreeSet<i64> = (1..=(n64 / (2 * k64)))
        .map(|i| (2 * k64 * i) as i64)
        .chain(std::iter::once(half_n as i64))
        .collect();
    for r in dual.values.keys() {
        if !claimed_support.contains(r) {
            return Err(Error::Degenerate(format!(
                "support contains {r}, outside multiples of 2k and N/2"
            )));
        }
    }
    let half = Rat::new(1, 2)?;
    let target = (Rat::one() - delta) * &half;
    if dual.value(half_n as i64) <= target {
        return Err(Error::Degenerate(format!(
            "weight at N/2 is {}, not above (1 - delta)/2",
            dual.value(half_n as i64)
        )));
    }
    if dual.l1() != Rat::one() {
        return Err(Error::Inconsistent("L1 normalization failed".into()));
    }
    if dual.achieved_phd < nodes.len() as i64 - 2 {
        return Err(Error::Inconsistent(format!(
            "achieved pure high degree {} below node count - 2 = {}",
            dual.achieved_phd,
            nodes.len() as i64 - 2
        )));
    }
    Ok(MajDual {
        dual,
        k,
        c,
        t,
        h,
        degenerate,
        raw,
        raw_l1,
        sign_flipped,
    })
}

/// Wire format: `{"domain":[lo,hi],"values":{"r":"p/q",...},"achieved_phd":n}`.
#[derive(Serialize, Deserialize)]
pub struct UnivariateDualWire {
    pub domain: [i64; 2],
    pub values: BTreeMap<String, Rat>,
    pub achieved_phd: i64,
}

impl From<&UnivariateDual> for UnivariateDualWire {
    fn from(d: &UnivariateDual) -> Self {
        UnivariateDualWire {
            domain: [d.domain_lo, d.domain_hi],
            values: d
                .values
                .iter()
                .map(|(r, v)| (r.to_string(), v.clone()))
                .collect(),
            achieved_phd: d.achieved_phd,
        }
    }
}
