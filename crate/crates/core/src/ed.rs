//! The dual-side reduction from Collision to Element Distinctness:
//! restriction and extension machinery, the averaged witness, the exact
//! subset-average statistic on 2-to-1 inputs, and the primal-side sanity
//! check.

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::domain::{
    classify, enumerate_inputs, target_value, FunctionInput, OrbitClass, ProblemShape, TargetFn,
    TargetValue,
};
use crate::error::{Error, Result};
use crate::numerics::{binomial, exp_neg_lower_bound, Rat};
use crate::witness::{DualWitness, WitnessMeta};

/// A sorted M-subset of `[N]` selecting which blocks survive a restriction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictionIndex {
    indices: Vec<u32>,
}

impl RestrictionIndex {
    /// Indices must be strictly increasing and lie in `0..N`.
    pub fn new(indices: Vec<u32>, n_points: u32) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParam(
                "restriction must keep at least one block".into(),
            ));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParam(
                "indices must be strictly increasing".into(),
            ));
        }
        if *indices.last().unwrap() >= n_points {
            return Err(Error::InvalidParam("index out of range".into()));
        }
        Ok(RestrictionIndex { indices })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> u32 {
        self.indices.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// The selected blocks of `y`, in index order, as an input over `M` points.
pub fn restrict(y: &FunctionInput, s: &RestrictionIndex) -> Result<FunctionInput> {
    if s.indices.last().copied().unwrap_or(0) >= y.shape.n_points {
        return Err(Error::InvalidParam(
            "restriction exceeds input length".into(),
        ));
    }
    let shape = ProblemShape::new(s.len(), y.shape.range)?;
    let values: Vec<u32> = s.indices.iter().map(|&i| y.values[i as usize]).collect();
    FunctionInput::new(shape, values)
}

/// All M-subsets of `0..n`, each as a sorted index vector.
fn all_subsets(n: u32, m: u32) -> Vec<Vec<u32>> {
    (0..n).combinations(m as usize).collect()
}

/// Element Distinctness value of a table, as +1/-1.
fn ed_sign(x: &FunctionInput) -> i32 {
    match target_value(x, TargetFn::Ed) {
        TargetValue::Plus => 1,
        _ => -1,
    }
}

/// Exact average of ED values over all M-subset restrictions of `y`.
pub fn birthday_statistic(y: &FunctionInput, m: u32) -> Result<Rat> {
    let n = y.shape.n_points;
    if m == 0 || m > n {
        return Err(Error::InvalidParam(format!("M = {m} must lie in [1, {n}]")));
    }
    let mut acc = Rat::zero();
    for subset in all_subsets(n, m) {
        let s = RestrictionIndex::new(subset, n)?;
        let restricted = restrict(y, &s)?;
        acc += Rat::from_int(ed_sign(&restricted) as i64);
    }
    acc.checked_div(&Rat::from_int(binomial(n as u64, m as i64)))
}

/// Probability that a random M-subset restriction of `y` is collision-free,
/// exactly, together with a comparison against the closed-form real bound
/// `exp(-M^2/4N)`. The bound is compared through a rational lower Taylor
/// truncation, so a `true` verdict is rigorous.
pub struct BirthdayBoundCheck {
    pub probability: Rat,
    pub bound_holds: bool,
}

pub fn birthday_bound_check(y: &FunctionInput, m: u32) -> Result<BirthdayBoundCheck> {
    let n = y.shape.n_points;
    let mut hits = 0u64;
    let mut total = 0u64;
    for subset in all_subsets(n, m) {
        let s = RestrictionIndex::new(subset, n)?;
        if ed_sign(&restrict(y, &s)?) == 1 {
            hits += 1;
        }
        total += 1;
    }
    let probability = Rat::new(hits as i64, total as i64)?;
    let exponent = Rat::new((m as i64) * (m as i64), 4 * n as i64)?;
    let lower = exp_neg_lower_bound(&exponent, 24);
    Ok(BirthdayBoundCheck {
        bound_holds: probability <= lower,
        probability,
    })
}

/// Result of the dual-side reduction.
pub struct EdReduction {
    pub witness: DualWitness,
    /// `(1 + A)/2` for the exactly computed subset-average `A` on 2-to-1
    /// inputs; the reduced witness's correlation obeys
    /// `corr >= (1 - 2 delta_eff) * l1` with this value.
    pub delta_eff: Rat,
    /// The exact subset-average statistic on the 2-to-1 class.
    pub a_on_t2: Option<Rat>,
}

/// Averages a Collision witness over extensions: the reduced witness at a
/// point `x` over `M` blocks is `(1/C(N,M)) sum_{y in ext(x)} psi(y)`.
///
/// Computed point-wise via the equivalent double count over pairs `(y, S)`
/// with `x = y|_S`, then re-aggregated into orbit classes with an exact
/// constancy check per class.
pub fn ed_dual_from_collision(psi: &DualWitness, m: u32, budget: u64) -> Result<EdReduction> {
    let n_shape = psi.shape;
    let n = n_shape.n_points;
    if m == 0 || m > n {
        return Err(Error::InvalidParam(format!("M = {m} must lie in [1, {n}]")));
    }
    let m_shape = ProblemShape::new(m, n_shape.range)?;
    let m_count = m_shape.enumerable(budget)?;
    n_shape.enumerable(budget)?;

    // Per-class point values of the source witness, cached.
    let mut source_values: BTreeMap<OrbitClass, Rat> = BTreeMap::new();
    for class in psi.class_mass.keys() {
        source_values.insert(class.clone(), psi.point_value(class)?);
    }

    let subsets: Vec<RestrictionIndex> = all_subsets(n, m)
        .into_iter()
        .map(|s| RestrictionIndex::new(s, n))
        .collect::<Result<_>>()?;
    let choose = Rat::from_int(binomial(n as u64, m as i64));

    let mut pointwise: Vec<Rat> = vec![Rat::zero(); m_count as usize];
    for y in enumerate_inputs(n_shape, budget)? {
        let value = match source_values.get(&classify(&y)) {
            Some(v) if !v.is_zero() => v.clone(),
            _ => continue,
        };
        for s in &subsets {
            let x = restrict(&y, s)?;
            pointwise[x.index() as usize] += &value;
        }
    }

    // Re-aggregate into classes; averaging a symmetric construction cannot
    // break orbit-constancy, and the check proves it.
    let mut class_values: BTreeMap<OrbitClass, Rat> = BTreeMap::new();
    let mut class_counts: BTreeMap<OrbitClass, u64> = BTreeMap::new();
    for x in enumerate_inputs(m_shape, budget)? {
        let class = classify(&x);
        let value = pointwise[x.index() as usize].checked_div(&choose)?;
        match class_values.get(&class) {
            None => {
                class_values.insert(class.clone(), value);
            }
            Some(existing) if *existing == value => {}
            Some(existing) => {
                return Err(Error::Inconsistent(format!(
                    "averaged witness is not constant on {class}: {existing} vs {value}"
                )));
            }
        }
        *class_counts.entry(class).or_insert(0) += 1;
    }
    let mut masses: BTreeMap<OrbitClass, Rat> = BTreeMap::new();
    for (class, value) in class_values {
        if value.is_zero() {
            continue;
        }
        let count = class_counts[&class];
        masses.insert(class, value * Rat::from_int(count as i64));
    }

    // Effective correlation loss, from the exact statistic on 2-to-1 inputs.
    let t2 = OrbitClass::KToOne { k: 2 };
    let a_on_t2 = if psi.class_mass.contains_key(&t2) {
        let rep = representative_of_class(&t2, n_shape)?;
        Some(birthday_statistic(&rep, m)?)
    } else {
        None
    };
    let delta_eff = match &a_on_t2 {
        Some(a) => (Rat::one() + a) * Rat::new(1, 2)?,
        None => Rat::zero(),
    };

    let witness = DualWitness::from_masses(
        m_shape,
        masses,
        WitnessMeta {
            construction: "ed-from-collision".into(),
            delta: psi.meta.delta.clone(),
            m: Some(m),
            delta_eff: Some(delta_eff.clone()),
            source_hash: Some(source_fingerprint(psi)),
            ..WitnessMeta::default()
        },
    )?;
    Ok(EdReduction {
        witness,
        delta_eff,
        a_on_t2,
    })
}

/// A concrete member of an orbit class: fibers laid out left to right with
/// ascending fresh values.
pub fn representative_of_class(class: &OrbitClass, shape: ProblemShape) -> Result<FunctionInput> {
    let profile = class.profile(shape)?;
    let mut values = Vec::with_capacity(shape.n_points as usize);
    for (value, &size) in profile.iter().enumerate() {
        values.extend(std::iter::repeat_n(value as u32 + 1, size as usize));
    }
    FunctionInput::new(shape, values)
}

/// Stable fingerprint of a witness for reduction metadata (FNV-1a over the
/// canonical JSON).
fn source_fingerprint(w: &DualWitness) -> String {
    let json = crate::witness::witness_to_json(w);
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in json.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{hash:016x}")
}

/// `q(y) = average of p(y|_S) over all M-subsets S`, as an evaluator over
/// N-point inputs; the degree of `q` never exceeds the degree of `p`.
pub fn average_over_restrictions<'a>(
    p: &'a dyn Fn(&FunctionInput) -> Rat,
    n_points: u32,
    m: u32,
) -> Result<impl Fn(&FunctionInput) -> Rat + 'a> {
    if m == 0 || m > n_points {
        return Err(Error::InvalidParam(format!(
            "M = {m} must lie in [1, {n_points}]"
        )));
    }
    let subsets: Vec<RestrictionIndex> = all_subsets(n_points, m)
        .into_iter()
        .map(|s| RestrictionIndex::new(s, n_points))
        .collect::<Result<_>>()?;
    let choose = Rat::from_int(binomial(n_points as u64, m as i64));
    Ok(move |y: &FunctionInput| {
        let mut acc = Rat::zero();
        for s in &subsets {
            let x = restrict(y, s).expect("subset within range");
            acc += p(&x);
        }
        acc / &choose
    })
}

/// Verifies the double-counting identity behind the reduction exactly:
/// `sum_x sum_{y in ext(x)} g(x, y) = sum_y sum_{|S|=M} g(y|_S, y)` for an
/// arbitrary test function `g` on table indices.
pub fn exchange_identity_holds(
    n_shape: ProblemShape,
    m: u32,
    g: &dyn Fn(u64, u64) -> i64,
    budget: u64,
) -> Result<bool> {
    let m_shape = ProblemShape::new(m, n_shape.range)?;
    m_shape.enumerable(budget)?;
    n_shape.enumerable(budget)?;
    let n = n_shape.n_points;
    let r = n_shape.range;
    let subsets = all_subsets(n, m);

    // Right side: restrict every y.
    let mut rhs: i128 = 0;
    for y in enumerate_inputs(n_shape, budget)? {
        for subset in &subsets {
            let s = RestrictionIndex::new(subset.clone(), n)?;
            let x = restrict(&y, &s)?;
            rhs += g(x.index(), y.index()) as i128;
        }
    }

    // Left side: extend every x by every subset position and every filling
    // of the remaining blocks.
    let mut lhs: i128 = 0;
    let fill_count = (r as u64).pow(n - m);
    for x in enumerate_inputs(m_shape, budget)? {
        for subset in &subsets {
            for fill_idx in 0..fill_count {
                let mut fill = fill_idx;
                let mut values = vec![0u32; n as usize];
                for (pos, &i) in subset.iter().enumerate() {
                    values[i as usize] = x.values[pos];
                }
                for slot in values.iter_mut() {
                    if *slot == 0 {
                        *slot = (fill % r as u64) as u32 + 1;
                        fill /= r as u64;
                    }
                }
                let y = FunctionInput::new(n_shape, values)?;
                lhs += g(x.index(), y.index()) as i128;
            }
        }
    }
    Ok(lhs == rhs)
}

/// `|ext(x)| = C(N, M) R^(N-M)` for every `x`, verified by literal multiset
/// counting.
pub fn extension_count_matches(n_shape: ProblemShape, m: u32, budget: u64) -> Result<bool> {
    let m_shape = ProblemShape::new(m, n_shape.range)?;
    let m_count = m_shape.enumerable(budget)?;
    n_shape.enumerable(budget)?;
    let n = n_shape.n_points;
    let subsets = all_subsets(n, m);
    let mut counts = vec![0u64; m_count as usize];
    for y in enumerate_inputs(n_shape, budget)? {
        for subset in &subsets {
            let s = RestrictionIndex::new(subset.clone(), n)?;
            let x = restrict(&y, &s)?;
            counts[x.index() as usize] += 1;
        }
    }
    let expected =
        binomial(n as u64, m as i64) * num_bigint::BigInt::from(n_shape.range as u64).pow(n - m);
    Ok(counts
        .iter()
        .all(|&c| num_bigint::BigInt::from(c) == expected))
}
