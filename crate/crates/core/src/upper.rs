//! Explicit approximating (upper-bound) polynomials for Collision and
//! Element Distinctness, with exact per-class error measurement.
//!
//! The Collision approximants average, over r-subsets of the blocks, a
//! collision-free indicator times a rescaled Chebyshev polynomial applied
//! to the cross-collision count. Degrees are tracked as symbolic
//! bookkeeping over the bit encoding; the evaluators themselves are exact
//! rational functions of the value table.

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::domain::{
    classify, enumerate_inputs, target_value_of_class, FunctionInput, OrbitClass, ProblemShape,
    TargetFn, TargetValue,
};
use crate::error::{Error, Result};
use crate::numerics::{binomial, chebyshev_eval, Rat};

/// Number of cross-collisions between blocks in `S` (a block-index mask)
/// and blocks outside it.
pub fn cross_collisions(x: &FunctionInput, block_mask: u64) -> u32 {
    let n = x.shape.n_points;
    let mut count = 0;
    for i in 0..n {
        if block_mask >> i & 1 == 0 {
            continue;
        }
        for j in 0..n {
            if block_mask >> j & 1 == 1 {
                continue;
            }
            if x.values[i as usize] == x.values[j as usize] {
                count += 1;
            }
        }
    }
    count
}

/// 1 iff the values at the blocks selected by the mask are pairwise
/// distinct.
pub fn ed_indicator(x: &FunctionInput, block_mask: u64) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..x.shape.n_points {
        if block_mask >> i & 1 == 1 && !seen.insert(x.values[i as usize]) {
            return false;
        }
    }
    true
}

/// Which value band the window targets away from zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WindowKind {
    /// Band `[-1, -3/4]` with `A(0) = 1`.
    Standard,
    /// Band `[-1, -delta/2]` with `A(0) >= delta/2`, for vanishing error.
    Vanishing { delta: Rat },
}

/// Grid-measured booleans for the window properties.
#[derive(Clone, Debug)]
pub struct WindowProps {
    pub value_at_zero: Rat,
    pub zero_ok: bool,
    pub band_ok: bool,
    pub bounded_ok: bool,
    pub grid_step: Rat,
}

/// A rescaled Chebyshev polynomial `A(i) = alpha + beta T_d(v(i))` with the
/// affine argument map `v(i) = (p - 2i)/q` chosen so that `v` carries
/// `[1, horizon]` onto `[-1, 1]` (or `[0, horizon]` when `horizon <= 1`).
#[derive(Clone, Debug)]
pub struct ChebyshevWindow {
    pub degree: u32,
    pub horizon: Rat,
    pub kind: WindowKind,
    alpha: Rat,
    beta: Rat,
    v_p: Rat,
    v_q: Rat,
    /// `T_d` at the image of zero; the growth that pays for the band.
    pub growth: Rat,
    pub props: WindowProps,
}

impl ChebyshevWindow {
    pub fn eval(&self, i: &Rat) -> Rat {
        let v = (&self.v_p - &(Rat::from_int(2) * i)) / &self.v_q;
        &self.alpha + &(&self.beta * &chebyshev_eval(self.degree, &v))
    }
}

/// Builds the window and measures its three properties on a rational grid
/// (step 1/8, coarsened when the horizon is large so the grid stays
/// bounded). Properties are reported, never assumed.
pub fn affine_chebyshev(degree: u32, horizon: &Rat, kind: WindowKind) -> Result<ChebyshevWindow> {
    if degree == 0 {
        return Err(Error::InvalidParam("window degree must be positive".into()));
    }
    if !horizon.is_positive() {
        return Err(Error::InvalidParam("horizon must be positive".into()));
    }
    let one = Rat::one();
    let (v_p, v_q) = if horizon > &one {
        (horizon + &one, horizon - &one)
    } else {
        (horizon.clone(), horizon.clone())
    };
    let v0 = &v_p / &v_q;
    let growth = chebyshev_eval(degree, &v0);
    debug_assert!(growth.is_positive());

    let (alpha, beta, band_hi) = match &kind {
        WindowKind::Standard => {
            if horizon > &one {
                // alpha - beta = -1 at the band floor, alpha + beta G = 1 at zero.
                let alpha = Rat::new(-7, 8)?;
                let beta = (Rat::new(15, 8)?).checked_div(&growth)?;
                (alpha, beta, Rat::new(-3, 4)?)
            } else {
                (Rat::zero(), one.clone(), Rat::new(-3, 4)?)
            }
        }
        WindowKind::Vanishing { delta } => {
            let band_hi = -(delta * Rat::new(1, 2)?);
            if horizon > &one {
                let alpha = (&band_hi - &one) * Rat::new(1, 2)?;
                let halfwidth = (&band_hi + &one) * Rat::new(1, 2)?;
                let cap = (&one - &alpha).checked_div(&growth)?;
                let beta = if cap < halfwidth { cap } else { halfwidth };
                (alpha, beta, band_hi)
            } else {
                (Rat::zero(), one.clone(), band_hi)
            }
        }
    };

    let mut window = ChebyshevWindow {
        degree,
        horizon: horizon.clone(),
        kind: kind.clone(),
        alpha,
        beta,
        v_p,
        v_q,
        growth,
        props: WindowProps {
            value_at_zero: Rat::zero(),
            zero_ok: false,
            band_ok: false,
            bounded_ok: false,
            grid_step: Rat::zero(),
        },
    };

    // Grid measurement.
    let eighth = Rat::new(1, 8)?;
    let coarse = horizon / &Rat::from_int(256);
    let step = if coarse > eighth { coarse } else { eighth };
    let mut grid: Vec<Rat> = Vec::new();
    let mut point = Rat::zero();
    while &point <= horizon {
        grid.push(point.clone());
        point += &step;
    }
    grid.push(horizon.clone());
    grid.push(one.clone());
    grid.sort();
    grid.dedup();

    let at_zero = window.eval(&Rat::zero());
    let zero_ok = match &kind {
        WindowKind::Standard => at_zero == one,
        WindowKind::Vanishing { delta } => at_zero >= delta * Rat::new(1, 2)? && at_zero <= one,
    };
    let mut band_ok = true;
    let mut bounded_ok = true;
    let neg_one = -one.clone();
    for i in &grid {
        if i > horizon {
            continue;
        }
        let v = window.eval(i);
        if v < neg_one || v > one {
            bounded_ok = false;
        }
        if i >= &one && (v < neg_one || v > band_hi) {
            band_ok = false;
        }
    }
    window.props = WindowProps {
        value_at_zero: at_zero,
        zero_ok,
        band_ok,
        bounded_ok,
        grid_step: step,
    };
    Ok(window)
}

/// Construction metadata for an approximant.
#[derive(Clone, Debug)]
pub struct ApproximantMeta {
    pub name: String,
    pub subset_size: u32,
    pub chebyshev_degree: u32,
    pub horizon: Rat,
    /// Global sign applied to the averaged polynomial.
    pub sign: i32,
    /// Symbolic degree over the bit encoding:
    /// `r log2(R) + 2 d log2(R)` for the Collision approximants.
    pub claimed_degree_bits: u32,
    /// For the refined variant: the raw (unclamped) subset size rounding.
    pub raw_subset_size: Option<u32>,
    pub window_props: Option<WindowProps>,
}

/// An exactly evaluable approximating polynomial.
pub trait Evaluate {
    fn eval(&self, x: &FunctionInput) -> Rat;
    fn meta(&self) -> &ApproximantMeta;
}

/// The subset-averaged Collision approximant
/// `p(x) = E_{|S|=r}[ I_S(x) A_d(cross_S(x)/r) ]`.
pub struct CollisionApproximant {
    pub shape: ProblemShape,
    pub r: u32,
    pub window: ChebyshevWindow,
    pub meta: ApproximantMeta,
    subsets: Vec<u64>,
}

impl CollisionApproximant {
    fn average(&self, x: &FunctionInput) -> Rat {
        let mut acc = Rat::zero();
        for &mask in &self.subsets {
            if !ed_indicator(x, mask) {
                continue;
            }
            let arg =
                Rat::new(cross_collisions(x, mask) as i64, self.r as i64).expect("r is positive");
            acc += self.window.eval(&arg);
        }
        let choose = Rat::from_int(binomial(self.shape.n_points as u64, self.r as i64));
        acc / &choose
    }
}

impl Evaluate for CollisionApproximant {
    fn eval(&self, x: &FunctionInput) -> Rat {
        let value = self.average(x);
        if self.meta.sign < 0 {
            -value
        } else {
            value
        }
    }

    fn meta(&self) -> &ApproximantMeta {
        &self.meta
    }
}

/// Block-index masks of all r-subsets of `[N]`.
fn block_subsets(n: u32, r: u32) -> Vec<u64> {
    (0..n)
        .combinations(r as usize)
        .map(|s| s.iter().fold(0u64, |m, &i| m | 1 << i))
        .collect()
}

/// The direct Collision approximant with explicit subset size and Chebyshev
/// degree; the window horizon covers every achievable argument
/// `cross_S(x)/r` on collision-free subsets.
pub fn standard_collision_approximant(
    shape: ProblemShape,
    r: u32,
    degree: u32,
) -> Result<CollisionApproximant> {
    if r == 0 || r > shape.n_points {
        return Err(Error::InvalidParam(format!(
            "subset size r = {r} must lie in [1, {}]",
            shape.n_points
        )));
    }
    // On a collision-free subset the cross count is at most N - r.
    let horizon_num = (shape.n_points - r).max(r);
    let horizon = Rat::new(horizon_num as i64, r as i64)?;
    let window = affine_chebyshev(degree, &horizon, WindowKind::Standard)?;
    let bits = shape.block_bits();
    let meta = ApproximantMeta {
        name: "collision-subset-average".into(),
        subset_size: r,
        chebyshev_degree: degree,
        horizon: horizon.clone(),
        sign: 1,
        claimed_degree_bits: r * bits + 2 * degree * bits,
        raw_subset_size: None,
        window_props: Some(window.props.clone()),
    };
    Ok(CollisionApproximant {
        shape,
        r,
        subsets: block_subsets(shape.n_points, r),
        window,
        meta,
    })
}

/// Integer rounding of the cube root of a nonnegative rational:
/// the `r` with `(2r-1)^3 <= 8x < (2r+1)^3`.
fn round_cbrt(x: &Rat) -> u32 {
    let eight_x = Rat::from_int(8) * x;
    let mut r = 0u32;
    loop {
        let upper = Rat::from_int((2 * r as i64 + 1).pow(3));
        if eight_x < upper {
            return r;
        }
        r += 1;
    }
}

/// The refined Collision approximant for vanishing error: subset size
/// `r = round((delta N)^(1/3))` (clamped to at least 1), Chebyshev degree
/// `100 * growth_const * r`, window band `[-1, -delta/2]`.
pub fn refined_collision_approximant(
    shape: ProblemShape,
    delta: &Rat,
    growth_const: u32,
) -> Result<CollisionApproximant> {
    let n = shape.n_points;
    if !delta.is_positive() || delta > &Rat::new(1, n as i64)? {
        return Err(Error::InvalidParam(format!(
            "delta must lie in (0, 1/N] = (0, 1/{n}]"
        )));
    }
    if growth_const == 0 {
        return Err(Error::InvalidParam(
            "growth constant must be positive".into(),
        ));
    }
    let raw_r = round_cbrt(&(delta * Rat::from_int(n as i64)));
    let r = raw_r.max(1);
    let degree = 100 * growth_const * r;
    let horizon = Rat::from_int((degree * degree) as i64)
        .checked_div(&(Rat::from_int(growth_const as i64) * delta))?;
    let window = affine_chebyshev(
        degree,
        &horizon,
        WindowKind::Vanishing {
            delta: delta.clone(),
        },
    )?;
    let bits = shape.block_bits();
    let meta = ApproximantMeta {
        name: "collision-refined".into(),
        subset_size: r,
        chebyshev_degree: degree,
        horizon: horizon.clone(),
        sign: 1,
        claimed_degree_bits: r * bits + 2 * degree * bits,
        raw_subset_size: Some(raw_r),
        window_props: Some(window.props.clone()),
    };
    Ok(CollisionApproximant {
        shape,
        r,
        subsets: block_subsets(n, r),
        window,
        meta,
    })
}

/// The pairwise-distinctness formula for Element Distinctness over `M`
/// blocks: `(1/C(M,2)) (1/2 - sum_{i<j} NEQ(x_i, x_j))` with `NEQ` in
/// `{0,1}`.
pub struct PairwiseEdFormula {
    pub shape: ProblemShape,
    pub meta: ApproximantMeta,
}

pub fn pairwise_ed_approximant(m: u32, range: u32) -> Result<PairwiseEdFormula> {
    if m < 2 {
        return Err(Error::InvalidParam("M must be at least 2".into()));
    }
    let shape = ProblemShape::new(m, range)?;
    let bits = shape.block_bits();
    Ok(PairwiseEdFormula {
        shape,
        meta: ApproximantMeta {
            name: "ed-pairwise".into(),
            subset_size: 2,
            chebyshev_degree: 0,
            horizon: Rat::one(),
            sign: 1,
            // Each pairwise inequality test reads two blocks.
            claimed_degree_bits: 2 * bits,
            raw_subset_size: None,
            window_props: None,
        },
    })
}

impl Evaluate for PairwiseEdFormula {
    fn eval(&self, x: &FunctionInput) -> Rat {
        let m = self.shape.n_points;
        let mut neq_sum = 0i64;
        for i in 0..m {
            for j in (i + 1)..m {
                if x.values[i as usize] != x.values[j as usize] {
                    neq_sum += 1;
                }
            }
        }
        let choose = Rat::from_int(binomial(m as u64, 2));
        (Rat::new(1, 2).unwrap() - Rat::from_int(neq_sum)) / &choose
    }

    fn meta(&self) -> &ApproximantMeta {
        &self.meta
    }
}

/// Per-class exact error summary for an approximant against a target.
#[derive(Clone, Debug)]
pub struct ClassErrorRow {
    pub class: OrbitClass,
    pub count: u64,
    /// On promise classes: `max |p(x) - f(x)|`. Off promise: the excess
    /// `max(|p(x)| - 1, 0)`.
    pub max_error: Rat,
    /// Largest `|p(x)|` over the class.
    pub max_abs: Rat,
    pub on_promise: bool,
}

/// Exhaustively measures per-class errors. The reported global epsilon is
/// the maximum row error.
pub fn measure_class_errors(
    approximant: &dyn Evaluate,
    shape: ProblemShape,
    target: TargetFn,
    budget: u64,
) -> Result<Vec<ClassErrorRow>> {
    let mut rows: BTreeMap<OrbitClass, ClassErrorRow> = BTreeMap::new();
    for x in enumerate_inputs(shape, budget)? {
        let class = classify(&x);
        let value = approximant.eval(&x);
        let target_value = target_value_of_class(&class, target);
        let error = match target_value.sign() {
            Some(s) => (value.clone() - Rat::from_int(s as i64)).abs(),
            None => {
                let excess = value.abs() - Rat::one();
                if excess.is_negative() {
                    Rat::zero()
                } else {
                    excess
                }
            }
        };
        let abs = value.abs();
        rows.entry(class.clone())
            .and_modify(|row| {
                row.count += 1;
                if error > row.max_error {
                    row.max_error = error.clone();
                }
                if abs > row.max_abs {
                    row.max_abs = abs.clone();
                }
            })
            .or_insert(ClassErrorRow {
                class,
                count: 1,
                max_error: error,
                max_abs: abs,
                on_promise: !matches!(target_value, TargetValue::OutsidePromise),
            });
    }
    Ok(rows.into_values().collect())
}

/// Maximum promise-class error across the rows.
pub fn worst_promise_error(rows: &[ClassErrorRow]) -> Rat {
    rows.iter()
        .filter(|r| r.on_promise)
        .map(|r| r.max_error.clone())
        .max()
        .unwrap_or_else(Rat::zero)
}

/// Maximum error across all rows (promise deviation or off-promise excess).
pub fn worst_error(rows: &[ClassErrorRow]) -> Rat {
    rows.iter()
        .map(|r| r.max_error.clone())
        .max()
        .unwrap_or_else(Rat::zero)
}

/// Error conventions for the pairwise ED formula, whose printed range does
/// not match the +/-1 convention; both readings are measured under both
/// global signs, and the report states which meets the claimed bound.
#[derive(Clone, Debug)]
pub struct EdErrorReport {
    /// `max |s q(x) - ED(x)|` with ED valued in {-1, +1}, for s = +1, -1.
    pub pm_errors: [Rat; 2],
    /// `max |s q(x) - ED(x)|` with ED valued in {0, 1}, for s = +1, -1.
    pub zero_one_errors: [Rat; 2],
    pub best: Rat,
    pub best_convention: String,
}

pub fn measure_ed_formula_errors(
    formula: &PairwiseEdFormula,
    budget: u64,
) -> Result<EdErrorReport> {
    let shape = formula.shape;
    let mut pm = [Rat::zero(), Rat::zero()];
    let mut zo = [Rat::zero(), Rat::zero()];
    for x in enumerate_inputs(shape, budget)? {
        let distinct = matches!(
            target_value_of_class(&classify(&x), TargetFn::Ed),
            TargetValue::Plus
        );
        let q = formula.eval(&x);
        let pm_target = Rat::from_int(if distinct { 1 } else { -1 });
        let zo_target = Rat::from_int(if distinct { 1 } else { 0 });
        for (si, sign) in [1i64, -1].iter().enumerate() {
            let sq = &q * &Rat::from_int(*sign);
            let e_pm = (sq.clone() - &pm_target).abs();
            if e_pm > pm[si] {
                pm[si] = e_pm;
            }
            let e_zo = (sq - &zo_target).abs();
            if e_zo > zo[si] {
                zo[si] = e_zo;
            }
        }
    }
    let candidates = [
        (pm[0].clone(), "plus-minus, sign +1"),
        (pm[1].clone(), "plus-minus, sign -1"),
        (zo[0].clone(), "zero-one, sign +1"),
        (zo[1].clone(), "zero-one, sign -1"),
    ];
    let (best, best_convention) = candidates
        .iter()
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(e, c)| (e.clone(), c.to_string()))
        .expect("four candidates");
    Ok(EdErrorReport {
        pm_errors: pm,
        zero_one_errors: zo,
        best,
        best_convention,
    })
}
