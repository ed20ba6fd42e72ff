//! Ground truth at tiny scale: an exact rational simplex solving the
//! primal/dual approximation programs for a partial Boolean function,
//! returning the optimal error per degree, a mutually-certifying
//! primal/dual pair, and the maximum-error points.
//!
//! Instances over Collision/ED are optionally folded by the block
//! permutation group (which acts by coordinate permutations on the bit
//! encoding and therefore preserves polynomial degree): variables become
//! subset orbits, constraints become input orbits. The folded optimum
//! equals the unfolded one, and the folded dual unfolds to an exact dual
//! witness; tests re-verify both claims against unfolded solves.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::ToPrimitive;

use crate::domain::{
    parity_of_mask, subsets_of_size, target_value_of_class, FunctionInput, OrbitClass,
    ProblemShape, TargetFn,
};
use crate::error::{Error, Result};
use crate::numerics::{factorial, Rat};

// ---------------------------------------------------------------------------
// Exact two-phase simplex with Bland's anti-cycling rule.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarKind {
    Real(usize),
    Slack(usize),
    Artificial(usize),
}

/// Minimizes `c . z` subject to `A z <= b`, `z >= 0`.
struct SimplexProblem {
    costs: Vec<Rat>,
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    /// Tie-break priority for entering variables (lower = preferred).
    var_order: Vec<usize>,
}

struct SimplexSolution {
    objective: Rat,
    primal: Vec<Rat>,
    /// One multiplier per constraint row; for this formulation
    /// `dual[i] <= 0` and `b . dual = objective` at the optimum.
    dual: Vec<Rat>,
}

impl SimplexProblem {
    fn solve(&self) -> Result<SimplexSolution> {
        let m = self.rows.len();
        let n = self.costs.len();
        // Column layout: n real vars, m slacks, then artificials as needed.
        let mut kinds: Vec<VarKind> = (0..n).map(VarKind::Real).collect();
        kinds.extend((0..m).map(VarKind::Slack));
        let mut tableau: Vec<Vec<Rat>> = Vec::with_capacity(m);
        let mut rhs = self.rhs.clone();
        let mut flipped = vec![false; m];
        for (i, row) in self.rows.iter().enumerate() {
            let mut t_row = vec![Rat::zero(); n + m];
            t_row[..n].clone_from_slice(row);
            t_row[n + i] = Rat::one();
            tableau.push(t_row);
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        // Rows with negative right-hand side get flipped and an artificial.
        let mut artificial_cols: Vec<usize> = Vec::new();
        for i in 0..m {
            if rhs[i].is_negative() {
                flipped[i] = true;
                for v in tableau[i].iter_mut() {
                    *v = -v.clone();
                }
                rhs[i] = -rhs[i].clone();
                let col = kinds.len();
                kinds.push(VarKind::Artificial(i));
                for (r, row) in tableau.iter_mut().enumerate() {
                    row.push(if r == i { Rat::one() } else { Rat::zero() });
                }
                basis[i] = col;
                artificial_cols.push(col);
            }
        }
        let ncols = kinds.len();

        if !artificial_cols.is_empty() {
            // Phase 1: minimize the sum of artificials.
            let phase1_costs: Vec<Rat> = kinds
                .iter()
                .map(|k| match k {
                    VarKind::Artificial(_) => Rat::one(),
                    _ => Rat::zero(),
                })
                .collect();
            let value = run_simplex(
                &mut tableau,
                &mut rhs,
                &mut basis,
                &phase1_costs,
                &self.var_order,
                &[],
            )?;
            if !value.is_zero() {
                return Err(Error::Inconsistent(
                    "phase-1 optimum nonzero: infeasible program".into(),
                ));
            }
            // Pivot any artificial still basic (at zero) out on a real column.
            for i in 0..m {
                if matches!(kinds[basis[i]], VarKind::Artificial(_)) {
                    let pivot_col = (0..ncols).find(|&j| {
                        !matches!(kinds[j], VarKind::Artificial(_)) && !tableau[i][j].is_zero()
                    });
                    match pivot_col {
                        Some(j) => pivot(&mut tableau, &mut rhs, &mut basis, i, j),
                        None => {
                            return Err(Error::Inconsistent(
                                "redundant row with stuck artificial".into(),
                            ))
                        }
                    }
                }
            }
        }

        // Phase 2: the real objective, artificials banned.
        let mut costs: Vec<Rat> = vec![Rat::zero(); ncols];
        costs[..n].clone_from_slice(&self.costs);
        let banned = artificial_cols;
        let objective = run_simplex(
            &mut tableau,
            &mut rhs,
            &mut basis,
            &costs,
            &self.var_order,
            &banned,
        )?;

        let mut primal = vec![Rat::zero(); n];
        for (i, &b) in basis.iter().enumerate() {
            if let VarKind::Real(j) = kinds[b] {
                primal[j] = rhs[i].clone();
            }
        }
        // Dual values from the slack columns. For a flipped row the stored
        // slack column is -e_i and the stored multiplier also flips sign, so
        // the two cancel: y_i = sum_r c_basis[r] T[r][slack_i] in all cases.
        let _ = flipped;
        let mut dual = Vec::with_capacity(m);
        for i in 0..m {
            let col = n + i;
            let mut z = Rat::zero();
            for (r, &b) in basis.iter().enumerate() {
                if !costs[b].is_zero() && !tableau[r][col].is_zero() {
                    z += &costs[b] * &tableau[r][col];
                }
            }
            dual.push(z);
        }
        Ok(SimplexSolution {
            objective,
            primal,
            dual,
        })
    }
}

/// Runs Bland-rule simplex to optimality on the current tableau; returns
/// the objective value.
fn run_simplex(
    tableau: &mut [Vec<Rat>],
    rhs: &mut [Rat],
    basis: &mut [usize],
    costs: &[Rat],
    var_order: &[usize],
    banned: &[usize],
) -> Result<Rat> {
    let m = tableau.len();
    let ncols = if m == 0 { 0 } else { tableau[0].len() };
    loop {
        // Reduced costs; entering = eligible column with the best
        // (lowest) priority, Bland-style.
        let mut entering: Option<usize> = None;
        for j in 0..ncols {
            if banned.contains(&j) || basis.contains(&j) {
                continue;
            }
            let mut rc = costs[j].clone();
            for (r, &b) in basis.iter().enumerate() {
                if !costs[b].is_zero() && !tableau[r][j].is_zero() {
                    rc -= &(&costs[b] * &tableau[r][j]);
                }
            }
            if rc.is_negative() {
                let better = match entering {
                    None => true,
                    Some(e) => priority(var_order, j) < priority(var_order, e),
                };
                if better {
                    entering = Some(j);
                }
            }
        }
        let Some(e) = entering else {
            let mut obj = Rat::zero();
            for (r, &b) in basis.iter().enumerate() {
                if !costs[b].is_zero() {
                    obj += &costs[b] * &rhs[r];
                }
            }
            return Ok(obj);
        };
        // Ratio test; ties broken by the smallest basis column (Bland).
        let mut leaving: Option<(usize, Rat)> = None;
        for i in 0..m {
            if tableau[i][e].is_positive() {
                let ratio = &rhs[i] / &tableau[i][e];
                let replace = match &leaving {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if replace {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((li, _)) = leaving else {
            return Err(Error::Inconsistent("unbounded program".into()));
        };
        pivot(tableau, rhs, basis, li, e);
    }
}

fn priority(var_order: &[usize], j: usize) -> usize {
    var_order.get(j).copied().unwrap_or(j)
}

#[allow(clippy::needless_range_loop)] // pivot row is read while other rows are written
fn pivot(tableau: &mut [Vec<Rat>], rhs: &mut [Rat], basis: &mut [usize], row: usize, col: usize) {
    let inv = tableau[row][col].recip().expect("pivot entry nonzero");
    for v in tableau[row].iter_mut() {
        *v = &*v * &inv;
    }
    rhs[row] = &rhs[row] * &inv;
    let ncols = tableau[row].len();
    for i in 0..tableau.len() {
        if i == row || tableau[i][col].is_zero() {
            continue;
        }
        let factor = tableau[i][col].clone();
        for j in 0..ncols {
            if !tableau[row][j].is_zero() {
                let t = &tableau[row][j] * &factor;
                tableau[i][j] -= &t;
            }
        }
        let t = &rhs[row] * &factor;
        rhs[i] -= &t;
    }
    basis[row] = col;
}

// ---------------------------------------------------------------------------
// The approximate-degree program over a shape.
// ---------------------------------------------------------------------------

/// Function specification for an instance.
#[derive(Clone, Debug)]
pub enum FnSpec {
    Target(TargetFn),
    /// Per-input labels by table index; `None` marks inputs outside the
    /// promise. Custom tables force an unfolded solve.
    Custom(Vec<Option<i8>>),
}

/// An instance of the degree-`d` approximation program.
#[derive(Clone, Debug)]
pub struct LpInstance {
    pub shape: ProblemShape,
    pub f: FnSpec,
    pub degree: u32,
    /// Fold constraints and variables by the block permutation group.
    pub fold: bool,
    /// Hard cap on the hypercube dimension.
    pub cap_bits: u32,
    /// Alternative entering-variable priority for cross-check re-solves.
    pub pivot_order: PivotOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotOrder {
    Forward,
    Reversed,
}

impl LpInstance {
    pub fn new(shape: ProblemShape, f: TargetFn, degree: u32) -> Self {
        LpInstance {
            shape,
            f: FnSpec::Target(f),
            degree,
            fold: true,
            cap_bits: crate::DEFAULT_LP_CAP_BITS,
            pivot_order: PivotOrder::Forward,
        }
    }
}

/// One input orbit of the folded program (a single input when unfolded).
#[derive(Clone, Debug)]
pub struct InputOrbit {
    /// Representative table, by value multiset.
    pub rep: FunctionInput,
    pub size: u64,
    pub class: OrbitClass,
    /// `Some(+1/-1)` inside the promise, `None` outside.
    pub label: Option<i8>,
}

/// One subset orbit: the parity-basis elements identified by block
/// permutations.
#[derive(Clone, Debug)]
pub struct SubsetOrbit {
    pub members: Vec<u64>,
}

/// Solution of an instance: exact optimum, mutually-certifying primal and
/// dual, and the per-orbit error profile of the optimal polynomial.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub shape: ProblemShape,
    pub degree: u32,
    pub folded: bool,
    pub epsilon_opt: Rat,
    /// Primal coefficient per individual parity subset (orbit-expanded).
    pub primal_coeffs: BTreeMap<u64, Rat>,
    pub input_orbits: Vec<InputOrbit>,
    /// Total signed dual weight per input orbit.
    pub dual_weights: Vec<Rat>,
    /// Total absolute dual mass per input orbit (alpha+beta or gamma+theta).
    pub dual_masses: Vec<Rat>,
    /// Error of the optimal polynomial per orbit: `|p - f|` on the promise,
    /// `|p|` outside it.
    pub orbit_errors: Vec<Rat>,
    pub dual_objective: Rat,
    pub dual_mass_total: Rat,
    /// True when `epsilon_opt = 0`, where the dual degenerates.
    pub degenerate: bool,
}

fn input_orbits(shape: ProblemShape, f: &FnSpec, fold: bool) -> Result<Vec<InputOrbit>> {
    let n = shape.n_points;
    let mut orbits = Vec::new();
    if fold {
        let FnSpec::Target(target) = f else {
            return Err(Error::InvalidParam(
                "custom function tables require an unfolded solve".into(),
            ));
        };
        for multiset in (1..=shape.range).combinations_with_replacement(n as usize) {
            let rep = FunctionInput::new(shape, multiset.clone())?;
            let mut mults: BTreeMap<u32, u64> = BTreeMap::new();
            for &v in &multiset {
                *mults.entry(v).or_insert(0) += 1;
            }
            let mut size = factorial(n as u64);
            for (_, c) in mults {
                size /= factorial(c);
            }
            let class = crate::domain::classify(&rep);
            let label = target_value_of_class(&class, *target)
                .sign()
                .map(|s| s as i8);
            orbits.push(InputOrbit {
                rep,
                size: size.to_u64().expect("orbit size fits u64"),
                class,
                label,
            });
        }
    } else {
        let count = shape.enumerable(1 << 22)?;
        for idx in 0..count {
            let rep = FunctionInput::from_index(shape, idx);
            let class = crate::domain::classify(&rep);
            let label = match f {
                FnSpec::Target(target) => target_value_of_class(&class, *target)
                    .sign()
                    .map(|s| s as i8),
                FnSpec::Custom(labels) => labels
                    .get(idx as usize)
                    .copied()
                    .ok_or_else(|| Error::InvalidParam("custom table too short".into()))?,
            };
            orbits.push(InputOrbit {
                rep,
                size: 1,
                class,
                label,
            });
        }
    }
    Ok(orbits)
}

/// Per-block bit patterns of a subset mask, as a sorted multiset of
/// nonzero patterns; the invariant of the block permutation action.
fn block_signature(mask: u64, n: u32, width: u32) -> Vec<u64> {
    let block = (1u64 << width) - 1;
    let mut sig: Vec<u64> = (0..n)
        .map(|i| (mask >> (i * width)) & block)
        .filter(|&p| p != 0)
        .collect();
    sig.sort_unstable();
    sig
}

fn subset_orbits(shape: ProblemShape, degree: u32, fold: bool) -> Vec<SubsetOrbit> {
    let n_bits = shape.total_bits();
    let mut all: Vec<u64> = Vec::new();
    for d in 0..=degree {
        all.extend(subsets_of_size(n_bits, d));
    }
    if !fold {
        return all
            .into_iter()
            .map(|m| SubsetOrbit { members: vec![m] })
            .collect();
    }
    let mut groups: BTreeMap<Vec<u64>, Vec<u64>> = BTreeMap::new();
    for mask in all {
        let sig = block_signature(mask, shape.n_points, shape.block_bits());
        groups.entry(sig).or_default().push(mask);
    }
    groups
        .into_values()
        .map(|members| SubsetOrbit { members })
        .collect()
}

/// Solves the instance exactly. The returned solution carries an exact
/// strong-duality certificate: the dual objective reconstructed from the
/// extracted multipliers equals the primal optimum, the dual weights
/// satisfy every parity constraint, and complementary slackness holds.
pub fn solve_approx_degree_lp(instance: &LpInstance) -> Result<LpSolution> {
    let shape = instance.shape;
    if shape.total_bits() > instance.cap_bits {
        return Err(Error::LpCapExceeded(shape.total_bits(), instance.cap_bits));
    }
    let orbits = input_orbits(shape, &instance.f, instance.fold)?;
    let s_orbits = subset_orbits(shape, instance.degree, instance.fold);
    let n_vars = 2 * s_orbits.len() + 1; // split coefficients plus epsilon
    let eps_col = 2 * s_orbits.len();

    // Column coefficients: v[orbit][j] = sum over members of chi_S at rep.
    let mut v: Vec<Vec<i64>> = Vec::with_capacity(orbits.len());
    for orbit in &orbits {
        let encoded = orbit.rep.encode_mask();
        let row: Vec<i64> = s_orbits
            .iter()
            .map(|so| {
                so.members
                    .iter()
                    .map(|&m| parity_of_mask(encoded, m) as i64)
                    .sum()
            })
            .collect();
        v.push(row);
    }

    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    // Row bookkeeping: (orbit index, is_upper) where is_upper means the
    // constraint bounding p from above.
    let mut row_info: Vec<(usize, bool)> = Vec::new();
    for (oi, orbit) in orbits.iter().enumerate() {
        // Promise rows: f - eps <= p <= f + eps. Off-promise rows:
        // -(1 + eps) <= p <= 1 + eps.
        let (upper_rhs, lower_rhs) = match orbit.label {
            Some(sign) => (Rat::from_int(sign as i64), Rat::from_int(-(sign as i64))),
            None => (Rat::one(), Rat::one()),
        };
        let mut upper = vec![Rat::zero(); n_vars];
        let mut lower = vec![Rat::zero(); n_vars];
        for (j, &coef) in v[oi].iter().enumerate() {
            if coef != 0 {
                let c = Rat::from_int(coef);
                upper[2 * j] = c.clone();
                upper[2 * j + 1] = -c.clone();
                lower[2 * j] = -c.clone();
                lower[2 * j + 1] = c;
            }
        }
        upper[eps_col] = Rat::from_int(-1);
        lower[eps_col] = Rat::from_int(-1);
        rows.push(upper);
        rhs.push(upper_rhs);
        row_info.push((oi, true));
        rows.push(lower);
        rhs.push(lower_rhs);
        row_info.push((oi, false));
    }

    let mut costs = vec![Rat::zero(); n_vars];
    costs[eps_col] = Rat::one();
    let var_order: Vec<usize> = match instance.pivot_order {
        PivotOrder::Forward => (0..n_vars + rows.len()).collect(),
        PivotOrder::Reversed => {
            let total = n_vars + rows.len();
            (0..total).map(|j| total - 1 - j).collect()
        }
    };
    let problem = SimplexProblem {
        costs,
        rows,
        rhs,
        var_order,
    };
    let solution = problem.solve()?;
    let epsilon_opt = solution.objective.clone();

    // Primal: orbit coefficient c_j applies to every member subset.
    let mut primal_coeffs: BTreeMap<u64, Rat> = BTreeMap::new();
    for (j, so) in s_orbits.iter().enumerate() {
        let c = &solution.primal[2 * j] - &solution.primal[2 * j + 1];
        if c.is_zero() {
            continue;
        }
        for &m in &so.members {
            primal_coeffs.insert(m, c.clone());
        }
    }

    // Dual: multipliers are <= 0 per row; alpha = -y_upper, beta = -y_lower.
    let mut dual_weights = vec![Rat::zero(); orbits.len()];
    let mut dual_masses = vec![Rat::zero(); orbits.len()];
    let mut dual_objective = Rat::zero();
    for (ri, (oi, is_upper)) in row_info.iter().enumerate() {
        let y = &solution.dual[ri];
        if y.is_positive() {
            return Err(Error::Inconsistent(
                "dual multiplier has the wrong sign".into(),
            ));
        }
        let mult = -y.clone(); // alpha (upper) or beta (lower), nonnegative
        if mult.is_zero() {
            continue;
        }
        dual_masses[*oi] += &mult;
        // phi = beta - alpha on the promise; theta - gamma outside. The
        // lower row carries beta/theta.
        if *is_upper {
            dual_weights[*oi] -= &mult;
        } else {
            dual_weights[*oi] += &mult;
        }
    }
    for (oi, orbit) in orbits.iter().enumerate() {
        match orbit.label {
            Some(sign) => {
                dual_objective += &dual_weights[oi] * &Rat::from_int(sign as i64);
            }
            None => {
                dual_objective -= &dual_masses[oi];
            }
        }
    }
    if dual_objective != epsilon_opt {
        return Err(Error::Inconsistent(format!(
            "strong duality violated: dual {dual_objective} vs primal {epsilon_opt}"
        )));
    }
    let mut dual_mass_total = Rat::zero();
    for mass in &dual_masses {
        dual_mass_total += mass;
    }
    if dual_mass_total > Rat::one() {
        return Err(Error::Inconsistent("dual mass exceeds one".into()));
    }
    let degenerate = epsilon_opt.is_zero();
    if !degenerate && dual_mass_total != Rat::one() {
        return Err(Error::Inconsistent(
            "nondegenerate optimum with slack dual mass".into(),
        ));
    }

    // Parity constraints of the dual, verified exactly per subset orbit.
    for (j, _so) in s_orbits.iter().enumerate() {
        let mut acc = Rat::zero();
        for (oi, w) in dual_weights.iter().enumerate() {
            if !w.is_zero() && v[oi][j] != 0 {
                acc += w * &Rat::from_int(v[oi][j]);
            }
        }
        if !acc.is_zero() {
            return Err(Error::Inconsistent(
                "dual violates a parity constraint".into(),
            ));
        }
    }

    // Per-orbit errors of the optimal polynomial and complementary
    // slackness: positive mass only on rows that are exactly tight.
    let eval = |x: &FunctionInput| -> Rat {
        let encoded = x.encode_mask();
        let mut acc = Rat::zero();
        for (&mask, c) in &primal_coeffs {
            acc += c * &Rat::from_int(parity_of_mask(encoded, mask) as i64);
        }
        acc
    };
    let mut orbit_errors = Vec::with_capacity(orbits.len());
    for orbit in &orbits {
        let p = eval(&orbit.rep);
        let err = match orbit.label {
            Some(sign) => (p - Rat::from_int(sign as i64)).abs(),
            None => p.abs(),
        };
        orbit_errors.push(err);
    }
    for (ri, (oi, is_upper)) in row_info.iter().enumerate() {
        if solution.dual[ri].is_zero() {
            continue;
        }
        let p = eval(&orbits[*oi].rep);
        let row_rhs = match (orbits[*oi].label, *is_upper) {
            (Some(sign), true) => Rat::from_int(sign as i64),
            (Some(sign), false) => Rat::from_int(-(sign as i64)),
            (None, _) => Rat::one(),
        };
        let lhs = if *is_upper { p } else { -p };
        if lhs != &row_rhs + &epsilon_opt {
            return Err(Error::Inconsistent(
                "complementary slackness violated: dual mass on a slack row".into(),
            ));
        }
    }

    Ok(LpSolution {
        shape,
        degree: instance.degree,
        folded: instance.fold,
        epsilon_opt,
        primal_coeffs,
        input_orbits: orbits,
        dual_weights,
        dual_masses,
        orbit_errors,
        dual_objective,
        dual_mass_total,
        degenerate,
    })
}

impl LpSolution {
    /// The unfolded dual value at a single input of an orbit.
    pub fn dual_point_weight(&self, orbit_index: usize) -> Rat {
        let size = Rat::from_int(self.input_orbits[orbit_index].size as i64);
        self.dual_weights[orbit_index]
            .checked_div(&size)
            .expect("orbit size positive")
    }

    /// Evaluates the optimal polynomial at an arbitrary input.
    pub fn eval_primal(&self, x: &FunctionInput) -> Rat {
        let encoded = x.encode_mask();
        let mut acc = Rat::zero();
        for (&mask, c) in &self.primal_coeffs {
            acc += c * &Rat::from_int(parity_of_mask(encoded, mask) as i64);
        }
        acc
    }

    /// The maximal error over all orbits: `epsilon` on the promise, and the
    /// allowance `1 + epsilon` outside it is reported as the excess over 1.
    pub fn max_error(&self) -> Rat {
        let mut best = Rat::zero();
        for (oi, err) in self.orbit_errors.iter().enumerate() {
            let effective = match self.input_orbits[oi].label {
                Some(_) => err.clone(),
                None => {
                    let excess = err - &Rat::one();
                    if excess.is_negative() {
                        Rat::zero()
                    } else {
                        excess
                    }
                }
            };
            if effective > best {
                best = effective;
            }
        }
        best
    }
}

/// One row of the maximum-error report.
#[derive(Clone, Debug)]
pub struct MaxErrorRow {
    pub class: OrbitClass,
    pub rep_values: Vec<u32>,
    pub orbit_size: u64,
    pub error: Rat,
    pub is_max: bool,
    pub dual_mass: Rat,
}

/// Maximum-error points of the optimal polynomial, annotated with orbit
/// classes, plus the fraction of dual L1 mass on near-maximum-error orbits.
#[derive(Clone, Debug)]
pub struct MaxErrorReport {
    pub rows: Vec<MaxErrorRow>,
    pub max_error_on_promise: Rat,
    /// Dual mass fraction on orbits whose error is at least
    /// `threshold * max`, by the promise/off-promise allowance.
    pub near_max_mass_fraction: Rat,
    /// Every orbit with nonzero dual weight attains its bound exactly.
    pub slackness_exact: bool,
    pub degenerate: bool,
}

pub fn max_error_report(solution: &LpSolution, threshold: &Rat) -> MaxErrorReport {
    let eps = &solution.epsilon_opt;
    let mut rows = Vec::new();
    let mut max_promise = Rat::zero();
    for (oi, orbit) in solution.input_orbits.iter().enumerate() {
        if orbit.label.is_some() && solution.orbit_errors[oi] > max_promise {
            max_promise = solution.orbit_errors[oi].clone();
        }
        let bound = match orbit.label {
            Some(_) => eps.clone(),
            None => Rat::one() + eps,
        };
        rows.push(MaxErrorRow {
            class: orbit.class.clone(),
            rep_values: orbit.rep.values.clone(),
            orbit_size: orbit.size,
            error: solution.orbit_errors[oi].clone(),
            is_max: solution.orbit_errors[oi] == bound,
            dual_mass: solution.dual_masses[oi].clone(),
        });
    }
    let mut near_mass = Rat::zero();
    let mut slackness_exact = true;
    for (oi, orbit) in solution.input_orbits.iter().enumerate() {
        let bound = match orbit.label {
            Some(_) => eps.clone(),
            None => Rat::one() + eps,
        };
        let near = solution.orbit_errors[oi] >= threshold * &bound;
        if near {
            near_mass += &solution.dual_masses[oi];
        }
        if !solution.dual_masses[oi].is_zero() && solution.orbit_errors[oi] != bound {
            slackness_exact = false;
        }
    }
    let fraction = if solution.dual_mass_total.is_zero() {
        Rat::zero()
    } else {
        near_mass / &solution.dual_mass_total
    };
    MaxErrorReport {
        rows,
        max_error_on_promise: max_promise,
        near_max_mass_fraction: fraction,
        slackness_exact,
        degenerate: solution.degenerate,
    }
}

/// Lower bound certified by a witness: its correlation over its L1 norm.
/// Weak duality puts it at or below the LP optimum at any degree the
/// witness's parity sums are verified for.
pub fn witness_certified_epsilon(witness: &crate::witness::DualWitness, f: TargetFn) -> Rat {
    let l1 = witness.l1_norm();
    if l1.is_zero() {
        return Rat::zero();
    }
    witness.correlation(f) / &l1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ParityTable;
    use crate::witness::{pure_high_degree_exact, DualWitness, WitnessMeta};

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n, d).unwrap()
    }

    fn shape(n: u32, r: u32) -> ProblemShape {
        ProblemShape::new(n, r).unwrap()
    }

    #[test]
    fn simplex_known_optimum() {
        // min -x - y s.t. x + y <= 2, x <= 1, y <= 3/2, x,y >= 0
        // optimum at (1, 1): objective -2.
        let problem = SimplexProblem {
            costs: vec![Rat::from_int(-1), Rat::from_int(-1)],
            rows: vec![
                vec![Rat::one(), Rat::one()],
                vec![Rat::one(), Rat::zero()],
                vec![Rat::zero(), Rat::one()],
            ],
            rhs: vec![Rat::from_int(2), Rat::one(), rat(3, 2)],
            var_order: (0..5).collect(),
        };
        let sol = problem.solve().unwrap();
        assert_eq!(sol.objective, Rat::from_int(-2));
        assert_eq!(sol.primal, vec![Rat::one(), Rat::one()]);
        // Strong duality: b . y = objective.
        let b = [Rat::from_int(2), Rat::one(), rat(3, 2)];
        let mut dual_obj = Rat::zero();
        for (bi, yi) in b.iter().zip(&sol.dual) {
            dual_obj += bi * yi;
        }
        assert_eq!(dual_obj, sol.objective);
    }

    #[test]
    fn simplex_with_negative_rhs() {
        // min x s.t. -x <= -3 (i.e. x >= 3): optimum 3, dual y = -1.
        let problem = SimplexProblem {
            costs: vec![Rat::one()],
            rows: vec![vec![Rat::from_int(-1)]],
            rhs: vec![Rat::from_int(-3)],
            var_order: (0..2).collect(),
        };
        let sol = problem.solve().unwrap();
        assert_eq!(sol.objective, Rat::from_int(3));
        assert_eq!(sol.dual, vec![Rat::from_int(-1)]);
    }

    #[test]
    fn full_degree_interpolates_any_total_function() {
        let sh = shape(2, 2);
        let mut inst = LpInstance::new(sh, TargetFn::Ed, 2);
        inst.fold = false;
        let sol = solve_approx_degree_lp(&inst).unwrap();
        assert!(sol.epsilon_opt.is_zero());
        assert!(sol.degenerate);
    }

    #[test]
    fn dictator_function_is_degree_one() {
        // Custom table: f(x) = first bit of the encoding.
        let sh = shape(2, 2);
        let labels: Vec<Option<i8>> = (0..4)
            .map(|idx| {
                let x = FunctionInput::from_index(sh, idx);
                Some(if x.encode_mask() & 1 == 1 { -1 } else { 1 })
            })
            .collect();
        let inst = LpInstance {
            shape: sh,
            f: FnSpec::Custom(labels),
            degree: 1,
            fold: false,
            cap_bits: 14,
            pivot_order: PivotOrder::Forward,
        };
        let sol = solve_approx_degree_lp(&inst).unwrap();
        assert!(sol.epsilon_opt.is_zero());
    }

    #[test]
    fn folded_matches_unfolded_at_n3() {
        let sh = shape(3, 4);
        for f in [TargetFn::Collision, TargetFn::Ed] {
            for d in 0..=1u32 {
                let folded = solve_approx_degree_lp(&LpInstance::new(sh, f, d)).unwrap();
                let mut inst = LpInstance::new(sh, f, d);
                inst.fold = false;
                let unfolded = solve_approx_degree_lp(&inst).unwrap();
                assert_eq!(
                    folded.epsilon_opt, unfolded.epsilon_opt,
                    "{f} at degree {d}"
                );
            }
        }
    }

    #[test]
    fn pivot_order_does_not_change_optimum() {
        let sh = shape(4, 4);
        for d in 0..=2u32 {
            let forward =
                solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Collision, d)).unwrap();
            let mut inst = LpInstance::new(sh, TargetFn::Collision, d);
            inst.pivot_order = PivotOrder::Reversed;
            let reversed = solve_approx_degree_lp(&inst).unwrap();
            assert_eq!(forward.epsilon_opt, reversed.epsilon_opt, "degree {d}");
        }
    }

    #[test]
    fn collision_epsilons_at_tiny_shape() {
        // Frozen against an independent unfolded float solve: the optimum
        // stays at the trivial error 1 through degree 3 and collapses to 0
        // at degree 4, where the promise admits exact interpolation.
        let sh = shape(4, 4);
        for d in 0..=3u32 {
            let sol = solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Collision, d)).unwrap();
            assert_eq!(sol.epsilon_opt, Rat::one(), "degree {d}");
        }
        let full = solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Collision, 4)).unwrap();
        assert!(full.epsilon_opt.is_zero());
    }

    #[test]
    fn folded_dual_unfolds_to_exact_witness_constraints() {
        // The unfolded dual weights must satisfy every individual parity
        // constraint, not just orbit sums.
        let sh = shape(3, 4);
        let sol = solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Ed, 1)).unwrap();
        assert!(!sol.degenerate);
        let n_bits = sh.total_bits();
        for d in 0..=1u32 {
            for mask in subsets_of_size(n_bits, d) {
                let mut acc = Rat::zero();
                for (oi, orbit) in sol.input_orbits.iter().enumerate() {
                    if sol.dual_weights[oi].is_zero() {
                        continue;
                    }
                    let point = sol.dual_point_weight(oi);
                    // Sum chi_S over the orbit of the representative.
                    let mut orbit_sum = 0i64;
                    let mut seen = std::collections::BTreeSet::new();
                    let vals = &orbit.rep.values;
                    let n = vals.len();
                    let mut perm: Vec<usize> = (0..n).collect();
                    loop {
                        let permuted: Vec<u32> = perm.iter().map(|&i| vals[i]).collect();
                        if seen.insert(permuted.clone()) {
                            let x = FunctionInput::new(sh, permuted).unwrap();
                            orbit_sum += x.parity(mask) as i64;
                        }
                        if !next_permutation(&mut perm) {
                            break;
                        }
                    }
                    acc += &point * &Rat::from_int(orbit_sum);
                }
                assert!(acc.is_zero(), "parity {mask:#b} broken");
            }
        }
    }

    fn next_permutation(perm: &mut [usize]) -> bool {
        let n = perm.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
        true
    }

    #[test]
    fn oracle_dominates_constructed_witness() {
        let sh = shape(4, 4);
        let main = crate::collision::build_main_collision_dual(sh, &rat(1, 20), 2).unwrap();
        let table = ParityTable::build(sh, 1, 1 << 20).unwrap();
        assert!(pure_high_degree_exact(&main.psi, 1, &table)
            .unwrap()
            .passed());
        let certified = witness_certified_epsilon(&main.psi, TargetFn::Collision);
        let opt = solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Collision, 1))
            .unwrap()
            .epsilon_opt;
        assert!(certified <= opt, "witness {certified} vs oracle {opt}");
    }

    #[test]
    fn oracle_dominates_reduced_ed_witness() {
        // The averaged witness over 3 of 4 blocks, against the ED oracle at
        // its exhaustively verified degree.
        let sh = shape(4, 4);
        let main = crate::collision::build_main_collision_dual(sh, &rat(1, 20), 2).unwrap();
        let reduced = crate::ed::ed_dual_from_collision(&main.psi, 3, 1 << 20).unwrap();
        let m_shape = shape(3, 4);
        let table = ParityTable::build(m_shape, 1, 1 << 20).unwrap();
        assert!(pure_high_degree_exact(&reduced.witness, 1, &table)
            .unwrap()
            .passed());
        let certified = witness_certified_epsilon(&reduced.witness, TargetFn::Ed);
        let opt = solve_approx_degree_lp(&LpInstance::new(m_shape, TargetFn::Ed, 1))
            .unwrap()
            .epsilon_opt;
        assert!(
            certified <= opt,
            "reduced witness {certified} vs oracle {opt}"
        );
    }

    #[test]
    fn cap_exceeded_is_reported() {
        let sh = shape(6, 8); // 18 bits, above the default 14-bit cap
        let err = solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Collision, 0));
        assert!(matches!(err, Err(crate::Error::LpCapExceeded(18, 14))));
    }

    #[test]
    fn max_error_report_flags() {
        let sh = shape(4, 4);
        let sol = solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Collision, 2)).unwrap();
        let report = max_error_report(&sol, &rat(99, 100));
        assert!(report.slackness_exact);
        assert!(!report.degenerate);
        // All dual mass sits on maximum-error orbits at the optimum.
        assert_eq!(report.near_max_mass_fraction, Rat::one());

        let degenerate_sol = {
            let mut inst = LpInstance::new(shape(2, 2), TargetFn::Ed, 2);
            inst.fold = false;
            solve_approx_degree_lp(&inst).unwrap()
        };
        let degenerate_report = max_error_report(&degenerate_sol, &rat(99, 100));
        assert!(degenerate_report.degenerate);
    }

    #[test]
    fn certificate_soundness_against_oracle() {
        // A witness passing verification at (epsilon, d) implies the LP
        // optimum at degree d is at least epsilon.
        let sh = shape(3, 4);
        let mut masses = BTreeMap::new();
        masses.insert(OrbitClass::KToOne { k: 1 }, rat(1, 2));
        masses.insert(OrbitClass::KToOne { k: 3 }, rat(-1, 2));
        let w = DualWitness::from_masses(sh, masses, WitnessMeta::default()).unwrap();
        let eps = rat(9, 10);
        let report = crate::witness::verify_certificate(
            &w,
            TargetFn::Ed,
            &eps,
            1,
            crate::witness::VerifyMode::Exact,
            1 << 20,
        )
        .unwrap();
        assert!(report.verdict);
        let opt = solve_approx_degree_lp(&LpInstance::new(sh, TargetFn::Ed, 1))
            .unwrap()
            .epsilon_opt;
        assert!(opt >= eps);
    }
}
