//! Subcommand implementations.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand};
use serde::Serialize;

use apxdeg::collision::{
    build_main_collision_dual, build_psi_table, build_weak_collision_dual, weak_witness_omega,
};
use apxdeg::domain::{ParityTable, ProblemShape, TargetFn};
use apxdeg::ed::ed_dual_from_collision;
use apxdeg::lp::{max_error_report, solve_approx_degree_lp, witness_certified_epsilon, LpInstance};
use apxdeg::numerics::Rat;
use apxdeg::symmetrize::{alias_consistency, fit_and_check_trivariate};
use apxdeg::upper::{
    measure_class_errors, measure_ed_formula_errors, pairwise_ed_approximant,
    refined_collision_approximant, standard_collision_approximant, worst_promise_error, Evaluate,
};
use apxdeg::witness::{
    measure_phd_exhaustive, verify_certificate, witness_from_json, witness_to_json, DualWitness,
    VerifyMode,
};

use crate::config::RunConfig;
use crate::output;

/// Maps core errors to (stderr tag, exit code): 2 usage/precondition,
/// 3 budget.
pub fn classify_error(e: &anyhow::Error) -> (&'static str, u8) {
    if let Some(core) = e.downcast_ref::<apxdeg::Error>() {
        match core {
            apxdeg::Error::BudgetExceeded { .. } => ("budget", 3),
            apxdeg::Error::LpCapExceeded(..) => ("budget", 3),
            _ => ("precondition", 2),
        }
    } else {
        ("usage", 2)
    }
}

fn parse_rat(s: &str) -> Result<Rat> {
    s.parse::<Rat>()
        .map_err(|e| anyhow!("bad rational '{s}': {e}"))
}

fn parse_function(s: &str) -> Result<TargetFn> {
    match s {
        "collision" => Ok(TargetFn::Collision),
        "ed" => Ok(TargetFn::Ed),
        other => bail!("unknown function '{other}' (expected collision or ed)"),
    }
}

/// Measures pure high degree by full enumeration when the shape fits the
/// budget; returns `None` (not an error) when it does not.
fn try_measure_phd(witness: &DualWitness, cap: u32, budget: u64) -> Result<Option<i64>> {
    match ParityTable::build(witness.shape, cap, budget) {
        Ok(table) => {
            let (d, _) = measure_phd_exhaustive(witness, cap, &table)?;
            Ok(Some(d))
        }
        Err(apxdeg::Error::BudgetExceeded { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Subcommand)]
#[allow(clippy::enum_variant_names)] // variant names are the subcommand names
pub enum ConstructKind {
    /// Weight the k-to-1 classes at N = L! by an OR-style dual.
    WeakCollision {
        #[arg(long = "L", alias = "l")]
        l: u32,
        #[arg(long = "R", alias = "r")]
        r: u32,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The table-based dual at N a multiple of 4.
    MainCollision {
        #[arg(long = "N", alias = "n")]
        n: u32,
        #[arg(long = "R", alias = "r")]
        r: u32,
        #[arg(long)]
        delta: Option<String>,
        /// Cap on the fiber sizes in the table; defaults to min(N, 4).
        #[arg(long = "K", alias = "k")]
        k: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average a Collision witness over extensions down to M blocks.
    EdFromCollision {
        #[arg(long)]
        source: PathBuf,
        #[arg(long = "M", alias = "m")]
        m: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn construct(kind: ConstructKind, config: &RunConfig) -> Result<ExitCode> {
    let (mut witness, out) = match kind {
        ConstructKind::WeakCollision { l, r, delta, out } => {
            let delta = parse_rat(&delta)?;
            (build_weak_collision_dual(l, r, &delta)?, out)
        }
        ConstructKind::MainCollision {
            n,
            r,
            delta,
            k,
            out,
        } => {
            let delta = match delta.or_else(|| config.delta.clone()) {
                Some(s) => parse_rat(&s)?,
                None => Rat::new(1, 20)?,
            };
            let k_cap = k.or(config.k_cap).unwrap_or_else(|| n.min(4));
            let shape = ProblemShape::new(n, r)?;
            (build_main_collision_dual(shape, &delta, k_cap)?.psi, out)
        }
        ConstructKind::EdFromCollision { source, m, out } => {
            let text = std::fs::read_to_string(&source)
                .with_context(|| format!("reading {}", source.display()))?;
            let psi = witness_from_json(&text)?;
            (ed_dual_from_collision(&psi, m, config.budget)?.witness, out)
        }
    };
    witness.meta.measured_phd = try_measure_phd(&witness, 3, config.budget)?;
    output::write_output(out.as_deref(), &witness_to_json(&witness))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Witness JSON path.
    pub witness: PathBuf,
    #[arg(long)]
    pub function: String,
    /// Claimed correlation bound epsilon, as "p/q".
    #[arg(long)]
    pub epsilon: String,
    /// Degree to verify pure high degree to.
    #[arg(long)]
    pub degree: u32,
    #[arg(long, default_value = "exact")]
    pub mode: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerifyReportWire {
    #[serde(flatten)]
    report: apxdeg::witness::CertificateReport,
    /// Present in conditional mode: exactly measured degrees of the
    /// univariate duals behind the construction; the pure-high-degree claim
    /// rests on them through the trivariate symmetrization identity.
    #[serde(skip_serializing_if = "Option::is_none")]
    conditional_basis: Option<ConditionalBasis>,
}

#[derive(Serialize)]
struct ConditionalBasis {
    label: String,
    omega_achieved_phd: Option<i64>,
    eta_achieved_phd_min: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<apxdeg::univariate::UnivariateDualWire>,
}

pub fn verify(args: VerifyArgs, config: &RunConfig) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.witness)
        .with_context(|| format!("reading {}", args.witness.display()))?;
    let witness = witness_from_json(&text)?;
    let f = parse_function(&args.function)?;
    let epsilon = parse_rat(&args.epsilon)?;
    let mode = match args.mode.as_str() {
        "exact" => VerifyMode::Exact,
        "conditional" => VerifyMode::Conditional,
        other => bail!("unknown mode '{other}' (expected exact or conditional)"),
    };
    let report = match verify_certificate(&witness, f, &epsilon, args.degree, mode, config.budget) {
        Ok(r) => r,
        Err(e @ apxdeg::Error::BudgetExceeded { .. }) => {
            return Err(anyhow::Error::from(e)
                .context("exact verification needs to enumerate the whole input space; try --mode conditional"));
        }
        Err(e) => return Err(e.into()),
    };
    let conditional_basis = if mode == VerifyMode::Conditional {
        Some(conditional_basis(&witness)?)
    } else {
        None
    };
    let verdict = report.verdict;
    let wire = VerifyReportWire {
        report,
        conditional_basis,
    };
    output::write_output(args.out.as_deref(), &output::to_pretty_json(&wire))?;
    Ok(if verdict {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn conditional_basis(witness: &DualWitness) -> Result<ConditionalBasis> {
    let label =
        "pure high degree not enumerated; rests on the univariate moment identities through \
         the trivariate symmetrization of orbit averages"
            .to_string();
    match witness.meta.construction.as_str() {
        "weak-collision" => {
            let omega = weak_witness_omega(witness)?;
            Ok(ConditionalBasis {
                label,
                omega_achieved_phd: Some(omega.dual.achieved_phd),
                eta_achieved_phd_min: None,
                omega: Some((&omega.dual).into()),
            })
        }
        "main-collision" => {
            let delta = witness
                .meta
                .delta
                .clone()
                .ok_or_else(|| anyhow!("witness metadata lacks delta"))?;
            let k_cap = witness
                .meta
                .k_cap
                .ok_or_else(|| anyhow!("witness metadata lacks the table cap"))?;
            let table = build_psi_table(witness.shape.n_points, &delta, k_cap)?;
            let eta_min = table.etas.values().map(|eta| eta.dual.achieved_phd).min();
            Ok(ConditionalBasis {
                label,
                omega_achieved_phd: Some(table.omega.dual.achieved_phd),
                eta_achieved_phd_min: eta_min,
                omega: Some((&table.omega.dual).into()),
            })
        }
        _ => Ok(ConditionalBasis {
            label: "no univariate basis is recorded for this construction".into(),
            omega_achieved_phd: None,
            eta_achieved_phd_min: None,
            omega: None,
        }),
    }
}

#[derive(Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub function: String,
    #[arg(long = "N", alias = "n")]
    pub n: u32,
    #[arg(long = "R", alias = "r")]
    pub r: u32,
    /// Comma-separated degrees, e.g. "0,1,2".
    #[arg(long, alias = "d", default_value = "0,1,2")]
    pub degrees: String,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub fold: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Near-maximum threshold for the error report, as "p/q".
    #[arg(long, default_value = "99/100")]
    pub threshold: String,
}

#[derive(Serialize)]
struct OracleReportWire {
    solutions: Vec<output::LpSolutionWire>,
    max_error_reports: Vec<output::MaxErrorReportWire>,
}

fn parse_degrees(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<u32>()
                .map_err(|e| anyhow!("bad degree '{part}': {e}"))
        })
        .collect()
}

pub fn oracle(args: OracleArgs, config: &RunConfig) -> Result<ExitCode> {
    let shape = ProblemShape::new(args.n, args.r)?;
    let f = parse_function(&args.function)?;
    let threshold = parse_rat(&args.threshold)?;
    let mut solutions = Vec::new();
    let mut reports = Vec::new();
    let mut csv_rows = Vec::new();
    for degree in parse_degrees(&args.degrees)? {
        let mut instance = LpInstance::new(shape, f, degree);
        instance.fold = args.fold;
        instance.cap_bits = config.lp_cap_bits;
        let solution = solve_approx_degree_lp(&instance)?;
        csv_rows.push((degree, solution.epsilon_opt.clone()));
        reports.push(output::MaxErrorReportWire::from_report(&max_error_report(
            &solution, &threshold,
        )));
        solutions.push(output::LpSolutionWire::from_solution(&solution));
    }
    if let Some(csv) = &args.csv {
        output::write_output(Some(csv), &output::epsilon_csv(&csv_rows))?;
    }
    let wire = OracleReportWire {
        solutions,
        max_error_reports: reports,
    };
    output::write_output(args.out.as_deref(), &output::to_pretty_json(&wire))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct SandwichArgs {
    #[arg(long = "N", alias = "n")]
    pub n: u32,
    #[arg(long = "R", alias = "r")]
    pub r: u32,
    #[arg(long, alias = "d", default_value = "0,1,2")]
    pub degrees: String,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long = "K", alias = "k")]
    pub k: Option<u32>,
    /// Subset size of the comparison approximant.
    #[arg(long, default_value_t = 1)]
    pub approx_r: u32,
    /// Chebyshev degree of the comparison approximant.
    #[arg(long, default_value_t = 3)]
    pub approx_d: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct SandwichRow {
    degree: u32,
    /// Best certified lower bound among witnesses verified to this degree.
    eps_lo: Option<Rat>,
    eps_opt: Rat,
    /// Exhaustive promise error of the comparison approximant.
    eps_hi: Rat,
    approx_degree_bits: u32,
    /// eps_lo <= eps_opt (weak duality), when a witness applies.
    lower_ok: bool,
    /// eps_opt <= eps_hi, asserted only when the approximant's bit degree
    /// is at most this row's degree.
    upper_applicable: bool,
    upper_ok: bool,
}

#[derive(Serialize)]
struct SandwichReport {
    #[serde(rename = "N")]
    n_points: u32,
    #[serde(rename = "R")]
    range: u32,
    witness_certified_eps: Rat,
    witness_measured_phd: i64,
    rows: Vec<SandwichRow>,
    all_ok: bool,
}

pub fn sandwich(args: SandwichArgs, config: &RunConfig) -> Result<ExitCode> {
    let shape = ProblemShape::new(args.n, args.r)?;
    let delta = match args.delta.or_else(|| config.delta.clone()) {
        Some(s) => parse_rat(&s)?,
        None => Rat::new(1, 20)?,
    };
    let k_cap = args.k.or(config.k_cap).unwrap_or_else(|| args.n.min(4));
    let degrees = parse_degrees(&args.degrees)?;
    let max_degree = degrees.iter().copied().max().unwrap_or(0);

    let main = build_main_collision_dual(shape, &delta, k_cap)?;
    let table = ParityTable::build(shape, max_degree.max(2), config.budget)?;
    let (measured_phd, _) = measure_phd_exhaustive(&main.psi, max_degree.max(2), &table)?;
    let certified = witness_certified_epsilon(&main.psi, TargetFn::Collision);

    let approximant = standard_collision_approximant(shape, args.approx_r, args.approx_d)?;
    let rows_err = measure_class_errors(&approximant, shape, TargetFn::Collision, config.budget)?;
    let eps_hi = worst_promise_error(&rows_err);
    let approx_bits = approximant.meta().claimed_degree_bits;

    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut csv_rows = String::from("d,eps_lo,eps_opt,eps_hi,approx_degree_bits\n");
    for degree in degrees {
        let mut instance = LpInstance::new(shape, TargetFn::Collision, degree);
        instance.cap_bits = config.lp_cap_bits;
        let eps_opt = solve_approx_degree_lp(&instance)?.epsilon_opt;
        let eps_lo = (measured_phd >= degree as i64).then(|| certified.clone());
        let lower_ok = eps_lo.as_ref().is_none_or(|lo| lo <= &eps_opt);
        let upper_applicable = approx_bits <= degree;
        let upper_ok = !upper_applicable || eps_opt <= eps_hi;
        all_ok &= lower_ok && upper_ok;
        csv_rows.push_str(&format!(
            "{degree},{},{eps_opt},{eps_hi},{approx_bits}\n",
            eps_lo.as_ref().map(Rat::to_string).unwrap_or_default()
        ));
        rows.push(SandwichRow {
            degree,
            eps_lo,
            eps_opt,
            eps_hi: eps_hi.clone(),
            approx_degree_bits: approx_bits,
            lower_ok,
            upper_applicable,
            upper_ok,
        });
    }
    if let Some(csv) = &args.csv {
        output::write_output(Some(csv), &csv_rows)?;
    }
    let report = SandwichReport {
        n_points: args.n,
        range: args.r,
        witness_certified_eps: certified,
        witness_measured_phd: measured_phd,
        rows,
        all_ok,
    };
    output::write_output(args.out.as_deref(), &output::to_pretty_json(&report))?;
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Args)]
pub struct SymcheckArgs {
    #[arg(long = "N", alias = "n")]
    pub n: u32,
    #[arg(long = "R", alias = "r")]
    pub r: u32,
    #[arg(long, default_value_t = 3)]
    pub max_s: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SymcheckEntry {
    subset_bits: Vec<u32>,
    degree: u32,
    exact: bool,
    alias_consistent: bool,
    coefficients: Vec<SymCoeff>,
}

#[derive(Serialize)]
struct SymCoeff {
    exponents: [u32; 3],
    coeff: Rat,
}

#[derive(Serialize)]
struct SymcheckReport {
    #[serde(rename = "N")]
    n_points: u32,
    #[serde(rename = "R")]
    range: u32,
    max_s: u32,
    constraints: usize,
    entries: Vec<SymcheckEntry>,
    all_pass: bool,
}

pub fn symcheck(args: SymcheckArgs, config: &RunConfig) -> Result<ExitCode> {
    let shape = ProblemShape::new(args.n, args.r)?;
    let table = ParityTable::build(shape, args.max_s, config.budget)?;
    let mut entries = Vec::new();
    let mut all_pass = true;
    let mut constraints = 0;
    for degree in 0..=args.max_s {
        for &mask in &table.subsets[degree as usize] {
            let fit = fit_and_check_trivariate(mask, degree, shape, &table)?;
            let alias_ok = alias_consistency(&fit.polynomial, shape, &table, mask)?;
            all_pass &= fit.exact && alias_ok;
            constraints = fit.constraints;
            entries.push(SymcheckEntry {
                subset_bits: (0..64).filter(|i| mask >> i & 1 == 1).collect(),
                degree,
                exact: fit.exact,
                alias_consistent: alias_ok,
                coefficients: fit
                    .polynomial
                    .coefficients
                    .iter()
                    .map(|(&(i, j, k), c)| SymCoeff {
                        exponents: [i, j, k],
                        coeff: c.clone(),
                    })
                    .collect(),
            });
        }
    }
    let report = SymcheckReport {
        n_points: args.n,
        range: args.r,
        max_s: args.max_s,
        constraints,
        entries,
        all_pass,
    };
    output::write_output(args.out.as_deref(), &output::to_pretty_json(&report))?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Subcommand)]
pub enum UpperboundKind {
    /// Subset-averaged Collision approximant with explicit parameters.
    Collision {
        #[arg(long = "N", alias = "n")]
        n: u32,
        #[arg(long = "R", alias = "r")]
        r: u32,
        #[arg(long, default_value_t = 1)]
        subset_size: u32,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_meta: Option<PathBuf>,
    },
    /// Refined Collision approximant for delta <= 1/N.
    CollisionRefined {
        #[arg(long = "N", alias = "n")]
        n: u32,
        #[arg(long = "R", alias = "r")]
        r: u32,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = 2)]
        growth_const: u32,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_meta: Option<PathBuf>,
    },
    /// Pairwise-distinctness ED formula, measured against 1 - 1/M^2.
    Ed {
        #[arg(long = "M", alias = "m")]
        m: u32,
        #[arg(long = "R", alias = "r")]
        r: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ApproximantMetaWire {
    name: String,
    subset_size: u32,
    chebyshev_degree: u32,
    horizon: Rat,
    sign: i32,
    claimed_degree_bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    raw_subset_size: Option<u32>,
    window_zero_ok: Option<bool>,
    window_band_ok: Option<bool>,
    window_bounded_ok: Option<bool>,
    worst_promise_error: Rat,
    /// Float rendering of the error, for reading convenience only.
    worst_promise_error_approx: f64,
}

fn approximant_report(
    approximant: &dyn Evaluate,
    shape: ProblemShape,
    budget: u64,
    out_csv: Option<&std::path::Path>,
    out_meta: Option<&std::path::Path>,
) -> Result<()> {
    let rows = measure_class_errors(approximant, shape, TargetFn::Collision, budget)?;
    let eps = worst_promise_error(&rows);
    let meta = approximant.meta();
    let wire = ApproximantMetaWire {
        name: meta.name.clone(),
        subset_size: meta.subset_size,
        chebyshev_degree: meta.chebyshev_degree,
        horizon: meta.horizon.clone(),
        sign: meta.sign,
        claimed_degree_bits: meta.claimed_degree_bits,
        raw_subset_size: meta.raw_subset_size,
        window_zero_ok: meta.window_props.as_ref().map(|p| p.zero_ok),
        window_band_ok: meta.window_props.as_ref().map(|p| p.band_ok),
        window_bounded_ok: meta.window_props.as_ref().map(|p| p.bounded_ok),
        worst_promise_error: eps.clone(),
        worst_promise_error_approx: eps.to_f64_lossy(),
    };
    output::write_output(out_csv, &output::class_error_csv(&rows))?;
    output::write_output(out_meta, &output::to_pretty_json(&wire))?;
    Ok(())
}

#[derive(Serialize)]
struct EdUpperReport {
    #[serde(rename = "M")]
    m: u32,
    #[serde(rename = "R")]
    range: u32,
    claimed_bound: Rat,
    pm_errors: [Rat; 2],
    zero_one_errors: [Rat; 2],
    best_error: Rat,
    best_convention: String,
    bound_met: bool,
}

pub fn upperbound(kind: UpperboundKind, config: &RunConfig) -> Result<ExitCode> {
    match kind {
        UpperboundKind::Collision {
            n,
            r,
            subset_size,
            degree,
            out_csv,
            out_meta,
        } => {
            let shape = ProblemShape::new(n, r)?;
            let p = standard_collision_approximant(shape, subset_size, degree)?;
            approximant_report(
                &p,
                shape,
                config.budget,
                out_csv.as_deref(),
                out_meta.as_deref(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        UpperboundKind::CollisionRefined {
            n,
            r,
            delta,
            growth_const,
            out_csv,
            out_meta,
        } => {
            let shape = ProblemShape::new(n, r)?;
            let delta = parse_rat(&delta)?;
            let p = refined_collision_approximant(shape, &delta, growth_const)?;
            approximant_report(
                &p,
                shape,
                config.budget,
                out_csv.as_deref(),
                out_meta.as_deref(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        UpperboundKind::Ed { m, r, out } => {
            let formula = pairwise_ed_approximant(m, r)?;
            let report = measure_ed_formula_errors(&formula, config.budget)?;
            let bound = Rat::one() - Rat::new(1, (m as i64) * (m as i64))?;
            let bound_met = report.best <= bound;
            let wire = EdUpperReport {
                m,
                range: r,
                claimed_bound: bound,
                pm_errors: report.pm_errors,
                zero_one_errors: report.zero_one_errors,
                best_error: report.best,
                best_convention: report.best_convention,
                bound_met,
            };
            output::write_output(out.as_deref(), &output::to_pretty_json(&wire))?;
            Ok(if bound_met {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
