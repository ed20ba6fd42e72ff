//! Serialization helpers: canonical JSON wire structs for LP solutions and
//! reports, CSV tables, and machine-readable errors.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use apxdeg::domain::OrbitClass;
use apxdeg::lp::{LpSolution, MaxErrorReport};
use apxdeg::numerics::Rat;
use apxdeg::upper::ClassErrorRow;

pub fn error_json(tag: &str, message: &str) -> String {
    serde_json::json!({ "error": tag, "message": message }).to_string()
}

pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content).with_context(|| format!("writing {}", p.display()))?;
        }
        None => println!("{content}"),
    }
    Ok(())
}

#[derive(Serialize)]
pub struct PrimalCoeffWire {
    pub subset_bits: Vec<u32>,
    pub coeff: Rat,
}

#[derive(Serialize)]
pub struct DualRowWire {
    pub values: Vec<u32>,
    pub class: OrbitClass,
    pub orbit_size: u64,
    pub weight: Rat,
    pub mass: Rat,
    pub error: Rat,
}

#[derive(Serialize)]
pub struct LpSolutionWire {
    #[serde(rename = "N")]
    pub n_points: u32,
    #[serde(rename = "R")]
    pub range: u32,
    pub degree: u32,
    pub folded: bool,
    pub epsilon_opt: Rat,
    pub primal: Vec<PrimalCoeffWire>,
    pub dual: Vec<DualRowWire>,
    pub dual_objective: Rat,
    pub dual_mass_total: Rat,
    pub degenerate: bool,
}

impl LpSolutionWire {
    pub fn from_solution(sol: &LpSolution) -> Self {
        let primal = sol
            .primal_coeffs
            .iter()
            .map(|(&mask, coeff)| PrimalCoeffWire {
                subset_bits: (0..64).filter(|i| mask >> i & 1 == 1).collect(),
                coeff: coeff.clone(),
            })
            .collect();
        let dual = sol
            .input_orbits
            .iter()
            .enumerate()
            .filter(|(oi, _)| !sol.dual_weights[*oi].is_zero() || !sol.dual_masses[*oi].is_zero())
            .map(|(oi, orbit)| DualRowWire {
                values: orbit.rep.values.clone(),
                class: orbit.class.clone(),
                orbit_size: orbit.size,
                weight: sol.dual_weights[oi].clone(),
                mass: sol.dual_masses[oi].clone(),
                error: sol.orbit_errors[oi].clone(),
            })
            .collect();
        LpSolutionWire {
            n_points: sol.shape.n_points,
            range: sol.shape.range,
            degree: sol.degree,
            folded: sol.folded,
            epsilon_opt: sol.epsilon_opt.clone(),
            primal,
            dual,
            dual_objective: sol.dual_objective.clone(),
            dual_mass_total: sol.dual_mass_total.clone(),
            degenerate: sol.degenerate,
        }
    }
}

#[derive(Serialize)]
pub struct MaxErrorRowWire {
    pub class: String,
    pub rep_values: Vec<u32>,
    pub orbit_size: u64,
    pub error: Rat,
    pub is_max: bool,
    pub dual_mass: Rat,
}

#[derive(Serialize)]
pub struct MaxErrorReportWire {
    pub rows: Vec<MaxErrorRowWire>,
    pub max_error_on_promise: Rat,
    pub near_max_mass_fraction: Rat,
    pub slackness_exact: bool,
    pub degenerate: bool,
}

impl MaxErrorReportWire {
    pub fn from_report(report: &MaxErrorReport) -> Self {
        MaxErrorReportWire {
            rows: report
                .rows
                .iter()
                .map(|r| MaxErrorRowWire {
                    class: r.class.to_string(),
                    rep_values: r.rep_values.clone(),
                    orbit_size: r.orbit_size,
                    error: r.error.clone(),
                    is_max: r.is_max,
                    dual_mass: r.dual_mass.clone(),
                })
                .collect(),
            max_error_on_promise: report.max_error_on_promise.clone(),
            near_max_mass_fraction: report.near_max_mass_fraction.clone(),
            slackness_exact: report.slackness_exact,
            degenerate: report.degenerate,
        }
    }
}

/// `d,epsilon_opt` rows.
pub fn epsilon_csv(rows: &[(u32, Rat)]) -> String {
    let mut out = String::from("d,epsilon_opt\n");
    for (d, eps) in rows {
        out.push_str(&format!("{d},{eps}\n"));
    }
    out
}

/// `class,count,max_error` rows.
pub fn class_error_csv(rows: &[ClassErrorRow]) -> String {
    let mut out = String::from("class,count,max_error\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.class, row.count, row.max_error));
    }
    out
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization")
}
