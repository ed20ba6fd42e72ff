//! Constructive verification of the trivariate symmetrization identity at
//! small scale: orbit averages of parities over the classes indexed by
//! valid triples, an exact trivariate interpolation over all of them, and
//! the 0/1 table map that underlies the degree bookkeeping.

use crate::domain::{FunctionInput, OrbitClass, ParityTable, ProblemShape, ValidTriple};
use crate::error::{Error, Result};
use crate::numerics::{solve_exact, trivariate_monomials, LinearSolve, Rat, TrivariatePolynomial};

/// The 0/1 incidence table of an input: entry `(i, j)` is 1 iff block `i`
/// takes value `j`. Exactly one 1 per row.
pub fn t_map(x: &FunctionInput) -> Vec<Vec<u8>> {
    let r = x.shape.range as usize;
    x.values
        .iter()
        .map(|&v| {
            let mut row = vec![0u8; r];
            row[(v - 1) as usize] = 1;
            row
        })
        .collect()
}

/// Every valid triple `(m, a, b)` of the shape with `a, b <= N`: `a | m`,
/// `b | (N - m)`, including the degenerate aliases at `m = 0` and `m = N`
/// where the free parameter ranges over all of `[N]`.
pub fn valid_triples(shape: ProblemShape) -> Vec<ValidTriple> {
    let n = shape.n_points;
    let mut out = Vec::new();
    for m in 0..=n {
        let a_values: Vec<u32> = if m == 0 {
            (1..=n).collect()
        } else {
            (1..=m).filter(|a| m % a == 0).collect()
        };
        let b_values: Vec<u32> = if m == n {
            (1..=n).collect()
        } else {
            (1..=(n - m))
                .filter(|b| (n - m).is_multiple_of(*b))
                .collect()
        };
        for &a in &a_values {
            for &b in &b_values {
                out.push(ValidTriple { m, a, b });
            }
        }
    }
    out
}

/// Exact orbit average of the parity over the class named by a valid
/// triple, from the exhaustive parity table.
pub fn orbit_average_parity(
    subset_mask: u64,
    triple: &ValidTriple,
    shape: ProblemShape,
    table: &ParityTable,
) -> Result<Rat> {
    let class = triple.class(shape);
    table.orbit_average(&class, subset_mask)
}

/// Outcome of the exact trivariate fit for one parity subset.
pub struct TrivariateFit {
    pub polynomial: TrivariatePolynomial,
    /// True when the linear system was consistent (zero residual) and the
    /// fitted polynomial reproduces every orbit average exactly.
    pub exact: bool,
    /// Number of constraints (valid triples) imposed.
    pub constraints: usize,
}

/// Solves the exact linear system for a total-degree-`d` trivariate
/// polynomial matching the orbit average of the parity on every realizable
/// valid triple of the shape (the degenerate aliases impose consistency
/// constraints), and re-verifies the fit by direct evaluation.
///
/// An inconsistent system would falsify the symmetrization identity at this
/// shape; callers treat it as a test failure rather than a runtime error.
pub fn fit_and_check_trivariate(
    subset_mask: u64,
    degree: u32,
    shape: ProblemShape,
    table: &ParityTable,
) -> Result<TrivariateFit> {
    if subset_mask.count_ones() > degree {
        return Err(Error::InvalidParam(format!(
            "requested degree {degree} below the parity size {}",
            subset_mask.count_ones()
        )));
    }
    let monomials = trivariate_monomials(degree);
    let triples = valid_triples(shape);
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(triples.len());
    let mut rhs: Vec<Rat> = Vec::with_capacity(triples.len());
    for triple in &triples {
        let m = Rat::from_int(triple.m as i64);
        let a = Rat::from_int(triple.a as i64);
        let b = Rat::from_int(triple.b as i64);
        let row: Vec<Rat> = monomials
            .iter()
            .map(|&(i, j, k)| m.pow(i) * a.pow(j) * b.pow(k))
            .collect();
        rows.push(row);
        rhs.push(orbit_average_parity(subset_mask, triple, shape, table)?);
    }
    let solution = match solve_exact(rows, rhs) {
        LinearSolve::Solution(x) => x,
        LinearSolve::Inconsistent { .. } => {
            return Ok(TrivariateFit {
                polynomial: TrivariatePolynomial::new(degree),
                exact: false,
                constraints: triples.len(),
            })
        }
    };
    let mut polynomial = TrivariatePolynomial::new(degree);
    for (expo, coeff) in monomials.iter().zip(solution) {
        polynomial.set(*expo, coeff);
    }
    // Residual re-check by direct evaluation at every constraint.
    let mut exact = true;
    for triple in &triples {
        let value = polynomial.eval(
            &Rat::from_int(triple.m as i64),
            &Rat::from_int(triple.a as i64),
            &Rat::from_int(triple.b as i64),
        );
        if value != orbit_average_parity(subset_mask, triple, shape, table)? {
            exact = false;
            break;
        }
    }
    Ok(TrivariateFit {
        polynomial,
        exact,
        constraints: triples.len(),
    })
}

/// Checks that the fitted polynomial is constant across the degenerate
/// aliases of the 1-to-1 class (`m` arbitrary with `a = b = 1`, `m = 0`
/// with any `a`, `m = N` with any `b`).
pub fn alias_consistency(
    polynomial: &TrivariatePolynomial,
    shape: ProblemShape,
    table: &ParityTable,
    subset_mask: u64,
) -> Result<bool> {
    let t1 = OrbitClass::KToOne { k: 1 };
    let expected = table.orbit_average(&t1, subset_mask)?;
    let n = shape.n_points;
    let one = Rat::one();
    for m in 0..=n {
        let v = polynomial.eval(&Rat::from_int(m as i64), &one, &one);
        if v != expected {
            return Ok(false);
        }
    }
    for a in 1..=n {
        let v = polynomial.eval(&Rat::zero(), &Rat::from_int(a as i64), &one);
        if v != expected {
            return Ok(false);
        }
    }
    for b in 1..=n {
        let v = polynomial.eval(&Rat::from_int(n as i64), &one, &Rat::from_int(b as i64));
        if v != expected {
            return Ok(false);
        }
    }
    Ok(true)
}
