//! Class-indexed dual witnesses over the hypercube and the certificate
//! verifier: L1 norm, correlation, pure high degree (exact and conditional),
//! and closure under addition.
//!
//! A witness stores one signed rational mass per orbit class; the value at a
//! point is `class_mass / class_size`. Every construction in this crate is
//! constant on orbit classes, so nothing is lost, and the representation
//! scales past enumerable bit lengths even when verification is
//! enumeration-bound.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::domain::{
    class_size, target_value_of_class, OrbitClass, ParityTable, ProblemShape, TargetFn, TargetValue,
};
use crate::error::{Error, Result};
use crate::numerics::Rat;

/// Construction metadata carried inside witness JSON.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessMeta {
    pub construction: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Rat>,
    /// Domain size of the underlying OR-style dual (weak construction).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    /// Cap K on fiber sizes fed to the table (main construction).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_cap: Option<u32>,
    /// Fiber sizes whose MAJ-style dual failed its gate and was dropped.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub skipped_k: Vec<u32>,
    /// Pure high degree established by exhaustive enumeration, when run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_phd: Option<i64>,
    /// For reduced witnesses: restriction length M.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    /// For reduced witnesses: the exactly computed effective delta.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_eff: Option<Rat>,
    /// For reduced witnesses: hash of the source witness JSON.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
}

/// A signed rational weight assignment over `{-1,1}^n`, constant on orbit
/// classes. `class_mass` holds the total signed mass of each class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualWitness {
    pub shape: ProblemShape,
    pub class_mass: BTreeMap<OrbitClass, Rat>,
    pub meta: WitnessMeta,
}

impl DualWitness {
    /// Empty witness (all-zero function).
    pub fn zero(shape: ProblemShape) -> Self {
        DualWitness {
            shape,
            class_mass: BTreeMap::new(),
            meta: WitnessMeta::default(),
        }
    }

    /// Builds from class masses, validating that every keyed class is
    /// realizable and dropping exact zeros.
    pub fn from_masses(
        shape: ProblemShape,
        masses: BTreeMap<OrbitClass, Rat>,
        meta: WitnessMeta,
    ) -> Result<Self> {
        let mut class_mass = BTreeMap::new();
        for (class, mass) in masses {
            if mass.is_zero() {
                continue;
            }
            class_size(&class, shape)?;
            class_mass.insert(class, mass);
        }
        Ok(DualWitness {
            shape,
            class_mass,
            meta,
        })
    }

    /// Total signed mass of a class (zero when absent).
    pub fn mass(&self, class: &OrbitClass) -> Rat {
        self.class_mass
            .get(class)
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    /// Per-point value on a class: `class_mass / |class|`.
    pub fn point_value(&self, class: &OrbitClass) -> Result<Rat> {
        let size = class_size(class, self.shape)?;
        self.mass(class).checked_div(&Rat::from_int(size))
    }

    /// `sum_x |w(x)|`, computed class-wise.
    pub fn l1_norm(&self) -> Rat {
        let mut acc = Rat::zero();
        for mass in self.class_mass.values() {
            acc += mass.abs();
        }
        acc
    }

    /// Dual objective `sum_{x in D} f(x) w(x) - sum_{x not in D} |w(x)|`,
    /// computed class-wise (every class lies entirely inside or outside the
    /// promise set).
    pub fn correlation(&self, f: TargetFn) -> Rat {
        let mut acc = Rat::zero();
        for (class, mass) in &self.class_mass {
            match target_value_of_class(class, f) {
                TargetValue::Plus => acc += mass,
                TargetValue::Minus => acc -= mass,
                TargetValue::OutsidePromise => acc -= &mass.abs(),
            }
        }
        acc
    }

    /// Class-wise `c1 * w1 + c2 * w2`. The pure high degree of the sum is at
    /// least the minimum of the summands'.
    pub fn witness_sum(
        w1: &DualWitness,
        w2: &DualWitness,
        c1: &Rat,
        c2: &Rat,
    ) -> Result<DualWitness> {
        if w1.shape != w2.shape {
            return Err(Error::ShapeMismatch(
                w1.shape.n_points,
                w1.shape.range,
                w2.shape.n_points,
                w2.shape.range,
            ));
        }
        let mut masses: BTreeMap<OrbitClass, Rat> = BTreeMap::new();
        for (class, mass) in &w1.class_mass {
            *masses.entry(class.clone()).or_insert_with(Rat::zero) += c1 * mass;
        }
        for (class, mass) in &w2.class_mass {
            *masses.entry(class.clone()).or_insert_with(Rat::zero) += c2 * mass;
        }
        masses.retain(|_, m| !m.is_zero());
        Ok(DualWitness {
            shape: w1.shape,
            class_mass: masses,
            meta: WitnessMeta {
                construction: "sum".into(),
                ..WitnessMeta::default()
            },
        })
    }

    /// Scales all masses so the L1 norm becomes exactly one. Errors on the
    /// zero witness.
    pub fn normalized(&self) -> Result<DualWitness> {
        let norm = self.l1_norm();
        if norm.is_zero() {
            return Err(Error::InvalidParam(
                "cannot normalize the zero witness".into(),
            ));
        }
        let mut out = self.clone();
        for mass in out.class_mass.values_mut() {
            *mass = &*mass / &norm;
        }
        Ok(out)
    }
}

/// Result of an exact pure-high-degree check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhdCheck {
    Pass,
    /// The first failing parity, as a bit-subset mask, with the nonzero sum.
    Fail {
        subset_mask: u64,
        sum: Rat,
    },
}

impl PhdCheck {
    pub fn passed(&self) -> bool {
        matches!(self, PhdCheck::Pass)
    }
}

/// Checks `sum_x w(x) chi_S(x) = 0` exactly for every `S` with
/// `|S| <= degree`, reading per-point values from the class masses and the
/// exhaustive parity table.
pub fn pure_high_degree_exact(
    witness: &DualWitness,
    degree: u32,
    table: &ParityTable,
) -> Result<PhdCheck> {
    if table.shape != witness.shape {
        return Err(Error::ShapeMismatch(
            table.shape.n_points,
            table.shape.range,
            witness.shape.n_points,
            witness.shape.range,
        ));
    }
    if degree > table.max_degree {
        return Err(Error::InvalidParam(format!(
            "degree {degree} exceeds the parity table's degree {}",
            table.max_degree
        )));
    }
    // Per-class point values, aligned with the table's class order.
    let mut point_values: Vec<Rat> = Vec::with_capacity(table.classes.len());
    for class in &table.classes {
        point_values.push(witness.point_value(class)?);
    }
    let mut flat = 0usize;
    for d in 0..=degree {
        for &mask in &table.subsets[d as usize] {
            let mut sum = Rat::zero();
            for (ci, value) in point_values.iter().enumerate() {
                if !value.is_zero() && table.sums[ci][flat] != 0 {
                    sum += value * &Rat::from_int(table.sums[ci][flat]);
                }
            }
            if !sum.is_zero() {
                return Ok(PhdCheck::Fail {
                    subset_mask: mask,
                    sum,
                });
            }
            flat += 1;
        }
    }
    Ok(PhdCheck::Pass)
}

/// Largest `d <= cap` such that the exhaustive check passes; `-1` when even
/// the empty parity fails. Also returns the first failing mask, if any.
pub fn measure_phd_exhaustive(
    witness: &DualWitness,
    cap: u32,
    table: &ParityTable,
) -> Result<(i64, Option<u64>)> {
    let mut point_values: Vec<Rat> = Vec::with_capacity(table.classes.len());
    for class in &table.classes {
        point_values.push(witness.point_value(class)?);
    }
    let mut flat = 0usize;
    for d in 0..=cap.min(table.max_degree) {
        for &mask in &table.subsets[d as usize] {
            let mut sum = Rat::zero();
            for (ci, value) in point_values.iter().enumerate() {
                if !value.is_zero() && table.sums[ci][flat] != 0 {
                    sum += value * &Rat::from_int(table.sums[ci][flat]);
                }
            }
            if !sum.is_zero() {
                return Ok((d as i64 - 1, Some(mask)));
            }
            flat += 1;
        }
    }
    Ok((cap.min(table.max_degree) as i64, None))
}

/// Verification mode for certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    /// Exhaustive parity sums over the whole hypercube.
    Exact,
    /// Class-level quantities only; the pure-high-degree claim is not
    /// enumerated and the verdict is labeled conditional.
    Conditional,
}

/// Outcome of verifying a witness as a lower-bound certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub l1: Rat,
    pub correlation: Rat,
    /// Highest degree whose parity sums were verified to vanish; `-1` when
    /// nothing was verified (conditional mode reports the claimed degree
    /// alongside `conditional: true`).
    pub phd_verified_to: i64,
    pub epsilon_claim: Rat,
    pub degree_claim: u32,
    pub mode: VerifyMode,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_constraint: Option<String>,
    /// Bit indices of the first failing parity set, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_parity: Option<Vec<u32>>,
}

/// Verifies that `witness` certifies `approx-degree_epsilon(f) > degree`:
/// correlation strictly above `epsilon * l1`, and all parity sums up to
/// `degree` exactly zero (in exact mode).
pub fn verify_certificate(
    witness: &DualWitness,
    f: TargetFn,
    epsilon: &Rat,
    degree: u32,
    mode: VerifyMode,
    budget: u64,
) -> Result<CertificateReport> {
    let l1 = witness.l1_norm();
    let correlation = witness.correlation(f);
    let mut failing_constraint = None;
    let mut failing_parity = None;
    let correlation_ok = correlation > epsilon * &l1;
    if !correlation_ok {
        failing_constraint = Some(format!(
            "correlation {correlation} is not above epsilon * l1 = {}",
            epsilon * &l1
        ));
    }
    let (phd_verified_to, parity_ok) = match mode {
        VerifyMode::Exact => {
            let table = ParityTable::build(witness.shape, degree, budget)?;
            match pure_high_degree_exact(witness, degree, &table)? {
                PhdCheck::Pass => (degree as i64, true),
                PhdCheck::Fail { subset_mask, sum } => {
                    let bits: Vec<u32> = (0..64).filter(|i| subset_mask >> i & 1 == 1).collect();
                    failing_constraint.get_or_insert_with(|| {
                        format!("parity sum over bits {bits:?} equals {sum}, not zero")
                    });
                    failing_parity = Some(bits);
                    (-1, false)
                }
            }
        }
        VerifyMode::Conditional => (-1, true),
    };
    Ok(CertificateReport {
        l1,
        correlation,
        phd_verified_to,
        epsilon_claim: epsilon.clone(),
        degree_claim: degree,
        mode,
        verdict: correlation_ok && parity_ok,
        failing_constraint,
        failing_parity,
    })
}

/// Witness wire format:
/// `{"N":..,"R":..,"classes":[{"class":...,"mass":"p/q"}],"meta":{...}}`.
#[derive(Serialize, Deserialize)]
pub struct WitnessWire {
    #[serde(rename = "N")]
    pub n_points: u32,
    #[serde(rename = "R")]
    pub range: u32,
    pub classes: Vec<WitnessClassWire>,
    pub meta: WitnessMeta,
}

#[derive(Serialize, Deserialize)]
pub struct WitnessClassWire {
    pub class: OrbitClass,
    pub mass: Rat,
}

impl From<&DualWitness> for WitnessWire {
    fn from(w: &DualWitness) -> Self {
        WitnessWire {
            n_points: w.shape.n_points,
            range: w.shape.range,
            classes: w
                .class_mass
                .iter()
                .map(|(class, mass)| WitnessClassWire {
                    class: class.clone(),
                    mass: mass.clone(),
                })
                .collect(),
            meta: w.meta.clone(),
        }
    }
}

impl WitnessWire {
    pub fn into_witness(self) -> Result<DualWitness> {
        let shape = ProblemShape::new(self.n_points, self.range)?;
        let mut masses = BTreeMap::new();
        for entry in self.classes {
            if masses.insert(entry.class.clone(), entry.mass).is_some() {
                return Err(Error::Parse(format!(
                    "duplicate class {} in witness JSON",
                    entry.class
                )));
            }
        }
        DualWitness::from_masses(shape, masses, self.meta)
    }
}

/// Serializes a witness to its canonical JSON form.
pub fn witness_to_json(w: &DualWitness) -> String {
    serde_json::to_string_pretty(&WitnessWire::from(w)).expect("witness JSON serialization")
}

/// Parses a witness from JSON, validating realizability of every class.
pub fn witness_from_json(s: &str) -> Result<DualWitness> {
    let wire: WitnessWire =
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("witness JSON: {e}")))?;
    wire.into_witness()
}

/// Point-wise evaluation of the witness across the whole input space,
/// returned as per-class totals; used by tests to confirm the class-wise
/// sums agree with brute force.
pub fn pointwise_totals(
    witness: &DualWitness,
    budget: u64,
) -> Result<(Rat, BTreeMap<OrbitClass, Rat>)> {
    let mut l1 = Rat::zero();
    let mut totals: BTreeMap<OrbitClass, Rat> = BTreeMap::new();
    for x in crate::domain::enumerate_inputs(witness.shape, budget)? {
        let class = crate::domain::classify(&x);
        let value = witness.point_value(&class)?;
        if value.is_zero() {
            continue;
        }
        l1 += value.abs();
        *totals.entry(class).or_insert_with(Rat::zero) += value;
    }
    Ok((l1, totals))
}

/// Exact per-class size as `u64` (valid for enumerable shapes).
pub fn class_size_u64(class: &OrbitClass, shape: ProblemShape) -> Result<u64> {
    let size: BigInt = class_size(class, shape)?;
    size.to_u64()
        .ok_or_else(|| Error::InvalidParam("class size exceeds u64".into()))
}
