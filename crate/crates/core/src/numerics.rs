//! Exact rational arithmetic, big-integer combinatorics, and the polynomial
//! value types used by every other module.
//!
//! All arithmetic here is exact. Nothing in this module rounds.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact arbitrary-precision rational, always in lowest terms with a
/// positive denominator. Zero is `0/1`.
///
/// Serializes as the string `"p/q"` (canonical lowest terms, `"0/1"` for
/// zero) in all JSON artifacts.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_int<T: Into<BigInt>>(n: T) -> Self {
        Rat(BigRational::from_integer(n.into()))
    }

    /// `numer/denom`, reduced. Errors on a zero denominator.
    pub fn new<T: Into<BigInt>, U: Into<BigInt>>(numer: T, denom: U) -> Result<Self> {
        let d: BigInt = denom.into();
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rat(BigRational::new(numer.into(), d)))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Result<Self> {
        if denom.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rat(BigRational::new(numer, denom)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    /// Sign as -1, 0, or +1.
    pub fn signum(&self) -> i32 {
        match self.0.cmp(&BigRational::zero()) {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rat(self.0.recip()))
    }

    pub fn checked_div(&self, rhs: &Rat) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rat(&self.0 / &rhs.0))
    }

    pub fn pow(&self, exp: u32) -> Self {
        Rat(self.0.pow(exp as i32))
    }

    /// Largest integer `<= self`.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Smallest integer `>= self`.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Lossy conversion for report summaries only; never feeds a verdict.
    pub fn to_f64_lossy(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rat {
    type Err = Error;

    /// Accepts `"p/q"` or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let numer =
            BigInt::from_str(n.trim()).map_err(|e| Error::Parse(format!("bad numerator: {e}")))?;
        let denom = BigInt::from_str(d.trim())
            .map_err(|e| Error::Parse(format!("bad denominator: {e}")))?;
        Rat::from_big(numer, denom)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

macro_rules! rat_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0 $op rhs.0)
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat(self.0 $op &rhs.0)
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(&self.0 $op rhs.0)
            }
        }
        impl<'a, 'b> $trait<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                Rat(&self.0 $op &rhs.0)
            }
        }
    };
}

rat_binop!(Add, add, +);
rat_binop!(Sub, sub, -);
rat_binop!(Mul, mul, *);

impl Div for Rat {
    type Output = Rat;
    /// Panics on division by zero; use [`Rat::checked_div`] where the
    /// divisor is not known to be nonzero.
    fn div(self, rhs: Rat) -> Rat {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rat(self.0 / rhs.0)
    }
}

impl<'b> Div<&'b Rat> for &Rat {
    type Output = Rat;
    fn div(self, rhs: &'b Rat) -> Rat {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rat(&self.0 / &rhs.0)
    }
}

impl<'a> Div<&'a Rat> for Rat {
    type Output = Rat;
    fn div(self, rhs: &'a Rat) -> Rat {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rat(self.0 / &rhs.0)
    }
}

impl Div<Rat> for &Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rat(&self.0 / rhs.0)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rat> for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rat> for Rat {
    fn mul_assign(&mut self, rhs: &Rat) {
        self.0 *= &rhs.0;
    }
}

impl From<i64> for Rat {
    fn from(v: i64) -> Self {
        Rat::from_int(v)
    }
}

impl From<BigInt> for Rat {
    fn from(v: BigInt) -> Self {
        Rat::from_int(v)
    }
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

/// Binomial coefficient `C(n, k)`; zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> BigInt {
    if k < 0 || k as u64 > n {
        return BigInt::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    BigInt::from(acc)
}

/// Degree-`d` Chebyshev polynomial of the first kind, evaluated exactly via
/// the recurrence `T_0 = 1`, `T_1 = x`, `T_d = 2x T_{d-1} - T_{d-2}`.
///
/// Runs the recurrence over scaled integers `u_k = T_k(x) den(x)^k` so that
/// only the final division reduces a fraction.
pub fn chebyshev_eval(d: u32, x: &Rat) -> Rat {
    if d == 0 {
        return Rat::one();
    }
    let num = x.numer().clone();
    let den = x.denom().clone();
    let den_sq = &den * &den;
    let two_num = BigInt::from(2) * &num;
    let mut prev = BigInt::one();
    let mut cur = num;
    for _ in 1..d {
        let next = &two_num * &cur - &den_sq * &prev;
        prev = cur;
        cur = next;
    }
    Rat::from_big(cur, den.pow(d)).expect("denominator is nonzero")
}

/// Rational lower bound on `exp(-a)` for `a >= 0`, via the alternating
/// Taylor series truncated after an odd number of terms. Valid once the
/// terms are decreasing, which `terms >= a + 2` guarantees.
pub fn exp_neg_lower_bound(a: &Rat, terms: u32) -> Rat {
    assert!(!a.is_negative());
    let mut order = terms.max(a.ceil_int().to_u32().unwrap_or(u32::MAX).saturating_add(2));
    if order.is_multiple_of(2) {
        order += 1;
    }
    let mut sum = Rat::one();
    let mut term = Rat::one();
    for j in 1..=order {
        term = &term * &(-a.clone()) / &Rat::from_int(j as i64);
        sum += &term;
    }
    sum
}

/// Dense univariate polynomial with rational coefficients, index = power.
/// The empty coefficient list is the zero polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnivariatePolynomial {
    pub coefficients: Vec<Rat>,
}

impl UnivariatePolynomial {
    pub fn new(coefficients: Vec<Rat>) -> Self {
        let mut p = UnivariatePolynomial { coefficients };
        p.normalize();
        p
    }

    pub fn zero() -> Self {
        UnivariatePolynomial {
            coefficients: Vec::new(),
        }
    }

    pub fn constant(c: Rat) -> Self {
        Self::new(vec![c])
    }

    /// `x^d` with coefficient one.
    pub fn monomial(d: usize) -> Self {
        let mut coefficients = vec![Rat::zero(); d + 1];
        coefficients[d] = Rat::one();
        UnivariatePolynomial { coefficients }
    }

    fn normalize(&mut self) {
        while self.coefficients.last().is_some_and(Rat::is_zero) {
            self.coefficients.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coefficients.iter().rev() {
            acc = &acc * x + c;
        }
        acc
    }

    pub fn eval_int(&self, x: i64) -> Rat {
        self.eval(&Rat::from_int(x))
    }
}

/// Sparse trivariate polynomial: exponent triple `(i, j, k)` -> coefficient,
/// with every stored triple satisfying `i + j + k <= total_degree_bound`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrivariatePolynomial {
    pub coefficients: std::collections::BTreeMap<(u32, u32, u32), Rat>,
    pub total_degree_bound: u32,
}

impl TrivariatePolynomial {
    pub fn new(total_degree_bound: u32) -> Self {
        TrivariatePolynomial {
            coefficients: Default::default(),
            total_degree_bound,
        }
    }

    pub fn set(&mut self, expo: (u32, u32, u32), coeff: Rat) {
        assert!(
            expo.0 + expo.1 + expo.2 <= self.total_degree_bound,
            "monomial exceeds the declared total degree bound"
        );
        if coeff.is_zero() {
            self.coefficients.remove(&expo);
        } else {
            self.coefficients.insert(expo, coeff);
        }
    }

    /// Exact evaluation by monomial summation.
    pub fn eval(&self, m: &Rat, a: &Rat, b: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for (&(i, j, k), coeff) in &self.coefficients {
            acc += &(coeff * &m.pow(i)) * &(a.pow(j) * b.pow(k));
        }
        acc
    }
}

/// All exponent triples with `i + j + k <= bound`, in lexicographic order.
pub fn trivariate_monomials(bound: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for i in 0..=bound {
        for j in 0..=(bound - i) {
            for k in 0..=(bound - i - j) {
                out.push((i, j, k));
            }
        }
    }
    out
}

/// Outcome of an exact linear solve.
#[derive(Clone, Debug)]
pub enum LinearSolve {
    /// A solution (free variables pinned to zero).
    Solution(Vec<Rat>),
    /// The system is inconsistent; the reported row reduced to `0 = c`, `c != 0`.
    Inconsistent { row: usize },
}

/// Exact Gaussian elimination over the rationals for `A x = b`.
/// `a` is row-major with `a.len()` rows of equal width.
#[allow(clippy::needless_range_loop)] // pivot row is read while other rows are written
pub fn solve_exact(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> LinearSolve {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivot_col_of_row = vec![usize::MAX; rows];
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let inv = a[r][c].recip().expect("pivot is nonzero");
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        b[r] = &b[r] * &inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = &a[r][j] * &f;
                    a[i][j] -= &t;
                }
                let t = &b[r] * &f;
                b[i] -= &t;
            }
        }
        pivot_col_of_row[r] = c;
        r += 1;
        if r == rows {
            break;
        }
    }
    // Rows that reduced to 0 = nonzero witness inconsistency.
    for i in r..rows {
        if !b[i].is_zero() {
            return LinearSolve::Inconsistent { row: i };
        }
    }
    let mut x = vec![Rat::zero(); cols];
    for i in 0..r {
        x[pivot_col_of_row[i]] = b[i].clone();
    }
    LinearSolve::Solution(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rational_canonical_form() {
        let r = Rat::new(6, -4).unwrap();
        assert_eq!(r.to_string(), "-3/2");
        assert_eq!(Rat::zero().to_string(), "0/1");
        assert_eq!("10/15".parse::<Rat>().unwrap().to_string(), "2/3");
        assert_eq!("-7".parse::<Rat>().unwrap().to_string(), "-7/1");
        assert!(Rat::new(1, 0).is_err());
        assert!("1/0".parse::<Rat>().is_err());
    }

    #[test]
    fn binomial_small_cases() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        for n in [0u64, 1, 7, 19, 40] {
            assert_eq!(binomial(n, 0), BigInt::one());
        }
        assert_eq!(binomial(4, -1), BigInt::zero());
        assert_eq!(binomial(4, 5), BigInt::zero());
    }

    #[test]
    fn binomial_matches_pascal_triangle_oracle() {
        // Dynamic-programming Pascal oracle, independent of the product formula.
        let max = 52usize;
        let mut tri = vec![vec![BigInt::zero(); max + 1]; max + 1];
        for n in 0..=max {
            tri[n][0] = BigInt::one();
            for k in 1..=n {
                let up = tri[n - 1][k - 1].clone();
                let left = tri[n - 1][k].clone();
                tri[n][k] = up + left;
            }
        }
        assert_eq!(binomial(52, 26), tri[52][26]);
        for n in 1..=40u64 {
            for k in 1..n {
                // Pascal identity for the implementation itself.
                assert_eq!(
                    binomial(n, k as i64),
                    binomial(n - 1, k as i64) + binomial(n - 1, k as i64 - 1)
                );
            }
        }
    }

    #[test]
    fn chebyshev_boundary_values() {
        for d in 0..20 {
            assert_eq!(chebyshev_eval(d, &Rat::one()), Rat::one());
        }
        assert_eq!(chebyshev_eval(2, &Rat::zero()), Rat::from_int(-1));
    }

    #[test]
    fn chebyshev_matches_direct_recurrence_oracle() {
        // Independent oracle: iterate the recurrence with raw BigRational
        // values rather than through chebyshev_eval.
        let x = Rat::new(3, 5).unwrap();
        let mut t0 = Rat::one();
        let mut t1 = x.clone();
        for _ in 1..7 {
            let next = Rat::from_int(2) * &x * &t1 - &t0;
            t0 = t1;
            t1 = next;
        }
        assert_eq!(chebyshev_eval(7, &x), t1);
    }

    #[test]
    fn chebyshev_bounded_on_unit_interval() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let one = Rat::one();
        for _ in 0..200 {
            let den = rng.gen_range(1..=1000i64);
            let num = rng.gen_range(-den..=den);
            let x = Rat::new(num, den).unwrap();
            let d = rng.gen_range(0..=50u32);
            let v = chebyshev_eval(d, &x);
            assert!(v.abs() <= one, "|T_{d}({x})| = {v} exceeds 1");
        }
    }

    #[test]
    fn trivariate_eval_matches_horner_oracle() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let mut p = TrivariatePolynomial::new(4);
            for expo in trivariate_monomials(4) {
                if rng.gen_bool(0.4) {
                    p.set(expo, Rat::from_int(rng.gen_range(-9i64..=9)));
                }
            }
            let pt = |rng: &mut StdRng| {
                Rat::new(rng.gen_range(-12i64..=12), rng.gen_range(1..5i64)).unwrap()
            };
            let (m, a, b) = (pt(&mut rng), pt(&mut rng), pt(&mut rng));
            // Horner-style oracle: collapse over k, then j, then i.
            let mut by_ij: std::collections::BTreeMap<(u32, u32), Vec<(u32, Rat)>> =
                Default::default();
            for (&(i, j, k), c) in &p.coefficients {
                by_ij.entry((i, j)).or_default().push((k, c.clone()));
            }
            let mut total = Rat::zero();
            for ((i, j), terms) in by_ij {
                let mut inner = Rat::zero();
                let mut sorted = terms;
                sorted.sort_by_key(|t| std::cmp::Reverse(t.0));
                let mut last_pow = sorted[0].0;
                for (k, c) in sorted {
                    for _ in k..last_pow {
                        inner = &inner * &b;
                    }
                    last_pow = k;
                    inner += &c;
                }
                for _ in 0..last_pow {
                    inner = &inner * &b;
                }
                total += &(&inner * &m.pow(i)) * &a.pow(j);
            }
            assert_eq!(p.eval(&m, &a, &b), total);
        }
    }

    #[test]
    fn trivariate_trivial_cases() {
        let zero = TrivariatePolynomial::new(3);
        assert!(zero
            .eval(&Rat::from_int(5), &Rat::from_int(-2), &Rat::from_int(11))
            .is_zero());
        let mut mab = TrivariatePolynomial::new(3);
        mab.set((1, 1, 1), Rat::one());
        assert_eq!(
            mab.eval(&Rat::from_int(2), &Rat::from_int(3), &Rat::from_int(4)),
            Rat::from_int(24)
        );
    }

    #[test]
    fn solve_exact_roundtrip_and_inconsistency() {
        // 2x + y = 5, x - y = 1  =>  x = 2, y = 1
        let a = vec![
            vec![Rat::from_int(2), Rat::from_int(1)],
            vec![Rat::from_int(1), Rat::from_int(-1)],
        ];
        let b = vec![Rat::from_int(5), Rat::from_int(1)];
        match solve_exact(a, b) {
            LinearSolve::Solution(x) => {
                assert_eq!(x, vec![Rat::from_int(2), Rat::from_int(1)]);
            }
            LinearSolve::Inconsistent { .. } => panic!("system is consistent"),
        }
        let a = vec![
            vec![Rat::from_int(1), Rat::from_int(1)],
            vec![Rat::from_int(2), Rat::from_int(2)],
        ];
        let b = vec![Rat::from_int(1), Rat::from_int(3)];
        assert!(matches!(
            solve_exact(a, b),
            LinearSolve::Inconsistent { .. }
        ));
    }

    #[test]
    fn exp_lower_bound_is_a_lower_bound() {
        for (num, den) in [(1i64, 2i64), (9, 16), (3, 1), (7, 5)] {
            let a = Rat::new(num, den).unwrap();
            let lb = exp_neg_lower_bound(&a, 24);
            let truth = (-(num as f64) / den as f64).exp();
            let lb_f = lb.numer().to_f64().unwrap() / lb.denom().to_f64().unwrap();
            assert!(lb_f <= truth + 1e-12, "lb {lb_f} vs exp {truth}");
            assert!(truth - lb_f < 1e-6, "bound too loose: {lb_f} vs {truth}");
        }
    }

    proptest! {
        #[test]
        fn addition_has_exact_inverse(
            (an, ad) in (-1000i64..1000, 1i64..1000),
            (bn, bd) in (-1000i64..1000, 1i64..1000),
        ) {
            let r = Rat::new(an, ad).unwrap();
            let s = Rat::new(bn, bd).unwrap();
            prop_assert_eq!(&(&(&r + &s) - &s), &r);
            let prod = &r * &s;
            if !s.is_zero() {
                prop_assert_eq!(prod.checked_div(&s).unwrap(), r);
            }
        }

        #[test]
        fn rational_string_roundtrip((n, d) in (-10_000i64..10_000, 1i64..10_000)) {
            let r = Rat::new(n, d).unwrap();
            let back: Rat = r.to_string().parse().unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
