//! Truncated power series in one complex-coefficient variable.
//!
//! A [`TruncatedSeries`] of degree `K` stores `c_0 .. c_K` densely. Every
//! operation truncates its result back to degree `K`; nothing grows
//! silently.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on `branch^2 == c_0` accepted by [`TruncatedSeries::sqrt`].
pub const BRANCH_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    /// Builds a series from its coefficients; the degree is `coeffs.len() - 1`.
    ///
    /// Panics on an empty coefficient list.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); degree + 1] }
    }

    pub fn constant(c: Complex64, degree: usize) -> Self {
        let mut s = Self::zero(degree);
        s.coeffs[0] = c;
        s
    }

    pub fn one(degree: usize) -> Self {
        Self::constant(Complex64::new(1.0, 0.0), degree)
    }

    /// The identity `s`, i.e. `[0, 1, 0, ...]`.
    pub fn variable(degree: usize) -> Self {
        let mut s = Self::zero(degree);
        if degree >= 1 {
            s.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        s
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Re-truncates (or zero-pads) to a new degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    fn check_degree(&self, other: &Self) -> Result<()> {
        if self.degree() == other.degree() {
            Ok(())
        } else {
            Err(Error::DegreeMismatch { left: self.degree(), right: other.degree() })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    /// Cauchy product truncated at the common degree.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        let k = self.degree();
        let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs[..=k - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self { coeffs: out })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn add_constant(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Multiplicative inverse. Fails when the constant term vanishes, which in
    /// the phase recursion means `psi_{-1}'` has a zero at the expansion point.
    pub fn recip(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if is_negligible(c0, self.max_abs()) {
            return Err(Error::Singularity);
        }
        let inv0 = c0.inv();
        let k = self.degree();
        let mut b = vec![Complex64::new(0.0, 0.0); k + 1];
        b[0] = inv0;
        for n in 1..=k {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=n {
                acc += self.coeffs[j] * b[n - j];
            }
            b[n] = -acc * inv0;
        }
        Ok(Self { coeffs: b })
    }

    /// Square root on the branch whose constant term is `branch`.
    pub fn sqrt(&self, branch: Complex64) -> Result<Self> {
        let c0 = self.coeffs[0];
        if is_negligible(c0, self.max_abs()) {
            return Err(Error::BranchPoint);
        }
        if (branch * branch - c0).norm() > BRANCH_TOLERANCE * c0.norm() {
            return Err(Error::BadBranch { branch: branch.to_string(), constant: c0.to_string() });
        }
        let k = self.degree();
        let two_b0_inv = (2.0 * branch).inv();
        let mut b = vec![Complex64::new(0.0, 0.0); k + 1];
        b[0] = branch;
        for n in 1..=k {
            let mut acc = self.coeffs[n];
            for j in 1..n {
                acc -= b[j] * b[n - j];
            }
            b[n] = acc * two_b0_inv;
        }
        Ok(Self { coeffs: b })
    }

    /// Term-wise derivative at the same degree; the top coefficient becomes 0.
    pub fn deriv(&self) -> Self {
        let k = self.degree();
        let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
        for j in 1..=k {
            out[j - 1] = self.coeffs[j] * j as f64;
        }
        Self { coeffs: out }
    }

    /// Antiderivative with constant term `c0`. The degree-`K+1` term is
    /// dropped: `antideriv(deriv(a), a_0)` reproduces `a` exactly, while
    /// `deriv(antideriv(a, c))` loses the top coefficient of `a`.
    pub fn antideriv(&self, c0: Complex64) -> Self {
        let k = self.degree();
        let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
        out[0] = c0;
        for j in 1..=k {
            out[j] = self.coeffs[j - 1] / j as f64;
        }
        Self { coeffs: out }
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, s: f64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    /// Value together with first and second derivatives.
    pub fn eval_d2(&self, s: f64) -> (Complex64, Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dp, mut ddp) = (zero, zero, zero);
        for c in self.coeffs.iter().rev() {
            ddp = ddp * s + 2.0 * dp;
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp, ddp)
    }

    /// Root-test estimate of the convergence radius, `1 / max |c_k|^{1/k}`
    /// over the top half of the coefficients. Returns `+inf` when fewer than
    /// four coefficients are nonzero.
    ///
    /// The estimate converges slowly for algebraic singularities: a
    /// `k^{-3/2}` decay overstates the radius by a factor `k^{3/(2k)}`.
    pub fn estimate_radius(&self) -> f64 {
        let nonzero = self.coeffs.iter().filter(|c| c.norm() > 0.0).count();
        if nonzero < 4 {
            return f64::INFINITY;
        }
        let k = self.degree();
        let lo = (k / 2).max(1);
        let root = (lo..=k)
            .map(|j| self.coeffs[j].norm().powf(1.0 / j as f64))
            .fold(0.0, f64::max);
        if root > 0.0 {
            1.0 / root
        } else {
            f64::INFINITY
        }
    }
}

fn is_negligible(c0: Complex64, scale: f64) -> bool {
    c0.norm() == 0.0 || c0.norm() <= f64::EPSILON * f64::EPSILON * scale
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    /// Panics on degree mismatch; use [`TruncatedSeries::try_add`] otherwise.
    fn add(self, rhs: Self) -> TruncatedSeries {
        self.try_add(rhs).expect("series degree mismatch")
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.try_sub(rhs).expect("series degree mismatch")
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: Self) -> TruncatedSeries {
        self.try_mul(rhs).expect("series degree mismatch")
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_coeffs(s: &TruncatedSeries, expected: &[Complex64], tol: f64) {
        assert_eq!(s.coeffs().len(), expected.len());
        for (k, (a, b)) in s.coeffs().iter().zip(expected).enumerate() {
            assert!((a - b).norm() <= tol, "coefficient {k}: {a} vs {b}");
        }
    }

    /// Generalized binomial `(1 + x)^p = sum binom(p, k) x^k`, used as an
    /// independent oracle for `sqrt` and the radius estimate.
    fn binomial_series(p: f64, x: Complex64, degree: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(degree + 1);
        let mut b = 1.0;
        let mut xk = c(1.0, 0.0);
        for k in 0..=degree {
            out.push(xk * b);
            b *= (p - k as f64) / (k as f64 + 1.0);
            xk *= x;
        }
        out
    }

    #[test]
    fn add_examples() {
        let a = TruncatedSeries::from_real(&[1.0, 2.0]);
        let b = TruncatedSeries::from_real(&[3.0, -2.0]);
        assert_coeffs(&(&a + &b), &[c(4.0, 0.0), c(0.0, 0.0)], 0.0);
        assert_eq!(&a + &TruncatedSeries::zero(1), a);
        let pi = TruncatedSeries::new(vec![c(0.0, 0.0), I]);
        assert_coeffs(&(&pi + &pi), &[c(0.0, 0.0), c(0.0, 2.0)], 0.0);
    }

    #[test]
    fn mismatched_degree_is_an_error() {
        let a = TruncatedSeries::zero(2);
        let b = TruncatedSeries::zero(3);
        assert_eq!(a.try_add(&b), Err(Error::DegreeMismatch { left: 2, right: 3 }));
        assert!(a.try_mul(&b).is_err());
        assert!(a.try_sub(&b).is_err());
    }

    #[test]
    fn mul_examples() {
        let p = TruncatedSeries::from_real(&[1.0, 1.0, 0.0]);
        let m = TruncatedSeries::from_real(&[1.0, -1.0, 0.0]);
        assert_coeffs(&(&p * &m), &[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)], 0.0);
        assert_eq!(&p * &TruncatedSeries::one(2), p);
        let s = TruncatedSeries::variable(2);
        assert_coeffs(&(&s * &s), &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 0.0);
    }

    #[test]
    fn recip_examples() {
        let a = TruncatedSeries::from_real(&[1.0, -1.0, 0.0, 0.0]);
        assert_coeffs(&a.recip().unwrap(), &[c(1.0, 0.0); 4], 1e-15);
        let two = TruncatedSeries::from_real(&[2.0, 0.0]);
        assert_coeffs(&two.recip().unwrap(), &[c(0.5, 0.0), c(0.0, 0.0)], 0.0);
        let tp = TruncatedSeries::from_real(&[0.0, 1.0, 0.5]);
        assert_eq!(tp.recip(), Err(Error::Singularity));
    }

    #[test]
    fn sqrt_examples() {
        let a = TruncatedSeries::from_real(&[4.0, 4.0, 1.0]);
        assert_coeffs(&a.sqrt(c(2.0, 0.0)).unwrap(), &[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], 1e-15);

        // -1 + i s = -(1 - i s); sqrt on branch +i is i (1 - i s)^{1/2}.
        let b = TruncatedSeries::new(vec![c(-1.0, 0.0), I, c(0.0, 0.0)]);
        let root = b.sqrt(I).unwrap();
        let oracle: Vec<_> = binomial_series(0.5, -I, 2).into_iter().map(|x| I * x).collect();
        assert_coeffs(&root, &oracle, 1e-15);
        assert_coeffs(&root, &[I, c(0.5, 0.0), I / 8.0], 1e-15);

        let neg = b.sqrt(-I).unwrap();
        assert_eq!(neg.coeff(0), -I);
    }

    #[test]
    fn sqrt_errors() {
        let bp = TruncatedSeries::from_real(&[0.0, 1.0, 0.0]);
        assert_eq!(bp.sqrt(c(0.0, 0.0)), Err(Error::BranchPoint));
        let a = TruncatedSeries::from_real(&[4.0, 1.0]);
        assert!(matches!(a.sqrt(c(2.1, 0.0)), Err(Error::BadBranch { .. })));
    }

    #[test]
    fn deriv_antideriv_examples() {
        let a = TruncatedSeries::from_real(&[1.0, 2.0, 3.0]);
        assert_coeffs(&a.deriv(), &[c(2.0, 0.0), c(6.0, 0.0), c(0.0, 0.0)], 0.0);
        let b = TruncatedSeries::from_real(&[1.0, 2.0]);
        assert_coeffs(&b.antideriv(c(0.0, 0.0)), &[c(0.0, 0.0), c(1.0, 0.0)], 0.0);
        // degree 1: the s^2 term of the antiderivative is truncated away
        let b2 = TruncatedSeries::from_real(&[1.0, 2.0, 0.0]);
        assert_coeffs(&b2.antideriv(c(0.0, 0.0)), &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 0.0);
        let r = TruncatedSeries::from_real(&[5.0, 1.0, 1.0]);
        let back = r.deriv().antideriv(c(5.0, 0.0));
        assert_coeffs(&back, &[c(5.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 0.0);
        // the other order loses the top coefficient
        let r3 = TruncatedSeries::from_real(&[5.0, 1.0, 1.0, 7.0]);
        assert_eq!(r3.antideriv(c(0.0, 0.0)).deriv().coeff(3), c(0.0, 0.0));
    }

    #[test]
    fn eval_examples() {
        let a = TruncatedSeries::from_real(&[1.0, 2.0, 3.0]);
        assert_eq!(a.eval(0.0), c(1.0, 0.0));
        let b = TruncatedSeries::new(vec![c(0.0, 0.0), I]);
        assert_eq!(b.eval(0.5), c(0.0, 0.5));
        let sq = TruncatedSeries::from_real(&[0.0, 0.0, 1.0]);
        assert_eq!(sq.eval_d2(2.0), (c(4.0, 0.0), c(4.0, 0.0), c(2.0, 0.0)));
    }

    #[test]
    fn eval_d2_matches_central_differences() {
        let a = TruncatedSeries::new(
            (0..12).map(|k| c(1.0 / (k as f64 + 1.0), (k as f64).sin())).collect(),
        );
        let s = 0.3;
        let (_, d1, _) = a.eval_d2(s);
        let err = |step: f64| ((a.eval(s + step) - a.eval(s - step)) / (2.0 * step) - d1).norm();
        let (e1, e2) = (err(1e-2), err(5e-3));
        // second order: halving the step quarters the error
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn radius_examples() {
        let geometric = TruncatedSeries::from_real(&[1.0; 33]);
        assert_abs_diff_eq!(geometric.estimate_radius(), 1.0, epsilon = 0.2);
        let poly = TruncatedSeries::from_real(&[1.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0]);
        assert_eq!(poly.estimate_radius(), f64::INFINITY);
        // (1 - i s)^{1/2} has its branch point at s = -i
        let algebraic = TruncatedSeries::new(binomial_series(0.5, -I, 64));
        assert_abs_diff_eq!(algebraic.estimate_radius(), 1.0, epsilon = 0.2);
    }

    fn series_strategy(degree: usize) -> impl Strategy<Value = TruncatedSeries> {
        proptest::collection::vec((-1e3..1e3f64, -1e3..1e3f64), degree + 1)
            .prop_map(|v| TruncatedSeries::new(v.into_iter().map(|(r, i)| c(r, i)).collect()))
    }

    fn rel_close(a: &TruncatedSeries, b: &TruncatedSeries, tol: f64) -> bool {
        let scale = a.max_abs().max(b.max_abs()).max(1.0);
        a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).norm() <= tol * scale)
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(
            (a, b, d) in (0usize..=64).prop_flat_map(|k| (series_strategy(k), series_strategy(k), series_strategy(k)))
        ) {
            prop_assert!(rel_close(&(&a * &b), &(&b * &a), 1e-13));
            // products of three terms reach magnitude ~K * 1e9; compare at that scale
            let left = &(&a * &b) * &d;
            let right = &a * &(&b * &d);
            let scale = left.max_abs().max(right.max_abs()).max(1.0);
            prop_assert!(left.coeffs().iter().zip(right.coeffs()).all(|(x, y)| (x - y).norm() <= 1e-13 * scale));
        }

        #[test]
        fn recip_inverts(
            (k, tail) in (1usize..=40).prop_flat_map(|k| (Just(k), proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), k)))
        ) {
            // a constant term dominating the tail keeps the inverse well conditioned
            let mut coeffs = vec![c(2.0 * k as f64, 1.0)];
            coeffs.extend(tail.into_iter().map(|(r, i)| c(r, i)));
            let a = TruncatedSeries::new(coeffs);
            let prod = &a * &a.recip().unwrap();
            prop_assert!((prod.coeff(0) - c(1.0, 0.0)).norm() <= 1e-12);
            prop_assert!(prod.coeffs()[1..].iter().all(|x| x.norm() <= 1e-12));
        }

        #[test]
        fn sqrt_squares_back(
            (k, tail) in (1usize..=40).prop_flat_map(|k| (Just(k), proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), k)))
        ) {
            let mut coeffs = vec![c(-2.0 * k as f64, 0.5)];
            coeffs.extend(tail.into_iter().map(|(r, i)| c(r, i)));
            let a = TruncatedSeries::new(coeffs);
            let root = a.sqrt(a.coeff(0).sqrt()).unwrap();
            prop_assert!(rel_close(&(&root * &root), &a, 1e-12));
        }
    }
}
