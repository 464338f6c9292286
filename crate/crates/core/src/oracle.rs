//! Finite-difference stand-in for `H = -h^2 d^2/dx^2 + V_h` with Dirichlet
//! truncation, and the discrete resolvent norm `1 / sigma_min(T - z)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jwkb::{Certificate, Quasimode, QuasimodeOptions};
use crate::potential::{Anchor, Domain, PotentialFamily};

pub const DEFAULT_SEED: u64 = 0x5eed_0f0a_1c1e;
pub const MAX_ITERATIONS: usize = 500;
pub const SVD_TOLERANCE: f64 = 1e-8;
/// Required grid points per `sqrt(h)`.
pub const POINTS_PER_SCALE: f64 = 40.0;
/// Slack on `lower_bound <= oracle_norm`.
pub const PASS_FACTOR: f64 = 1.1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform grid with `n` interior points on `(x_lo, x_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Discretization {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_lo < x_hi && x_lo.is_finite() && x_hi.is_finite()) {
            return Err(Error::Usage(format!("empty interval [{x_lo}, {x_hi}]")));
        }
        if n < 3 {
            return Err(Error::Usage(format!("need at least 3 interior points, got {n}")));
        }
        Ok(Self { x_lo, x_hi, n })
    }

    /// Interval `a +- max(8 sqrt(h), 3 delta)` with spacing at most
    /// `sqrt(h) / 40`, clipped to `x > 0` on the half-line.
    pub fn around(a: f64, delta: f64, h: f64, domain: Domain) -> Result<Self> {
        let half = (8.0 * h.sqrt()).max(3.0 * delta);
        let mut lo = a - half;
        if domain == Domain::HalfLine {
            lo = lo.max(0.0);
        }
        let hi = a + half;
        let n = ((hi - lo) * POINTS_PER_SCALE / h.sqrt()).ceil() as usize;
        Self::new(lo, hi, n.max(3))
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n + 1) as f64
    }

    /// Interior point `j` in `0..n`.
    pub fn point(&self, j: usize) -> f64 {
        self.x_lo + (j + 1) as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.point(j))
    }
}

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
}

impl TridiagonalOperator {
    pub fn new(sub: Vec<Complex64>, diag: Vec<Complex64>, sup: Vec<Complex64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::Usage(format!(
                "inconsistent diagonals: {} / {} / {}",
                sub.len(),
                n,
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn from_diagonal(diag: Vec<Complex64>) -> Self {
        let m = diag.len().saturating_sub(1);
        Self { sub: vec![ZERO; m], diag, sup: vec![ZERO; m] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn shifted(&self, z: Complex64) -> Self {
        Self {
            sub: self.sub.clone(),
            diag: self.diag.iter().map(|d| d - z).collect(),
            sup: self.sup.clone(),
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// LU factorisation with partial pivoting.
    pub fn factor(&self) -> Option<TridiagonalLu> {
        TridiagonalLu::new(self)
    }
}

/// `-h^2 D_2 + diag(V_h(x_j))` with the three-point stencil.
pub fn assemble(potential: &PotentialFamily, h: f64, disc: &Discretization) -> Result<TridiagonalOperator> {
    if potential.domain() == Domain::HalfLine && !(disc.x_lo >= 0.0) {
        return Err(Error::Usage(format!("half-line grid starts at x_lo = {} < 0", disc.x_lo)));
    }
    let dx = disc.dx();
    let off = Complex64::new(-h * h / (dx * dx), 0.0);
    let diag = disc
        .points()
        .map(|x| potential.eval(h, x).map(|v| v + 2.0 * h * h / (dx * dx)))
        .collect::<Result<Vec<_>>>()?;
    let m = disc.n - 1;
    TridiagonalOperator::new(vec![off; m], diag, vec![off; m])
}

/// Factors `P L U` of a tridiagonal matrix, where `U` has two
/// superdiagonals.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    /// Multipliers of `L`.
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    /// `swap[i]` when rows `i` and `i + 1` were interchanged at step `i`.
    swap: Vec<bool>,
}

impl TridiagonalLu {
    /// `None` when a zero pivot appears.
    pub fn new(a: &TridiagonalOperator) -> Option<Self> {
        let n = a.len();
        let mut dl = a.sub.clone();
        let mut d = a.diag.clone();
        let mut du = a.sup.clone();
        let mut du2 = vec![ZERO; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].l1_norm() >= dl[i].l1_norm() {
                if d[i] != ZERO {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if d.contains(&ZERO) {
            return None;
        }
        Some(Self { dl, d, du, du2, swap })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                v -= self.du2[i] * b[i + 2];
            }
            b[i] = v / self.d[i];
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n {
            let mut v = b[i];
            if i >= 1 {
                v -= self.du[i - 1].conj() * b[i - 1];
            }
            if i >= 2 {
                v -= self.du2[i - 2].conj() * b[i - 2];
            }
            b[i] = v / self.d[i].conj();
        }
        for i in (0..n.saturating_sub(1)).rev() {
            b[i] -= self.dl[i].conj() * b[i + 1];
            if self.swap[i] {
                b.swap(i, i + 1);
            }
        }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Outcome of the smallest-singular-value iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularValue {
    pub sigma_min: f64,
    pub iterations: usize,
    pub converged: bool,
    /// A zero pivot was hit; `sigma_min` is reported as 0.
    pub singular: bool,
}

impl SingularValue {
    /// `1 / sigma_min`, infinite for a singular matrix.
    pub fn resolvent_norm(&self) -> f64 {
        1.0 / self.sigma_min
    }
}

/// `sigma_min(T - z)` from the default seed.
pub fn smallest_singular_value(t: &TridiagonalOperator, z: Complex64) -> SingularValue {
    smallest_singular_value_seeded(t, z, DEFAULT_SEED)
}

/// Inverse iteration on `(A^H A)^{-1}` with `A = T - z`, from a random
/// complex start vector; the estimate after each step is `1 / ||A^{-1} x||`
/// for the current unit vector `x`.
pub fn smallest_singular_value_seeded(t: &TridiagonalOperator, z: Complex64, seed: u64) -> SingularValue {
    let Some(lu) = t.shifted(z).factor() else {
        return SingularValue { sigma_min: 0.0, iterations: 0, converged: true, singular: true };
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..t.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut previous = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        lu.solve(&mut x);
        let ny = norm(&x);
        if !ny.is_finite() {
            return SingularValue { sigma_min: 0.0, iterations: it, converged: true, singular: true };
        }
        let estimate = 1.0 / ny;
        lu.solve_adjoint(&mut x);
        if (estimate - previous).abs() <= SVD_TOLERANCE * estimate {
            return SingularValue { sigma_min: estimate, iterations: it, converged: true, singular: false };
        }
        previous = estimate;
    }
    SingularValue { sigma_min: previous, iterations: MAX_ITERATIONS, converged: false, singular: false }
}

/// Discrete resolvent norms over a list of energies, in input order.
pub fn resolvent_norms(t: &TridiagonalOperator, zs: &[Complex64]) -> Vec<f64> {
    zs.par_iter().map(|&z| smallest_singular_value(t, z).resolvent_norm()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub oracle_norm: f64,
    pub lower_bound: f64,
    pub discrete_residual: f64,
    pub cert_residual: f64,
    pub pass: bool,
    /// `|discrete_residual / cert_residual - 1|`.
    pub residual_mismatch: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
    pub dx: f64,
    pub sigma_min: f64,
    pub iterations: usize,
    pub converged: bool,
    pub singular: bool,
    pub warnings: Vec<String>,
}

/// Rebuilds the quasimode behind `cert` (default cutoff cap) and checks it
/// against the oracle. For a high-energy certificate, `potential` is the
/// rescaled family and the comparison is made in the original units.
pub fn validate(cert: &Certificate, potential: &PotentialFamily, disc: &Discretization) -> Result<ValidationReport> {
    let anchor = Anchor::new(potential, cert.h, cert.a, cert.eta)?;
    let options = QuasimodeOptions { order: cert.n, trunc: Some(cert.trunc), ..QuasimodeOptions::new(cert.n) };
    let q = Quasimode::build(potential, &anchor, &options)?;
    validate_quasimode(&q, cert, disc)
}

/// As [`validate`], for an already built quasimode.
pub fn validate_quasimode(q: &Quasimode, cert: &Certificate, disc: &Discretization) -> Result<ValidationReport> {
    let anchor = q.anchor();
    let (a, h, delta) = (anchor.a, anchor.h, q.delta());
    if disc.x_lo > a - 3.0 * delta || disc.x_hi < a + 3.0 * delta {
        return Err(Error::Usage(format!(
            "grid [{}, {}] does not cover [{}, {}]",
            disc.x_lo,
            disc.x_hi,
            a - 3.0 * delta,
            a + 3.0 * delta
        )));
    }
    if disc.dx() > h.sqrt() / POINTS_PER_SCALE {
        return Err(Error::Usage(format!(
            "grid spacing {} exceeds sqrt(h) / {POINTS_PER_SCALE} = {}",
            disc.dx(),
            h.sqrt() / POINTS_PER_SCALE
        )));
    }
    let sigma = cert.sigma.unwrap_or(1.0);
    let t = assemble(q.potential(), h, disc)?;
    let sv = smallest_singular_value(&t, anchor.z);
    let oracle_norm = sv.resolvent_norm() / sigma;
    let discrete_residual = discrete_residual(q, &t, disc);
    let cert_residual = cert.r / sigma;
    let mut warnings = Vec::new();
    if !sv.converged {
        warnings.push("svd_iteration_cap".to_string());
    }
    if sv.singular {
        warnings.push("singular".to_string());
    }
    Ok(ValidationReport {
        oracle_norm,
        lower_bound: cert.lower_bound,
        discrete_residual,
        cert_residual,
        pass: cert.lower_bound <= PASS_FACTOR * oracle_norm,
        residual_mismatch: (discrete_residual / cert_residual - 1.0).abs(),
        x_lo: disc.x_lo,
        x_hi: disc.x_hi,
        n: disc.n,
        dx: disc.dx(),
        sigma_min: sv.sigma_min,
        iterations: sv.iterations,
        converged: sv.converged,
        singular: sv.singular,
        warnings,
    })
}

fn sample(q: &Quasimode, disc: &Discretization) -> Vec<Complex64> {
    let a = q.anchor().a;
    disc.points().map(|x| q.value(x - a)).collect()
}

/// `||T f~ - z f~|| / ||f~||` on the grid.
pub fn discrete_residual(q: &Quasimode, t: &TridiagonalOperator, disc: &Discretization) -> f64 {
    let f = sample(q, disc);
    let z = q.anchor().z;
    let tf = t.apply(&f);
    let res: Vec<Complex64> = tf.iter().zip(&f).map(|(y, x)| y - z * x).collect();
    norm(&res) / norm(&f)
}

/// Grid error `||(T f~ - z f~) - (H f~ - z f~)(x_j)|| / ||f~||` for each
/// grid size, as `(dx, error)` pairs.
pub fn residual_discretization_error(
    q: &Quasimode,
    x_lo: f64,
    x_hi: f64,
    sizes: &[usize],
) -> Result<Vec<(f64, f64)>> {
    let a = q.anchor().a;
    let (h, z) = (q.anchor().h, q.anchor().z);
    sizes
        .par_iter()
        .map(|&n| {
            let disc = Discretization::new(x_lo, x_hi, n)?;
            let t = assemble(q.potential(), h, &disc)?;
            let f = sample(q, &disc);
            let tf = t.apply(&f);
            let err: Vec<Complex64> = disc
                .points()
                .zip(tf.iter().zip(&f))
                .map(|(x, (y, v))| (y - z * v) - q.residual_at(x - a))
                .collect();
            Ok((disc.dx(), norm(&err) / norm(&f)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jwkb::certify;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zero_potential() -> PotentialFamily {
        PotentialFamily::new(vec![], Domain::Line).unwrap()
    }

    fn laplacian3() -> TridiagonalOperator {
        assemble(&zero_potential(), 1.0, &Discretization::new(0.0, 4.0, 3).unwrap()).unwrap()
    }

    fn dense(t: &TridiagonalOperator) -> Vec<Vec<Complex64>> {
        let n = t.len();
        let mut m = vec![vec![ZERO; n]; n];
        for i in 0..n {
            m[i][i] = t.diag[i];
            if i + 1 < n {
                m[i][i + 1] = t.sup[i];
                m[i + 1][i] = t.sub[i];
            }
        }
        m
    }

    fn random_tridiagonal(n: usize, seed: u64) -> TridiagonalOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let sub = (0..n - 1).map(|_| r()).collect();
        // small diagonal forces pivoting
        let diag = (0..n).map(|_| r() * 0.1).collect();
        let sup = (0..n - 1).map(|_| r()).collect();
        TridiagonalOperator::new(sub, diag, sup).unwrap()
    }

    #[test]
    fn stencil_example() {
        let t = laplacian3();
        assert_eq!(t.diag, vec![c(2.0, 0.0); 3]);
        assert_eq!(t.sub, vec![c(-1.0, 0.0); 2]);
        assert_eq!(t.sup, vec![c(-1.0, 0.0); 2]);
    }

    #[test]
    fn linear_potential_diagonal() {
        let p = PotentialFamily::monomial(c(0.0, 1.0), 1.0, Domain::Line).unwrap();
        let disc = Discretization::new(0.0, 2.0, 3).unwrap();
        let t = assemble(&p, 1.0, &disc).unwrap();
        assert_eq!(disc.point(1), 1.0);
        assert_eq!(t.diag[1], c(2.0 / 0.25, 1.0));
    }

    #[test]
    fn half_line_grid_must_be_positive() {
        let p = PotentialFamily::monomial(c(1.0, 1.0), 2.0, Domain::HalfLine).unwrap();
        let disc = Discretization::new(-1.0, 1.0, 5).unwrap();
        assert!(assemble(&p, 0.1, &disc).is_err());
        assert!(Discretization::new(1.0, 1.0, 5).is_err());
        assert!(Discretization::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn lu_solves_match_dense_products() {
        for seed in 0..5 {
            let t = random_tridiagonal(9, seed);
            let m = dense(&t);
            let lu = t.factor().unwrap();
            let x: Vec<Complex64> = (0..9).map(|k| c(k as f64, 1.0 - k as f64 * 0.3)).collect();
            let mut b = t.apply(&x);
            lu.solve(&mut b);
            for (u, v) in b.iter().zip(&x) {
                assert!((u - v).norm() < 1e-10, "seed {seed}");
            }
            let mut bh: Vec<Complex64> = (0..9)
                .map(|i| (0..9).map(|j| m[j][i].conj() * x[j]).sum())
                .collect();
            lu.solve_adjoint(&mut bh);
            for (u, v) in bh.iter().zip(&x) {
                assert!((u - v).norm() < 1e-10, "seed {seed} adjoint");
            }
        }
    }

    #[test]
    fn zero_pivot_is_flagged() {
        let t = TridiagonalOperator::from_diagonal(vec![c(1.0, 0.0), ZERO, c(2.0, 0.0)]);
        let sv = smallest_singular_value(&t, ZERO);
        assert!(sv.singular);
        assert_eq!(sv.sigma_min, 0.0);
    }

    #[test]
    fn diagonal_example() {
        let t = TridiagonalOperator::from_diagonal(vec![c(3.0, 0.0), c(0.0, 1.0), c(5.0, 0.0)]);
        let sv = smallest_singular_value(&t, ZERO);
        assert!(sv.converged);
        assert_abs_diff_eq!(sv.sigma_min, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn laplacian_singular_values() {
        let t = laplacian3();
        let sv = smallest_singular_value(&t, ZERO);
        assert_abs_diff_eq!(sv.sigma_min, 2.0 - 2f64.sqrt(), epsilon = 1e-8);
        let at_eigenvalue = smallest_singular_value(&t, c(2.0 - 2f64.sqrt(), 0.0));
        assert!(at_eigenvalue.sigma_min <= 1e-10);
    }

    #[test]
    fn dirichlet_laplacian_closed_form() {
        let n = 40;
        let t = TridiagonalOperator::new(
            vec![c(-1.0, 0.0); n - 1],
            vec![c(2.0, 0.0); n],
            vec![c(-1.0, 0.0); n - 1],
        )
        .unwrap();
        let exact = |k: usize| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
        // shift between eigenvalues 3 and 4 so the smallest |lambda - z| is known
        let z = 0.3 * exact(3) + 0.7 * exact(4);
        let sv = smallest_singular_value(&t, c(z, 0.0));
        assert!(sv.converged);
        assert_abs_diff_eq!(sv.sigma_min, (exact(4) - z).abs(), epsilon = 1e-8);
    }

    fn cubic_quasimode(h: f64) -> Quasimode {
        let p = PotentialFamily::monomial(c(0.0, 1.0), 3.0, Domain::Line).unwrap();
        let anchor = Anchor::new(&p, h, 1.0, 1.0).unwrap();
        Quasimode::build(&p, &anchor, &QuasimodeOptions::new(1)).unwrap()
    }

    #[test]
    fn seed_invariance() {
        let q = cubic_quasimode(0.1);
        let t = assemble(q.potential(), 0.1, &Discretization::new(-3.0, 5.0, 600).unwrap()).unwrap();
        let z = q.anchor().z;
        let base = smallest_singular_value(&t, z).sigma_min;
        for seed in 1..=5 {
            let other = smallest_singular_value_seeded(&t, z, seed).sigma_min;
            assert!((other - base).abs() <= 1e-8 * base, "seed {seed}: {other} vs {base}");
        }
    }

    #[test]
    fn enlarging_the_interval_keeps_the_norm() {
        let q = cubic_quasimode(0.1);
        let z = q.anchor().z;
        let dx: f64 = 0.01;
        let mut prev = 0.0;
        for half in [3.0, 4.0, 5.0, 6.0] {
            let (lo, hi) = (1.0 - half, 1.0 + half);
            let n = ((hi - lo) / dx).round() as usize - 1;
            let t = assemble(q.potential(), 0.1, &Discretization::new(lo, hi, n).unwrap()).unwrap();
            let norm = smallest_singular_value(&t, z).resolvent_norm();
            assert!(norm >= prev * (1.0 - 1e-6), "half = {half}: {norm} < {prev}");
            prev = norm;
        }
    }

    #[test]
    fn validation_examples() {
        let q = cubic_quasimode(0.05);
        let cert = q.residual_ratio().unwrap();
        let disc = Discretization::new(-4.0, 6.0, 4000).unwrap();
        let report = validate_quasimode(&q, &cert, &disc).unwrap();
        assert!(report.pass, "{report:?}");

        let mut inflated = cert.clone();
        inflated.lower_bound = 1.2 * report.oracle_norm;
        assert!(!validate_quasimode(&q, &inflated, &disc).unwrap().pass);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let q = cubic_quasimode(0.01);
        let cert = q.residual_ratio().unwrap();
        let disc = Discretization::new(-4.0, 6.0, 50).unwrap();
        assert!(matches!(validate_quasimode(&q, &cert, &disc), Err(Error::Usage(_))));
    }

    #[test]
    fn validate_rebuilds_from_the_certificate() {
        let p = PotentialFamily::monomial(c(0.0, 1.0), 3.0, Domain::Line).unwrap();
        let anchor = Anchor::new(&p, 0.1, 1.0, 1.0).unwrap();
        let cert = certify(&p, &anchor, &QuasimodeOptions::new(0)).unwrap();
        let disc = Discretization::around(1.0, cert.delta, 0.1, Domain::Line).unwrap();
        let report = validate(&cert, &p, &disc).unwrap();
        assert!(report.pass);
        assert!(report.discrete_residual > 0.0);
    }
}
