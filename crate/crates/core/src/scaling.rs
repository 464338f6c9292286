//! High-energy operators `P^2 + sum c_m Q^{p_m}` and their unitary
//! rescaling to the semiclassical family `h^2 P^2 + V_h(Q)`.
//!
//! With `u = sigma^{1/p_n}` and `h = u^{-(p_n+2)/2}`,
//! `||(H - sigma z)^{-1}|| = sigma^{-1} ||(h^2 P^2 + V_h - z)^{-1}||`, where
//! `V_h(x) = sigma^{-1} V(u x) = sum c_m h^{e_m} x^{p_m}` and
//! `e_m = 2 (p_n - p_m) / (p_n + 2)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jwkb::{certify, loglog_fit, Certificate, QuasimodeOptions};
use crate::potential::{Anchor, Domain, PotentialFamily, Term, IM_DERIVATIVE_THRESHOLD};

/// Default sigma grid for high-energy sweeps.
pub const DEFAULT_SIGMA_GRID: [f64; 5] = [1e1, 1e2, 1e3, 1e4, 1e5];

pub const NEWTON_MAX_ITERATIONS: usize = 100;
pub const NEWTON_TOLERANCE: f64 = 1e-12;
/// Default half-width of the fallback root scan.
pub const DEFAULT_SCAN_RANGE: f64 = 10.0;
const SCAN_POINTS: usize = 4000;

/// `P^2 + V(Q)` with an h-independent power-law potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighEnergyOperator {
    potential: PotentialFamily,
}

impl HighEnergyOperator {
    /// Requires a top coefficient with positive real and imaginary parts, an
    /// even top power on the line and a positive top power on the half-line.
    pub fn new(potential: PotentialFamily) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidPotential(msg));
        if potential.terms().iter().any(|t| t.h_power != 0.0) {
            return invalid("high-energy potentials carry no h-exponents".into());
        }
        let Some(top) = potential.top_term() else {
            return invalid("empty potential".into());
        };
        if !(top.coeff.re > 0.0 && top.coeff.im > 0.0) {
            return invalid(format!("top coefficient {} needs positive real and imaginary parts", top.coeff));
        }
        match potential.domain() {
            Domain::Line => {
                if !(top.power > 0.0 && top.power % 2.0 == 0.0) {
                    return invalid(format!("top power {} must be a positive even integer", top.power));
                }
            }
            Domain::HalfLine => {
                if !(top.power > 0.0) {
                    return invalid(format!("top power {} must be positive", top.power));
                }
            }
        }
        Ok(Self { potential })
    }

    pub fn potential(&self) -> &PotentialFamily {
        &self.potential
    }

    pub fn top_power(&self) -> f64 {
        self.top().power
    }

    pub fn top_coeff(&self) -> Complex64 {
        self.top().coeff
    }

    fn top(&self) -> &Term {
        self.potential.top_term().expect("validated")
    }

    pub fn to_semiclassical(&self, sigma: f64) -> Result<ScalingMap> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Usage(format!("sigma = {sigma} must be positive")));
        }
        let pn = self.top_power();
        let u = sigma.powf(1.0 / pn);
        let h = u.powf(-(pn + 2.0) / 2.0);
        let terms = self
            .potential
            .terms()
            .iter()
            .map(|t| Term::new(t.coeff, t.power, rescaled_exponent(pn, t.power)))
            .collect();
        let family = PotentialFamily::new(terms, self.potential.domain())?;
        Ok(ScalingMap { sigma, u, h, family, norm_factor: 1.0 / sigma })
    }
}

/// `e_m = 2 (p_n - p_m) / (p_n + 2)`.
pub fn rescaled_exponent(top_power: f64, power: f64) -> f64 {
    2.0 * (top_power - power) / (top_power + 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingMap {
    pub sigma: f64,
    pub u: f64,
    pub h: f64,
    /// The rescaled family `V_h`.
    pub family: PotentialFamily,
    /// `sigma^{-1}`.
    pub norm_factor: f64,
}

/// `0 < arg z < arg c_n` with principal arguments.
pub fn sector_check(z: Complex64, c_n: Complex64) -> Result<bool> {
    if z == Complex64::new(0.0, 0.0) || c_n == Complex64::new(0.0, 0.0) {
        return Err(Error::Usage("sector check needs nonzero z and c_n".into()));
    }
    let arg = z.arg();
    Ok(0.0 < arg && arg < c_n.arg())
}

/// An anchor found by [`AnchorSolver`], with the other real roots of
/// `Im V_h(a) = Im z` that were seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSolution {
    pub anchor: Anchor,
    pub newton_converged: bool,
    pub alternatives: Vec<f64>,
}

/// Root finder for `Im V_h(a) = Im z`: Newton from an initial guess, with
/// a scan of `[-range, range]` (`(0, range]` on the half-line) as fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorSolver {
    pub scan_range: f64,
}

impl Default for AnchorSolver {
    fn default() -> Self {
        Self { scan_range: DEFAULT_SCAN_RANGE }
    }
}

impl AnchorSolver {
    /// Without `a_init` only the scan runs. Among scanned roots the one
    /// with the largest `|Im V_h'(a)|` wins, ties going to the larger `a`.
    pub fn solve(
        &self,
        potential: &PotentialFamily,
        h: f64,
        z: Complex64,
        a_init: Option<f64>,
    ) -> Result<AnchorSolution> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::Usage(format!("h = {h} must be finite and >= 0")));
        }
        if !(self.scan_range > 0.0) {
            return Err(Error::Usage(format!("scan range {} must be positive", self.scan_range)));
        }
        if potential.is_real() {
            return Err(Error::DegenerateAnchor("Im V_h' vanishes identically for a real potential".into()));
        }
        let newton_root = a_init.and_then(|a0| newton(potential, h, z.im, a0));
        let scanned = self.scan(potential, h, z.im);

        let mut last_error = None;
        if let Some(a) = newton_root {
            match accept(potential, h, z, a) {
                Ok(anchor) => {
                    let alternatives = scanned.into_iter().filter(|&b| (b - a).abs() > 1e-8).collect();
                    return Ok(AnchorSolution { anchor, newton_converged: true, alternatives });
                }
                Err(e) => last_error = Some(e),
            }
        }

        let mut ranked: Vec<(f64, f64)> = scanned
            .iter()
            .map(|&a| (a, potential.deriv(h, a).map(|d| d.im.abs()).unwrap_or(0.0)))
            .collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(y.0.total_cmp(&x.0)));
        for &(a, _) in &ranked {
            match accept(potential, h, z, a) {
                Ok(anchor) => {
                    let alternatives = scanned.iter().copied().filter(|&b| b != a).collect();
                    return Ok(AnchorSolution { anchor, newton_converged: false, alternatives });
                }
                Err(e) => {
                    // keep the most informative failure: infeasibility outranks degeneracy
                    if !matches!(last_error, Some(Error::InfeasibleEnergy { .. })) {
                        last_error = Some(e);
                    }
                }
            }
        }
        Err(last_error.unwrap_or(Error::NoAnchor { target: z.im }))
    }

    /// Real roots of `Im V_h(a) - target` from sign changes on a uniform
    /// grid, refined by bisection.
    fn scan(&self, potential: &PotentialFamily, h: f64, target: f64) -> Vec<f64> {
        let (lo, hi) = match potential.domain() {
            Domain::Line => (-self.scan_range, self.scan_range),
            Domain::HalfLine => (self.scan_range / SCAN_POINTS as f64, self.scan_range),
        };
        let g = |a: f64| potential.eval_unchecked(h, a).im - target;
        let xs: Vec<f64> = (0..=SCAN_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / SCAN_POINTS as f64)
            .collect();
        let mut roots = Vec::new();
        for w in xs.windows(2) {
            let (mut x0, mut x1) = (w[0], w[1]);
            let (mut g0, g1) = (g(x0), g(x1));
            if g0 == 0.0 {
                roots.push(x0);
                continue;
            }
            if g0.signum() == g1.signum() || g1 == 0.0 {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if mid == x0 || mid == x1 {
                    break;
                }
                let gm = g(mid);
                if gm.signum() == g0.signum() {
                    x0 = mid;
                    g0 = gm;
                } else {
                    x1 = mid;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        if g(hi) == 0.0 {
            roots.push(hi);
        }
        roots
            .into_iter()
            .map(|a| newton(potential, h, target, a).filter(|b| (b - a).abs() < 1e-6).unwrap_or(a))
            .collect()
    }
}

/// Newton on `Im V_h(a) = target`; `None` on non-convergence or when the
/// iterate leaves the domain.
fn newton(potential: &PotentialFamily, h: f64, target: f64, a0: f64) -> Option<f64> {
    let mut a = a0;
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let g = potential.eval(h, a).ok()?.im - target;
        if g.abs() <= NEWTON_TOLERANCE * target.abs().max(1.0) {
            // one polishing step
            if let Ok(d) = potential.deriv(h, a) {
                if d.im != 0.0 {
                    let b = a - g / d.im;
                    if potential.eval(h, b).is_ok_and(|v| (v.im - target).abs() <= g.abs()) {
                        return Some(b);
                    }
                }
            }
            return Some(a);
        }
        let d = potential.deriv(h, a).ok()?.im;
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        a -= g / d;
        if !a.is_finite() {
            return None;
        }
    }
    None
}

fn accept(potential: &PotentialFamily, h: f64, z: Complex64, a: f64) -> Result<Anchor> {
    let v = potential.eval(h, a)?;
    let gap = z.re - v.re;
    if !(gap > 0.0) {
        return Err(Error::InfeasibleEnergy { gap });
    }
    let im_dv = potential.deriv(h, a)?.im;
    if !(im_dv.abs() > IM_DERIVATIVE_THRESHOLD) {
        return Err(Error::DegenerateAnchor(format!("Im V_h'({a}) = {im_dv} vanishes at the root")));
    }
    let anchor = Anchor::new(potential, h, a, im_dv.signum() * gap.sqrt())?;
    anchor.validate(potential)?;
    Ok(anchor)
}

/// Anchor `(a, eta)` with `z = eta^2 + V_h(a)`, Newton started at `a_init`.
pub fn solve_anchor(potential: &PotentialFamily, h: f64, z: Complex64, a_init: f64) -> Result<Anchor> {
    Ok(AnchorSolver::default().solve(potential, h, z, Some(a_init))?.anchor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub a: f64,
    pub eta: f64,
    pub z: Complex64,
}

/// Samples `eta^2 + V_h(a)` over the grid pairs with `Im V_h'(a) != 0`,
/// in `a`-major order. Points outside the domain and `eta = 0` are skipped.
pub fn region_u(potential: &PotentialFamily, h: f64, a_grid: &[f64], eta_grid: &[f64]) -> Vec<RegionSample> {
    a_grid
        .par_iter()
        .flat_map_iter(|&a| {
            let v = potential.eval(h, a).ok().filter(|_| {
                potential.deriv(h, a).is_ok_and(|d| d.im.abs() > IM_DERIVATIVE_THRESHOLD)
            });
            eta_grid
                .iter()
                .filter(move |&&eta| eta != 0.0 && v.is_some())
                .map(move |&eta| RegionSample { a, eta, z: eta * eta + v.unwrap() })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Certificate for `||(H - sigma z)^{-1}||`: the semiclassical certificate
/// at `z` with `r` multiplied by `sigma` and the energy recorded as
/// `sigma z`. Phase diagnostics (`h`, `a`, `eta`, `delta`, ...) refer to
/// the rescaled problem.
pub fn highenergy_lower_bound(
    op: &HighEnergyOperator,
    z: Complex64,
    sigma: f64,
    options: &QuasimodeOptions,
) -> Result<Certificate> {
    let (map, anchor) = highenergy_anchor(op, z, sigma)?;
    let cert = certify(&map.family, &anchor, options)?;
    Ok(lift(cert, &map))
}

/// Rescaling and semiclassical anchor for the high-energy problem at `sigma z`.
pub fn highenergy_anchor(op: &HighEnergyOperator, z: Complex64, sigma: f64) -> Result<(ScalingMap, Anchor)> {
    let c_n = op.top_coeff();
    if !sector_check(z, c_n)? {
        return Err(Error::Usage(format!(
            "z = {z} is outside the sector: arg z = {}, arg c_n = {}",
            z.arg(),
            c_n.arg()
        )));
    }
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(Error::Usage(format!("sigma = {sigma} must be >= 1")));
    }
    let map = op.to_semiclassical(sigma)?;
    let solver = AnchorSolver::default();
    let limit = solver.solve(&map.family, 0.0, z, None)?;
    let anchor = solver.solve(&map.family, map.h, z, Some(limit.anchor.a))?.anchor;
    Ok((map, anchor))
}

fn lift(cert: Certificate, map: &ScalingMap) -> Certificate {
    let r = cert.r * map.sigma;
    Certificate {
        z_re: cert.z_re * map.sigma,
        z_im: cert.z_im * map.sigma,
        r,
        lower_bound: 1.0 / r,
        sigma: Some(map.sigma),
        ..cert
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweep {
    pub rows: Vec<Certificate>,
    /// Slope of `log lower_bound` against `log sigma`.
    pub slope: f64,
}

/// [`highenergy_lower_bound`] over a list of `sigma` values, in input order.
pub fn sweep_sigma(
    op: &HighEnergyOperator,
    z: Complex64,
    sigmas: &[f64],
    options: &QuasimodeOptions,
) -> Result<SigmaSweep> {
    if sigmas.is_empty() {
        return Err(Error::Usage("empty sigma list".into()));
    }
    let rows = sigmas
        .par_iter()
        .map(|&s| highenergy_lower_bound(op, z, s, options))
        .collect::<Result<Vec<_>>>()?;
    let slope = if rows.len() >= 2 {
        let s: Vec<f64> = rows.iter().map(|c| c.sigma.unwrap_or(1.0)).collect();
        let b: Vec<f64> = rows.iter().map(|c| c.lower_bound).collect();
        loglog_fit(&s, &b).0
    } else {
        f64::NAN
    };
    Ok(SigmaSweep { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quartic_with_lower_terms() -> HighEnergyOperator {
        let terms = (1..=4).map(|m| Term::new(c(1.0, 1.0), m as f64, 0.0)).collect();
        HighEnergyOperator::new(PotentialFamily::new(terms, Domain::Line).unwrap()).unwrap()
    }

    /// `(1+i)(x + x^4)`: the lower term rescales with `h^1`.
    fn quartic_with_linear_term() -> HighEnergyOperator {
        let terms = [1.0, 4.0].iter().map(|&p| Term::new(c(1.0, 1.0), p, 0.0)).collect();
        HighEnergyOperator::new(PotentialFamily::new(terms, Domain::Line).unwrap()).unwrap()
    }

    fn pure_quartic() -> HighEnergyOperator {
        HighEnergyOperator::new(PotentialFamily::monomial(c(1.0, 1.0), 4.0, Domain::Line).unwrap()).unwrap()
    }

    fn centrifugal() -> HighEnergyOperator {
        let terms = vec![Term::new(c(1.0, 0.0), -2.0, 0.0), Term::new(c(1.0, 1.0), 2.0, 0.0)];
        HighEnergyOperator::new(PotentialFamily::new(terms, Domain::HalfLine).unwrap()).unwrap()
    }

    #[test]
    fn quartic_scaling_example() {
        let map = quartic_with_lower_terms().to_semiclassical(1e4).unwrap();
        assert_relative_eq!(map.u, 10.0, max_relative = 1e-14);
        assert_relative_eq!(map.h, 1e-3, max_relative = 1e-14);
        assert_relative_eq!(map.norm_factor, 1e-4);
        let e: Vec<f64> = map.family.terms().iter().map(|t| t.h_power).collect();
        for (got, want) in e.iter().zip([1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_scaling() {
        let op = quartic_with_lower_terms();
        let map = op.to_semiclassical(1.0).unwrap();
        assert_eq!((map.u, map.h), (1.0, 1.0));
        for x in [-1.3, 0.2, 2.0] {
            assert_eq!(map.family.eval(map.h, x).unwrap(), op.potential().eval(1.0, x).unwrap());
        }
    }

    #[test]
    fn half_line_scaling_example() {
        let map = centrifugal().to_semiclassical(16.0).unwrap();
        assert_relative_eq!(map.u, 4.0, max_relative = 1e-15);
        assert_relative_eq!(map.h, 1.0 / 16.0, max_relative = 1e-15);
        assert_eq!(map.family.terms()[0].h_power, 2.0);
    }

    #[test]
    fn round_trip_identity() {
        for op in [quartic_with_lower_terms(), centrifugal()] {
            for sigma in [3.0, 1e2, 1e5] {
                let map = op.to_semiclassical(sigma).unwrap();
                for x in [0.1, 0.7, 1.9] {
                    let lhs = map.family.eval(map.h, x).unwrap();
                    let rhs = op.potential().eval(1.0, map.u * x).unwrap() / sigma;
                    assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm(), "sigma = {sigma}, x = {x}");
                }
            }
        }
    }

    #[test]
    fn invalid_high_energy_operators() {
        let odd = PotentialFamily::monomial(c(1.0, 1.0), 3.0, Domain::Line).unwrap();
        assert!(HighEnergyOperator::new(odd).is_err());
        let real = PotentialFamily::monomial(c(1.0, 0.0), 2.0, Domain::Line).unwrap();
        assert!(HighEnergyOperator::new(real).is_err());
        let scaled = PotentialFamily::new(vec![Term::new(c(1.0, 1.0), 2.0, 0.5)], Domain::Line).unwrap();
        assert!(HighEnergyOperator::new(scaled).is_err());
        assert!(pure_quartic().to_semiclassical(0.0).is_err());
    }

    #[test]
    fn sector_examples() {
        let cn = c(1.0, 1.0);
        assert!(sector_check(Complex64::from_polar(1.0, PI / 8.0), cn).unwrap());
        assert!(!sector_check(c(1.0, 0.0), cn).unwrap());
        assert!(!sector_check(I, cn).unwrap());
        assert!(sector_check(c(0.0, 0.0), cn).is_err());
    }

    #[test]
    fn linear_anchor_examples() {
        let p = PotentialFamily::monomial(I, 1.0, Domain::Line).unwrap();
        let anchor = solve_anchor(&p, 0.05, c(1.0, 0.5), 0.0).unwrap();
        assert_relative_eq!(anchor.a, 0.5, epsilon = 1e-12);
        assert_relative_eq!(anchor.eta, 1.0, epsilon = 1e-12);
        anchor.validate(&p).unwrap();
        assert!(matches!(
            solve_anchor(&p, 0.05, c(-1.0, 0.5), 0.0),
            Err(Error::InfeasibleEnergy { .. })
        ));
    }

    #[test]
    fn real_potential_is_degenerate() {
        let p = PotentialFamily::monomial(c(1.0, 0.0), 2.0, Domain::Line).unwrap();
        assert!(matches!(solve_anchor(&p, 0.1, c(1.0, 0.0), 0.5), Err(Error::DegenerateAnchor(_))));
    }

    #[test]
    fn newton_failure_falls_back_to_scan() {
        // Newton on x^3 - 2x + 2 cycles between 0 and 1
        let p = PotentialFamily::new(
            vec![Term::new(-2.0 * I, 1.0, 0.0), Term::new(I, 3.0, 0.0)],
            Domain::Line,
        )
        .unwrap();
        let z = c(5.0, -2.0);
        let sol = AnchorSolver::default().solve(&p, 0.1, z, Some(0.0)).unwrap();
        assert!(!sol.newton_converged);
        let a = sol.anchor.a;
        assert!((a.powi(3) - 2.0 * a + 2.0).abs() < 1e-12);
        assert_relative_eq!(a, -1.769292354238631, epsilon = 1e-12);
        sol.anchor.validate(&p).unwrap();
    }

    #[test]
    fn unreachable_energy_has_no_anchor() {
        // Im V = x^2 >= 0 never reaches Im z = -1
        let p = PotentialFamily::monomial(c(1.0, 1.0), 2.0, Domain::Line).unwrap();
        assert!(matches!(solve_anchor(&p, 0.1, c(1.0, -1.0), 1.0), Err(Error::NoAnchor { .. })));
    }

    /// Root of `Im((1+i) a^4) = Im z` with `a > 0`, by bisection.
    fn h0_root(z: Complex64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(4) < z.im {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn anchors_approach_the_h0_root() {
        let op = quartic_with_linear_term();
        let z = Complex64::from_polar(1.0, PI / 8.0);
        let a0 = h0_root(z);
        assert!(a0.powi(4) < z.re, "limit root must be feasible");
        for sigma in [1e4, 1e6, 1e8] {
            let (map, anchor) = highenergy_anchor(&op, z, sigma).unwrap();
            assert!(map.h <= 1e-3 * (1.0 + 1e-12));
            anchor.validate(&map.family).unwrap();
            assert!((anchor.a - a0).abs() < 1e-3, "h = {}: a = {}, a0 = {a0}", map.h, anchor.a);
        }
    }

    #[test]
    fn anchor_cauchy_sequence_at_decade_h() {
        let z = Complex64::from_polar(1.0, PI / 8.0);
        let a0 = h0_root(z);
        for op in [quartic_with_lower_terms(), quartic_with_linear_term()] {
            let a: Vec<f64> = [1e-2f64, 1e-3, 1e-4]
                .iter()
                .map(|&h| {
                    // sigma with sigma^{-3/4} = h
                    let map = op.to_semiclassical(h.powf(-4.0 / 3.0)).unwrap();
                    assert_relative_eq!(map.h, h, max_relative = 1e-12);
                    solve_anchor(&map.family, map.h, z, a0).unwrap().a
                })
                .collect();
            assert!((a[1] - a[2]).abs() < (a[0] - a[1]).abs(), "{a:?}");
        }
    }

    #[test]
    fn region_examples() {
        let linear = PotentialFamily::monomial(I, 1.0, Domain::Line).unwrap();
        let samples = region_u(&linear, 0.1, &linspace(-3.0, 3.0, 13), &linspace(-2.0, 2.0, 9));
        assert_eq!(samples.len(), 13 * 8);
        assert!(samples.iter().all(|s| s.z.re > 0.0 && (s.z.im - s.a).abs() < 1e-15));
        // z depends only on eta^2
        for pair in samples.chunks(8) {
            for (lo, hi) in pair[..4].iter().zip(pair[4..].iter().rev()) {
                assert_eq!(lo.z, hi.z);
            }
        }

        let real = PotentialFamily::monomial(c(1.0, 0.0), 2.0, Domain::Line).unwrap();
        assert!(region_u(&real, 0.1, &linspace(-1.0, 1.0, 5), &[1.0]).is_empty());

        let single = region_u(&linear, 0.1, &[0.0], &[1.0]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].z, c(1.0, 0.0));
    }

    #[test]
    fn sigma_run_reports_rescaled_h() {
        let z = Complex64::from_polar(1.0, PI / 8.0);
        let (map, _) = highenergy_anchor(&pure_quartic(), z, 1e4).unwrap();
        assert_relative_eq!(map.h, 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn sector_boundary_is_rejected() {
        let opts = QuasimodeOptions::new(1);
        let err = highenergy_lower_bound(&pure_quartic(), c(1.0, 0.0), 100.0, &opts).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let err = highenergy_lower_bound(&pure_quartic(), I, 100.0, &opts).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn lifted_certificate_scales_by_sigma() {
        let op = pure_quartic();
        let z = Complex64::from_polar(1.0, PI / 8.0);
        let opts = QuasimodeOptions::new(1);
        let cert = highenergy_lower_bound(&op, z, 100.0, &opts).unwrap();
        let (map, anchor) = highenergy_anchor(&op, z, 100.0).unwrap();
        let inner = certify(&map.family, &anchor, &opts).unwrap();
        assert_relative_eq!(cert.lower_bound, inner.lower_bound / 100.0, max_relative = 1e-12);
        assert_relative_eq!(cert.z_re, 100.0 * z.re, max_relative = 1e-12);
        assert_eq!(cert.sigma, Some(100.0));
        assert_eq!(cert.h, map.h);
    }
}
