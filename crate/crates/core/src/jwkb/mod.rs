//! JWKB quasimodes `f~(a + s) = xi(s) exp(-psi(s))` and the resolvent-norm
//! certificates they yield.
//!
//! Pipeline: [`PhaseExpansion::new`] solves the eikonal and transport
//! equations as series about the anchor, [`select_delta`] continues the
//! phase along the axis and picks the cutoff radius, and
//! [`Quasimode::residual_ratio`] integrates `|H f~ - z f~|^2` and `|f~|^2`.

mod cutoff;
mod field;
mod phase;
mod quadrature;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Anchor, Domain, PotentialFamily};

pub use cutoff::cutoff_eval;
pub use field::PhaseField;
pub use phase::{build_eikonal, build_transport, PhaseExpansion, PhiCascade};
pub use quadrature::{gauss_legendre, CompositeRule};

/// Points of the grid on which the concentration bound is certified.
pub const GAMMA_GRID_POINTS: usize = 512;
/// Maximum number of halvings of the cutoff radius.
pub const MAX_HALVINGS: usize = 20;
/// Bisection steps refining the largest admissible cutoff radius.
const BISECTION_STEPS: usize = 30;
/// Default upper limit on the cutoff radius on the line.
pub const DEFAULT_DELTA_CAP: f64 = 4.0;

pub const GAUSS_NODES: usize = 16;
pub const MIN_PANELS: usize = 64;
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
const MAX_REFINEMENTS: usize = 10;

/// Default h grid for order sweeps.
pub const DEFAULT_H_GRID: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

/// Default truncation degree for JWKB order `n`.
pub fn default_trunc(order: usize) -> usize {
    2 * order + 16
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeOptions {
    pub order: usize,
    /// Truncation degree; `None` means [`default_trunc`].
    pub trunc: Option<usize>,
    /// Upper limit for the cutoff radius search.
    pub delta_cap: f64,
}

impl QuasimodeOptions {
    pub fn new(order: usize) -> Self {
        Self { order, trunc: None, delta_cap: DEFAULT_DELTA_CAP }
    }

    pub fn with_trunc(mut self, trunc: usize) -> Self {
        self.trunc = Some(trunc);
        self
    }

    pub fn trunc(&self) -> usize {
        self.trunc.unwrap_or_else(|| default_trunc(self.order))
    }
}

impl Default for QuasimodeOptions {
    fn default() -> Self {
        Self::new(1)
    }
}

/// Result of the cutoff-radius search.
#[derive(Debug, Clone)]
pub struct DeltaSelection {
    pub delta: f64,
    pub gamma: f64,
    /// Largest `|rho|` on the certification grid.
    pub beta: f64,
    pub halvings: usize,
    pub field: PhaseField,
}

/// Checks the concentration bound on the certification grid: the lower
/// bound `gamma s^2 <= Re psi_{-1}(s)` on `[-delta, delta]`, where it
/// controls the cutoff region, and the upper bound
/// `Re psi_{-1}(s) <= 3 gamma s^2` on the plateau `|s| <= delta/2`, where
/// it controls the norm of the quasimode from below. Returns
/// `(gamma, beta)` when both hold with `gamma > 0` and `rho` finite.
fn certify_concentration(field: &PhaseField, delta: f64) -> Option<(f64, f64)> {
    let n = GAMMA_GRID_POINTS;
    let (mut lo, mut hi, mut beta) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for i in 0..n {
        let s = -delta + 2.0 * delta * i as f64 / (n - 1) as f64;
        if s == 0.0 {
            continue;
        }
        let (psi, rho) = field.eikonal_at(s);
        let ratio = psi.re / (s * s);
        if !ratio.is_finite() || !rho.norm().is_finite() {
            return None;
        }
        lo = lo.min(ratio);
        if s.abs() <= 0.5 * delta {
            hi = hi.max(ratio);
        }
        beta = beta.max(rho.norm());
    }
    (lo > 0.0 && hi <= 3.0 * lo).then_some((lo, beta))
}

/// Picks the cutoff radius `delta` and concentration rate `gamma`.
///
/// The phase is continued along the axis up to the cap (half the anchor
/// position on the half-line); the radius is halved from there until the
/// concentration bound is certified on the grid, then refined by
/// bisection to the largest certified value.
pub fn select_delta(
    phase: &PhaseExpansion,
    potential: &PotentialFamily,
    delta_cap: f64,
) -> Result<DeltaSelection> {
    if !(delta_cap > 0.0) {
        return Err(Error::Usage(format!("delta cap {delta_cap} must be positive")));
    }
    let anchor = phase.anchor();
    let mut cap = delta_cap;
    if potential.domain() == Domain::HalfLine {
        cap = cap.min(0.5 * anchor.a);
    }
    let field = PhaseField::build(potential, phase, cap);
    let reach = field.symmetric_reach();
    let degenerate = || {
        Error::DegenerateAnchor(format!(
            "no cutoff radius certifies the concentration bound at a = {}, eta = {}",
            anchor.a, anchor.eta
        ))
    };
    if !(reach > 0.0) {
        return Err(degenerate());
    }

    let mut delta = cap.min(reach);
    let mut halvings = 0;
    let mut certified = certify_concentration(&field, delta);
    while certified.is_none() {
        if halvings == MAX_HALVINGS {
            return Err(degenerate());
        }
        delta *= 0.5;
        halvings += 1;
        certified = certify_concentration(&field, delta);
    }
    let (mut gamma, mut beta) = certified.expect("certified");
    if halvings > 0 {
        let (mut good, mut bad) = (delta, 2.0 * delta);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (good + bad);
            match certify_concentration(&field, mid) {
                Some((g, b)) => {
                    good = mid;
                    gamma = g;
                    beta = b;
                }
                None => bad = mid,
            }
        }
        delta = good;
    }
    Ok(DeltaSelection { delta, gamma, beta, halvings, field })
}

/// A resolvent-norm lower bound `||(H - z)^{-1}|| >= 1 / r` certified by a
/// quasimode with residual ratio `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub z_re: f64,
    pub z_im: f64,
    pub h: f64,
    pub n: usize,
    pub r: f64,
    pub lower_bound: f64,
    pub delta: f64,
    pub gamma: f64,
    pub panels: usize,
    pub warnings: Vec<String>,
    pub a: f64,
    pub eta: f64,
    pub trunc: usize,
    pub beta: f64,
    /// `||f~||_2^2`.
    pub norm_sq: f64,
    /// `||xi (H f - z f)|| / ||f~||`.
    pub tail_contribution: f64,
    /// `h^2 (||f xi''|| + 2 ||f' xi'||) / ||f~||`.
    pub cutoff_contribution: f64,
    /// Empirical constant `r h^{-(n+2)}`.
    pub prefactor: f64,
    /// Set when the certificate refers to the high-energy operator at `sigma z`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<f64>,
}

impl Certificate {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Integrals {
    norm_sq: f64,
    residual_sq: f64,
    tail_sq: f64,
    xi2_sq: f64,
    xi1_sq: f64,
}

/// A JWKB quasimode with its cutoff data.
#[derive(Debug, Clone)]
pub struct Quasimode {
    potential: PotentialFamily,
    phase: PhaseExpansion,
    selection: DeltaSelection,
}

impl Quasimode {
    pub fn build(
        potential: &PotentialFamily,
        anchor: &Anchor,
        options: &QuasimodeOptions,
    ) -> Result<Self> {
        let phase = PhaseExpansion::new(potential, anchor, options.order, options.trunc())
            .map_err(|e| match e {
                Error::Singularity | Error::BranchPoint => Error::DegenerateAnchor(format!(
                    "turning point at the anchor a = {}, eta = {}",
                    anchor.a, anchor.eta
                )),
                other => other,
            })?;
        let selection = select_delta(&phase, potential, options.delta_cap)?;
        Ok(Self { potential: potential.clone(), phase, selection })
    }

    pub fn potential(&self) -> &PotentialFamily {
        &self.potential
    }

    pub fn phase(&self) -> &PhaseExpansion {
        &self.phase
    }

    pub fn field(&self) -> &PhaseField {
        &self.selection.field
    }

    pub fn anchor(&self) -> &Anchor {
        self.phase.anchor()
    }

    pub fn delta(&self) -> f64 {
        self.selection.delta
    }

    pub fn gamma(&self) -> f64 {
        self.selection.gamma
    }

    pub fn beta(&self) -> f64 {
        self.selection.beta
    }

    pub fn order(&self) -> usize {
        self.phase.order()
    }

    /// `f~(a + s)`.
    pub fn value(&self, s: f64) -> Complex64 {
        let (xi, _, _) = cutoff_eval(self.delta(), s);
        if xi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (psi, _, _) = self.field().eval(s);
        xi * (-psi).exp()
    }

    /// Pointwise residual `(H f~ - z f~)(a + s)`, with the exact potential.
    pub fn residual_at(&self, s: f64) -> Complex64 {
        self.pointwise(s).residual
    }

    /// `(H f - z f) / f` at `s`, i.e. the bracket multiplying `f` where the
    /// cutoff is identically one.
    pub fn bracket_at(&self, s: f64) -> Complex64 {
        let anchor = self.anchor();
        let h = anchor.h;
        let (_, dpsi, ddpsi) = self.field().eval(s);
        let v = self.potential.eval_unchecked(h, anchor.a + s);
        -h * h * (dpsi * dpsi - ddpsi) + (v - anchor.z)
    }

    fn pointwise(&self, s: f64) -> Pointwise {
        let anchor = self.anchor();
        let h = anchor.h;
        let (xi, dxi, ddxi) = cutoff_eval(self.delta(), s);
        if xi == 0.0 && dxi == 0.0 && ddxi == 0.0 {
            return Pointwise::default();
        }
        let (psi, dpsi, ddpsi) = self.field().eval(s);
        let f = (-psi).exp();
        let v = self.potential.eval_unchecked(h, anchor.a + s);
        let bracket = -h * h * (dpsi * dpsi - ddpsi) + (v - anchor.z);
        let residual = (-h * h * (ddxi - 2.0 * dxi * dpsi) + bracket * xi) * f;
        Pointwise {
            value: xi * f,
            residual,
            tail: bracket * xi * f,
            xi2: ddxi * f,
            xi1: -dxi * dpsi * f,
        }
    }

    fn integrate(&self, panels: usize) -> Integrals {
        let delta = self.delta();
        let rule = CompositeRule::new(-delta, delta, panels, GAUSS_NODES);
        let mut acc = Integrals::default();
        for (s, w) in rule.points() {
            let p = self.pointwise(s);
            acc.norm_sq += w * p.value.norm_sqr();
            acc.residual_sq += w * p.residual.norm_sqr();
            acc.tail_sq += w * p.tail.norm_sqr();
            acc.xi2_sq += w * p.xi2.norm_sqr();
            acc.xi1_sq += w * p.xi1.norm_sqr();
        }
        acc
    }

    /// Residual ratio `||H f~ - z f~|| / ||f~||` by composite Gauss–Legendre
    /// quadrature over `[-delta, delta]`, refined by panel doubling.
    pub fn residual_ratio(&self) -> Result<Certificate> {
        let anchor = *self.anchor();
        let h = anchor.h;
        let delta = self.delta();
        if !(h > 0.0) {
            return Err(Error::Precondition(format!("h = {h} must be positive")));
        }
        if h > delta * delta {
            return Err(Error::Precondition(format!(
                "h = {h} exceeds delta^2 = {}",
                delta * delta
            )));
        }
        let mut panels = MIN_PANELS.max((8.0 * delta / h.sqrt()).ceil() as usize);
        let mut current = self.integrate(panels);
        let mut converged = false;
        let ratio = |i: &Integrals| (i.residual_sq / i.norm_sq).sqrt();
        for _ in 0..MAX_REFINEMENTS {
            let next = self.integrate(2 * panels);
            panels *= 2;
            let change_norm = (next.norm_sq - current.norm_sq).abs() / next.norm_sq;
            let change_res = (next.residual_sq - current.residual_sq).abs() / next.residual_sq;
            let previous = current;
            current = next;
            if change_norm < QUADRATURE_TOLERANCE && change_res < QUADRATURE_TOLERANCE {
                converged = true;
                break;
            }
            if !(current.norm_sq > 0.0) {
                return Err(Error::Accuracy { last: ratio(&current), previous: ratio(&previous) });
            }
        }
        if !converged || !(current.residual_sq > 0.0) || !current.norm_sq.is_finite() {
            let last = ratio(&current);
            let previous = ratio(&self.integrate(panels / 2));
            return Err(Error::Accuracy { last, previous });
        }

        let norm = current.norm_sq.sqrt();
        let r = ratio(&current);
        let n = self.order();
        let mut warnings = Vec::new();
        if anchor.eta_sign_flipped {
            warnings.push("eta_sign_flipped".to_string());
        }
        Ok(Certificate {
            z_re: anchor.z.re,
            z_im: anchor.z.im,
            h,
            n,
            r,
            lower_bound: 1.0 / r,
            delta,
            gamma: self.gamma(),
            panels,
            warnings,
            a: anchor.a,
            eta: anchor.eta,
            trunc: self.phase.degree(),
            beta: self.beta(),
            norm_sq: current.norm_sq,
            tail_contribution: current.tail_sq.sqrt() / norm,
            cutoff_contribution: h * h * (current.xi2_sq.sqrt() + 2.0 * current.xi1_sq.sqrt()) / norm,
            prefactor: r * h.powi(-(n as i32 + 2)),
            sigma: None,
        })
    }

    /// Largest relative deviation, over `points` samples of `|s| < delta/2`,
    /// between the pointwise bracket `(H f - z f)/f` and the tail
    /// `sum_{m=n+2}^{2n+2} h^m phi_m`, relative to the largest tail value.
    pub fn tail_identity_error(&self, points: usize) -> f64 {
        let half = 0.5 * self.delta();
        let (mut dev, mut scale) = (0.0f64, 0.0f64);
        for i in 0..points {
            // open interval
            let s = -half + 2.0 * half * (i as f64 + 0.5) / points as f64;
            let tail = self.field().tail_at(s);
            dev = dev.max((self.bracket_at(s) - tail).norm());
            scale = scale.max(tail.norm());
        }
        dev / scale
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Pointwise {
    value: Complex64,
    residual: Complex64,
    tail: Complex64,
    xi2: Complex64,
    xi1: Complex64,
}

/// Convenience: anchor, quasimode and certificate in one call.
pub fn certify(
    potential: &PotentialFamily,
    anchor: &Anchor,
    options: &QuasimodeOptions,
) -> Result<Certificate> {
    Quasimode::build(potential, anchor, options)?.residual_ratio()
}

/// Least-squares line `log y = slope log x + c`; returns the slope and the
/// RMS residual of the fit.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<Certificate>,
    /// Fitted slope of `log r` against `log h`.
    pub slope: f64,
    pub fit_residual: f64,
    /// Largest swept `h` at and below which the cutoff contribution stays
    /// under the tail contribution.
    pub cutoff_crossover: Option<f64>,
}

/// Certificates over a list of `h` values for a fixed `(a, eta)`; output is
/// in input order.
pub fn sweep_h(
    potential: &PotentialFamily,
    a: f64,
    eta: f64,
    hs: &[f64],
    options: &QuasimodeOptions,
) -> Result<SweepResult> {
    if hs.len() < 3 {
        return Err(Error::Usage(format!("an h sweep needs at least 3 values, got {}", hs.len())));
    }
    let rows = hs
        .par_iter()
        .map(|&h| {
            let anchor = Anchor::new(potential, h, a, eta)?;
            certify(potential, &anchor, options)
        })
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = rows.iter().map(|c| c.h).collect();
    let r: Vec<f64> = rows.iter().map(|c| c.r).collect();
    let (slope, fit_residual) = loglog_fit(&h, &r);
    Ok(SweepResult { cutoff_crossover: cutoff_crossover(&rows), rows, slope, fit_residual })
}

fn cutoff_crossover(rows: &[Certificate]) -> Option<f64> {
    let mut sorted: Vec<&Certificate> = rows.iter().collect();
    sorted.sort_by(|x, y| x.h.total_cmp(&y.h));
    let mut crossover = None;
    for c in sorted {
        if c.cutoff_contribution < c.tail_contribution {
            crossover = Some(c.h);
        } else {
            break;
        }
    }
    crossover
}
