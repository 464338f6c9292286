//! Local phase expansions `psi_{-1}, psi_0, ..., psi_n` around a point of
//! the real axis, and the `phi_m` cascade they generate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::{Anchor, PotentialFamily};
use crate::series::TruncatedSeries;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Series of the eikonal right-hand side `V_h(a + c + t) - V_h(a) - eta^2`
/// in the local variable `t`, centred at offset `c` from the anchor.
pub(crate) fn eikonal_rhs(
    potential: &PotentialFamily,
    anchor: &Anchor,
    center: f64,
    degree: usize,
) -> Result<TruncatedSeries> {
    let local = potential.taylor_at(anchor.h, anchor.a + center, degree)?;
    let base = potential.eval(anchor.h, anchor.a)?;
    Ok(local.add_constant(-(base + anchor.eta * anchor.eta)))
}

/// `psi_{-1}` around the anchor: the antiderivative (vanishing at 0) of the
/// square root of the eikonal right-hand side on the branch `+i eta`.
pub fn build_eikonal(
    potential: &PotentialFamily,
    anchor: &Anchor,
    degree: usize,
) -> Result<TruncatedSeries> {
    let rhs = eikonal_rhs(potential, anchor, 0.0, degree)?;
    Ok(rhs.sqrt(Complex64::new(0.0, anchor.eta))?.antideriv(ZERO))
}

/// Derivative series `psi_0', ..., psi_n'` from `psi_{-1}'`:
/// `psi_0' = rho psi_{-1}''` and
/// `psi_{m+1}' = rho (psi_m'' - sum_{j=0}^{m} psi_j' psi_{m-j}')`
/// with `rho = 1 / (2 psi_{-1}')`.
fn transport_derivatives(dpsi_m1: &TruncatedSeries, order: usize) -> Result<Vec<TruncatedSeries>> {
    let rho = dpsi_m1.scale(Complex64::new(2.0, 0.0)).recip()?;
    let mut out: Vec<TruncatedSeries> = Vec::with_capacity(order + 1);
    out.push(&rho * &dpsi_m1.deriv());
    for m in 0..order {
        let mut rhs = out[m].deriv();
        for j in 0..=m {
            rhs = &rhs - &(&out[j] * &out[m - j]);
        }
        out.push(&rho * &rhs);
    }
    Ok(out)
}

/// Transport phases `psi_0, ..., psi_n`, each normalised by `psi_m(0) = 0`.
///
/// The top coefficients of the result inherit the truncation loss of
/// differentiating `psi_{-1}`; [`PhaseExpansion::new`] works at a raised
/// degree to avoid it.
pub fn build_transport(psi_m1: &TruncatedSeries, order: usize) -> Result<Vec<TruncatedSeries>> {
    Ok(transport_derivatives(&psi_m1.deriv(), order)?
        .into_iter()
        .map(|d| d.antideriv(ZERO))
        .collect())
}

/// Extra working degree so that every stored series is exact to degree `K`.
fn working_degree(degree: usize, order: usize) -> usize {
    degree + order + 3
}

/// The phases `psi_{-1}, ..., psi_n` as truncated series in `t = s - center`,
/// together with their first and second derivatives.
#[derive(Debug, Clone)]
pub struct PhaseExpansion {
    anchor: Anchor,
    order: usize,
    center: f64,
    /// `psi[m + 1]` holds `psi_m`.
    psi: Vec<TruncatedSeries>,
    dpsi: Vec<TruncatedSeries>,
    ddpsi: Vec<TruncatedSeries>,
    rhs: TruncatedSeries,
}

impl PhaseExpansion {
    /// Expansion centred at the anchor, truncated at degree `degree`.
    pub fn new(
        potential: &PotentialFamily,
        anchor: &Anchor,
        order: usize,
        degree: usize,
    ) -> Result<Self> {
        let constants = vec![ZERO; order + 2];
        Self::at_center(potential, anchor, order, degree, 0.0, Complex64::new(0.0, anchor.eta), &constants)
    }

    /// Expansion centred at offset `center`, on the branch of `psi_{-1}'`
    /// nearest `branch_hint`, with `psi_m(center) = constants[m + 1]`.
    pub fn at_center(
        potential: &PotentialFamily,
        anchor: &Anchor,
        order: usize,
        degree: usize,
        center: f64,
        branch_hint: Complex64,
        constants: &[Complex64],
    ) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Usage("truncation degree must be >= 2".into()));
        }
        debug_assert_eq!(constants.len(), order + 2);
        let work = working_degree(degree, order);
        let rhs = eikonal_rhs(potential, anchor, center, work)?;
        let root = rhs.coeff(0).sqrt();
        let branch = if (root - branch_hint).norm() <= (root + branch_hint).norm() { root } else { -root };
        let dpsi_m1 = rhs.sqrt(branch)?;
        let mut derivs = vec![dpsi_m1];
        derivs.extend(transport_derivatives(&derivs[0], order)?);

        let psi = derivs
            .iter()
            .zip(constants)
            .map(|(d, &c)| d.antideriv(c).with_degree(degree))
            .collect();
        let ddpsi = derivs.iter().map(|d| d.deriv().with_degree(degree)).collect();
        let dpsi = derivs.iter().map(|d| d.with_degree(degree)).collect();
        Ok(Self {
            anchor: *anchor,
            order,
            center,
            psi,
            dpsi,
            ddpsi,
            rhs: rhs.with_degree(degree),
        })
    }

    pub fn anchor(&self) -> &Anchor {
        &self.anchor
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.psi[0].degree()
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// `psi_m` for `m` in `-1..=n`.
    pub fn psi(&self, m: isize) -> &TruncatedSeries {
        &self.psi[(m + 1) as usize]
    }

    /// `psi_m'` for `m` in `-1..=n`.
    pub fn dpsi(&self, m: isize) -> &TruncatedSeries {
        &self.dpsi[(m + 1) as usize]
    }

    pub fn all_psi(&self) -> &[TruncatedSeries] {
        &self.psi
    }

    /// Largest coefficient magnitude over all phases.
    pub fn max_coefficient(&self) -> f64 {
        self.psi.iter().map(TruncatedSeries::max_abs).fold(0.0, f64::max)
    }

    /// Conservative convergence radius of the local expansion: the smallest
    /// root-test estimate over the phase derivatives and the eikonal
    /// right-hand side.
    pub fn radius_estimate(&self) -> f64 {
        self.dpsi
            .iter()
            .chain(std::iter::once(&self.rhs))
            .map(TruncatedSeries::estimate_radius)
            .fold(f64::INFINITY, f64::min)
    }

    /// Combined phase `psi = sum_m h^m psi_m` at local offset `t`, with its
    /// first two derivatives.
    pub fn eval(&self, t: f64, h: f64) -> (Complex64, Complex64, Complex64) {
        let mut weight = 1.0 / h;
        let (mut p, mut dp, mut ddp) = (ZERO, ZERO, ZERO);
        for m in 0..self.psi.len() {
            let v = self.psi[m].eval(t);
            let d = self.dpsi[m].eval(t);
            let dd = self.ddpsi[m].eval(t);
            p += v * weight;
            dp += d * weight;
            ddp += dd * weight;
            weight *= h;
        }
        (p, dp, ddp)
    }

    /// `psi_{-1}` and `rho = 1 / (2 psi_{-1}')` at local offset `t`.
    pub fn eikonal_at(&self, t: f64) -> (Complex64, Complex64) {
        (self.psi[0].eval(t), (2.0 * self.dpsi[0].eval(t)).inv())
    }

    /// The cascade `phi_0, ..., phi_{2n+2}` with
    /// `H f - z f = (sum_m h^m phi_m) f` for `f = exp(-psi)`.
    pub fn tail_phi(&self) -> PhiCascade {
        let n = self.order as isize;
        let mut phi = Vec::with_capacity(2 * self.order + 3);
        phi.push(&self.rhs - &(self.dpsi(-1) * self.dpsi(-1)));
        for j in 1..=(2 * n + 2) {
            let target = j - 2;
            let mut acc = if target <= n {
                self.ddpsi[(target + 1) as usize].clone()
            } else {
                TruncatedSeries::zero(self.degree())
            };
            for m in -1..=n {
                let k = target - m;
                if (-1..=n).contains(&k) {
                    acc = &acc - &(self.dpsi(m) * self.dpsi(k));
                }
            }
            phi.push(acc);
        }
        PhiCascade { order: self.order, phi }
    }
}

/// The `phi_m` series produced by a phase expansion.
#[derive(Debug, Clone)]
pub struct PhiCascade {
    order: usize,
    phi: Vec<TruncatedSeries>,
}

impl PhiCascade {
    pub fn all(&self) -> &[TruncatedSeries] {
        &self.phi
    }

    /// `phi_0 .. phi_{n+1}`, which the transport recursion forces to vanish.
    pub fn forced(&self) -> &[TruncatedSeries] {
        &self.phi[..self.order + 2]
    }

    /// `phi_{n+2} .. phi_{2n+2}`.
    pub fn tail(&self) -> &[TruncatedSeries] {
        &self.phi[self.order + 2..]
    }

    /// Largest coefficient among the forced terms.
    pub fn forced_max(&self) -> f64 {
        self.forced().iter().map(TruncatedSeries::max_abs).fold(0.0, f64::max)
    }

    /// `sum_{m=n+2}^{2n+2} h^m phi_m(t)`.
    pub fn tail_at(&self, t: f64, h: f64) -> Complex64 {
        let first = (self.order + 2) as i32;
        self.tail()
            .iter()
            .enumerate()
            .map(|(i, p)| p.eval(t) * h.powi(first + i as i32))
            .sum()
    }
}
