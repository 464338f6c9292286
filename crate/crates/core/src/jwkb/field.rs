//! Continuation of the phase expansion along the real axis.
//!
//! The series around the anchor only converges out to the nearest complex
//! turning point, which can sit much closer than the cutoff radius the
//! quasimode needs. The field chains local expansions: each patch is
//! rebuilt from the potential at a new centre, on the branch of
//! `psi_{-1}'` continued from its neighbour, with integration constants
//! carried over by evaluating the neighbour's series.

use num_complex::Complex64;

use crate::error::Result;
use crate::potential::{Anchor, PotentialFamily};

use super::phase::PhaseExpansion;

/// Largest step between patch centres.
const MAX_STEP: f64 = 0.25;
/// Hard limit on patches per direction.
const MAX_PATCHES: usize = 20_000;

#[derive(Debug, Clone)]
pub struct PhaseField {
    /// Sorted by centre.
    patches: Vec<PhaseExpansion>,
    h: f64,
}

impl PhaseField {
    /// Continues `origin` (centred at the anchor) out to `reach` in both
    /// directions, or as far as the construction succeeds.
    pub fn build(potential: &PotentialFamily, origin: &PhaseExpansion, reach: f64) -> Self {
        let mut negative = continue_in(potential, origin, reach, -1.0);
        let positive = continue_in(potential, origin, reach, 1.0);
        negative.reverse();
        negative.push(origin.clone());
        negative.extend(positive);
        Self { patches: negative, h: origin.anchor().h }
    }

    /// Interval of `s` covered by patch centres.
    pub fn range(&self) -> (f64, f64) {
        (self.patches[0].center(), self.patches[self.patches.len() - 1].center())
    }

    /// Largest symmetric reach `r` such that `[-r, r]` is covered.
    pub fn symmetric_reach(&self) -> f64 {
        let (lo, hi) = self.range();
        (-lo).min(hi)
    }

    pub fn patch_count(&self) -> usize {
        self.patches.len()
    }

    pub fn origin(&self) -> &PhaseExpansion {
        self.patches.iter().find(|p| p.center() == 0.0).expect("origin patch")
    }

    /// Patch whose centre is nearest to `s`.
    pub fn patch(&self, s: f64) -> &PhaseExpansion {
        let idx = self.patches.partition_point(|p| p.center() < s);
        if idx == 0 {
            return &self.patches[0];
        }
        if idx == self.patches.len() {
            return &self.patches[idx - 1];
        }
        let (left, right) = (&self.patches[idx - 1], &self.patches[idx]);
        if s - left.center() <= right.center() - s {
            left
        } else {
            right
        }
    }

    /// Combined phase `psi(s)` with `psi'` and `psi''`.
    pub fn eval(&self, s: f64) -> (Complex64, Complex64, Complex64) {
        let p = self.patch(s);
        p.eval(s - p.center(), self.h)
    }

    /// `psi_{-1}(s)` and `rho(s)`.
    pub fn eikonal_at(&self, s: f64) -> (Complex64, Complex64) {
        let p = self.patch(s);
        p.eikonal_at(s - p.center())
    }

    /// `sum_{m=n+2}^{2n+2} h^m phi_m(s)` from the local cascade.
    pub fn tail_at(&self, s: f64) -> Complex64 {
        let p = self.patch(s);
        p.tail_phi().tail_at(s - p.center(), self.h)
    }
}

/// Step fraction of the local radius that keeps the truncation error of a
/// degree-`K` patch near machine precision.
fn step_fraction(degree: usize) -> f64 {
    0.5 * 10f64.powf(-16.0 / degree as f64)
}

fn continue_in(
    potential: &PotentialFamily,
    origin: &PhaseExpansion,
    reach: f64,
    direction: f64,
) -> Vec<PhaseExpansion> {
    let anchor: Anchor = *origin.anchor();
    let min_step = 1e-12 * anchor.a.abs().max(1.0);
    let fraction = step_fraction(origin.degree());
    let mut out = Vec::new();
    let mut current = origin.clone();
    while current.center().abs() < reach && out.len() < MAX_PATCHES {
        let step = (current.radius_estimate() * fraction)
            .min(MAX_STEP)
            .min(reach - current.center().abs());
        if !(step > min_step) {
            break;
        }
        let t = direction * step;
        let constants: Vec<Complex64> = current.all_psi().iter().map(|p| p.eval(t)).collect();
        let hint = current.dpsi(-1).eval(t);
        let next: Result<PhaseExpansion> = PhaseExpansion::at_center(
            potential,
            &anchor,
            current.order(),
            current.degree(),
            current.center() + t,
            hint,
            &constants,
        );
        match next {
            Ok(p) => {
                // an ambiguous branch means a turning point sits on the axis
                let w = p.dpsi(-1).coeff(0);
                if (w - hint).norm() > 0.5 * w.norm() {
                    break;
                }
                out.push(p.clone());
                current = p;
            }
            Err(_) => break,
        }
    }
    out
}
