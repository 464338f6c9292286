//! h-dependent power-law potentials `V_h(x) = sum c_m h^{e_m} x^{p_m}` and
//! the anchor data `(a, eta, h, z)` a quasimode is built around.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

/// Lower bound on `|Im V_h'(a)|` for an anchor to count as non-degenerate.
pub const IM_DERIVATIVE_THRESHOLD: f64 = 1e-12;

/// Relative tolerance on `z = eta^2 + V_h(a)`.
pub const ANCHOR_ENERGY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Line,
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    pub power: f64,
    pub h_power: f64,
}

impl Term {
    pub fn new(coeff: Complex64, power: f64, h_power: f64) -> Self {
        Self { coeff, power, h_power }
    }

    fn weight(&self, h: f64) -> Complex64 {
        if self.h_power == 0.0 {
            self.coeff
        } else {
            self.coeff * h.powf(self.h_power)
        }
    }
}

fn is_nonneg_integer(p: f64) -> bool {
    p >= 0.0 && p.fract() == 0.0
}

/// `x^p`, using integer powers where possible so negative `x` works on the line.
fn power(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFamily {
    terms: Vec<Term>,
    domain: Domain,
}

impl PotentialFamily {
    /// Validates the family: strictly increasing powers, nonnegative
    /// h-exponents, nonnegative integer powers on the line and powers
    /// `>= -2` on the half-line.
    pub fn new(terms: Vec<Term>, domain: Domain) -> Result<Self> {
        for t in &terms {
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite() && t.power.is_finite()) {
                return Err(Error::InvalidPotential("non-finite term".into()));
            }
            if !(t.h_power >= 0.0 && t.h_power.is_finite()) {
                return Err(Error::InvalidPotential(format!(
                    "h-exponent {} must be finite and >= 0",
                    t.h_power
                )));
            }
            match domain {
                Domain::Line if !is_nonneg_integer(t.power) => {
                    return Err(Error::InvalidPotential(format!(
                        "power {} is not a nonnegative integer on the line",
                        t.power
                    )))
                }
                Domain::HalfLine if t.power < -2.0 => {
                    return Err(Error::InvalidPotential(format!(
                        "power {} is below -2 on the half-line",
                        t.power
                    )))
                }
                _ => {}
            }
        }
        if terms.windows(2).any(|w| w[0].power >= w[1].power) {
            return Err(Error::InvalidPotential("powers must be strictly increasing".into()));
        }
        Ok(Self { terms, domain })
    }

    /// Single-term family `c x^p` with no h-dependence.
    pub fn monomial(coeff: Complex64, power: f64, domain: Domain) -> Result<Self> {
        Self::new(vec![Term::new(coeff, power, 0.0)], domain)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// The term with the largest power, if any.
    pub fn top_term(&self) -> Option<&Term> {
        self.terms.last()
    }

    /// True when every coefficient is real, so `Im V_h' == 0` everywhere.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im == 0.0)
    }

    fn check_point(&self, x: f64) -> Result<()> {
        if self.domain == Domain::HalfLine && !(x > 0.0) {
            return Err(Error::Domain { x });
        }
        Ok(())
    }

    pub fn eval(&self, h: f64, x: f64) -> Result<Complex64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(h, x))
    }

    pub(crate) fn eval_unchecked(&self, h: f64, x: f64) -> Complex64 {
        self.terms.iter().map(|t| t.weight(h) * power(x, t.power)).sum()
    }

    pub fn deriv(&self, h: f64, x: f64) -> Result<Complex64> {
        self.check_point(x)?;
        Ok(self
            .terms
            .iter()
            .filter(|t| t.power != 0.0)
            .map(|t| t.weight(h) * t.power * power(x, t.power - 1.0))
            .sum())
    }

    /// Taylor series of `s -> V_h(a + s)` to degree `degree`, from the
    /// generalized binomial expansion of each `(a + s)^p`.
    pub fn taylor_at(&self, h: f64, a: f64, degree: usize) -> Result<TruncatedSeries> {
        if degree < 1 {
            return Err(Error::Usage("Taylor degree must be >= 1".into()));
        }
        let needs_positive = self.terms.iter().any(|t| !is_nonneg_integer(t.power));
        if needs_positive && !(a > 0.0) {
            return Err(Error::Expansion { a });
        }
        self.check_point(a)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        for t in &self.terms {
            let w = t.weight(h);
            let mut binom = 1.0;
            for (k, slot) in coeffs.iter_mut().enumerate() {
                if binom == 0.0 {
                    break;
                }
                *slot += w * binom * power(a, t.power - k as f64);
                binom *= (t.power - k as f64) / (k as f64 + 1.0);
            }
        }
        Ok(TruncatedSeries::new(coeffs))
    }
}

impl fmt::Display for PotentialFamily {
    /// Text format: a `domain: line|halfline` header followed by one
    /// `c_re c_im p e` line per term.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let domain = match self.domain {
            Domain::Line => "line",
            Domain::HalfLine => "halfline",
        };
        writeln!(f, "domain: {domain}")?;
        for t in &self.terms {
            writeln!(f, "{:?} {:?} {:?} {:?}", t.coeff.re, t.coeff.im, t.power, t.h_power)?;
        }
        Ok(())
    }
}

impl FromStr for PotentialFamily {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut domain = None;
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("domain:") {
                if domain.is_some() {
                    return Err(Error::Parse { line: line_no, msg: "duplicate domain header".into() });
                }
                domain = Some(match rest.trim() {
                    "line" => Domain::Line,
                    "halfline" => Domain::HalfLine,
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("unknown domain '{other}'"),
                        })
                    }
                });
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 'c_re c_im p e', got {} fields", fields.len()),
                });
            }
            let mut vals = [0.0; 4];
            for (v, s) in vals.iter_mut().zip(&fields) {
                *v = s.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("'{s}' is not a number"),
                })?;
            }
            terms.push(Term::new(Complex64::new(vals[0], vals[1]), vals[2], vals[3]));
        }
        let domain = domain.ok_or(Error::Parse { line: 0, msg: "missing 'domain:' header".into() })?;
        Self::new(terms, domain)
    }
}

/// Expansion point and energy of a quasimode: `z = eta^2 + V_h(a)` with
/// `Im V_h'(a) != 0` and `eta` carrying the sign of `Im V_h'(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub a: f64,
    pub eta: f64,
    pub h: f64,
    pub z: Complex64,
    /// Set when the supplied `eta` had the wrong sign and was flipped.
    pub eta_sign_flipped: bool,
}

impl Anchor {
    /// Builds the anchor for `(a, eta)` at semiclassical parameter `h`,
    /// flipping the sign of `eta` if needed.
    pub fn new(potential: &PotentialFamily, h: f64, a: f64, eta: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::Usage(format!("h = {h} must be finite and >= 0")));
        }
        if eta == 0.0 || !eta.is_finite() {
            return Err(Error::ZeroEta);
        }
        let im_dv = potential.deriv(h, a)?.im;
        if !(im_dv.abs() > IM_DERIVATIVE_THRESHOLD) {
            return Err(Error::DegenerateAnchor(format!("Im V_h'({a}) = {im_dv} vanishes")));
        }
        let flipped = eta.signum() != im_dv.signum();
        let eta = if flipped { -eta } else { eta };
        let z = eta * eta + potential.eval(h, a)?;
        Ok(Self { a, eta, h, z, eta_sign_flipped: flipped })
    }

    /// As [`Anchor::new`], additionally requiring the supplied energy to
    /// match `eta^2 + V_h(a)`.
    pub fn with_energy(
        potential: &PotentialFamily,
        h: f64,
        a: f64,
        eta: f64,
        z: Complex64,
    ) -> Result<Self> {
        let anchor = Self::new(potential, h, a, eta)?;
        if (anchor.z - z).norm() > ANCHOR_ENERGY_TOLERANCE * z.norm().max(1.0) {
            return Err(Error::AnchorMismatch { z: z.to_string(), expected: anchor.z.to_string() });
        }
        Ok(Self { z, ..anchor })
    }

    /// Re-checks all three invariants without repairing anything.
    pub fn validate(&self, potential: &PotentialFamily) -> Result<()> {
        if self.eta == 0.0 {
            return Err(Error::ZeroEta);
        }
        let expected = self.eta * self.eta + potential.eval(self.h, self.a)?;
        if (expected - self.z).norm() > ANCHOR_ENERGY_TOLERANCE * self.z.norm().max(1.0) {
            return Err(Error::AnchorMismatch { z: self.z.to_string(), expected: expected.to_string() });
        }
        let im_dv = potential.deriv(self.h, self.a)?.im;
        if !(im_dv.abs() > IM_DERIVATIVE_THRESHOLD) {
            return Err(Error::DegenerateAnchor(format!("Im V_h'({}) = {im_dv} vanishes", self.a)));
        }
        if self.eta.signum() != im_dv.signum() {
            return Err(Error::EtaSign { eta: self.eta, im_dv });
        }
        Ok(())
    }
}
