//! Radial interaction potentials `U(r)` with closed-form derivatives.
//!
//! Every family is normalized so that `U(0) = 0` and `U'(0) = 0`. Besides the
//! value and the first two derivatives, [`PotentialEval`] carries `U'(r)/r`
//! evaluated from the analytic form, which stays finite at coincident
//! positions where the naive quotient is `0/0`.
//!
//! [`classify_potential`] samples a potential on `[0, r_max]` and reports
//! numeric certificates for the bounded, convex, attractive and confining
//! classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Japanese bracket `<r> = sqrt(1 + r^2)`.
#[inline]
pub fn bracket(r: f64) -> f64 {
    r.hypot(1.0)
}

/// `<r>^p` evaluated as `(1 + r^2)^(p/2)`.
#[inline]
pub fn bracket_pow(r: f64, p: f64) -> f64 {
    (0.5 * p * (r * r).ln_1p()).exp()
}

/// `<r>^p - 1` without cancellation for small `r`.
#[inline]
fn bracket_pow_m1(r: f64, p: f64) -> f64 {
    (0.5 * p * (r * r).ln_1p()).exp_m1()
}

/// Interpolation rule for tabulated `U'` data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise-linear `U'`; `U''` is piecewise constant.
    Linear,
    /// Monotone cubic Hermite (Fritsch-Carlson) on `U'`.
    #[default]
    MonotoneCubic,
}

/// Parametric radial potential family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `U'(r) = a r <r>^(-beta)`; realizes the attractive lower bound with equality.
    PowerLawAttractive { a: f64, beta: f64 },
    /// `U(r) = a r^2 / 2`.
    QuadraticWell { a: f64 },
    /// Quartic double well `U(r) = k (r^2 - r0^2)^2 / 4`, minimum at `r0`.
    RepulsiveAttractive { k: f64, r0: f64 },
    /// `U'` given at sorted knots starting at `r = 0` with `U'(0) = 0`.
    Tabulated {
        knots: Vec<f64>,
        du: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

/// Value and derivatives of a potential at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEval {
    pub u: f64,
    pub du: f64,
    pub ddu: f64,
    /// `U'(r)/r`, equal to `U''(0)` at the origin.
    pub du_over_r: f64,
}

impl PotentialSpec {
    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::PowerLawAttractive { a, beta } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::Input(format!("power-law strength a must be > 0, got {a}")));
                }
                if !(0.0..1.0).contains(beta) {
                    return Err(Error::Input(format!("power-law beta must lie in [0,1), got {beta}")));
                }
            }
            PotentialSpec::QuadraticWell { a } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::Input(format!("quadratic strength a must be > 0, got {a}")));
                }
            }
            PotentialSpec::RepulsiveAttractive { k, r0 } => {
                if !(k.is_finite() && *k > 0.0 && r0.is_finite() && *r0 > 0.0) {
                    return Err(Error::Input(format!(
                        "repulsive-attractive needs k > 0 and r0 > 0, got k={k}, r0={r0}"
                    )));
                }
            }
            PotentialSpec::Tabulated { knots, du, .. } => {
                if knots.len() < 2 || knots.len() != du.len() {
                    return Err(Error::Input(
                        "tabulated potential needs >= 2 knots and one U' value per knot".into(),
                    ));
                }
                if knots[0] != 0.0 || du[0] != 0.0 {
                    return Err(Error::Input("tabulated potential must start at r=0 with U'(0)=0".into()));
                }
                if knots.iter().chain(du.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Input("tabulated potential has non-finite entries".into()));
                }
                if knots.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Input("tabulated knots must be strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    /// Tail exponent `beta` of the family (zero for families without one).
    pub fn fat_tail_exponent(&self) -> f64 {
        match self {
            PotentialSpec::PowerLawAttractive { beta, .. } => *beta,
            _ => 0.0,
        }
    }

    /// Nominal strength parameter (`a` or `k`; one for tables).
    pub fn strength(&self) -> f64 {
        match self {
            PotentialSpec::PowerLawAttractive { a, .. } | PotentialSpec::QuadraticWell { a } => *a,
            PotentialSpec::RepulsiveAttractive { k, .. } => *k,
            PotentialSpec::Tabulated { .. } => 1.0,
        }
    }

    /// Evaluates the potential, see [`eval_potential`].
    pub fn eval(&self, r: f64) -> Result<PotentialEval> {
        eval_potential(self, r)
    }
}

/// Closed-form `U`, `U'`, `U''` and `U'/r` at radius `r >= 0`.
pub fn eval_potential(spec: &PotentialSpec, r: f64) -> Result<PotentialEval> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Input(format!("radius must be finite and non-negative, got {r}")));
    }
    let out = match *spec {
        PotentialSpec::PowerLawAttractive { a, beta } => {
            let r2 = r * r;
            let du_over_r = a * bracket_pow(r, -beta);
            PotentialEval {
                u: a * bracket_pow_m1(r, 2.0 - beta) / (2.0 - beta),
                du: du_over_r * r,
                ddu: a * bracket_pow(r, -beta - 2.0) * (1.0 + (1.0 - beta) * r2),
                du_over_r,
            }
        }
        PotentialSpec::QuadraticWell { a } => PotentialEval {
            u: 0.5 * a * r * r,
            du: a * r,
            ddu: a,
            du_over_r: a,
        },
        PotentialSpec::RepulsiveAttractive { k, r0 } => {
            let s = r * r - r0 * r0;
            PotentialEval {
                u: 0.25 * k * s * s,
                du: k * r * s,
                ddu: k * (3.0 * r * r - r0 * r0),
                du_over_r: k * s,
            }
        }
        PotentialSpec::Tabulated { ref knots, ref du, interpolation } => {
            eval_tabulated(knots, du, interpolation, r)?
        }
    };
    Ok(out)
}

/// Cubic `c0 + c1 s + c2 s^2 + c3 s^3` in the local coordinate `s = r - knot`.
#[derive(Debug, Clone, Copy)]
struct Segment {
    c: [f64; 4],
}

impl Segment {
    fn value(&self, s: f64) -> f64 {
        ((self.c[3] * s + self.c[2]) * s + self.c[1]) * s + self.c[0]
    }

    fn slope(&self, s: f64) -> f64 {
        (3.0 * self.c[3] * s + 2.0 * self.c[2]) * s + self.c[1]
    }

    fn integral(&self, s: f64) -> f64 {
        (((0.25 * self.c[3] * s + self.c[2] / 3.0) * s + 0.5 * self.c[1]) * s + self.c[0]) * s
    }
}

fn pchip_slopes(knots: &[f64], values: &[f64]) -> Vec<f64> {
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (values[k + 1] - values[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    let edge = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if m.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            m
        }
    };
    m[0] = edge(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn segments(knots: &[f64], values: &[f64], rule: Interpolation) -> Vec<Segment> {
    let n = knots.len();
    match rule {
        Interpolation::Linear => (0..n - 1)
            .map(|k| {
                let slope = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
                Segment { c: [values[k], slope, 0.0, 0.0] }
            })
            .collect(),
        Interpolation::MonotoneCubic => {
            let m = pchip_slopes(knots, values);
            (0..n - 1)
                .map(|k| {
                    let h = knots[k + 1] - knots[k];
                    let delta = (values[k + 1] - values[k]) / h;
                    let c2 = (3.0 * delta - 2.0 * m[k] - m[k + 1]) / h;
                    let c3 = (m[k] + m[k + 1] - 2.0 * delta) / (h * h);
                    Segment { c: [values[k], m[k], c2, c3] }
                })
                .collect()
        }
    }
}

fn eval_tabulated(knots: &[f64], du: &[f64], rule: Interpolation, r: f64) -> Result<PotentialEval> {
    let last = *knots.last().unwrap_or(&0.0);
    if knots.len() < 2 || knots.len() != du.len() {
        return Err(Error::Input("malformed tabulated potential".into()));
    }
    if r > last {
        return Err(Error::Extrapolation { r, last });
    }
    let segs = segments(knots, du, rule);
    let k = match knots.partition_point(|&kn| kn <= r) {
        0 => 0,
        p => (p - 1).min(segs.len() - 1),
    };
    let u = segs[..k]
        .iter()
        .zip(knots.windows(2))
        .map(|(seg, w)| seg.integral(w[1] - w[0]))
        .sum::<f64>()
        + segs[k].integral(r - knots[k]);
    let s = r - knots[k];
    let value = segs[k].value(s);
    let ddu = segs[k].slope(s);
    let du_over_r = if k == 0 {
        // U'(0) = 0 makes the first segment divisible by s = r.
        let c = segs[0].c;
        (c[3] * s + c[2]) * s + c[1]
    } else {
        value / r
    };
    Ok(PotentialEval { u, du: value, ddu, du_over_r })
}

/// Outcome of one assumption-class certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCertificate {
    pub pass: bool,
    /// Certified constant (`A`, `a` or `L` depending on the class).
    pub constant: f64,
    /// Sampled radius where the certificate fails.
    pub witness: Option<f64>,
}

/// Per-class report produced by [`classify_potential`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub r_max: f64,
    pub n_samples: usize,
    pub beta: f64,
    /// `A = max |U''|` over the samples.
    pub bounded: ClassCertificate,
    /// Largest `a` with `a <r>^-beta <= U''`.
    pub convex: ClassCertificate,
    /// Largest `a` with `a <r>^-beta <= U'(r)/r`.
    pub attractive: ClassCertificate,
    /// Coefficient used by the confining certificate.
    pub confining_a: f64,
    /// Smallest `L` with `U >= a (<r>^(2-beta) - L)`.
    pub confining: ClassCertificate,
}

/// Samples `spec` on `n_samples` uniform radii in `[0, r_max]` and certifies
/// which potential classes it belongs to.
///
/// The confining coefficient is `a_attr / (2 - beta)` when the attractive
/// certificate holds and `strength / (2 - beta)` otherwise. The confining
/// class passes when `<r>^(2-beta) - U/a` is not still increasing at the
/// last sample, i.e. the bound has settled inside the sampled range.
pub fn classify_potential(spec: &PotentialSpec, r_max: f64, n_samples: usize) -> Result<ClassReport> {
    if !(r_max.is_finite() && r_max > 0.0) || n_samples < 2 {
        return Err(Error::Input(format!(
            "classification needs r_max > 0 and n_samples >= 2, got {r_max}, {n_samples}"
        )));
    }
    spec.validate()?;
    let beta = spec.fat_tail_exponent();
    let mut samples = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let r = r_max * k as f64 / (n_samples - 1) as f64;
        let e = eval_potential(spec, r)?;
        if !(e.u.is_finite() && e.du.is_finite() && e.ddu.is_finite() && e.du_over_r.is_finite()) {
            return Err(Error::Spec { r });
        }
        samples.push((r, e));
    }

    let big_a = samples.iter().map(|(_, e)| e.ddu.abs()).fold(0.0, f64::max);
    let bounded = ClassCertificate { pass: big_a.is_finite(), constant: big_a, witness: None };

    let lower_bound = |f: &dyn Fn(&PotentialEval) -> f64| {
        let a = samples
            .iter()
            .map(|(r, e)| f(e) * bracket_pow(*r, beta))
            .fold(f64::INFINITY, f64::min);
        let witness = samples.iter().rev().find(|(_, e)| f(e) <= 0.0).map(|(r, _)| *r);
        ClassCertificate { pass: a > 0.0, constant: a, witness }
    };
    let convex = lower_bound(&|e| e.ddu);
    let attractive = lower_bound(&|e| e.du_over_r);

    let confining_a = if attractive.pass { attractive.constant } else { spec.strength() } / (2.0 - beta);
    let gap: Vec<f64> = samples
        .iter()
        .map(|(r, e)| bracket_pow(*r, 2.0 - beta) - e.u / confining_a)
        .collect();
    let (arg, l) = gap
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &g)| if g > acc.1 { (k, g) } else { acc });
    let tail = gap[n_samples - 1] - gap[n_samples - 2];
    let settled = tail <= 1e-12 * (1.0 + gap[n_samples - 1].abs());
    let confining = ClassCertificate {
        pass: settled,
        constant: l,
        witness: if settled { None } else { Some(samples[arg].0) },
    };

    Ok(ClassReport { r_max, n_samples, beta, bounded, convex, attractive, confining_a, confining })
}
