//! Lagrangian particle solver for 1D anticipation hydrodynamics under a
//! mono-kinetic closure.
//!
//! Each particle carries a mass and follows a characteristic. The velocity
//! slope `d = u_x` is transported along characteristics by its own Riccati
//! equation `d' = -d^2 - c (1 + tau d)` with `c = sum_j m_j U''(|x^tau - x_j^tau|)`,
//! so gradient blow-up is tracked without differencing neighbouring
//! particles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{run_flat, IntegratorSpec, OdeSystem};
use crate::potentials::{classify_potential, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub x: f64,
    pub u: f64,
    pub m: f64,
    /// Value of `u_x` carried along the characteristic.
    pub dslope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hydro1DState {
    pub t: f64,
    pub particles: Vec<Particle>,
}

impl Hydro1DState {
    pub fn new(t: f64, particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Input("hydro state needs at least one particle".into()));
        }
        for (k, p) in particles.iter().enumerate() {
            if !(p.m > 0.0 && p.m.is_finite()) {
                return Err(Error::Input(format!("particle {k} has non-positive mass {}", p.m)));
            }
            if !(p.x.is_finite() && p.u.is_finite() && p.dslope.is_finite()) {
                return Err(Error::Numerical { agent: k });
            }
        }
        Ok(Hydro1DState { t, particles })
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.m).sum()
    }

    pub fn momentum(&self) -> f64 {
        self.particles.iter().map(|p| p.m * p.u).sum()
    }

    pub fn min_slope(&self) -> f64 {
        self.particles.iter().map(|p| p.dslope).fold(f64::INFINITY, f64::min)
    }
}

/// Per-particle time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleRate {
    pub dx: f64,
    pub du: f64,
    pub dd: f64,
}

fn rates_into(potential: &PotentialSpec, tau: f64, m: &[f64], y: &[f64], dy: &mut [f64]) -> Result<()> {
    let k = m.len();
    let (x, rest) = y.split_at(k);
    let (u, d) = rest.split_at(k);
    let (dx, rest) = dy.split_at_mut(k);
    let (du, dd) = rest.split_at_mut(k);
    dx.copy_from_slice(u);
    du.iter_mut().for_each(|a| *a = 0.0);
    let ddu0 = potential.eval(0.0)?.ddu;
    let mut c: Vec<f64> = m.iter().map(|mk| mk * ddu0).collect();
    for i in 0..k {
        let xi = x[i] + tau * u[i];
        for j in i + 1..k {
            let sep = xi - (x[j] + tau * u[j]);
            let e = potential.eval(sep.abs())?;
            let f = e.du_over_r * sep;
            du[i] -= m[j] * f;
            du[j] += m[i] * f;
            c[i] += m[j] * e.ddu;
            c[j] += m[i] * e.ddu;
        }
    }
    for i in 0..k {
        dd[i] = -d[i] * d[i] - c[i] * (1.0 + tau * d[i]);
    }
    if let Some(bad) = dy.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical { agent: bad % k });
    }
    Ok(())
}

/// Characteristic equations: `x' = u`, `u' = -sum_j m_j U'(|dx^tau|) sign(dx^tau)`,
/// `d' = -d^2 - c (1 + tau d)`.
pub fn hydro_rhs(state: &Hydro1DState, potential: &PotentialSpec, tau: f64) -> Result<Vec<ParticleRate>> {
    if state.particles.is_empty() {
        return Err(Error::Input("hydro state needs at least one particle".into()));
    }
    let (m, y) = pack(state);
    let mut dy = vec![0.0; y.len()];
    rates_into(potential, tau, &m, &y, &mut dy)?;
    let k = m.len();
    Ok((0..k).map(|i| ParticleRate { dx: dy[i], du: dy[k + i], dd: dy[2 * k + i] }).collect())
}

fn pack(state: &Hydro1DState) -> (Vec<f64>, Vec<f64>) {
    let p = &state.particles;
    let m = p.iter().map(|p| p.m).collect();
    let y = p.iter().map(|p| p.x).chain(p.iter().map(|p| p.u)).chain(p.iter().map(|p| p.dslope)).collect();
    (m, y)
}

fn unpack(t: f64, m: &[f64], y: &[f64]) -> Hydro1DState {
    let k = m.len();
    let particles = (0..k).map(|i| Particle { x: y[i], u: y[k + i], m: m[i], dslope: y[2 * k + i] }).collect();
    Hydro1DState { t, particles }
}

struct HydroSystem<'a> {
    potential: &'a PotentialSpec,
    tau: f64,
    m: Vec<f64>,
}

impl OdeSystem for HydroSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        rates_into(self.potential, self.tau, &self.m, y, dy)
    }
}

/// Smaller root `-(tau c + sqrt(c (tau^2 c - 4)))/2` of `-d^2 - c (1 + tau d)`,
/// when the roots are real.
pub fn smaller_root(tau: f64, c: f64) -> Option<f64> {
    let disc = c * (tau * tau * c - 4.0);
    (disc >= 0.0).then(|| -0.5 * (tau * c + disc.sqrt()))
}

/// Sub-critical slope threshold for total mass `m0` and convexity bound `a`;
/// `None` when `tau < 2 / sqrt(m0 a)`.
pub fn critical_slope(tau: f64, m0: f64, a: f64) -> Result<Option<f64>> {
    if !(tau > 0.0 && m0 > 0.0 && a > 0.0) || !(tau.is_finite() && m0.is_finite() && a.is_finite()) {
        return Err(Error::Input(format!("tau, m0 and a must be positive, got {tau}, {m0}, {a}")));
    }
    Ok(smaller_root(tau, m0 * a))
}

/// Piecewise-linear initial profile: velocity `u` and density `rho` at knots `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if n < 2 || self.u.len() != n || self.rho.len() != n {
            return Err(Error::Input("profile needs >= 2 knots with one u and rho per knot".into()));
        }
        if self.x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("profile knots must be strictly increasing".into()));
        }
        if self.rho.iter().any(|r| !(*r >= 0.0)) || self.u.iter().chain(&self.x).any(|v| !v.is_finite()) {
            return Err(Error::Input("profile has negative density or non-finite entries".into()));
        }
        Ok(())
    }

    /// Linear interpolation of `(u, rho)` and the slope `u_x` at `x`.
    fn sample(&self, x: f64) -> (f64, f64, f64) {
        let seg = self.x.partition_point(|k| *k <= x).clamp(1, self.x.len() - 1) - 1;
        let (x0, x1) = (self.x[seg], self.x[seg + 1]);
        let w = (x - x0) / (x1 - x0);
        let lerp = |v: &[f64]| v[seg] + w * (v[seg + 1] - v[seg]);
        (lerp(&self.u), lerp(&self.rho), (self.u[seg + 1] - self.u[seg]) / (x1 - x0))
    }

    /// Places `k` particles at the midpoints of a uniform partition of the
    /// profile's support; masses are `rho dx`, optionally rescaled to total `m0`.
    pub fn discretize(&self, k: usize, m0: Option<f64>) -> Result<Hydro1DState> {
        self.validate()?;
        if k == 0 {
            return Err(Error::Input("need at least one particle".into()));
        }
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        let dx = (hi - lo) / k as f64;
        let mut particles: Vec<Particle> = (0..k)
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * dx;
                let (u, rho, slope) = self.sample(x);
                Particle { x, u, m: rho * dx, dslope: slope }
            })
            .collect();
        if let Some(m0) = m0 {
            let total: f64 = particles.iter().map(|p| p.m).sum();
            if !(total > 0.0) || !(m0 > 0.0) {
                return Err(Error::Input("profile mass and target mass must be positive".into()));
            }
            particles.iter_mut().for_each(|p| p.m *= m0 / total);
        }
        Hydro1DState::new(0.0, particles)
    }
}

/// Slope statistics at one sampled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeSample {
    pub t: f64,
    pub min_d: f64,
    pub max_abs_d: f64,
    pub mass: f64,
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdOutcome {
    /// Certified lower bound of `U''` on the run's range.
    pub a: f64,
    pub m0: f64,
    /// Critical slope, when `tau >= 2/sqrt(m0 a)`.
    pub threshold: Option<f64>,
    /// Smallest `u_0'` of the initial data.
    pub initial_min_slope: f64,
    pub subcritical: bool,
    pub blew_up: bool,
    pub t_blowup: Option<f64>,
    pub blowup_particle: Option<usize>,
    /// Smallest slope seen over all samples.
    pub min_slope: f64,
    /// Whether every sample stayed at or above the threshold root.
    pub stayed_in_invariant_region: Option<bool>,
    pub history: Vec<SlopeSample>,
    #[serde(skip)]
    pub final_state: Hydro1DState,
}

/// Run parameters for [`run_threshold_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSettings {
    pub tau: f64,
    pub integrator: IntegratorSpec,
    /// Blow-up is declared when a slope drops below this value.
    #[serde(default = "default_cutoff")]
    pub blowup_cutoff: f64,
}

pub fn default_cutoff() -> f64 {
    -1e6
}

/// Integrates the characteristic system and reports whether the slope blows up.
pub fn run_threshold_experiment(
    potential: &PotentialSpec,
    initial: &Hydro1DState,
    settings: &ThresholdSettings,
) -> Result<ThresholdOutcome> {
    let tau = settings.tau;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Input(format!("tau must be >= 0, got {tau}")));
    }
    let span = {
        let xt: Vec<f64> = initial.particles.iter().map(|p| p.x + tau * p.u).collect();
        let lo = xt.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let r_max = 2.0 * span + 10.0;
    // uniform convexity is the convex certificate with beta = 0
    let a = if potential.fat_tail_exponent() == 0.0 {
        classify_potential(potential, r_max, 2001)?.convex.constant
    } else {
        uniform_lower_bound(potential, r_max)?
    };
    if !(a > 0.0) {
        return Err(Error::Contract(format!("potential is not uniformly convex on the run's range (a = {a})")));
    }
    let m0 = initial.total_mass();
    let threshold = if tau > 0.0 { critical_slope(tau, m0, a)? } else { None };
    let initial_min_slope = initial.min_slope();
    let subcritical = threshold.is_some_and(|th| initial_min_slope >= th);

    let (m, y0) = pack(initial);
    let k = m.len();
    let sys = HydroSystem { potential, tau, m: m.clone() };
    let mut history = Vec::new();
    let guard_m = settings.integrator.blowup_guard;
    let cutoff = settings.blowup_cutoff;
    let out = run_flat(
        &sys,
        initial.t,
        y0,
        &settings.integrator,
        |t, y| {
            let d = &y[2 * k..];
            history.push(SlopeSample {
                t,
                min_d: d.iter().copied().fold(f64::INFINITY, f64::min),
                max_abs_d: d.iter().map(|v| v.abs()).fold(0.0, f64::max),
                mass: m.iter().sum(),
                momentum: m.iter().zip(&y[k..2 * k]).map(|(m, u)| m * u).sum(),
            });
            Ok(())
        },
        |_, y| {
            if let Some(i) = y[2 * k..].iter().position(|d| !d.is_finite() || *d < cutoff) {
                return Some(i);
            }
            y[..2 * k].iter().position(|v| !v.is_finite() || v.abs() > guard_m).map(|i| i % k)
        },
    )?;
    let min_slope = history.iter().map(|s| s.min_d).fold(f64::INFINITY, f64::min);
    let stayed_in_invariant_region = threshold.map(|th| out.blowup.is_none() && min_slope >= th);
    Ok(ThresholdOutcome {
        a,
        m0,
        threshold,
        initial_min_slope,
        subcritical,
        blew_up: out.blowup.is_some(),
        t_blowup: out.blowup.map(|b| b.t),
        blowup_particle: out.blowup.map(|b| b.agent),
        min_slope,
        stayed_in_invariant_region,
        history,
        final_state: unpack(out.t, &m, &out.y),
    })
}

fn uniform_lower_bound(potential: &PotentialSpec, r_max: f64) -> Result<f64> {
    let n = 2001;
    (0..n).try_fold(f64::INFINITY, |acc, i| {
        Ok(acc.min(potential.eval(r_max * i as f64 / (n - 1) as f64)?.ddu))
    })
}

/// Integrates the characteristic system without blow-up bookkeeping.
pub fn integrate_hydro(
    potential: &PotentialSpec,
    tau: f64,
    initial: &Hydro1DState,
    spec: &IntegratorSpec,
    mut observe: impl FnMut(&Hydro1DState),
) -> Result<Hydro1DState> {
    let (m, y0) = pack(initial);
    let sys = HydroSystem { potential, tau, m: m.clone() };
    let out = run_flat(
        &sys,
        initial.t,
        y0,
        spec,
        |t, y| {
            observe(&unpack(t, &m, y));
            Ok(())
        },
        |_, y| y.iter().position(|v| !v.is_finite() || v.abs() > spec.blowup_guard).map(|i| i % m.len()),
    )?;
    if let Some(b) = out.blowup {
        return Err(Error::Numerical { agent: b.agent });
    }
    Ok(unpack(out.t, &m, &out.y))
}
