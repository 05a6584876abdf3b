//! Right-hand sides of the anticipation system (AT), its expansion with a
//! communication matrix (PhiU), the Cucker-Smale system (CS), and the polar
//! form of the two-agent anticipation system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{norm, KernelSpec};
use crate::potentials::PotentialSpec;

/// Positions and velocities of `n` agents in `d` dimensions at time `t`.
///
/// Coordinates are stored row-major: agent `i` occupies `x[i*d..(i+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub t: f64,
    n: usize,
    d: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl SwarmState {
    pub fn new(t: f64, n: usize, d: usize, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Input(format!("swarm needs n >= 1 and d >= 1, got n={n}, d={d}")));
        }
        if x.len() != n * d || v.len() != n * d {
            return Err(Error::Input(format!(
                "expected {} coordinates, got {} positions and {} velocities",
                n * d,
                x.len(),
                v.len()
            )));
        }
        if let Some(k) = x.iter().chain(&v).position(|c| !c.is_finite()) {
            return Err(Error::Numerical { agent: (k % (n * d)) / d });
        }
        Ok(SwarmState { t, n, d, x, v })
    }

    pub(crate) fn from_raw(t: f64, n: usize, d: usize, x: Vec<f64>, v: Vec<f64>) -> Self {
        SwarmState { t, n, d, x, v }
    }

    /// Builds a state from per-agent rows.
    pub fn from_rows(t: f64, x: &[Vec<f64>], v: &[Vec<f64>]) -> Result<Self> {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        if v.len() != n || x.iter().chain(v).any(|row| row.len() != d) {
            return Err(Error::Input("position and velocity rows must all have length d".into()));
        }
        Self::new(t, n, d, x.concat(), v.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn xi(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn vi(&self, i: usize) -> &[f64] {
        &self.v[i * self.d..(i + 1) * self.d]
    }

    pub fn mean_position(&self) -> Vec<f64> {
        mean_rows(&self.x, self.n, self.d)
    }

    pub fn mean_velocity(&self) -> Vec<f64> {
        mean_rows(&self.v, self.n, self.d)
    }

    /// Copy shifted to the frame where both means vanish.
    pub fn centered(&self) -> SwarmState {
        let (xb, vb) = (self.mean_position(), self.mean_velocity());
        let d = self.d;
        let shift = |data: &[f64], m: &[f64]| data.iter().enumerate().map(|(k, c)| c - m[k % d]).collect();
        SwarmState { t: self.t, n: self.n, d, x: shift(&self.x, &xb), v: shift(&self.v, &vb) }
    }
}

pub(crate) fn mean_rows(data: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for row in data.chunks_exact(d) {
        m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|a| *a /= n as f64);
    m
}

/// The three discrete systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelSpec {
    /// Agents react to anticipated positions `x + tau v`.
    #[serde(rename = "at")]
    At { potential: PotentialSpec, tau: f64 },
    /// Alignment through `Phi_ij` plus forces at current positions.
    #[serde(rename = "phiu")]
    PhiU { potential: PotentialSpec, kernel: KernelSpec, tau: f64 },
    /// Alignment only.
    #[serde(rename = "cs")]
    Cs { kernel: KernelSpec, tau: f64 },
}

impl ModelSpec {
    pub fn tau(&self) -> f64 {
        match self {
            ModelSpec::At { tau, .. } | ModelSpec::PhiU { tau, .. } | ModelSpec::Cs { tau, .. } => *tau,
        }
    }

    pub fn potential(&self) -> Option<&PotentialSpec> {
        match self {
            ModelSpec::At { potential, .. } | ModelSpec::PhiU { potential, .. } => Some(potential),
            ModelSpec::Cs { .. } => None,
        }
    }

    pub fn kernel(&self) -> Option<&KernelSpec> {
        match self {
            ModelSpec::PhiU { kernel, .. } | ModelSpec::Cs { kernel, .. } => Some(kernel),
            ModelSpec::At { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tau = self.tau();
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Input(format!("tau must be finite and >= 0, got {tau}")));
        }
        if let Some(p) = self.potential() {
            p.validate()?;
        }
        if let Some(k) = self.kernel() {
            k.validate()?;
        }
        Ok(())
    }
}

/// `x_i + tau v_i` for every agent, row-major.
pub fn anticipated_positions(state: &SwarmState, tau: f64) -> Vec<f64> {
    anticipate(&state.x, &state.v, tau)
}

fn anticipate(x: &[f64], v: &[f64], tau: f64) -> Vec<f64> {
    x.iter().zip(v).map(|(x, v)| x + tau * v).collect()
}

/// Accelerations of every agent under `model`, row-major.
pub fn acceleration(model: &ModelSpec, state: &SwarmState) -> Result<Vec<f64>> {
    let mut out = vec![0.0; state.x.len()];
    acceleration_into(model, state.n, state.d, &state.x, &state.v, &mut out)?;
    Ok(out)
}

/// Slice form of [`acceleration`] used by the integrator.
pub(crate) fn acceleration_into(
    model: &ModelSpec,
    n: usize,
    d: usize,
    x: &[f64],
    v: &[f64],
    out: &mut [f64],
) -> Result<()> {
    out.iter_mut().for_each(|a| *a = 0.0);
    let inv_n = 1.0 / n as f64;
    match model {
        ModelSpec::At { potential, tau } => {
            let xt = anticipate(x, v, *tau);
            pair_forces(potential, n, d, &xt, inv_n, out)?;
        }
        ModelSpec::PhiU { potential, kernel, tau } => {
            pair_forces(potential, n, d, x, inv_n, out)?;
            alignment(kernel, n, d, x, v, *tau, out)?;
        }
        ModelSpec::Cs { kernel, tau } => alignment(kernel, n, d, x, v, *tau, out)?,
    }
    if let Some(k) = out.iter().position(|a| !a.is_finite()) {
        return Err(Error::Numerical { agent: k / d });
    }
    Ok(())
}

/// Adds `-(1/N) sum_j (U'(r)/r) (y_i - y_j)` for each `i`; each pair is visited once.
fn pair_forces(potential: &PotentialSpec, n: usize, d: usize, y: &[f64], inv_n: f64, out: &mut [f64]) -> Result<()> {
    let mut sep = vec![0.0; d];
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..d {
                sep[k] = y[i * d + k] - y[j * d + k];
            }
            let c = potential.eval(norm(&sep))?.du_over_r * inv_n;
            for k in 0..d {
                let f = c * sep[k];
                out[i * d + k] -= f;
                out[j * d + k] += f;
            }
        }
    }
    Ok(())
}

/// Adds `(tau/N) sum_j Phi_ij (v_j - v_i)` for each `i`.
fn alignment(kernel: &KernelSpec, n: usize, d: usize, x: &[f64], v: &[f64], tau: f64, out: &mut [f64]) -> Result<()> {
    if tau == 0.0 {
        return Ok(());
    }
    let scale = tau / n as f64;
    let (mut dx, mut dv, mut w, mut phi_w) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..d {
                dx[k] = x[i * d + k] - x[j * d + k];
                dv[k] = v[i * d + k] - v[j * d + k];
                w[k] = -dv[k];
            }
            kernel.apply(&dx, &dv, tau, &w, &mut phi_w)?;
            for k in 0..d {
                let f = scale * phi_w[k];
                out[i * d + k] += f;
                out[j * d + k] -= f;
            }
        }
    }
    Ok(())
}

/// Two-agent anticipation system in polar coordinates of the anticipated
/// relative position `x_1^tau - x_2^tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
    pub vr: f64,
    pub vtheta: f64,
}

impl PolarState {
    pub fn to_array(self) -> [f64; 4] {
        [self.r, self.theta, self.vr, self.vtheta]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PolarState { r: a[0], theta: a[1], vr: a[2], vtheta: a[3] }
    }
}

/// Time derivative `(r', theta', vr', vtheta')` of the polar system.
pub fn polar_rhs(p: &PolarState, potential: &PotentialSpec, tau: f64) -> Result<PolarState> {
    if !(p.r > 0.0 && p.r.is_finite()) {
        return Err(Error::Domain(format!("polar chart needs r > 0, got {}", p.r)));
    }
    let du = potential.eval(p.r)?.du;
    Ok(PolarState {
        r: p.vr - tau * du,
        theta: p.vtheta / p.r,
        vr: -du + p.vtheta * p.vtheta / p.r,
        vtheta: -p.vr * p.vtheta / p.r,
    })
}

/// Maps a centered two-agent planar state (`x_1 = -x_2`, `v_1 = -v_2`) to
/// polar coordinates of the relative anticipated position.
///
/// The relative vector `y = x_1 - x_2` with `w = v_1 - v_2` obeys
/// `y' = w`, `w' = -U'(|y^tau|) y^tau/|y^tau|` with the original potential, so
/// `r` is the anticipated inter-agent distance and `(vr, vtheta)` are the
/// components of the relative velocity.
pub fn to_polar_two_agent(state: &SwarmState, tau: f64) -> Result<PolarState> {
    if state.n() != 2 || state.dim() != 2 {
        return Err(Error::Contract(format!(
            "polar reduction needs N=2, d=2, got N={}, d={}",
            state.n(),
            state.dim()
        )));
    }
    let (x1, x2, v1, v2) = (state.xi(0), state.xi(1), state.vi(0), state.vi(1));
    let scale = 1.0 + norm(x1).max(norm(x2)).max(norm(v1)).max(norm(v2));
    let tol = 1e-12 * scale;
    if (x1[0] + x2[0]).hypot(x1[1] + x2[1]) > tol || (v1[0] + v2[0]).hypot(v1[1] + v2[1]) > tol {
        return Err(Error::Contract("polar reduction needs x1 = -x2 and v1 = -v2".into()));
    }
    let w = [v1[0] - v2[0], v1[1] - v2[1]];
    let z = [x1[0] - x2[0] + tau * w[0], x1[1] - x2[1] + tau * w[1]];
    let r = z[0].hypot(z[1]);
    if r == 0.0 {
        return Err(Error::Domain("anticipated positions coincide; polar angle undefined".into()));
    }
    let theta = z[1].atan2(z[0]);
    let (s, c) = theta.sin_cos();
    Ok(PolarState { r, theta, vr: w[0] * c + w[1] * s, vtheta: -w[0] * s + w[1] * c })
}

/// Inverse of [`to_polar_two_agent`]: the centered Cartesian two-agent state.
pub fn polar_to_two_agent(p: &PolarState, tau: f64, t: f64) -> Result<SwarmState> {
    let (s, c) = p.theta.sin_cos();
    let w = [p.vr * c - p.vtheta * s, p.vr * s + p.vtheta * c];
    let y = [p.r * c - tau * w[0], p.r * s - tau * w[1]];
    SwarmState::new(
        t,
        2,
        2,
        vec![0.5 * y[0], 0.5 * y[1], -0.5 * y[0], -0.5 * y[1]],
        vec![0.5 * w[0], 0.5 * w[1], -0.5 * w[0], -0.5 * w[1]],
    )
}
