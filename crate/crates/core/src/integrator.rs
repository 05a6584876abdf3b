//! Fixed-step explicit time integration with a blow-up guard and periodic
//! sampling.

use serde::{Deserialize, Serialize};

use crate::dynamics::{acceleration_into, mean_rows, ModelSpec, SwarmState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

pub const DEFAULT_BLOWUP_GUARD: f64 = 1e8;

/// Step size `1e-2 min(1, 1/sqrt(A))` for a potential whose Hessian is bounded by `A`.
pub fn default_step(hessian_bound: f64) -> f64 {
    if hessian_bound > 0.0 {
        1e-2 * (1.0f64).min(1.0 / hessian_bound.sqrt())
    } else {
        1e-2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub method: Method,
    pub h: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub sample_stride: usize,
    #[serde(default = "default_guard")]
    pub blowup_guard: f64,
    /// Integrate fluctuations about the mean motion, re-centering after
    /// every step (see [`integrate`]).
    #[serde(default)]
    pub comoving: bool,
}

fn one() -> usize {
    1
}

fn default_guard() -> f64 {
    DEFAULT_BLOWUP_GUARD
}

impl IntegratorSpec {
    pub fn new(h: f64, t_end: f64) -> Self {
        IntegratorSpec { method: Method::Rk4, h, t_end, sample_stride: 1, blowup_guard: DEFAULT_BLOWUP_GUARD, comoving: false }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::Input(format!("step size must be > 0, got {}", self.h)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.h) {
            return Err(Error::Input(format!("t_end must be >= h, got t_end={}, h={}", self.t_end, self.h)));
        }
        if self.sample_stride == 0 {
            return Err(Error::Input("sample_stride must be >= 1".into()));
        }
        if !(self.blowup_guard > 0.0) {
            return Err(Error::Input("blowup_guard must be > 0".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / h)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }
}

/// A first-order system `y' = f(t, y)` on a flat state vector.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

/// Scratch buffers for one explicit step.
#[derive(Debug, Default)]
pub struct Workspace {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Workspace {
    fn resize(&mut self, n: usize) {
        for k in &mut self.k {
            k.resize(n, 0.0);
        }
        self.tmp.resize(n, 0.0);
    }
}

/// Advances `y` in place by one step of `method`.
pub fn step_flat<S: OdeSystem + ?Sized>(
    sys: &S,
    method: Method,
    t: f64,
    y: &mut [f64],
    h: f64,
    ws: &mut Workspace,
) -> Result<()> {
    ws.resize(y.len());
    match method {
        Method::Euler => {
            sys.rhs(t, y, &mut ws.k[0])?;
            y.iter_mut().zip(&ws.k[0]).for_each(|(y, k)| *y += h * k);
        }
        Method::Rk4 => {
            let Workspace { k, tmp } = ws;
            let [k1, k2, k3, k4] = k;
            sys.rhs(t, y, k1)?;
            stage(tmp, y, k1, 0.5 * h);
            sys.rhs(t + 0.5 * h, tmp, k2)?;
            stage(tmp, y, k2, 0.5 * h);
            sys.rhs(t + 0.5 * h, tmp, k3)?;
            stage(tmp, y, k3, h);
            sys.rhs(t + h, tmp, k4)?;
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    Ok(())
}

fn stage(out: &mut [f64], y: &[f64], k: &[f64], c: f64) {
    for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
        *o = y + c * k;
    }
}

/// Where and when a run was stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUp {
    pub t: f64,
    /// Index of the step whose result tripped the guard (1-based).
    pub step: usize,
    /// Agent (or particle) index responsible.
    pub agent: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    pub blowup: Option<BlowUp>,
}

/// Drives `sys` from `(t0, y0)` for `spec.n_steps()` steps.
///
/// `observe` sees step 0 and every `sample_stride`-th step afterwards.
/// `post_step` may adjust each new state in place and names the offending
/// component when the run must stop; a non-finite right-hand side also
/// stops the run.
/// If the guard trips at step `k`, only states strictly before it are
/// observed.
pub fn run_flat<S, O, G>(
    sys: &S,
    t0: f64,
    y0: Vec<f64>,
    spec: &IntegratorSpec,
    mut observe: O,
    mut post_step: G,
) -> Result<FlatOutcome>
where
    S: OdeSystem + ?Sized,
    O: FnMut(f64, &[f64]) -> Result<()>,
    G: FnMut(f64, &mut [f64]) -> Option<usize>,
{
    spec.validate()?;
    let n_steps = spec.n_steps();
    let mut y = y0;
    let mut ws = Workspace::default();
    let mut t = t0;
    for k in 0..n_steps {
        if k % spec.sample_stride == 0 {
            observe(t, &y)?;
        }
        let t_next = t0 + (k + 1) as f64 * spec.h;
        match step_flat(sys, spec.method, t, &mut y, spec.h, &mut ws) {
            Ok(()) => {}
            Err(Error::Numerical { agent }) => {
                let blowup = Some(BlowUp { t: t_next, step: k + 1, agent });
                return Ok(FlatOutcome { t: t_next, y, steps: k + 1, blowup });
            }
            Err(e) => return Err(e),
        }
        t = t_next;
        if let Some(agent) = post_step(t, &mut y) {
            return Ok(FlatOutcome { t, y, steps: k + 1, blowup: Some(BlowUp { t, step: k + 1, agent }) });
        }
    }
    if n_steps.is_multiple_of(spec.sample_stride) {
        observe(t, &y)?;
    }
    Ok(FlatOutcome { t, y, steps: n_steps, blowup: None })
}

struct SwarmSystem<'a> {
    model: &'a ModelSpec,
    n: usize,
    d: usize,
}

impl OdeSystem for SwarmSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let m = self.n * self.d;
        let (x, v) = y.split_at(m);
        let (dx, dv) = dy.split_at_mut(m);
        dx.copy_from_slice(v);
        acceleration_into(self.model, self.n, self.d, x, v, dv)
    }
}

fn pack(state: &SwarmState) -> Vec<f64> {
    let mut y = state.x.clone();
    y.extend_from_slice(&state.v);
    y
}

/// One explicit step of the coupled system `x' = v`, `v' = a(x, v)`.
pub fn step(model: &ModelSpec, state: &SwarmState, h: f64, method: Method) -> Result<SwarmState> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Input(format!("step size must be > 0, got {h}")));
    }
    let (n, d) = (state.n(), state.dim());
    let sys = SwarmSystem { model, n, d };
    let mut y = pack(state);
    step_flat(&sys, method, state.t, &mut y, h, &mut Workspace::default())?;
    let t = state.t + h;
    let v = y.split_off(n * d);
    SwarmState::new(t, n, d, y, v)
}

/// Receives sampled states during [`integrate`].
pub trait Observer {
    fn observe(&mut self, state: &SwarmState) -> Result<()>;
}

impl<F: FnMut(&SwarmState) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &SwarmState) -> Result<()> {
        self(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOutcome {
    /// Last state reached; on blow-up this is the state that tripped the guard.
    pub final_state: SwarmState,
    pub steps: usize,
    pub blowup: Option<BlowUp>,
}

/// Integrates `model` from `state0` to `spec.t_end`, sampling through `observer`.
///
/// With `spec.comoving` the run takes place in the zero-momentum frame: the
/// initial means are removed and any residual mean is subtracted after every
/// step. All three systems depend only on pairwise differences, so this is
/// the same relative motion; it keeps fluctuations resolvable after they
/// fall below the rounding level of the mean. Observers and the final state
/// then see zero-momentum coordinates.
pub fn integrate<O: Observer + ?Sized>(
    model: &ModelSpec,
    state0: &SwarmState,
    spec: &IntegratorSpec,
    observer: &mut O,
) -> Result<IntegrationOutcome> {
    model.validate()?;
    let (n, d) = (state0.n(), state0.dim());
    let m = n * d;
    let sys = SwarmSystem { model, n, d };
    let guard_m = spec.blowup_guard;
    let y0 = if spec.comoving { pack(&state0.centered()) } else { pack(state0) };
    let out = run_flat(
        &sys,
        state0.t,
        y0,
        spec,
        |t, y| observer.observe(&SwarmState::new(t, n, d, y[..m].to_vec(), y[m..].to_vec())?),
        |_, y| {
            if spec.comoving {
                let (x, v) = y.split_at_mut(m);
                for part in [x, v] {
                    let mean = mean_rows(part, n, d);
                    part.iter_mut().enumerate().for_each(|(k, c)| *c -= mean[k % d]);
                }
            }
            y.iter().position(|c| !c.is_finite() || c.abs() > guard_m).map(|k| (k % m) / d)
        },
    )?;
    let mut y = out.y;
    let v = y.split_off(m);
    Ok(IntegrationOutcome {
        // may hold non-finite entries after a blow-up
        final_state: SwarmState::from_raw(out.t, n, d, y, v),
        steps: out.steps,
        blowup: out.blowup,
    })
}
