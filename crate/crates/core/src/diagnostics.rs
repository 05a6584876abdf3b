//! Monitored quantities of a swarm run, the sub-exponential decay fitter,
//! the local-vs-global means inequality and the a-priori spread envelopes.
//!
//! Fluctuation quantities (`dE`, `d_cal_E`, spreads) are measured in the
//! instantaneous zero-momentum frame: means are subtracted here instead of
//! requiring centered inputs.

use serde::{Deserialize, Serialize};

use crate::dynamics::{acceleration, anticipated_positions, mean_rows, ModelSpec, SwarmState};
use crate::error::{Error, Result};
use crate::kernels::norm;
use crate::potentials::{bracket, bracket_pow, PotentialSpec};

/// Energy bookkeeping at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    /// Instantaneous energy `E`.
    pub e: f64,
    /// Anticipated energy.
    pub cal_e: f64,
    /// Energy fluctuation `E - |vbar|^2/2`.
    pub de: f64,
    /// Anticipated-energy fluctuation.
    pub d_cal_e: f64,
    /// `(tau/N) sum_i |a_i|^2`.
    pub enstrophy: f64,
}

/// `(1/2N^2) sum_{i != j} U(|y_i - y_j|)`.
///
/// The diagonal is skipped; it contributes `U(0)/2N`, which vanishes for the
/// normalized families.
pub fn pair_potential(potential: &PotentialSpec, y: &[f64], n: usize, d: usize) -> Result<f64> {
    let mut sum = 0.0;
    let mut sep = vec![0.0; d];
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..d {
                sep[k] = y[i * d + k] - y[j * d + k];
            }
            sum += potential.eval(norm(&sep))?.u;
        }
    }
    // each unordered pair stands for two ordered pairs
    Ok(sum / (n * n) as f64)
}

fn kinetic(v: &[f64], n: usize) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>() / (2 * n) as f64
}

fn kinetic_fluctuation(v: &[f64], n: usize, d: usize) -> f64 {
    let vb = mean_rows(v, n, d);
    v.iter().enumerate().map(|(k, c)| (c - vb[k % d]).powi(2)).sum::<f64>() / (2 * n) as f64
}

/// `E`, anticipated energy, their fluctuations and the enstrophy of `model` at `state`.
pub fn energies(state: &SwarmState, model: &ModelSpec) -> Result<Energies> {
    let (n, d) = (state.n(), state.dim());
    let tau = model.tau();
    let (pot, pot_tau) = match model.potential() {
        Some(p) => {
            let cur = pair_potential(p, &state.x, n, d)?;
            let ant = if tau == 0.0 { cur } else { pair_potential(p, &anticipated_positions(state, tau), n, d)? };
            (cur, ant)
        }
        None => (0.0, 0.0),
    };
    let kin = kinetic(&state.v, n);
    let kin_fl = kinetic_fluctuation(&state.v, n, d);
    let acc = acceleration(model, state)?;
    let enstrophy = tau * acc.iter().map(|a| a * a).sum::<f64>() / n as f64;
    Ok(Energies { e: kin + pot, cal_e: kin + pot_tau, de: kin_fl + pot, d_cal_e: kin_fl + pot_tau, enstrophy })
}

/// Which modified energy a run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifiedForm {
    /// `E + (eps/N) sum x_i . v_i`.
    #[default]
    Current,
    /// Anticipated energy `- (eps/N) sum x_i^tau . v_i`.
    Anticipated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedEnergyParams {
    pub eps0: f64,
    pub alpha: f64,
    #[serde(default)]
    pub form: ModifiedForm,
}

impl ModifiedEnergyParams {
    /// Default weight exponent for the current-position form, `2 max(beta, gamma) / (4 - 3 beta)`.
    pub fn current_default(beta: f64, gamma: f64) -> Self {
        ModifiedEnergyParams { eps0: 1e-2, alpha: 2.0 * beta.max(gamma) / (4.0 - 3.0 * beta), form: ModifiedForm::Current }
    }

    /// Default weight exponent for the anticipated form, `2 beta / (1 - beta)`.
    pub fn anticipated_default(beta: f64) -> Self {
        ModifiedEnergyParams { eps0: 1e-2, alpha: 2.0 * beta / (1.0 - beta), form: ModifiedForm::Anticipated }
    }
}

/// Both modified energies of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedEnergies {
    pub eps: f64,
    pub current: f64,
    pub anticipated: f64,
}

impl ModifiedEnergies {
    pub fn select(&self, form: ModifiedForm) -> f64 {
        match form {
            ModifiedForm::Current => self.current,
            ModifiedForm::Anticipated => self.anticipated,
        }
    }
}

/// Hypocoercive energies with cross-term weight `eps(t) = eps0 <t>^(-alpha)`.
///
/// Evaluated on `state` as given; pass a centered state for the fluctuation form.
pub fn modified_energy(
    state: &SwarmState,
    potential: Option<&PotentialSpec>,
    tau: f64,
    eps0: f64,
    alpha: f64,
) -> Result<ModifiedEnergies> {
    if !(eps0 >= 0.0) {
        return Err(Error::Input(format!("eps0 must be >= 0, got {eps0}")));
    }
    let (n, d) = (state.n(), state.dim());
    let eps = eps0 * bracket_pow(state.t, -alpha);
    let xt = anticipated_positions(state, tau);
    let kin = kinetic(&state.v, n);
    let (pot, pot_tau) = match potential {
        Some(p) => (pair_potential(p, &state.x, n, d)?, pair_potential(p, &xt, n, d)?),
        None => (0.0, 0.0),
    };
    let dot = |y: &[f64]| y.iter().zip(&state.v).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    Ok(ModifiedEnergies {
        eps,
        current: kin + pot + eps * dot(&state.x),
        anticipated: kin + pot_tau - eps * dot(&xt),
    })
}

/// One sampled instant of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub e: f64,
    pub cal_e: f64,
    pub de: f64,
    pub d_cal_e: f64,
    pub enstrophy: f64,
    /// `max_i |x_i - xbar|`.
    pub x_spread: f64,
    /// `max_i |x_i^tau - xbar^tau|`.
    pub x_tau_spread: f64,
    /// `max_i |v_i - vbar|`.
    pub v_max: f64,
    pub xbar: Vec<f64>,
    pub vbar: Vec<f64>,
    pub e_hat: Option<f64>,
}

/// CSV header of [`DiagnosticsRow::csv_line`].
pub const CSV_HEADER: &str = "t,E,cal_E,dE,d_cal_E,enstrophy,X,X_tau,Vmax,E_hat";

impl DiagnosticsRow {
    /// Comma-separated fields in [`CSV_HEADER`] order, 17 significant digits;
    /// `E_hat` is left empty when not computed.
    pub fn csv_line(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let fields = [self.t, self.e, self.cal_e, self.de, self.d_cal_e, self.enstrophy, self.x_spread, self.x_tau_spread, self.v_max];
        let mut line = fields.iter().map(|v| f(*v)).collect::<Vec<_>>().join(",");
        line.push(',');
        if let Some(e) = self.e_hat {
            line.push_str(&f(e));
        }
        line
    }
}

fn max_deviation(y: &[f64], n: usize, d: usize) -> (f64, Vec<f64>) {
    let m = mean_rows(y, n, d);
    let spread = y
        .chunks_exact(d)
        .map(|row| row.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    (spread, m)
}

/// Computes every monitored quantity of `model` at `state`.
pub fn diagnostics_row(state: &SwarmState, model: &ModelSpec, modified: Option<&ModifiedEnergyParams>) -> Result<DiagnosticsRow> {
    let (n, d) = (state.n(), state.dim());
    let en = energies(state, model)?;
    let (x_spread, xbar) = max_deviation(&state.x, n, d);
    let (v_max, vbar) = max_deviation(&state.v, n, d);
    let (x_tau_spread, _) = max_deviation(&anticipated_positions(state, model.tau()), n, d);
    let e_hat = match modified {
        Some(p) => Some(modified_energy(&state.centered(), model.potential(), model.tau(), p.eps0, p.alpha)?.select(p.form)),
        None => None,
    };
    Ok(DiagnosticsRow {
        t: state.t,
        e: en.e,
        cal_e: en.cal_e,
        de: en.de,
        d_cal_e: en.d_cal_e,
        enstrophy: en.enstrophy,
        x_spread,
        x_tau_spread,
        v_max,
        xbar,
        vbar,
        e_hat,
    })
}

/// Least-squares line through `(xs, ys)`: slope, intercept, slope standard error.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Fit("need at least two paired samples".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, stderr))
}

/// Fitted exponent of a sub-exponential decay `f(t) ~ exp(-c t^p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Estimate of `p`, i.e. `1 - lambda`.
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub samples: usize,
}

/// Slope of `log(-log(f(t)/f(t0)))` against `log t` over `window`, where `t0`
/// is the first sample of the series.
pub fn fit_subexp_exponent(t: &[f64], f: &[f64], window: (f64, f64)) -> Result<ExponentFit> {
    if t.is_empty() || t.len() != f.len() {
        return Err(Error::Fit("series must be non-empty with one value per time".into()));
    }
    let f0 = f[0];
    if !(f0 > 0.0) {
        return Err(Error::Fit(format!("reference value must be positive, got {f0}")));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&ti, &fi) in t.iter().zip(f) {
        if ti < window.0 || ti > window.1 {
            continue;
        }
        if !(fi > 0.0) {
            return Err(Error::Fit(format!("non-positive value {fi} at t = {ti}")));
        }
        let decay = -(fi / f0).ln();
        if !(decay > 0.0) || ti <= 0.0 {
            return Err(Error::Fit(format!("series has not decayed below its initial value at t = {ti}")));
        }
        xs.push(ti.ln());
        ys.push(decay.ln());
    }
    if xs.len() < 8 {
        return Err(Error::Fit(format!("only {} samples in window, need 8", xs.len())));
    }
    let (slope, intercept, stderr) = linear_fit(&xs, &ys)?;
    Ok(ExponentFit { slope, stderr, intercept, samples: xs.len() })
}

/// Result of one local-vs-global means comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeansCheck {
    /// `(1/N) sum_i |z_i - zbar|^2`.
    pub lhs: f64,
    /// `(1/N) sum_i |(1/N) sum_j c_ij (z_i - z_j)|^2`.
    pub rhs: f64,
    /// `(4/lam^2) (1 + 4 (Lam/lam - 1)^2)`.
    pub c_explicit: f64,
    /// `lhs / rhs` (zero when both vanish).
    pub ratio: f64,
    pub pass: bool,
}

/// Explicit comparison constant for weights in `[lam, cap]`.
pub fn means_constant(lam: f64, cap: f64) -> f64 {
    4.0 / (lam * lam) * (1.0 + 4.0 * (cap / lam - 1.0).powi(2))
}

/// Checks that deviation from the global mean is controlled by deviation
/// from the `c`-weighted local means; `c` is row-major `N x N` and need not
/// be symmetric.
pub fn check_means_inequality(z: &[f64], n: usize, d: usize, c: &[f64], lam: f64, cap: f64) -> Result<MeansCheck> {
    if n == 0 || d == 0 || z.len() != n * d || c.len() != n * n {
        return Err(Error::Input("means check needs z of size N x d and c of size N x N".into()));
    }
    if !(lam > 0.0 && lam <= cap && cap.is_finite()) {
        return Err(Error::Input(format!("need 0 < lam <= Lam, got {lam}, {cap}")));
    }
    if let Some(k) = c.iter().position(|w| !(*w >= lam && *w <= cap)) {
        return Err(Error::Input(format!(
            "weight c[{}][{}] = {} outside [{lam}, {cap}]",
            k / n,
            k % n,
            c[k]
        )));
    }
    let nf = n as f64;
    let zbar = mean_rows(z, n, d);
    let lhs = z.iter().enumerate().map(|(k, v)| (v - zbar[k % d]).powi(2)).sum::<f64>() / nf;
    let mut rhs = 0.0;
    let mut local = vec![0.0; d];
    for i in 0..n {
        local.iter_mut().for_each(|l| *l = 0.0);
        for j in 0..n {
            let w = c[i * n + j];
            for k in 0..d {
                local[k] += w * (z[i * d + k] - z[j * d + k]);
            }
        }
        rhs += local.iter().map(|l| (l / nf).powi(2)).sum::<f64>();
    }
    rhs /= nf;
    let c_explicit = means_constant(lam, cap);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    let pass = lhs <= c_explicit * rhs * (1.0 + 1e-12);
    Ok(MeansCheck { lhs, rhs, c_explicit, ratio, pass })
}

/// Envelope check of one monitored spread.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSeries {
    pub name: &'static str,
    /// Power `p` of the envelope `C <t>^p`.
    pub exponent: f64,
    /// Smallest `C` bounding the whole run.
    pub c_inf: f64,
    /// Smallest `C` bounding the first half of the run.
    pub c_calibrated: f64,
    /// Times in the second half where the calibrated envelope is exceeded.
    pub violations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub beta: f64,
    pub series: Vec<EnvelopeSeries>,
}

impl EnvelopeReport {
    pub fn violation_count(&self) -> usize {
        self.series.iter().map(|s| s.violations.len()).sum()
    }
}

/// Envelope powers for `X`, `X_tau` and `Vmax` under tail exponent `beta`.
pub fn envelope_exponents(beta: f64) -> [f64; 3] {
    [2.0 / (4.0 - 3.0 * beta), 1.0 / (2.0 - 2.0 * beta), (2.0 - beta) / (4.0 - 3.0 * beta)]
}

/// Fits the a-priori growth envelopes `C <t>^p` to the sampled spreads.
///
/// The constant is calibrated on the first half of the run (by time); a
/// violation is a later sample whose ratio to `<t>^p` exceeds it, i.e.
/// growth faster than the envelope allows.
pub fn spread_envelopes(rows: &[DiagnosticsRow], beta: f64) -> Result<EnvelopeReport> {
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::Input("envelope fit needs at least one row".into())),
    };
    let t_mid = 0.5 * (first + last);
    let [px, pxt, pv] = envelope_exponents(beta);
    let mut series = Vec::new();
    type Series = (&'static str, f64, fn(&DiagnosticsRow) -> f64);
    let specs: [Series; 3] = [
        ("X", px, |r| r.x_spread),
        ("X_tau", pxt, |r| r.x_tau_spread),
        ("Vmax", pv, |r| r.v_max),
    ];
    for (name, p, get) in specs {
        let ratio = |r: &DiagnosticsRow| get(r) / bracket(r.t).powf(p);
        let c_inf = rows.iter().map(ratio).fold(0.0, f64::max);
        let c_cal = rows.iter().filter(|r| r.t <= t_mid).map(ratio).fold(0.0, f64::max);
        let violations = rows
            .iter()
            .filter(|r| r.t > t_mid && ratio(r) > c_cal * (1.0 + 1e-9))
            .map(|r| r.t)
            .collect();
        series.push(EnvelopeSeries { name, exponent: p, c_inf, c_calibrated: c_cal, violations });
    }
    Ok(EnvelopeReport { beta, series })
}

/// Largest `|Delta cal_E + integral of enstrophy|` between the first row and
/// any later row, with the integral accumulated by the trapezoid rule.
pub fn energy_enstrophy_residual(rows: &[DiagnosticsRow]) -> f64 {
    let Some(first) = rows.first() else { return 0.0 };
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for w in rows.windows(2) {
        integral += 0.5 * (w[1].t - w[0].t) * (w[0].enstrophy + w[1].enstrophy);
        worst = worst.max((w[1].cal_e - first.cal_e + integral).abs());
    }
    worst
}

/// Largest drift of the mean velocity and of the mean position from
/// `xbar0 + t vbar0`.
pub fn momentum_drift(rows: &[DiagnosticsRow]) -> (f64, f64) {
    let Some(first) = rows.first() else { return (0.0, 0.0) };
    let mut dv: f64 = 0.0;
    let mut dx: f64 = 0.0;
    for r in rows {
        let elapsed = r.t - first.t;
        let vd = r.vbar.iter().zip(&first.vbar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let xd = r
            .xbar
            .iter()
            .zip(&first.xbar)
            .zip(&first.vbar)
            .map(|((x, x0), v0)| (x - x0 - elapsed * v0).powi(2))
            .sum::<f64>()
            .sqrt();
        dv = dv.max(vd);
        dx = dx.max(xd);
    }
    (dv, dx)
}

/// Largest increase of `get` between consecutive rows (zero for a non-increasing series).
pub fn max_increase(rows: &[DiagnosticsRow], get: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
    rows.windows(2).map(|w| get(&w[1]) - get(&w[0])).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use approx::assert_relative_eq;

    fn quad_at(tau: f64) -> ModelSpec {
        ModelSpec::At { potential: PotentialSpec::QuadraticWell { a: 1.0 }, tau }
    }

    #[test]
    fn two_agent_energy() {
        let s = SwarmState::new(0.0, 2, 1, vec![1.0, -1.0], vec![1.0, -1.0]).unwrap();
        let e = energies(&s, &quad_at(0.0)).unwrap();
        assert_eq!(e.e, 1.0);
        assert_eq!(e.cal_e, e.e);
        assert_eq!(e.de, 1.0);
        assert_eq!(e.enstrophy, 0.0);
    }

    #[test]
    fn no_fluctuation_when_agents_coincide() {
        let s = SwarmState::new(0.0, 3, 2, [0.5, 1.0].repeat(3), [3.0, 4.0].repeat(3)).unwrap();
        let e = energies(&s, &quad_at(0.4)).unwrap();
        assert_eq!(e.e, 12.5);
        assert_eq!(e.de, 0.0);
        assert_eq!(e.d_cal_e, 0.0);
    }

    #[test]
    fn zero_tau_anticipated_energy_is_bitwise_equal() {
        let s = SwarmState::new(0.0, 3, 2, vec![0.1, 2.0, -1.0, 0.3, 0.7, -0.9], vec![1.0, 0.0, 0.5, -0.5, 0.2, 0.1]).unwrap();
        let m = ModelSpec::At { potential: PotentialSpec::PowerLawAttractive { a: 1.0, beta: 0.3 }, tau: 0.0 };
        let e = energies(&s, &m).unwrap();
        assert_eq!(e.e.to_bits(), e.cal_e.to_bits());
    }

    #[test]
    fn cs_has_no_potential_energy() {
        let s = SwarmState::new(0.0, 2, 1, vec![1.0, -1.0], vec![1.0, 3.0]).unwrap();
        let m = ModelSpec::Cs { kernel: KernelSpec::ConstantScalar { phi: 1.0 }, tau: 1.0 };
        let e = energies(&s, &m).unwrap();
        assert_eq!(e.e, 2.5);
        assert_eq!(e.de, 0.5);
        // a = tau phi (vbar - v_i) = (1, -1)
        assert_eq!(e.enstrophy, 1.0);
    }

    #[test]
    fn modified_energy_trivial_cases() {
        let s = SwarmState::new(2.0, 2, 1, vec![1.0, -1.0], vec![0.5, -0.5]).unwrap();
        let p = PotentialSpec::QuadraticWell { a: 1.0 };
        let m = modified_energy(&s, Some(&p), 0.3, 0.0, 1.0).unwrap();
        let e = energies(&s, &ModelSpec::At { potential: p.clone(), tau: 0.3 }).unwrap();
        assert_eq!(m.current, e.e);
        assert_eq!(m.anticipated, e.cal_e);
        let still = SwarmState::new(2.0, 2, 1, vec![1.0, -1.0], vec![0.0, 0.0]).unwrap();
        let m = modified_energy(&still, Some(&p), 0.3, 0.5, 1.0).unwrap();
        assert_eq!(m.current, energies(&still, &quad_at(0.3)).unwrap().e);
        assert!(modified_energy(&s, Some(&p), 0.3, -1.0, 1.0).is_err());
    }

    #[test]
    fn fit_recovers_synthetic_exponents() {
        let t: Vec<f64> = (0..=5000).map(|k| 0.1 * k as f64).collect();
        let f: Vec<f64> = t.iter().map(|t| (-t.powf(0.7)).exp()).collect();
        let fit = fit_subexp_exponent(&t, &f, (10.0, 500.0)).unwrap();
        assert!((fit.slope - 0.7).abs() <= 0.01, "{fit:?}");
        let g: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let fit = fit_subexp_exponent(&t, &g, (10.0, 300.0)).unwrap();
        assert!((fit.slope - 1.0).abs() <= 0.01, "{fit:?}");
    }

    #[test]
    fn fit_errors() {
        let t: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let f: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        assert!(matches!(fit_subexp_exponent(&t, &f, (10.0, 12.0)), Err(Error::Fit(_))));
        let mut g = f.clone();
        g[15] = 0.0;
        assert!(matches!(fit_subexp_exponent(&t, &g, (1.0, 19.0)), Err(Error::Fit(_))));
    }

    #[test]
    fn constant_weights_give_inverse_square_ratio() {
        let z = vec![0.0, 1.0, 4.0, -2.0, 0.5, 0.5];
        let c = vec![2.0; 9];
        let r = check_means_inequality(&z, 3, 2, &c, 2.0, 2.0).unwrap();
        assert_relative_eq!(r.rhs, 4.0 * r.lhs, max_relative = 1e-14);
        assert_relative_eq!(r.ratio, 0.25, max_relative = 1e-14);
        assert_eq!(r.c_explicit, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn equal_vectors_pass_trivially() {
        let r = check_means_inequality(&[1.5; 8], 4, 2, &[1.0; 16], 0.5, 2.0).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn out_of_range_weight_names_indices() {
        let mut c = vec![1.0; 4];
        c[2] = 5.0;
        match check_means_inequality(&[0.0, 1.0], 2, 1, &c, 0.5, 2.0) {
            Err(Error::Input(msg)) => assert!(msg.contains("c[1][0]"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    fn row(t: f64, x: f64) -> DiagnosticsRow {
        DiagnosticsRow {
            t,
            e: 0.0,
            cal_e: 0.0,
            de: 0.0,
            d_cal_e: 0.0,
            enstrophy: 0.0,
            x_spread: x,
            x_tau_spread: x,
            v_max: 0.0,
            xbar: vec![0.0],
            vbar: vec![0.0],
            e_hat: None,
        }
    }

    #[test]
    fn envelopes_flag_fast_growth_only() {
        let still: Vec<_> = (0..100).map(|k| row(k as f64, 2.0)).collect();
        let rep = spread_envelopes(&still, 0.2).unwrap();
        assert_eq!(rep.violation_count(), 0);
        assert_eq!(rep.series[0].c_inf, 2.0);
        let growing: Vec<_> = (0..100).map(|k| row(k as f64, 1.0 + k as f64)).collect();
        let rep = spread_envelopes(&growing, 0.2).unwrap();
        assert!(!rep.series[0].violations.is_empty());
        assert!(spread_envelopes(&[], 0.2).is_err());
    }

    #[test]
    fn csv_line_has_ten_fields() {
        let r = row(1.0, 2.0);
        assert_eq!(r.csv_line().split(',').count(), 10);
        assert!(r.csv_line().ends_with(','));
        assert_eq!(CSV_HEADER.split(',').count(), 10);
    }
}
