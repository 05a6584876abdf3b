//! Symmetric communication matrices `Phi_ij` coupling velocity differences.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{bracket_pow, PotentialSpec};

/// Where the Hessian of the potential is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPoint {
    /// At `x_i - x_j`.
    #[default]
    Current,
    /// At `x_i^tau - x_j^tau`.
    Anticipated,
}

/// Rule producing `Phi((x_i, v_i), (x_j, v_j))`.
///
/// The mean-value anticipation times that make the expanded system coincide
/// with the anticipated one are not computable, so only the two endpoint
/// rules of [`EvalPoint`] are offered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `phi_minus <r>^(-gamma) I`.
    ScalarFatTail { phi_minus: f64, gamma: f64 },
    /// `phi I`.
    ConstantScalar { phi: f64 },
    /// `D^2 U(|x|)` at the chosen evaluation point.
    HessianOfPotential {
        potential: PotentialSpec,
        #[serde(default)]
        eval_point: EvalPoint,
    },
}

/// Bounds `phi_-`, `phi_+`, `gamma` of a positive kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBounds {
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub gamma: f64,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::ScalarFatTail { phi_minus, gamma } => {
                if !(phi_minus.is_finite() && *phi_minus > 0.0) || !(0.0..1.0).contains(gamma) {
                    return Err(Error::Input(format!(
                        "fat-tail kernel needs phi_minus > 0 and gamma in [0,1), got {phi_minus}, {gamma}"
                    )));
                }
            }
            KernelSpec::ConstantScalar { phi } => {
                if !(phi.is_finite() && *phi > 0.0) {
                    return Err(Error::Input(format!("constant kernel needs phi > 0, got {phi}")));
                }
            }
            KernelSpec::HessianOfPotential { potential, .. } => potential.validate()?,
        }
        Ok(())
    }

    /// Certified positive-kernel bounds, when the rule has them.
    pub fn bounds(&self) -> Option<KernelBounds> {
        match *self {
            KernelSpec::ScalarFatTail { phi_minus, gamma } => {
                Some(KernelBounds { phi_minus, phi_plus: phi_minus, gamma })
            }
            KernelSpec::ConstantScalar { phi } => Some(KernelBounds { phi_minus: phi, phi_plus: phi, gamma: 0.0 }),
            KernelSpec::HessianOfPotential { .. } => None,
        }
    }

    /// Writes `Phi_ij w` into `out` without allocating a matrix.
    ///
    /// `dx` and `dv` are `x_i - x_j` and `v_i - v_j`.
    pub(crate) fn apply(&self, dx: &[f64], dv: &[f64], tau: f64, w: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            KernelSpec::ScalarFatTail { phi_minus, gamma } => {
                let s = phi_minus * bracket_pow(norm(dx), -gamma);
                out.iter_mut().zip(w).for_each(|(o, wk)| *o = s * wk);
            }
            KernelSpec::ConstantScalar { phi } => {
                out.iter_mut().zip(w).for_each(|(o, wk)| *o = phi * wk);
            }
            KernelSpec::HessianOfPotential { potential, eval_point } => {
                let sep = separation(dx, dv, tau, *eval_point);
                let r = norm(&sep);
                let e = potential.eval(r)?;
                if r == 0.0 {
                    out.iter_mut().zip(w).for_each(|(o, wk)| *o = e.ddu * wk);
                } else {
                    // radial projection gets U'', the tangential complement U'/r
                    let proj = sep.iter().zip(w).map(|(s, wk)| s * wk).sum::<f64>() / (r * r);
                    for ((o, wk), s) in out.iter_mut().zip(w).zip(&sep) {
                        *o = e.du_over_r * (wk - proj * s) + e.ddu * proj * s;
                    }
                }
            }
        }
        Ok(())
    }
}

fn separation(dx: &[f64], dv: &[f64], tau: f64, point: EvalPoint) -> Vec<f64> {
    match point {
        EvalPoint::Current => dx.to_vec(),
        EvalPoint::Anticipated => dx.iter().zip(dv).map(|(x, v)| x + tau * v).collect(),
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Evaluates the `d x d` communication matrix for the pair `(i, j)`.
pub fn eval_kernel(
    spec: &KernelSpec,
    xi: &[f64],
    vi: &[f64],
    xj: &[f64],
    vj: &[f64],
    tau: f64,
) -> Result<DMatrix<f64>> {
    let d = xi.len();
    if d == 0 || vi.len() != d || xj.len() != d || vj.len() != d {
        return Err(Error::Input("kernel arguments must share a dimension d >= 1".into()));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Input(format!("tau must be finite and >= 0, got {tau}")));
    }
    if xi.iter().chain(vi).chain(xj).chain(vj).any(|c| !c.is_finite()) {
        return Err(Error::Input("non-finite kernel argument".into()));
    }
    let dx: Vec<f64> = xi.iter().zip(xj).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = vi.iter().zip(vj).map(|(a, b)| a - b).collect();
    Ok(match spec {
        KernelSpec::ScalarFatTail { phi_minus, gamma } => {
            DMatrix::identity(d, d) * (phi_minus * bracket_pow(norm(&dx), -gamma))
        }
        KernelSpec::ConstantScalar { phi } => DMatrix::identity(d, d) * *phi,
        KernelSpec::HessianOfPotential { potential, eval_point } => {
            let sep = separation(&dx, &dv, tau, *eval_point);
            let r = norm(&sep);
            let e = potential.eval(r)?;
            if r == 0.0 {
                DMatrix::identity(d, d) * e.ddu
            } else {
                DMatrix::from_fn(d, d, |a, b| {
                    let outer = sep[a] * sep[b] / (r * r);
                    let id = if a == b { 1.0 } else { 0.0 };
                    e.du_over_r * (id - outer) + e.ddu * outer
                })
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_kernel_is_scaled_identity() {
        let m = eval_kernel(&KernelSpec::ConstantScalar { phi: 3.0 }, &[1.0, 2.0], &[0.0, 1.0], &[-4.0, 0.5], &[2.0, 2.0], 0.3)
            .unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn hessian_of_quadratic_is_identity() {
        let k = KernelSpec::HessianOfPotential {
            potential: PotentialSpec::QuadraticWell { a: 1.0 },
            eval_point: EvalPoint::Current,
        };
        let m = eval_kernel(&k, &[0.3, -1.0, 2.0], &[0.0; 3], &[1.0, 1.0, 1.0], &[0.0; 3], 0.0).unwrap();
        assert!((m - DMatrix::identity(3, 3)).abs().max() < 1e-15);
    }

    #[test]
    fn hessian_of_power_law_at_sqrt3() {
        // <sqrt 3> = 2: U'' = 2^(-5/2) (1 + 3/2) = 5/(8 sqrt 2), U'/r = 2^(-1/2)
        let k = KernelSpec::HessianOfPotential {
            potential: PotentialSpec::PowerLawAttractive { a: 1.0, beta: 0.5 },
            eval_point: EvalPoint::Current,
        };
        let m = eval_kernel(&k, &[3f64.sqrt(), 0.0], &[0.0; 2], &[0.0, 0.0], &[0.0; 2], 0.0).unwrap();
        assert_relative_eq!(m[(0, 0)], 5.0 / (8.0 * 2f64.sqrt()), max_relative = 1e-14);
        assert_relative_eq!(m[(1, 1)], 1.0 / 2f64.sqrt(), max_relative = 1e-14);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn coincident_points_use_second_derivative() {
        let k = KernelSpec::HessianOfPotential {
            potential: PotentialSpec::RepulsiveAttractive { k: 1.0, r0: 2.0 },
            eval_point: EvalPoint::Anticipated,
        };
        // x_i^tau = x_j^tau although x_i != x_j
        let m = eval_kernel(&k, &[1.0, 0.0], &[-1.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2) * -4.0);
    }

    #[test]
    fn apply_matches_matrix() {
        let k = KernelSpec::HessianOfPotential {
            potential: PotentialSpec::PowerLawAttractive { a: 1.3, beta: 0.3 },
            eval_point: EvalPoint::Anticipated,
        };
        let (xi, vi, xj, vj) = ([0.4, -1.2, 2.0], [0.1, 0.7, -0.3], [-0.5, 0.2, 0.9], [1.0, -0.4, 0.0]);
        let m = eval_kernel(&k, &xi, &vi, &xj, &vj, 0.8).unwrap();
        let w = [0.3, -2.0, 1.1];
        let dx: Vec<f64> = xi.iter().zip(&xj).map(|(a, b)| a - b).collect();
        let dv: Vec<f64> = vi.iter().zip(&vj).map(|(a, b)| a - b).collect();
        let mut out = [0.0; 3];
        k.apply(&dx, &dv, 0.8, &w, &mut out).unwrap();
        let expect = &m * nalgebra::DVector::from_column_slice(&w);
        for a in 0..3 {
            assert_relative_eq!(out[a], expect[a], max_relative = 1e-13);
        }
    }

    #[test]
    fn non_finite_arguments_are_rejected() {
        let k = KernelSpec::ConstantScalar { phi: 1.0 };
        assert!(eval_kernel(&k, &[f64::NAN], &[0.0], &[0.0], &[0.0], 0.0).is_err());
        assert!(eval_kernel(&k, &[0.0], &[0.0], &[0.0, 1.0], &[0.0], 0.0).is_err());
    }
}
