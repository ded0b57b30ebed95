//! Pointwise constitutive kernels for Darcy-Forchheimer flow.
//!
//! The Forchheimer momentum law `-grad p = alpha v + beta |v| v` is inverted in
//! closed form as `v = -f(|grad p|) grad p` with the mobility
//! `f(z) = 2 / (alpha + sqrt(alpha^2 + 4 beta z))`. This form never divides by
//! `beta`, so the Darcy limit `beta = 0` needs no special case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flow coefficients of the fractured reservoir.
///
/// `alpha_f` and `beta` describe the Forchheimer law inside the fracture,
/// `k_p` is the Darcy mobility of the porous block, `k_f` the linear part of
/// the fracture mobility and `aniso_k` the transverse mobility used by the
/// anisotropic fracture tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub alpha_f: f64,
    pub beta: f64,
    pub k_p: f64,
    pub k_f: f64,
    pub aniso_k: f64,
}

impl FlowParams {
    /// Builds parameters with `k_f` and `aniso_k` set to the zero-gradient
    /// mobility `f(0) = 1 / alpha_f`.
    pub fn new(alpha_f: f64, beta: f64, k_p: f64) -> Result<Self> {
        let p = FlowParams {
            alpha_f,
            beta,
            k_p,
            k_f: 1.0 / alpha_f,
            aniso_k: 1.0 / alpha_f,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_k_f(mut self, k_f: f64) -> Self {
        self.k_f = k_f;
        self
    }

    pub fn with_aniso_k(mut self, k: f64) -> Self {
        self.aniso_k = k;
        self
    }

    /// Multiplies both linear mobilities; `alpha_f` follows so that
    /// `k_f = 1/alpha_f` is preserved when it held before.
    pub fn scaled_mobility(mut self, factor: f64) -> Self {
        self.k_p *= factor;
        self.k_f *= factor;
        self.alpha_f /= factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha_f", self.alpha_f),
            ("beta", self.beta),
            ("k_p", self.k_p),
            ("k_f", self.k_f),
            ("aniso_k", self.aniso_k),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if self.alpha_f <= 0.0 {
            return Err(Error::Domain("alpha_f must be > 0".into()));
        }
        if self.beta < 0.0 {
            return Err(Error::Domain("beta must be ≥ 0".into()));
        }
        if self.k_p <= 0.0 || self.k_f <= 0.0 || self.aniso_k <= 0.0 {
            return Err(Error::Domain("k_p, k_f and aniso_k must be > 0".into()));
        }
        Ok(())
    }

    /// Unchecked fracture mobility, see [`mobility`].
    #[inline]
    pub fn mobility(&self, grad_norm: f64) -> f64 {
        mobility(self.alpha_f, self.beta, grad_norm)
    }
}

/// Forchheimer mobility `2 / (alpha + sqrt(alpha^2 + 4 beta z))`, no checks.
#[inline]
pub fn mobility(alpha: f64, beta: f64, grad_norm: f64) -> f64 {
    2.0 / (alpha + (alpha * alpha + 4.0 * beta * grad_norm).sqrt())
}

/// Potential `Phi(g) = int_0^|g| t f(t) dt` of the Forchheimer flux.
///
/// Closed form `(2/3) g^2 (2u + alpha) / (u + alpha)^2` with
/// `u = sqrt(alpha^2 + 4 beta |g|)`; reduces to `g^2 / (2 alpha)` at `beta = 0`.
#[inline]
pub fn flux_potential(alpha: f64, beta: f64, g: f64) -> f64 {
    let u = (alpha * alpha + 4.0 * beta * g.abs()).sqrt();
    let s = u + alpha;
    2.0 / 3.0 * g * g * (2.0 * u + alpha) / (s * s)
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}

/// Isotropic mobility `f_beta(|grad p|)`.
pub fn fbeta_iso(grad_norm: f64, p: &FlowParams) -> Result<f64> {
    check_finite("grad_norm", grad_norm)?;
    if grad_norm < 0.0 {
        return Err(Error::Domain(format!(
            "grad_norm must be non-negative, got {grad_norm}"
        )));
    }
    check_finite("alpha_f", p.alpha_f)?;
    check_finite("beta", p.beta)?;
    Ok(p.mobility(grad_norm))
}

/// Diagonal 2x2 mobility tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagTensor {
    pub xx: f64,
    pub yy: f64,
}

/// Anisotropic fracture tensor: Forchheimer along the fracture axis, linear
/// transverse to it. The `yy` entry never depends on the gradient.
pub fn fbeta_aniso(grad: [f64; 2], p: &FlowParams) -> Result<DiagTensor> {
    check_finite("grad.x", grad[0])?;
    check_finite("grad.y", grad[1])?;
    Ok(DiagTensor {
        xx: p.mobility(grad[0].abs()),
        yy: p.aniso_k,
    })
}

/// Pressure gradient that drives a given 1-D Forchheimer flux:
/// `g = -(alpha u + beta |u| u)`.
pub fn forchheimer_inverse_1d(flux: f64, p: &FlowParams) -> Result<f64> {
    check_finite("flux", flux)?;
    Ok(-(p.alpha_f * flux + p.beta * flux.abs() * flux))
}

/// `(sqrt(1 + |u|) - 1) sign(u)`.
pub fn g_aux(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    // sqrt(1+|u|) - 1 written without cancellation
    let a = u.abs();
    (a / ((1.0 + a).sqrt() + 1.0)).copysign(u)
}

/// Left side minus right side of the strong-monotonicity inequality
/// `(f(|a|) a - f(|b|) b)(a - b) >= f(max(|a|,|b|)) (a - b)^2 / 2`.
pub fn monotonicity_gap(eta1: f64, eta2: f64, p: &FlowParams) -> f64 {
    let f1 = p.mobility(eta1.abs());
    let f2 = p.mobility(eta2.abs());
    let d = eta1 - eta2;
    let fmax = p.mobility(eta1.abs().max(eta2.abs()));
    (f1 * eta1 - f2 * eta2) * d - 0.5 * fmax * d * d
}

/// Threshold `6 alpha^2 / beta` above which the square-root branch of the
/// anisotropic estimate applies.
pub fn indicator_threshold(p: &FlowParams) -> Result<f64> {
    if !(p.beta > 0.0) {
        return Err(Error::Domain(
            "indicator H needs beta > 0 (threshold 6 alpha^2/beta undefined)".into(),
        ));
    }
    Ok(6.0 * p.alpha_f * p.alpha_f / p.beta)
}

/// `H(zeta, eta) = 1` iff `max(|zeta|, |eta|) >= 6 alpha^2 / beta`.
pub fn indicator_h(zeta: f64, eta: f64, p: &FlowParams) -> Result<bool> {
    let t = indicator_threshold(p)?;
    Ok(zeta.abs().max(eta.abs()) >= t)
}
