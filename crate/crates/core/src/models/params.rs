//! Parameter sets for the model family.
//!
//! Field names follow the conventional symbols: `D`, `A`, `beta`, `gamma`,
//! `n` shape the hysteresis state, `k_u`/`k_h` weigh the elastic and
//! hysteretic output contributions, `rho`/`sigma` are the normalized shape
//! constants, `lambda1`/`lambda2` are the fractional orders on input and
//! state. Serialized documents use the uppercase `D`/`A` spellings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {v}")))
    }
}

fn require_order(n: f64) -> Result<()> {
    require_finite("n", n)?;
    if n < 1.0 {
        return Err(Error::invalid(format!("n must be at least 1, got {n}")));
    }
    Ok(())
}

/// Classical Bouc-Wen model: `H = alpha*k*u + (1-alpha)*D*k*h` with
/// `dh/dt = D^-1 * (A*du - beta*|du|*|h|^(n-1)*h - gamma*du*|h|^n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbwParams {
    pub alpha: f64,
    pub k: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: f64,
    #[serde(default)]
    pub h_init: f64,
}

impl CbwParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("k", self.k),
            ("D", self.d),
            ("A", self.a),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("h_init", self.h_init),
        ] {
            require_finite(name, v)?;
        }
        require_order(self.n)?;
        if self.d == 0.0 {
            return Err(Error::invalid("D must be nonzero"));
        }
        let bg = self.beta + self.gamma;
        if bg <= 0.0 {
            return Err(Error::invalid(format!(
                "beta + gamma must be positive, got {bg}"
            )));
        }
        if self.a / bg <= 0.0 {
            return Err(Error::invalid(format!(
                "A/(beta+gamma) must be positive, got {}",
                self.a / bg
            )));
        }
        Ok(())
    }

    /// Reparameterization with the auxiliary output constants
    /// `k_a = alpha*k` and `k_b = (1-alpha)*k`.
    pub fn to_aux(&self) -> CbwAuxParams {
        CbwAuxParams {
            k_a: self.alpha * self.k,
            k_b: (1.0 - self.alpha) * self.k,
            d: self.d,
            a: self.a,
            beta: self.beta,
            gamma: self.gamma,
            n: self.n,
            h_init: self.h_init,
        }
    }
}

/// Classical model with the output written as `H = k_a*u + k_b*D*h`.
///
/// This is the form used for identification and for the inverse
/// compensator, where `alpha` and `k` only ever appear through the two
/// products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbwAuxParams {
    pub k_a: f64,
    pub k_b: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: f64,
    #[serde(default)]
    pub h_init: f64,
}

impl CbwAuxParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_a", self.k_a),
            ("k_b", self.k_b),
            ("D", self.d),
            ("A", self.a),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("h_init", self.h_init),
        ] {
            require_finite(name, v)?;
        }
        require_order(self.n)?;
        if self.d == 0.0 {
            return Err(Error::invalid("D must be nonzero"));
        }
        Ok(())
    }
}

/// Normalized Bouc-Wen model: `H = k_u*u + k_h*hbar` with
/// `dhbar/dt = rho*(du - sigma*|du|*|hbar|^(n-1)*hbar + (sigma-1)*du*|hbar|^n)`.
///
/// `sigma` is only guaranteed to lie in (0,1) when the set comes out of
/// [`normalize_cbw`](super::normalize_cbw); as a free identification
/// parameter it is unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbwParams {
    pub k_u: f64,
    pub k_h: f64,
    pub rho: f64,
    pub sigma: f64,
    pub n: f64,
    #[serde(default)]
    pub hbar_init: f64,
}

impl NbwParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_u", self.k_u),
            ("k_h", self.k_h),
            ("rho", self.rho),
            ("sigma", self.sigma),
            ("hbar_init", self.hbar_init),
        ] {
            require_finite(name, v)?;
        }
        require_order(self.n)
    }
}

/// Polynomial input function `g(u) = k_u1*u + k_u2*u^2 + ... + k_uN*u^N`.
///
/// The constant term is absent by construction and the linear coefficient
/// must be nonzero so the function can be inverted around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolynomialGain {
    coeffs: Vec<f64>,
}

impl PolynomialGain {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let p = PolynomialGain { coeffs };
        p.validate()?;
        Ok(p)
    }

    pub fn linear(k_u1: f64) -> Result<Self> {
        PolynomialGain::new(vec![k_u1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::invalid("polynomial gain needs at least k_u1"));
        }
        for (i, &c) in self.coeffs.iter().enumerate() {
            require_finite(&format!("k_u{}", i + 1), c)?;
        }
        if self.coeffs[0] == 0.0 {
            return Err(Error::invalid("k_u1 must be nonzero"));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficients `k_u1..k_uN` in ascending power order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn k_u1(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc * u
    }

    /// The nonlinear remainder `g(u) - k_u1*u`, i.e. the powers from 2 up.
    pub fn eval_tail(&self, u: f64) -> f64 {
        if self.coeffs.len() < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for &c in self.coeffs[1..].iter().rev() {
            acc = acc * u + c;
        }
        acc * u * u
    }
}

/// Fractional-order normalized Bouc-Wen model:
/// `H = g(u) + k_h*hbar` with
/// `D^lambda2 hbar = rho*(v - sigma*|v|*|hbar|^(n-1)*hbar + (sigma-1)*v*|hbar|^n)`
/// where `v = D^lambda1 u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FonbwParams {
    pub poly: PolynomialGain,
    pub k_h: f64,
    pub rho: f64,
    pub sigma: f64,
    pub n: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default)]
    pub hbar_init: f64,
}

impl FonbwParams {
    pub fn validate(&self) -> Result<()> {
        self.poly.validate()?;
        for (name, v) in [
            ("k_h", self.k_h),
            ("rho", self.rho),
            ("sigma", self.sigma),
            ("hbar_init", self.hbar_init),
        ] {
            require_finite(name, v)?;
        }
        require_order(self.n)?;
        for (name, l) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(l.is_finite() && l > 0.0 && l <= 1.0) {
                return Err(Error::invalid(format!(
                    "{name} must lie in (0, 1], got {l}"
                )));
            }
        }
        Ok(())
    }
}

/// Second-order comparison model:
/// `m0*x'' + c0*x' + k0*(x - x0) = (k1/tau)*exp(-t/tau)*u + h` with
/// `dh/dt = A*du - beta*|du|*|h|^(n-1)*h - gamma*du*|h|^n + delta*u*sgn(du)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZhuParams {
    pub m0: f64,
    pub c0: f64,
    pub k0: f64,
    pub k1: f64,
    pub tau: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub n: f64,
    #[serde(default)]
    pub x0: f64,
}

impl ZhuParams {
    /// Full invariants, required for forward simulation.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if self.m0 <= 0.0 {
            return Err(Error::invalid(format!("m0 must be positive, got {}", self.m0)));
        }
        Ok(())
    }

    /// The subset the inverse compensator needs; `m0` may be zero there
    /// because the acceleration term is formed from the reference, not
    /// integrated.
    pub(crate) fn validate_shape(&self) -> Result<()> {
        for (name, v) in [
            ("m0", self.m0),
            ("c0", self.c0),
            ("k0", self.k0),
            ("k1", self.k1),
            ("A", self.a),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("x0", self.x0),
        ] {
            require_finite(name, v)?;
        }
        require_order(self.n)?;
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}
