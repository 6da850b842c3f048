//! Complete elliptic integrals (modulus convention) and the theta series Θ.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Moduli above this are reported as near-singular for K.
pub const NEAR_SINGULAR_MODULUS: f64 = 0.9999;

/// Hard cap on the number of theta-series terms on each side of zero.
pub const THETA_TERM_CAP: usize = 10_000;

fn agm_k_e(m: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = (1.0 - m * m).sqrt();
    let mut c = m;
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        pow *= 2.0;
        sum += pow * c * c;
        a = an;
        b = bn;
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// Complete elliptic integral of the first kind, K(m) = ∫₀^{π/2} dφ/√(1 − m² sin²φ).
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!("elliptic_k needs 0 <= m < 1, got {m}")));
    }
    if m > NEAR_SINGULAR_MODULUS {
        log::debug!("elliptic_k: modulus {m} is close to 1, K is near its logarithmic singularity");
    }
    Ok(agm_k_e(m).0)
}

/// Complete elliptic integral of the second kind, E(m) = ∫₀^{π/2} √(1 − m² sin²φ) dφ.
pub fn elliptic_e(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Domain(format!("elliptic_e needs 0 <= m <= 1, got {m}")));
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    Ok(agm_k_e(m).1)
}

/// Whether a modulus triggers the near-singular warning of [`elliptic_k`].
pub fn k_near_singular(m: f64) -> bool {
    m > NEAR_SINGULAR_MODULUS
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaParams {
    pub tau: C64,
    pub nome: f64,
    pub truncation_tol: f64,
}

impl ThetaParams {
    pub fn new(tau: C64, truncation_tol: f64) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(Error::Domain(format!("theta period needs Im tau > 0, got {tau}")));
        }
        if !(truncation_tol > 0.0) {
            return Err(Error::Domain("truncation tolerance must be positive".into()));
        }
        if tau.re.abs() > 1e-12 * tau.im.max(1.0) {
            log::debug!("theta period {tau} is not purely imaginary; real part ignored in the nome");
        }
        Ok(ThetaParams { tau, nome: (-PI * tau.im).exp(), truncation_tol })
    }

    /// Period from the modulus: τ = i K(√(1−m²)) / K(m).
    pub fn from_modulus(m: f64, truncation_tol: f64) -> Result<Self> {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::Domain(format!("modulus must lie in (0,1), got {m}")));
        }
        let kp = elliptic_k((1.0 - m * m).sqrt())?;
        let k = elliptic_k(m)?;
        Self::new(C64::new(0.0, kp / k), truncation_tol)
    }

    /// Terms kept on each side of zero before any shift for Im z.
    pub fn l_max(&self) -> usize {
        if self.nome <= 0.0 {
            return 0;
        }
        (self.truncation_tol.ln() / self.nome.ln()).sqrt().ceil() as usize
    }
}

/// Θ(z) = Σ_ℓ e^{2iπℓz} ρ^{ℓ²}, ρ = e^{iπτ}.
pub fn theta3(z: C64, p: &ThetaParams) -> Result<C64> {
    if p.nome == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let base = p.l_max();
    if base > THETA_TERM_CAP {
        return Err(Error::Precision(format!(
            "theta series needs {base} terms (nome {}), beyond the cap {THETA_TERM_CAP}",
            p.nome
        )));
    }
    let zr = C64::new(z.re - z.re.round(), z.im);
    let shift = (2.0 * zr.im.abs() / p.tau.im).ceil() as usize;
    let l = base + shift + 1;
    let lnq = C64::new(0.0, PI) * p.tau;
    let mut acc = C64::new(1.0, 0.0);
    for ell in 1..=l {
        let lf = ell as f64;
        let quad = (lnq * lf * lf).exp();
        let ph = C64::new(0.0, 2.0 * PI * lf) * zr;
        acc += quad * (ph.exp() + (-ph).exp());
    }
    Ok(acc)
}
