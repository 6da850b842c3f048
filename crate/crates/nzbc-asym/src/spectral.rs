//! Elementary spectral functions: λ, θ, d, Λ, stationary points and the closed-form velocities.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Which boundary value to return for a point lying on a vertical cut.
/// `Plus` is the limit from the right (larger real part).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Auto,
    Plus,
    Minus,
}

/// √(z² + a²) with its cut on i[−a, a] and the sign fixed by λ ~ z at infinity.
pub fn sqrt_branch(z: C64, a: f64, side: Side) -> C64 {
    // factored form keeps relative accuracy next to the branch points ±ia
    let w = ((z - C64::new(0.0, a)) * (z + C64::new(0.0, a))).sqrt();
    let s = (w * z.conj()).re;
    if s > 0.0 {
        return w;
    }
    if s < 0.0 {
        return -w;
    }
    if z.re == 0.0 && z.im.abs() < a {
        let v = (a * a - z.im * z.im).sqrt();
        return match side {
            Side::Minus => C64::new(-v, 0.0),
            _ => C64::new(v, 0.0),
        };
    }
    if w == C64::new(0.0, 0.0) {
        return w;
    }
    // z purely imaginary outside the cut, or the degenerate a = 0 case.
    if z.im.abs() >= a && z.re == 0.0 {
        return C64::new(0.0, z.im.signum() * (z.im * z.im - a * a).sqrt());
    }
    w
}

/// λ(k) = √(k² + q_o²) with cut B = i[−q_o, q_o].
pub fn lambda_fn(k: C64, q_o: f64, side: Side) -> C64 {
    sqrt_branch(k, q_o, side)
}

/// θ(ξ, k) = λ(k)(ξ − 2k).
pub fn theta_phase(xi: f64, k: C64, q_o: f64) -> C64 {
    lambda_fn(k, q_o, Side::Auto) * (xi - 2.0 * k)
}

/// ∂θ/∂k.
pub fn theta_phase_dk(xi: f64, k: C64, q_o: f64) -> C64 {
    let lam = lambda_fn(k, q_o, Side::Auto);
    k * (xi - 2.0 * k) / lam - 2.0 * lam
}

pub fn v_o(q_o: f64) -> f64 {
    -4.0 * 2f64.sqrt() * q_o
}

/// Stationary points of θ, ordered so that k1 ≤ k2 when real.
pub fn stationary_points(xi: f64, q_o: f64) -> (C64, C64) {
    let vo = v_o(q_o);
    let disc = C64::new(xi * xi - vo * vo, 0.0).sqrt();
    ((xi - disc) / 8.0, (xi + disc) / 8.0)
}

/// Λ(k) = ((k − iq)/(k + iq))^{1/4}, principal branch, → 1 at infinity.
pub fn capital_lambda(k: C64, q_o: f64) -> C64 {
    ((k - I * q_o) / (k + I * q_o)).powf(0.25)
}

/// d(k) = 2λ(k)/(λ(k) + k).
pub fn d_factor(k: C64, q_o: f64) -> Result<C64> {
    let lam = lambda_fn(k, q_o, Side::Auto);
    let den = lam + k;
    if den.norm() < 1e-300 {
        return Err(Error::Singular(format!("d(k) has a pole at k = {k}")));
    }
    Ok(2.0 * lam / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Reflection {
    Zero,
    /// r(k) = ε exp(−k²/w²). A synthetic radiation model, entire in k.
    Gaussian { amplitude: f64, width: f64 },
    /// r(k) = Σ num[j] k^j / Σ den[j] k^j with real coefficients.
    Rational { num: Vec<f64>, den: Vec<f64> },
}

fn horner(c: &[f64], k: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * k + a)
}

impl Reflection {
    pub fn is_zero(&self) -> bool {
        match self {
            Reflection::Zero => true,
            Reflection::Gaussian { amplitude, .. } => *amplitude == 0.0,
            Reflection::Rational { num, .. } => num.iter().all(|&c| c == 0.0),
        }
    }

    pub fn r(&self, k: C64) -> C64 {
        match self {
            Reflection::Zero => C64::new(0.0, 0.0),
            Reflection::Gaussian { amplitude, width } => (-(k * k) / (width * width)).exp() * *amplitude,
            Reflection::Rational { num, den } => horner(num, k) / horner(den, k),
        }
    }

    /// r̄(k) := conj r(conj k).
    pub fn rbar(&self, k: C64) -> C64 {
        self.r(k.conj()).conj()
    }

    /// ln(1 + r r̄) on the real line.
    /// Length scale on which r varies along the real line.
    pub fn feature_scale(&self) -> f64 {
        match self {
            Reflection::Gaussian { width, .. } => width.abs(),
            _ => 1.0,
        }
    }

    pub fn log_weight(&self, nu: f64) -> f64 {
        let k = C64::new(nu, 0.0);
        (1.0 + (self.r(k) * self.rbar(k)).re).ln()
    }

    /// A continuous logarithm of r along complex contours.
    pub fn ln_r(&self, k: C64) -> Result<C64> {
        match self {
            Reflection::Gaussian { amplitude, width } if *amplitude > 0.0 => {
                Ok(C64::new(amplitude.ln(), 0.0) - k * k / (width * width))
            }
            Reflection::Gaussian { amplitude, width } if *amplitude < 0.0 => {
                Ok(C64::new((-amplitude).ln(), std::f64::consts::PI) - k * k / (width * width))
            }
            Reflection::Rational { .. } => Err(Error::Unsupported(
                "complex-contour logarithm of a rational reflection coefficient".into(),
            )),
            _ => Err(Error::Unsupported("the radiative phase functionals need a nonzero reflection coefficient".into())),
        }
    }

    pub fn ln_rbar(&self, k: C64) -> Result<C64> {
        Ok(self.ln_r(k.conj())?.conj())
    }

    /// Real-axis sanity: finite values and 1 + r r̄ > 0 on a sample.
    pub fn validate(&self, q_o: f64) -> Result<()> {
        match self {
            Reflection::Gaussian { width, .. } if !(*width > 0.0) => {
                return Err(Error::Domain("gaussian reflection width must be positive".into()))
            }
            Reflection::Rational { den, .. } if den.iter().all(|&c| c == 0.0) => {
                return Err(Error::Domain("rational reflection has a zero denominator".into()))
            }
            _ => {}
        }
        for j in 0..=400 {
            let nu = -20.0 + 0.1 * j as f64;
            let w = 1.0 + (self.r(C64::new(nu, 0.0)) * self.rbar(C64::new(nu, 0.0))).re;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Domain(format!("1 + r r̄ is not positive at {nu}")));
            }
            for &y in &[-q_o, 0.5 * q_o, q_o] {
                if !self.r(C64::new(nu, y)).is_finite() {
                    return Err(Error::Domain(format!("reflection not analytic near {nu}+{y}i")));
                }
            }
        }
        Ok(())
    }
}

/// Full problem input: background, eigenvalue, norming constant, reflection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringData {
    pub q_o: f64,
    pub q_minus: C64,
    pub p: C64,
    pub r_norm: C64,
    pub reflection: Reflection,
}

impl ScatteringData {
    pub fn new(q_o: f64, q_minus: C64, p: C64, r_norm: C64, reflection: Reflection) -> Result<Self> {
        let sd = ScatteringData { q_o, q_minus, p, r_norm, reflection };
        sd.validate()?;
        Ok(sd)
    }

    /// Zero reflection, q_− = q_o, unit norming constant.
    pub fn soliton(q_o: f64, p: C64) -> Result<Self> {
        Self::new(q_o, C64::new(q_o, 0.0), p, C64::new(1.0, 0.0), Reflection::Zero)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_o > 0.0) {
            return Err(Error::Domain("q_o must be positive".into()));
        }
        if (self.q_minus.norm() - self.q_o).abs() > 1e-12 * self.q_o.max(1.0) {
            return Err(Error::Domain(format!("|q_minus| = {} differs from q_o = {}", self.q_minus.norm(), self.q_o)));
        }
        if !(self.p.re <= 0.0 && self.p.im < 0.0) {
            return Err(Error::Domain(format!("p = {} is not in the closed third quadrant", self.p)));
        }
        if self.p.re == 0.0 && self.p.im >= -self.q_o {
            return Err(Error::Domain(format!("p = {} lies on the cut", self.p)));
        }
        if self.r_norm.norm() == 0.0 {
            return Err(Error::Domain("norming constant must be nonzero".into()));
        }
        self.reflection.validate(self.q_o)
    }

    pub fn v_o(&self) -> f64 {
        v_o(self.q_o)
    }
}

/// (v_o, v_s); v_s is where θ(ξ, p) becomes real.
pub fn velocities(sd: &ScatteringData) -> Result<(f64, f64)> {
    let lam = lambda_fn(sd.p, sd.q_o, Side::Auto);
    if lam.im == 0.0 {
        return Err(Error::Degenerate(format!("Im λ(p) = 0 at p = {}", sd.p)));
    }
    let vs = 2.0 * (sd.p.re + lam.re / lam.im * sd.p.im);
    Ok((v_o(sd.q_o), vs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lambda_values() {
        assert!((lambda_fn(c(-3.0, 0.0), 1.0, Side::Auto) - c(-(10f64).sqrt(), 0.0)).norm() < 1e-15);
        assert!(lambda_fn(c(0.0, 1.0), 1.0, Side::Auto).norm() < 1e-15);
        let l = lambda_fn(c(-2.0, -0.5), 1.0, Side::Auto);
        assert!((l - c(-2.2252957142840675, -0.44937847746753273)).norm() < 1e-14);
        assert!((l - c(-2.2254, -0.4493)).norm() < 5e-4);
        assert!((l * l - (c(-2.0, -0.5) * c(-2.0, -0.5) + 1.0)).norm() < 1e-14);
        assert!((lambda_fn(c(0.0, 2.0), 1.0, Side::Auto) - c(0.0, 3f64.sqrt())).norm() < 1e-15);
        assert!((lambda_fn(c(0.0, -2.0), 1.0, Side::Auto) - c(0.0, -(3f64.sqrt()))).norm() < 1e-15);
    }

    #[test]
    fn lambda_cut_sides() {
        for &y in &[-0.9, -0.3, 0.0, 0.4, 0.95] {
            let plus = lambda_fn(c(0.0, y), 1.0, Side::Plus);
            let minus = lambda_fn(c(0.0, y), 1.0, Side::Minus);
            assert!((plus + minus).norm() < 1e-15);
            assert!((lambda_fn(c(1e-8, y), 1.0, Side::Auto) - plus).norm() < 1e-7);
            assert!((lambda_fn(c(-1e-8, y), 1.0, Side::Auto) - minus).norm() < 1e-7);
        }
    }

    #[test]
    fn stationary_and_velocities() {
        let (k1, k2) = stationary_points(-8.0, 1.0);
        assert!((k1.re + 1.7071067811865475).abs() < 1e-12 && (k2.re + 0.2928932188134524).abs() < 1e-12);
        let vo = v_o(1.0);
        let (a, b) = stationary_points(vo, 1.0);
        assert!((a - b).norm() < 1e-12 && (a.re - vo / 8.0).abs() < 1e-12);
        let (a, b) = stationary_points(-4.0, 1.0);
        assert!(a.im != 0.0 && (a.im + b.im).abs() < 1e-15);
        let sd = ScatteringData::soliton(1.0, c(-2.0, -0.5)).unwrap();
        let (vo, vs) = velocities(&sd).unwrap();
        assert!((vo + 5.656854249492381).abs() < 1e-12);
        assert!((vs + 8.951941016011038).abs() < 1e-12 && (vs + 8.953).abs() < 5e-3 && vs < vo);
        assert!(theta_phase(vs, sd.p, 1.0).im.abs() < 1e-10);
    }

    #[test]
    fn d_and_cap_lambda() {
        let d = d_factor(c(-3.0, 0.0), 1.0).unwrap();
        assert!((d.re - 2.0 * 10f64.sqrt() / (10f64.sqrt() + 3.0)).abs() < 1e-14 && (d.re - 1.0264).abs() < 1e-4);
        let l = capital_lambda(c(1.0, 0.0), 1.0);
        assert!((l - c(0.9238795325112867, -0.3826834323650898)).norm() < 1e-14);
        assert!((capital_lambda(c(1e8, 3e7), 1.0) - 1.0).norm() < 1e-7);
        assert!((d_factor(c(1e8, -2e7), 1.0).unwrap() - 1.0).norm() < 1e-7);
    }

    #[test]
    fn input_validation() {
        assert!(ScatteringData::soliton(1.0, c(0.5, -0.5)).is_err());
        assert!(ScatteringData::soliton(1.0, c(0.0, -0.5)).is_err());
        assert!(ScatteringData::new(1.0, c(0.8, 0.0), c(-1.0, -1.0), c(1.0, 0.0), Reflection::Zero).is_err());
        assert!(ScatteringData::soliton(1.0, c(0.0, -1.1)).is_ok());
    }
}
