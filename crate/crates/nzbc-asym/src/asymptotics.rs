//! Leading-order fields in every window of ξ = x/t, the exact one-soliton on the
//! background, and the dispatcher that picks the right formula for a given (x, t).

use crate::classify::{classify, Regime, RegimeReport};
use crate::error::{Error, Result};
use crate::modulation::{k_star, EllipticSetup};
use crate::phase::{g_tilde_inf_closed, EllipticPhase, EllipticShift, PlaneWavePhase, WakeBundle};
use crate::special::{elliptic_k, theta3};
use crate::spectral::{capital_lambda, lambda_fn, theta_phase, ScatteringData, Side, I};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

pub type Mat2 = [[C64; 2]; 2];

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn det2(m: &Mat2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// q_pw = q_− e^{2i g_∞}.
pub fn q_plane_wave(q_minus: C64, g_inf: f64) -> C64 {
    q_minus * C64::from_polar(1.0, 2.0 * g_inf)
}

/// e^{4i arg[p + λ(p)]}, the constant phase left behind by the soliton.
pub fn soliton_phase_factor(p: C64, q_o: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * g_tilde_inf_closed(p, q_o))
}

/// Constants of the soliton on the plane-wave background.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonConstants {
    pub a: C64,
    pub b: C64,
    pub lambda1: C64,
    pub lambda2: C64,
    /// |𝒜|² − ℬ².
    pub disc: f64,
}

impl SolitonConstants {
    pub fn new(q_o: f64, q_minus: C64, p: C64) -> Result<Self> {
        let s = p * p + q_o * q_o;
        let a = I * q_minus.conj() / (2.0 * s);
        let num = (p - I * q_o).norm() + (p + I * q_o).norm();
        let b = num / (2.0 * s.norm().sqrt() * (p - p.conj()));
        let lam = capital_lambda(p, q_o);
        let lambda1 = lam + 1.0 / lam;
        let lambda2 = (lam - 1.0 / lam).conj();
        let d = a.norm_sqr() - b * b;
        if d.im.abs() > 1e-12 * d.norm() {
            return Err(Error::Consistency(format!("|A|² − B² is not real: {d}")));
        }
        if !(d.re > 0.0) {
            return Err(Error::Degenerate(format!("|A|² − B² = {} ≤ 0", d.re)));
        }
        Ok(SolitonConstants { a, b, lambda1, lambda2, disc: d.re })
    }

    fn numerator_const(&self, q_o: f64, qm: C64) -> C64 {
        let (l1, l2) = (self.lambda1 * self.lambda1, self.lambda2 * self.lambda2);
        self.a.conj() * l1 * qm.conj() + self.a * l2 * qm - 2.0 * self.b * self.lambda1 * self.lambda2 * q_o
    }

    /// The soliton profile with log-amplitude χ and phase ψ, computed without overflow.
    fn profile(&self, q_o: f64, qm: C64, chi: f64, psi: f64) -> C64 {
        let (l1, l2) = (self.lambda1 * self.lambda1, self.lambda2 * self.lambda2);
        let nc = self.numerator_const(q_o, qm);
        let osc = C64::from_polar(1.0, psi) * l1 * qm.conj() + C64::from_polar(1.0, -psi) * l2 * qm;
        let sd = self.disc.sqrt();
        let ls = sd.ln();
        let re_a = (self.a * C64::from_polar(1.0, psi)).re;
        // divide through by e^{max(χ, 0)}
        let (num, den) = if chi > 0.0 {
            let e = (-chi).exp();
            (nc + osc * e, sd * 0.5 * (ls.exp() + (-2.0 * chi - ls).exp()) + re_a * e)
        } else {
            (nc * chi.exp() + osc, sd * (chi + ls).cosh() + re_a)
        };
        num / (4.0 * I * qm.conj() * den)
    }

    /// Limit of the exact soliton to the right of its path: q_− plus this term.
    pub fn right_limit(&self, q_o: f64, qm: C64) -> C64 {
        qm + self.numerator_const(q_o, qm) / (2.0 * I * qm.conj() * self.disc)
    }
}

/// Exact one-soliton on the background (zero reflection), 𝓡_p the norming constant.
pub fn exact_one_soliton(x: f64, t: f64, sd: &ScatteringData) -> Result<C64> {
    let k = SolitonConstants::new(sd.q_o, sd.q_minus, sd.p)?;
    let vt = lambda_fn(sd.p, sd.q_o, Side::Auto) * (x - 2.0 * sd.p * t);
    let chi = -2.0 * vt.im + sd.r_norm.norm().ln();
    let psi = 2.0 * vt.re + sd.r_norm.arg();
    Ok(sd.q_minus + k.profile(sd.q_o, sd.q_minus, chi, psi))
}

/// q_s(t) of the soliton riding on the plane wave, R the dressed norming constant.
pub fn q_soliton_profile(t: f64, sd: &ScatteringData, v_s: f64, r: C64) -> Result<C64> {
    let k = SolitonConstants::new(sd.q_o, sd.q_minus, sd.p)?;
    let th = theta_phase(v_s, sd.p, sd.q_o);
    if th.im.abs() > 1e-9 * (1.0 + th.norm()) {
        return Err(Error::Consistency(format!("θ(v_s, p) = {th} is not real")));
    }
    Ok(k.profile(sd.q_o, sd.q_minus, r.norm().ln(), 2.0 * th.re * t + r.arg()))
}

/// Soliton on the plane wave at ξ = v_s: q_pw(v_s) + q_s(t) e^{2i g_∞(v_s)}.
pub fn q_soliton_on_pw(t: f64, sd: &ScatteringData, v_s: f64, ph: &PlaneWavePhase) -> Result<C64> {
    let d = ph.delta.eval(sd.p);
    let r = sd.r_norm * d * d * (-2.0 * I * ph.g(sd.p)).exp();
    let qs = q_soliton_profile(t, sd, v_s, r)?;
    let e = C64::from_polar(1.0, 2.0 * ph.g_inf);
    Ok(q_plane_wave(sd.q_minus, ph.g_inf) + qs * e)
}

/// Parameters of one modulated elliptic wave: the genus-1 data at ξ plus the
/// radiation constants that enter the Θ arguments and the overall phase.
#[derive(Clone, Debug)]
pub struct EllipticWave {
    pub setup: EllipticSetup,
    pub q_o: f64,
    pub q_minus: C64,
    /// ω entering X_o.
    pub omega: f64,
    /// Position shift ω̃ (zero for the unshifted wave).
    pub omega_shift: f64,
    pub g_inf: f64,
    /// Constant factor in front (e^{4i arg[p+λ(p)]} for the shifted wave).
    pub phase_factor: C64,
    /// Ω in the Θ arguments (closed form).
    pub omega_cap: f64,
    k_m: f64,
}

impl EllipticWave {
    pub fn new(setup: EllipticSetup, q_minus: C64, omega: f64, g_inf: f64) -> Result<Self> {
        let k_m = elliptic_k(setup.mp.m)?;
        Ok(EllipticWave {
            q_o: setup.mp.q_o,
            omega_cap: setup.omega_closed,
            setup,
            q_minus,
            omega,
            omega_shift: 0.0,
            g_inf,
            phase_factor: ONE,
            k_m,
        })
    }

    pub fn shifted(mut self, omega_shift: f64, phase_factor: C64) -> Self {
        self.omega_shift = omega_shift;
        self.phase_factor = phase_factor;
        self
    }

    pub fn xi(&self) -> f64 {
        self.setup.mp.xi
    }

    fn th(&self, z: C64) -> Result<C64> {
        theta3(z, &self.setup.theta)
    }

    /// X_o = (ω − i ln(q_−/q_o))/2π + 1/4.
    pub fn x_o(&self) -> f64 {
        let l = (self.q_minus / self.q_o).ln();
        ((C64::new(self.omega, 0.0) - I * l) / (2.0 * PI)).re + 0.25
    }

    /// Phase e^{2i[g_∞ − G_∞ t]} times the constant prefactor.
    fn carrier(&self, t: f64) -> C64 {
        C64::from_polar(1.0, 2.0 * (self.g_inf - self.setup.g_inf_cap * t)) * self.phase_factor
    }

    /// The modulated elliptic wave at (x, t), with x/t taken as the frozen ξ of `setup`.
    pub fn q(&self, x: f64, t: f64) -> Result<C64> {
        let mp = &self.setup.mp;
        let z = (self.q_o * mp.b()).sqrt() / (mp.m * self.k_m) * (x - 2.0 * mp.a() * t);
        let s = self.x_o() + self.omega_shift / (2.0 * PI);
        let nu2 = 2.0 * self.setup.nu_inf;
        let half = C64::new(0.5, 0.0);
        let num = self.th(C64::new(z - s - 0.5, 0.0) + nu2)? * self.th(half)?;
        let den = self.th(C64::new(z - s - 0.5, 0.0))? * self.th(nu2 - 0.5)?;
        if den.norm() < 1e-13 {
            return Err(Error::Singular(format!("theta denominator {den:e} in the elliptic wave")));
        }
        Ok(self.q_o * (self.q_o + mp.b()) / self.q_minus.conj() * num / den * self.carrier(t))
    }

    /// Real Θ-argument offset A(t) = [−Ωt + ω + ω̃ + i ln(q̄_−/(iq_o))]/2π.
    fn theta_offset(&self, t: f64) -> C64 {
        let l = (self.q_minus.conj() / (I * self.q_o)).ln();
        (C64::new(-self.omega_cap * t + self.omega + self.omega_shift, 0.0) + I * l) / (2.0 * PI)
    }

    fn eta(&self, k: C64) -> C64 {
        let mp = &self.setup.mp;
        capital_lambda(k, self.q_o) * capital_lambda(k - mp.a(), mp.b())
    }

    /// Row vector of Θ quotients at Abel image `nu` and shift `c`.
    fn n_vec(&self, a: C64, nu: C64, c: C64) -> Result<(C64, C64)> {
        let r = (I * self.q_o / self.q_minus.conj()).sqrt();
        let d1 = self.th(nu + c)?;
        let d2 = self.th(-nu + c)?;
        if d1.norm() < 1e-13 || d2.norm() < 1e-13 {
            return Err(Error::Singular("theta zero in the background solution".into()));
        }
        Ok((self.th(a + nu + c)? / (r * d1), self.th(a - nu + c)? * r / d2))
    }

    fn n_cal(&self, a: C64, k: C64) -> Result<Mat2> {
        let nu = self.setup.abel_nu(k, Side::Auto);
        let c = self.setup.c;
        let e = self.eta(k);
        let (sp, sm) = (e + 1.0 / e, e - 1.0 / e);
        let (n1c, n2c) = self.n_vec(a, nu, c)?;
        let (n1m, n2m) = self.n_vec(a, nu, -c)?;
        Ok([[0.5 * sp * n1c, 0.5 * I * sm * n2c], [-0.5 * I * sm * n1m, 0.5 * sp * n2m]])
    }

    fn n_inf(&self, a: C64) -> Result<(C64, C64)> {
        let nu = self.setup.nu_inf;
        let c = self.setup.c;
        Ok((self.n_vec(a, nu, c)?.0, self.n_vec(a, nu, -c)?.1))
    }

    /// Background solution W(k) at time t, cuts B and B′:
    /// e^{i[g_∞ − G_∞ t]σ₃} 𝒩(∞)⁻¹ 𝒩(k).
    pub fn w_matrix(&self, t: f64, k: C64) -> Result<Mat2> {
        let ks = C64::new(k_star(&self.setup.mp), 0.0);
        if (k - ks).norm() < 1e-6 {
            // removable point: mean value over a small circle
            let mut acc = [[ZERO; 2]; 2];
            for j in 0..8 {
                let z = ks + C64::from_polar(2e-6, PI * j as f64 / 4.0 + 0.1);
                let w = self.w_matrix(t, z)?;
                for (r, wr) in acc.iter_mut().zip(w.iter()) {
                    for (x, y) in r.iter_mut().zip(wr.iter()) {
                        *x += *y / 8.0;
                    }
                }
            }
            return Ok(acc);
        }
        let a = self.theta_offset(t);
        let n = self.n_cal(a, k)?;
        let (d1, d2) = self.n_inf(a)?;
        let ph = C64::from_polar(1.0, self.g_inf - self.setup.g_inf_cap * t);
        let left: Mat2 = [[ph / d1, ZERO], [ZERO, 1.0 / (ph * d2)]];
        Ok(mul2(&left, &n))
    }

    /// The wave recovered from W: −2i lim k W₁₂(k) e^{i[g_∞ − G_∞ t]} (times the prefactor).
    pub fn q_from_w(&self, t: f64) -> Result<C64> {
        let a = self.theta_offset(t);
        let nu = self.setup.nu_inf;
        let c = self.setup.c;
        let (n1, _) = self.n_vec(a, nu, c)?;
        let (_, n2) = self.n_vec(a, nu, c)?;
        let b = self.setup.mp.b();
        // η − η⁻¹ ~ −i(q_o + α_im)/k
        let w12k = 0.5 * I * (-I * (self.q_o + b)) * n2 / n1;
        let ph = C64::from_polar(1.0, 2.0 * (self.g_inf - self.setup.g_inf_cap * t));
        Ok(-2.0 * I * w12k * ph * self.phase_factor)
    }
}

/// dW/dk at p by the Cauchy integral on a small circle (trapezoid rule).
fn w_derivative<F: Fn(C64) -> Result<Mat2>>(w: &F, p: C64, radius: f64, nodes: usize) -> Result<Mat2> {
    let mut acc = [[ZERO; 2]; 2];
    for j in 0..nodes {
        let e = C64::from_polar(radius, 2.0 * PI * j as f64 / nodes as f64);
        let v = w(p + e)?;
        for r in 0..2 {
            for c in 0..2 {
                acc[r][c] += v[r][c] / e / nodes as f64;
            }
        }
    }
    Ok(acc)
}

/// Pole-dressing data: W at p and p̄ with derivatives, 𝒜, ℬ, 𝒞 and the time-dependent ρ.
#[derive(Clone, Copy, Debug)]
pub struct SolitonDressing {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub w_p: Mat2,
    pub w_pbar: Mat2,
    pub rho_p: C64,
    pub rho_pbar: C64,
}

impl SolitonDressing {
    pub fn new<F: Fn(C64) -> Result<Mat2>>(w: &F, p: C64, rho_p: C64, radius: f64) -> Result<Self> {
        let pb = p.conj();
        let w_p = w(p)?;
        let w_pbar = w(pb)?;
        let dp = w_derivative(w, p, radius, 64)?;
        let dpb = w_derivative(w, pb, radius, 64)?;
        let a = dp[0][0] * w_p[1][0] - w_p[0][0] * dp[1][0];
        let b = (w_p[1][0] * w_pbar[0][1] - w_p[0][0] * w_pbar[1][1]) / (p - pb);
        let c = dpb[1][1] * w_pbar[0][1] - dpb[0][1] * w_pbar[1][1];
        Ok(SolitonDressing { a, b, c, w_p, w_pbar, rho_p, rho_pbar: -rho_p.conj() })
    }

    fn denominator(&self) -> Result<C64> {
        let (a, b, c, rp, rb) = (self.a, self.b, self.c, self.rho_p, self.rho_pbar);
        let d = b * b * rp * rb + (1.0 + c * rb) * (1.0 + a * rp);
        if d.norm() < 1e-12 {
            return Err(Error::Singular(format!("pole collision: dressing denominator {d:e}")));
        }
        Ok(d)
    }

    /// −2i μ₁₂ from residue conditions Res_p = (0, ρ_p M₁(p)), Res_p̄ = (ρ_p̄ M₂(p̄), 0).
    pub fn q_pole(&self) -> Result<C64> {
        let (a, b, c, rp, rb) = (self.a, self.b, self.c, self.rho_p, self.rho_pbar);
        let (w11, w12) = (self.w_p[0][0], self.w_pbar[0][1]);
        let num = 2.0 * b * rp * rb * w11 * w12 - (1.0 + c * rb) * rp * w11 * w11 + (1.0 + a * rp) * rb * w12 * w12;
        Ok(2.0 * I * num / self.denominator()?)
    }

    /// The wake term exactly as displayed for ξ = v_w, with the roles of p and p̄
    /// exchanged in the W entries and in the 𝒜/𝒞 pairing.
    pub fn q_pole_as_displayed(&self) -> Result<C64> {
        let (a, b, c, rp, rb) = (self.a, self.b, self.c, self.rho_p, self.rho_pbar);
        let (w11, w12) = (self.w_pbar[0][0], self.w_p[0][1]);
        let num = 2.0 * b * rp * rb * w11 * w12 - (1.0 + c * rp) * rb * w11 * w11 + (1.0 + a * rb) * rp * w12 * w12;
        let d = b * b * rp * rb + (1.0 + c * rp) * (1.0 + a * rb);
        if d.norm() < 1e-12 {
            return Err(Error::Singular(format!("pole collision: dressing denominator {d:e}")));
        }
        Ok(2.0 * I * num / d)
    }
}

fn cauchy_radius(p: C64, setup: &EllipticSetup) -> f64 {
    let mp = &setup.mp;
    let to_cuts = p.re.abs().min((p.re - mp.a()).abs());
    (1e-2 * (1.0 + p.norm())).min(0.4 * to_cuts)
}

/// Dressing of the background `wave` at time t by the pole pair p, p̄ with weight ρ_p.
pub fn dress(wave: &EllipticWave, t: f64, p: C64, rho_p: C64) -> Result<SolitonDressing> {
    let w = |k: C64| wave.w_matrix(t, k);
    SolitonDressing::new(&w, p, rho_p, cauchy_radius(p, &wave.setup))
}

/// Everything needed at ξ = ṽ_s.
#[derive(Clone, Debug)]
pub struct TrapBundle {
    pub wave: EllipticWave,
    pub phase: EllipticPhase,
    /// h(ṽ_s, p), real at the trap velocity.
    pub h_p: f64,
    /// R_p = 𝓡_p δ²(ṽ_s, p) e^{−2i g(ṽ_s, p)}.
    pub r_p: C64,
}

impl TrapBundle {
    pub fn new(sd: &ScatteringData, v: f64) -> Result<Self> {
        let setup = EllipticSetup::at(v, sd.q_o)?;
        let p = sd.p;
        if setup.in_region_d(p) {
            return Err(Error::Unsupported("eigenvalue inside the cut region at the trap velocity".into()));
        }
        let h = setup.h(p);
        if h.im.abs() > 1e-9 * (1.0 + h.norm()) {
            return Err(Error::Consistency(format!("h(ṽ_s, p) = {h} is not real")));
        }
        let phase = EllipticPhase::new(&setup.mp, &setup.contours, &sd.reflection)?;
        let d = phase.delta.eval(p);
        let r_p = sd.r_norm * d * d * (-2.0 * I * phase.g(p)).exp();
        let wave = EllipticWave::new(setup, sd.q_minus, phase.omega, phase.g_inf)?;
        Ok(TrapBundle { wave, phase, h_p: h.re, r_p })
    }

    pub fn rho_p(&self, t: f64) -> C64 {
        self.r_p * C64::from_polar(1.0, 2.0 * self.h_p * t)
    }

    pub fn dressing(&self, t: f64, p: C64) -> Result<SolitonDressing> {
        dress(&self.wave, t, p, self.rho_p(t))
    }

    /// q_mew(ṽ_s t, t) + q_p(t).
    pub fn q(&self, t: f64, p: C64) -> Result<C64> {
        let v = self.wave.xi();
        Ok(self.wave.q(v * t, t)? + self.dressing(t, p)?.q_pole()?)
    }
}

/// Everything needed at ξ = v_w.
#[derive(Clone, Debug)]
pub struct WakeState {
    pub wave: EllipticWave,
    pub bundle: WakeBundle,
    /// h_w(p), real at the wake velocity.
    pub h_p: f64,
    pub r_p: C64,
}

impl WakeState {
    pub fn new(sd: &ScatteringData, v: f64) -> Result<Self> {
        let setup = EllipticSetup::at(v, sd.q_o)?;
        let bundle = WakeBundle::new(&setup.mp, &setup.contours, sd.p, &sd.reflection)?;
        let h = bundle.h_w(sd.p);
        if h.im.abs() > 1e-8 * (1.0 + h.norm()) {
            return Err(Error::Consistency(format!("h_w(p) = {h} is not real")));
        }
        let d = bundle.phase.delta.eval(sd.p);
        let r_p = sd.r_norm * d * d * (-2.0 * I * bundle.g_w(sd.p)).exp();
        let wave = EllipticWave::new(setup, sd.q_minus, bundle.omega_w(), bundle.g_w_inf())?;
        Ok(WakeState { wave, bundle, h_p: h.re, r_p })
    }

    pub fn rho_p(&self, t: f64) -> C64 {
        self.r_p * C64::from_polar(1.0, 2.0 * self.h_p * t)
    }

    pub fn dressing(&self, t: f64, p: C64) -> Result<SolitonDressing> {
        dress(&self.wave, t, p, self.rho_p(t))
    }

    /// q_mew,w(t) + q_w(t) with the residue conditions of the trap case.
    pub fn q(&self, t: f64, p: C64) -> Result<C64> {
        let v = self.wave.xi();
        Ok(self.wave.q(v * t, t)? + self.dressing(t, p)?.q_pole()?)
    }

    /// Same background, wake term in its displayed p ↔ p̄ arrangement.
    pub fn q_as_displayed(&self, t: f64, p: C64) -> Result<C64> {
        let v = self.wave.xi();
        Ok(self.wave.q(v * t, t)? + self.dressing(t, p)?.q_pole_as_displayed()?)
    }
}

/// Which formula applies at a given ξ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    PlaneWave,
    SolitonOnPlaneWave,
    ShiftedPlaneWave,
    Elliptic,
    ShiftedElliptic,
    TrappedSoliton,
    Wake,
    /// Zero reflection, right of the soliton: the background q_− e^{4i arg[p+λ(p)]}.
    ShiftedBackground,
    /// ξ > 0.
    RightHalf,
}

impl Window {
    pub fn label(self) -> &'static str {
        match self {
            Window::PlaneWave => "plane_wave",
            Window::SolitonOnPlaneWave => "soliton_on_plane_wave",
            Window::ShiftedPlaneWave => "shifted_plane_wave",
            Window::Elliptic => "elliptic",
            Window::ShiftedElliptic => "shifted_elliptic",
            Window::TrappedSoliton => "trapped_soliton",
            Window::Wake => "wake",
            Window::ShiftedBackground => "shifted_background",
            Window::RightHalf => "right_half",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldOptions {
    /// |ξ − v| below which a ray formula is used (soliton, trap, wake).
    pub ray_half_width: f64,
    /// |ξ − v_o| and |ξ| below which evaluation is refused.
    pub boundary_band: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions { ray_half_width: 1e-9, boundary_band: 1e-6 }
    }
}

/// Per-ξ data for the plane-wave and elliptic windows, cached by the bits of ξ.
#[derive(Clone, Debug)]
enum Frozen {
    Plane(Arc<PlaneWavePhase>),
    Elliptic(Arc<EllipticWave>),
}

/// The asymptotic field for one set of scattering data.
pub struct AsymptoticField {
    pub sd: ScatteringData,
    pub report: RegimeReport,
    pub opts: FieldOptions,
    trap: Option<TrapBundle>,
    wake: Option<WakeState>,
    cache: Mutex<HashMap<(u64, bool), Frozen>>,
}

impl AsymptoticField {
    pub fn new(sd: ScatteringData) -> Result<Self> {
        let report = classify(&sd)?;
        Self::with_report(sd, report, FieldOptions::default())
    }

    pub fn with_report(sd: ScatteringData, report: RegimeReport, opts: FieldOptions) -> Result<Self> {
        let radiative = !sd.reflection.is_zero();
        let trap = match report.v_tilde_s() {
            Some(v) if radiative && v < 0.0 => Some(TrapBundle::new(&sd, v)?),
            _ => None,
        };
        let wake = match report.v_w() {
            Some(v) if radiative => Some(WakeState::new(&sd, v)?),
            _ => None,
        };
        Ok(AsymptoticField { sd, report, opts, trap, wake, cache: Mutex::new(HashMap::new()) })
    }

    pub fn trap(&self) -> Option<&TrapBundle> {
        self.trap.as_ref()
    }

    pub fn wake(&self) -> Option<&WakeState> {
        self.wake.as_ref()
    }

    fn near(&self, xi: f64, v: f64) -> bool {
        (xi - v).abs() <= self.opts.ray_half_width * (1.0 + v.abs())
    }

    pub fn window(&self, xi: f64) -> Result<Window> {
        let (vo, vs) = (self.report.v_o, self.report.v_s);
        // without radiation there is no wedge, so v_o and 0 are not transitions
        if self.sd.reflection.is_zero() {
            return Ok(if self.near(xi, vs) {
                Window::SolitonOnPlaneWave
            } else if xi < vs {
                Window::PlaneWave
            } else {
                Window::ShiftedBackground
            });
        }
        if (xi - vo).abs() < self.opts.boundary_band || xi.abs() < self.opts.boundary_band {
            return Err(Error::Domain(format!("ξ = {xi} lies in a transition band (v_o = {vo}, 0)")));
        }
        let w = match self.report.regime {
            _ if xi > 0.0 => Window::RightHalf,
            Regime::D1 | Regime::D3 => {
                if self.near(xi, vs) {
                    Window::SolitonOnPlaneWave
                } else if xi < vs {
                    Window::PlaneWave
                } else if xi < vo {
                    Window::ShiftedPlaneWave
                } else if self.report.v_w().is_some_and(|v| self.near(xi, v)) {
                    Window::Wake
                } else {
                    Window::ShiftedElliptic
                }
            }
            Regime::D2plus | Regime::D2minus => {
                let vt = self.report.v_tilde_s().unwrap_or(0.0);
                if xi < vo {
                    Window::PlaneWave
                } else if self.near(xi, vt) {
                    Window::TrappedSoliton
                } else if xi < vt {
                    Window::Elliptic
                } else if self.report.v_w().is_some_and(|v| self.near(xi, v)) {
                    Window::Wake
                } else {
                    Window::ShiftedElliptic
                }
            }
        };
        Ok(w)
    }

    fn plane(&self, xi: f64) -> Result<Arc<PlaneWavePhase>> {
        let key = (xi.to_bits(), false);
        if let Some(Frozen::Plane(p)) = self.cache.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let p = Arc::new(PlaneWavePhase::new(xi, &self.sd)?);
        self.cache.lock().unwrap().insert(key, Frozen::Plane(p.clone()));
        Ok(p)
    }

    /// The elliptic wave frozen at ξ, shifted or not.
    pub fn elliptic_wave(&self, xi: f64, shifted: bool) -> Result<Arc<EllipticWave>> {
        let key = (xi.to_bits(), shifted);
        if let Some(Frozen::Elliptic(w)) = self.cache.lock().unwrap().get(&key) {
            return Ok(w.clone());
        }
        let setup = EllipticSetup::at(xi, self.sd.q_o)?;
        let ph = EllipticPhase::new(&setup.mp, &setup.contours, &self.sd.reflection)?;
        let mut wave = EllipticWave::new(setup, self.sd.q_minus, ph.omega, ph.g_inf)?;
        if shifted {
            let sh = EllipticShift::new(&wave.setup.mp, &wave.setup.contours, self.sd.p)?;
            wave = wave.shifted(sh.omega_tilde, soliton_phase_factor(self.sd.p, self.sd.q_o));
        }
        let w = Arc::new(wave);
        self.cache.lock().unwrap().insert(key, Frozen::Elliptic(w.clone()));
        Ok(w)
    }

    /// Leading-order q(x, t).
    pub fn evaluate(&self, x: f64, t: f64) -> Result<C64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let xi = x / t;
        let sd = &self.sd;
        let shift = soliton_phase_factor(sd.p, sd.q_o);
        match self.window(xi)? {
            Window::PlaneWave => Ok(q_plane_wave(sd.q_minus, self.plane(xi)?.g_inf)),
            Window::ShiftedPlaneWave => Ok(q_plane_wave(sd.q_minus, self.plane(xi)?.g_inf) * shift),
            Window::SolitonOnPlaneWave => {
                let vs = self.report.v_s;
                q_soliton_on_pw(t, sd, vs, &*self.plane(vs)?)
            }
            Window::ShiftedBackground => Ok(sd.q_minus * shift),
            Window::Elliptic => self.elliptic_wave(xi, false)?.q(x, t),
            Window::ShiftedElliptic => self.elliptic_wave(xi, true)?.q(x, t),
            Window::TrappedSoliton => match &self.trap {
                Some(b) => b.q(t, sd.p),
                None => Err(Error::Unsupported("trap velocity at the window edge (ṽ_s = 0)".into())),
            },
            Window::Wake => self.wake.as_ref().ok_or_else(|| Error::Consistency("no wake data".into()))?.q(t, sd.p),
            Window::RightHalf => Err(Error::Unsupported(
                "ξ > 0 needs the scattering data seen from the right background, which is not an input".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Reflection;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn gauss() -> Reflection {
        Reflection::Gaussian { amplitude: 0.3, width: 2.0 }
    }

    #[test]
    fn soliton_constants_closed_form() {
        let p = c(-2.0, -0.5);
        let k = SolitonConstants::new(1.0, c(1.0, 0.0), p).unwrap();
        assert!((k.a - I / (2.0 * c(4.75, 2.0))).norm() < 1e-15);
        assert!(k.b.re.abs() < 1e-15 && k.disc > 0.0);
    }

    #[test]
    fn zero_reflection_matches_exact_soliton_on_its_ray() {
        for p in [c(-2.0, -0.5), c(-1.24, -1.1), c(-0.1, -0.5), c(-0.214, -0.5), c(-3.0, -2.0)] {
            let sd = ScatteringData::new(1.0, C64::from_polar(1.0, 0.4), p, c(0.7, -0.3), Reflection::Zero).unwrap();
            let (_, vs) = crate::spectral::velocities(&sd).unwrap();
            let ph = PlaneWavePhase::new(vs, &sd).unwrap();
            for t in [1.0, 5.0, 20.0, 100.0] {
                let a = q_soliton_on_pw(t, &sd, vs, &ph).unwrap();
                let b = exact_one_soliton(vs * t, t, &sd).unwrap();
                assert!((a - b).norm() < 1e-12, "{p} {t}: {a} {b}");
            }
        }
    }

    #[test]
    fn exact_soliton_far_field() {
        let sd = ScatteringData::soliton(1.0, c(-2.0, -0.5)).unwrap();
        let (_, vs) = crate::spectral::velocities(&sd).unwrap();
        let t = 200.0;
        let left = exact_one_soliton((vs - 1.0) * t, t, &sd).unwrap();
        assert!((left - sd.q_minus).norm() < 1e-10);
        let right = exact_one_soliton((vs + 1.0) * t, t, &sd).unwrap();
        let k = SolitonConstants::new(1.0, sd.q_minus, sd.p).unwrap();
        assert!((right - k.right_limit(1.0, sd.q_minus)).norm() < 1e-10);
        // the right limit is the phase-shifted background
        assert!((k.right_limit(1.0, sd.q_minus) - sd.q_minus * soliton_phase_factor(sd.p, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn elliptic_wave_two_forms_agree() {
        let setup = EllipticSetup::at(-3.0, 1.0).unwrap();
        for (qm, om) in [(c(1.0, 0.0), 0.0), (C64::from_polar(1.0, 0.7), 0.4)] {
            let w = EllipticWave::new(setup.clone(), qm, om, 0.25).unwrap();
            for t in [0.1, 0.37, 1.3, 7.0] {
                let a = w.q(-3.0 * t, t).unwrap();
                let b = w.q_from_w(t).unwrap();
                assert!((a - b).norm() < 1e-9, "{t}: {a} {b}");
                assert!(a.norm() <= 1.0 + setup.mp.b() + 1e-9);
            }
        }
    }

    #[test]
    fn background_w_properties() {
        let setup = EllipticSetup::at(-2.0, 1.0).unwrap();
        let w = EllipticWave::new(setup, C64::from_polar(1.0, 0.3), 0.2, 0.1).unwrap();
        let t = 3.0;
        for k in [c(0.7, 0.4), c(-1.3, -0.8), c(-0.2, 1.7), c(2.5, -0.05)] {
            let m = w.w_matrix(t, k).unwrap();
            let mb = w.w_matrix(t, k.conj()).unwrap();
            assert!((det2(&m) - 1.0).norm() < 1e-10, "{k}: det {}", det2(&m));
            assert!((mb[1][1] - m[0][0].conj()).norm() < 1e-10);
            assert!((mb[0][1] + m[1][0].conj()).norm() < 1e-10);
        }
        let big = w.w_matrix(t, c(300.0, 400.0)).unwrap();
        let ph = C64::from_polar(1.0, 0.1 - w.setup.g_inf_cap * t);
        assert!((big[0][0] - ph).norm() < 1e-2 && big[0][1].norm() < 1e-2);
    }

    #[test]
    fn trap_dressing_properties() {
        let p = c(-0.1, -1.02);
        let sd = ScatteringData::new(1.0, c(1.0, 0.0), p, c(1.0, 0.0), gauss()).unwrap();
        let f = AsymptoticField::new(sd).unwrap();
        let tb = f.trap().unwrap();
        let d = tb.dressing(10.0, p).unwrap();
        assert!((d.rho_pbar + d.rho_p.conj()).norm() < 1e-12);
        // 𝒜, ℬ, 𝒞 do not see an offset of g_∞
        let mut w2 = tb.wave.clone();
        w2.g_inf += 0.37;
        let d2 = dress(&w2, 10.0, p, tb.rho_p(10.0)).unwrap();
        assert!((d.a - d2.a).norm() < 1e-10 && (d.b - d2.b).norm() < 1e-10 && (d.c - d2.c).norm() < 1e-10);
        let mut top: f64 = 0.0;
        for t in [10.0, 100.0, 1000.0, 10000.0] {
            top = top.max(tb.q(t, p).unwrap().norm());
        }
        assert!(top.is_finite() && top < 20.0, "{top}");
    }

    #[test]
    fn dispatcher_windows() {
        let sd = ScatteringData::new(1.0, c(1.0, 0.0), c(-2.0, -0.5), c(1.0, 0.0), gauss()).unwrap();
        let f = AsymptoticField::new(sd.clone()).unwrap();
        assert_eq!(f.window(-8.0).unwrap(), Window::ShiftedPlaneWave);
        assert_eq!(f.window(-10.0).unwrap(), Window::PlaneWave);
        assert_eq!(f.window(-3.0).unwrap(), Window::ShiftedElliptic);
        let q = f.evaluate(-8.0 * 4.0, 4.0).unwrap();
        assert!((q.norm() - 1.0).abs() < 1e-14);
        let ph = PlaneWavePhase::new(-8.0, &sd).unwrap();
        assert!((q - q_plane_wave(sd.q_minus, ph.g_inf) * soliton_phase_factor(sd.p, 1.0)).norm() < 1e-14);
        let shifted = f.elliptic_wave(-3.0, true).unwrap();
        let plain = f.elliptic_wave(-3.0, false).unwrap();
        assert!((shifted.phase_factor - soliton_phase_factor(sd.p, 1.0)).norm() < 1e-15);
        assert_eq!(plain.omega_shift, 0.0);
        let mut undo = (*shifted).clone();
        undo = undo.shifted(0.0, ONE);
        assert!((undo.q(-9.0, 3.0).unwrap() - plain.q(-9.0, 3.0).unwrap()).norm() < 1e-13);
        assert!(f.evaluate(1.0, 1.0).is_err());
        let z = AsymptoticField::new(ScatteringData::soliton(1.0, sd.p).unwrap()).unwrap();
        assert_eq!(z.window(2.0).unwrap(), Window::ShiftedBackground);
    }

    #[test]
    fn exact_soliton_solves_the_equation() {
        let sd = ScatteringData::new(1.0, C64::from_polar(1.0, 0.3), c(-0.7, -0.6), c(1.3, 0.4), Reflection::Zero).unwrap();
        let q = |x: f64, t: f64| exact_one_soliton(x, t, &sd).unwrap();
        let resid = |h: f64| {
            let mut top: f64 = 0.0;
            for j in 0..21 {
                let (x, t) = (-3.0 + 0.3 * j as f64, 0.8);
                let qt = (q(x, t + h) - q(x, t - h)) / (2.0 * h);
                let qxx = (q(x + h, t) - 2.0 * q(x, t) + q(x - h, t)) / (h * h);
                let v = q(x, t);
                top = top.max((I * qt + qxx + 2.0 * (v.norm_sqr() - 1.0) * v).norm());
            }
            top
        };
        let (r1, r2) = (resid(2e-2), resid(1e-2));
        assert!(r2 < 1e-2 && (r1 / r2 - 4.0).abs() < 0.5, "{r1} {r2}");
    }

    #[test]
    fn wake_background_and_constants() {
        let p = c(-0.1, -0.5);
        let sd = ScatteringData::new(1.0, c(1.0, 0.0), p, c(1.0, 0.0), gauss()).unwrap();
        let f = AsymptoticField::new(sd).unwrap();
        let ws = f.wake().unwrap();
        for k in [c(0.3, 0.9), c(-1.5, -0.2), c(0.05, 2.0)] {
            let m = ws.wave.w_matrix(5.0, k).unwrap();
            let mb = ws.wave.w_matrix(5.0, k.conj()).unwrap();
            assert!((det2(&m) - 1.0).norm() < 1e-10);
            assert!((mb[1][1] - m[0][0].conj()).norm() < 1e-10);
        }
        let d1 = ws.dressing(10.0, p).unwrap();
        let d2 = ws.dressing(200.0, p).unwrap();
        assert!((d1.rho_pbar + d1.rho_p.conj()).norm() < 1e-12);
        assert!((d1.rho_p.norm() - d2.rho_p.norm()).abs() < 1e-10);
        let q = ws.q(50.0, p).unwrap();
        let q2 = ws.q_as_displayed(50.0, p).unwrap();
        assert!(q.is_finite() && q2.is_finite());
    }
}
