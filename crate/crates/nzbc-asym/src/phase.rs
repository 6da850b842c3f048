//! Radiation-dependent scalar functions: δ, the phase g with its limit g_∞ in the
//! plane-wave and elliptic windows, ω, and the soliton-induced shifts g̃_∞ and ω̃.
//!
//! Every phase below solves a scalar problem g⁺ + g⁻ = φ on a set of cuts, with the
//! + side on the left of each oriented cut (B upward; B̃ from ᾱ through k_o to α).
//! With R the square root carrying those cuts, g = R(k)/(2πi) ∫ φ/(R⁺(ν − k)) dν.

use crate::error::{Error, Result};
use crate::modulation::{ContourSet, ModulationPoint};
use crate::quad::{self, QuadTol};
use crate::spectral::{lambda_fn, sqrt_branch, stationary_points, v_o, Reflection, ScatteringData, Side, I};
use crate::util::{dist_to_polyline, dist_to_segment, segments_cross};
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

type Memo = RefCell<HashMap<(u64, u64, bool), C64>>;
use std::sync::Arc;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn tol() -> QuadTol {
    QuadTol { abs: 1e-14, rel: 1e-12, max_panels: 600 }
}

/// Reduce an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// δ(k) = exp{(1/2πi) ∫_{−∞}^{e} ln(1 + r r̄)/(ν − k) dν}, analytic off (−∞, e].
///
/// The integral is held as fixed Gauss–Legendre panels on [e − 40, e] and a mapped
/// tail; a panel is integrated adaptively only when k comes close to it.
#[derive(Clone, Debug)]
pub struct Delta {
    refl: Reflection,
    endpoint: f64,
    panels: Arc<Vec<Panel>>,
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    /// (ν_j, w_j f(ν_j)); for the tail ν_j is the mapped node and w_j carries the Jacobian.
    nodes: Vec<(f64, f64)>,
}

const DELTA_SPAN: f64 = 40.0;

impl Delta {
    pub fn new(refl: &Reflection, endpoint: f64) -> Self {
        let mut panels = vec![];
        if !refl.is_zero() {
            let (x, w) = quad::gauss_legendre(16);
            let h = 0.25 * refl.feature_scale().min(1.0);
            let n = (DELTA_SPAN / h).ceil() as usize;
            let h = DELTA_SPAN / n as f64;
            for j in 0..n {
                let (a, b) = (endpoint - DELTA_SPAN + j as f64 * h, endpoint - DELTA_SPAN + (j + 1) as f64 * h);
                let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
                let nodes = x.iter().zip(&w).map(|(xi, wi)| (c + r * xi, r * wi * refl.log_weight(c + r * xi))).collect();
                panels.push(Panel { a, b, nodes });
            }
            // tail ν = a − u/(1 − u), u ∈ [0, 1)
            let a = endpoint - DELTA_SPAN;
            let (x, w) = quad::gauss_legendre(64);
            let nodes = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let u = 0.5 * (1.0 + xi);
                    let nu = a - u / (1.0 - u);
                    (nu, 0.5 * wi * refl.log_weight(nu) / ((1.0 - u) * (1.0 - u)))
                })
                .collect();
            panels.push(Panel { a: f64::NEG_INFINITY, b: a, nodes });
            // drop panels where the weight is below roundoff of its peak
            let peak = |p: &Panel| p.nodes.iter().map(|n| n.1.abs()).fold(0.0, f64::max);
            let top = panels.iter().map(peak).fold(0.0, f64::max);
            panels.retain(|p| peak(p) > 1e-18 * top);
        }
        Delta { refl: refl.clone(), endpoint, panels: Arc::new(panels) }
    }

    pub fn endpoint(&self) -> f64 {
        self.endpoint
    }

    pub fn is_trivial(&self) -> bool {
        self.refl.is_zero()
    }

    /// ln δ(k), the exponent itself (no branch choice involved).
    pub fn ln(&self, k: C64) -> C64 {
        if self.is_trivial() {
            return ZERO;
        }
        let f = |nu: f64| C64::new(self.refl.log_weight(nu), 0.0) / (nu - k);
        let mut acc = ZERO;
        for p in self.panels.iter() {
            let close = if p.a.is_finite() {
                // Bernstein ellipse parameter of k for this panel; 16-point rule is at
                // roundoff level once ρ ≥ 3
                let z = (2.0 * k - (p.a + p.b)) / (p.b - p.a);
                let rho = (z + (z * z - 1.0).sqrt()).norm().max((z - (z * z - 1.0).sqrt()).norm());
                rho < 3.0
            } else {
                k.re < p.b + 2.0 && k.im.abs() < 2.0
            };
            if !close {
                acc += p.nodes.iter().map(|&(nu, wf)| wf / (nu - k)).sum::<C64>();
            } else if p.a.is_finite() {
                let mut breaks = vec![p.a, p.b];
                if k.re > p.a && k.re < p.b {
                    breaks.insert(1, k.re);
                }
                acc += quad::integrate_pieces(&f, &breaks, tol());
            } else {
                acc += quad::ray(&|z: C64| f(z.re), C64::new(p.b, 0.0), C64::new(-1.0, 0.0), tol());
            }
        }
        acc / (2.0 * PI * I)
    }

    pub fn eval(&self, k: C64) -> C64 {
        self.ln(k).exp()
    }
}

/// ∫_B F(ζ)/λ⁺(ζ) dζ over B = i[−q_o, q_o] upward, λ⁺ the left boundary value.
/// With ζ = iq_o sin φ this is −i ∫ F(iq_o sin φ) dφ over [−π/2, π/2].
pub fn b_integral<F: Fn(C64) -> C64>(q_o: f64, f: F, near: Option<C64>) -> C64 {
    let g = |phi: f64| f(C64::new(0.0, q_o * phi.sin()));
    // B crosses the real line (and possibly the cut of δ) at φ = 0
    let mut breaks = vec![-FRAC_PI_2, 0.0, FRAC_PI_2];
    if let Some(k) = near {
        if k.im.abs() < q_o {
            breaks.push((k.im / q_o).asin());
            breaks.sort_by(|a, b| a.total_cmp(b));
        }
    }
    -I * quad::integrate_pieces(&g, &breaks, tol())
}

/// Phase in the plane-wave window ξ < v_o (any ξ when r = 0): g⁺ + g⁻ = −i ln δ² on B, g = g_∞ + O(1/k).
#[derive(Clone, Debug)]
pub struct PlaneWavePhase {
    pub xi: f64,
    pub q_o: f64,
    pub delta: Delta,
    pub g_inf: f64,
    /// Imaginary part of the computed g_∞ (should vanish).
    pub g_inf_imag: f64,
}

impl PlaneWavePhase {
    pub fn new(xi: f64, sd: &ScatteringData) -> Result<Self> {
        let q = sd.q_o;
        // without radiation δ ≡ 1 and the phase is trivial at every ξ
        if !(xi < v_o(q)) && !sd.reflection.is_zero() {
            return Err(Error::Domain(format!("plane-wave phase needs xi < v_o, got {xi}")));
        }
        let k1 = stationary_points(xi, q).0.re;
        let delta = Delta::new(&sd.reflection, k1);
        let gi = if delta.is_trivial() { ZERO } else { b_integral(q, |z| delta.ln(z), None) / PI };
        Ok(PlaneWavePhase { xi, q_o: q, delta, g_inf: gi.re, g_inf_imag: gi.im })
    }

    /// g(k) for k off B.
    pub fn g(&self, k: C64) -> C64 {
        if self.delta.is_trivial() {
            return ZERO;
        }
        let lam = lambda_fn(k, self.q_o, Side::Auto);
        -lam / PI * b_integral(self.q_o, |z| self.delta.ln(z) / (z - k), Some(k))
    }

    /// Jump data −i ln δ² at a point of B.
    pub fn jump(&self, k: C64) -> C64 {
        -2.0 * I * self.delta.ln(k)
    }
}

/// 2 arg[p + λ(p)].
pub fn g_tilde_inf_closed(p: C64, q_o: f64) -> f64 {
    2.0 * (p + lambda_fn(p, q_o, Side::Auto)).arg()
}

/// (1/π) ∫_B ln[(ζ − p̄)/(ζ − p)]/λ(ζ) dζ, B upward with the right boundary value of λ.
pub fn g_tilde_inf_integral(p: C64, q_o: f64) -> Result<f64> {
    if p.re == 0.0 {
        return Err(Error::Domain("p on the imaginary axis: ln n is on its cut along B".into()));
    }
    let f = |z: C64| ((z - p.conj()) / (z - p)).ln();
    // dζ/λ_right = i dφ, i.e. minus the left-value weight.
    let v = -b_integral(q_o, f, None) / PI;
    Ok(v.re)
}

/// A continuous logarithm of n(k) = (k − p̄)/(k − p) off two mirrored rays from p and p̄.
#[derive(Clone, Copy, Debug)]
pub struct LogN {
    pub p: C64,
    /// Angle of the ray from p, in (−π, 0).
    pub ray_angle: f64,
}

fn ln_cut(w: C64, theta: f64) -> C64 {
    // arg in (θ, θ + 2π)
    let a = (w.arg() - theta).rem_euclid(2.0 * PI) + theta;
    C64::new(w.norm().ln(), a)
}

impl LogN {
    /// Pick a ray direction from p whose ray misses every listed path.
    pub fn avoiding(p: C64, paths: &[&[C64]]) -> Result<Self> {
        let reach = 1e3 * (1.0 + p.norm());
        let candidates = [-FRAC_PI_2, -0.75 * PI, -0.25 * PI, -0.9 * PI, -0.1 * PI, -0.6 * PI, -0.4 * PI];
        for &th in &candidates {
            let end = p + C64::from_polar(reach, th);
            let hits = paths.iter().any(|path| {
                path.windows(2).any(|s| segments_cross(p, end, s[0], s[1]) || dist_to_segment(s[0], p, end) < 1e-12)
            });
            if !hits {
                return Ok(LogN { p, ray_angle: th });
            }
        }
        Err(Error::Geometry(format!("no admissible cut direction for ln n at p = {p}")))
    }

    pub fn eval(&self, k: C64) -> C64 {
        ln_cut(k.conj() - self.p, self.ray_angle).conj() - ln_cut(k - self.p, self.ray_angle)
    }
}

/// Scalar phases for one elliptic-window ξ and one choice of moving cut
/// (the traced B̃, or the displaced cut used at the wake velocity).
#[derive(Clone, Debug)]
pub struct EllipticPhase {
    pub mp: ModulationPoint,
    pub cut: ContourSet,
    pub delta: Delta,
    pub omega: f64,
    pub g_inf: f64,
    /// Imaginary parts of the computed ω and g_∞ (should vanish).
    pub imag_parts: [f64; 2],
    refl: Reflection,
    omega_c: C64,
}

/// The two halves of a moving cut: ᾱ → k_o and k_o → α.
fn halves(cut: &ContourSet) -> (&[C64], &[C64]) {
    let i = cut.k_o_index();
    (&cut.b_tilde[..=i], &cut.b_tilde[i..])
}

/// γ⁺ on B: left value of λ times the analytic second factor.
fn b_weight(mp: &ModulationPoint, z: C64) -> C64 {
    1.0 / sqrt_branch(z - mp.a(), mp.b(), Side::Auto)
}

/// ∫ over the moving cut of F(ν)/Γ(ν) dν, lower and upper halves returned separately.
fn cut_integral<F: Fn(C64) -> C64>(mp: &ModulationPoint, cut: &ContourSet, f: F, near: &[C64]) -> (C64, C64) {
    let (lo, hi) = halves(cut);
    let w = |z: C64| f(z) / mp.gamma_straight(z, Side::Auto);
    let t = tol();
    (quad::polyline_near(&w, lo, true, true, near, t), quad::polyline_near(&w, hi, true, true, near, t))
}

impl EllipticPhase {
    pub fn new(mp: &ModulationPoint, cut: &ContourSet, refl: &Reflection) -> Result<Self> {
        if refl.is_zero() {
            return Err(Error::Unsupported(
                "elliptic-window phases need a nonzero reflection coefficient (ln r on the moving cut)".into(),
            ));
        }
        refl.ln_r(C64::new(mp.k_o, 0.5))?;
        for &z in &cut.b_tilde {
            if refl.r(z).norm() == 0.0 {
                return Err(Error::Domain(format!("reflection vanishes on the moving cut at {z}")));
            }
        }
        let delta = Delta::new(refl, mp.k_o);
        let mut ph = EllipticPhase {
            mp: *mp,
            cut: cut.clone(),
            delta,
            omega: 0.0,
            g_inf: 0.0,
            imag_parts: [0.0; 2],
            refl: refl.clone(),
            omega_c: ZERO,
        };
        let memo = RefCell::new(HashMap::new());
        let (b0, (t0l, t0u), (t1l, t1u)) = ph.moments(|_| C64::new(1.0, 0.0), &[], Some(&memo));
        let omega = -(b0 + t0l + t0u) / (t1l + t1u);
        ph.omega_c = omega;
        let (b1, (s0l, s0u), (s1l, s1u)) = ph.moments(|z| z, &[], Some(&memo));
        let gi = -(b1 + s0l + s0u + omega * (s1l + s1u)) / (2.0 * PI * I);
        ph.omega = omega.re;
        ph.g_inf = gi.re;
        ph.imag_parts = [omega.im, gi.im];
        Ok(ph)
    }

    fn ln_r(&self, z: C64) -> C64 {
        self.refl.ln_r(z).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    /// Jump data without the ω term, on B (`on_b`) or on the moving cut.
    pub fn phi0(&self, z: C64, on_b: bool) -> C64 {
        let ld = 2.0 * self.delta.ln(z);
        if on_b {
            -I * ld
        } else if z.im > 0.0 {
            -I * (ld - self.ln_r(z))
        } else {
            -I * (ld + self.refl.ln_rbar(z).unwrap_or(C64::new(f64::NAN, f64::NAN)))
        }
    }

    /// Full jump data g⁺ + g⁻ at a point of B or of the moving cut.
    pub fn jump(&self, z: C64, on_b: bool) -> C64 {
        if on_b {
            self.phi0(z, true)
        } else {
            self.phi0(z, false) + self.omega_c
        }
    }

    /// (∫_B wφ/γ⁺, ∫_cut wφ₀/γ⁺ by halves, ∫_cut w/γ⁺ by halves).
    fn moments<W: Fn(C64) -> C64>(&self, w: W, near: &[C64], memo: Option<&Memo>) -> (C64, (C64, C64), (C64, C64)) {
        let q = self.mp.q_o;
        let phi = |z: C64, on_b: bool| match memo {
            Some(m) => *m.borrow_mut().entry((z.re.to_bits(), z.im.to_bits(), on_b)).or_insert_with(|| self.phi0(z, on_b)),
            None => self.phi0(z, on_b),
        };
        let b = b_integral(q, |z| w(z) * phi(z, true) * b_weight(&self.mp, z), near.first().copied());
        let t0 = cut_integral(&self.mp, &self.cut, |z| w(z) * phi(z, false), near);
        let t1 = cut_integral(&self.mp, &self.cut, &w, near);
        (b, t0, t1)
    }

    /// γ with cuts B and the moving cut.
    pub fn gamma_true(&self, k: C64) -> C64 {
        let g = self.mp.gamma_straight(k, Side::Auto);
        if self.cut.in_region_d(k) {
            -g
        } else {
            g
        }
    }

    /// g(ξ, k) for k off the cuts.
    pub fn g(&self, k: C64) -> C64 {
        let w = |z: C64| 1.0 / (z - k);
        let (b, (t0l, t0u), (t1l, t1u)) = self.moments(w, &[k], None);
        let total = b + t0l + t0u + self.omega_c * (t1l + t1u);
        self.gamma_true(k) / (2.0 * PI * I) * total
    }
}

/// Soliton-induced shift in the elliptic window: ω̃ and the limit g̃_∞ of the phase
/// with jumps i ln n² on B and i ln n² + ω̃ on the moving cut.
#[derive(Clone, Copy, Debug)]
pub struct EllipticShift {
    pub omega_tilde: f64,
    pub g_tilde_inf: f64,
    pub imag_parts: [f64; 2],
    pub log_n: LogN,
}

impl EllipticShift {
    pub fn new(mp: &ModulationPoint, cut: &ContourSet, p: C64) -> Result<Self> {
        let q = mp.q_o;
        let d = cut.dist_to_b_tilde(p).min(cut.dist_to_b_tilde(p.conj()));
        if d < 1e-6 * mp.b().max(0.2) {
            return Err(Error::Geometry(format!("p = {p} lies on the moving cut (distance {d:e})")));
        }
        let bseg = [C64::new(0.0, -q), C64::new(0.0, q)];
        let log_n = LogN::avoiding(p, &[&cut.b_tilde, &bseg])?;
        let ln2 = |z: C64| 2.0 * log_n.eval(z);
        let moments = |w: &dyn Fn(C64) -> C64| {
            let b = b_integral(q, |z| w(z) * I * ln2(z) * b_weight(mp, z), None);
            let (tl, tu) = cut_integral(mp, cut, |z| w(z) * I * ln2(z), &[]);
            let (sl, su) = cut_integral(mp, cut, w, &[]);
            (b + tl + tu, sl + su)
        };
        let (a0, c0) = moments(&|_| C64::new(1.0, 0.0));
        let om = -a0 / c0;
        let (a1, c1) = moments(&|z| z);
        let gi = -(a1 + om * c1) / (2.0 * PI * I);
        Ok(EllipticShift { omega_tilde: om.re, g_tilde_inf: gi.re, imag_parts: [om.im, gi.im], log_n })
    }
}

/// Moving cut displaced to the right of B̃ around p, used at the wake velocity.
///
/// The traced B̃ passes through p at ξ = v_w. The displaced cut follows B̃ except near
/// p (and p̄), where it is pushed toward B′ by a tent of height `offset` so that p sits
/// outside the new region, clear of a disk of radius `disk`.
pub fn displaced_cut(cut: &ContourSet, p: C64, disk: f64, offset: f64) -> Result<ContourSet> {
    let i0 = cut.k_o_index();
    let lower = &cut.b_tilde[..=i0];
    // arclength along ᾱ → k_o
    let mut s = vec![0.0];
    for w in lower.windows(2) {
        s.push(s.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *s.last().unwrap();
    let (jp, _) = lower
        .windows(2)
        .enumerate()
        .map(|(j, w)| (j, dist_to_segment(p, w[0], w[1])))
        .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
    let sp = s[jp];
    let width = (4.0 * offset).min(0.95 * sp).min(0.95 * (total - sp));
    if !(width > 2.0 * disk) {
        return Err(Error::Geometry(format!("p = {p} is too close to an end of the cut to displace it")));
    }
    let a = cut.alpha.re;
    let mut new_lower = lower.to_vec();
    for (j, z) in new_lower.iter_mut().enumerate() {
        let tent = (1.0 - (s[j] - sp).abs() / width).max(0.0);
        if tent == 0.0 || j == 0 || j == i0 {
            continue;
        }
        let prev = lower[j.saturating_sub(1)];
        let next = lower[(j + 1).min(i0)];
        let t = next - prev;
        // right-hand normal of an upward-oriented path
        let nrm = -I * t / t.norm();
        let room = if nrm.re > 0.0 { 0.8 * (a - z.re).max(0.0) / nrm.re } else { f64::INFINITY };
        *z += nrm * (offset * tent).min(room);
    }
    let mut pts = new_lower.clone();
    pts.extend(new_lower.iter().rev().skip(1).map(|z| z.conj()));
    let out = ContourSet { b_tilde: pts, ..cut.clone() };
    let d = dist_to_polyline(p, &out.b_tilde);
    if d < disk {
        return Err(Error::Geometry(format!("displaced cut passes within {d:e} of p (disk {disk:e})")));
    }
    if out.in_region_d(p) {
        return Err(Error::Geometry("displaced cut left p inside the cut region".into()));
    }
    Ok(out)
}

/// Cut geometry and phases at the wake velocity, where the traced B̃ runs through p.
#[derive(Clone, Debug)]
pub struct WakeBundle {
    pub v_w: f64,
    pub p: C64,
    /// Radius of the excluded disk around p.
    pub disk: f64,
    pub cut_w: ContourSet,
    pub omega_int: f64,
    pub phase: EllipticPhase,
}

impl WakeBundle {
    pub fn new(mp: &ModulationPoint, traced: &ContourSet, p: C64, refl: &Reflection) -> Result<Self> {
        let (lo, hi) = (C64::new(0.0, -mp.q_o), C64::new(0.0, mp.q_o));
        let (b0, b1) = traced.b_prime();
        let d = dist_to_segment(p, b0, b1).min(dist_to_segment(p, lo, hi)).min(p.im.abs()).min(1.0);
        let disk = 0.2 * d;
        let cut_w = displaced_cut(traced, p, disk, 2.5 * disk)?;
        let phase = EllipticPhase::new(mp, &cut_w, refl)?;
        Ok(WakeBundle { v_w: mp.xi, p, disk, cut_w, omega_int: mp.omega_integral(), phase })
    }

    pub fn omega_w(&self) -> f64 {
        self.phase.omega
    }

    pub fn g_w_inf(&self) -> f64 {
        self.phase.g_inf
    }

    pub fn g_w(&self, k: C64) -> C64 {
        self.phase.g(k)
    }

    /// h with cuts B and the displaced B̃_w.
    pub fn h_w(&self, k: C64) -> C64 {
        let hg = self.phase.mp.h_gamma(k, Side::Auto);
        if self.cut_w.in_region_d(k) {
            self.omega_int - hg
        } else {
            hg
        }
    }

    pub fn gamma_w(&self, k: C64) -> C64 {
        self.phase.gamma_true(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::{solve_modulation, trace_b_tilde};

    /// Limit at e → 0 of f(e) = L + c₁e + c₂e² + …, from e, e/2, e/4.
    fn richardson<F: Fn(f64) -> C64>(f: F, e: f64) -> C64 {
        let (a, b, c) = (f(e), f(e / 2.0), f(e / 4.0));
        let (r1, r2) = (2.0 * b - a, 2.0 * c - b);
        (4.0 * r2 - r1) / 3.0
    }

    fn gauss() -> Reflection {
        Reflection::Gaussian { amplitude: 0.3, width: 2.0 }
    }

    #[test]
    fn delta_trivial_and_symmetric() {
        let d = Delta::new(&Reflection::Zero, -1.0);
        assert_eq!(d.eval(C64::new(0.3, 0.2)), C64::new(1.0, 0.0));
        let d = Delta::new(&gauss(), -1.0);
        for k in [C64::new(0.3, 0.2), C64::new(-2.0, -0.7), C64::new(1.5, 3.0)] {
            assert!((d.eval(k.conj()) * d.eval(k).conj() - 1.0).norm() < 1e-10);
        }
        assert!((d.eval(C64::new(0.0, 1e4)) - 1.0).norm() < 1e-4);
    }

    #[test]
    fn delta_panels_match_adaptive() {
        let refl = Reflection::Gaussian { amplitude: 0.6, width: 0.7 };
        let e = 0.4;
        let d = Delta::new(&refl, e);
        let f = |k: C64| {
            let g = |nu: f64| C64::new(refl.log_weight(nu), 0.0) / (nu - k);
            let body = quad::integrate_pieces(&g, &[e - 60.0, k.re.clamp(e - 60.0, e), e], tol());
            let tail = quad::ray(&|z: C64| g(z.re), C64::new(e - 60.0, 0.0), C64::new(-1.0, 0.0), tol());
            (body + tail) / (2.0 * PI * I)
        };
        for k in [C64::new(0.3, 0.2), C64::new(0.4, 1e-3), C64::new(-2.0, -0.7), C64::new(1.5, 3.0), C64::new(-0.1, 0.05), C64::new(0.0, -1.0)] {
            assert!((d.ln(k) - f(k)).norm() < 1e-12, "{k}: {} {}", d.ln(k), f(k));
        }
    }

    #[test]
    fn delta_jump_across_its_cut() {
        let d = Delta::new(&gauss(), -1.0);
        let nu = -2.0;
        let rich = richardson(|eps| d.ln(C64::new(nu, eps)) - d.ln(C64::new(nu, -eps)), 1e-3);
        let want = Reflection::Gaussian { amplitude: 0.3, width: 2.0 }.log_weight(nu);
        assert!((rich - want).norm() < 1e-8, "{rich} {want}");
    }

    #[test]
    fn g_tilde_two_ways() {
        let p = C64::new(-2.0, -0.5);
        let c = g_tilde_inf_closed(p, 1.0);
        assert!((c + 5.84114803593382).abs() < 1e-12);
        assert!((wrap_angle(c) - 0.442037271125607).abs() < 1e-9);
        assert!((wrap_angle(c) - 0.4423).abs() < 5e-4);
        let v = g_tilde_inf_integral(p, 1.0).unwrap();
        assert!(wrap_angle(v - c).abs() < 1e-9, "{v} {c}");
        let p = C64::new(-0.1, -1.02);
        let v = g_tilde_inf_integral(p, 1.0).unwrap();
        assert!(wrap_angle(v - g_tilde_inf_closed(p, 1.0)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn plane_wave_phase() {
        let sd = ScatteringData::new(1.0, C64::new(1.0, 0.0), C64::new(-2.0, -0.5), C64::new(1.0, 0.0), gauss())
            .unwrap();
        let ph = PlaneWavePhase::new(-8.0, &sd).unwrap();
        assert!(ph.g_inf_imag.abs() < 1e-10);
        // Schwarz symmetry and the jump on B
        let k = C64::new(0.7, -0.4);
        assert!((ph.g(k.conj()) - ph.g(k).conj()).norm() < 1e-10);
        for y in [-0.8, -0.1, 0.45] {
            let rich = richardson(|e| ph.g(C64::new(-e, y)) + ph.g(C64::new(e, y)), 1e-3);
            assert!((rich - ph.jump(C64::new(0.0, y))).norm() < 1e-8, "{y}: {rich}");
        }
        let big = C64::new(300.0, 400.0);
        assert!((ph.g(big) - ph.g_inf).norm() < 1e-2);
    }

    #[test]
    fn elliptic_phase_is_real_and_jumps() {
        let mp = solve_modulation(-3.0, 1.0).unwrap();
        let cut = trace_b_tilde(&mp).unwrap();
        let ph = EllipticPhase::new(&mp, &cut, &gauss()).unwrap();
        assert!(ph.imag_parts[0].abs() < 1e-10 && ph.imag_parts[1].abs() < 1e-10, "{:?}", ph.imag_parts);
        let s = |k: C64, e: C64| ph.g(k + e) + ph.g(k - e);
        // on B, + is the left side
        let k = C64::new(0.0, 0.3);
        let rich = richardson(|e| s(k, C64::new(e, 0.0)), 1e-3);
        assert!((rich - ph.jump(k, true)).norm() < 1e-8, "{rich} {}", ph.jump(k, true));
        // on the moving cut, at a vertex a third of the way up from ᾱ
        let j = cut.k_o_index() / 3;
        let (z, t) = (cut.b_tilde[j], cut.b_tilde[j + 1] - cut.b_tilde[j - 1]);
        let nrm = I * t / t.norm();
        let rich = richardson(|e| s(z, nrm * e), 1e-3);
        assert!((rich - ph.jump(z, false)).norm() < 1e-7, "{rich} {}", ph.jump(z, false));
        let big = C64::new(-200.0, 300.0);
        assert!((ph.g(big) - ph.g_inf).norm() < 1e-2);
    }

    #[test]
    fn elliptic_shift_limits() {
        // ω̃ is real, small for distant p, and g̃_∞ tends to its plane-wave value as ξ → v_o⁺
        let near = solve_modulation(-5.65, 1.0).unwrap();
        let far = solve_modulation(-1.0, 1.0).unwrap();
        let mut last = 0.0;
        for p in [C64::new(-2.0, -0.5), C64::new(-5.0, -5.0), C64::new(-50.0, -50.0)] {
            let sh = EllipticShift::new(&far, &trace_b_tilde(&far).unwrap(), p).unwrap();
            assert!(sh.imag_parts[0].abs() < 1e-10 && sh.imag_parts[1].abs() < 1e-10);
            last = sh.omega_tilde.abs();
            let sh = EllipticShift::new(&near, &trace_b_tilde(&near).unwrap(), p).unwrap();
            let c = g_tilde_inf_closed(p, 1.0);
            assert!(wrap_angle(sh.g_tilde_inf - c).abs() < 1e-3, "{p}: {} vs {c}", sh.g_tilde_inf);
        }
        assert!(last < 0.05);
    }

    #[test]
    fn wake_cut_clears_the_eigenvalue() {
        let p = C64::new(-0.1, -0.5);
        let sd = ScatteringData::new(1.0, C64::new(1.0, 0.0), p, C64::new(1.0, 0.0), gauss()).unwrap();
        let rep = crate::classify::classify(&sd).unwrap();
        let vw = rep.v_w().unwrap();
        let mp = solve_modulation(vw, 1.0).unwrap();
        let traced = trace_b_tilde(&mp).unwrap();
        assert!(traced.dist_to_b_tilde(p) < 1e-3);
        let wb = WakeBundle::new(&mp, &traced, p, &gauss()).unwrap();
        assert!(!wb.cut_w.in_region_d(p) && wb.cut_w.dist_to_b_tilde(p) > wb.disk);
        assert_eq!(wb.cut_w.b_tilde[0], traced.b_tilde[0]);
        assert_eq!(wb.cut_w.b_tilde.last(), traced.b_tilde.last());
        assert!(wb.phase.imag_parts[0].abs() < 1e-10 && wb.phase.imag_parts[1].abs() < 1e-10);
        // h_w⁺ + h_w⁻ = Ω across the displaced cut
        let j = wb.cut_w.k_o_index() / 2;
        let (z, t) = (wb.cut_w.b_tilde[j], wb.cut_w.b_tilde[j + 1] - wb.cut_w.b_tilde[j - 1]);
        let e = I * t / t.norm() * 1e-7;
        let sum = wb.h_w(z + e) + wb.h_w(z - e);
        assert!((sum - wb.omega_int).norm() < 1e-5, "{sum} {}", wb.omega_int);
        // Schwarz symmetry of γ_w and continuity of h_w at p
        let k = C64::new(-0.3, 0.2);
        assert!((wb.gamma_w(k.conj()) - wb.gamma_w(k).conj()).norm() < 1e-12);
        let dh = wb.h_w(p + wb.disk * 0.1) - wb.h_w(p - wb.disk * 0.1);
        assert!(dh.norm() < 0.1, "{dh}");
    }
}
