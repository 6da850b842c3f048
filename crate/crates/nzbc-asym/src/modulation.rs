//! Modulation equations and the genus-1 quantities built on them: the Abelian
//! integral h, Ω, G_∞, the Riemann period τ, the Abel map ν, and the zero-contour B̃.

use crate::error::{Error, Result};
use crate::quad::{self, QuadTol};
use crate::special::{elliptic_e, elliptic_k, ThetaParams};
use crate::spectral::{sqrt_branch, v_o, Side, I};
use crate::util::{brent, dist_to_segment, in_polygon};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationPoint {
    pub xi: f64,
    pub q_o: f64,
    pub alpha: C64,
    pub m: f64,
    pub k_o: f64,
    /// Residuals of the three modulation relations, each evaluated independently.
    pub residuals: [f64; 3],
}

fn b_of(a: f64, xi: f64, q: f64) -> f64 {
    (q * q + 2.0 * a * a - xi * a / 2.0).max(0.0).sqrt()
}

fn m_of(a: f64, b: f64, q: f64) -> f64 {
    (4.0 * q * b / (a * a + (q + b) * (q + b))).sqrt()
}

fn elliptic_relation(a: f64, xi: f64, q: f64) -> f64 {
    let b = b_of(a, xi, q);
    let m = m_of(a, b, q).min(1.0 - 1e-16);
    let (k, e) = match (elliptic_k(m), elliptic_e(m)) {
        (Ok(k), Ok(e)) => (k, e),
        _ => return f64::NAN,
    };
    (a * a + (q - b) * (q - b)) * k - (a * a - b * b + q * q) * e
}

/// Residuals of the three relations at (ξ, α, m).
pub fn modulation_residuals(xi: f64, q: f64, alpha: C64, m: f64) -> [f64; 3] {
    let (a, b) = (alpha.re, alpha.im);
    let r1 = xi / 2.0 - 2.0 * a - (q * q - b * b) / a;
    let r2 = m * m - 4.0 * q * b / (a * a + (q + b) * (q + b));
    let r3 = match (elliptic_k(m), elliptic_e(m)) {
        (Ok(k), Ok(e)) => (a * a + (q - b) * (q - b)) * k - (a * a - b * b + q * q) * e,
        _ => f64::NAN,
    };
    [r1, r2, r3]
}

/// Solve the modulation equations at v_o < ξ < 0.
///
/// The first relation gives α_im in terms of α_re and the second gives m, so the
/// system reduces to the scalar elliptic relation in α_re, bracketed on (ξ/8, 0).
pub fn solve_modulation(xi: f64, q_o: f64) -> Result<ModulationPoint> {
    let vo = v_o(q_o);
    if !(xi > vo && xi < 0.0) {
        return Err(Error::Domain(format!("modulation equations need v_o < xi < 0, got {xi}")));
    }
    let lo = xi / 8.0;
    let f = |a: f64| elliptic_relation(a, xi, q_o);
    let mut grid: Vec<f64> = (0..200).map(|j| lo * (1.0 - j as f64 / 200.0)).collect();
    grid[0] = lo * (1.0 - 1e-12);
    let mut tail = lo / 200.0;
    for _ in 0..60 {
        tail *= 0.5;
        grid.push(tail);
    }
    let mut prev = grid[0];
    let mut fprev = f(prev);
    let mut last = (prev, fprev);
    for &a in &grid[1..] {
        let fa = f(a);
        if fprev > 0.0 && fa < 0.0 {
            let root = brent(f, prev, a, 1e-16 * lo.abs(), 300)
                .ok_or_else(|| Error::Convergence(format!("bracket lost at xi = {xi}")))?;
            let b = b_of(root, xi, q_o);
            let m = m_of(root, b, q_o);
            let alpha = C64::new(root, b);
            let residuals = modulation_residuals(xi, q_o, alpha, m);
            let mp = ModulationPoint { xi, q_o, alpha, m, k_o: -root + xi / 4.0, residuals };
            if residuals.iter().any(|r| !(r.abs() < 1e-10)) {
                return Err(Error::Convergence(format!("residuals {residuals:?} at xi = {xi}")));
            }
            return Ok(mp);
        }
        prev = a;
        fprev = fa;
        last = (a, fa);
    }
    Err(Error::Convergence(format!(
        "no sign change of the elliptic relation at xi = {xi}; last iterate a = {}, F = {}",
        last.0, last.1
    )))
}

/// Which second cut a branch of γ uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Straight,
    Traced,
}

impl ModulationPoint {
    pub fn a(&self) -> f64 {
        self.alpha.re
    }
    pub fn b(&self) -> f64 {
        self.alpha.im
    }

    /// Γ(k) = λ(k) λ_b(k − α_re): γ with straight cuts B and B′.
    pub fn gamma_straight(&self, k: C64, side: Side) -> C64 {
        sqrt_branch(k, self.q_o, side) * sqrt_branch(k - self.a(), self.b(), side)
    }

    /// dh/dk = −4 (k − k_o)(k − α)(k − ᾱ)/γ with the straight cuts.
    pub fn dh(&self, k: C64, side: Side) -> C64 {
        -4.0 * (k - self.k_o) * sqrt_branch(k - self.a(), self.b(), side) / sqrt_branch(k, self.q_o, side)
    }

    fn y_top(&self) -> f64 {
        self.q_o.max(self.b()) + 1.0
    }

    fn band(&self) -> f64 {
        (0.05f64).min(self.a().abs() / 3.0)
    }

    /// Integration path from iq_o to k that avoids B and B′: up, across above both
    /// cuts, down a vertical line kept off Re k ∈ {0, α_re}, then across to k.
    pub fn abel_path(&self, k: C64, side: Side) -> Vec<C64> {
        let y = self.y_top();
        let d = self.band();
        let mut x0 = k.re;
        for c in [0.0, self.a()] {
            if (k.re - c).abs() < d {
                let right = match side {
                    Side::Plus => true,
                    Side::Minus => false,
                    Side::Auto => k.re >= c,
                };
                x0 = if right { c + d } else { c - d };
            }
        }
        vec![C64::new(0.0, self.q_o), C64::new(0.0, y), C64::new(x0, y), C64::new(x0, k.im), k]
    }

    fn path_integral<F: Fn(C64) -> C64>(&self, f: &F, k: C64, side: Side, sing_end: bool) -> C64 {
        let path = self.abel_path(k, side);
        quad::polyline(f, &path, true, sing_end, QuadTol::default())
    }

    /// h with the straight second cut. `side` selects the boundary value on B or B′.
    pub fn h_gamma(&self, k: C64, side: Side) -> C64 {
        let f = |z: C64| self.dh(z, Side::Auto);
        let up = self.path_integral(&f, k, side, false);
        let down = self.path_integral(&f, k.conj(), side, false).conj();
        0.5 * (up + down)
    }

    /// Ω from the defining integrals of dh between the branch points.
    pub fn omega_integral(&self) -> f64 {
        let f = |z: C64| self.dh(z, Side::Auto);
        let seg = quad::segment(&f, C64::new(0.0, self.q_o), self.alpha, true, false, QuadTol::default());
        2.0 * seg.re
    }

    /// Ω from the elliptic closed form π|α + iq_o|(ξ − 2α_re)/K(m).
    pub fn omega_closed(&self) -> Result<f64> {
        Ok(PI * (self.alpha + I * self.q_o).norm() * (self.xi - 2.0 * self.a()) / elliptic_k(self.m)?)
    }

    fn g_inf_integrand(&self, z: C64) -> C64 {
        let (a, b, q) = (self.a(), self.b(), self.q_o);
        let w = z - a;
        let u1 = b * b / (w * w);
        let u2 = q * q / (z * z);
        let s1 = u1 / ((1.0 + u1).sqrt() + 1.0);
        let s2 = u2 / ((1.0 + u2).sqrt() + 1.0);
        let lin = z - self.xi / 4.0;
        lin * (s1 - s2) / (1.0 + s2) + (a * self.k_o / z) * (1.0 + s1) / (1.0 + s2)
    }

    /// G_∞ = −2(∫_{iq_o}^∞ + ∫_{−iq_o}^∞)[(z − k_o)(z − α)(z − ᾱ)/γ − (z − ξ/4)]dz − q_o².
    /// Returns the complex value so that the size of the imaginary part can be checked.
    pub fn g_inf_cap(&self) -> C64 {
        let y = self.y_top();
        let f = |z: C64| self.g_inf_integrand(z);
        let tol = QuadTol { abs: 1e-14, rel: 1e-13, max_panels: 400 };
        let near = quad::segment(&f, C64::new(0.0, self.q_o), C64::new(0.0, y), true, false, tol);
        let far = quad::ray(&f, C64::new(0.0, y), I, tol);
        let up = near + far;
        let total = up + up.conj();
        -2.0 * total - self.q_o * self.q_o
    }

    /// G_∞ with the ray cut at |z| = R, plus the O(1/R) tail estimate of the neglected part.
    pub fn g_inf_cap_truncated(&self, r: f64) -> (C64, f64) {
        let y = self.y_top();
        let f = |z: C64| self.g_inf_integrand(z);
        let tol = QuadTol { abs: 1e-14, rel: 1e-13, max_panels: 400 };
        let near = quad::segment(&f, C64::new(0.0, self.q_o), C64::new(0.0, y), true, false, tol);
        let mid = quad::segment(&f, C64::new(0.0, y), C64::new(0.0, r), false, false, tol);
        let up = near + mid;
        let zr = C64::new(0.0, r);
        let c2 = (f(zr) * zr * zr).norm();
        (-2.0 * (up + up.conj()) - self.q_o * self.q_o, 4.0 * c2 / r)
    }

    /// Closed β-cycle of dk/Γ: anticlockwise rectangle around B.
    pub fn beta_period(&self) -> C64 {
        let d = (0.2f64).min(self.a().abs() / 2.0);
        let q = self.q_o;
        let rect = [
            C64::new(d, -q - d),
            C64::new(d, q + d),
            C64::new(-d, q + d),
            C64::new(-d, -q - d),
            C64::new(d, -q - d),
        ];
        let f = |z: C64| 1.0 / self.gamma_straight(z, Side::Auto);
        quad::polyline(&f, &rect, false, false, QuadTol::default())
    }

    /// τ as the ratio of the α-period to the β-period.
    pub fn tau_from_periods(&self) -> C64 {
        let f = |z: C64| 1.0 / self.gamma_straight(z, Side::Auto);
        let pa = 2.0 * quad::segment(&f, self.alpha, C64::new(0.0, self.q_o), true, true, QuadTol::default());
        pa / self.beta_period()
    }

    /// τ = iK(√(1−m²))/K(m).
    pub fn tau_from_modulus(&self) -> Result<C64> {
        Ok(ThetaParams::from_modulus(self.m, 1e-17)?.tau)
    }
}

/// Genus-1 data at one ξ: the modulation point with its periods, Abel map
/// normalization, phase constants, and traced contour.
#[derive(Clone, Debug)]
pub struct EllipticSetup {
    pub mp: ModulationPoint,
    pub omega_int: f64,
    pub omega_closed: f64,
    pub g_inf_cap: f64,
    pub beta_period: C64,
    pub tau: C64,
    pub theta: ThetaParams,
    pub nu_inf: C64,
    pub c: C64,
    pub contours: ContourSet,
}

impl EllipticSetup {
    pub fn new(mp: ModulationPoint) -> Result<Self> {
        let omega_int = mp.omega_integral();
        let omega_closed = mp.omega_closed()?;
        let g_inf_cap = mp.g_inf_cap().re;
        let beta_period = mp.beta_period();
        let theta = ThetaParams::from_modulus(mp.m, 1e-17)?;
        let tau = theta.tau;
        let nu_inf = nu_inf_raw(&mp) / beta_period;
        let ks = C64::new(k_star(&mp), 0.0);
        let nu_ks = abel_nu_raw(&mp, ks, Side::Auto) / beta_period;
        let c = nu_ks + (1.0 + tau) * 0.5;
        let contours = trace_b_tilde(&mp)?;
        Ok(EllipticSetup { mp, omega_int, omega_closed, g_inf_cap, beta_period, tau, theta, nu_inf, c, contours })
    }

    pub fn at(xi: f64, q_o: f64) -> Result<Self> {
        Self::new(solve_modulation(xi, q_o)?)
    }

    /// Abel map ν(k), normalized by the β-period.
    pub fn abel_nu(&self, k: C64, side: Side) -> C64 {
        abel_nu_raw(&self.mp, k, side) / self.beta_period
    }

    pub fn in_region_d(&self, k: C64) -> bool {
        self.contours.in_region_d(k)
    }

    /// γ with either the straight second cut B′ or the traced cut B̃.
    pub fn gamma(&self, k: C64, cut: CutKind, side: Side) -> C64 {
        let g = self.mp.gamma_straight(k, side);
        match cut {
            CutKind::Traced if self.in_region_d(k) => -g,
            _ => g,
        }
    }

    /// h with its true cut B̃: Ω − h_Γ inside 𝒟, h_Γ elsewhere.
    pub fn h(&self, k: C64) -> C64 {
        let hg = self.mp.h_gamma(k, Side::Auto);
        if self.in_region_d(k) {
            self.omega_int - hg
        } else {
            hg
        }
    }
}

/// k* = q_o α_re/(q_o + α_im), the real point fixing the theta shift c.
pub fn k_star(mp: &ModulationPoint) -> f64 {
    mp.q_o * mp.a() / (mp.q_o + mp.b())
}

fn abel_nu_raw(mp: &ModulationPoint, k: C64, side: Side) -> C64 {
    let f = |z: C64| 1.0 / mp.gamma_straight(z, Side::Auto);
    let sing_end = (k - mp.alpha).norm() < 1e-14 || (k - mp.alpha.conj()).norm() < 1e-14;
    mp.path_integral(&f, k, side, sing_end)
}

fn nu_inf_raw(mp: &ModulationPoint) -> C64 {
    let f = |z: C64| 1.0 / mp.gamma_straight(z, Side::Auto);
    let y = mp.y_top();
    quad::segment(&f, C64::new(0.0, mp.q_o), C64::new(0.0, y), true, false, QuadTol::default())
        + quad::ray(&f, C64::new(0.0, y), I, QuadTol::default())
}

/// Cut geometry at one ξ. `b_tilde` runs ᾱ → k_o → α.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContourSet {
    pub q_o: f64,
    pub alpha: C64,
    pub k_o: f64,
    pub b_tilde: Vec<C64>,
    /// Largest |Im h_Γ| recorded at a traced vertex.
    pub max_residual: f64,
}

impl ContourSet {
    pub fn b_segment(&self) -> (C64, C64) {
        (C64::new(0.0, -self.q_o), C64::new(0.0, self.q_o))
    }

    pub fn b_prime(&self) -> (C64, C64) {
        (self.alpha.conj(), self.alpha)
    }

    /// Closed polygon bounding 𝒟: B̃ upward, then B′ back down (implicit closing edge).
    pub fn region_d(&self) -> &[C64] {
        &self.b_tilde
    }

    pub fn in_region_d(&self, k: C64) -> bool {
        in_polygon(k, &self.b_tilde)
    }

    pub fn dist_to_b_tilde(&self, k: C64) -> f64 {
        crate::util::dist_to_polyline(k, &self.b_tilde)
    }

    /// Largest distance from a B̃ vertex to the segment B.
    pub fn distance_from_b(&self) -> f64 {
        let (lo, hi) = self.b_segment();
        self.b_tilde.iter().map(|&z| dist_to_segment(z, lo, hi)).fold(0.0, f64::max)
    }

    /// Index of the k_o vertex.
    pub fn k_o_index(&self) -> usize {
        self.b_tilde.len() / 2
    }
}

/// Trace the zero-contour Im h = 0 from k_o down to ᾱ; the upper half is its mirror image.
pub fn trace_b_tilde(mp: &ModulationPoint) -> Result<ContourSet> {
    let ko = C64::new(mp.k_o, 0.0);
    let target = mp.alpha.conj();
    let scale = mp.b().max(1e-3);
    let ds_max = 0.01 * scale.max(0.2);
    let h0 = mp.h_gamma(ko, Side::Auto);
    let dh = |z: C64| mp.dh(z, Side::Auto);
    let seg_tol = QuadTol { abs: 1e-15, rel: 1e-14, max_panels: 200 };
    let mut pts = vec![ko];
    let mut k = ko;
    let mut hk = C64::new(h0.re, 0.0);
    let mut max_res: f64 = h0.im.abs();
    let mut dir = -I;
    let box_size = 10.0 * (mp.q_o + mp.xi.abs());
    for _ in 0..200_000 {
        let dist = (k - target).norm();
        if dist < 1e-7 * scale {
            break;
        }
        let step = ds_max.min(0.5 * dist);
        let g = dh(k);
        let mut t = if g.norm() < 1e-12 { dir } else { g.conj() / g.norm() };
        if (t * dir.conj()).re < 0.0 {
            t = -t;
        }
        let mut kn = k + t * step;
        let mut hn = hk + quad::segment(&dh, k, kn, false, false, seg_tol);
        for _ in 0..8 {
            if hn.im.abs() < 1e-13 {
                break;
            }
            let gn = dh(kn);
            let den = (gn * t).re;
            if den.abs() < 1e-300 {
                break;
            }
            let mut s = -hn.im / den;
            if s.abs() > step {
                s = step * s.signum();
            }
            let kc = kn + I * t * s;
            hn += quad::segment(&dh, kn, kc, false, false, seg_tol);
            kn = kc;
        }
        if kn.norm() > box_size || kn.im > 0.0 {
            return Err(Error::Geometry(format!("zero-contour tracer left the search box at {kn} (xi = {})", mp.xi)));
        }
        max_res = max_res.max(hn.im.abs());
        dir = kn - k;
        k = kn;
        hk = hn;
        pts.push(k);
    }
    if (k - target).norm() > 1e-5 * scale {
        return Err(Error::Geometry(format!("zero-contour tracer stalled at {k}, target {target}")));
    }
    pts.push(target);
    let mut full: Vec<C64> = pts.iter().rev().copied().collect();
    full.extend(pts.iter().skip(1).map(|z| z.conj()));
    Ok(ContourSet { q_o: mp.q_o, alpha: mp.alpha, k_o: mp.k_o, b_tilde: full, max_residual: max_res })
}
