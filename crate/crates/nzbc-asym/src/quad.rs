//! Adaptive Gauss–Kronrod quadrature along straight complex segments and rays.

use num_complex::Complex64 as C64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances for the adaptive integrator.
#[derive(Clone, Copy, Debug)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { abs: 1e-13, rel: 1e-12, max_panels: 400 }
    }
}

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += s * WGK[j];
        if j % 2 == 1 {
            rg += s * WG[j / 2];
        }
    }
    (rk * h, ((rk - rg) * h).norm())
}

/// Adaptive integral of a complex-valued function of a real variable over [a, b].
/// Globally adaptive: the panel with the largest error estimate is split until the
/// summed estimate meets the tolerance or the panel budget is spent.
pub fn integrate<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: QuadTol) -> C64 {
    let (whole, err) = gk15(f, a, b);
    let mut panels = vec![Panel { lo: a, hi: b, val: whole, err, depth: 0 }];
    let mut total_err = err;
    let mut total = whole;
    while panels.len() < tol.max_panels {
        let target = tol.abs.max(tol.rel * total.norm());
        if total_err <= target {
            break;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < 60)
            .fold((usize::MAX, -1.0), |best, (i, p)| if p.err > best.1 { (i, p.err) } else { best });
        if idx == usize::MAX {
            break;
        }
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.lo + p.hi);
        let (v1, e1) = gk15(f, p.lo, mid);
        let (v2, e2) = gk15(f, mid, p.hi);
        total += v1 + v2 - p.val;
        total_err += e1 + e2 - p.err;
        panels.push(Panel { lo: p.lo, hi: mid, val: v1, err: e1, depth: p.depth + 1 });
        panels.push(Panel { lo: mid, hi: p.hi, val: v2, err: e2, depth: p.depth + 1 });
    }
    panels.iter().map(|p| p.val).sum()
}

struct Panel {
    lo: f64,
    hi: f64,
    val: C64,
    err: f64,
    depth: u32,
}

/// ∫ f(z) dz along the segment z0 → z1. `sing0`/`sing1` mark inverse-square-root
/// endpoint behaviour, removed by the substitution t = s².
pub fn segment<F: Fn(C64) -> C64>(f: &F, z0: C64, z1: C64, sing0: bool, sing1: bool, tol: QuadTol) -> C64 {
    let d = z1 - z0;
    // Below s_min the point z0 + d s² rounds onto the endpoint; the transformed
    // integrand is smooth in s there, so it is frozen at s_min.
    let s_min = |z: C64| (8.0 * f64::EPSILON * z.norm().max(1e-300) / d.norm()).sqrt();
    match (sing0, sing1) {
        (false, false) => integrate(&|t: f64| f(z0 + d * t), 0.0, 1.0, tol) * d,
        (true, false) => {
            let lo = s_min(z0);
            integrate(&|s: f64| { let s = s.max(lo); f(z0 + d * (s * s)) * (2.0 * s) }, 0.0, 1.0, tol) * d
        }
        (false, true) => {
            let lo = s_min(z1);
            integrate(&|s: f64| { let s = s.max(lo); f(z1 - d * (s * s)) * (2.0 * s) }, 0.0, 1.0, tol) * d
        }
        (true, true) => {
            let m = z0 + d * 0.5;
            segment(f, z0, m, true, false, tol) + segment(f, m, z1, false, true, tol)
        }
    }
}

/// ∫ f(z) dz along the polyline through `pts`, singular flags applying to the first and last point.
pub fn polyline<F: Fn(C64) -> C64>(f: &F, pts: &[C64], sing_first: bool, sing_last: bool, tol: QuadTol) -> C64 {
    let n = pts.len();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n.saturating_sub(1) {
        if (pts[j + 1] - pts[j]).norm() == 0.0 {
            continue;
        }
        acc += segment(f, pts[j], pts[j + 1], sing_first && j == 0, sing_last && j + 2 == n, tol);
    }
    acc
}

/// ∫ f(z) dz along the ray z0 + s·dir, s ∈ [0, ∞). The integrand must decay faster than 1/|z|.
pub fn ray<F: Fn(C64) -> C64>(f: &F, z0: C64, dir: C64, tol: QuadTol) -> C64 {
    let g = |u: f64| {
        let w = 1.0 - u;
        let s = u / w;
        f(z0 + dir * s) / (w * w)
    };
    integrate(&g, 0.0, 1.0, tol) * dir
}

/// `integrate` over consecutive intervals of a sorted breakpoint list.
pub fn integrate_pieces<F: Fn(f64) -> C64>(f: &F, breaks: &[f64], tol: QuadTol) -> C64 {
    breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| integrate(f, w[0], w[1], tol)).sum()
}

/// Polyline integral for integrands analytic near the path except close to the points
/// in `near` and at flagged ends. Segments further than three lengths from every
/// point in `near` use a fixed 12-point Gauss rule; the rest are adaptive.
pub fn polyline_near<F: Fn(C64) -> C64>(
    f: &F,
    pts: &[C64],
    sing_first: bool,
    sing_last: bool,
    near: &[C64],
    tol: QuadTol,
) -> C64 {
    static GL12: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    let (x, w) = GL12.get_or_init(|| gauss_legendre(12));
    let n = pts.len();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n.saturating_sub(1) {
        let (a, b) = (pts[j], pts[j + 1]);
        let len = (b - a).norm();
        if len == 0.0 {
            continue;
        }
        let s0 = sing_first && j == 0;
        let s1 = sing_last && j + 2 == n;
        let close = near.iter().any(|&z| crate::util::dist_to_segment(z, a, b) < 3.0 * len);
        if s0 || s1 || close {
            acc += segment(f, a, b, s0, s1, tol);
        } else {
            let (c, h) = ((a + b) * 0.5, (b - a) * 0.5);
            let mut s = C64::new(0.0, 0.0);
            for (xi, wi) in x.iter().zip(w) {
                s += f(c + h * *xi) * *wi;
            }
            acc += s * h;
        }
    }
    acc
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(&|x: f64| C64::new(x * x * x - x, 0.0), 0.0, 2.0, QuadTol::default());
        assert!((v.re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_endpoint() {
        // ∫_0^1 dx/√(1−x²) = π/2
        let f = |z: C64| 1.0 / (1.0 - z * z).sqrt();
        let v = segment(&f, C64::new(0.0, 0.0), C64::new(1.0, 0.0), false, true, QuadTol::default());
        assert!((v.re - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ray_decay() {
        let f = |z: C64| 1.0 / (z * z);
        let v = ray(&f, C64::new(1.0, 0.0), C64::new(1.0, 0.0), QuadTol::default());
        assert!((v.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_weights() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m - 2.0 / 11.0).abs() < 1e-14);
    }
}
