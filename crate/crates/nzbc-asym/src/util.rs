//! Small numerical helpers shared across modules.

use num_complex::Complex64 as C64;

/// Brent's method on a sign-changing bracket.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    Some(b)
}

/// Distance from z to the segment [a, b].
pub fn dist_to_segment(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

pub fn dist_to_polyline(z: C64, pts: &[C64]) -> f64 {
    pts.windows(2).map(|w| dist_to_segment(z, w[0], w[1])).fold(f64::INFINITY, f64::min)
}

/// Even-odd point-in-polygon test (polygon implicitly closed).
pub fn in_polygon(z: C64, poly: &[C64]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Whether the open segments [a,b] and [c,d] intersect.
pub fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let orient = |p: C64, q: C64, r: C64| ((q - p).conj() * (r - p)).im;
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_cubic() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn polygon_membership() {
        let sq = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        assert!(in_polygon(C64::new(0.5, 0.5), &sq));
        assert!(!in_polygon(C64::new(1.5, 0.5), &sq));
        assert!(segments_cross(C64::new(0.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0), C64::new(1.0, 0.0)));
        assert!((dist_to_segment(C64::new(0.5, 1.0), sq[0], sq[1]) - 1.0).abs() < 1e-15);
    }
}
