//! Regime classification of the eigenvalue p from the zero set of Re(i h)(ξ, p) on (v_o, 0).

use crate::error::{Error, Result};
use crate::modulation::{solve_modulation, trace_b_tilde, ModulationPoint};
use crate::spectral::{velocities, ScatteringData, Side};
use crate::util::brent;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    D1,
    D2plus,
    D2minus,
    D3,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::D1 => "D1",
            Regime::D2plus => "D2plus",
            Regime::D2minus => "D2minus",
            Regime::D3 => "D3",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootKind {
    /// Trapped-soliton velocity ṽ_s.
    Trap,
    /// Wake velocity v_w: p sits on the moving cut.
    Wake,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRoot {
    pub xi: f64,
    pub kind: RootKind,
    /// |Re(i h)(ξ, p)| at the refined root.
    pub residual: f64,
    /// Distance from p to the traced cut at the root (none at the window edge).
    pub cut_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub v_o: f64,
    pub v_s: f64,
    pub roots_in_window: Vec<WindowRoot>,
    /// (ξ, profile value) at the scan nodes where the modulation solve succeeded.
    pub diagnostics: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl RegimeReport {
    pub fn v_tilde_s(&self) -> Option<f64> {
        self.roots_in_window.iter().find(|r| r.kind == RootKind::Trap).map(|r| r.xi)
    }

    pub fn v_w(&self) -> Option<f64> {
        self.roots_in_window.iter().find(|r| r.kind == RootKind::Wake).map(|r| r.xi)
    }

    /// The soliton velocity actually carried by the solution: v_s or ṽ_s.
    pub fn soliton_velocity(&self) -> f64 {
        match self.regime {
            Regime::D1 | Regime::D3 => self.v_s,
            Regime::D2plus | Regime::D2minus => self.v_tilde_s().unwrap_or(self.v_s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub grid_nodes: usize,
    pub root_tol: f64,
    /// Largest distance from p to the traced cut for a root to count as a wake root,
    /// relative to max(α_im, 0.2).
    pub wake_cut_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { grid_nodes: 400, root_tol: 1e-10, wake_cut_tol: 5e-3 }
    }
}

/// ξ nodes in (v_o, 0): uniform interior nodes plus a geometric run toward both ends.
pub fn window_grid(v_o: f64, n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (1..=n).map(|j| v_o * (1.0 - j as f64 / (n + 1) as f64)).collect();
    let h = v_o.abs() / (n + 1) as f64;
    for j in 1..=8 {
        let s = h * 10f64.powi(-j);
        if j <= 2 {
            xs.push(-s);
        }
        xs.push(v_o + s);
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    xs
}

type GridKey = (u64, usize);

fn grid_cache() -> &'static Mutex<HashMap<GridKey, Arc<Vec<Option<ModulationPoint>>>>> {
    static CACHE: OnceLock<Mutex<HashMap<GridKey, Arc<Vec<Option<ModulationPoint>>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Modulation points on `window_grid`, computed once per (q_o, n) and shared.
pub fn modulation_grid(q_o: f64, n: usize) -> Arc<Vec<Option<ModulationPoint>>> {
    let key = (q_o.to_bits(), n);
    if let Some(g) = grid_cache().lock().unwrap().get(&key) {
        return g.clone();
    }
    let xs = window_grid(crate::spectral::v_o(q_o), n);
    let pts: Vec<Option<ModulationPoint>> = xs.par_iter().map(|&xi| solve_modulation(xi, q_o).ok()).collect();
    let arc = Arc::new(pts);
    grid_cache().lock().unwrap().insert(key, arc.clone());
    arc
}

/// α_re at the ξ where α_im first reaches |Im p|, i.e. where the band of B′ starts to
/// contain p. None when |Im p| ≥ q_o (never reached).
pub fn band_entry_re(q_o: f64, p: C64) -> Option<f64> {
    let y = p.im.abs();
    if y >= q_o {
        return None;
    }
    let vo = crate::spectral::v_o(q_o);
    let f = |xi: f64| solve_modulation(xi, q_o).map_or(f64::NAN, |mp| mp.b() - y);
    let (lo, hi) = (vo * (1.0 - 1e-8), vo.abs() * -1e-5);
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return None;
    }
    let xi = brent(f, lo, hi, 1e-13, 200)?;
    solve_modulation(xi, q_o).ok().map(|mp| mp.a())
}

/// Re(i h)(ξ, p) with the straight second cut, with its sign unfolded across B′.
///
/// h_Γ flips the sign of its imaginary part when B′ sweeps across p. α_re and α_im
/// both increase with ξ, so B′ has swept p exactly when p is inside the band and
/// α_re has passed Re p since the band reached p. The result is continuous in ξ and
/// vanishes where Re(i h) does, including where B̃ crosses p.
pub fn profile_at(mp: &ModulationPoint, p: C64, entry_re: Option<f64>) -> f64 {
    let v = -mp.h_gamma(p, Side::Auto).im;
    let swept = match entry_re {
        Some(a0) => p.im.abs() < mp.b() && a0 < p.re && p.re < mp.a(),
        None => false,
    };
    if swept {
        -v
    } else {
        v
    }
}

/// Sampled profile on the cached grid.
pub fn imh_profile(sd: &ScatteringData, n: usize) -> Vec<(f64, f64)> {
    let grid = modulation_grid(sd.q_o, n);
    let xs = window_grid(sd.v_o(), n);
    let entry = band_entry_re(sd.q_o, sd.p);
    xs.par_iter()
        .zip(grid.par_iter())
        .map(|(&xi, mp)| (xi, mp.as_ref().map_or(f64::NAN, |mp| profile_at(mp, sd.p, entry))))
        .collect()
}

fn profile_xi(xi: f64, sd: &ScatteringData, entry: Option<f64>) -> f64 {
    solve_modulation(xi, sd.q_o).map_or(f64::NAN, |mp| profile_at(&mp, sd.p, entry))
}

fn label_root(xi: f64, sd: &ScatteringData, opts: &ClassifyOptions) -> Result<(RootKind, f64)> {
    let mp = solve_modulation(xi, sd.q_o)?;
    let cs = trace_b_tilde(&mp)?;
    let d = cs.dist_to_b_tilde(sd.p);
    let kind = if d < opts.wake_cut_tol * mp.b().max(0.2) { RootKind::Wake } else { RootKind::Trap };
    Ok((kind, d))
}

pub fn classify(sd: &ScatteringData) -> Result<RegimeReport> {
    classify_with(sd, &ClassifyOptions::default())
}

pub fn classify_with(sd: &ScatteringData, opts: &ClassifyOptions) -> Result<RegimeReport> {
    sd.validate()?;
    let (vo, vs) = velocities(sd)?;
    let prof = imh_profile(sd, opts.grid_nodes);
    let mut warnings = Vec::new();
    let failed = prof.iter().filter(|(_, v)| v.is_nan()).count();
    if failed > 0 {
        warnings.push(format!("{failed} grid nodes failed the modulation solve"));
    }
    let entry = band_entry_re(sd.q_o, sd.p);
    let valid: Vec<(f64, f64)> = prof.iter().copied().filter(|(_, v)| v.is_finite()).collect();
    let mut roots = Vec::new();
    for w in valid.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if f0 == 0.0 {
            roots.push(x0);
            continue;
        }
        if f0.signum() != f1.signum() && f1 != 0.0 {
            let r = brent(|x| profile_xi(x, sd, entry), x0, x1, opts.root_tol, 200)
                .ok_or_else(|| Error::Classification(format!("root refinement failed in [{x0}, {x1}]")))?;
            roots.push(r);
        }
    }
    for w in roots.windows(2) {
        if (w[1] - w[0]).abs() < 2.0 * vo.abs() / opts.grid_nodes as f64 {
            warnings.push(format!("close roots at {} and {}: near a tangency boundary", w[0], w[1]));
        }
    }
    let mut window_roots = Vec::new();
    for &xi in &roots {
        let residual = profile_xi(xi, sd, entry).abs();
        let (kind, cut_distance) = label_root(xi, sd, opts)?;
        window_roots.push(WindowRoot { xi, kind, residual, cut_distance: Some(cut_distance) });
    }
    if vs == 0.0 && window_roots.is_empty() {
        // p on the imaginary axis: v_s = 0 and the trap root sits at the window edge.
        let edge = valid.last().map_or(0.0, |&(_, v)| v.abs());
        warnings.push("v_s = 0: the trapped velocity coincides with v_s at the window edge".into());
        window_roots.push(WindowRoot { xi: 0.0, kind: RootKind::Trap, residual: edge, cut_distance: None });
    }
    let kinds: Vec<RootKind> = window_roots.iter().map(|r| r.kind).collect();
    let regime = if vs < vo {
        match kinds.as_slice() {
            [] => Regime::D1,
            [RootKind::Wake] => Regime::D3,
            _ => {
                return Err(Error::Classification(format!(
                    "v_s = {vs} < v_o but the window roots are {window_roots:?}"
                )))
            }
        }
    } else if vs <= 0.0 {
        match kinds.as_slice() {
            [RootKind::Trap] => Regime::D2plus,
            [RootKind::Trap, RootKind::Wake] => Regime::D2minus,
            _ => {
                return Err(Error::Classification(format!(
                    "v_o < v_s = {vs} but the window roots are {window_roots:?}"
                )))
            }
        }
    } else {
        return Err(Error::Classification(format!("v_s = {vs} is not negative")));
    };
    Ok(RegimeReport { regime, v_o: vo, v_s: vs, roots_in_window: window_roots, diagnostics: valid, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd(re: f64, im: f64) -> ScatteringData {
        ScatteringData::soliton(1.0, C64::new(re, im)).unwrap()
    }

    #[test]
    fn grid_is_sorted_inside_window() {
        let vo = crate::spectral::v_o(1.0);
        let g = window_grid(vo, 50);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > vo && *g.last().unwrap() < 0.0);
    }

    #[test]
    fn profile_sign_changes_match_figure_cases() {
        let count = |re, im| {
            let prof = imh_profile(&sd(re, im), 400);
            prof.windows(2).filter(|w| w[0].1.signum() != w[1].1.signum()).count()
        };
        assert_eq!(count(-1.24, -1.1), 0);
        assert_eq!(count(-0.082, -0.95), 2);
        assert_eq!(count(-0.214, -0.5), 1);
    }

    #[test]
    fn transmission_and_trap_examples() {
        let r = classify(&sd(-2.0, -0.5)).unwrap();
        assert_eq!(r.regime, Regime::D1);
        assert!(r.v_s < r.v_o && r.roots_in_window.is_empty());
        let r = classify(&sd(-0.1, -1.02)).unwrap();
        assert_eq!(r.regime, Regime::D2plus);
        let vt = r.v_tilde_s().unwrap();
        assert!(vt.abs() < r.v_o.abs() && vt.abs() < r.v_s.abs());
        assert!(r.roots_in_window[0].residual < 1e-9);
        let r = classify(&sd(-0.05, -0.95)).unwrap();
        assert_eq!(r.regime, Regime::D2minus);
        assert!(r.v_tilde_s().unwrap() < r.v_w().unwrap());
    }

    #[test]
    fn imaginary_eigenvalue_reports_edge_root() {
        let r = classify(&sd(0.0, -1.1)).unwrap();
        assert_eq!(r.regime, Regime::D2plus);
        assert_eq!(r.v_s, 0.0);
        assert_eq!(r.v_tilde_s(), Some(0.0));
        assert!(!r.warnings.is_empty());
    }
}
