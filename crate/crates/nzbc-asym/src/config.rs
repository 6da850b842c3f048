//! JSON run configuration. Complex numbers are written as [re, im].

use crate::asymptotics::{exact_one_soliton, FieldOptions};
use crate::classify::ClassifyOptions;
use crate::error::{Error, Result};
use crate::oracle::OracleGrid;
use crate::spectral::{Reflection, ScatteringData};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringBlock {
    pub q_o: f64,
    /// q_− = q_o e^{i·phase}.
    #[serde(default)]
    pub q_minus_phase: f64,
    pub p: C64,
    #[serde(default = "unit")]
    pub r_norm: C64,
    #[serde(default = "no_reflection")]
    pub reflection: Reflection,
}

fn unit() -> C64 {
    C64::new(1.0, 0.0)
}

fn no_reflection() -> Reflection {
    Reflection::Zero
}

impl ScatteringBlock {
    pub fn to_data(&self) -> Result<ScatteringData> {
        let qm = C64::from_polar(self.q_o, self.q_minus_phase);
        ScatteringData::new(self.q_o, qm, self.p, self.r_norm, self.reflection.clone())
    }
}

/// Either an explicit list or `n` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, n: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, n } => match n {
                0 => vec![],
                1 => vec![*start],
                _ => (0..*n).map(|j| start + (stop - start) * j as f64 / (*n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGrid {
    pub x: Grid,
    pub t: Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    /// The constant background q_−.
    Background,
    /// The exact one-soliton at t = 0.
    Soliton,
    /// One-soliton plus a Gaussian bump b·(q_−/q_o)·e^{−((x − c)/w)²}.
    SolitonBump { amplitude: f64, center: f64, width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    /// Ray velocities; empty means the soliton ray.
    #[serde(default)]
    pub rays: Vec<f64>,
    pub times: Grid,
    /// Time span for the wedge-edge speed fit.
    #[serde(default)]
    pub edge_window: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative half-width around v_s, ṽ_s, v_w treated as the ray itself.
    pub ray_half_width: f64,
    /// Band around v_o and 0 refused by the dispatcher.
    pub boundary_band: f64,
    /// ||q| − q_o| level marking the wedge edge.
    pub edge_threshold: f64,
    /// Oracle stability budget dt ≤ dt_factor·Δx².
    pub dt_factor: f64,
    /// Relative cut distance below which a window root counts as a wake root.
    pub wake_cut_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let f = FieldOptions::default();
        Tolerances {
            ray_half_width: f.ray_half_width,
            boundary_band: f.boundary_band,
            edge_threshold: 1e-2,
            dt_factor: 5.0,
            wake_cut_tol: ClassifyOptions::default().wake_cut_tol,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, key: &str, val: f64) -> Result<()> {
        if !(val > 0.0 && val.is_finite()) {
            return Err(Error::Config(format!("tolerance {key} must be positive and finite, got {val}")));
        }
        match key {
            "ray_half_width" => self.ray_half_width = val,
            "boundary_band" => self.boundary_band = val,
            "edge_threshold" => self.edge_threshold = val,
            "dt_factor" => self.dt_factor = val,
            "wake_cut_tol" => self.wake_cut_tol = val,
            _ => return Err(Error::Config(format!("unknown tolerance key '{key}'"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("ray_half_width", self.ray_half_width),
            ("boundary_band", self.boundary_band),
            ("edge_threshold", self.edge_threshold),
            ("dt_factor", self.dt_factor),
            ("wake_cut_tol", self.wake_cut_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance {k} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn field_options(&self) -> FieldOptions {
        FieldOptions { ray_half_width: self.ray_half_width, boundary_band: self.boundary_band }
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions { wake_cut_tol: self.wake_cut_tol, ..ClassifyOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    pub l: f64,
    pub n: usize,
    pub dt: f64,
    pub t_max: f64,
    pub snapshot_dt: f64,
    pub initial: InitialDatum,
    /// Amplitude of seeded, band-limited, tapered noise added to the datum.
    #[serde(default)]
    pub noise: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scattering: ScatteringBlock,
    #[serde(default)]
    pub xi_grid: Option<Grid>,
    #[serde(default)]
    pub field: Option<FieldGrid>,
    /// Times for soliton-ray and wake-ray.
    #[serde(default)]
    pub ray_times: Option<Grid>,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
    #[serde(default)]
    pub compare: Option<CompareBlock>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<OutputBlock>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scattering.to_data()?;
        self.tolerances.validate()?;
        Ok(())
    }

    pub fn scattering_data(&self) -> Result<ScatteringData> {
        self.scattering.to_data()
    }

    /// Apply a `KEY=VAL` tolerance override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("override '{kv}' is not KEY=VAL")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("override value '{v}' is not a number")))?;
        self.tolerances.set(k.trim(), v)
    }

    pub fn oracle_grid(&self) -> Result<(OracleGrid, &OracleBlock)> {
        let o = self.oracle.as_ref().ok_or_else(|| Error::Config("missing 'oracle' block".into()))?;
        let g = OracleGrid { l: o.l, n: o.n, dt: o.dt, t_max: o.t_max, snapshot_dt: o.snapshot_dt, dt_factor: self.tolerances.dt_factor };
        Ok((g, o))
    }
}

/// Initial field for the oracle on `grid`, with optional seeded noise.
pub fn initial_field(sd: &ScatteringData, grid: &OracleGrid, block: &OracleBlock, seed: u64) -> Result<Vec<C64>> {
    let xs = grid.x();
    let unit = sd.q_minus / sd.q_o;
    let mut q: Vec<C64> = match block.initial {
        InitialDatum::Background => vec![sd.q_minus; xs.len()],
        InitialDatum::Soliton => xs.iter().map(|&x| exact_one_soliton(x, 0.0, sd)).collect::<Result<_>>()?,
        InitialDatum::SolitonBump { amplitude, center, width } => xs
            .iter()
            .map(|&x| Ok(exact_one_soliton(x, 0.0, sd)? + unit * amplitude * (-((x - center) / width).powi(2)).exp()))
            .collect::<Result<_>>()?,
    };
    if block.noise > 0.0 {
        // random Fourier modes with |k| < 4q_o, tapered to vanish near the box ends
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let ks = grid.wavenumbers();
        let mut spec: Vec<C64> = ks
            .iter()
            .map(|k| {
                let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if k.abs() < 4.0 * sd.q_o { C64::new(a, b) } else { C64::new(0.0, 0.0) }
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(grid.n).process(&mut spec);
        let top = spec.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        for ((v, x), s) in q.iter_mut().zip(&xs).zip(&spec) {
            let u = (x / grid.l).abs();
            let taper = if u < 0.8 {
                1.0
            } else if u < 0.95 {
                0.5 * (1.0 + (std::f64::consts::PI * (u - 0.8) / 0.15).cos())
            } else {
                0.0
            };
            *v += s / top * block.noise * taper;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "scattering": {"q_o": 1.0, "p": [-2.0, -0.5], "reflection": {"kind": "gaussian", "amplitude": 0.3, "width": 2.0}},
        "xi_grid": {"start": -5.0, "stop": -1.0, "n": 5},
        "field": {"x": [-40.0, -32.0], "t": [4.0]}
    }"#;

    #[test]
    fn parse_and_override() {
        let mut c = RunConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.scattering.p, C64::new(-2.0, -0.5));
        assert_eq!(c.xi_grid.as_ref().unwrap().values(), vec![-5.0, -4.0, -3.0, -2.0, -1.0]);
        c.apply_override("ray_half_width=1e-6").unwrap();
        assert_eq!(c.tolerances.ray_half_width, 1e-6);
        assert!(c.apply_override("nope=1").is_err());
        assert!(c.apply_override("edge_threshold=-1").is_err());
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn malformed_configs_are_rejected() {
        assert!(RunConfig::from_json("{").is_err());
        assert!(RunConfig::from_json(r#"{"scattering": {"q_o": 1.0, "p": [2.0, -0.5]}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scattering": {"q_o": 1.0, "p": [-2.0, -0.5], "bogus": 1}}"#).is_err());
    }

    #[test]
    fn seeded_noise_is_reproducible_and_periodic() {
        let sd = ScatteringData::soliton(1.0, C64::new(0.0, -1.2)).unwrap();
        let g = OracleGrid { l: 30.0, n: 512, dt: 2e-3, t_max: 0.2, snapshot_dt: 0.1, dt_factor: 5.0 };
        let b = OracleBlock { l: 30.0, n: 512, dt: 2e-3, t_max: 0.2, snapshot_dt: 0.1, initial: InitialDatum::Soliton, noise: 1e-6 };
        let a = initial_field(&sd, &g, &b, 7).unwrap();
        assert_eq!(a, initial_field(&sd, &g, &b, 7).unwrap());
        assert_ne!(a, initial_field(&sd, &g, &b, 8).unwrap());
        assert!((a[0] - a[511]).norm() < 1e-12);
        assert!(crate::oracle::evolve(&a, &g, 1.0).is_ok());
    }
}
