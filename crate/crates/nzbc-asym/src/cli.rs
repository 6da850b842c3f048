//! Command runners behind the `nzbc` binary.

use crate::asymptotics::AsymptoticField;
use crate::classify::{classify_with, RegimeReport};
use crate::config::{initial_field, Format, RunConfig};
use crate::error::{Error, Result};
use crate::modulation::solve_modulation;
use crate::oracle::{compare_ray, evolve, noise_horizon, OracleRun};
use crate::selfcheck;
use crate::spectral::v_o;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "nzbc", version, about = "Focusing NLS on a nonzero background: regimes, asymptotic fields, split-step numerics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for oracle noise.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override a tolerance, e.g. --tol-override edge_threshold=0.03. Repeatable.
    #[arg(long = "tol-override", global = true, value_name = "KEY=VAL")]
    pub tol_override: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Region of the eigenvalue and the window velocities.
    Classify,
    /// Modulation parameters on the ξ grid.
    ModulationTable,
    /// Leading-order field on the x–t grid.
    Field,
    /// Time series along the soliton ray (v_s, or ṽ_s when trapped).
    SolitonRay,
    /// Time series along the wake ray v_w.
    WakeRay,
    /// Split-step run of the configured initial datum.
    Simulate,
    /// Split-step run against the asymptotic field along rays.
    Compare,
    /// Property checks; exits nonzero on any failure.
    Selftest {
        /// Also run the slow checks (oracle, wedge, regime scan).
        #[arg(long)]
        full: bool,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

/// A table cell.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // shortest representation that round-trips
            Cell::Num(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: vec![] }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Rows as objects keyed by column.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m = self.columns.iter().zip(r).map(|(k, v)| (k.to_string(), json!(v))).collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }

    fn all_finite(&self) -> bool {
        self.rows.iter().flatten().all(|c| !matches!(c, Cell::Num(v) if !v.is_finite()))
    }
}

/// What a command produced: a table for CSV, a document for JSON, a note for stderr.
#[derive(Clone, Debug)]
pub struct Product {
    pub table: Table,
    pub json: Value,
    pub summary: String,
    /// Extra document written next to the main output (run manifest).
    pub manifest: Option<Value>,
    pub success: bool,
}

impl Product {
    fn tabular(table: Table, summary: String) -> Self {
        let json = table.to_json();
        Product { table, json, summary, manifest: None, success: true }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => Ok(serde_json::to_string_pretty(&self.json).expect("serializable") + "\n"),
        }
    }
}

fn need_config(cfg: Option<&RunConfig>) -> Result<&RunConfig> {
    cfg.ok_or_else(|| Error::Config("this command needs --config".into()))
}

fn field_for(cfg: &RunConfig) -> Result<(AsymptoticField, RegimeReport)> {
    let sd = cfg.scattering_data()?;
    let report = classify_with(&sd, &cfg.tolerances.classify_options())?;
    let f = AsymptoticField::with_report(sd, report.clone(), cfg.tolerances.field_options())?;
    Ok((f, report))
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<Product> {
    let sd = cfg.scattering_data()?;
    let r = classify_with(&sd, &cfg.tolerances.classify_options())?;
    let opt = |v: Option<f64>| v.map(Cell::Num).unwrap_or(Cell::Text(String::new()));
    let residual = r.roots_in_window.iter().map(|w| w.residual).fold(0.0, f64::max);
    let mut t = Table::new(&["p_re", "p_im", "regime", "v_o", "v_s", "v_tilde_s", "v_w", "max_root_residual"]);
    t.push(vec![
        sd.p.re.into(),
        sd.p.im.into(),
        r.regime.to_string().into(),
        r.v_o.into(),
        r.v_s.into(),
        opt(r.v_tilde_s()),
        opt(r.v_w()),
        residual.into(),
    ]);
    let mut summary = format!("p = {}: {} (v_o = {:.6}, v_s = {:.6}", sd.p, r.regime, r.v_o, r.v_s);
    if let Some(v) = r.v_tilde_s() {
        summary += &format!(", ṽ_s = {v:.6}");
    }
    if let Some(v) = r.v_w() {
        summary += &format!(", v_w = {v:.6}");
    }
    summary += ")";
    for w in &r.warnings {
        summary += &format!("\nwarning: {w}");
    }
    let json = json!({ "scattering": cfg.scattering, "report": r });
    Ok(Product { table: t, json, summary, manifest: None, success: true })
}

pub fn cmd_modulation_table(cfg: &RunConfig) -> Result<Product> {
    let q = cfg.scattering.q_o;
    let xis = match &cfg.xi_grid {
        Some(g) => g.values(),
        None => {
            let vo = v_o(q);
            (1..=50).map(|j| vo * (1.0 - j as f64 / 51.0)).collect()
        }
    };
    let rows: Vec<Vec<Cell>> = xis
        .par_iter()
        .map(|&xi| {
            let mp = solve_modulation(xi, q)?;
            let g = mp.g_inf_cap();
            let res = mp.residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            Ok(vec![
                xi.into(),
                mp.alpha.re.into(),
                mp.alpha.im.into(),
                mp.m.into(),
                mp.k_o.into(),
                mp.omega_integral().into(),
                mp.omega_closed()?.into(),
                g.re.into(),
                g.im.into(),
                res.into(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&[
        "xi", "alpha_re", "alpha_im", "m", "k_o", "omega_integral", "omega_closed", "g_inf_re", "g_inf_im", "max_residual",
    ]);
    t.rows = rows;
    let n = t.rows.len();
    Ok(Product::tabular(t, format!("{n} modulation points")))
}

const FIELD_COLUMNS: [&str; 7] = ["x", "t", "xi", "window", "re_q", "im_q", "abs_q"];

fn field_row(f: &AsymptoticField, x: f64, t: f64) -> Result<Vec<Cell>> {
    let q = f.evaluate(x, t)?;
    let w = f.window(x / t)?;
    Ok(vec![x.into(), t.into(), (x / t).into(), w.label().into(), q.re.into(), q.im.into(), q.norm().into()])
}

pub fn cmd_field(cfg: &RunConfig) -> Result<Product> {
    let grid = cfg.field.as_ref().ok_or_else(|| Error::Config("missing 'field' block".into()))?;
    let (f, report) = field_for(cfg)?;
    let pts: Vec<(f64, f64)> =
        grid.t.values().iter().flat_map(|&t| grid.x.values().into_iter().map(move |x| (x, t))).collect();
    // order-preserving parallel map: output does not depend on scheduling
    let rows: Vec<Vec<Cell>> = pts.par_iter().map(|&(x, t)| field_row(&f, x, t)).collect::<Result<_>>()?;
    let mut t = Table::new(&FIELD_COLUMNS);
    t.rows = rows;
    let n = t.rows.len();
    Ok(Product::tabular(t, format!("{n} field points, regime {}", report.regime)))
}

fn ray_product(cfg: &RunConfig, f: &AsymptoticField, v: f64, label: &str) -> Result<Product> {
    let times = cfg.ray_times.as_ref().ok_or_else(|| Error::Config("missing 'ray_times'".into()))?.values();
    let rows: Vec<Vec<Cell>> = times
        .par_iter()
        .map(|&t| {
            let q = f.evaluate(v * t, t)?;
            Ok(vec![t.into(), (v * t).into(), v.into(), q.re.into(), q.im.into(), q.norm().into()])
        })
        .collect::<Result<_>>()?;
    let mut tab = Table::new(&["t", "x", "v", "re_q", "im_q", "abs_q"]);
    tab.rows = rows;
    Ok(Product::tabular(tab, format!("{label} ray v = {v:.9}, regime {}", f.report.regime)))
}

pub fn cmd_soliton_ray(cfg: &RunConfig) -> Result<Product> {
    let (f, r) = field_for(cfg)?;
    let v = if f.sd.reflection.is_zero() { r.v_s } else { r.soliton_velocity() };
    ray_product(cfg, &f, v, "soliton")
}

pub fn cmd_wake_ray(cfg: &RunConfig) -> Result<Product> {
    let (f, r) = field_for(cfg)?;
    let v = r.v_w().ok_or_else(|| Error::Domain(format!("no wake velocity in region {}", r.regime)))?;
    if f.sd.reflection.is_zero() {
        return Err(Error::Domain("the wake needs a nonzero reflection coefficient".into()));
    }
    ray_product(cfg, &f, v, "wake")
}

fn run_oracle(cfg: &RunConfig, seed: u64) -> Result<(OracleRun, Value)> {
    let sd = cfg.scattering_data()?;
    let (grid, block) = cfg.oracle_grid()?;
    let q0 = initial_field(&sd, &grid, block, seed)?;
    let run = evolve(&q0, &grid, sd.q_o)?;
    let manifest = json!({
        "scattering": cfg.scattering,
        "oracle": block,
        "seed": seed,
        "dt_factor": grid.dt_factor,
        "dx": grid.dx(),
        "noise_horizon": noise_horizon(sd.q_o),
        "scheme": "Strang split-step Fourier on the deviation from the background, 2/3 dealiasing",
        "times": run.times,
        "deviation_mass": run.deviation_mass,
        "max_amplitude": run.max_amplitude,
    });
    Ok((run, manifest))
}

pub fn cmd_simulate(cfg: &RunConfig, seed: u64) -> Result<Product> {
    let (run, manifest) = run_oracle(cfg, seed)?;
    let mut t = Table::new(&["t", "x", "re_q", "im_q"]);
    for (ti, snap) in run.times.iter().zip(&run.snapshots) {
        for (x, q) in run.x.iter().zip(snap) {
            t.push(vec![(*ti).into(), (*x).into(), q.re.into(), q.im.into()]);
        }
    }
    let json = json!({
        "manifest": manifest,
        "x": run.x,
        "times": run.times,
        "snapshots": run.snapshots,
    });
    let summary = format!("{} snapshots of {} points, final max |q| = {:.6}", run.times.len(), run.x.len(), run.max_amplitude.last().copied().unwrap_or(f64::NAN));
    Ok(Product { table: t, json, summary, manifest: Some(manifest), success: true })
}

pub fn cmd_compare(cfg: &RunConfig, seed: u64) -> Result<Product> {
    let cmp = cfg.compare.as_ref().ok_or_else(|| Error::Config("missing 'compare' block".into()))?;
    let (f, report) = field_for(cfg)?;
    let (run, manifest) = run_oracle(cfg, seed)?;
    let times = cmp.times.values();
    let rays = if cmp.rays.is_empty() {
        vec![if f.sd.reflection.is_zero() { report.v_s } else { report.soliton_velocity() }]
    } else {
        cmp.rays.clone()
    };
    let mut t = Table::new(&["v", "t", "x", "re_q_num", "im_q_num", "re_q_asym", "im_q_asym", "abs_err", "phase_diff"]);
    let mut worst: f64 = 0.0;
    for &v in &rays {
        for r in compare_ray(&run, &f, v, &times)? {
            worst = worst.max(r.abs_err);
            t.push(vec![
                r.v.into(),
                r.t.into(),
                r.x.into(),
                r.q_num.re.into(),
                r.q_num.im.into(),
                r.q_asym.re.into(),
                r.q_asym.im.into(),
                r.abs_err.into(),
                r.phase_diff.into(),
            ]);
        }
    }
    let edge = match cmp.edge_window {
        Some([t0, t1]) => Some(run.wedge_speed(t0, t1, cfg.tolerances.edge_threshold)?),
        None => None,
    };
    let mut summary = format!("max |q_num − q_asym| = {worst:.3e} over {} rows", t.rows.len());
    if let Some(s) = edge {
        summary += &format!("; wedge-edge speed {s:.4} (light cone {:.4})", -v_o(cfg.scattering.q_o));
    }
    let json = json!({ "rows": t.to_json(), "max_abs_err": worst, "wedge_speed": edge, "manifest": manifest });
    Ok(Product { table: t, json, summary, manifest: Some(manifest), success: true })
}

pub fn cmd_selftest(full: bool, seed: u64) -> Product {
    let mut checks = selfcheck::quick_suite(seed);
    if full {
        let (c, reports) = selfcheck::regime_reproduction();
        checks.push(c);
        checks.push(selfcheck::soliton_delay(&reports));
        checks.push(selfcheck::omega_consistency());
        checks.push(selfcheck::oracle_validation());
        checks.push(selfcheck::wedge_check());
    }
    let mut t = Table::new(&["check", "pass", "detail"]);
    for c in &checks {
        t.push(vec![c.name.into(), c.pass.into(), c.detail.clone().into()]);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let summary = format!("{}/{} checks passed", checks.len() - failed, checks.len());
    Product { json: json!(checks), table: t, summary, manifest: None, success: failed == 0 }
}

/// Run one command against an already-loaded config.
pub fn execute(command: Command, cfg: Option<&RunConfig>, seed: u64) -> Result<Product> {
    let p = match command {
        Command::Classify => cmd_classify(need_config(cfg)?)?,
        Command::ModulationTable => cmd_modulation_table(need_config(cfg)?)?,
        Command::Field => cmd_field(need_config(cfg)?)?,
        Command::SolitonRay => cmd_soliton_ray(need_config(cfg)?)?,
        Command::WakeRay => cmd_wake_ray(need_config(cfg)?)?,
        Command::Simulate => cmd_simulate(need_config(cfg)?, seed)?,
        Command::Compare => cmd_compare(need_config(cfg)?, seed)?,
        Command::Selftest { full } => cmd_selftest(full, seed),
    };
    if !p.table.all_finite() {
        return Err(Error::Consistency("non-finite value in output".into()));
    }
    Ok(p)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Parse-free entry point: load config, apply overrides, run, write output.
/// Returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        // a second call in the same process (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cfg = match &cli.config {
        Some(path) => {
            let mut c = RunConfig::load(path)?;
            for kv in &cli.tol_override {
                c.apply_override(kv)?;
            }
            Some(c)
        }
        None if !cli.tol_override.is_empty() => return Err(Error::Config("--tol-override needs --config".into())),
        None => None,
    };
    let product = execute(cli.command, cfg.as_ref(), cli.seed)?;
    let out_block = cfg.as_ref().and_then(|c| c.output.clone());
    let format = cli
        .format
        .map(Format::from)
        .or_else(|| out_block.as_ref().and_then(|o| o.format))
        .unwrap_or(Format::Csv);
    let out = cli.out.clone().or_else(|| out_block.and_then(|o| o.path.map(PathBuf::from)));
    let text = product.render(format)?;
    match &out {
        Some(path) => {
            write_file(path, &text)?;
            if let (Some(m), Format::Csv) = (&product.manifest, format) {
                write_file(&manifest_path(path), &(serde_json::to_string_pretty(m).expect("serializable") + "\n"))?;
            }
        }
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| Error::Config(format!("stdout: {e}")))?;
        }
    }
    eprintln!("{}", product.summary);
    Ok(if product.success { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_tables() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1.into(), "x".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n0.1,x\n");
        assert_eq!(t.to_json(), json!([{"a": 0.1, "b": "x"}]));
        t.push(vec![f64::NAN.into(), "y".into()]);
        assert!(!t.all_finite());
    }

    #[test]
    fn cli_parses_flags() {
        let c = Cli::try_parse_from([
            "nzbc", "field", "--config", "a.json", "--format", "json", "--threads", "2", "--tol-override", "dt_factor=3",
        ])
        .unwrap();
        assert_eq!(c.command, Command::Field);
        assert_eq!(c.format, Some(FormatArg::Json));
        assert_eq!(c.tol_override, vec!["dt_factor=3".to_string()]);
        assert!(Cli::try_parse_from(["nzbc", "field", "--format", "xml"]).is_err());
    }
}
