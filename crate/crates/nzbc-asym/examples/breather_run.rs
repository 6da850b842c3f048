//! Split-step run of a stationary breather against the exact solution.

use nzbc_asym::asymptotics::exact_one_soliton;
use nzbc_asym::oracle::{evolve, OracleGrid};
use nzbc_asym::spectral::ScatteringData;
use nzbc_asym::C64;

fn main() -> nzbc_asym::Result<()> {
    let sd = ScatteringData::soliton(1.0, C64::new(0.0, -1.2))?;
    let g = OracleGrid { l: 40.0, n: 2048, dt: 2e-3, t_max: 4.0, snapshot_dt: 1.0, dt_factor: 5.0 };
    let q0: Vec<C64> = g.x().iter().map(|&x| exact_one_soliton(x, 0.0, &sd)).collect::<Result<_, _>>()?;
    let run = evolve(&q0, &g, 1.0)?;
    for (t, snap) in run.times.iter().zip(&run.snapshots) {
        let mut err: f64 = 0.0;
        for (&x, q) in run.x.iter().zip(snap) {
            err = err.max((q - exact_one_soliton(x, *t, &sd)?).norm());
        }
        println!("t = {t}: max |q| = {:.6}, error {err:.2e}", snap.iter().map(|q| q.norm()).fold(0.0, f64::max));
    }
    Ok(())
}
