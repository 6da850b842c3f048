//! Speed of the wedge edge opened by a localized bump on the background.

use nzbc_asym::asymptotics::exact_one_soliton;
use nzbc_asym::oracle::{evolve, OracleGrid};
use nzbc_asym::spectral::{v_o, ScatteringData};
use nzbc_asym::C64;

fn main() -> nzbc_asym::Result<()> {
    let sd = ScatteringData::soliton(1.0, C64::new(0.0, -1.1))?;
    let g = OracleGrid { l: 80.0, n: 4096, dt: 2e-3, t_max: 10.0, snapshot_dt: 0.5, dt_factor: 5.0 };
    let q0: Vec<C64> = g
        .x()
        .iter()
        .map(|&x| Ok(exact_one_soliton(x, 0.0, &sd)? + 0.3 * (-((x + 5.0) / 2f64.sqrt()).powi(2)).exp()))
        .collect::<nzbc_asym::Result<_>>()?;
    let run = evolve(&q0, &g, 1.0)?;
    println!("edge speed {:.4}, light cone {:.4}", run.wedge_speed(6.0, 10.0, 1e-2)?, -v_o(1.0));
    Ok(())
}
