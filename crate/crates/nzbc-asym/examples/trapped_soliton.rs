//! The soliton trapped inside the wedge and its wake.

use nzbc_asym::asymptotics::AsymptoticField;
use nzbc_asym::spectral::{Reflection, ScatteringData};
use nzbc_asym::C64;

fn main() -> nzbc_asym::Result<()> {
    let r = Reflection::Gaussian { amplitude: 0.3, width: 2.0 };
    let sd = ScatteringData::new(1.0, C64::new(1.0, 0.0), C64::new(-0.1, -1.02), C64::new(1.0, 0.0), r)?;
    let f = AsymptoticField::new(sd)?;
    println!("region {}", f.report.regime);
    if let Some(v) = f.report.v_tilde_s() {
        for t in [5.0, 10.0, 20.0] {
            println!("trap  t = {t:>4}: |q| = {:.6}", f.evaluate(v * t, t)?.norm());
        }
    }
    if let Some(v) = f.report.v_w() {
        for t in [5.0, 10.0, 20.0] {
            println!("wake  t = {t:>4}: |q| = {:.6}", f.evaluate(v * t, t)?.norm());
        }
    }
    Ok(())
}
