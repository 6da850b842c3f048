//! |q| of the leading-order field along a fixed time, one line per window.

use nzbc_asym::asymptotics::AsymptoticField;
use nzbc_asym::spectral::{Reflection, ScatteringData};
use nzbc_asym::C64;

fn main() -> nzbc_asym::Result<()> {
    let r = Reflection::Gaussian { amplitude: 0.3, width: 2.0 };
    let sd = ScatteringData::new(1.0, C64::new(1.0, 0.0), C64::new(-2.0, -0.5), C64::new(1.0, 0.0), r)?;
    let f = AsymptoticField::new(sd)?;
    let t = 10.0;
    for x in [-120.0, -80.0, -60.0, -50.0, -30.0, -10.0] {
        let q = f.evaluate(x, t)?;
        println!("x = {x:>7}: {:<20} |q| = {:.6}", f.window(x / t)?.label(), q.norm());
    }
    Ok(())
}
