//! Region of a few eigenvalues and their window velocities.

use nzbc_asym::classify::classify;
use nzbc_asym::spectral::ScatteringData;
use nzbc_asym::C64;

fn main() -> nzbc_asym::Result<()> {
    for p in [C64::new(-2.0, -0.5), C64::new(-0.1, -1.02), C64::new(-0.05, -0.95), C64::new(-0.1, -0.5)] {
        let r = classify(&ScatteringData::soliton(1.0, p)?)?;
        println!("{p:>12}: {:<8} v_s = {:>9.5}  ṽ_s = {:?}  v_w = {:?}", r.regime.to_string(), r.v_s, r.v_tilde_s(), r.v_w());
    }
    Ok(())
}
