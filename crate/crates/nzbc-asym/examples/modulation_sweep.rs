//! Branch point α(ξ), modulus m(ξ) and the frequency across the wedge.

use nzbc_asym::modulation::solve_modulation;
use nzbc_asym::spectral::v_o;

fn main() -> nzbc_asym::Result<()> {
    let vo = v_o(1.0);
    println!("{:>8} {:>10} {:>10} {:>8} {:>10}", "xi", "Re α", "Im α", "m", "Ω");
    for j in 1..10 {
        let xi = vo * (1.0 - j as f64 / 10.0);
        let mp = solve_modulation(xi, 1.0)?;
        println!("{xi:>8.4} {:>10.6} {:>10.6} {:>8.5} {:>10.6}", mp.alpha.re, mp.alpha.im, mp.m, mp.omega_closed()?);
    }
    Ok(())
}
