//! One line per acceptance criterion; exits nonzero if any criterion fails.

use nzbc_asym::selfcheck::{self, Check};
use std::time::Instant;

const SEED: u64 = 20240611;

fn main() {
    let mut lines: Vec<(u32, Check, f64)> = vec![];
    let clock = Instant::now();
    let (regimes, reports) = selfcheck::regime_reproduction();
    let scan = clock.elapsed().as_secs_f64();
    let timed = |f: &dyn Fn() -> Check| {
        let t = Instant::now();
        let c = f();
        (c, t.elapsed().as_secs_f64())
    };
    lines.push((1, regimes, scan));
    let (c, s) = timed(&selfcheck::omega_consistency);
    lines.push((2, c, s));
    let (c, s) = timed(&selfcheck::h_jump_suite);
    lines.push((3, c, s));
    let (c, s) = timed(&selfcheck::soliton_identity);
    lines.push((4, c, s));
    let (c, s) = timed(&|| selfcheck::phase_shift_identity(SEED));
    lines.push((5, c, s));
    let (c, s) = timed(&|| selfcheck::w_matrix_properties(SEED));
    lines.push((6, c, s));
    let (c, s) = timed(&selfcheck::oracle_validation);
    lines.push((7, c, s));
    let (c, s) = timed(&|| selfcheck::soliton_delay(&reports));
    lines.push((8, c, s));
    let (c, s) = timed(&selfcheck::wedge_check);
    lines.push((9, c, s));

    let mut failed = 0;
    for (n, c, secs) in &lines {
        if !c.pass {
            failed += 1;
        }
        println!("criterion {n}: {} [{}] {} ({secs:.1} s)", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("acceptance: {}/{} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
