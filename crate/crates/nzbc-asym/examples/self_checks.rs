//! The fast property checks behind `nzbc selftest`.

fn main() {
    for c in nzbc_asym::selfcheck::quick_suite(1) {
        println!("{:<32} {} {}", c.name, if c.pass { "ok  " } else { "FAIL" }, c.detail);
    }
}
