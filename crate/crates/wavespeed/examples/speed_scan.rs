//! Scans the minimal wave speed across the coupling strength and prints the
//! pulled-to-pushed transition.
//!
//! ```text
//! cargo run --release --example speed_scan
//! ```

use wavespeed::bounds::inviscid_lower_bound;
use wavespeed::model::SystemParams;
use wavespeed::shooting::{min_speed, DEFAULT_TOL_C};

fn main() {
    println!("{:>10} {:>10} {:>12} {:>10}", "rho", "c*", "c*/rho^1/3", "floor");
    let mut rho = 0.25;
    while rho <= 4.1e4 {
        let p = SystemParams::new(0.0, rho).expect("valid parameters");
        match min_speed(&p, DEFAULT_TOL_C) {
            Ok(out) => println!(
                "{:>10.3e} {:>10.5} {:>12.5} {:>10.5}",
                rho,
                out.estimate.value,
                out.estimate.value / rho.cbrt(),
                inviscid_lower_bound(rho),
            ),
            Err(e) => println!("{rho:>10.3e} failed: {e}"),
        }
        rho *= 4.0;
    }
}
