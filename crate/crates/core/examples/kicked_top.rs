//! Largest Lyapunov exponent of the semiquantal kicked top.
//!
//! `cargo run --release --example kicked_top -- [kicks] [k]`

use cohspace::dynamics::{KickedTop, TdvpOptions};
use cohspace::kernel::sphere_point;

fn main() {
    let mut args = std::env::args().skip(1);
    let kicks: usize = args.next().map_or(500, |s| s.parse().expect("kicks must be an integer"));
    let k: f64 = args.next().map_or(3.0, |s| s.parse().expect("k must be a number"));
    let top = KickedTop {
        two_j: 20,
        k,
        p: std::f64::consts::FRAC_PI_2,
    };
    let r = top.lyapunov(&sphere_point(1.0, 0.7), kicks, &TdvpOptions::with_rtol(1e-8)).unwrap();
    for (t, running, _) in r.series.iter().step_by((kicks / 10).max(1)) {
        println!("{t:>8} {running:.5}");
    }
    println!("lambda_max = {:.5}, tail = {:.5}, chart switches = {}", r.lambda_max, r.lambda_tail, r.chart_switches);
}
