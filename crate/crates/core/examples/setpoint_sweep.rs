//! Nitrite setpoint sweep on the default scenario, run in parallel.

use denitrify::harness::{run_sweep, Scenario};

fn main() {
    let targets = [0.4, 0.8, 1.2, 2.0, 3.0];
    println!(
        "{:>6} {:>9} {:>11} {:>8} {:>8}",
        "target", "rmse_s2", "mean sc_in", "in band", "max s2"
    );
    for report in run_sweep(&Scenario::shipped_default(), &targets) {
        let report = report.expect("valid scenario");
        let m = report.metrics.expect("post-warmup rows");
        println!(
            "{:>6.1} {:>9.4} {:>11.3} {:>8.3} {:>8.3}",
            report.scenario.controller.s2_target,
            m.rmse_s2,
            m.mean_sc_in,
            m.pct_time_in_band,
            m.max_s2
        );
    }
}
