//! Feedforward alone versus feedforward plus iP feedback on the default
//! scenario.

use denitrify::harness::{run_scenario, Scenario};
use denitrify::EstimatorKind;

fn main() {
    let composite = Scenario::shipped_default();
    let mut ff_only = composite.clone();
    ff_only.controller.kp = 0.0;
    ff_only.controller.estimator = EstimatorKind::Off;
    for (label, sc) in [("feedforward", &ff_only), ("composite", &composite)] {
        let report = run_scenario(sc).expect("valid scenario");
        let m = report.metrics.expect("post-warmup rows");
        println!(
            "{label:>12}: rmse_s2 {:.4}  in band {:.3}  mean sc_in {:.2}  max s2 {:.3}",
            m.rmse_s2, m.pct_time_in_band, m.mean_sc_in, m.max_s2
        );
    }
}
