//! The iP controller on the synthetic plant dy/dt = F + u: the tracking
//! error decays like exp(-Kp t) whatever the (constant) value of F.

use denitrify::control::{Controller, ControllerConfig, ReferenceSignal};
use denitrify::EstimatorKind;

fn main() {
    let cfg = ControllerConfig {
        alpha: 1.0,
        kp: 100.0,
        beta: 0.0,
        s1_target: 0.0,
        s2_target: 0.0,
        s2_target_rate: 0.0,
        tau_samples: 50,
        estimator: EstimatorKind::First,
        clamp_feedback: false,
    };
    let ts = 0.001;
    let mut ctl = Controller::new(cfg, ts).expect("valid controller");
    let mut y = 0.0;
    println!(
        "{:>5} {:>6} {:>10} {:>10} {:>10}",
        "k", "y*", "y", "F_est", "e"
    );
    for k in 0..400 {
        let f = if k < 250 { -3.0 } else { 4.0 };
        let target = if k < 100 { 0.0 } else { 1.0 };
        let out = ctl.step(0.0, y, &ReferenceSignal::constant(target));
        if k % 10 == 0 {
            println!(
                "{k:>5} {target:>6.2} {y:>10.5} {:>10.4} {:>10.2e}",
                out.f_est, out.error
            );
        }
        y += ts * (f + cfg.alpha * out.sc_in);
    }
}
