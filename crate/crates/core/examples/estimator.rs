//! Both F estimators on the synthetic plant dy/dt = F + alpha*u, with F
//! stepping from 0 to 5 and a random staircase input.

use denitrify::estimation::{estimate_first, Sample, SampleWindow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let (alpha, ts, tau) = (1.0, 0.001, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut window = SampleWindow::new(tau + 1, ts).expect("valid window");
    let mut y = 0.0;
    let mut u = 0.0;
    println!("{:>6} {:>6} {:>10}", "k", "F", "F_est");
    for k in 0..=300 {
        let f = if k <= 150 { 0.0 } else { 5.0 };
        if k > 0 {
            y += ts * (f + alpha * u);
        }
        window.push(Sample {
            y,
            u,
            ..Default::default()
        });
        if k % 10 == 0 {
            match estimate_first(&window, alpha) {
                Ok(est) => println!("{k:>6} {f:>6.1} {:>10.6}", est.value),
                Err(e) => println!("{k:>6} {f:>6.1} {e}"),
            }
        }
        if k % 5 == 0 {
            u = rng.gen_range(-1.0..=1.0);
        }
    }
}
