//! Tracer step through the bed with reactions off, against the analytic
//! response of a cascade of equal stirred tanks.

use denitrify::reactor::{InfluentSample, PlantState};
use denitrify::Scenario;

fn erlang_cdf(n: usize, theta: f64, t: f64) -> f64 {
    let z = t / theta;
    let (mut term, mut sum) = (1.0, 1.0);
    for j in 1..n {
        term *= z / j as f64;
        sum += term;
    }
    1.0 - (-z).exp() * sum
}

fn main() {
    let mut p = Scenario::shipped_default().reactor;
    p.reactions = false;
    let residence = p.residence_time();
    let theta = residence / p.n_cells as f64;
    println!(
        "{} cells, residence time {:.1} min",
        p.n_cells,
        residence * 60.0
    );
    println!("{:>8} {:>10} {:>10}", "t (min)", "outlet", "analytic");
    let mut plant = PlantState::uniform(p.n_cells, Default::default());
    let inlet = InfluentSample::new(1.0, 0.0);
    let dt = residence / 20.0;
    for _ in 0..40 {
        plant.advance(0.0, &inlet, dt, &p).expect("transport step");
        println!(
            "{:>8.2} {:>10.5} {:>10.5}",
            plant.t * 60.0,
            plant.outlet().s1,
            erlang_cdf(p.n_cells, theta, plant.t)
        );
    }
}
