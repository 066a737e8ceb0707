//! Double-Monod reaction rates across nitrate and methanol levels.

use denitrify::kinetics::{monod_rate, reaction_terms};
use denitrify::Scenario;

fn main() {
    let k = Scenario::shipped_default().reactor.kinetics;
    let x = 0.5 * k.biomass_max;
    println!("biomass {x} g/m3, nitrite 0.5 g/m3");
    println!(
        "{:>8} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "S1", "Sc", "mu1", "r1", "r2", "rc", "rx"
    );
    for s1 in [0.5, 2.0, 8.0, 20.0] {
        for sc in [0.5, 5.0, 50.0] {
            let mu1 = monod_rate(
                s1,
                sc,
                k.mu_nitrate_max,
                k.half_sat_nitrate,
                k.half_sat_carbon,
            )
            .expect("valid inputs");
            let r = reaction_terms(s1, 0.5, sc, x, &k).expect("valid inputs");
            println!(
                "{s1:>8.1} {sc:>8.1} {mu1:>10.4} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
                r.nitrate, r.nitrite, r.carbon, r.biomass
            );
        }
    }
    println!(
        "stoichiometric methanol per g nitrate: {}",
        k.stoichiometric_carbon_demand()
    );
}
