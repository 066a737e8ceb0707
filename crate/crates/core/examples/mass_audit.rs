//! Nitrogen bookkeeping over a week with daily backwashes, and the nitrite
//! transient each backwash causes.

use denitrify::harness::{run_scenario, Scenario};

fn main() {
    let mut sc = Scenario::shipped_default();
    sc.duration_days = 7.0;
    let report = run_scenario(&sc).expect("valid scenario");
    let ledger = report.final_state.ledger;
    let storage = report.final_state.nitrogen_storage(&sc.reactor) - report.initial_storage;
    println!("nitrogen per m2 of bed (g):");
    println!("  inflow    {:>12.3}", ledger.inflow);
    println!("  outflow   {:>12.3}", ledger.outflow);
    println!("  to N2     {:>12.3}", ledger.converted);
    println!("  clipped   {:>12.3e}", ledger.clipped);
    println!("  storage   {:>12.3}", storage);
    println!("  imbalance {:>12.3e}", report.nitrogen_imbalance());

    let rows = &report.record.rows;
    let hour = (1.0 / 24.0 / sc.ts_days).round() as usize;
    for (k, row) in rows.iter().enumerate().filter(|(_, r)| r.backwash) {
        let before = rows[k - hour..k].iter().map(|r| r.s2_out).sum::<f64>() / hour as f64;
        let peak = rows[k..(k + 6 * hour).min(rows.len())]
            .iter()
            .map(|r| r.s2_out)
            .fold(0.0, f64::max);
        println!(
            "backwash at day {:.2}: s2 {:.3} -> peak {:.3}",
            row.t, before, peak
        );
    }
}
