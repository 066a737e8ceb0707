use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::influent::InfluentGenerator;
use super::scenario::Scenario;
use super::HarnessError;
use crate::control::Controller;
use crate::reactor::PlantState;
use crate::units::days_to_hours;

/// Half-width of the tracking band, as a fraction of the setpoint.
pub const BAND_FRACTION: f64 = 0.1;

/// Offset between the influent and sensor noise streams.
const SENSOR_STREAM: u64 = 0x5DEE_CE66_D1CE_5EED;

/// One sampling instant. Outlet values are the true plant outlet; sensor
/// noise only enters the controller.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TrajectoryRow {
    /// days
    pub t: f64,
    pub s1_in: f64,
    pub s2_in: f64,
    pub sc_in: f64,
    pub s1_out: f64,
    pub s2_out: f64,
    pub sc_out: f64,
    pub f_est: f64,
    pub e: f64,
    pub u_fb_raw: f64,
    pub clamped: bool,
    /// A backwash happened at this instant, before the outlet was read.
    pub backwash: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
    pub clip_events: u64,
}

impl TrajectoryRecord {
    pub fn column<F: Fn(&TrajectoryRow) -> f64>(&self, f: F) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub rmse_s2: f64,
    pub mean_sc_in: f64,
    pub pct_time_in_band: f64,
    pub max_s2: f64,
    pub clip_events: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no rows after the warm-up ({warmup_days} days)")]
    EmptyRange { warmup_days: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Failed { at_days: f64, reason: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: Scenario,
    pub record: TrajectoryRecord,
    pub metrics: Result<Metrics, MetricsError>,
    pub status: RunStatus,
    /// Pore-water nitrogen at t = 0, g/m².
    pub initial_storage: f64,
    pub final_state: PlantState,
    /// A recorded influent series ran out before the end of the run.
    pub influent_exhausted: bool,
}

impl RunReport {
    /// inflow − outflow − conversion − storage change (+ clipped mass), g/m².
    pub fn nitrogen_imbalance(&self) -> f64 {
        let l = &self.final_state.ledger;
        let storage = self.final_state.nitrogen_storage(&self.scenario.reactor);
        l.inflow + l.clipped - l.outflow - l.converted - (storage - self.initial_storage)
    }
}

/// Post-warmup metrics against the scenario's reference.
pub fn compute_metrics(rec: &TrajectoryRecord, sc: &Scenario) -> Result<Metrics, MetricsError> {
    let rows: Vec<&TrajectoryRow> = rec
        .rows
        .iter()
        .filter(|r| r.t >= sc.warmup_days - 1e-9)
        .collect();
    if rows.is_empty() {
        return Err(MetricsError::EmptyRange {
            warmup_days: sc.warmup_days,
        });
    }
    let n = rows.len() as f64;
    let mut sq = 0.0;
    let mut in_band = 0usize;
    let mut sc_sum = 0.0;
    let mut max_s2 = f64::NEG_INFINITY;
    for r in &rows {
        let target = sc.controller.reference_at(r.t).y_star;
        let err = r.s2_out - target;
        sq += err * err;
        if err.abs() <= BAND_FRACTION * target + 1e-12 {
            in_band += 1;
        }
        sc_sum += r.sc_in;
        max_s2 = max_s2.max(r.s2_out);
    }
    Ok(Metrics {
        rmse_s2: (sq / n).sqrt(),
        mean_sc_in: sc_sum / n,
        pct_time_in_band: in_band as f64 / n,
        max_s2,
        clip_events: rec.clip_events,
    })
}

/// Run one scenario on its sampling grid. Plant faults end the run early
/// with a partial record and a `Failed` status; only invalid scenarios and
/// unreadable inputs are errors.
pub fn run_scenario(sc: &Scenario) -> Result<RunReport, HarnessError> {
    sc.validate()?;
    let n = sc.n_samples();
    let ts = sc.ts_days;
    let dt_hours = days_to_hours(ts);
    let p = &sc.reactor;

    let mut influent = InfluentGenerator::new(&sc.influent, sc.seed, |f| sc.resolve(f))?;
    let mut sensor = ChaCha8Rng::seed_from_u64(sc.seed ^ SENSOR_STREAM);
    let mut controller = Controller::new(sc.controller, ts)
        .map_err(|e| super::ScenarioError::Invalid(e.to_string()))?;
    let backwash: HashSet<usize> = sc
        .backwash
        .sample_indices(sc.duration_days, ts)
        .into_iter()
        .collect();

    let first = influent.sample(0.0);
    let mut plant = PlantState::initial(p, &first.sample, sc.initial_biomass_fraction);
    let initial_storage = plant.nitrogen_storage(p);
    let mut exhausted = first.exhausted;
    let mut pending = Some(first.sample);

    let mut rows = Vec::with_capacity(n + 1);
    let mut status = RunStatus::Completed;
    for k in 0..=n {
        let t = k as f64 * ts;
        let inflow = match pending.take() {
            Some(s) => s,
            None => {
                let r = influent.sample(t);
                exhausted |= r.exhausted;
                r.sample
            }
        };
        let washed = backwash.contains(&k);
        if washed {
            plant
                .apply_backwash(sc.backwash.removal, p)
                .expect("removal validated with the scenario");
        }
        let out = plant.outlet();
        let noise = if sc.sensor.s2_noise > 0.0 {
            sensor.gen_range(-sc.sensor.s2_noise..=sc.sensor.s2_noise)
        } else {
            0.0
        };
        let reference = sc.controller.reference_at(t);
        let action = controller.step(inflow.s1_in, out.s2 + noise, &reference);
        rows.push(TrajectoryRow {
            t,
            s1_in: inflow.s1_in,
            s2_in: inflow.s2_in,
            sc_in: action.sc_in,
            s1_out: out.s1,
            s2_out: out.s2,
            sc_out: out.sc,
            f_est: action.f_est,
            e: action.error,
            u_fb_raw: action.u_fb_raw,
            clamped: action.clamped,
            backwash: washed,
        });
        if action.fault {
            status = RunStatus::Failed {
                at_days: t,
                reason: "non-finite controller input".into(),
            };
            break;
        }
        if k == n {
            break;
        }
        if let Err(e) = plant.advance(action.sc_in, &inflow, dt_hours, p) {
            status = RunStatus::Failed {
                at_days: t,
                reason: e.to_string(),
            };
            break;
        }
    }

    let record = TrajectoryRecord {
        rows,
        clip_events: plant.clip_events,
    };
    let metrics = compute_metrics(&record, sc);
    Ok(RunReport {
        scenario: sc.clone(),
        record,
        metrics,
        status,
        initial_storage,
        final_state: plant,
        influent_exhausted: exhausted,
    })
}

/// Runs `sc` once per nitrite target, concurrently. Results keep the order
/// of `targets`.
pub fn run_sweep(sc: &Scenario, targets: &[f64]) -> Vec<Result<RunReport, HarnessError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = targets
            .iter()
            .map(|&target| {
                let mut variant = sc.clone();
                variant.controller.s2_target = target;
                scope.spawn(move || run_scenario(&variant))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}
