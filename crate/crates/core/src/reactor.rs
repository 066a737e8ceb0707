//! The biofilter bed as `n_cells` equal stirred cells in series.
//!
//! Each cell carries nitrate `s1`, nitrite `s2`, methanol `sc` (mobile, in the
//! pore water) and biomass `x` (fixed on the media). Per unit of bed volume:
//!
//! ```text
//! eps·dS/dt = (v/h)·(S_up − S) + r(S, X)      for S in {s1, s2, sc}
//!     dX/dt = r_x(S, X)
//! ```
//!
//! with `h = H / n_cells`. Time is in hours. The state is advanced with
//! classical RK4 on sub-steps no longer than `dt_inner`. Alongside the cells,
//! the integrator carries a [`NitrogenLedger`]: boundary fluxes and the
//! nitrite→N₂ conversion are extra components of the same ODE, so the
//! nitrogen balance closes to round-off.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::{reaction_terms_unchecked, KineticParams, KineticsError, ReactionRates};

/// Largest negative excursion (g/m³) that is silently clipped to zero.
pub const CLIP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReactorError {
    #[error("invalid reactor parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integration blew up in cell {cell} at t = {t_hours} h (dt_inner = {dt_inner} h)")]
    IntegrationBlowup {
        cell: usize,
        dt_inner: f64,
        t_hours: f64,
    },
    #[error(
        "negative {species} = {value:e} g/m³ in cell {cell} at t = {t_hours} h exceeds clip tolerance (dt_inner = {dt_inner} h)"
    )]
    NegativeExcursion {
        cell: usize,
        species: &'static str,
        value: f64,
        t_hours: f64,
        dt_inner: f64,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactorParams {
    /// Bed porosity, 0 < ε ≤ 1.
    pub porosity: f64,
    /// Superficial velocity, m/h.
    pub velocity: f64,
    /// Bed height, m.
    pub bed_height: f64,
    pub n_cells: usize,
    /// Residual biomass left by backwash, g/m³.
    pub biomass_floor: f64,
    /// Longest integration sub-step, h.
    pub dt_inner: f64,
    /// Switches the biofilm reactions off (transport-only runs).
    #[serde(default = "default_true")]
    pub reactions: bool,
    pub kinetics: KineticParams,
}

impl ReactorParams {
    pub fn cell_height(&self) -> f64 {
        self.bed_height / self.n_cells as f64
    }

    /// Interstitial residence time of the whole bed, εH/v, in hours.
    pub fn residence_time(&self) -> f64 {
        self.porosity * self.bed_height / self.velocity
    }

    /// Residence time of one cell at the nominal velocity, in hours.
    pub fn cell_residence_time(&self) -> f64 {
        self.residence_time() / self.n_cells as f64
    }

    pub fn validate(&self) -> Result<(), ReactorError> {
        let bad = |m: String| Err(ReactorError::InvalidParams(m));
        if !(self.porosity > 0.0 && self.porosity <= 1.0) {
            return bad(format!("porosity must be in (0, 1], got {}", self.porosity));
        }
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return bad(format!("velocity must be > 0, got {}", self.velocity));
        }
        if !(self.bed_height > 0.0 && self.bed_height.is_finite()) {
            return bad(format!("bed_height must be > 0, got {}", self.bed_height));
        }
        if self.n_cells == 0 {
            return bad("n_cells must be at least 1".into());
        }
        self.kinetics.validate()?;
        if !(self.biomass_floor > 0.0 && self.biomass_floor < self.kinetics.biomass_max) {
            return bad(format!(
                "biomass_floor must be in (0, biomass_max), got {}",
                self.biomass_floor
            ));
        }
        if !(self.dt_inner > 0.0) {
            return bad(format!("dt_inner must be > 0, got {}", self.dt_inner));
        }
        if self.dt_inner > self.cell_residence_time() {
            return bad(format!(
                "dt_inner = {} h exceeds the cell residence time {} h",
                self.dt_inner,
                self.cell_residence_time()
            ));
        }
        Ok(())
    }

    /// Plausibility notes that do not make the parameters invalid.
    pub fn sanity_warnings(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let hours = self.residence_time();
        if hours < 1.0 / 60.0 {
            notes.push(format!(
                "bed residence time {:.3} min is below one minute",
                hours * 60.0
            ));
        }
        if hours > 24.0 * 7.0 {
            notes.push(format!(
                "bed residence time {:.1} days exceeds one week",
                hours / 24.0
            ));
        }
        notes
    }
}

/// Dissolved concentrations entering or leaving a cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Solubles {
    pub s1: f64,
    pub s2: f64,
    pub sc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CellState {
    pub s1: f64,
    pub s2: f64,
    pub sc: f64,
    pub x: f64,
}

impl CellState {
    pub fn solubles(&self) -> Solubles {
        Solubles {
            s1: self.s1,
            s2: self.s2,
            sc: self.sc,
        }
    }

    fn axpy(&self, a: f64, d: &CellState) -> CellState {
        CellState {
            s1: self.s1 + a * d.s1,
            s2: self.s2 + a * d.s2,
            sc: self.sc + a * d.sc,
            x: self.x + a * d.x,
        }
    }
}

/// Time derivative of a [`CellState`], per hour.
pub type CellDerivative = CellState;

/// Influent boundary condition over one sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct InfluentSample {
    pub s1_in: f64,
    pub s2_in: f64,
    /// Per-sample superficial velocity override, m/h.
    pub velocity: Option<f64>,
}

impl InfluentSample {
    pub fn new(s1_in: f64, s2_in: f64) -> Self {
        InfluentSample {
            s1_in,
            s2_in,
            velocity: None,
        }
    }
}

/// Cumulative nitrogen (nitrate + nitrite) flows per unit bed cross-section,
/// g/m².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NitrogenLedger {
    pub inflow: f64,
    pub outflow: f64,
    /// Nitrite reduced to N₂.
    pub converted: f64,
    /// Mass added back by clipping negative excursions.
    pub clipped: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    /// Inlet is index 0.
    pub cells: Vec<CellState>,
    /// Simulation clock, h.
    pub t: f64,
    pub ledger: NitrogenLedger,
    pub clip_events: u64,
}

impl PlantState {
    pub fn uniform(n_cells: usize, cell: CellState) -> Self {
        PlantState {
            cells: vec![cell; n_cells],
            t: 0.0,
            ledger: NitrogenLedger::default(),
            clip_events: 0,
        }
    }

    /// Solubles at influent values, no methanol, biomass at
    /// `biomass_fraction·biomass_max` (never below the floor).
    pub fn initial(p: &ReactorParams, influent: &InfluentSample, biomass_fraction: f64) -> Self {
        let x = (biomass_fraction * p.kinetics.biomass_max).max(p.biomass_floor);
        PlantState::uniform(
            p.n_cells,
            CellState {
                s1: influent.s1_in,
                s2: influent.s2_in,
                sc: 0.0,
                x,
            },
        )
    }

    pub fn outlet(&self) -> Solubles {
        self.cells
            .last()
            .map(CellState::solubles)
            .unwrap_or_default()
    }

    /// Nitrate + nitrite held in the pore water per unit cross-section, g/m².
    pub fn nitrogen_storage(&self, p: &ReactorParams) -> f64 {
        let pore = p.porosity * p.cell_height();
        self.cells.iter().map(|c| pore * (c.s1 + c.s2)).sum()
    }

    /// Advance by `dt` hours with inlet methanol `sc_in`.
    pub fn advance(
        &mut self,
        sc_in: f64,
        influent: &InfluentSample,
        dt: f64,
        p: &ReactorParams,
    ) -> Result<(), ReactorError> {
        if !(dt > 0.0) {
            return Err(ReactorError::InvalidInput(format!(
                "dt must be > 0, got {dt}"
            )));
        }
        if !(sc_in >= 0.0 && sc_in.is_finite()) {
            return Err(ReactorError::InvalidInput(format!(
                "sc_in must be >= 0, got {sc_in}"
            )));
        }
        if self.cells.len() != p.n_cells {
            return Err(ReactorError::InvalidInput(format!(
                "state has {} cells, parameters expect {}",
                self.cells.len(),
                p.n_cells
            )));
        }
        let velocity = influent.velocity.unwrap_or(p.velocity);
        if !(velocity > 0.0 && velocity.is_finite()) {
            return Err(ReactorError::InvalidInput(format!(
                "velocity must be > 0, got {velocity}"
            )));
        }
        // Faster flow shortens the cell residence time; shrink the sub-step with it.
        let h_max = p.dt_inner * (p.velocity / velocity).min(1.0);
        let n_sub = (dt / h_max).ceil().max(1.0) as usize;
        let h = dt / n_sub as f64;
        let inlet = Solubles {
            s1: influent.s1_in,
            s2: influent.s2_in,
            sc: sc_in,
        };
        let mut rk = Rk4Scratch::new(self.cells.len());
        for _ in 0..n_sub {
            rk.step(self, &inlet, velocity, h, p);
            self.t += h;
            self.sanitize(p, h)?;
        }
        Ok(())
    }

    fn sanitize(&mut self, p: &ReactorParams, dt_inner: f64) -> Result<(), ReactorError> {
        let pore = p.porosity * p.cell_height();
        let t_hours = self.t;
        for (i, c) in self.cells.iter_mut().enumerate() {
            if !(c.s1.is_finite() && c.s2.is_finite() && c.sc.is_finite() && c.x.is_finite()) {
                return Err(ReactorError::IntegrationBlowup {
                    cell: i,
                    dt_inner,
                    t_hours,
                });
            }
            for (species, value, counts_n) in [
                ("s1", &mut c.s1, true),
                ("s2", &mut c.s2, true),
                ("sc", &mut c.sc, false),
                ("x", &mut c.x, false),
            ] {
                if *value < 0.0 {
                    if -*value > CLIP_TOLERANCE {
                        return Err(ReactorError::NegativeExcursion {
                            cell: i,
                            species,
                            value: *value,
                            t_hours,
                            dt_inner,
                        });
                    }
                    if counts_n {
                        self.ledger.clipped -= pore * *value;
                    }
                    *value = 0.0;
                    self.clip_events += 1;
                }
            }
            if c.x > p.kinetics.biomass_max {
                c.x = p.kinetics.biomass_max;
            }
        }
        Ok(())
    }

    /// Remove a fraction of the biomass in every cell, keeping the floor.
    pub fn apply_backwash(&mut self, removal: f64, p: &ReactorParams) -> Result<(), ReactorError> {
        if !(0.0..=1.0).contains(&removal) {
            return Err(ReactorError::InvalidInput(format!(
                "backwash removal must be in [0, 1], got {removal}"
            )));
        }
        for c in &mut self.cells {
            c.x = (c.x * (1.0 - removal)).max(p.biomass_floor);
        }
        Ok(())
    }
}

/// Right-hand side for one cell fed by `upstream` at superficial velocity
/// `velocity` (m/h).
pub fn cell_derivatives(
    cell: &CellState,
    upstream: &Solubles,
    p: &ReactorParams,
    velocity: f64,
) -> CellDerivative {
    cell_rhs(cell, upstream, p, velocity).0
}

/// Returns the derivative and the reaction rates it used.
#[inline]
fn cell_rhs(
    cell: &CellState,
    upstream: &Solubles,
    p: &ReactorParams,
    velocity: f64,
) -> (CellDerivative, ReactionRates) {
    let r = if p.reactions {
        reaction_terms_unchecked(
            cell.s1.max(0.0),
            cell.s2.max(0.0),
            cell.sc.max(0.0),
            cell.x.max(0.0),
            &p.kinetics,
        )
    } else {
        ReactionRates::ZERO
    };
    let eps = p.porosity;
    let exchange = velocity / (eps * p.cell_height());
    let d = CellState {
        s1: exchange * (upstream.s1 - cell.s1) + r.nitrate / eps,
        s2: exchange * (upstream.s2 - cell.s2) + r.nitrite / eps,
        sc: exchange * (upstream.sc - cell.sc) + r.carbon / eps,
        x: r.biomass,
    };
    (d, r)
}

#[derive(Debug, Clone, Copy, Default)]
struct LedgerRates {
    inflow: f64,
    outflow: f64,
    converted: f64,
}

fn plant_rhs(
    cells: &[CellState],
    inlet: &Solubles,
    p: &ReactorParams,
    velocity: f64,
    out: &mut [CellState],
) -> LedgerRates {
    let h = p.cell_height();
    let mut converted = 0.0;
    let mut upstream = *inlet;
    for (cell, d) in cells.iter().zip(out.iter_mut()) {
        let (deriv, r) = cell_rhs(cell, &upstream, p, velocity);
        *d = deriv;
        converted -= h * (r.nitrate + r.nitrite);
        upstream = cell.solubles();
    }
    LedgerRates {
        inflow: velocity * (inlet.s1 + inlet.s2),
        outflow: velocity * (upstream.s1 + upstream.s2),
        converted,
    }
}

struct Rk4Scratch {
    k: [Vec<CellState>; 4],
    stage: Vec<CellState>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        let z = vec![CellState::default(); n];
        Rk4Scratch {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            stage: z,
        }
    }

    fn step(
        &mut self,
        state: &mut PlantState,
        inlet: &Solubles,
        v: f64,
        h: f64,
        p: &ReactorParams,
    ) {
        let [k1, k2, k3, k4] = &mut self.k;
        let l1 = plant_rhs(&state.cells, inlet, p, v, k1);
        for ((s, c), d) in self.stage.iter_mut().zip(&state.cells).zip(k1.iter()) {
            *s = c.axpy(0.5 * h, d);
        }
        let l2 = plant_rhs(&self.stage, inlet, p, v, k2);
        for ((s, c), d) in self.stage.iter_mut().zip(&state.cells).zip(k2.iter()) {
            *s = c.axpy(0.5 * h, d);
        }
        let l3 = plant_rhs(&self.stage, inlet, p, v, k3);
        for ((s, c), d) in self.stage.iter_mut().zip(&state.cells).zip(k3.iter()) {
            *s = c.axpy(h, d);
        }
        let l4 = plant_rhs(&self.stage, inlet, p, v, k4);
        let w = h / 6.0;
        for (i, c) in state.cells.iter_mut().enumerate() {
            let (a, b, cc, d) = (&k1[i], &k2[i], &k3[i], &k4[i]);
            c.s1 += w * (a.s1 + 2.0 * b.s1 + 2.0 * cc.s1 + d.s1);
            c.s2 += w * (a.s2 + 2.0 * b.s2 + 2.0 * cc.s2 + d.s2);
            c.sc += w * (a.sc + 2.0 * b.sc + 2.0 * cc.sc + d.sc);
            c.x += w * (a.x + 2.0 * b.x + 2.0 * cc.x + d.x);
        }
        let ledger = &mut state.ledger;
        ledger.inflow += w * (l1.inflow + 2.0 * l2.inflow + 2.0 * l3.inflow + l4.inflow);
        ledger.outflow += w * (l1.outflow + 2.0 * l2.outflow + 2.0 * l3.outflow + l4.outflow);
        ledger.converted +=
            w * (l1.converted + 2.0 * l2.converted + 2.0 * l3.converted + l4.converted);
    }
}

/// Functional form of [`PlantState::advance`].
pub fn step(
    state: &PlantState,
    sc_in: f64,
    influent: &InfluentSample,
    dt: f64,
    p: &ReactorParams,
) -> Result<PlantState, ReactorError> {
    let mut next = state.clone();
    next.advance(sc_in, influent, dt, p)?;
    Ok(next)
}

/// Functional form of [`PlantState::apply_backwash`].
pub fn apply_backwash(
    state: &PlantState,
    removal: f64,
    p: &ReactorParams,
) -> Result<PlantState, ReactorError> {
    let mut next = state.clone();
    next.apply_backwash(removal, p)?;
    Ok(next)
}

pub fn outlet(state: &PlantState) -> Solubles {
    state.outlet()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn params(n_cells: usize) -> ReactorParams {
        ReactorParams {
            porosity: 0.4,
            velocity: 10.0,
            bed_height: 3.0,
            n_cells,
            biomass_floor: 1.0,
            dt_inner: 0.0015,
            reactions: true,
            kinetics: KineticParams {
                mu_nitrate_max: 0.05,
                mu_nitrite_max: 0.065,
                half_sat_nitrate: 2.0,
                half_sat_nitrite: 1.0,
                half_sat_carbon: 2.0,
                nitrate_yield: 2.0,
                nitrite_yield: 2.0,
                carbon_yield_nitrate: 2.0,
                carbon_yield_nitrite: 3.0,
                biomass_max: 4000.0,
            },
        }
    }

    /// Erlang CDF: outlet of `n` equal cells of mean time `theta` after a unit
    /// inlet step.
    pub(crate) fn cascade_step_response(n: usize, theta: f64, t: f64) -> f64 {
        let z = t / theta;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..n {
            term *= z / j as f64;
            sum += term;
        }
        1.0 - (-z).exp() * sum
    }

    #[test]
    fn validate_rejects_long_substep() {
        let mut p = params(20);
        assert!(p.validate().is_ok());
        p.dt_inner = 0.01; // cell residence is 0.006 h
        assert!(matches!(p.validate(), Err(ReactorError::InvalidParams(_))));
        let mut p = params(20);
        p.porosity = 1.2;
        assert!(p.validate().is_err());
        let mut p = params(20);
        p.biomass_floor = 5000.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn residence_time_warnings() {
        assert!(params(20).sanity_warnings().is_empty());
        let mut p = params(20);
        p.velocity = 1000.0;
        assert_eq!(p.sanity_warnings().len(), 1);
    }

    #[test]
    fn equilibrium_without_biomass_has_zero_derivative() {
        let p = params(20);
        let cell = CellState {
            s1: 12.0,
            s2: 0.7,
            sc: 3.0,
            x: 0.0,
        };
        let d = cell_derivatives(&cell, &cell.solubles(), &p, p.velocity);
        assert_eq!(d, CellState::default());
    }

    #[test]
    fn pure_advection_term() {
        let p = params(20);
        let cell = CellState {
            s1: 5.0,
            s2: 0.0,
            sc: 0.0,
            x: 0.0,
        };
        let up = Solubles {
            s1: 7.5,
            ..Default::default()
        };
        let d = cell_derivatives(&cell, &up, &p, p.velocity);
        let exchange = p.velocity / (p.porosity * p.cell_height());
        assert!((d.s1 - exchange * 2.5).abs() < 1e-12);
        assert_eq!(d.s2, 0.0);
    }

    #[test]
    fn derivative_matches_finite_volume_balance() {
        // Per m² of bed cross-section: pore volume eps·h, flow v (m³/m²/h).
        let p = params(20);
        let cell = CellState {
            s1: 9.0,
            s2: 1.3,
            sc: 4.0,
            x: 2500.0,
        };
        let up = Solubles {
            s1: 11.0,
            s2: 1.1,
            sc: 6.5,
        };
        let d = cell_derivatives(&cell, &up, &p, p.velocity);

        let h = p.bed_height / 20.0;
        let pore_volume = p.porosity * h;
        let k = &p.kinetics;
        let mu1 =
            k.mu_nitrate_max * 9.0 / (k.half_sat_nitrate + 9.0) * 4.0 / (k.half_sat_carbon + 4.0);
        let mu2 =
            k.mu_nitrite_max * 1.3 / (k.half_sat_nitrite + 1.3) * 4.0 / (k.half_sat_carbon + 4.0);
        let bed_volume = h;
        let gen1 = -k.nitrate_yield * mu1 * 2500.0 * bed_volume;
        let gen2 = (k.nitrate_yield * mu1 - k.nitrite_yield * mu2) * 2500.0 * bed_volume;
        let genc =
            -(k.carbon_yield_nitrate * mu1 + k.carbon_yield_nitrite * mu2) * 2500.0 * bed_volume;
        let flow = p.velocity;
        let expect1 = (flow * 11.0 - flow * 9.0 + gen1) / pore_volume;
        let expect2 = (flow * 1.1 - flow * 1.3 + gen2) / pore_volume;
        let expectc = (flow * 6.5 - flow * 4.0 + genc) / pore_volume;
        assert!((d.s1 - expect1).abs() < 1e-9 * expect1.abs().max(1.0));
        assert!((d.s2 - expect2).abs() < 1e-9 * expect2.abs().max(1.0));
        assert!((d.sc - expectc).abs() < 1e-9 * expectc.abs().max(1.0));
        let growth = (mu1 + mu2) * (1.0 - 2500.0 / 4000.0) * 2500.0;
        assert!((d.x - growth).abs() < 1e-12);
    }

    #[test]
    fn quiescent_plant_only_advances_clock() {
        let p = params(20);
        let cell = CellState {
            s1: 0.0,
            s2: 0.0,
            sc: 0.0,
            x: p.biomass_floor,
        };
        let mut s = PlantState::uniform(20, cell);
        s.advance(0.0, &InfluentSample::new(0.0, 0.0), 0.024, &p)
            .unwrap();
        assert!(s.cells.iter().all(|c| *c == cell));
        assert!((s.t - 0.024).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(4);
        let s = PlantState::uniform(4, CellState::default());
        let inf = InfluentSample::new(1.0, 0.0);
        assert!(step(&s, -1.0, &inf, 0.01, &p).is_err());
        assert!(step(&s, 1.0, &inf, 0.0, &p).is_err());
        let wrong = PlantState::uniform(3, CellState::default());
        assert!(step(&wrong, 1.0, &inf, 0.01, &p).is_err());
    }

    #[test]
    fn unstable_substep_reports_failure() {
        let mut p = params(20);
        p.dt_inner = 0.5; // far beyond the 0.006 h cell residence time
        let s = PlantState::uniform(
            20,
            CellState {
                x: 1.0,
                ..Default::default()
            },
        );
        let err = step(&s, 0.0, &InfluentSample::new(20.0, 0.0), 20.0, &p).unwrap_err();
        assert!(matches!(
            err,
            ReactorError::IntegrationBlowup { .. } | ReactorError::NegativeExcursion { .. }
        ));
    }

    #[test]
    fn backwash_examples() {
        let p = params(3);
        let s = PlantState::uniform(
            3,
            CellState {
                s1: 4.0,
                s2: 0.2,
                sc: 1.0,
                x: 100.0,
            },
        );
        assert_eq!(apply_backwash(&s, 0.0, &p).unwrap(), s);
        let w = apply_backwash(&s, 0.3, &p).unwrap();
        assert!(w
            .cells
            .iter()
            .all(|c| (c.x - 70.0).abs() < 1e-12 && c.s1 == 4.0 && c.sc == 1.0));
        let w = apply_backwash(&s, 1.0, &p).unwrap();
        assert!(w.cells.iter().all(|c| c.x == 1.0));
        assert!(apply_backwash(&s, 1.5, &p).is_err());
    }

    #[test]
    fn outlet_examples() {
        let c = CellState {
            s1: 3.0,
            s2: 0.5,
            sc: 0.25,
            x: 10.0,
        };
        assert_eq!(PlantState::uniform(7, c).outlet(), c.solubles());
        assert_eq!(outlet(&PlantState::uniform(1, c)), c.solubles());
    }

    #[test]
    fn advection_only_run_converges_to_influent() {
        let mut p = params(20);
        p.reactions = false;
        let mut s = PlantState::uniform(
            20,
            CellState {
                x: 1.0,
                ..Default::default()
            },
        );
        let inf = InfluentSample::new(17.0, 0.4);
        // 30 bed residence times
        for _ in 0..150 {
            s.advance(2.5, &inf, 0.024, &p).unwrap();
        }
        let o = s.outlet();
        assert!((o.s1 - 17.0).abs() < 1e-9);
        assert!((o.s2 - 0.4).abs() < 1e-9);
        assert!((o.sc - 2.5).abs() < 1e-9);
    }

    #[test]
    fn step_response_half_rise_near_residence_time() {
        let mut p = params(20);
        p.reactions = false;
        let tau = p.residence_time();
        let mut s = PlantState::uniform(
            20,
            CellState {
                x: 1.0,
                ..Default::default()
            },
        );
        let inf = InfluentSample::new(10.0, 0.0);
        let dt = tau / 400.0;
        let mut prev = (0.0, 0.0);
        let mut half = None;
        while s.t < 3.0 * tau {
            s.advance(0.0, &inf, dt, &p).unwrap();
            let o = s.outlet().s1;
            if half.is_none() && o >= 5.0 {
                half = Some(prev.0 + (5.0 - prev.1) * (s.t - prev.0) / (o - prev.1));
            }
            prev = (s.t, o);
        }
        let half = half.unwrap();
        assert!((half - tau).abs() < 0.1 * tau, "half-rise {half} vs {tau}");
        let theta = tau / 20.0;
        assert!((cascade_step_response(20, theta, half) - 0.5).abs() < 1e-4);
    }

    #[test]
    fn transport_converges_to_cascade_solution_at_fourth_order() {
        let run = |dt_inner: f64| {
            let mut p = params(20);
            p.reactions = false;
            p.dt_inner = dt_inner;
            let mut s = PlantState::uniform(
                20,
                CellState {
                    x: 1.0,
                    ..Default::default()
                },
            );
            let inf = InfluentSample::new(1.0, 0.0);
            let t_end = p.residence_time();
            s.advance(0.0, &inf, t_end, &p).unwrap();
            let exact = cascade_step_response(20, p.cell_residence_time(), s.t);
            (s.outlet().s1 - exact).abs()
        };
        let coarse = run(0.003);
        let fine = run(0.0015);
        assert!(fine < 1e-6, "fine error {fine}");
        let ratio = coarse / fine;
        assert!((10.0..22.0).contains(&ratio), "error ratio {ratio}");
    }

    #[test]
    fn nitrogen_ledger_closes() {
        let p = params(20);
        let mut s = PlantState::initial(&p, &InfluentSample::new(20.0, 0.3), 0.5);
        let start = s.nitrogen_storage(&p);
        let mut inflow = 0.0;
        for k in 0..500 {
            let s1 = 20.0 + 5.0 * (k as f64 * 0.05).sin();
            let inf = InfluentSample::new(s1, 0.3);
            let sc = 30.0 + 10.0 * (k as f64 * 0.11).cos();
            s.advance(sc, &inf, 0.024, &p).unwrap();
            inflow += p.velocity * (s1 + 0.3) * 0.024;
        }
        let l = s.ledger;
        assert!((l.inflow - inflow).abs() < 1e-9 * inflow);
        let residual =
            l.inflow + l.clipped - l.outflow - l.converted - (s.nitrogen_storage(&p) - start);
        assert!(residual.abs() < 1e-6 * l.inflow, "residual {residual}");
        assert!(l.converted > 0.0);
    }

    #[test]
    fn more_methanol_never_raises_outlet_nitrate() {
        let p = params(20);
        let mut base = PlantState::initial(&p, &InfluentSample::new(22.0, 0.3), 0.4);
        let inf = InfluentSample::new(22.0, 0.3);
        for _ in 0..50 {
            base.advance(40.0, &inf, 0.024, &p).unwrap();
        }
        let mut last = f64::INFINITY;
        for sc in [0.0, 10.0, 30.0, 45.0, 60.0, 120.0] {
            let next = step(&base, sc, &inf, 0.024, &p).unwrap();
            let s1 = next.outlet().s1;
            assert!(s1 <= last + 1e-12, "sc_in {sc}: {s1} > {last}");
            last = s1;
        }
    }

    #[test]
    fn biomass_stays_bounded() {
        let p = params(10);
        let mut s = PlantState::initial(&p, &InfluentSample::new(25.0, 0.5), 0.95);
        for _ in 0..2000 {
            s.advance(80.0, &InfluentSample::new(25.0, 0.5), 0.024, &p)
                .unwrap();
        }
        assert!(s
            .cells
            .iter()
            .all(|c| c.x <= p.kinetics.biomass_max && c.x >= p.biomass_floor));
        assert!(s
            .cells
            .iter()
            .all(|c| c.s1 >= 0.0 && c.s2 >= 0.0 && c.sc >= 0.0));
    }
}
