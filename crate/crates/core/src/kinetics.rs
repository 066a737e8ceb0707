//! Double-Monod growth rates and the reaction source terms of two-step
//! denitrification:
//!
//! ```text
//! methanol + nitrate -> biomass + nitrite
//! methanol + nitrite -> biomass + nitrogen
//! ```
//!
//! All concentrations are g/m³, rates are per hour. The yield coefficients
//! are g/g: nitrate consumed per unit step-1 growth, nitrite consumed per
//! unit step-2 growth, and methanol consumed per unit growth of each step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error("negative concentration {name} = {value} g/m³")]
    NegativeConcentration { name: &'static str, value: f64 },
    #[error("kinetic parameter {name} must be strictly positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },
}

/// Physical and kinetic constants of the biofilm reactions.
///
/// There are no compiled-in values: the numbers come from a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticParams {
    /// Maximum specific growth rate on nitrate, 1/h.
    pub mu_nitrate_max: f64,
    /// Maximum specific growth rate on nitrite, 1/h.
    pub mu_nitrite_max: f64,
    /// Nitrate affinity, g/m³.
    pub half_sat_nitrate: f64,
    /// Nitrite affinity, g/m³.
    pub half_sat_nitrite: f64,
    /// Methanol affinity, g/m³.
    pub half_sat_carbon: f64,
    /// Nitrate reduced to nitrite per unit of step-1 growth, g/g.
    pub nitrate_yield: f64,
    /// Nitrite reduced to N₂ per unit of step-2 growth, g/g.
    pub nitrite_yield: f64,
    /// Methanol consumed per unit of step-1 growth, g/g.
    pub carbon_yield_nitrate: f64,
    /// Methanol consumed per unit of step-2 growth, g/g.
    pub carbon_yield_nitrite: f64,
    /// Maximum biomass concentration, g/m³.
    pub biomass_max: f64,
}

impl KineticParams {
    pub fn validate(&self) -> Result<(), KineticsError> {
        let fields = [
            ("mu_nitrate_max", self.mu_nitrate_max),
            ("mu_nitrite_max", self.mu_nitrite_max),
            ("half_sat_nitrate", self.half_sat_nitrate),
            ("half_sat_nitrite", self.half_sat_nitrite),
            ("half_sat_carbon", self.half_sat_carbon),
            ("nitrate_yield", self.nitrate_yield),
            ("nitrite_yield", self.nitrite_yield),
            ("carbon_yield_nitrate", self.carbon_yield_nitrate),
            ("carbon_yield_nitrite", self.carbon_yield_nitrite),
            ("biomass_max", self.biomass_max),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(KineticsError::NonPositiveParameter { name, value });
            }
        }
        Ok(())
    }

    /// Methanol needed to take one g of nitrate-N all the way to N₂, g/g.
    pub fn stoichiometric_carbon_demand(&self) -> f64 {
        self.carbon_yield_nitrate / self.nitrate_yield
            + self.carbon_yield_nitrite / self.nitrite_yield
    }
}

/// Volumetric reaction rates, g/(m³·h). Signs follow production (+) and
/// consumption (−).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReactionRates {
    pub nitrate: f64,
    pub nitrite: f64,
    pub carbon: f64,
    pub biomass: f64,
}

impl ReactionRates {
    pub const ZERO: ReactionRates = ReactionRates {
        nitrate: 0.0,
        nitrite: 0.0,
        carbon: 0.0,
        biomass: 0.0,
    };
}

fn check_conc(name: &'static str, value: f64) -> Result<(), KineticsError> {
    if value < 0.0 || value.is_nan() {
        Err(KineticsError::NegativeConcentration { name, value })
    } else {
        Ok(())
    }
}

/// Double-Monod specific growth rate `mu_max·s·sc / ((k + s)(kc + sc))`, 1/h.
pub fn monod_rate(s: f64, sc: f64, mu_max: f64, k: f64, kc: f64) -> Result<f64, KineticsError> {
    check_conc("s", s)?;
    check_conc("sc", sc)?;
    Ok(monod_unchecked(s, sc, mu_max, k, kc))
}

#[inline]
pub(crate) fn monod_unchecked(s: f64, sc: f64, mu_max: f64, k: f64, kc: f64) -> f64 {
    mu_max * (s / (k + s)) * (sc / (kc + sc))
}

/// Reaction source terms for one point of the bed.
pub fn reaction_terms(
    s1: f64,
    s2: f64,
    sc: f64,
    x: f64,
    p: &KineticParams,
) -> Result<ReactionRates, KineticsError> {
    check_conc("s1", s1)?;
    check_conc("s2", s2)?;
    check_conc("sc", sc)?;
    check_conc("x", x)?;
    Ok(reaction_terms_unchecked(s1, s2, sc, x, p))
}

/// Same as [`reaction_terms`] without the sign checks; the reactor calls this
/// on the positive part of intermediate Runge-Kutta stages.
#[inline]
pub(crate) fn reaction_terms_unchecked(
    s1: f64,
    s2: f64,
    sc: f64,
    x: f64,
    p: &KineticParams,
) -> ReactionRates {
    let mu1 = monod_unchecked(
        s1,
        sc,
        p.mu_nitrate_max,
        p.half_sat_nitrate,
        p.half_sat_carbon,
    );
    let mu2 = monod_unchecked(
        s2,
        sc,
        p.mu_nitrite_max,
        p.half_sat_nitrite,
        p.half_sat_carbon,
    );
    let step1 = p.nitrate_yield * mu1 * x;
    let step2 = p.nitrite_yield * mu2 * x;
    ReactionRates {
        nitrate: -step1,
        nitrite: step1 - step2,
        carbon: -(p.carbon_yield_nitrate * mu1 + p.carbon_yield_nitrite * mu2) * x,
        biomass: (mu1 + mu2) * (1.0 - x / p.biomass_max) * x,
    }
}
