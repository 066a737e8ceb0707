//! Methanol dosing: a stoichiometric feedforward on influent nitrate plus an
//! intelligent proportional (iP) correction on effluent nitrite.
//!
//! The nitrate load is large compared with nitrite, so it is handled open
//! loop: `ff = β·(S1,in − S1,target)`. The nitrite loop uses the ultra-local
//! model `dy/dt = F + α·u` with `y` the measured effluent nitrite and the iP
//!
//! ```text
//! u = −(F_est − ẏ* + K_P·e) / α,     e = y − y*
//! ```
//!
//! The feedback may only add methanol (taking some away would let nitrate
//! through), so `u` is clamped at zero before it is added to the feedforward.
//!
//! The controller runs on the sampling grid; `ts`, `kp` and `F` share one
//! time base (days in the harness).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{
    estimate_closed_loop, estimate_first, EstimateError, EstimatorKind, Sample, SampleWindow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Window(#[from] EstimateError),
}

fn default_true() -> bool {
    true
}

fn default_tau() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Input-to-ẏ gain of the ultra-local model.
    pub alpha: f64,
    /// Proportional gain, per unit of the controller time base.
    pub kp: f64,
    /// Feedforward methanol per g of nitrate to remove, g/g.
    pub beta: f64,
    /// Outlet nitrate aimed at by the feedforward, g/m³.
    pub s1_target: f64,
    /// Outlet nitrite setpoint, g/m³.
    pub s2_target: f64,
    /// Setpoint slope for ramp references, g/m³ per unit time.
    #[serde(default)]
    pub s2_target_rate: f64,
    /// Estimation window length in sampling periods.
    #[serde(default = "default_tau")]
    pub tau_samples: usize,
    #[serde(default)]
    pub estimator: EstimatorKind,
    /// Clamp the feedback correction at zero.
    #[serde(default = "default_true")]
    pub clamp_feedback: bool,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: String| Err(ControlError::InvalidConfig(m));
        if !(self.alpha != 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be non-zero, got {}", self.alpha));
        }
        if !(self.kp >= 0.0 && self.kp.is_finite()) {
            return bad(format!("kp must be >= 0, got {}", self.kp));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.s1_target >= 0.0 && self.s2_target >= 0.0) {
            return bad("targets must be >= 0".into());
        }
        if !self.s2_target_rate.is_finite() {
            return bad("s2_target_rate must be finite".into());
        }
        if self.tau_samples + 1 < crate::estimation::MIN_CAPACITY {
            return bad(format!(
                "tau_samples must be at least 3, got {}",
                self.tau_samples
            ));
        }
        Ok(())
    }

    /// Reference at time `t` (controller time base, from the start of the run).
    pub fn reference_at(&self, t: f64) -> ReferenceSignal {
        ReferenceSignal {
            y_star: (self.s2_target + self.s2_target_rate * t).max(0.0),
            ydot_star: self.s2_target_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSignal {
    pub y_star: f64,
    pub ydot_star: f64,
}

impl ReferenceSignal {
    pub fn constant(y_star: f64) -> Self {
        ReferenceSignal {
            y_star,
            ydot_star: 0.0,
        }
    }
}

/// Open-loop methanol dose `max(β·(s1_in − s1_target), 0)`.
pub fn feedforward(s1_in: f64, cfg: &ControllerConfig) -> f64 {
    (cfg.beta * (s1_in - cfg.s1_target)).max(0.0)
}

/// Unclamped iP law.
pub fn ip_control(f_est: f64, reference: &ReferenceSignal, e: f64, cfg: &ControllerConfig) -> f64 {
    -(f_est - reference.ydot_star + cfg.kp * e) / cfg.alpha
}

/// Everything the controller decided at one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput {
    /// Inlet methanol to apply until the next sample, g/m³.
    pub sc_in: f64,
    pub feedforward: f64,
    /// iP output before clamping (0 while the window fills).
    pub u_fb_raw: f64,
    /// Feedback actually added to the feedforward.
    pub u_fb: f64,
    pub f_est: f64,
    pub error: f64,
    /// The clamp removed a negative correction.
    pub clamped: bool,
    /// The estimator window was full.
    pub ready: bool,
    /// Non-finite measurement: previous dose held.
    pub fault: bool,
}

/// Controller state: the estimator window and the previous action.
#[derive(Debug, Clone)]
pub struct ControllerState {
    pub window: SampleWindow,
    /// Feedback that was applied over the current interval.
    pub last_u_fb: f64,
    pub last_sc_in: f64,
    pub ready: bool,
}

#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    state: ControllerState,
    /// Controller-side signals in force over the current interval.
    pending: (f64, f64),
}

impl Controller {
    /// `ts` is the sampling period in the controller time base.
    pub fn new(cfg: ControllerConfig, ts: f64) -> Result<Self, ControlError> {
        cfg.validate()?;
        let window = SampleWindow::new(cfg.tau_samples + 1, ts)?;
        Ok(Controller {
            cfg,
            state: ControllerState {
                window,
                last_u_fb: 0.0,
                last_sc_in: 0.0,
                ready: false,
            },
            pending: (0.0, 0.0),
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// One sampling instant: record the measurement, estimate `F`, and return
    /// the methanol dose for the coming interval.
    pub fn step(
        &mut self,
        s1_in: f64,
        s2_measured: f64,
        reference: &ReferenceSignal,
    ) -> ControlOutput {
        if !(s1_in.is_finite() && s2_measured.is_finite()) {
            return ControlOutput {
                sc_in: self.state.last_sc_in,
                u_fb: self.state.last_u_fb,
                ready: self.state.ready,
                fault: true,
                ..Default::default()
            };
        }
        let cfg = &self.cfg;
        let error = s2_measured - reference.y_star;
        let (ydot_ref, prev_error) = self.pending;
        self.state.window.push(Sample {
            y: s2_measured,
            u: self.state.last_u_fb,
            ydot_ref,
            error: prev_error,
        });

        let estimate = match cfg.estimator {
            EstimatorKind::First => estimate_first(&self.state.window, cfg.alpha).map(|f| f.value),
            EstimatorKind::ClosedLoop => {
                estimate_closed_loop(&self.state.window, cfg.alpha, cfg.kp).map(|f| f.value)
            }
            EstimatorKind::Off => Ok(0.0),
        };
        let ff = feedforward(s1_in, cfg);
        let (f_est, u_fb_raw, u_fb, clamped, ready) = match estimate {
            Ok(f) => {
                let raw = ip_control(f, reference, error, cfg);
                let (applied, clamped) = if cfg.clamp_feedback && raw < 0.0 {
                    (0.0, true)
                } else {
                    (raw, false)
                };
                (f, raw, applied, clamped, true)
            }
            Err(_) => (0.0, 0.0, 0.0, false, false),
        };
        let sc_in = ff + u_fb;
        self.state.last_u_fb = u_fb;
        self.state.last_sc_in = sc_in;
        self.state.ready = ready;
        self.pending = (reference.ydot_star, error);
        ControlOutput {
            sc_in,
            feedforward: ff,
            u_fb_raw,
            u_fb,
            f_est,
            error,
            clamped,
            ready,
            fault: false,
        }
    }
}
