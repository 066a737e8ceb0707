//! Online estimation of the lumped term `F` of the ultra-local model
//! `dy/dt = F + α·u` from a sliding window of samples.
//!
//! Two estimators are provided:
//!
//! * [`estimate_first`], the algebraic integral filter
//!   `F = −(6/τ³)·∫₀^τ [(τ − 2σ)·y(σ) + α·σ·(τ − σ)·u(σ)] dσ`,
//!   with σ measured from the start of the window. The kernel annihilates
//!   constants in `y`, so the initial condition of the window drops out, and
//!   the estimate is exact whenever `F` is constant over the window.
//! * [`estimate_closed_loop`], the window mean of `ẏ* − α·u − K_P·e`, which
//!   is what `F` must have been if the iP loop realized its error dynamics.
//!
//! Samples are taken on a uniform grid. `y` is a point measurement at the
//! sample instant and is reconstructed linearly between samples; the
//! controller-side signals (`u`, `ẏ*`, `e`) are held over the interval that
//! ends at the sample. Both integrals are evaluated exactly on that
//! reconstruction, which makes the first estimator exact (to round-off) on a
//! sampled plant `dy/dt = F + α·u` with piecewise-constant `u`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_CAPACITY: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("window not ready: {have} of {need} samples")]
    NotReady { have: usize, need: usize },
    #[error("window capacity must be at least {MIN_CAPACITY}, got {0}")]
    CapacityTooSmall(usize),
    #[error("sample period must be > 0, got {0}")]
    BadPeriod(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Algebraic integral estimator driven by the measured output.
    #[default]
    First,
    /// Window mean of the iP's own error-dynamics residual.
    ClosedLoop,
    /// `F` forced to zero.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FEstimate {
    /// Output units per unit of the window's time base.
    pub value: f64,
    pub method: EstimatorKind,
}

/// One sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    /// Output measured at this instant.
    pub y: f64,
    /// Input applied over the interval ending at this instant.
    pub u: f64,
    /// Reference derivative the controller used for that interval.
    pub ydot_ref: f64,
    /// Tracking error the controller used for that interval.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct SampleWindow {
    capacity: usize,
    ts: f64,
    samples: VecDeque<Sample>,
}

impl SampleWindow {
    /// `capacity` samples span `(capacity − 1)·ts`.
    pub fn new(capacity: usize, ts: f64) -> Result<Self, EstimateError> {
        if capacity < MIN_CAPACITY {
            return Err(EstimateError::CapacityTooSmall(capacity));
        }
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(EstimateError::BadPeriod(ts));
        }
        Ok(SampleWindow {
            capacity,
            ts,
            samples: VecDeque::with_capacity(capacity),
        })
    }

    pub fn push(&mut self, sample: Sample) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// Window length τ.
    pub fn span(&self) -> f64 {
        (self.capacity - 1) as f64 * self.ts
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter()
    }

    fn ready(&self) -> Result<(), EstimateError> {
        if self.is_full() {
            Ok(())
        } else {
            Err(EstimateError::NotReady {
                have: self.samples.len(),
                need: self.capacity,
            })
        }
    }
}

/// Algebraic integral estimate of `F`.
pub fn estimate_first(w: &SampleWindow, alpha: f64) -> Result<FEstimate, EstimateError> {
    w.ready()?;
    let h = w.ts;
    let tau = w.span();
    // ∫σ(τ − σ)dσ antiderivative
    let g = |s: f64| tau * s * s / 2.0 - s * s * s / 3.0;
    let mut int_y = 0.0;
    let mut int_u = 0.0;
    let mut prev = w.samples[0];
    for (j, cur) in w.samples.iter().enumerate().skip(1) {
        let a = (j - 1) as f64 * h;
        let b = j as f64 * h;
        let m = 0.5 * (a + b);
        // Simpson is exact for (linear kernel)·(linear y).
        int_y += h / 6.0
            * ((tau - 2.0 * a) * prev.y
                + 2.0 * (tau - 2.0 * m) * (prev.y + cur.y)
                + (tau - 2.0 * b) * cur.y);
        int_u += cur.u * (g(b) - g(a));
        prev = *cur;
    }
    let value = -6.0 / (tau * tau * tau) * (int_y + alpha * int_u);
    Ok(FEstimate {
        value,
        method: EstimatorKind::First,
    })
}

/// Closed-loop estimate: mean of `ẏ* − α·u − K_P·e` over the window.
pub fn estimate_closed_loop(
    w: &SampleWindow,
    alpha: f64,
    kp: f64,
) -> Result<FEstimate, EstimateError> {
    w.ready()?;
    let n = (w.capacity - 1) as f64;
    let sum: f64 = w
        .samples
        .iter()
        .skip(1)
        .map(|s| s.ydot_ref - alpha * s.u - kp * s.error)
        .sum();
    Ok(FEstimate {
        value: sum / n,
        method: EstimatorKind::ClosedLoop,
    })
}
