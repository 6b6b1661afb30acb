//! Structured results of verification runs.

use serde::{Deserialize, Serialize};

/// Environment variable that zeroes `runtime_ms`, making report bytes depend
/// only on the inputs.
pub const NO_TIMING_ENV: &str = "SDGEO_NO_TIMING";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub scenario: String,
    pub check: String,
    pub samples: usize,
    pub seed: u64,
    pub max_abs: f64,
    pub max_normalized: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    pub runtime_ms: u64,
}

impl ResidualReport {
    /// Report for a pointwise sweep; `pass` is `max_normalized <= tolerance`.
    pub fn pointwise(check: impl Into<String>, samples: usize, max_abs: f64, max_normalized: f64, tolerance: f64) -> Self {
        ResidualReport {
            scenario: String::new(),
            check: check.into(),
            samples,
            seed: 0,
            max_abs,
            max_normalized,
            tolerance,
            // NaN never passes
            pass: max_normalized <= tolerance,
            degenerate: None,
            grid: None,
            runtime_ms: 0,
        }
    }

    pub fn with_scenario(mut self, scenario: impl Into<String>) -> Self {
        self.scenario = scenario.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_grid(mut self, grid: Vec<usize>) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_runtime(mut self, started: std::time::Instant) -> Self {
        self.runtime_ms = if timing_disabled() {
            0
        } else {
            started.elapsed().as_millis() as u64
        };
        self
    }
}

pub fn timing_disabled() -> bool {
    std::env::var(NO_TIMING_ENV).map(|v| !v.is_empty() && v != "0").unwrap_or(false)
}

/// Running maximum of absolute and normalized residuals.
#[derive(Clone, Copy, Debug, Default)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub max_normalized: f64,
    pub samples: usize,
}

impl ResidualStats {
    pub fn push(&mut self, abs: f64, scale: f64) {
        let norm = abs / (1.0 + scale);
        self.max_abs = nan_max(self.max_abs, abs);
        self.max_normalized = nan_max(self.max_normalized, norm);
        self.samples += 1;
    }

    /// Records a residual that is already normalized.
    pub fn push_normalized(&mut self, abs: f64, normalized: f64) {
        self.max_abs = nan_max(self.max_abs, abs);
        self.max_normalized = nan_max(self.max_normalized, normalized);
        self.samples += 1;
    }

    pub fn merge(mut self, other: ResidualStats) -> Self {
        self.max_abs = nan_max(self.max_abs, other.max_abs);
        self.max_normalized = nan_max(self.max_normalized, other.max_normalized);
        self.samples += other.samples;
        self
    }

    pub fn report(&self, check: impl Into<String>, tolerance: f64) -> ResidualReport {
        ResidualReport::pointwise(check, self.samples, self.max_abs, self.max_normalized, tolerance)
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
