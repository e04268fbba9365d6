//! Scheduled signal outages and injected range faults.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scenario::config::{invalid, ConfigError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutageWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub svs: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum FaultWindow {
    Step {
        start_s: f64,
        end_s: f64,
        sv: u32,
        bias_m: f64,
    },
    /// Bias grows as slope * (t - start).
    Ramp {
        start_s: f64,
        end_s: f64,
        sv: u32,
        slope_mps: f64,
    },
}

impl FaultWindow {
    pub fn window(&self) -> (f64, f64) {
        match *self {
            FaultWindow::Step { start_s, end_s, .. } | FaultWindow::Ramp { start_s, end_s, .. } => (start_s, end_s),
        }
    }

    pub fn sv(&self) -> u32 {
        match *self {
            FaultWindow::Step { sv, .. } | FaultWindow::Ramp { sv, .. } => sv,
        }
    }

    pub fn bias_at(&self, t: f64) -> f64 {
        match *self {
            FaultWindow::Step { bias_m, .. } => bias_m,
            FaultWindow::Ramp { start_s, slope_mps, .. } => slope_mps * (t - start_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EventSchedule {
    pub outages: Vec<OutageWindow>,
    pub faults: Vec<FaultWindow>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActiveEvents {
    pub outaged: BTreeSet<u32>,
    /// Summed bias per faulted satellite, ascending by id.
    pub faults: Vec<(u32, f64)>,
}

impl ActiveEvents {
    pub fn fault_bias(&self, sv: u32) -> f64 {
        self.faults.iter().find(|(id, _)| *id == sv).map_or(0.0, |(_, b)| *b)
    }
}

fn within(t: f64, (start, end): (f64, f64)) -> bool {
    t >= start && t < end
}

impl EventSchedule {
    pub fn validate(&self, duration: f64) -> Result<(), ConfigError> {
        let check = |field: &str, (start, end): (f64, f64)| {
            if !(start < end) {
                return Err(invalid(field, "start_s must be < end_s"));
            }
            if start < 0.0 || end > duration {
                return Err(invalid(field, "window must lie within [0, duration_s]"));
            }
            Ok(())
        };
        for (i, o) in self.outages.iter().enumerate() {
            check(&format!("events.outages[{i}]"), (o.start_s, o.end_s))?;
        }
        for (i, f) in self.faults.iter().enumerate() {
            let field = format!("events.faults[{i}]");
            check(&field, f.window())?;
            let magnitude = match *f {
                FaultWindow::Step { bias_m, .. } => bias_m,
                FaultWindow::Ramp { slope_mps, .. } => slope_mps,
            };
            if !magnitude.is_finite() {
                return Err(invalid(&field, "fault magnitude must be finite"));
            }
        }
        Ok(())
    }

    pub fn any_outage(&self, t: f64) -> bool {
        self.outages.iter().any(|o| within(t, (o.start_s, o.end_s)))
    }

    pub fn any_fault(&self, t: f64) -> bool {
        self.faults.iter().any(|f| within(t, f.window()))
    }
}

/// Events in force at `t`; windows are half-open `[start, end)`.
pub fn active_events(schedule: &EventSchedule, t: f64) -> ActiveEvents {
    let mut outaged = BTreeSet::new();
    for o in schedule.outages.iter().filter(|o| within(t, (o.start_s, o.end_s))) {
        outaged.extend(o.svs.iter().copied());
    }
    let mut faults: Vec<(u32, f64)> = Vec::new();
    for f in schedule.faults.iter().filter(|f| within(t, f.window())) {
        let bias = f.bias_at(t);
        match faults.iter_mut().find(|(id, _)| *id == f.sv()) {
            Some((_, b)) => *b += bias,
            None => faults.push((f.sv(), bias)),
        }
    }
    faults.sort_by_key(|(id, _)| *id);
    ActiveEvents { outaged, faults }
}
