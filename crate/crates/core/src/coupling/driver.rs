//! Time-stepping driver: adaptive step control with cut-and-retry plus
//! report-time snapshots.

use crate::coupling::model::{CoupledModel, CoupledState, SolverSettings};
use crate::error::{Error, Result};

/// Simulation schedule. All times and steps are in seconds.
#[derive(Debug, Clone)]
pub struct Schedule {
    /// Final simulation time.
    pub t_end: f64,
    /// First attempted step size.
    pub dt_init: f64,
    /// Multiplier applied to the step size after every accepted step (>= 1).
    pub dt_growth: f64,
    /// Upper bound on the step size.
    pub dt_max: f64,
    /// Lower bound; a step that still fails after being cut below this
    /// aborts the run.
    pub dt_min: f64,
    /// Multiplier applied when a step fails to converge (in (0, 1)).
    pub dt_cut: f64,
    /// Times at which the state is handed to the report callback. The driver
    /// lands on each report time exactly.
    pub report_times: Vec<f64>,
    /// Nonlinear solver settings used for every step.
    pub solver: SolverSettings,
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) {
            return Err(Error::Scheduling(format!(
                "end time must be non-negative, got {}",
                self.t_end
            )));
        }
        if !(self.dt_init > 0.0) || !(self.dt_min > 0.0) || !(self.dt_max > 0.0) {
            return Err(Error::Scheduling(
                "initial, minimum, and maximum step sizes must be positive".into(),
            ));
        }
        if self.dt_min > self.dt_max {
            return Err(Error::Scheduling(format!(
                "minimum step {} exceeds maximum step {}",
                self.dt_min, self.dt_max
            )));
        }
        if !(self.dt_growth >= 1.0) {
            return Err(Error::Scheduling(format!(
                "step growth factor must be >= 1, got {}",
                self.dt_growth
            )));
        }
        if !(self.dt_cut > 0.0 && self.dt_cut < 1.0) {
            return Err(Error::Scheduling(format!(
                "step cut factor must lie in (0, 1), got {}",
                self.dt_cut
            )));
        }
        for t in &self.report_times {
            if !(*t >= 0.0 && t.is_finite()) {
                return Err(Error::Scheduling(format!("bad report time {t}")));
            }
        }
        Ok(())
    }
}

/// Record of one accepted time step.
#[derive(Debug, Clone, Copy)]
pub struct StepLog {
    /// Time at the end of the step (seconds).
    pub time: f64,
    /// Step size that was accepted.
    pub dt: f64,
    /// Newton iterations the accepted step needed.
    pub iterations: usize,
    /// Number of times the step was cut before it succeeded.
    pub retries: usize,
}

/// Advances `state0` to `schedule.t_end`.
///
/// Steps that fail with a nonlinear- or linear-solver error are retried with
/// the step size multiplied by `dt_cut`; once the size would drop below
/// `dt_min` the run aborts with the underlying error. Configuration and
/// geometry errors are never retried. `on_report` is called once per report
/// time (and for report times at or before the start, once with the initial
/// state); the driver shortens steps so it lands on each report time exactly.
pub fn run(
    model: &CoupledModel,
    state0: CoupledState,
    schedule: &Schedule,
    on_report: &mut dyn FnMut(&CoupledState) -> Result<()>,
) -> Result<(CoupledState, Vec<StepLog>)> {
    schedule.validate()?;
    let eps = 1e-9 * schedule.t_end.max(schedule.dt_min);
    let mut reports = schedule.report_times.clone();
    reports.sort_by(|a, b| a.partial_cmp(b).expect("finite report times"));

    let mut state = state0;
    let mut log = Vec::new();

    // Report times at or before the start are served by the initial state.
    while let Some(&t) = reports.first() {
        if t <= state.time + eps {
            on_report(&state)?;
            reports.remove(0);
        } else {
            break;
        }
    }

    let mut dt = schedule.dt_init.min(schedule.dt_max);
    while state.time < schedule.t_end - eps {
        let mut target = schedule.t_end;
        if let Some(&t) = reports.first() {
            target = target.min(t);
        }
        let remaining = target - state.time;
        let mut dt_try = dt.min(schedule.dt_max).min(remaining);
        // Absorb slivers: stretch slightly rather than leave a step shorter
        // than the minimum behind.
        if remaining - dt_try < schedule.dt_min && remaining <= dt_try * (1.0 + 1e-9) {
            dt_try = remaining;
        }

        let mut retries = 0usize;
        let outcome = loop {
            match model.step(&state, dt_try, &schedule.solver) {
                Ok(out) => break out,
                Err(err @ (Error::Nonlinear(_) | Error::LinearSolve(_))) => {
                    retries += 1;
                    dt_try *= schedule.dt_cut;
                    if dt_try < schedule.dt_min {
                        return Err(Error::Nonlinear(format!(
                            "step at t = {:.6} s failed after {} cuts (step below minimum {}): {}",
                            state.time, retries, schedule.dt_min, err
                        )));
                    }
                }
                Err(err) => return Err(err),
            }
        };
        state = outcome.state;
        log.push(StepLog {
            time: state.time,
            dt: dt_try,
            iterations: outcome.iterations,
            retries,
        });
        dt = (dt_try * schedule.dt_growth).min(schedule.dt_max);

        while let Some(&t) = reports.first() {
            if t <= state.time + eps {
                on_report(&state)?;
                reports.remove(0);
            } else {
                break;
            }
        }
    }
    Ok((state, log))
}
