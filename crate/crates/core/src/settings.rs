//! Solver knobs. All have defaults and may be overridden from the scenario
//! file with the key names listed in [`Settings::entries`].

use conic::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Energy splitting: every element serves both modes.
    EnergySplitting,
    /// Mode selection: every element serves exactly one mode.
    ModeSelection,
    /// Separate reflect-only and transmit-only surfaces of half size each.
    Conventional,
}

impl Method {
    pub const ALL: [Method; 3] =
        [Method::EnergySplitting, Method::ModeSelection, Method::Conventional];

    pub fn name(self) -> &'static str {
        match self {
            Method::EnergySplitting => "es",
            Method::ModeSelection => "ms",
            Method::Conventional => "conventional",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "es" => Some(Method::EnergySplitting),
            "ms" => Some(Method::ModeSelection),
            "conventional" => Some(Method::Conventional),
            _ => None,
        }
    }
}

/// Objective of the linearised trajectory subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryObjective {
    /// Sum of the negated distance slopes of every gain, unweighted.
    GainSlopes,
    /// Same slopes weighted by each rate's sensitivity to its gain, i.e. the
    /// first-order expansion of the sum rate itself.
    RateSlopes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub solver_max_iter: u32,
    /// Stop the outer loop once the sum rate grows by less than this.
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    /// Allowed dip of the outer rate trace before it counts as non-monotone.
    pub monotone_tol: f64,
    pub srocr_step: f64,
    /// Rank-one tolerance on the relaxation parameter.
    pub srocr_tol: f64,
    pub srocr_objective_tol: f64,
    pub srocr_max_iter: usize,
    /// Relative rate loss from rank-one extraction that triggers a warning.
    pub extraction_slack: f64,
    pub chain_penalty: f64,
    pub trajectory_tol: f64,
    pub trajectory_max_iter: usize,
    pub trajectory_objective: TrajectoryObjective,
    pub min_distance: f64,
    pub power_tol: f64,
    pub power_max_iter: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            solver_max_iter: 200,
            outer_tol: 1e-2,
            outer_max_iter: 30,
            monotone_tol: 1e-6,
            srocr_step: 0.1,
            srocr_tol: 1e-3,
            srocr_objective_tol: 1e-3,
            srocr_max_iter: 60,
            extraction_slack: 0.02,
            chain_penalty: 1e3,
            trajectory_tol: 1e-2,
            trajectory_max_iter: 30,
            trajectory_objective: TrajectoryObjective::GainSlopes,
            min_distance: 1.0,
            power_tol: 1e-3,
            power_max_iter: 50,
        }
    }
}

impl Settings {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { feas_tol: self.feas_tol, opt_tol: self.opt_tol, max_iter: self.solver_max_iter }
    }

    /// Sets `key` from its file text. `Ok(false)` means the key is not a
    /// setting.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool, String> {
        fn num(v: &str) -> Result<f64, String> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("expected a number, got `{v}`"))
        }
        fn int<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
        }
        match key {
            "feas_tol" => self.feas_tol = num(value)?,
            "opt_tol" => self.opt_tol = num(value)?,
            "solver_max_iter" => self.solver_max_iter = int(value)?,
            "outer_tol" => self.outer_tol = num(value)?,
            "outer_max_iter" => self.outer_max_iter = int(value)?,
            "monotone_tol" => self.monotone_tol = num(value)?,
            "srocr_step" => self.srocr_step = num(value)?,
            "srocr_tol" => self.srocr_tol = num(value)?,
            "srocr_objective_tol" => self.srocr_objective_tol = num(value)?,
            "srocr_max_iter" => self.srocr_max_iter = int(value)?,
            "extraction_slack" => self.extraction_slack = num(value)?,
            "chain_penalty" => self.chain_penalty = num(value)?,
            "trajectory_tol" => self.trajectory_tol = num(value)?,
            "trajectory_max_iter" => self.trajectory_max_iter = int(value)?,
            "trajectory_objective" => {
                self.trajectory_objective = match value {
                    "gain_slopes" => TrajectoryObjective::GainSlopes,
                    "rate_slopes" => TrajectoryObjective::RateSlopes,
                    _ => {
                        return Err(format!(
                            "trajectory_objective must be gain_slopes or rate_slopes, got `{value}`"
                        ))
                    }
                }
            }
            "min_distance" => self.min_distance = num(value)?,
            "power_tol" => self.power_tol = num(value)?,
            "power_max_iter" => self.power_max_iter = int(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("feas_tol", self.feas_tol.to_string()),
            ("opt_tol", self.opt_tol.to_string()),
            ("solver_max_iter", self.solver_max_iter.to_string()),
            ("outer_tol", self.outer_tol.to_string()),
            ("outer_max_iter", self.outer_max_iter.to_string()),
            ("monotone_tol", self.monotone_tol.to_string()),
            ("srocr_step", self.srocr_step.to_string()),
            ("srocr_tol", self.srocr_tol.to_string()),
            ("srocr_objective_tol", self.srocr_objective_tol.to_string()),
            ("srocr_max_iter", self.srocr_max_iter.to_string()),
            ("extraction_slack", self.extraction_slack.to_string()),
            ("chain_penalty", self.chain_penalty.to_string()),
            ("trajectory_tol", self.trajectory_tol.to_string()),
            ("trajectory_max_iter", self.trajectory_max_iter.to_string()),
            (
                "trajectory_objective",
                match self.trajectory_objective {
                    TrajectoryObjective::GainSlopes => "gain_slopes",
                    TrajectoryObjective::RateSlopes => "rate_slopes",
                }
                .to_string(),
            ),
            ("min_distance", self.min_distance.to_string()),
            ("power_tol", self.power_tol.to_string()),
            ("power_max_iter", self.power_max_iter.to_string()),
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("feas_tol", self.feas_tol),
            ("opt_tol", self.opt_tol),
            ("srocr_step", self.srocr_step),
            ("srocr_tol", self.srocr_tol),
            ("srocr_objective_tol", self.srocr_objective_tol),
            ("chain_penalty", self.chain_penalty),
            ("min_distance", self.min_distance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{name} > 0"));
            }
        }
        let nonneg = [
            ("outer_tol", self.outer_tol),
            ("monotone_tol", self.monotone_tol),
            ("extraction_slack", self.extraction_slack),
            ("trajectory_tol", self.trajectory_tol),
            ("power_tol", self.power_tol),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(format!("{name} >= 0"));
            }
        }
        if self.solver_max_iter == 0 {
            return Err("solver_max_iter >= 1".into());
        }
        Ok(())
    }
}
