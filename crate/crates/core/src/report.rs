/// What happened inside one subproblem optimisation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Convex solves attempted.
    pub solves: usize,
    /// Solves that did not come back optimal.
    pub solver_failures: usize,
    /// The first convex problem failed and the input was returned unchanged.
    pub first_solve_failed: bool,
    /// The ordering chain had to be relaxed with a penalised slack.
    pub chain_relaxed: bool,
    /// The relaxed chain still carried slack at termination.
    pub chain_slack_left: bool,
    /// Candidate updates discarded because the true rate or the ordering
    /// chain got worse.
    pub rejected: usize,
    /// Iteration caps hit before the stopping rule fired.
    pub not_converged: usize,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn absorb(&mut self, other: SolveReport) {
        self.solves += other.solves;
        self.solver_failures += other.solver_failures;
        self.first_solve_failed |= other.first_solve_failed;
        self.chain_relaxed |= other.chain_relaxed;
        self.chain_slack_left |= other.chain_slack_left;
        self.rejected += other.rejected;
        self.not_converged += other.not_converged;
        self.warnings.extend(other.warnings);
    }

    pub fn merged(reports: impl IntoIterator<Item = SolveReport>) -> SolveReport {
        let mut r = SolveReport::default();
        for x in reports {
            r.absorb(x);
        }
        r
    }
}
