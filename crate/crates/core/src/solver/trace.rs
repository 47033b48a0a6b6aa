//! Per-iteration run records.

/// One row of a run trace. `theta` / `y_updated` describe the step that
/// produced this state (both false on the initial row).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// Cumulative prox applications (= communications).
    pub comms: u64,
    /// Cumulative per-hub component-gradient evaluations charged by the
    /// estimator's accounting model.
    pub grad_evals: u64,
    pub dist_sq: f64,
    pub psi: f64,
    pub f_gap: f64,
    pub theta: bool,
    pub y_updated: bool,
}

/// Full trajectory of one run plus bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub warnings: Vec<String>,
    pub seed: u64,
    /// First iteration at which `Ψ_t / Ψ_0` fell to the configured target.
    pub converged_at: Option<usize>,
}

impl RunTrace {
    pub const CSV_HEADER: &'static str = "iter,comms,grad_evals,dist_sq,psi,fgap,theta,y_updated";

    pub fn psi0(&self) -> f64 {
        self.records.first().map(|r| r.psi).unwrap_or(f64::NAN)
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace has at least the initial row")
    }

    /// Iterations actually performed (rows minus the initial one).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn total_comms(&self) -> u64 {
        self.last().comms
    }

    /// CSV body with shortest round-trip float formatting, so identical runs
    /// serialize byte-identically.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 64);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.iter,
                r.comms,
                r.grad_evals,
                r.dist_sq,
                r.psi,
                r.f_gap,
                u8::from(r.theta),
                u8::from(r.y_updated)
            ));
        }
        out
    }
}
