//! Machine-readable check outcomes.

/// Outcome of one empirical check. `pass` iff `worst_margin >= -slack`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub samples: u64,
    /// Bound minus empirical value at the tightest tested state.
    pub worst_margin: f64,
    /// Statistical slack in force at that state.
    pub slack: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckReport {
    pub const CSV_HEADER: &'static str = "check,samples,worst_margin,slack,pass,detail";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.name,
            self.samples,
            self.worst_margin,
            self.slack,
            u8::from(self.pass),
            self.detail.replace(',', ";")
        )
    }

    pub fn to_line(&self) -> String {
        format!(
            "{} {} (margin {:.3e}, slack {:.3e}, samples {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.worst_margin,
            self.slack,
            self.samples
        )
    }
}

/// Renders a batch of reports as a CSV table.
pub fn to_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from(CheckReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}
