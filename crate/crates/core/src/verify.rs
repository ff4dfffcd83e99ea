//! Pass/fail records for the identity checks.

/// One checked identity or estimate.
///
/// `pass` holds exactly when the check is applicable and
/// `residual <= threshold`. Soft (non-`hard`) records are informational and
/// never fail a run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub name: String,
    /// Short label of the identity being checked.
    pub anchor: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    pub hard: bool,
    pub applicable: bool,
    pub detail: String,
}

impl VerificationRecord {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, residual: f64, threshold: f64) -> Self {
        VerificationRecord {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            threshold,
            pass: residual <= threshold,
            hard: true,
            applicable: true,
            detail: String::new(),
        }
    }

    /// A check whose preconditions do not hold for the given input.
    pub fn not_applicable(name: impl Into<String>, anchor: impl Into<String>, why: impl Into<String>) -> Self {
        VerificationRecord {
            name: name.into(),
            anchor: anchor.into(),
            residual: f64::NAN,
            threshold: f64::NAN,
            pass: false,
            hard: false,
            applicable: false,
            detail: why.into(),
        }
    }

    /// Records whose measured value must lie in `[lo, hi]`. The residual is the
    /// distance outside the interval.
    pub fn in_range(name: impl Into<String>, anchor: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let residual = if value.is_nan() {
            f64::INFINITY
        } else {
            (lo - value).max(value - hi).max(0.0)
        };
        VerificationRecord::new(name, anchor, residual, 0.0)
            .with_detail(format!("value {value:.6e} in [{lo}, {hi}]"))
    }

    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// True when this record should fail a run.
    pub fn is_hard_failure(&self) -> bool {
        self.hard && self.applicable && !self.pass
    }
}
