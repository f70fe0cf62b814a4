/// Input that produced a deviation, kept for failing checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub input: String,
    pub deviation: f64,
}

/// Result of a numerical check. `passed` is always `max_deviation <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub check_name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
}

/// Accumulates deviations and builds a [`VerificationReport`].
#[derive(Debug, Clone)]
pub struct ReportBuilder {
    name: String,
    tolerance: f64,
    max_deviation: f64,
    witnesses: Vec<Witness>,
}

const MAX_WITNESSES: usize = 16;

impl ReportBuilder {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            max_deviation: 0.0,
            witnesses: Vec::new(),
        }
    }

    pub fn record(&mut self, deviation: f64, input: impl FnOnce() -> String) {
        // NaN must fail the check rather than vanish in a max.
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        self.max_deviation = self.max_deviation.max(deviation);
        if deviation > self.tolerance && self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness {
                input: input(),
                deviation,
            });
        }
    }

    pub fn merge(&mut self, other: ReportBuilder) {
        self.max_deviation = self.max_deviation.max(other.max_deviation);
        for w in other.witnesses {
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
    }

    pub fn finish(self) -> VerificationReport {
        VerificationReport {
            passed: self.max_deviation <= self.tolerance,
            check_name: self.name,
            max_deviation: self.max_deviation,
            tolerance: self.tolerance,
            witnesses: self.witnesses,
        }
    }
}

impl VerificationReport {
    /// Report for a single scalar comparison.
    pub fn single(name: impl Into<String>, deviation: f64, tolerance: f64, input: impl Into<String>) -> Self {
        let mut b = ReportBuilder::new(name, tolerance);
        let input = input.into();
        b.record(deviation, || input);
        b.finish()
    }
}
