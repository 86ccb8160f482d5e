//! Named numeric checks with tolerances, shared by every verification suite.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// Passes when `measured < tolerance`.
    Lt,
    /// Passes when `measured > tolerance`.
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "finite_or_null")]
    pub tolerance: f64,
    #[serde(with = "finite_or_null")]
    pub measured: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            tolerance,
            measured,
            comparison: Comparison::Lt,
            pass: measured < tolerance,
        }
    }

    pub fn above(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            tolerance,
            measured,
            comparison: Comparison::Gt,
            pass: measured > tolerance,
        }
    }

    /// A boolean fact recorded as `measured = 1` (true) or `0` against `> 0.5`.
    pub fn holds(name: impl Into<String>, value: bool) -> Self {
        Check::above(name, if value { 1.0 } else { 0.0 }, 0.5)
    }

    /// Re-evaluates `pass` from the stored numbers.
    pub fn recompute(&self) -> bool {
        match self.comparison {
            Comparison::Lt => self.measured < self.tolerance,
            Comparison::Gt => self.measured > self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Keeps, per check name, the worst measurement across `reports`: the
    /// largest for `<` checks, the smallest for `>` checks, NaN over both.
    pub fn worst_of(reports: impl IntoIterator<Item = Report>) -> Report {
        let mut out = Report::new();
        for r in reports {
            for c in r.checks {
                match out.checks.iter_mut().find(|w| w.name == c.name) {
                    None => out.checks.push(c),
                    Some(w) => {
                        let worse = c.measured.is_nan()
                            || match c.comparison {
                                Comparison::Lt => c.measured > w.measured,
                                Comparison::Gt => c.measured < w.measured,
                            };
                        if worse && !w.measured.is_nan() {
                            *w = c;
                        }
                    }
                }
            }
            for n in r.notes {
                if !out.notes.contains(&n) {
                    out.notes.push(n);
                }
            }
        }
        out
    }
}

/// JSON has no NaN or infinity; they travel as `null` and come back as NaN.
pub(crate) mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
