use serde::{Deserialize, Serialize};

/// Itemized pass/fail record produced by the verification routines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            checks: 0,
            failures: Vec::new(),
        }
    }

    /// Records one check; the message is only built on failure.
    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(msg());
        }
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.checks += 1;
        self.failures.push(msg.into());
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn absorb(&mut self, other: CheckReport) {
        self.checks += other.checks;
        self.failures
            .extend(other.failures.into_iter().map(|f| format!("{}: {f}", other.name)));
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            write!(f, "{}: ok ({} checks)", self.name, self.checks)
        } else {
            writeln!(f, "{}: {} of {} checks failed", self.name, self.failures.len(), self.checks)?;
            for (i, msg) in self.failures.iter().enumerate().take(20) {
                writeln!(f, "  [{i}] {msg}")?;
            }
            if self.failures.len() > 20 {
                writeln!(f, "  ... {} more", self.failures.len() - 20)?;
            }
            Ok(())
        }
    }
}
