//! Deterministic reports: every collection is an ordered `Vec`, floats are
//! printed by serde's shortest round-trip formatting.

use std::fmt::Write as _;

use iterint::chen::ChenConfig;
use iterint::Mat;
use serde::Serialize;

use crate::scenario::ConfigOverrides;

/// Resolved numerical settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub max_n: usize,
    pub tol: f64,
    pub quad_order: usize,
    pub subdivide_t: bool,
    pub seed: u64,
    pub dim_cap: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let c = ChenConfig::default();
        Self {
            max_n: c.max_n,
            tol: c.tol,
            quad_order: c.quad_order,
            subdivide_t: c.subdivide_t,
            seed: c.jitter_seed,
            dim_cap: 3,
        }
    }
}

impl Settings {
    /// Later layers win: `self`, then each override in order.
    pub fn layered(mut self, layers: &[&ConfigOverrides]) -> Self {
        for l in layers {
            if let Some(v) = l.max_n {
                self.max_n = v;
            }
            if let Some(v) = l.tol {
                self.tol = v;
            }
            if let Some(v) = l.quad_order {
                self.quad_order = v;
            }
            if let Some(v) = l.subdivide_t {
                self.subdivide_t = v;
            }
            if let Some(v) = l.seed {
                self.seed = v;
            }
            if let Some(v) = l.dim_cap {
                self.dim_cap = v;
            }
        }
        self
    }

    pub fn chen(&self) -> ChenConfig {
        ChenConfig {
            max_n: self.max_n,
            tol: self.tol,
            quad_order: self.quad_order,
            subdivide_t: self.subdivide_t,
            jitter_seed: self.seed,
            ..ChenConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value <= threshold`
    AtMost,
    /// `value >= threshold`
    AtLeast,
    /// `value == threshold`
    Equal,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Equal => "==",
        }
    }
}

/// Failure class of a check; picks the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckClass {
    Accuracy,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
    pub class: CheckClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64, class: CheckClass) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
            Relation::Equal => value == threshold,
        };
        Self { name: name.into(), value, threshold, relation, passed, class, note: None }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, class: CheckClass) -> Self {
        Self::new(name, value, Relation::AtMost, threshold, class)
    }

    /// A failed check standing in for a computation that errored.
    pub fn errored(name: impl Into<String>, err: &crate::CliError) -> Self {
        let class = match err {
            crate::CliError::Accuracy(_) => CheckClass::Accuracy,
            _ => CheckClass::Invariant,
        };
        let mut c = Self::new(name, f64::NAN, Relation::AtMost, 0.0, class);
        c.passed = false;
        c.note = Some(err.to_string());
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyEntry {
    pub simplex: Vec<usize>,
    pub degree: i32,
    pub matrix: Vec<Vec<f64>>,
}

pub fn rows(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Betti {
    pub from_degree: i32,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub scenario: Option<String>,
    pub settings: Settings,
    pub holonomies: Vec<HolonomyEntry>,
    pub betti: Option<Betti>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, scenario: Option<String>, settings: Settings) -> Self {
        Self {
            command: command.into(),
            scenario,
            settings,
            holonomies: Vec::new(),
            betti: None,
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn extend(&mut self, cs: impl IntoIterator<Item = Check>) {
        for c in cs {
            self.push(c);
        }
    }

    /// 0 when every check passed, else 4 if any invariant failed, else 3.
    pub fn exit_code(&self) -> i32 {
        match self.checks.iter().filter(|c| !c.passed).map(|c| c.class).max() {
            None => 0,
            Some(CheckClass::Accuracy) => 3,
            Some(CheckClass::Invariant) => 4,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        if let Some(n) = &self.scenario {
            let _ = writeln!(s, "scenario: {n}");
        }
        let st = &self.settings;
        let _ = writeln!(
            s,
            "settings: max_n={} tol={:e} quad_order={} subdivide_t={} seed={} dim_cap={}",
            st.max_n, st.tol, st.quad_order, st.subdivide_t, st.seed, st.dim_cap
        );
        if !self.holonomies.is_empty() {
            let _ = writeln!(s, "\nholonomies:");
            for h in &self.holonomies {
                let _ = writeln!(s, "  {:?} (degree {}):", h.simplex, h.degree);
                for r in &h.matrix {
                    let cells: Vec<String> = r.iter().map(|x| format!("{x:>12.6}")).collect();
                    let _ = writeln!(s, "    [{}]", cells.join(" "));
                }
            }
        }
        if let Some(b) = &self.betti {
            let _ = writeln!(s, "\ncohomology:\n  {:>6}  {:>4}", "degree", "dim");
            for (i, v) in b.values.iter().enumerate() {
                let _ = writeln!(s, "  {:>6}  {:>4}", b.from_degree + i as i32, v);
            }
        }
        if !self.checks.is_empty() {
            let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0).max(5);
            let _ = writeln!(s, "\nchecks:");
            for c in &self.checks {
                let _ = write!(
                    s,
                    "  {:<width$}  {:>12.4e} {} {:<10.3e}  {}",
                    c.name,
                    c.value,
                    c.relation.symbol(),
                    c.threshold,
                    if c.passed { "pass" } else { "FAIL" },
                );
                if let Some(n) = &c.note {
                    let _ = write!(s, "  ({n})");
                }
                s.push('\n');
            }
        }
        let _ = writeln!(s, "\nresult: {}", if self.passed { "pass" } else { "FAIL" });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn over(max_n: Option<usize>, seed: Option<u64>) -> ConfigOverrides {
        ConfigOverrides { max_n, seed, ..ConfigOverrides::default() }
    }

    proptest! {
        #[test]
        fn last_layer_wins(a in proptest::option::of(1usize..100), b in proptest::option::of(1usize..100), s in any::<u64>()) {
            let got = Settings::default().layered(&[&over(a, Some(s)), &over(b, None)]);
            prop_assert_eq!(got.max_n, b.or(a).unwrap_or(Settings::default().max_n));
            prop_assert_eq!(got.seed, s);
        }

        #[test]
        fn exit_code_is_worst_failure(classes in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..8)) {
            let mut r = Report::new("t", None, Settings::default());
            for (i, (pass, inv)) in classes.iter().enumerate() {
                let class = if *inv { CheckClass::Invariant } else { CheckClass::Accuracy };
                r.push(Check::at_most(format!("c{i}"), if *pass { 0.0 } else { 2.0 }, 1.0, class));
            }
            let want = if classes.iter().any(|(p, i)| !p && *i) { 4 }
                else if classes.iter().any(|(p, _)| !p) { 3 } else { 0 };
            prop_assert_eq!(r.exit_code(), want);
            prop_assert_eq!(r.passed, want == 0);
        }
    }

    #[test]
    fn errored_check_fails_and_serializes() {
        let c = Check::errored("x", &crate::CliError::Accuracy("series did not converge".into()));
        assert!(!c.passed);
        assert_eq!(c.class, CheckClass::Accuracy);
        let mut r = Report::new("t", None, Settings::default());
        r.push(c);
        assert!(r.to_json().contains("\"value\": null"));
        assert!(r.to_text().contains("FAIL"));
    }

    #[test]
    fn equal_relation_is_exact() {
        assert!(Check::new("b", 0.0, Relation::Equal, 0.0, CheckClass::Invariant).passed);
        assert!(!Check::new("b", 1.0, Relation::Equal, 0.0, CheckClass::Invariant).passed);
        assert!(Check::new("h", 1.0, Relation::AtLeast, 1.0, CheckClass::Invariant).passed);
    }
}
