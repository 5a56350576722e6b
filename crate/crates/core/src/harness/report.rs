//! Checks, reports and their files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::Result;

/// One verdict. `stat` is a z-score or a test statistic; `p` is set for
/// hypothesis tests.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub criterion: u8,
    /// The hypothesis or identity the check is about.
    pub null: String,
    /// Sample size, or the number of cases for deterministic checks.
    pub n: usize,
    pub estimate: f64,
    pub se: Option<f64>,
    pub reference: Option<f64>,
    pub stat: Option<f64>,
    pub p: Option<f64>,
    /// The pass rule, in words.
    pub rule: String,
    pub pass: bool,
}

impl Check {
    /// `|estimate − reference| ≤ k · se`.
    pub fn z(criterion: u8, name: impl Into<String>, null: impl Into<String>, n: usize, est: f64, se: f64, reference: f64, k: f64) -> Check {
        let z = (est - reference) / se;
        Check {
            name: name.into(),
            criterion,
            null: null.into(),
            n,
            estimate: est,
            se: Some(se),
            reference: Some(reference),
            stat: Some(z),
            p: None,
            rule: format!("|z| <= {k}"),
            pass: z.abs() <= k,
        }
    }

    /// A test with p-value `p`, passing when `p > alpha`.
    pub fn p(criterion: u8, name: impl Into<String>, null: impl Into<String>, n: usize, stat: f64, p: f64, alpha: f64) -> Check {
        Check {
            name: name.into(),
            criterion,
            null: null.into(),
            n,
            estimate: stat,
            se: None,
            reference: None,
            stat: Some(stat),
            p: Some(p),
            rule: format!("p > {alpha}"),
            pass: p > alpha,
        }
    }

    /// `estimate ≤ bound`.
    pub fn at_most(criterion: u8, name: impl Into<String>, null: impl Into<String>, n: usize, est: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            criterion,
            null: null.into(),
            n,
            estimate: est,
            se: None,
            reference: Some(bound),
            stat: None,
            p: None,
            rule: format!("estimate <= {bound:e}"),
            pass: est <= bound,
        }
    }

    /// `estimate ≥ bound`.
    pub fn at_least(criterion: u8, name: impl Into<String>, null: impl Into<String>, n: usize, est: f64, bound: f64) -> Check {
        Check {
            rule: format!("estimate >= {bound:e}"),
            pass: est >= bound,
            ..Check::at_most(criterion, name, null, n, est, bound)
        }
    }
}

/// A CSV table produced by an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Checks and tables from one seeded pass of an experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Attempt {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub seconds: f64,
}

impl Attempt {
    pub fn new(seed: u64, checks: Vec<Check>, tables: Vec<Table>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        Attempt { seed, checks, passed, tables, seconds: 0.0 }
    }
}

/// The outcome of an experiment. A failed first attempt is followed by at
/// most one re-run with a fresh seed; both are kept and the verdict is the
/// last attempt's.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub attempts: Vec<Attempt>,
    pub passed: bool,
}

#[derive(Serialize)]
struct Timing<'a> {
    experiment: &'a str,
    seconds: Vec<f64>,
}

impl ExperimentReport {
    pub fn final_attempt(&self) -> &Attempt {
        self.attempts.last().expect("at least one attempt")
    }

    pub fn checks_for(&self, criterion: u8) -> impl Iterator<Item = &Check> {
        self.final_attempt().checks.iter().filter(move |c| c.criterion == criterion)
    }

    /// Writes the report, the timing file and every table under `dir`.
    /// Tables of a re-run get the suffix `_rerun`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let out = &self.config.output;
        fs::write(dir.join(&out.report), serde_json::to_string_pretty(self)? + "\n")?;
        let timing = Timing { experiment: &self.experiment, seconds: self.attempts.iter().map(|a| a.seconds).collect() };
        fs::write(dir.join(&out.timing), serde_json::to_string_pretty(&timing)? + "\n")?;
        for (k, a) in self.attempts.iter().enumerate() {
            for t in &a.tables {
                let name = if k == 0 { format!("{}.csv", t.name) } else { format!("{}_rerun.csv", t.name) };
                t.write(&dir.join(name))?;
            }
        }
        Ok(())
    }

    /// One line per check, for terminals.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (k, a) in self.attempts.iter().enumerate() {
            s += &format!("{} attempt {} (seed {}): {}\n", self.experiment, k + 1, a.seed, verdict(a.passed));
            for c in &a.checks {
                let detail = match (c.stat, c.p) {
                    (_, Some(p)) => format!("stat {:.4} p {:.4}", c.estimate, p),
                    (Some(z), None) => format!("est {:.6} z {:.2}", c.estimate, z),
                    _ => format!("est {:.4e}", c.estimate),
                };
                s += &format!("  [{}] c{} {}: {} ({}, n = {})\n", verdict(c.pass), c.criterion, c.name, detail, c.rule, c.n);
            }
        }
        s
    }
}

pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_rules() {
        assert!(Check::z(3, "m", "mean 0", 100, 0.1, 0.05, 0.0, 4.0).pass);
        assert!(!Check::z(3, "m", "mean 0", 100, 0.3, 0.05, 0.0, 4.0).pass);
        assert!(Check::p(3, "ks", "N(0,1)", 100, 0.05, 0.2, 0.01).pass);
        assert!(!Check::p(3, "ks", "N(0,1)", 100, 0.3, 0.001, 0.01).pass);
        assert!(Check::at_most(7, "d", "d = 0", 1, 0.0, 0.0).pass);
        let c = Check::at_least(7, "d", "d large", 1, 0.2, 0.25);
        assert!(!c.pass);
        assert_eq!(c.rule, "estimate >= 2.5e-1");
    }

    #[test]
    fn writes_files() {
        let dir = std::env::temp_dir().join(format!("cbf-report-{}", std::process::id()));
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1.0, 2.5]);
        let cfg = super::super::config::ExperimentConfig::new(super::super::config::Experiment::MetricSelftest);
        let r = ExperimentReport {
            experiment: "metric-selftest".into(),
            config: cfg,
            attempts: vec![Attempt::new(1, vec![Check::at_most(7, "d", "d = 0", 1, 0.0, 0.0)], vec![t])],
            passed: true,
        };
        r.write(&dir).unwrap();
        assert_eq!(fs::read_to_string(dir.join("x.csv")).unwrap(), "a,b\n1,2.5\n");
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(json["attempts"][0]["checks"][0]["criterion"], 7);
        assert!(fs::read_to_string(dir.join("report.json")).unwrap().find("seconds").is_none());
        fs::remove_dir_all(&dir).unwrap();
    }
}
