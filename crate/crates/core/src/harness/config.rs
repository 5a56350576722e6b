//! Experiment configuration, read from JSON. Every field except `experiment`
//! has a default, so `{"experiment": "metric-selftest"}` is a valid file.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::flow_core::Embedding;
use crate::map_algebra::{make_rmap, DisturbanceProfile, MonotoneMap};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FlowConvergence,
    PairCovariance,
    CoalescenceTime,
    TimeReversal,
    MetricSelftest,
    WebDistance,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::FlowConvergence,
        Experiment::PairCovariance,
        Experiment::CoalescenceTime,
        Experiment::TimeReversal,
        Experiment::MetricSelftest,
        Experiment::WebDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FlowConvergence => "flow-convergence",
            Experiment::PairCovariance => "pair-covariance",
            Experiment::CoalescenceTime => "coalescence-time",
            Experiment::TimeReversal => "time-reversal",
            Experiment::MetricSelftest => "metric-selftest",
            Experiment::WebDistance => "web-distance",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// One r value or a ladder of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RSpec {
    One(f64),
    Ladder(Vec<f64>),
}

/// The basic disturbance map: r-maps by parameter, or an explicit period-1 map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Disturbance {
    R { r: RSpec },
    Map { map: MonotoneMap },
}

impl Default for Disturbance {
    fn default() -> Self {
        Disturbance::R { r: RSpec::One(0.05) }
    }
}

/// A rung of the disturbance ladder.
#[derive(Clone, Debug)]
pub struct Rung {
    pub label: String,
    pub r: Option<f64>,
    pub profile: DisturbanceProfile,
}

impl Disturbance {
    pub fn rungs(&self) -> Result<Vec<Rung>> {
        match self {
            Disturbance::R { r } => {
                let rs = match r {
                    RSpec::One(v) => vec![*v],
                    RSpec::Ladder(v) => v.clone(),
                };
                if rs.is_empty() {
                    return Err(Error::Config("empty r ladder".into()));
                }
                rs.into_iter()
                    .map(|r| Ok(Rung { label: format!("r={r}"), r: Some(r), profile: make_rmap(r)? }))
                    .collect()
            }
            Disturbance::Map { map } => {
                Ok(vec![Rung { label: "map".into(), r: None, profile: DisturbanceProfile::new(map.clone())? }])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// `None` keeps everything in memory.
    pub dir: Option<PathBuf>,
    pub report: String,
    pub timing: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths { dir: Some(PathBuf::from("out")), report: "report.json".into(), timing: "timing.json".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub disturbance: Disturbance,
    #[serde(default = "default_embedding")]
    pub embedding: Embedding,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    /// Euler step of the coalescing sampler.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// The first seed drives the run; the second, if present, the one re-run.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Final time of trajectories; flows are sampled on `(0, horizon]`.
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub params: Params,
}

/// Experiment-specific knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Second starting point of the pair experiments; the first is `(0, 0)`.
    pub separation: f64,
    /// Times at which pair statistics are taken.
    pub times: Vec<f64>,
    /// Equally spaced circle starts (coalescence time, reversed marginals).
    pub n_points: usize,
    pub lambdas: Vec<f64>,
    /// Brownian-bridge crossing correction in the coalescing sampler.
    pub bridge: bool,
    /// Euler step for the coalescing part of the time-reversal experiment.
    pub reversal_dt: f64,
    /// Random flow pairs in the metric and web experiments.
    pub pairs: usize,
    /// Window level `n` of the flow metrics.
    pub level: u32,
    /// Permit one re-run with a fresh seed when a check fails.
    pub rerun: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            separation: 0.3,
            times: vec![0.25, 0.5, 1.0],
            n_points: 64,
            lambdas: vec![-1.0, 1.0, PI * PI / 4.0],
            bridge: true,
            reversal_dt: 1e-4,
            pairs: 20,
            level: 2,
            rerun: true,
        }
    }
}

fn default_embedding() -> Embedding {
    Embedding::Poisson
}

fn one() -> f64 {
    1.0
}

fn default_runs() -> usize {
    10_000
}

fn default_dt() -> f64 {
    1e-5
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

impl ExperimentConfig {
    /// Defaults for `experiment`, with the pair ladder for `pair-covariance`.
    pub fn new(experiment: Experiment) -> Self {
        let mut c: ExperimentConfig =
            serde_json::from_value(serde_json::json!({ "experiment": experiment })).expect("defaults deserialize");
        if experiment == Experiment::PairCovariance {
            c.disturbance = Disturbance::R { r: RSpec::Ladder(vec![0.2, 0.1, 0.05]) };
        }
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn seed(&self) -> u64 {
        self.seeds[0]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_runs < 1 {
            return bad("n_runs must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad(format!("eps must lie in (0, 1], got {}", self.eps));
        }
        if !(self.dt > 0.0 && self.dt < self.horizon) {
            return bad(format!("dt must lie in (0, horizon), got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive and finite, got {}", self.horizon));
        }
        let p = &self.params;
        if p.times.iter().any(|&t| !(t > 0.0 && t <= self.horizon)) {
            return bad("pair times must lie in (0, horizon]".into());
        }
        if !(p.separation > 0.0 && p.separation < 1.0 / self.eps) {
            return bad("separation must lie inside one period".into());
        }
        if p.n_points < 1 || p.level < 1 || p.pairs < 1 {
            return bad("n_points, level and pairs must be positive".into());
        }
        if !(p.reversal_dt > 0.0 && p.reversal_dt < self.horizon) {
            return bad("reversal_dt must lie in (0, horizon)".into());
        }
        self.disturbance.rungs()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_and_full_files() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "coalescence-time"}"#).unwrap();
        assert_eq!(c.n_runs, 10_000);
        assert_eq!(c.params.n_points, 64);
        assert_eq!(c.disturbance.rungs().unwrap()[0].r, Some(0.05));

        let c = ExperimentConfig::from_json(
            r#"{"experiment": "pair-covariance", "disturbance": {"r": [0.2, 0.1]},
                "embedding": "lattice", "n_runs": 50, "seeds": [4, 9],
                "output": {"dir": null}, "params": {"times": [0.5]}}"#,
        )
        .unwrap();
        assert_eq!(c.disturbance.rungs().unwrap().len(), 2);
        assert_eq!(c.embedding, Embedding::Lattice);
        assert_eq!(c.output.dir, None);
        assert_eq!(c.params.times, vec![0.5]);

        let m = r#"{"experiment": "flow-convergence", "disturbance": {"map": {"period": 1.0,
                    "breakpoints": [[0.0, -0.3, 0.3], [0.3, 0.3, 0.3], [0.7, 0.7, 0.7]]}}}"#;
        let c = ExperimentConfig::from_json(m).unwrap();
        assert_eq!(c.disturbance.rungs().unwrap()[0].label, "map");
    }

    #[test]
    fn rejects_bad_files() {
        for bad in [
            r#"{"experiment": "nope"}"#,
            r#"{"experiment": "time-reversal", "n_runs": 0}"#,
            r#"{"experiment": "time-reversal", "seeds": []}"#,
            r#"{"experiment": "time-reversal", "eps": 2.0}"#,
            r#"{"experiment": "time-reversal", "disturbance": {"r": 0.7}}"#,
            r#"{"experiment": "time-reversal", "typo": 1}"#,
            r#"{"experiment": "pair-covariance", "params": {"times": [2.0]}}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
        assert!("web-distance".parse::<Experiment>().is_ok());
        assert!("web".parse::<Experiment>().is_err());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::new(Experiment::PairCovariance);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
