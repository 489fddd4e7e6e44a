//! Flat key-value simulation configuration.
//!
//! ```toml
//! kind = "size-power"      # size-power | null-histogram | changepoint
//! model = 1
//! p = 100
//! c1 = 0.5
//! c2 = 0.2
//! m0 = [1, 2, 3, 4, 5, 6]
//! replications = 1000
//! seed = 1
//! ```
//!
//! Optional keys: `population`, `alpha`, `f`, `method`, `r2` for models 1–4;
//! `rho`, `t_len`, `change_at`, `runs`, `q11`, `q12`, `s`, `h2`,
//! `tolerance`, `threshold` for models 5–6.

use crate::io::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use spikefisher::changepoint::{H2Form, WindowPlan};
use spikefisher::simharness::{ChangePointSpec, ExperimentSpec, ModelId};
use spikefisher::Population;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    SizePower,
    NullHistogram,
    Changepoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub kind: SimKind,
    pub model: u8,
    #[serde(default)]
    pub population: Option<String>,
    pub p: usize,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default)]
    pub r2: Option<usize>,
    #[serde(default)]
    pub m0: Vec<usize>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub f: Option<String>,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub t_len: Option<usize>,
    #[serde(default)]
    pub change_at: Option<usize>,
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub q11: Option<usize>,
    #[serde(default)]
    pub q12: Option<usize>,
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub h2: Option<String>,
    #[serde(default)]
    pub tolerance: Option<usize>,
    #[serde(default)]
    pub threshold: Option<f64>,
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing key '{key}'"))
}

impl SimConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Built-in reduced-scale profiles.
    pub fn profile(name: &str) -> CliResult<Self> {
        let text = match name {
            "fisher-small" => {
                "kind = \"size-power\"\nmodel = 1\np = 100\nc1 = 0.5\nc2 = 0.2\nm0 = [1, 2, 3, 4, 5, 6]\nreplications = 200\nseed = 1\n"
            }
            "regression-small" => {
                "kind = \"size-power\"\nmodel = 3\np = 40\nc1 = 0.5\nc2 = 0.2\nm0 = [3, 4, 5, 6, 7]\nreplications = 400\nseed = 3\n"
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown profile '{other}' (expected fisher-small or regression-small)"
                )))
            }
        };
        Self::parse(text)
    }

    pub fn model(&self) -> CliResult<ModelId> {
        Ok(ModelId::try_from(self.model)?)
    }

    pub fn experiment(&self) -> CliResult<ExperimentSpec> {
        let model = self.model()?;
        let m0 = if self.m0.is_empty() && self.kind == SimKind::NullHistogram {
            vec![if model.is_regression() { 5 } else { 4 }]
        } else {
            self.m0.clone()
        };
        let mut spec = ExperimentSpec::new(
            model,
            self.p,
            self.c1.ok_or_else(|| missing("c1"))?,
            self.c2.ok_or_else(|| missing("c2"))?,
            m0,
            self.replications.ok_or_else(|| missing("replications"))?,
            self.seed,
        );
        if let Some(pop) = &self.population {
            spec.population = pop.parse::<Population>()?;
        }
        if let Some(a) = self.alpha {
            spec.alpha = a;
        }
        if let Some(f) = &self.f {
            spec.f = f.clone();
        }
        if let Some(m) = &self.method {
            spec.method = Some(m.parse()?);
        }
        spec.r2 = self.r2;
        spec.validate()?;
        Ok(spec)
    }

    pub fn changepoint(&self) -> CliResult<ChangePointSpec> {
        let runs = self.runs.or(self.replications).ok_or_else(|| missing("runs"))?;
        let mut spec = ChangePointSpec::new(
            self.model()?,
            self.rho.ok_or_else(|| missing("rho"))?,
            self.p,
            self.t_len.ok_or_else(|| missing("t_len"))?,
            runs,
            self.seed,
        );
        let d = WindowPlan::default_for(self.p);
        spec.plan = WindowPlan {
            q11: self.q11.unwrap_or(d.q11),
            q12: self.q12.unwrap_or(d.q12),
            s: self.s.unwrap_or(d.s),
            alpha: self.alpha.unwrap_or(d.alpha),
            h2_form: parse_h2(self.h2.as_deref())?,
        };
        spec.change_at = self.change_at;
        spec.tolerance = self.tolerance;
        spec.threshold = self.threshold;
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse_h2(s: Option<&str>) -> CliResult<H2Form> {
    match s {
        None | Some("derived") => Ok(H2Form::Derived),
        Some("printed") => Ok(H2Form::Printed),
        Some(other) => Err(CliError::Config(format!(
            "unknown h2 form '{other}' (expected derived or printed)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_parse() {
        let a = SimConfig::profile("fisher-small").unwrap().experiment().unwrap();
        assert_eq!(a.m0_grid, vec![1, 2, 3, 4, 5, 6]);
        let b = SimConfig::profile("regression-small").unwrap().experiment().unwrap();
        assert_eq!(b.regression_dims().unwrap(), (300, 100, 80));
        assert!(SimConfig::profile("nope").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SimConfig::parse("kind = \"size-power\"\nmodel = 1\np = 10\nbogus = 3\n").is_err());
    }

    #[test]
    fn changepoint_config() {
        let c = SimConfig::parse(
            "kind = \"changepoint\"\nmodel = 5\np = 10\nrho = 20.0\nt_len = 300\nruns = 2\ns = 10\n",
        )
        .unwrap();
        let spec = c.changepoint().unwrap();
        assert_eq!(spec.plan.q11, 20);
        assert_eq!(spec.change_index(), 200);
    }
}
