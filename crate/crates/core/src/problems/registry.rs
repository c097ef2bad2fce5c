use std::collections::BTreeMap;

use super::funnel::{DEFAULT_FUNNEL_V_BOUND, DEFAULT_FUNNEL_X_BOUND};
use super::{DiagonalGaussian, Flat, Funnel, GaussianMixture, LinearGaussian, TargetProblem, TorusReward};
use crate::error::{Error, Result};

pub const PROBLEM_NAMES: &[&str] = &[
    "gaussian",
    "funnel",
    "mixture9",
    "mixture25",
    "torus",
    "linear-gaussian",
    "flat",
];

/// String key=value parameters for a named problem, as read from a config
/// file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemParams {
    values: BTreeMap<String, String>,
}

impl ProblemParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .trim()
                .parse()
                .map_err(|_| Error::InvalidProblem(format!("cannot parse parameter {key}={raw}"))),
        }
    }

    fn only(&self, problem: &str, allowed: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidProblem(format!(
                "problem `{problem}` has no parameter `{k}` (expected one of {allowed:?})"
            ))),
            None => Ok(()),
        }
    }
}

/// Builds a built-in problem by name.
pub fn build_problem(name: &str, params: &ProblemParams) -> Result<Box<dyn TargetProblem>> {
    let problem: Box<dyn TargetProblem> = match name {
        "gaussian" => {
            params.only(name, &["dim", "sigma", "half_width"])?;
            Box::new(DiagonalGaussian::new(
                params.get("dim", 2)?,
                params.get("sigma", 1.0)?,
                params.get("half_width", 10.0)?,
            )?)
        }
        "funnel" => {
            params.only(name, &["dim", "scale_v", "v_bound", "x_bound"])?;
            Box::new(Funnel::new(
                params.get("dim", 10)?,
                params.get("scale_v", 3.0)?,
                params.get("v_bound", DEFAULT_FUNNEL_V_BOUND)?,
                params.get("x_bound", DEFAULT_FUNNEL_X_BOUND)?,
            )?)
        }
        "mixture9" => {
            params.only(name, &[])?;
            Box::new(GaussianMixture::nine_modes()?)
        }
        "mixture25" => {
            params.only(name, &[])?;
            Box::new(GaussianMixture::twenty_five_modes()?)
        }
        "torus" => {
            params.only(name, &["dim", "alpha", "beta", "c"])?;
            let dim: usize = params.get("dim", 2)?;
            Box::new(TorusReward::new(
                dim,
                params.get("alpha", 2.0)?,
                params.get("beta", 3.0)?,
                params.get("c", dim as f64 + 1.0)?,
            )?)
        }
        "linear-gaussian" => {
            params.only(name, &["side", "blur", "corr_len", "noise", "seed"])?;
            Box::new(LinearGaussian::blurred_image(
                params.get("side", 8)?,
                params.get("blur", 0.8)?,
                params.get("corr_len", 1.0)?,
                params.get("noise", 0.2)?,
                params.get("seed", 2024)?,
            )?)
        }
        "flat" => {
            params.only(name, &["dim", "level"])?;
            Box::new(Flat::new(params.get("dim", 2)?, params.get("level", 0.0)?)?)
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    Ok(problem)
}
