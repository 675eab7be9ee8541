//! Scenario files: platoon parameters, a graph, observations and the
//! options individual commands need.

use std::path::Path;

use platoon_risk::risk::ObservationSet;
use platoon_risk::{CommGraph, GraphKind, PlatoonParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Noise gains: one value for every vehicle, or one per vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Noise {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub n: usize,
    pub tau: f64,
    pub beta: f64,
    pub r: f64,
    pub c: f64,
    pub epsilon: f64,
    pub g: Noise,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        ParamsSpec {
            n: 20,
            tau: 0.04,
            beta: 1.0,
            r: 2.0,
            c: 1.1,
            epsilon: 0.1,
            g: Noise::Scalar(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub horizon: f64,
    pub burn_in: f64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Links to try, as 1-based vertex pairs. Defaults to every absent link
    /// for `add-edge` and every present one for `remove-edge`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<(usize, usize)>>,
    /// Weight of added links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: ParamsSpec,
    pub graph: GraphKind,
    #[serde(default = "ObservationSet::empty", skip_serializing_if = "ObservationSet::is_empty")]
    pub observations: ObservationSet,
    /// Target pair for `risk single|multi|range`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    /// Design target for the feasibility screen in `limits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            params: ParamsSpec::default(),
            graph: GraphKind::Complete,
            observations: ObservationSet::empty(),
            target: None,
            design_target: None,
            simulation: None,
            sweep: None,
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Noise::Vector(g) = &self.params.g {
            if g.len() != self.params.n {
                return Err(CliError::Scenario(format!(
                    "g has {} entries but n = {}",
                    g.len(),
                    self.params.n
                )));
            }
        }
        self.platoon()?.validate()?;
        self.graph()?;
        Ok(())
    }

    pub fn platoon(&self) -> Result<PlatoonParams, CliError> {
        let p = &self.params;
        let g = match &p.g {
            Noise::Scalar(g) => vec![*g; p.n],
            Noise::Vector(g) => g.clone(),
        };
        let params = PlatoonParams {
            n: p.n,
            tau: p.tau,
            beta: p.beta,
            r: p.r,
            c: p.c,
            epsilon: p.epsilon,
            g,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn graph(&self) -> Result<CommGraph, CliError> {
        Ok(CommGraph::build(&self.graph, self.params.n)?)
    }

    pub fn scalar_noise(&self) -> Result<f64, CliError> {
        match self.params.g {
            Noise::Scalar(g) => Ok(g),
            Noise::Vector(_) => Err(CliError::Scenario("this command needs a scalar g".into())),
        }
    }

    pub fn require_target(&self) -> Result<usize, CliError> {
        self.target
            .ok_or_else(|| CliError::Scenario("scenario needs a \"target\" pair for this command".into()))
    }
}
