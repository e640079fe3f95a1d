//! The experiment description read from a single JSON document.

use std::path::{Path, PathBuf};

use lie_radon::geodesics::{random_geodesics, ClosedGeodesic};
use lie_radon::group::{Band, GroupDescriptor, DEFAULT_TOLERANCE};
use lie_radon::spectral::CoefficientBlock;
use serde::Deserialize;

use crate::CliError;

/// Family size when the config names no geodesics.
pub const DEFAULT_GEODESICS: usize = 100;
/// Coset count used by `reconstruct` on non-torus groups.
pub const DEFAULT_COSETS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Forward,
    Reconstruct,
    Verify,
    Certify,
    Witness,
}

/// Either `{"count": n, "seed": s}` or `{"explicit": [geodesic, ..]}`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicSpec {
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub explicit: Option<Vec<serde_json::Value>>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub seed: u64,
}

/// Exactly one of the three sources.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub coefficients: Option<Vec<CoefficientBlock>>,
    pub witness: Option<String>,
    pub random: Option<SeedSpec>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosetSpec {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest defect or residual a contract accepts.
    #[serde(default = "default_tolerance")]
    pub defect: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { defect: DEFAULT_TOLERANCE }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupDescriptor,
    pub band: Band,
    pub command: Command,
    pub geodesics: Option<GeodesicSpec>,
    pub function: Option<FunctionSpec>,
    pub cosets: Option<CosetSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Names accepted by `{"witness": name}`.
pub const WITNESS_NAMES: [&str; 1] = ["kernel"];

impl ExperimentConfig {
    /// Parses and validates; diagnostics name the line and the field path.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            CliError::Validation(format!(
                "line {} column {}, field `{}`: {inner}",
                inner.line(),
                inner.column(),
                e.path()
            ))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.group.validate().map_err(|e| CliError::Validation(format!("field `group`: {e}")))?;
        if !(self.tolerances.defect > 0.0 && self.tolerances.defect.is_finite()) {
            return Err(CliError::Validation("field `tolerances.defect`: must be positive and finite".into()));
        }
        if let Some(spec) = &self.geodesics {
            match (spec.count, spec.seed, &spec.explicit) {
                (Some(0), Some(_), None) => {
                    return Err(CliError::Validation("field `geodesics.count`: must be at least 1".into()))
                }
                (Some(_), Some(_), None) => {}
                (None, None, Some(list)) if !list.is_empty() => {}
                (None, None, Some(_)) => {
                    return Err(CliError::Validation("field `geodesics.explicit`: list is empty".into()))
                }
                _ => {
                    return Err(CliError::Validation(
                        "field `geodesics`: give either `count` and `seed`, or `explicit`".into(),
                    ))
                }
            }
        }
        if let Some(spec) = &self.function {
            let given = [spec.coefficients.is_some(), spec.witness.is_some(), spec.random.is_some()];
            if given.iter().filter(|g| **g).count() != 1 {
                return Err(CliError::Validation(
                    "field `function`: give exactly one of `coefficients`, `witness`, `random`".into(),
                ));
            }
            if let Some(name) = &spec.witness {
                if !WITNESS_NAMES.contains(&name.as_str()) {
                    return Err(CliError::Validation(format!(
                        "field `function.witness`: unknown witness `{name}`, expected one of {WITNESS_NAMES:?}"
                    )));
                }
            }
        }
        if let Some(c) = &self.cosets {
            if c.count == 0 {
                return Err(CliError::Validation("field `cosets.count`: must be at least 1".into()));
            }
        }
        let needs_function = matches!(self.command, Command::Forward | Command::Reconstruct | Command::Verify);
        if needs_function && self.function.is_none() {
            return Err(CliError::Validation(format!(
                "field `function`: required by the {:?} command",
                self.command
            )));
        }
        Ok(())
    }

    /// The configured family, or `None` when the config names none.
    pub fn geodesic_family(&self) -> Result<Option<Vec<ClosedGeodesic>>, CliError> {
        let Some(spec) = &self.geodesics else { return Ok(None) };
        if let Some(list) = &spec.explicit {
            return list
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    ClosedGeodesic::from_json(v, &self.group)
                        .map_err(|e| CliError::Validation(format!("field `geodesics.explicit[{i}]`: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some);
        }
        let (count, seed) = (spec.count.unwrap_or(1), spec.seed.unwrap_or(0));
        Ok(Some(random_geodesics(&self.group, count, seed)?))
    }

    /// The seed for auxiliary random draws: the family seed when there is one.
    pub fn aux_seed(&self) -> u64 {
        self.geodesics.as_ref().and_then(|g| g.seed).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json_str(
            r#"{"group":{"kind":"torus","n":2},"band":2,"command":"certify","geodesics":{"count":5,"seed":7}}"#,
        )
        .unwrap();
        assert_eq!(c.command, Command::Certify);
        assert_eq!(c.band, Band::new(2));
        assert_eq!(c.tolerances.defect, DEFAULT_TOLERANCE);
        assert_eq!(c.geodesic_family().unwrap().unwrap().len(), 5);
    }

    #[test]
    fn half_integer_band_and_large_seed() {
        let c = ExperimentConfig::from_json_str(
            r#"{"group":{"kind":"su2"},"band":1.5,"command":"certify",
                "geodesics":{"count":3,"seed":18446744073709551615}}"#,
        )
        .unwrap();
        assert_eq!(c.band, Band::from_twice(3));
        assert_eq!(c.aux_seed(), u64::MAX);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = ExperimentConfig::from_json_str(
            "{\"group\":{\"kind\":\"su2\"},\n\"band\":1,\"command\":\"verify\",\"geodesics\":{\"count\":\"x\",\"seed\":1}}",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("geodesics.count") && err.contains("line 2"), "{err}");

        let err = ExperimentConfig::from_json_str(r#"{"group":{"kind":"su2"},"band":1,"command":"verify"}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("`function`"), "{err}");

        let err = ExperimentConfig::from_json_str(
            r#"{"group":{"kind":"su2"},"band":1,"command":"forward","function":{"witness":"bogus"}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn explicit_geodesics() {
        let c = ExperimentConfig::from_json_str(
            r#"{"group":{"kind":"torus","n":2},"band":1,"command":"certify",
                "geodesics":{"explicit":[{"base":{"torus":[0.0,0.5]},"k":[1,2]}]}}"#,
        )
        .unwrap();
        let family = c.geodesic_family().unwrap().unwrap();
        assert_eq!(family.len(), 1);

        let bad = ExperimentConfig::from_json_str(
            r#"{"group":{"kind":"torus","n":2},"band":1,"command":"certify",
                "geodesics":{"explicit":[{"base":{"su2":[1,0,0,0]},"k":[1,2]}]}}"#,
        )
        .unwrap()
        .geodesic_family()
        .unwrap_err();
        assert!(bad.to_string().contains("explicit[0]"));
    }
}
