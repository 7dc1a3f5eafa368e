//! Flat `key=value` parameter files shared by both models.
//!
//! ```text
//! # comment
//! model=marco
//! xi=0.0035
//! gamma=0.27
//! theta1=0
//! theta2=1
//! theta3=-0.08
//! m=2
//! alpha.Arsenal=1.21
//! beta.Arsenal=-0.35
//! alpha.Stoke=0.79
//! beta.Stoke=0.12
//! ```
//!
//! Team names may contain `=`; lines are split at the last one.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::LeagueDataset;
use crate::dixon_coles::RatingSet;
use crate::error::{Error, Result};
use crate::estimation::{FitResult, ModelKind};
use crate::grid::Dependence;
use crate::marco::Theta;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    pub model: ModelKind,
    pub xi: f64,
    pub gamma: f64,
    pub dependence: Dependence,
    /// `(team name, α, β)` in file order.
    pub teams: Vec<(String, f64, f64)>,
}

impl ParamFile {
    pub fn from_fit(fit: &FitResult) -> Self {
        let r = &fit.ratings;
        Self {
            model: fit.model,
            xi: fit.xi,
            gamma: r.gamma,
            dependence: fit.dependence,
            teams: r
                .names()
                .iter()
                .zip(r.alpha().iter().zip(r.beta()))
                .map(|(n, (a, b))| (n.clone(), *a, *b))
                .collect(),
        }
    }

    /// Ratings keyed by the dataset's team ids. Every named team must exist
    /// in the dataset.
    pub fn ratings_for(&self, dataset: &LeagueDataset) -> Result<RatingSet> {
        let mut ids = Vec::with_capacity(self.teams.len());
        for (name, _, _) in &self.teams {
            ids.push(dataset.team_id(name).ok_or_else(|| Error::UnknownTeam(name.clone()))?);
        }
        RatingSet::new(
            ids,
            self.teams.iter().map(|t| t.0.clone()).collect(),
            self.teams.iter().map(|t| t.1).collect(),
            self.teams.iter().map(|t| t.2).collect(),
            self.gamma,
        )
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "model={}", self.model)?;
        writeln!(w, "xi={}", self.xi)?;
        writeln!(w, "gamma={}", self.gamma)?;
        match self.dependence {
            Dependence::DixonColes { rho } => writeln!(w, "rho={rho}")?,
            Dependence::MarCo { theta } => {
                writeln!(w, "theta1={}", theta.t1)?;
                writeln!(w, "theta2={}", theta.t2)?;
                writeln!(w, "theta3={}", theta.t3)?;
            }
        }
        writeln!(w, "m={}", self.teams.len())?;
        for (name, a, b) in &self.teams {
            writeln!(w, "alpha.{name}={a}")?;
            writeln!(w, "beta.{name}={b}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut scalars: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut alpha: BTreeMap<String, f64> = BTreeMap::new();
        let mut beta: BTreeMap<String, f64> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.rsplit_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected key=value".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = || -> Result<f64> {
                let v: f64 = value.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{value}` is not a number"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse {
                        line: line_no,
                        message: format!("`{key}` is not finite"),
                    })
                }
            };
            let team_entry = |map: &mut BTreeMap<String, f64>, order: &mut Vec<String>, name: &str, v: f64| -> Result<()> {
                if name.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "empty team name".into(),
                    });
                }
                if map.insert(name.to_string(), v).is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("duplicate entry for `{name}`"),
                    });
                }
                if !order.iter().any(|n| n == name) {
                    order.push(name.to_string());
                }
                Ok(())
            };
            if let Some(name) = key.strip_prefix("alpha.") {
                team_entry(&mut alpha, &mut order, name, num()?)?;
            } else if let Some(name) = key.strip_prefix("beta.") {
                team_entry(&mut beta, &mut order, name, num()?)?;
            } else if matches!(key, "model" | "xi" | "gamma" | "rho" | "theta1" | "theta2" | "theta3" | "m") {
                if key != "model" {
                    num()?;
                }
                if scalars.insert(key, (line_no, value)).is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("duplicate key `{key}`"),
                    });
                }
            } else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                });
            }
        }

        let missing = |k: &str| Error::Parse {
            line: 0,
            message: format!("missing key `{k}`"),
        };
        let get = |k: &str| -> Result<f64> {
            let (_, v) = scalars.get(k).ok_or_else(|| missing(k))?;
            Ok(v.parse().expect("validated above"))
        };
        let (model_line, model_text) = *scalars.get("model").ok_or_else(|| missing("model"))?;
        let model: ModelKind = model_text.parse().map_err(|e: Error| Error::Parse {
            line: model_line,
            message: e.to_string(),
        })?;
        let dependence = match model {
            ModelKind::DixonColes => Dependence::DixonColes { rho: get("rho")? },
            ModelKind::MarCo => Dependence::MarCo {
                theta: Theta::new(get("theta1")?, get("theta2")?, get("theta3")?),
            },
        };
        let xi = get("xi")?;
        if xi < 0.0 {
            return Err(Error::Parse {
                line: scalars["xi"].0,
                message: "xi must be non-negative".into(),
            });
        }
        let mut teams = Vec::with_capacity(order.len());
        for name in order {
            let a = alpha.get(&name).ok_or_else(|| missing(&format!("alpha.{name}")))?;
            let b = beta.get(&name).ok_or_else(|| missing(&format!("beta.{name}")))?;
            teams.push((name, *a, *b));
        }
        if let Some(&(line, _)) = scalars.get("m") {
            let m = get("m")?;
            if m != teams.len() as f64 {
                return Err(Error::Parse {
                    line,
                    message: format!("m = {m} but {} teams are listed", teams.len()),
                });
            }
        }
        Ok(Self {
            model,
            xi,
            gamma: get("gamma")?,
            dependence,
            teams,
        })
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut s = String::new();
        r.read_to_string(&mut s)?;
        Self::parse(&s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
