//! Market probabilities from score grids: 1-X-2 and Under/Over lines.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{LeagueDataset, MatchRecord};
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::grid::{build_score_grid, ScoreGrid, DEFAULT_GRID_BOUND, DEFAULT_TAIL_TOLERANCE};

/// A betting market with ordered outcome classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Market {
    /// Home, Draw, Away.
    OneXTwo,
    /// Under, Over a line of `goals + 0.5` total goals.
    UnderOver { goals: u32 },
}

impl Market {
    pub const UO15: Market = Market::UnderOver { goals: 1 };
    pub const UO25: Market = Market::UnderOver { goals: 2 };

    pub fn class_labels(&self) -> &'static [&'static str] {
        match self {
            Self::OneXTwo => &["H", "D", "A"],
            Self::UnderOver { .. } => &["U", "O"],
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_labels().len()
    }

    /// Index of the class a final score falls in.
    pub fn realized_class(&self, home_goals: u32, away_goals: u32) -> usize {
        match *self {
            Self::OneXTwo => match home_goals.cmp(&away_goals) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 2,
            },
            Self::UnderOver { goals } => usize::from(home_goals + away_goals > goals),
        }
    }

    /// The half-integer line for Under/Over markets.
    pub fn threshold(&self) -> Option<f64> {
        match self {
            Self::OneXTwo => None,
            Self::UnderOver { goals } => Some(*goals as f64 + 0.5),
        }
    }
}

impl fmt::Display for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OneXTwo => write!(f, "1x2"),
            Self::UnderOver { goals } => write!(f, "uo{goals}.5"),
        }
    }
}

impl std::str::FromStr for Market {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "1x2" {
            return Ok(Self::OneXTwo);
        }
        s.strip_prefix("uo")
            .and_then(|r| r.strip_suffix(".5"))
            .and_then(|g| g.parse().ok())
            .map(|goals| Self::UnderOver { goals })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown market `{s}` (expected 1x2 or uoN.5)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketForecast {
    pub match_id: u32,
    pub market: Market,
    pub model: String,
    /// One probability per class, in [`Market::class_labels`] order.
    pub probs: Vec<f64>,
}

/// Class probabilities from a grid.
///
/// Mass outside the grid goes to the open-ended class (Over) for Under/Over
/// and is split in proportion to the in-grid masses for 1-X-2.
pub fn market_probs(grid: &ScoreGrid, market: Market) -> Result<Vec<f64>> {
    if grid.tail_mass() > grid.tail_tolerance() {
        return Err(Error::TailMass {
            achieved: grid.tail_mass(),
            tolerance: grid.tail_tolerance(),
            bound: grid.bound(),
        });
    }
    let mut probs = vec![0.0; market.class_count()];
    for (h, a, p) in grid.cells() {
        probs[market.realized_class(h as u32, a as u32)] += p;
    }
    let inside: f64 = probs.iter().sum();
    match market {
        Market::OneXTwo => {
            probs.iter_mut().for_each(|p| *p /= inside);
        }
        Market::UnderOver { .. } => {
            probs[1] = 1.0 - probs[0];
        }
    }
    Ok(probs)
}

#[derive(Debug, Clone, Copy)]
pub struct PredictOptions {
    pub grid_bound: usize,
    pub tail_tolerance: f64,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            grid_bound: DEFAULT_GRID_BOUND,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DayForecasts {
    pub forecasts: Vec<MarketForecast>,
    /// `(match_id, reason)` for fixtures that could not be priced.
    pub skipped: Vec<(u32, String)>,
}

/// Prices every fixture in every requested market. Fixtures involving a team
/// without ratings are skipped with a reason.
pub fn predict_day(fit: &FitResult, fixtures: &[MatchRecord], markets: &[Market], model: &str, opts: PredictOptions) -> DayForecasts {
    let mut out = DayForecasts::default();
    for fx in fixtures {
        let grid = fit
            .ratings
            .intensities(fx.home_team, fx.away_team)
            .and_then(|(l, m)| build_score_grid(l, m, &fit.dependence, opts.grid_bound, opts.tail_tolerance));
        let grid = match grid {
            Ok(g) => g,
            Err(e) => {
                out.skipped.push((fx.match_id, e.to_string()));
                continue;
            }
        };
        for &market in markets {
            match market_probs(&grid, market) {
                Ok(probs) => out.forecasts.push(MarketForecast {
                    match_id: fx.match_id,
                    market,
                    model: model.to_string(),
                    probs,
                }),
                Err(e) => out.skipped.push((fx.match_id, e.to_string())),
            }
        }
    }
    out
}

/// Writes `match_id,t,home,away,model,pH,pD,pA,pU15,pO15,pU25,pO25`, one row
/// per (match, model). Markets that were not forecast are left empty.
pub fn write_forecasts_csv<W: Write>(writer: W, dataset: &LeagueDataset, forecasts: &[MarketForecast]) -> Result<()> {
    let by_id: BTreeMap<u32, &MatchRecord> = dataset.matches().iter().map(|m| (m.match_id, m)).collect();
    let mut rows: BTreeMap<(i64, u32, &str), [Option<f64>; 7]> = BTreeMap::new();
    for f in forecasts {
        let m = by_id
            .get(&f.match_id)
            .ok_or_else(|| Error::InvalidArgument(format!("forecast for unknown match {}", f.match_id)))?;
        let row = rows.entry((m.t, m.match_id, f.model.as_str())).or_insert([None; 7]);
        let slots: &[usize] = match f.market {
            Market::OneXTwo => &[0, 1, 2],
            Market::UO15 => &[3, 4],
            Market::UO25 => &[5, 6],
            Market::UnderOver { .. } => &[],
        };
        for (&slot, &p) in slots.iter().zip(&f.probs) {
            row[slot] = Some(p);
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["match_id", "t", "home", "away", "model", "pH", "pD", "pA", "pU15", "pO15", "pU25", "pO25"])?;
    for ((t, id, model), probs) in rows {
        let m = by_id[&id];
        let mut rec = vec![
            id.to_string(),
            t.to_string(),
            dataset.team_name(m.home_team).to_string(),
            dataset.team_name(m.away_team).to_string(),
            model.to_string(),
        ];
        rec.extend(probs.iter().map(|p| p.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
