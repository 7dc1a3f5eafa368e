//! Match results: ingestion, the day-index time axis and estimation windows.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Days since the dataset epoch (its earliest match date).
pub type Day = i64;

/// Weights below this are treated as exactly zero in the likelihoods.
pub const WEIGHT_CUTOFF: f64 = 1e-6;

/// `exp(-ξ (t - t_k))`, truncated to zero under [`WEIGHT_CUTOFF`].
pub fn time_weight(xi: f64, t: Day, t_k: Day) -> f64 {
    let w = (-xi * (t - t_k) as f64).exp();
    if w < WEIGHT_CUTOFF {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TeamId(pub u32);

impl TeamId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: u32,
    pub t: Day,
    pub home_team: TeamId,
    pub away_team: TeamId,
    pub home_goals: u32,
    pub away_goals: u32,
    pub season: String,
    pub league: String,
}

/// Row-level bookkeeping from ingestion. Not part of the dataset identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub skipped_rows: usize,
    pub duplicate_rows: usize,
}

/// Time-ordered matches plus the team id ↔ name map.
#[derive(Debug, Clone)]
pub struct LeagueDataset {
    matches: Vec<MatchRecord>,
    teams: Vec<String>,
    index: HashMap<String, TeamId>,
    epoch: Option<NaiveDate>,
    pub stats: IngestStats,
}

impl PartialEq for LeagueDataset {
    fn eq(&self, other: &Self) -> bool {
        self.matches == other.matches && self.teams == other.teams && self.epoch == other.epoch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateFormat {
    /// dd/mm/yy or dd/mm/yyyy
    DayFirst,
    /// mm/dd/yy or mm/dd/yyyy
    MonthFirst,
    /// yyyy-mm-dd
    Iso,
}

impl std::str::FromStr for DateFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dmy" | "day-first" | "dd/mm/yy" | "dd/mm/yyyy" => Ok(Self::DayFirst),
            "mdy" | "month-first" | "mm/dd/yy" | "mm/dd/yyyy" => Ok(Self::MonthFirst),
            "iso" | "ymd" | "yyyy-mm-dd" => Ok(Self::Iso),
            other => Err(Error::InvalidArgument(format!("unknown date format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub date_format: Option<DateFormat>,
    /// League label when the file has no `Div` column.
    pub league: Option<String>,
}

/// Season label for a calendar date; seasons turn over on July 1.
pub fn season_label(date: NaiveDate) -> String {
    let start = if date.month() >= 7 {
        date.year()
    } else {
        date.year() - 1
    };
    format!("{}-{}", start, start + 1)
}

fn expand_year(year: &str) -> Option<i32> {
    let y: i32 = year.parse().ok()?;
    match year.len() {
        2 if y < 70 => Some(2000 + y),
        2 => Some(1900 + y),
        4 => Some(y),
        _ => None,
    }
}

fn slash_parts(s: &str) -> Option<(u32, u32, &str)> {
    let mut it = s.split('/');
    let a = it.next()?.trim().parse().ok()?;
    let b = it.next()?.trim().parse().ok()?;
    let y = it.next()?.trim();
    if it.next().is_some() {
        return None;
    }
    Some((a, b, y))
}

pub fn parse_date(s: &str, format: DateFormat) -> Option<NaiveDate> {
    let s = s.trim();
    match format {
        DateFormat::Iso => NaiveDate::parse_from_str(s, "%Y-%m-%d").ok(),
        DateFormat::DayFirst => {
            let (d, m, y) = slash_parts(s)?;
            NaiveDate::from_ymd_opt(expand_year(y)?, m, d)
        }
        DateFormat::MonthFirst => {
            let (m, d, y) = slash_parts(s)?;
            NaiveDate::from_ymd_opt(expand_year(y)?, m, d)
        }
    }
}

/// Infers the date layout of a file from all its non-empty date fields.
///
/// Slash dates are only accepted when some field pins the day position
/// (a component above 12) and no field contradicts it.
pub fn detect_date_format<'a>(dates: impl IntoIterator<Item = &'a str>) -> Result<Option<DateFormat>> {
    let mut iso = false;
    let mut slash = false;
    let mut first_gt12 = false;
    let mut second_gt12 = false;
    for d in dates {
        let d = d.trim();
        if d.is_empty() {
            continue;
        }
        if d.contains('-') {
            iso = true;
        } else if let Some((a, b, _)) = slash_parts(d) {
            slash = true;
            first_gt12 |= a > 12;
            second_gt12 |= b > 12;
        } else {
            slash = true;
        }
    }
    match (iso, slash) {
        (false, false) => Ok(None),
        (true, false) => Ok(Some(DateFormat::Iso)),
        (true, true) => Err(Error::AmbiguousDateFormat(
            "file mixes ISO and slash dates".into(),
        )),
        (false, true) => match (first_gt12, second_gt12) {
            (true, false) => Ok(Some(DateFormat::DayFirst)),
            (false, true) => Ok(Some(DateFormat::MonthFirst)),
            (true, true) => Err(Error::AmbiguousDateFormat(
                "slash dates are inconsistent about the day position".into(),
            )),
            (false, false) => Err(Error::AmbiguousDateFormat(
                "no slash date has a component above 12".into(),
            )),
        },
    }
}

struct RawRow {
    date: NaiveDate,
    home: String,
    away: String,
    home_goals: u32,
    away_goals: u32,
    league: String,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().trim_start_matches('\u{feff}') == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn parse_goals(s: &str) -> Option<u32> {
    let s = s.trim();
    s.parse::<u32>()
        .ok()
        .or_else(|| s.parse::<f64>().ok().filter(|g| *g >= 0.0 && g.fract() == 0.0 && *g < 1e6).map(|g| g as u32))
}

fn read_raw_rows<R: Read>(reader: R, opts: &IngestOptions, stats: &mut IngestStats) -> Result<Vec<RawRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let c_date = column(&headers, "Date")?;
    let c_home = column(&headers, "HomeTeam")?;
    let c_away = column(&headers, "AwayTeam")?;
    let c_hg = column(&headers, "FTHG")?;
    let c_ag = column(&headers, "FTAG")?;
    let c_div = column(&headers, "Div").ok();

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let field = |r: &csv::StringRecord, i: usize| r.get(i).unwrap_or("").trim().to_string();

    let format = match opts.date_format {
        Some(f) => Some(f),
        None => detect_date_format(records.iter().map(|r| r.get(c_date).unwrap_or("")))?,
    };

    let mut rows = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let date_s = field(r, c_date);
        let home = field(r, c_home);
        let away = field(r, c_away);
        let (hg, ag) = (parse_goals(&field(r, c_hg)), parse_goals(&field(r, c_ag)));
        let (Some(home_goals), Some(away_goals)) = (hg, ag) else {
            stats.skipped_rows += 1;
            continue;
        };
        if date_s.is_empty() || home.is_empty() || away.is_empty() || home == away {
            stats.skipped_rows += 1;
            continue;
        }
        let date = format
            .and_then(|f| parse_date(&date_s, f))
            .ok_or_else(|| Error::BadDate {
                row: i + 2,
                value: date_s.clone(),
            })?;
        let league = c_div
            .map(|c| field(r, c))
            .filter(|s| !s.is_empty())
            .or_else(|| opts.league.clone())
            .unwrap_or_default();
        rows.push(RawRow {
            date,
            home,
            away,
            home_goals,
            away_goals,
            league,
        });
    }
    Ok(rows)
}

/// Team ids follow the sorted order of the distinct names.
fn sorted_teams<'a>(names: impl Iterator<Item = &'a str>) -> (Vec<String>, HashMap<String, TeamId>) {
    let set: BTreeSet<&str> = names.collect();
    let teams: Vec<String> = set.into_iter().map(str::to_string).collect();
    let index = teams.iter().enumerate().map(|(i, n)| (n.clone(), TeamId(i as u32))).collect();
    (teams, index)
}

impl LeagueDataset {
    /// Builds a dataset from already-identified matches. `matches` are sorted
    /// by `t` (stably); match ids are kept as given.
    pub fn from_parts(mut matches: Vec<MatchRecord>, teams: Vec<String>, epoch: Option<NaiveDate>) -> Result<Self> {
        let index: HashMap<String, TeamId> = teams
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), TeamId(i as u32)))
            .collect();
        if index.len() != teams.len() {
            return Err(Error::InvalidArgument("duplicate team name".into()));
        }
        for m in &matches {
            if m.home_team.index() >= teams.len() || m.away_team.index() >= teams.len() {
                return Err(Error::InvalidArgument(format!("match {} references an unknown team id", m.match_id)));
            }
            if m.home_team == m.away_team {
                return Err(Error::InvalidArgument(format!("match {} has the same home and away team", m.match_id)));
            }
        }
        matches.sort_by_key(|m| m.t);
        Ok(Self {
            matches,
            teams,
            index,
            epoch,
            stats: IngestStats::default(),
        })
    }

    fn from_raw(mut rows: Vec<RawRow>, mut stats: IngestStats) -> Self {
        rows.sort_by_key(|r| r.date);
        let epoch = rows.first().map(|r| r.date);
        let mut seen = HashSet::new();
        let (teams, index) = sorted_teams(rows.iter().flat_map(|r| [r.home.as_str(), r.away.as_str()]));
        let mut matches = Vec::with_capacity(rows.len());
        for r in rows {
            let key = (r.date, r.home.clone(), r.away.clone(), r.home_goals, r.away_goals, r.league.clone());
            if !seen.insert(key) {
                stats.duplicate_rows += 1;
                continue;
            }
            let home_team = index[&r.home];
            let away_team = index[&r.away];
            matches.push(MatchRecord {
                match_id: matches.len() as u32,
                t: (r.date - epoch.unwrap()).num_days(),
                home_team,
                away_team,
                home_goals: r.home_goals,
                away_goals: r.away_goals,
                season: season_label(r.date),
                league: r.league,
            });
        }
        Self {
            matches,
            teams,
            index,
            epoch,
            stats,
        }
    }

    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn teams(&self) -> &[String] {
        &self.teams
    }

    pub fn team_count(&self) -> usize {
        self.teams.len()
    }

    pub fn team_name(&self, id: TeamId) -> &str {
        &self.teams[id.index()]
    }

    pub fn team_id(&self, name: &str) -> Option<TeamId> {
        self.index.get(name.trim()).copied()
    }

    pub fn epoch(&self) -> Option<NaiveDate> {
        self.epoch
    }

    pub fn date_of(&self, t: Day) -> Option<NaiveDate> {
        self.epoch.map(|e| e + chrono::Duration::days(t))
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// Last match day plus one: the window at this day is the full dataset.
    pub fn end_day(&self) -> Day {
        self.matches.last().map_or(0, |m| m.t + 1)
    }

    /// Matches strictly before day `t`, in dataset order.
    pub fn window(&self, t: Day) -> &[MatchRecord] {
        let end = self.matches.partition_point(|m| m.t < t);
        &self.matches[..end]
    }

    pub fn matches_on(&self, t: Day) -> &[MatchRecord] {
        let start = self.matches.partition_point(|m| m.t < t);
        let end = self.matches.partition_point(|m| m.t <= t);
        &self.matches[start..end]
    }

    /// Season labels in chronological order.
    pub fn seasons(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for m in &self.matches {
            if out.last() != Some(&m.season.as_str()) && !out.contains(&m.season.as_str()) {
                out.push(&m.season);
            }
        }
        out
    }

    pub fn leagues(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for m in &self.matches {
            if !out.contains(&m.league.as_str()) {
                out.push(&m.league);
            }
        }
        out
    }

    /// The sub-dataset for one league label, keeping team ids and the epoch.
    pub fn filter_league(&self, league: &str) -> Self {
        Self {
            matches: self.matches.iter().filter(|m| m.league == league).cloned().collect(),
            teams: self.teams.clone(),
            index: self.index.clone(),
            epoch: self.epoch,
            stats: self.stats,
        }
    }

    /// Distinct match days after the first `burn_in_seasons` seasons whose
    /// calendar month lies in October..=April.
    pub fn prediction_calendar(&self, burn_in_seasons: usize) -> Result<Vec<Day>> {
        let seasons = self.seasons();
        if seasons.len() < burn_in_seasons + 1 {
            return Err(Error::InsufficientSeasons {
                needed: burn_in_seasons + 1,
                found: seasons.len(),
            });
        }
        let epoch = self
            .epoch
            .ok_or_else(|| Error::InvalidArgument("dataset has no calendar epoch".into()))?;
        let burned: HashSet<&str> = seasons[..burn_in_seasons].iter().copied().collect();
        let mut days: Vec<Day> = Vec::new();
        for m in &self.matches {
            if burned.contains(m.season.as_str()) || days.last() == Some(&m.t) {
                continue;
            }
            let month = (epoch + chrono::Duration::days(m.t)).month();
            if month >= 10 || month <= 4 {
                days.push(m.t);
            }
        }
        Ok(days)
    }

    /// Writes the canonical dataset CSV.
    pub fn write_canonical<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "match_id", "t", "season", "home_team", "away_team", "home_goals", "away_goals", "date", "league",
        ])?;
        for m in &self.matches {
            let date = self.date_of(m.t).map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default();
            w.write_record([
                m.match_id.to_string(),
                m.t.to_string(),
                m.season.clone(),
                self.team_name(m.home_team).to_string(),
                self.team_name(m.away_team).to_string(),
                m.home_goals.to_string(),
                m.away_goals.to_string(),
                date,
                m.league.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_canonical(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_canonical(std::fs::File::create(path)?)
    }

    /// Reads a canonical dataset CSV. The `date` and `league` columns are
    /// optional; without `date` the dataset has no calendar epoch.
    pub fn read_canonical<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let c = |n: &str| column(&headers, n);
        let (c_id, c_t, c_season) = (c("match_id")?, c("t")?, c("season")?);
        let (c_home, c_away) = (c("home_team")?, c("away_team")?);
        let (c_hg, c_ag) = (c("home_goals")?, c("away_goals")?);
        let c_date = c("date").ok();
        let c_league = c("league").ok();

        let mut rows: Vec<(String, String, MatchRecord)> = Vec::new();
        let mut epoch: Option<NaiveDate> = None;
        let mut prev_t = Day::MIN;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let get = |c: usize| rec.get(c).unwrap_or("").trim();
            let bad = |what: &str| Error::Parse {
                line,
                message: format!("invalid {what}"),
            };
            let match_id: u32 = get(c_id).parse().map_err(|_| bad("match_id"))?;
            let t: Day = get(c_t).parse().map_err(|_| bad("t"))?;
            if t < prev_t {
                return Err(bad("t (rows must be time-ordered)"));
            }
            prev_t = t;
            let home_goals: u32 = get(c_hg).parse().map_err(|_| bad("home_goals"))?;
            let away_goals: u32 = get(c_ag).parse().map_err(|_| bad("away_goals"))?;
            let (home, away) = (get(c_home), get(c_away));
            if home.is_empty() || away.is_empty() || home == away {
                return Err(bad("team pair"));
            }
            if let Some(cd) = c_date {
                let date = parse_date(get(cd), DateFormat::Iso).ok_or_else(|| bad("date"))?;
                let implied = date
                    .checked_sub_signed(chrono::Duration::try_days(t).ok_or_else(|| bad("t"))?)
                    .ok_or_else(|| bad("date"))?;
                match epoch {
                    None => epoch = Some(implied),
                    Some(e) if e != implied => return Err(bad("date (inconsistent with t)")),
                    _ => {}
                }
            }
            rows.push((
                home.to_string(),
                away.to_string(),
                MatchRecord {
                    match_id,
                    t,
                    home_team: TeamId(0),
                    away_team: TeamId(0),
                    home_goals,
                    away_goals,
                    season: get(c_season).to_string(),
                    league: c_league.map(|c| get(c).to_string()).unwrap_or_default(),
                },
            ));
        }
        let (teams, index) = sorted_teams(rows.iter().flat_map(|(h, a, _)| [h.as_str(), a.as_str()]));
        let matches = rows
            .into_iter()
            .map(|(h, a, mut m)| {
                m.home_team = index[&h];
                m.away_team = index[&a];
                m
            })
            .collect();
        Ok(Self {
            matches,
            teams,
            index,
            epoch,
            stats: IngestStats::default(),
        })
    }

    pub fn load_canonical(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_canonical(std::fs::File::open(path)?)
    }
}

/// Ingests one results file in the football-data.co.uk layout.
pub fn ingest_csv(path: impl AsRef<Path>, date_format: Option<DateFormat>) -> Result<LeagueDataset> {
    let opts = IngestOptions {
        date_format,
        league: None,
    };
    ingest_files(&[path.as_ref()], &opts)
}

pub fn ingest_reader<R: Read>(reader: R, opts: &IngestOptions) -> Result<LeagueDataset> {
    let mut stats = IngestStats::default();
    let rows = read_raw_rows(reader, opts, &mut stats)?;
    Ok(LeagueDataset::from_raw(rows, stats))
}

/// Ingests several files into one dataset ordered by date. Files without a
/// `Div` column take their league label from `opts.league` or the file stem.
pub fn ingest_files<P: AsRef<Path>>(paths: &[P], opts: &IngestOptions) -> Result<LeagueDataset> {
    let mut stats = IngestStats::default();
    let mut rows = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let mut o = opts.clone();
        if o.league.is_none() {
            o.league = p.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        rows.extend(read_raw_rows(std::fs::File::open(p)?, &o, &mut stats)?);
    }
    Ok(LeagueDataset::from_raw(rows, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Div,Date,HomeTeam,AwayTeam,FTHG,FTAG,FTR\n";

    fn ingest(body: &str) -> Result<LeagueDataset> {
        ingest_reader(format!("{HEADER}{body}").as_bytes(), &IngestOptions::default())
    }

    #[test]
    fn single_row_maps_fields() {
        let ds = ingest("E0,16/08/14,Arsenal,Crystal Palace,2,1,H\n").unwrap();
        assert_eq!(ds.matches().len(), 1);
        let m = &ds.matches()[0];
        assert_eq!((m.home_goals, m.away_goals), (2, 1));
        assert_eq!(ds.team_name(m.home_team), "Arsenal");
        assert_eq!(ds.team_name(m.away_team), "Crystal Palace");
        assert_eq!(m.season, "2014-2015");
        assert_eq!(m.league, "E0");
        assert_eq!(m.t, 0);
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let ds = ingest("").unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.stats, IngestStats::default());
    }

    #[test]
    fn blank_score_is_skipped_and_counted() {
        let ds = ingest("E0,16/08/14,Arsenal,Crystal Palace,,1,H\n").unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.stats.skipped_rows, 1);
    }

    #[test]
    fn missing_column_is_named() {
        let err = ingest_reader("Date,HomeTeam,AwayTeam,FTHG\n".as_bytes(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "FTAG"));
    }

    #[test]
    fn undecidable_slash_dates_need_a_hint() {
        let body = "E0,01/02/15,A,B,1,0,H\n";
        assert!(matches!(ingest(body), Err(Error::AmbiguousDateFormat(_))));
        let opts = IngestOptions {
            date_format: Some(DateFormat::DayFirst),
            league: None,
        };
        let ds = ingest_reader(format!("{HEADER}{body}").as_bytes(), &opts).unwrap();
        assert_eq!(ds.epoch(), NaiveDate::from_ymd_opt(2015, 2, 1));
    }

    #[test]
    fn two_and_four_digit_years_mix() {
        let ds = ingest("E0,16/08/14,A,B,1,0,H\nE0,23/08/2014,B,A,0,0,D\n").unwrap();
        assert_eq!(ds.matches()[1].t, 7);
    }

    #[test]
    fn exact_duplicates_are_dropped() {
        let ds = ingest("E0,16/08/14,A,B,1,0,H\nE0,16/08/14,A,B,1,0,H\n").unwrap();
        assert_eq!(ds.matches().len(), 1);
        assert_eq!(ds.stats.duplicate_rows, 1);
    }

    #[test]
    fn same_date_shares_day_index() {
        let ds = ingest("E0,16/08/14,A,B,1,0,H\nE0,16/08/14,C,D,0,0,D\nE0,17/08/14,A,C,0,2,A\n").unwrap();
        let ts: Vec<Day> = ds.matches().iter().map(|m| m.t).collect();
        assert_eq!(ts, vec![0, 0, 1]);
    }

    fn toy() -> LeagueDataset {
        ingest("E0,16/08/14,A,B,1,0,H\nE0,20/08/14,C,A,0,0,D\nE0,24/08/14,B,C,0,2,A\n").unwrap()
    }

    #[test]
    fn window_boundaries() {
        let ds = toy();
        assert!(ds.window(0).is_empty());
        assert_eq!(ds.window(ds.end_day()).len(), 3);
        // matches on days 0, 4, 8: the day-4 match is excluded at t = 4
        let w = ds.window(4);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].t, 0);
        assert_eq!(ds.window(5).len(), 2);
    }

    #[test]
    fn calendar_needs_enough_seasons() {
        assert!(matches!(
            toy().prediction_calendar(1),
            Err(Error::InsufficientSeasons { needed: 2, found: 1 })
        ));
    }

    #[test]
    fn calendar_keeps_october_to_april_after_burn_in() {
        let ds = ingest(
            "E0,16/08/14,A,B,1,0,H\nE0,20/01/15,C,A,0,0,D\n\
             E0,13/09/15,A,B,1,1,D\nE0,14/11/15,B,C,0,2,A\nE0,14/11/15,A,D,0,2,A\n\
             E0,21/11/15,C,D,3,2,H\nE0,15/05/16,D,A,1,0,H\n",
        )
        .unwrap();
        let days = ds.prediction_calendar(1).unwrap();
        let dates: Vec<String> = days.iter().map(|&t| ds.date_of(t).unwrap().to_string()).collect();
        assert_eq!(dates, vec!["2015-11-14", "2015-11-21"]);
    }

    #[test]
    fn canonical_round_trip() {
        let ds = ingest("E0,16/08/14,A,B,1,0,H\nE0,20/01/15,C,A,0,0,D\nE0,13/09/15,A,B,1,1,D\n").unwrap();
        let mut buf = Vec::new();
        ds.write_canonical(&mut buf).unwrap();
        let back = LeagueDataset::read_canonical(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        let mut again = Vec::new();
        back.write_canonical(&mut again).unwrap();
        assert_eq!(buf, again);
    }
}
