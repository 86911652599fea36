//! Scoring-event logs and the label sequences derived from them.

mod parse;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{
    parse_game_log, read_game_logs_json, read_games, read_team_stats, write_game_logs_json,
    write_raw_csv, write_raw_json, InputFormat,
};

#[derive(Error, Debug)]
pub enum DataError {
    #[error("game {game_id}, row {row}: {message}")]
    Malformed {
        game_id: String,
        row: usize,
        message: String,
    },
    #[error("game {game_id}, row {row}: team {team:?} is neither {home:?} nor {away:?}")]
    UnknownTeam {
        game_id: String,
        row: usize,
        team: String,
        home: String,
        away: String,
    },
    #[error("game {game_id}, row {row}: event at period {period} clock {clock} is out of order")]
    OutOfOrder {
        game_id: String,
        row: usize,
        period: u32,
        clock: f64,
    },
    #[error("game {game_id}, row {row}: unknown event type {event_type:?}")]
    UnknownEventType {
        game_id: String,
        row: usize,
        event_type: String,
    },
    #[error("expected exactly one game, found {0}")]
    GameCount(usize),
    #[error("no point differential for team {0:?}")]
    MissingStats(String),
    #[error("no same/different symbols to estimate from")]
    NoSymbols,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "FG2")]
    Fg2,
    #[serde(rename = "FG3")]
    Fg3,
    /// One or more made free throws by one team at a single stoppage.
    #[serde(rename = "FT_TRIP")]
    FtTrip,
}

impl EventKind {
    pub fn is_field_goal(self) -> bool {
        matches!(self, EventKind::Fg2 | EventKind::Fg3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringEvent {
    pub period: u32,
    pub clock_seconds_remaining: f64,
    pub team: String,
    pub kind: EventKind,
    /// Free-throw trip that directly follows a made basket by the same team.
    #[serde(default)]
    pub and_one: bool,
}

impl ScoringEvent {
    pub fn field_goal(period: u32, clock: f64, team: &str, three: bool) -> Self {
        Self {
            period,
            clock_seconds_remaining: clock,
            team: team.to_string(),
            kind: if three {
                EventKind::Fg3
            } else {
                EventKind::Fg2
            },
            and_one: false,
        }
    }

    pub fn free_throws(period: u32, clock: f64, team: &str, and_one: bool) -> Self {
        Self {
            period,
            clock_seconds_remaining: clock,
            team: team.to_string(),
            kind: EventKind::FtTrip,
            and_one,
        }
    }

    /// Sort key: period ascending, clock descending.
    fn precedes_or_ties(&self, next: &ScoringEvent) -> bool {
        self.period < next.period
            || (self.period == next.period
                && self.clock_seconds_remaining >= next.clock_seconds_remaining)
    }
}

/// One game's made scoring plays in the order they happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameLog {
    pub game_id: String,
    pub home_team: String,
    pub away_team: String,
    pub events: Vec<ScoringEvent>,
}

impl GameLog {
    /// Validates team membership, ordering and the and-one flag.
    pub fn new(
        game_id: impl Into<String>,
        home_team: impl Into<String>,
        away_team: impl Into<String>,
        events: Vec<ScoringEvent>,
    ) -> Result<Self> {
        let game = Self {
            game_id: game_id.into(),
            home_team: home_team.into(),
            away_team: away_team.into(),
            events,
        };
        game.validate()?;
        Ok(game)
    }

    pub fn validate(&self) -> Result<()> {
        let malformed = |row: usize, message: String| DataError::Malformed {
            game_id: self.game_id.clone(),
            row,
            message,
        };
        if self.home_team == self.away_team {
            return Err(malformed(0, "home and away team are the same".into()));
        }
        for (i, ev) in self.events.iter().enumerate() {
            let row = i + 1;
            if ev.period == 0 {
                return Err(malformed(row, "period must be at least 1".into()));
            }
            if !(ev.clock_seconds_remaining.is_finite() && ev.clock_seconds_remaining >= 0.0) {
                return Err(malformed(
                    row,
                    format!("invalid clock {}", ev.clock_seconds_remaining),
                ));
            }
            if ev.team != self.home_team && ev.team != self.away_team {
                return Err(DataError::UnknownTeam {
                    game_id: self.game_id.clone(),
                    row,
                    team: ev.team.clone(),
                    home: self.home_team.clone(),
                    away: self.away_team.clone(),
                });
            }
            if ev.and_one && ev.kind != EventKind::FtTrip {
                return Err(malformed(row, "and_one set on a field goal".into()));
            }
            if i > 0 && !self.events[i - 1].precedes_or_ties(ev) {
                return Err(DataError::OutOfOrder {
                    game_id: self.game_id.clone(),
                    row,
                    period: ev.period,
                    clock: ev.clock_seconds_remaining,
                });
            }
        }
        Ok(())
    }
}

/// Which scoring events count as trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Field goals only.
    #[serde(rename = "fg")]
    FgOnly,
    /// Field goals plus free-throw trips that are not and-ones.
    #[serde(rename = "fg+ft")]
    FgPlusFt,
}

impl Mode {
    pub fn keeps(self, ev: &ScoringEvent) -> bool {
        match self {
            Mode::FgOnly => ev.kind.is_field_goal(),
            Mode::FgPlusFt => ev.kind.is_field_goal() || !ev.and_one,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FgOnly => "fg",
            Mode::FgPlusFt => "fg+ft",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    FullGame,
    FirstHalf,
    SecondHalf,
}

/// Overtime periods belong to the second half unless excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Overtime {
    #[default]
    Include,
    Exclude,
}

pub const REGULATION_PERIODS: u32 = 4;

impl Scope {
    pub fn contains(self, period: u32, overtime: Overtime) -> bool {
        if period > REGULATION_PERIODS && overtime == Overtime::Exclude {
            return false;
        }
        match self {
            Scope::FullGame => true,
            Scope::FirstHalf => period <= 2,
            Scope::SecondHalf => period >= 3,
        }
    }
}

/// Team labels of the events kept by `mode` within `scope`, in game order.
/// Overtime is included.
pub fn scoring_sequence(game: &GameLog, mode: Mode, scope: Scope) -> Vec<&str> {
    scoring_sequence_with(game, mode, scope, Overtime::Include)
}

pub fn scoring_sequence_with(
    game: &GameLog,
    mode: Mode,
    scope: Scope,
    overtime: Overtime,
) -> Vec<&str> {
    game.events
        .iter()
        .filter(|ev| scope.contains(ev.period, overtime) && mode.keeps(ev))
        .map(|ev| ev.team.as_str())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Scored by a different team than the previous event.
    D,
    /// Scored by the same team as the previous event.
    S,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DerivedSequence {
    pub labels: Vec<Symbol>,
}

impl DerivedSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn same_count(&self) -> usize {
        self.labels.iter().filter(|&&s| s == Symbol::S).count()
    }

    pub fn longest_same_run(&self) -> usize {
        let mut best = 0;
        let mut cur = 0;
        for &s in &self.labels {
            if s == Symbol::S {
                cur += 1;
                best = best.max(cur);
            } else {
                cur = 0;
            }
        }
        best
    }
}

impl fmt::Display for DerivedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(match s {
                Symbol::D => "D",
                Symbol::S => "S",
            })?;
        }
        Ok(())
    }
}

pub fn derive_ds<T: PartialEq>(labels: &[T]) -> DerivedSequence {
    DerivedSequence {
        labels: labels
            .windows(2)
            .map(|w| if w[0] == w[1] { Symbol::S } else { Symbol::D })
            .collect(),
    }
}

/// Longest block of identical consecutive labels.
pub fn longest_team_run<T: PartialEq>(labels: &[T]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for (i, label) in labels.iter().enumerate() {
        if i > 0 && labels[i - 1] == *label {
            cur += 1;
        } else {
            cur = 1;
        }
        best = best.max(cur);
    }
    best
}

/// Longest block of consecutive `team` labels.
pub fn longest_run_of<T: PartialEq>(labels: &[T], team: &T) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for label in labels {
        if label == team {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Pooled S and total symbol counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SymbolCounts {
    pub same: u64,
    pub total: u64,
}

impl SymbolCounts {
    pub fn add_labels<T: PartialEq>(&mut self, labels: &[T]) {
        let ds = derive_ds(labels);
        self.same += ds.same_count() as u64;
        self.total += ds.len() as u64;
    }

    pub fn proportion(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(DataError::NoSymbols);
        }
        Ok(self.same as f64 / self.total as f64)
    }
}

/// Pooled proportion of S symbols across the derived sequences of `games`.
pub fn estimate_p_same(games: &[GameLog], mode: Mode, scope: Scope) -> Result<f64> {
    let mut counts = SymbolCounts::default();
    for game in games {
        counts.add_labels(&scoring_sequence(game, mode, scope));
    }
    counts.proportion()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSeasonStats {
    pub team: String,
    pub point_differential: f64,
}

pub const DEFAULT_HOME_ADVANTAGE: f64 = 5.0;
pub const DEFAULT_MATCH_WINDOW: f64 = 3.0;

/// Keeps games where the visitor's point differential is within `window` of
/// the home team's differential plus `home_advantage`.
pub fn matched_games_filter(
    games: &[GameLog],
    stats: &HashMap<String, f64>,
    home_advantage: f64,
    window: f64,
) -> Result<Vec<GameLog>> {
    let lookup = |team: &str| {
        stats
            .get(team)
            .copied()
            .ok_or_else(|| DataError::MissingStats(team.to_string()))
    };
    let mut kept = Vec::new();
    for game in games {
        let home = lookup(&game.home_team)?;
        let visitor = lookup(&game.away_team)?;
        if (visitor - (home + home_advantage)).abs() <= window {
            kept.push(game.clone());
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game(events: Vec<ScoringEvent>) -> GameLog {
        GameLog::new("g1", "A", "B", events).unwrap()
    }

    #[test]
    fn sequence_modes() {
        let g = game(vec![
            ScoringEvent::field_goal(1, 700.0, "A", false),
            ScoringEvent::free_throws(1, 650.0, "B", false),
            ScoringEvent::field_goal(1, 600.0, "A", true),
        ]);
        assert_eq!(
            scoring_sequence(&g, Mode::FgOnly, Scope::FullGame),
            ["A", "A"]
        );
        assert_eq!(
            scoring_sequence(&g, Mode::FgPlusFt, Scope::FullGame),
            ["A", "B", "A"]
        );
    }

    #[test]
    fn and_one_trip_is_dropped() {
        let g = game(vec![
            ScoringEvent::field_goal(1, 700.0, "A", false),
            ScoringEvent::free_throws(1, 700.0, "A", true),
        ]);
        assert_eq!(scoring_sequence(&g, Mode::FgPlusFt, Scope::FullGame), ["A"]);
    }

    #[test]
    fn halves_and_overtime() {
        let g = game(vec![
            ScoringEvent::field_goal(1, 10.0, "A", false),
            ScoringEvent::field_goal(2, 10.0, "B", false),
            ScoringEvent::field_goal(3, 10.0, "A", false),
            ScoringEvent::field_goal(4, 10.0, "A", false),
            ScoringEvent::field_goal(5, 10.0, "B", false),
        ]);
        let first = scoring_sequence(&g, Mode::FgOnly, Scope::FirstHalf);
        let second = scoring_sequence(&g, Mode::FgOnly, Scope::SecondHalf);
        assert_eq!(first, ["A", "B"]);
        assert_eq!(second, ["A", "A", "B"]);
        assert_eq!(
            scoring_sequence_with(&g, Mode::FgOnly, Scope::SecondHalf, Overtime::Exclude),
            ["A", "A"]
        );
        assert_eq!(
            scoring_sequence_with(&g, Mode::FgOnly, Scope::FullGame, Overtime::Exclude).len(),
            4
        );
    }

    #[test]
    fn derive_ds_examples() {
        let labels: Vec<char> = "ABBABAAABAAB".chars().collect();
        assert_eq!(derive_ds(&labels).to_string(), "D S D D D S S D D S D");
        assert_eq!(derive_ds(&["A", "A", "A", "A"]).to_string(), "S S S");
        assert!(derive_ds(&["A"]).is_empty());
        assert!(derive_ds::<&str>(&[]).is_empty());
    }

    #[test]
    fn longest_team_run_examples() {
        assert_eq!(longest_team_run(&["A", "B", "B", "A"]), 2);
        assert_eq!(longest_team_run(&["B"; 7]), 7);
        assert_eq!(longest_team_run::<&str>(&[]), 0);
        assert_eq!(longest_run_of(&["A", "B", "B", "A"], &"A"), 1);
        assert_eq!(longest_run_of(&["A", "B", "B", "A"], &"C"), 0);
    }

    #[test]
    fn p_same_estimate() {
        // labels A B B A B -> D S D D
        let g = game(
            ["A", "B", "B", "A", "B"]
                .iter()
                .enumerate()
                .map(|(i, t)| ScoringEvent::field_goal(1, 700.0 - i as f64, t, false))
                .collect(),
        );
        assert_eq!(
            estimate_p_same(&[g], Mode::FgOnly, Scope::FullGame).unwrap(),
            0.25
        );

        let single = game(vec![ScoringEvent::field_goal(1, 700.0, "A", false)]);
        assert!(matches!(
            estimate_p_same(&[single.clone(), single], Mode::FgOnly, Scope::FullGame),
            Err(DataError::NoSymbols)
        ));
    }

    #[test]
    fn matched_filter_boundaries() {
        let g = GameLog::new("g", "H", "V", vec![]).unwrap();
        let stats = |h: f64, v: f64| HashMap::from([("H".to_string(), h), ("V".to_string(), v)]);
        let kept =
            matched_games_filter(std::slice::from_ref(&g), &stats(2.0, 4.0), 5.0, 3.0).unwrap();
        assert_eq!(kept.len(), 1);
        let kept =
            matched_games_filter(std::slice::from_ref(&g), &stats(0.0, 0.0), 5.0, 3.0).unwrap();
        assert!(kept.is_empty());
        let missing = HashMap::from([("H".to_string(), 0.0)]);
        assert!(matches!(
            matched_games_filter(&[g], &missing, 5.0, 3.0),
            Err(DataError::MissingStats(t)) if t == "V"
        ));
    }

    #[test]
    fn validation_catches_bad_logs() {
        let err = GameLog::new(
            "g",
            "A",
            "B",
            vec![
                ScoringEvent::field_goal(1, 100.0, "A", false),
                ScoringEvent::field_goal(1, 200.0, "B", false),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, DataError::OutOfOrder { row: 2, .. }));

        let err = GameLog::new(
            "g",
            "A",
            "B",
            vec![ScoringEvent::field_goal(1, 1.0, "C", false)],
        )
        .unwrap_err();
        assert!(matches!(err, DataError::UnknownTeam { row: 1, .. }));

        let mut ev = ScoringEvent::field_goal(1, 1.0, "A", false);
        ev.and_one = true;
        assert!(GameLog::new("g", "A", "B", vec![ev]).is_err());
    }
}
