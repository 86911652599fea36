use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DataError, EventKind, GameLog, Result, ScoringEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Json,
}

impl InputFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(InputFormat::Csv),
            "json" => Some(InputFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
struct CsvRow {
    game_id: String,
    date: String,
    home_team: String,
    away_team: String,
    period: u32,
    clock_seconds_remaining: f64,
    team: String,
    event_type: String,
    points: u32,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
struct RawEvent {
    period: u32,
    clock_seconds_remaining: f64,
    team: String,
    event_type: String,
    points: u32,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
struct RawGame {
    game_id: String,
    home_team: String,
    away_team: String,
    events: Vec<RawEvent>,
}

/// Parses a source holding exactly one game.
pub fn parse_game_log(source: impl Read, format: InputFormat) -> Result<GameLog> {
    let mut games = read_games(source, format)?;
    if games.len() != 1 {
        return Err(DataError::GameCount(games.len()));
    }
    Ok(games.remove(0))
}

/// Parses every game in a raw play-by-play source, in order of first
/// appearance.
pub fn read_games(source: impl Read, format: InputFormat) -> Result<Vec<GameLog>> {
    match format {
        InputFormat::Csv => read_csv(source),
        InputFormat::Json => read_json(source),
    }
}

fn read_csv(source: impl Read) -> Result<Vec<GameLog>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut games: Vec<(RawGame, Vec<usize>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: CsvRow = record.deserialize(Some(&headers))?;
        let slot = *index.entry(row.game_id.clone()).or_insert_with(|| {
            games.push((
                RawGame {
                    game_id: row.game_id.clone(),
                    home_team: row.home_team.clone(),
                    away_team: row.away_team.clone(),
                    events: Vec::new(),
                },
                Vec::new(),
            ));
            games.len() - 1
        });
        let (game, lines) = &mut games[slot];
        if game.home_team != row.home_team || game.away_team != row.away_team {
            return Err(DataError::Malformed {
                game_id: row.game_id,
                row: line,
                message: "home/away teams differ from earlier rows of this game".into(),
            });
        }
        game.events.push(RawEvent {
            period: row.period,
            clock_seconds_remaining: row.clock_seconds_remaining,
            team: row.team,
            event_type: row.event_type,
            points: row.points,
        });
        lines.push(line);
    }
    games
        .into_iter()
        .map(|(game, lines)| assemble(game, Some(&lines)))
        .collect()
}

fn read_json(source: impl Read) -> Result<Vec<GameLog>> {
    let games: Vec<RawGame> = serde_json::from_reader(source)?;
    games.into_iter().map(|g| assemble(g, None)).collect()
}

/// Turns raw rows into validated events: drops non-scoring rows, collapses
/// free-throw trips and flags and-ones. Errors report the source line when
/// `lines` is given, otherwise the 1-based event index within the game.
fn assemble(raw: RawGame, lines: Option<&[usize]>) -> Result<GameLog> {
    let RawGame {
        game_id,
        home_team,
        away_team,
        events: raw_events,
    } = raw;
    let mut events: Vec<ScoringEvent> = Vec::new();
    // previous scoring row: (period, clock, team, was_free_throw)
    let mut prev: Option<(u32, f64, String, bool)> = None;
    let mut last_time: Option<(u32, f64)> = None;

    for (i, ev) in raw_events.into_iter().enumerate() {
        let row = lines.map_or(i + 1, |l| l[i]);
        let malformed = |message: String| DataError::Malformed {
            game_id: game_id.clone(),
            row,
            message,
        };
        if ev.period == 0 {
            return Err(malformed("period must be at least 1".into()));
        }
        let clock = ev.clock_seconds_remaining;
        if !(clock.is_finite() && clock >= 0.0) {
            return Err(malformed(format!("invalid clock {clock}")));
        }
        if let Some((p, c)) = last_time {
            if ev.period < p || (ev.period == p && clock > c) {
                return Err(DataError::OutOfOrder {
                    game_id: game_id.clone(),
                    row,
                    period: ev.period,
                    clock,
                });
            }
        }
        last_time = Some((ev.period, clock));
        if ev.points == 0 {
            continue;
        }
        if ev.team != home_team && ev.team != away_team {
            return Err(DataError::UnknownTeam {
                game_id: game_id.clone(),
                row,
                team: ev.team,
                home: home_team.clone(),
                away: away_team.clone(),
            });
        }
        let (kind, expected_points) = match ev.event_type.as_str() {
            "FG2" => (EventKind::Fg2, 2),
            "FG3" => (EventKind::Fg3, 3),
            "FT" => (EventKind::FtTrip, 1),
            _ => {
                return Err(DataError::UnknownEventType {
                    game_id: game_id.clone(),
                    row,
                    event_type: ev.event_type,
                })
            }
        };
        if ev.points != expected_points {
            return Err(malformed(format!(
                "{} worth {} points",
                ev.event_type, ev.points
            )));
        }

        let same_stoppage = |prev: &Option<(u32, f64, String, bool)>, want_ft: bool| {
            matches!(prev, Some((p, c, t, ft))
                if *p == ev.period && *c == clock && *t == ev.team && *ft == want_ft)
        };
        if kind == EventKind::FtTrip {
            if !same_stoppage(&prev, true) {
                let and_one = same_stoppage(&prev, false);
                events.push(ScoringEvent::free_throws(
                    ev.period, clock, &ev.team, and_one,
                ));
            }
            prev = Some((ev.period, clock, ev.team, true));
        } else {
            events.push(ScoringEvent {
                period: ev.period,
                clock_seconds_remaining: clock,
                team: ev.team.clone(),
                kind,
                and_one: false,
            });
            prev = Some((ev.period, clock, ev.team, false));
        }
    }
    GameLog::new(game_id, home_team, away_team, events)
}

/// Reads `team,point_differential` rows.
pub fn read_team_stats(source: impl Read) -> Result<HashMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut stats = HashMap::new();
    for record in reader.deserialize::<super::TeamSeasonStats>() {
        let row = record?;
        stats.insert(row.team, row.point_differential);
    }
    Ok(stats)
}

/// Writes games in the raw CSV schema. Each free-throw trip becomes a single
/// one-point row, which re-parses to the same trip.
pub fn write_raw_csv(games: &[GameLog], date: &str, sink: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for game in games {
        for ev in &game.events {
            let (event_type, points) = raw_type(ev.kind);
            writer.serialize(CsvRow {
                game_id: game.game_id.clone(),
                date: date.to_string(),
                home_team: game.home_team.clone(),
                away_team: game.away_team.clone(),
                period: ev.period,
                clock_seconds_remaining: ev.clock_seconds_remaining,
                team: ev.team.clone(),
                event_type: event_type.to_string(),
                points,
            })?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Writes games in the raw JSON schema.
pub fn write_raw_json(games: &[GameLog], sink: impl Write) -> Result<()> {
    let raw: Vec<RawGame> = games
        .iter()
        .map(|g| RawGame {
            game_id: g.game_id.clone(),
            home_team: g.home_team.clone(),
            away_team: g.away_team.clone(),
            events: g
                .events
                .iter()
                .map(|ev| {
                    let (event_type, points) = raw_type(ev.kind);
                    RawEvent {
                        period: ev.period,
                        clock_seconds_remaining: ev.clock_seconds_remaining,
                        team: ev.team.clone(),
                        event_type: event_type.to_string(),
                        points,
                    }
                })
                .collect(),
        })
        .collect();
    serde_json::to_writer(sink, &raw)?;
    Ok(())
}

fn raw_type(kind: EventKind) -> (&'static str, u32) {
    match kind {
        EventKind::Fg2 => ("FG2", 2),
        EventKind::Fg3 => ("FG3", 3),
        EventKind::FtTrip => ("FT", 1),
    }
}

/// Serialized form with trips collapsed and and-one flags explicit.
pub fn write_game_logs_json(games: &[GameLog], sink: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(sink, games)?;
    Ok(())
}

pub fn read_game_logs_json(source: impl Read) -> Result<Vec<GameLog>> {
    let games: Vec<GameLog> = serde_json::from_reader(source)?;
    for game in &games {
        game.validate()?;
    }
    Ok(games)
}
