//! Season-level analysis: estimate P(S), build the expected and observed
//! longest-run tables, and test one against the other.

use serde::Serialize;

use crate::gamedata::{
    longest_run_of, longest_team_run, scoring_sequence_with, GameLog, Mode, Overtime, Scope,
    SymbolCounts,
};
use crate::gof::{
    self, chi_square_test, pool_bins, ChiSquareResult, DfConvention, LengthFrequencyTable,
};
use crate::runcore::TRIAL_CONVENTION;
use crate::Error;

/// Whether each game or each half is one unit of analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Game,
    Half,
}

impl Granularity {
    fn scopes(self) -> &'static [Scope] {
        match self {
            Granularity::Game => &[Scope::FullGame],
            Granularity::Half => &[Scope::FirstHalf, Scope::SecondHalf],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub mode: Mode,
    pub granularity: Granularity,
    pub overtime: Overtime,
    /// Use this P(S) instead of the pooled estimate.
    pub p_same_override: Option<f64>,
    pub min_expected: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            mode: Mode::FgOnly,
            granularity: Granularity::Game,
            overtime: Overtime::Include,
            p_same_override: None,
            min_expected: gof::DEFAULT_MIN_EXPECTED,
        }
    }
}

/// One scoring sequence under analysis.
#[derive(Debug, Clone)]
pub struct Unit<'a> {
    pub game: &'a GameLog,
    pub scope: Scope,
    pub labels: Vec<&'a str>,
}

/// Splits games into analysis units ordered by game id, then half.
pub fn units<'a>(games: &'a [GameLog], options: &AnalysisOptions) -> Vec<Unit<'a>> {
    let mut sorted: Vec<&GameLog> = games.iter().collect();
    sorted.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    sorted
        .into_iter()
        .flat_map(|game| {
            options.granularity.scopes().iter().map(move |&scope| Unit {
                game,
                scope,
                labels: scoring_sequence_with(game, options.mode, scope, options.overtime),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub convention: DfConvention,
    pub result: Option<ChiSquareResult>,
    /// Why the test could not be run, when `result` is `None`.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub mode: Mode,
    pub granularity: Granularity,
    pub trial_convention: &'static str,
    pub p_same: f64,
    pub p_same_estimated: bool,
    pub units: usize,
    /// Units with no qualifying events; left out of both columns.
    pub empty_units: usize,
    pub total_events: u64,
    pub table: LengthFrequencyTable,
    pub pooled: Option<LengthFrequencyTable>,
    pub tests: Vec<TestOutcome>,
    pub home_mean_longest: f64,
    pub away_mean_longest: f64,
}

impl AnalysisReport {
    pub fn test(&self, convention: DfConvention) -> Option<&ChiSquareResult> {
        self.tests
            .iter()
            .find(|t| t.convention == convention)
            .and_then(|t| t.result.as_ref())
    }

    /// Headline p-value (bins - 1 convention).
    pub fn p_value(&self) -> Option<f64> {
        self.test(DfConvention::BinsMinus1).map(|r| r.p_value)
    }
}

pub fn analyze(games: &[GameLog], options: &AnalysisOptions) -> Result<AnalysisReport, Error> {
    let all = units(games, options);
    let (nonempty, empty): (Vec<_>, Vec<_>) = all.into_iter().partition(|u| !u.labels.is_empty());

    let (p_same, p_same_estimated) = match options.p_same_override {
        Some(p) => (p, false),
        None => {
            let mut counts = SymbolCounts::default();
            for unit in &nonempty {
                counts.add_labels(&unit.labels);
            }
            (counts.proportion()?, true)
        }
    };

    let event_counts: Vec<usize> = nonempty.iter().map(|u| u.labels.len()).collect();
    let expected = gof::expected_counts(&event_counts, p_same)?;
    let observed = gof::tally(nonempty.iter().map(|u| longest_team_run(&u.labels)));
    let table = LengthFrequencyTable::from_counts(&expected, &observed);

    let pooled = pool_bins(&table, options.min_expected);
    let tests = [DfConvention::BinsMinus1, DfConvention::BinsMinus2]
        .into_iter()
        .map(|convention| {
            let outcome = pooled
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|t| chi_square_test(t, convention).map_err(|e| e.to_string()));
            match outcome {
                Ok(result) => TestOutcome {
                    convention,
                    result: Some(result),
                    note: None,
                },
                Err(note) => TestOutcome {
                    convention,
                    result: None,
                    note: Some(note),
                },
            }
        })
        .collect();

    let mean = |xs: &mut dyn Iterator<Item = usize>| {
        let (sum, n) = xs.fold((0usize, 0usize), |(s, n), x| (s + x, n + 1));
        sum as f64 / n as f64
    };
    let home_mean_longest = mean(
        &mut nonempty
            .iter()
            .map(|u| longest_run_of(&u.labels, &u.game.home_team.as_str())),
    );
    let away_mean_longest = mean(
        &mut nonempty
            .iter()
            .map(|u| longest_run_of(&u.labels, &u.game.away_team.as_str())),
    );

    Ok(AnalysisReport {
        mode: options.mode,
        granularity: options.granularity,
        trial_convention: TRIAL_CONVENTION.describe(),
        p_same,
        p_same_estimated,
        units: nonempty.len(),
        empty_units: empty.len(),
        total_events: event_counts.iter().map(|&n| n as u64).sum(),
        table,
        pooled: pooled.ok(),
        tests,
        home_mean_longest,
        away_mean_longest,
    })
}
