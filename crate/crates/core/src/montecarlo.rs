//! Seeded simulation of scoring sequences under the no-momentum null model
//! and a simple momentum alternative.
//!
//! Every game or replicate `i` draws from its own ChaCha8 stream: the
//! generator is seeded from the master seed and switched to stream `i`, so
//! results do not depend on the order in which replicates are evaluated.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gamedata::{GameLog, ScoringEvent};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SimError {
    #[error("p_same {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("momentum delta must be finite and non-negative, got {0}")]
    InvalidMomentum(f64),
    #[error("momentum cap must be at least 1")]
    ZeroMomentumCap,
    #[error("need at least one scoring event")]
    NoEvents,
    #[error("need at least one replicate")]
    NoReplicates,
    #[error("invalid event count range {lo}..={hi} (low end must be at least 2)")]
    InvalidRange { lo: usize, hi: usize },
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The two abstract teams of a simulated game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::A => "A",
            Side::B => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_events: usize,
    pub p_same: f64,
    /// Added to the same-team probability for each score in the current run
    /// beyond the first.
    pub momentum_delta: f64,
    /// Run length beyond which the boost stops growing.
    pub momentum_cap: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn null(n_events: usize, p_same: f64, seed: u64) -> Self {
        Self {
            n_events,
            p_same,
            momentum_delta: 0.0,
            momentum_cap: 1,
            seed,
        }
    }

    pub fn with_momentum(mut self, delta: f64, cap: usize) -> Self {
        self.momentum_delta = delta;
        self.momentum_cap = cap;
        self
    }

    fn check_model(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_same) {
            return Err(SimError::InvalidProbability(self.p_same));
        }
        if !(self.momentum_delta.is_finite() && self.momentum_delta >= 0.0) {
            return Err(SimError::InvalidMomentum(self.momentum_delta));
        }
        if self.momentum_cap == 0 {
            return Err(SimError::ZeroMomentumCap);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_model()?;
        if self.n_events == 0 {
            return Err(SimError::NoEvents);
        }
        Ok(())
    }

    /// Probability that the team on a run of `run` scores next.
    pub fn same_probability(&self, run: usize) -> f64 {
        if self.momentum_delta == 0.0 {
            return self.p_same;
        }
        let boost = self.momentum_delta * run.saturating_sub(1).min(self.momentum_cap) as f64;
        (self.p_same + boost).clamp(0.0, 1.0)
    }
}

/// Draws one game's labels from `rng`, calling `visit` for each.
fn generate(rng: &mut impl Rng, config: &SimConfig, mut visit: impl FnMut(Side)) {
    let mut side = if rng.random::<f64>() < 0.5 {
        Side::A
    } else {
        Side::B
    };
    let mut run = 1;
    visit(side);
    for _ in 1..config.n_events {
        let same = rng.random::<f64>() < config.same_probability(run);
        if same {
            run += 1;
        } else {
            side = side.other();
            run = 1;
        }
        visit(side);
    }
}

fn longest_run_from(rng: &mut impl Rng, config: &SimConfig) -> usize {
    let mut prev = None;
    let mut cur = 0;
    let mut best = 0;
    generate(rng, config, |side| {
        cur = if prev == Some(side) { cur + 1 } else { 1 };
        best = best.max(cur);
        prev = Some(side);
    });
    best
}

fn labels_from(rng: &mut impl Rng, config: &SimConfig) -> Vec<Side> {
    let mut labels = Vec::with_capacity(config.n_events);
    generate(rng, config, |side| labels.push(side));
    labels
}

/// One game's scoring labels: a fair first scorer, then each later score by
/// the same team with the (momentum-adjusted) same-team probability.
pub fn simulate_labels(config: &SimConfig) -> Result<Vec<Side>> {
    config.validate()?;
    Ok(labels_from(&mut stream_rng(config.seed, 0), config))
}

/// `n` independent fair coin flips between the two teams.
pub fn simulate_bernoulli_labels(n: usize, seed: u64) -> Result<Vec<Side>> {
    if n == 0 {
        return Err(SimError::NoEvents);
    }
    let mut rng = stream_rng(seed, 0);
    Ok((0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.5 {
                Side::A
            } else {
                Side::B
            }
        })
        .collect())
}

/// Integer tallies of the longest team run over `reps` games; replicate `r`
/// uses stream `r` of `config.seed`.
pub fn longest_run_tallies(config: &SimConfig, reps: u64) -> Result<BTreeMap<usize, u64>> {
    config.validate()?;
    if reps == 0 {
        return Err(SimError::NoReplicates);
    }
    let mut tallies = BTreeMap::new();
    for rep in 0..reps {
        let mut rng = stream_rng(config.seed, rep);
        *tallies
            .entry(longest_run_from(&mut rng, config))
            .or_insert(0) += 1;
    }
    Ok(tallies)
}

/// Relative frequencies of the longest team run over `reps` simulated games.
pub fn empirical_longest_run_pmf(config: &SimConfig, reps: u64) -> Result<BTreeMap<usize, f64>> {
    let tallies = longest_run_tallies(config, reps)?;
    Ok(tallies
        .into_iter()
        .map(|(len, count)| (len, count as f64 / reps as f64))
        .collect())
}

pub const PERIOD_SECONDS: f64 = 720.0;
const PERIODS: usize = 4;

/// Synthetic season of `games` games. Game `g` uses stream `g` of `seed` for
/// both its event total (uniform on `event_counts`) and its labels; the
/// template's own seed and event count are ignored. Every event is a
/// two-point field goal, spread evenly over four periods so that the first
/// half holds the first `n / 2` events.
pub fn simulate_season(
    games: usize,
    event_counts: RangeInclusive<usize>,
    template: &SimConfig,
    seed: u64,
) -> Result<Vec<GameLog>> {
    let (lo, hi) = (*event_counts.start(), *event_counts.end());
    if lo < 2 || lo > hi {
        return Err(SimError::InvalidRange { lo, hi });
    }
    template.check_model()?;
    let width = (games.max(1)).to_string().len().max(4);
    let mut season = Vec::with_capacity(games);
    for g in 0..games {
        let mut rng = stream_rng(seed, g as u64);
        let n = rng.random_range(lo..=hi);
        let config = SimConfig {
            n_events: n,
            ..*template
        };
        let labels = labels_from(&mut rng, &config);
        let events = labels
            .iter()
            .enumerate()
            .map(|(i, side)| {
                let (period, clock) = synthetic_clock(i, n);
                ScoringEvent::field_goal(period, clock, side.as_str(), false)
            })
            .collect();
        season.push(GameLog {
            game_id: format!("sim-{:0width$}", g + 1),
            home_team: Side::A.as_str().to_string(),
            away_team: Side::B.as_str().to_string(),
            events,
        });
    }
    Ok(season)
}

/// Period and clock (tenths of a second) for event `i` of `n` spread evenly
/// across regulation.
fn synthetic_clock(i: usize, n: usize) -> (u32, f64) {
    let total = PERIOD_SECONDS * PERIODS as f64;
    let elapsed = (i as f64 + 0.5) * total / n as f64;
    let period = ((elapsed / PERIOD_SECONDS) as usize).min(PERIODS - 1);
    let remaining = PERIOD_SECONDS - (elapsed - period as f64 * PERIOD_SECONDS);
    ((period + 1) as u32, (remaining * 10.0).round() / 10.0)
}
