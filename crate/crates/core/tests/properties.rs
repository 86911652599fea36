use std::collections::BTreeMap;

use proptest::prelude::*;

use hoopruns::gamedata::{
    derive_ds, estimate_p_same, longest_team_run, scoring_sequence, scoring_sequence_with, GameLog,
    Mode, Overtime, Scope, ScoringEvent, Symbol,
};
use hoopruns::gof::{pool_bins, LengthFrequencyTable};
use hoopruns::montecarlo::{self, Side, SimConfig};
use hoopruns::runcore::{
    brute_force_distribution, build_transition_matrix, dp_longest_run_distribution,
    expected_longest_run, longest_run_distribution, matrix_power, prob_longest_run_at_least,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_sums_to_one(n in 1usize..300, p in 0.0f64..=1.0) {
        let d = longest_run_distribution(n, p).unwrap();
        let total: f64 = d.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "sum {total}");
        prop_assert!(d.probabilities().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn tail_decreases_in_m(n in 1usize..150, p in 0.01f64..0.99) {
        let mut prev = 1.0;
        for m in 1..=n + 1 {
            let t = prob_longest_run_at_least(n, p, m).unwrap();
            prop_assert!(t <= prev + 1e-15, "m {m}: {t} > {prev}");
            prev = t;
        }
    }

    #[test]
    fn tail_increases_in_n(n in 1usize..150, p in 0.01f64..0.99, m in 1usize..12) {
        let a = prob_longest_run_at_least(n, p, m).unwrap();
        let b = prob_longest_run_at_least(n + 1, p, m).unwrap();
        prop_assert!(b >= a - 1e-15, "{b} < {a}");
    }

    #[test]
    fn tail_increases_in_p(n in 1usize..150, p in 0.01f64..0.98, dp in 0.001f64..0.5, m in 1usize..12) {
        let q = (p + dp).min(0.99);
        let a = prob_longest_run_at_least(n, p, m).unwrap();
        let b = prob_longest_run_at_least(n, q, m).unwrap();
        prop_assert!(b >= a - 1e-12, "{b} < {a}");
    }

    #[test]
    fn no_success_probability(n in 1usize..200, p in 0.0f64..=1.0) {
        let d = longest_run_distribution(n, p).unwrap();
        prop_assert!((d.pmf(0) - (1.0 - p).powi(n as i32)).abs() < 1e-12);
    }

    #[test]
    fn all_success_probability(n in 1usize..200, p in 0.0f64..=1.0) {
        let t = prob_longest_run_at_least(n, p, n).unwrap();
        prop_assert!((t - p.powi(n as i32)).abs() < 1e-12);
    }

    #[test]
    fn expectation_strictly_increases(n in 1usize..150, p in 0.05f64..0.95) {
        let a = expected_longest_run(n, p).unwrap();
        let b = expected_longest_run(n + 1, p).unwrap();
        prop_assert!(b > a, "E({}) = {b} <= E({n}) = {a}", n + 1);
    }

    #[test]
    fn matrix_power_adds_exponents(p in 0.0f64..=1.0, m in 1usize..12, a in 0u64..60, b in 0u64..60) {
        let chain = build_transition_matrix(p, m).unwrap();
        let lhs = matrix_power(&chain, a + b);
        let rhs = matrix_power(&chain, a).mul(&matrix_power(&chain, b));
        for i in 0..=m {
            for j in 0..=m {
                prop_assert!((lhs.get(i, j) - rhs.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_methods_agree(n in 1usize..=14, p in 0.0f64..=1.0) {
        let chain = longest_run_distribution(n, p).unwrap();
        let dp = dp_longest_run_distribution(n, p).unwrap();
        let brute = brute_force_distribution(n, p).unwrap();
        for len in 0..=n {
            prop_assert!((chain.pmf(len) - dp.pmf(len)).abs() < 1e-12);
            prop_assert!((chain.pmf(len) - brute.pmf(len)).abs() < 1e-12);
        }
    }

    #[test]
    fn pooling_conserves_mass(
        expected in prop::collection::vec(0.0f64..40.0, 2..20),
        observed in prop::collection::vec(0u64..40, 2..20),
        min in 0.5f64..10.0,
    ) {
        let exp: BTreeMap<usize, f64> = expected.iter().enumerate().map(|(i, &e)| (i + 1, e + 1e-3)).collect();
        let obs: BTreeMap<usize, u64> = observed.iter().enumerate().map(|(i, &o)| (i + 1, o)).collect();
        let table = LengthFrequencyTable::from_counts(&exp, &obs);
        let pooled = pool_bins(&table, min).unwrap();
        prop_assert_eq!(pooled.total_observed(), table.total_observed());
        let (a, b) = (pooled.total_expected(), table.total_expected());
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
        prop_assert!(pooled.rows.len() >= 2);
        if pooled.rows.len() > 2 {
            prop_assert!(pooled.rows.iter().all(|r| r.expected >= min));
        }
        // bins stay contiguous and cover the original range
        prop_assert_eq!(pooled.rows[0].bin.lo, table.rows[0].bin.lo);
        prop_assert_eq!(pooled.rows.last().unwrap().bin.hi, table.rows.last().unwrap().bin.hi);
        for w in pooled.rows.windows(2) {
            prop_assert_eq!(w[0].bin.hi + 1, w[1].bin.lo);
        }
    }

    #[test]
    fn scopes_partition_the_game(periods in prop::collection::vec(1u32..=6, 0..60)) {
        let game = game_from_periods(&periods);
        let full = scoring_sequence(&game, Mode::FgPlusFt, Scope::FullGame).len();
        let first = scoring_sequence(&game, Mode::FgPlusFt, Scope::FirstHalf).len();
        let second = scoring_sequence(&game, Mode::FgPlusFt, Scope::SecondHalf).len();
        prop_assert_eq!(first + second, full);
        prop_assert_eq!(full, periods.len());
        let regulation = scoring_sequence_with(&game, Mode::FgPlusFt, Scope::FullGame, Overtime::Exclude).len();
        prop_assert_eq!(regulation, periods.iter().filter(|&&p| p <= 4).count());
    }

    #[test]
    fn field_goals_are_a_subsequence(periods in prop::collection::vec(1u32..=4, 0..60)) {
        let game = game_from_periods(&periods);
        let fg = scoring_sequence(&game, Mode::FgOnly, Scope::FullGame);
        let all = scoring_sequence(&game, Mode::FgPlusFt, Scope::FullGame);
        let mut it = all.iter();
        prop_assert!(fg.iter().all(|x| it.any(|y| y == x)));
        prop_assert!(fg.len() <= all.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn p_same_estimate_within_three_standard_errors(seed in any::<u64>(), p in 0.2f64..0.6) {
        let template = SimConfig::null(1, p, 0);
        let season = montecarlo::simulate_season(300, 52..=106, &template, seed).unwrap();
        let est = estimate_p_same(&season, Mode::FgOnly, Scope::FullGame).unwrap();
        let trials: usize = season.iter().map(|g| g.events.len() - 1).sum();
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        prop_assert!((est - p).abs() < 3.0 * se, "estimate {est}, truth {p}, se {se}");
    }
}

/// Mixes field goals and free-throw trips so that every third event is a
/// trip; teams alternate in a fixed irregular pattern.
fn game_from_periods(periods: &[u32]) -> GameLog {
    let mut sorted = periods.to_vec();
    sorted.sort_unstable();
    let events = sorted
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let team = if (i * 7 / 3) % 2 == 0 { "H" } else { "V" };
            let clock = 700.0 - (i % 700) as f64;
            if i % 3 == 2 {
                ScoringEvent::free_throws(p, clock, team, false)
            } else {
                ScoringEvent::field_goal(p, clock, team, i % 5 == 0)
            }
        })
        .collect();
    GameLog {
        game_id: "g".into(),
        home_team: "H".into(),
        away_team: "V".into(),
        events,
    }
}

/// Rebuilds labels from the first label and the derived symbols.
fn rebuild(first: Side, ds: &[Symbol]) -> Vec<Side> {
    let mut out = vec![first];
    for s in ds {
        let last = *out.last().unwrap();
        out.push(match s {
            Symbol::S => last,
            Symbol::D => last.other(),
        });
    }
    out
}

#[test]
fn derived_sequence_round_trip() {
    for seed in 0..10_000u64 {
        let n = 1 + (seed % 120) as usize;
        let labels = montecarlo::simulate_bernoulli_labels(n, seed).unwrap();
        let ds = derive_ds(&labels);
        assert_eq!(ds.len(), n - 1);
        assert_eq!(rebuild(labels[0], &ds.labels), labels);
        assert_eq!(longest_team_run(&labels), 1 + ds.longest_same_run());
    }
}

#[test]
fn null_same_proportion_over_a_million_symbols() {
    let p = 0.38;
    let labels = montecarlo::simulate_labels(&SimConfig::null(1_000_001, p, 7)).unwrap();
    let ds = derive_ds(&labels);
    let n = ds.len() as f64;
    let est = ds.same_count() as f64 / n;
    let se = (p * (1.0 - p) / n).sqrt();
    assert!((est - p).abs() < 4.0 * se, "{est} vs {p} (se {se})");
}

#[test]
fn momentum_raises_mean_longest_run() {
    let means: Vec<f64> = [0.0, 0.02, 0.05, 0.1]
        .iter()
        .map(|&delta| {
            let config = SimConfig::null(80, 0.38, 11).with_momentum(delta, 5);
            let tallies = montecarlo::longest_run_tallies(&config, 20_000).unwrap();
            let total: u64 = tallies.values().sum();
            tallies
                .iter()
                .map(|(&l, &c)| (l as u64 * c) as f64)
                .sum::<f64>()
                / total as f64
        })
        .collect();
    for w in means.windows(2) {
        assert!(w[1] > w[0], "means not increasing: {means:?}");
    }
}
