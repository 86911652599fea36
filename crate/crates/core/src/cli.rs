//! `hoopruns` command line.
//!
//! Exit status: 0 completed, 1 usage error, 2 data error, 3 validation
//! failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{self, AnalysisOptions, AnalysisReport, Granularity};
use crate::gamedata::{self, GameLog, InputFormat, Mode, Overtime, SymbolCounts};
use crate::montecarlo::{self, SimConfig};
use crate::runcore::{self, AbsorbingChain, RunError, BRUTE_FORCE_MAX_N, TRIAL_CONVENTION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Probabilities for the oracle comparison sweep.
pub const VALIDATION_PROBABILITIES: [f64; 7] = [0.1, 0.2, 0.38, 0.5, 0.62, 0.8, 0.9];
pub const ORACLE_TOLERANCE: f64 = 1e-12;
pub const TABLE_ONE_TOLERANCE: f64 = 0.05;
/// Reference expected longest runs at P(S) = 0.38.
pub const TABLE_ONE: [(usize, f64); 5] = [
    (50, 4.66),
    (75, 5.08),
    (100, 5.38),
    (125, 5.61),
    (150, 5.80),
];
pub const TABLE_ONE_P_SAME: f64 = 0.38;
/// Expected counts below this print as 0.00 and are grouped into one row.
const DISPLAY_NEGLIGIBLE: f64 = 0.005;

#[derive(Parser, Debug)]
#[command(
    name = "hoopruns",
    version,
    about = "Longest scoring runs vs a no-momentum model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact distribution of the longest team run in one game.
    Dist(DistArgs),
    /// Compare observed longest runs in play-by-play logs to the null model.
    Analyze(AnalyzeArgs),
    /// Write a synthetic season in the play-by-play schema.
    Simulate(SimulateArgs),
    /// Cross-check the exact methods and the reference expectation table.
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Tsv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Csv,
    Json,
}

impl From<DataFormat> for InputFormat {
    fn from(f: DataFormat) -> Self {
        match f {
            DataFormat::Csv => InputFormat::Csv,
            DataFormat::Json => InputFormat::Json,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "fg")]
    Fg,
    #[value(name = "fg+ft")]
    FgFt,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PerArg {
    Game,
    Half,
}

#[derive(Args, Debug)]
pub struct DistArgs {
    /// Scoring events in the game.
    #[arg(long)]
    pub total: usize,
    /// Probability that the team that just scored scores next.
    #[arg(long = "p-same")]
    pub p_same: f64,
    /// Also print P(longest team run >= M).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Play-by-play files (CSV or JSON).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub input_format: Option<DataFormat>,
    #[arg(long, value_enum, default_value = "fg")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "game")]
    pub per: PerArg,
    /// Keep only games between closely matched teams.
    #[arg(long, requires = "stats")]
    pub matched_only: bool,
    /// Team stats CSV (`team,point_differential`).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, default_value_t = gamedata::DEFAULT_HOME_ADVANTAGE)]
    pub home_adv: f64,
    #[arg(long, default_value_t = gamedata::DEFAULT_MATCH_WINDOW)]
    pub window: f64,
    /// Count overtime periods (as part of the second half). The default.
    #[arg(long, overrides_with = "exclude_ot")]
    pub include_ot: bool,
    /// Drop overtime periods.
    #[arg(long, overrides_with = "include_ot")]
    pub exclude_ot: bool,
    /// Use this P(S) instead of estimating it from the data.
    #[arg(long = "p-same")]
    pub p_same: Option<f64>,
    /// Pool bins until each expects at least this many units.
    #[arg(long, default_value_t = crate::gof::DEFAULT_MIN_EXPECTED)]
    pub min_expected: f64,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: OutputFormat,
    /// Also write the frequency table to this file (TSV or JSON per --format).
    #[arg(long)]
    pub table_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub games: usize,
    /// Event totals per game, `LOW:HIGH`.
    #[arg(long, default_value = "52:106", value_parser = parse_range)]
    pub range: (usize, usize),
    #[arg(long = "p-same", default_value_t = 0.38)]
    pub p_same: f64,
    /// Per-score boost to the same-team probability during a run.
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    #[arg(long, default_value_t = 5)]
    pub momentum_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Output schema; guessed from the extension when omitted (default CSV).
    #[arg(long, value_enum)]
    pub output_format: Option<DataFormat>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Largest trial count for the enumeration cross-check (at most 20).
    #[arg(long, default_value_t = 16)]
    pub max_n: usize,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LOW:HIGH, got {s:?}"))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad low end {lo:?}"))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad high end {hi:?}"))?;
    Ok((lo, hi))
}

/// A failure carrying the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn data(message: impl ToString) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Dist(args) => cmd_dist(&args, out),
        Command::Analyze(args) => cmd_analyze(&args, out),
        Command::Simulate(args) => cmd_simulate(&args, out),
        Command::Validate(args) => cmd_validate(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::data(e)
}

pub fn cmd_dist(args: &DistArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let pmf = runcore::team_run_pmf(args.total, args.p_same).map_err(Failure::usage)?;
    let expectation =
        runcore::team_run_expectation(args.total, args.p_same).map_err(Failure::usage)?;
    let at_least = args
        .m
        .map(|m| (m, pmf.iter().skip(m).sum::<f64>().min(1.0)));
    match args.format {
        OutputFormat::Tsv => {
            let mut s = format!("# convention: {}\n", TRIAL_CONVENTION.describe());
            s.push_str("length\tprobability\n");
            for (len, q) in pmf.iter().enumerate().skip(1) {
                s.push_str(&format!("{len}\t{q:.6}\n"));
            }
            s.push_str(&format!("expectation\t{expectation:.2}\n"));
            if let Some((m, q)) = at_least {
                s.push_str(&format!("at_least_{m}\t{q:.6}\n"));
            }
            out.write_all(s.as_bytes()).map_err(io_failure)?;
        }
        OutputFormat::Json => {
            let rows: Vec<_> = pmf
                .iter()
                .enumerate()
                .skip(1)
                .map(|(length, probability)| json!({"length": length, "probability": probability}))
                .collect();
            let mut doc = json!({
                "total": args.total,
                "p_same": args.p_same,
                "convention": TRIAL_CONVENTION.describe(),
                "pmf": rows,
                "expectation": expectation,
            });
            if let Some((m, q)) = at_least {
                doc["at_least"] = json!({"m": m, "probability": q});
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))
                .map_err(io_failure)?;
        }
    }
    Ok(EXIT_OK)
}

fn load_inputs(args: &AnalyzeArgs) -> Result<Vec<GameLog>, Failure> {
    let mut games = Vec::new();
    for path in &args.inputs {
        let format = match args.input_format {
            Some(f) => f.into(),
            None => InputFormat::from_path(path).ok_or_else(|| {
                Failure::usage(format!(
                    "cannot tell the format of {}; pass --input-format",
                    path.display()
                ))
            })?,
        };
        let file =
            File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let mut parsed = gamedata::read_games(BufReader::new(file), format)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        games.append(&mut parsed);
    }
    Ok(games)
}

pub fn analysis_options(args: &AnalyzeArgs) -> AnalysisOptions {
    AnalysisOptions {
        mode: match args.mode {
            ModeArg::Fg => Mode::FgOnly,
            ModeArg::FgFt => Mode::FgPlusFt,
        },
        granularity: match args.per {
            PerArg::Game => Granularity::Game,
            PerArg::Half => Granularity::Half,
        },
        overtime: if args.exclude_ot {
            Overtime::Exclude
        } else {
            Overtime::Include
        },
        p_same_override: args.p_same,
        min_expected: args.min_expected,
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if let Some(p) = args.p_same {
        if !(0.0..=1.0).contains(&p) {
            return Err(Failure::usage(RunError::InvalidProbability(p)));
        }
    }
    if !(args.min_expected > 0.0) {
        return Err(Failure::usage("--min-expected must be positive"));
    }
    let mut games = load_inputs(args)?;
    let loaded = games.len();
    if args.matched_only {
        let path = args.stats.as_ref().expect("clap enforces --stats");
        let file =
            File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let stats = gamedata::read_team_stats(BufReader::new(file))
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        games = gamedata::matched_games_filter(&games, &stats, args.home_adv, args.window)
            .map_err(Failure::data)?;
    }
    let options = analysis_options(args);
    let report = analysis::analyze(&games, &options).map_err(Failure::data)?;

    let rendered = match args.format {
        OutputFormat::Tsv => render_report_tsv(&report, loaded, games.len()),
        OutputFormat::Json => {
            let doc = json!({
                "games_loaded": loaded,
                "games_analyzed": games.len(),
                "report": report,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
    };
    out.write_all(rendered.as_bytes()).map_err(io_failure)?;

    if let Some(path) = &args.table_out {
        let body = match args.format {
            OutputFormat::Tsv => report.table.to_tsv(),
            OutputFormat::Json => report.table.to_json().map_err(Failure::data)? + "\n",
        };
        write_atomic(path, body.as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn render_report_tsv(report: &AnalysisReport, loaded: usize, analyzed: usize) -> String {
    let mut s = String::new();
    s.push_str(&format!("# convention: {}\n", report.trial_convention));
    s.push_str(&format!(
        "# games: {loaded} loaded, {analyzed} analyzed; units: {} ({} per {}), {} empty skipped\n",
        report.units,
        report.mode,
        match report.granularity {
            Granularity::Game => "game",
            Granularity::Half => "half",
        },
        report.empty_units
    ));
    s.push_str(&format!(
        "# p_same: {:.6} ({})\n",
        report.p_same,
        if report.p_same_estimated {
            "estimated"
        } else {
            "given"
        }
    ));
    s.push_str(&report.table.group_upper_tail(DISPLAY_NEGLIGIBLE).to_tsv());
    for t in &report.tests {
        match &t.result {
            Some(r) => s.push_str(&format!(
                "# chi_square {}: statistic {:.4}, df {}, p_value {:.6}, bins {}\n",
                t.convention.label(),
                r.statistic,
                r.degrees_of_freedom,
                r.p_value,
                r.pooling
            )),
            None => s.push_str(&format!(
                "# chi_square {}: not available ({})\n",
                t.convention.label(),
                t.note.as_deref().unwrap_or("unknown")
            )),
        }
    }
    s.push_str(&format!(
        "# mean longest run: home {:.2}, road {:.2}\n",
        report.home_mean_longest, report.away_mean_longest
    ));
    s
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::data(format!("{}: {e}", path.display()));
    let mut tmp_name = path.file_name().map(OsString::from).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = File::create(&tmp).map_err(fail)?;
    file.write_all(bytes).map_err(fail)?;
    file.sync_all().map_err(fail)?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if args.games == 0 {
        return Err(Failure::usage("--games must be at least 1"));
    }
    let template =
        SimConfig::null(1, args.p_same, args.seed).with_momentum(args.momentum, args.momentum_cap);
    let season = montecarlo::simulate_season(
        args.games,
        args.range.0..=args.range.1,
        &template,
        args.seed,
    )
    .map_err(Failure::usage)?;

    let format = args
        .output_format
        .map(InputFormat::from)
        .or_else(|| InputFormat::from_path(&args.output))
        .unwrap_or(InputFormat::Csv);
    let mut buf = Vec::new();
    match format {
        InputFormat::Csv => gamedata::write_raw_csv(&season, "2016-10-25", &mut buf),
        InputFormat::Json => gamedata::write_raw_json(&season, &mut buf),
    }
    .map_err(Failure::data)?;
    write_atomic(&args.output, &buf)?;

    let mut counts = SymbolCounts::default();
    let mut events = 0usize;
    for game in &season {
        let labels: Vec<&str> = game.events.iter().map(|e| e.team.as_str()).collect();
        counts.add_labels(&labels);
        events += labels.len();
    }
    writeln!(
        out,
        "games\t{}\nevents\t{}\np_same_realized\t{:.6}\noutput\t{}",
        season.len(),
        events,
        counts.proportion().unwrap_or(f64::NAN),
        args.output.display()
    )
    .map_err(io_failure)?;
    Ok(EXIT_OK)
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_VALIDATION
        }
    }
}

/// Chain vs DP vs enumeration for every `n <= max_n` and probability in
/// [`VALIDATION_PROBABILITIES`], plus the reference expectation table.
/// `builder` constructs the chain, so a faulty one can be injected.
pub fn validate_with(
    max_n: usize,
    builder: &dyn Fn(f64, usize) -> Result<AbsorbingChain, RunError>,
) -> Result<ValidationReport, RunError> {
    let mut report = ValidationReport::default();
    for &p in &VALIDATION_PROBABILITIES {
        let mut chain_vs_dp: f64 = 0.0;
        let mut chain_vs_brute: f64 = 0.0;
        let mut dp_vs_brute: f64 = 0.0;
        for n in 0..=max_n {
            let chain = runcore::chain_distribution(n, p, builder)?;
            let dp = runcore::dp_longest_run_distribution(n, p)?;
            let brute = runcore::brute_force_distribution(n, p)?;
            for len in 0..=n {
                let (c, d, b) = (chain.pmf(len), dp.pmf(len), brute.pmf(len));
                chain_vs_dp = chain_vs_dp.max((c - d).abs());
                chain_vs_brute = chain_vs_brute.max((c - b).abs());
                dp_vs_brute = dp_vs_brute.max((d - b).abs());
            }
        }
        for (pair, diff) in [
            ("chain-dp", chain_vs_dp),
            ("chain-brute", chain_vs_brute),
            ("dp-brute", dp_vs_brute),
        ] {
            report.checks.push(Check {
                name: format!("oracle {pair} p={p} n<={max_n}"),
                value: diff,
                tolerance: ORACLE_TOLERANCE,
                passed: diff < ORACLE_TOLERANCE,
            });
        }
    }
    for (total, reference) in TABLE_ONE {
        let trials = TRIAL_CONVENTION.trials(total);
        let expectation =
            1.0 + runcore::chain_distribution(trials, TABLE_ONE_P_SAME, builder)?.mean();
        let diff = (expectation - reference).abs();
        report.checks.push(Check {
            name: format!(
                "expected longest run, {total} scores (ref {reference:.2}, got {expectation:.4})"
            ),
            value: diff,
            tolerance: TABLE_ONE_TOLERANCE,
            passed: diff <= TABLE_ONE_TOLERANCE,
        });
    }
    Ok(report)
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if args.max_n > BRUTE_FORCE_MAX_N {
        return Err(Failure::usage(format!(
            "--max-n must be at most {BRUTE_FORCE_MAX_N}"
        )));
    }
    let report =
        validate_with(args.max_n, &runcore::build_transition_matrix).map_err(Failure::usage)?;
    write_validation(&report, out).map_err(io_failure)?;
    Ok(report.exit_code())
}

pub fn write_validation(report: &ValidationReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "# convention: {}", TRIAL_CONVENTION.describe())?;
    for c in &report.checks {
        writeln!(
            out,
            "{}\t{}\t{:.3e}\t(tolerance {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        )?;
    }
    writeln!(
        out,
        "{}",
        if report.passed() {
            "validation passed"
        } else {
            "validation FAILED"
        }
    )
}
