//! Expected and observed longest-run frequency tables and the goodness of fit
//! test between them.

mod chisq;

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamedata::{longest_team_run, scoring_sequence, GameLog, Mode, Scope};
use crate::runcore::{self, RunError};

pub use chisq::{
    chi_square_sf, chi_square_test, ln_gamma, regularized_upper_gamma, ChiSquareResult,
    DfConvention,
};

pub const DEFAULT_MIN_EXPECTED: f64 = 5.0;

#[derive(Error, Debug)]
pub enum GofError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("need at least 2 bins, have {0}")]
    TooFewBins(usize),
    #[error("{bins} bins leave no degrees of freedom under {convention}")]
    NoDegreesOfFreedom {
        bins: usize,
        convention: &'static str,
    },
    #[error("bin {0} has zero expected count")]
    ZeroExpected(String),
    #[error("minimum expected count must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("table has no mass")]
    EmptyTable,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GofError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinKind {
    Exact,
    AtMost,
    AtLeast,
    Span,
}

/// A contiguous range of run lengths `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBin {
    pub lo: usize,
    pub hi: usize,
    pub kind: BinKind,
}

impl LengthBin {
    pub fn exact(len: usize) -> Self {
        Self {
            lo: len,
            hi: len,
            kind: BinKind::Exact,
        }
    }

    /// Joins two adjacent bins, `left` immediately below `right`.
    fn join(left: LengthBin, right: LengthBin) -> Self {
        let kind = if left.kind == BinKind::AtMost {
            BinKind::AtMost
        } else if right.kind == BinKind::AtLeast {
            BinKind::AtLeast
        } else {
            BinKind::Span
        };
        Self {
            lo: left.lo,
            hi: right.hi,
            kind,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            BinKind::Exact => self.lo.to_string(),
            BinKind::AtMost => format!("≤{}", self.hi),
            BinKind::AtLeast => format!("{}+", self.lo),
            BinKind::Span => format!("{}-{}", self.lo, self.hi),
        }
    }

    /// Inverse of [`label`](Self::label); `<=N` is accepted for `≤N`.
    fn parse(label: &str, line: usize) -> Result<Self> {
        let bad = || GofError::Parse {
            line,
            message: format!("bad length label {label:?}"),
        };
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
        if let Some(rest) = label.strip_prefix('≤').or_else(|| label.strip_prefix("<=")) {
            let hi = num(rest)?;
            return Ok(Self {
                lo: 0,
                hi,
                kind: BinKind::AtMost,
            });
        }
        if let Some(rest) = label.strip_suffix('+') {
            let lo = num(rest)?;
            return Ok(Self {
                lo,
                hi: usize::MAX,
                kind: BinKind::AtLeast,
            });
        }
        if let Some((a, b)) = label.split_once('-') {
            return Ok(Self {
                lo: num(a)?,
                hi: num(b)?,
                kind: BinKind::Span,
            });
        }
        Ok(Self::exact(num(label)?))
    }
}

impl fmt::Display for LengthBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub bin: LengthBin,
    pub expected: f64,
    pub observed: u64,
}

/// Expected and observed counts per longest-run length, with the means of
/// both columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthFrequencyTable {
    pub rows: Vec<FrequencyRow>,
    pub expected_mean: f64,
    pub observed_mean: f64,
}

impl LengthFrequencyTable {
    /// One exact-length row for every length between the smallest and
    /// largest key of either map.
    pub fn from_counts(expected: &BTreeMap<usize, f64>, observed: &BTreeMap<usize, u64>) -> Self {
        let keys = expected.keys().chain(observed.keys());
        let (lo, hi) = match (keys.clone().min(), keys.max()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => {
                return Self {
                    rows: Vec::new(),
                    expected_mean: f64::NAN,
                    observed_mean: f64::NAN,
                }
            }
        };
        let rows = (lo..=hi)
            .map(|len| FrequencyRow {
                bin: LengthBin::exact(len),
                expected: expected.get(&len).copied().unwrap_or(0.0),
                observed: observed.get(&len).copied().unwrap_or(0),
            })
            .collect();
        let mut table = Self {
            rows,
            expected_mean: f64::NAN,
            observed_mean: f64::NAN,
        };
        table.refresh_means();
        table
    }

    fn refresh_means(&mut self) {
        let (mut e_mass, mut e_sum, mut o_mass, mut o_sum) = (0.0, 0.0, 0u64, 0.0);
        for row in &self.rows {
            let len = row.bin.lo as f64;
            e_mass += row.expected;
            e_sum += len * row.expected;
            o_mass += row.observed;
            o_sum += len * row.observed as f64;
        }
        self.expected_mean = e_sum / e_mass;
        self.observed_mean = o_sum / o_mass as f64;
    }

    /// Folds trailing rows with nothing observed and less than `negligible`
    /// expected into one open-ended row. Totals and means are unchanged.
    pub fn group_upper_tail(&self, negligible: f64) -> LengthFrequencyTable {
        let keep = self
            .rows
            .iter()
            .rposition(|r| r.observed > 0 || r.expected >= negligible)
            .map_or(0, |i| i + 1);
        if self.rows.len() - keep < 2 {
            return self.clone();
        }
        let tail = &self.rows[keep..];
        let mut rows = self.rows[..keep].to_vec();
        rows.push(FrequencyRow {
            bin: LengthBin {
                lo: tail[0].bin.lo,
                hi: tail[tail.len() - 1].bin.hi,
                kind: BinKind::AtLeast,
            },
            expected: tail.iter().map(|r| r.expected).sum(),
            observed: 0,
        });
        LengthFrequencyTable {
            rows,
            expected_mean: self.expected_mean,
            observed_mean: self.observed_mean,
        }
    }

    pub fn total_expected(&self) -> f64 {
        self.rows.iter().map(|r| r.expected).sum()
    }

    pub fn total_observed(&self) -> u64 {
        self.rows.iter().map(|r| r.observed).sum()
    }

    /// TSV with a `length expected observed` header and a trailing `mean`
    /// row. Counts and means are printed to two decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("length\texpected\tobserved\n");
        for row in &self.rows {
            let _ = writeln!(out, "{}\t{:.2}\t{}", row.bin, row.expected, row.observed);
        }
        let _ = writeln!(
            out,
            "mean\t{:.2}\t{:.2}",
            self.expected_mean, self.observed_mean
        );
        out
    }

    pub fn write_tsv(&self, mut sink: impl Write) -> Result<()> {
        sink.write_all(self.to_tsv().as_bytes())?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads a table in the TSV layout written by [`to_tsv`](Self::to_tsv).
    /// Lines starting with `#` and the `mean` row are ignored; means are
    /// recomputed from the rows, taking each row's lower bound as its length.
    pub fn from_tsv(source: impl BufRead) -> Result<Self> {
        let mut rows = Vec::new();
        let mut seen_header = false;
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            if !seen_header {
                if fields != ["length", "expected", "observed"] {
                    return Err(GofError::Parse {
                        line: line_no,
                        message: "expected header `length\\texpected\\tobserved`".into(),
                    });
                }
                seen_header = true;
                continue;
            }
            if fields.len() != 3 {
                return Err(GofError::Parse {
                    line: line_no,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            if fields[0] == "mean" {
                continue;
            }
            let bin = LengthBin::parse(fields[0], line_no)?;
            let expected: f64 = fields[1].parse().map_err(|_| GofError::Parse {
                line: line_no,
                message: format!("bad expected count {:?}", fields[1]),
            })?;
            let observed: u64 = fields[2].parse().map_err(|_| GofError::Parse {
                line: line_no,
                message: format!("bad observed count {:?}", fields[2]),
            })?;
            rows.push(FrequencyRow {
                bin,
                expected,
                observed,
            });
        }
        let mut table = Self {
            rows,
            expected_mean: f64::NAN,
            observed_mean: f64::NAN,
        };
        table.refresh_means();
        Ok(table)
    }
}

/// Sum over games of each game's exact longest team-run pmf.
///
/// Each distinct event count is computed once.
pub fn expected_counts(event_counts: &[usize], p_same: f64) -> Result<BTreeMap<usize, f64>> {
    let mut pmfs: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut totals: Vec<f64> = Vec::new();
    for &n in event_counts {
        let pmf = match pmfs.entry(n) {
            Entry::Occupied(e) => &*e.into_mut(),
            Entry::Vacant(e) => &*e.insert(runcore::team_run_pmf(n, p_same)?),
        };
        if totals.len() < pmf.len() {
            totals.resize(pmf.len(), 0.0);
        }
        for (t, q) in totals.iter_mut().zip(pmf) {
            *t += q;
        }
    }
    Ok(totals
        .into_iter()
        .enumerate()
        .filter(|&(_, mass)| mass > 0.0)
        .collect())
}

/// Tallies of the longest team run per game within `scope`.
pub fn observed_counts(games: &[GameLog], mode: Mode, scope: Scope) -> BTreeMap<usize, u64> {
    tally(
        games
            .iter()
            .map(|g| longest_team_run(&scoring_sequence(g, mode, scope))),
    )
}

pub fn tally(lengths: impl IntoIterator<Item = usize>) -> BTreeMap<usize, u64> {
    let mut counts = BTreeMap::new();
    for len in lengths {
        *counts.entry(len).or_insert(0) += 1;
    }
    counts
}

/// Merges sparse bins until every bin has at least `min_expected` expected
/// count: the two tails inward, one bin from each side per step, then any
/// remaining interior bin into its smaller neighbour. Merging stops at two bins even if
/// one of them is still below the threshold.
pub fn pool_bins(table: &LengthFrequencyTable, min_expected: f64) -> Result<LengthFrequencyTable> {
    if !(min_expected > 0.0) {
        return Err(GofError::InvalidThreshold(min_expected));
    }
    if table.rows.len() < 2 {
        return Err(GofError::TooFewBins(table.rows.len()));
    }
    let mut rows = table.rows.clone();
    let merge = |rows: &mut Vec<FrequencyRow>, left: usize| {
        let right = rows.remove(left + 1);
        let row = &mut rows[left];
        row.bin = LengthBin::join(row.bin, right.bin);
        row.expected += right.expected;
        row.observed += right.observed;
    };

    loop {
        let mut merged = false;
        if rows.len() > 2 && rows[0].expected < min_expected {
            rows[0].bin.kind = BinKind::AtMost;
            merge(&mut rows, 0);
            merged = true;
        }
        if rows.len() > 2 && rows[rows.len() - 1].expected < min_expected {
            let last = rows.len() - 1;
            rows[last].bin.kind = BinKind::AtLeast;
            merge(&mut rows, last - 1);
            merged = true;
        }
        if !merged {
            break;
        }
    }
    while rows.len() > 2 {
        let Some(i) = (1..rows.len() - 1).find(|&i| rows[i].expected < min_expected) else {
            break;
        };
        if rows[i - 1].expected <= rows[i + 1].expected {
            merge(&mut rows, i - 1);
        } else {
            merge(&mut rows, i);
        }
    }
    Ok(LengthFrequencyTable {
        rows,
        expected_mean: table.expected_mean,
        observed_mean: table.observed_mean,
    })
}

/// `(expected_mean, observed_mean)` of the table.
pub fn summarize(table: &LengthFrequencyTable) -> Result<(f64, f64)> {
    if table.total_observed() == 0 || !(table.total_expected() > 0.0) {
        return Err(GofError::EmptyTable);
    }
    Ok((table.expected_mean, table.observed_mean))
}
