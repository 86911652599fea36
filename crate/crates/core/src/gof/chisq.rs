//! Chi-square goodness of fit and the incomplete gamma function behind its
//! p-value.

use serde::{Deserialize, Serialize};

use super::{GofError, LengthFrequencyTable, Result};

const GAMMA_EPS: f64 = 1e-14;
const GAMMA_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
///
/// Uses the power series for `x < a + 1` and a Lentz continued fraction
/// otherwise.
pub fn regularized_upper_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..GAMMA_MAX_ITER {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        (1.0 - sum * log_prefactor.exp()).clamp(0.0, 1.0)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        (log_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, df: usize) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    regularized_upper_gamma(df as f64 / 2.0, statistic / 2.0)
}

/// How many degrees of freedom to subtract from the bin count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DfConvention {
    /// bins - 1
    #[serde(rename = "bins-1")]
    BinsMinus1,
    /// bins - 2, charging one degree of freedom for the estimated P(S)
    #[serde(rename = "bins-2")]
    BinsMinus2,
}

impl DfConvention {
    pub fn subtract(self) -> usize {
        match self {
            DfConvention::BinsMinus1 => 1,
            DfConvention::BinsMinus2 => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DfConvention::BinsMinus1 => "bins-1",
            DfConvention::BinsMinus2 => "bins-2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Bin labels the statistic was computed over, e.g. `≤3 4 5 6 7+`.
    pub pooling: String,
    pub df_convention: DfConvention,
}

impl ChiSquareResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Pearson statistic over the table's bins.
pub fn chi_square_test(
    table: &LengthFrequencyTable,
    convention: DfConvention,
) -> Result<ChiSquareResult> {
    let bins = table.rows.len();
    if bins < 2 {
        return Err(GofError::TooFewBins(bins));
    }
    if bins <= convention.subtract() {
        return Err(GofError::NoDegreesOfFreedom {
            bins,
            convention: convention.label(),
        });
    }
    let mut statistic = 0.0;
    for row in &table.rows {
        if !(row.expected > 0.0) {
            return Err(GofError::ZeroExpected(row.bin.label()));
        }
        let diff = row.observed as f64 - row.expected;
        statistic += diff * diff / row.expected;
    }
    let degrees_of_freedom = bins - convention.subtract();
    let pooling = table
        .rows
        .iter()
        .map(|r| r.bin.label())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ChiSquareResult {
        statistic,
        degrees_of_freedom,
        p_value: chi_square_sf(statistic, degrees_of_freedom),
        pooling,
        df_convention: convention,
    })
}
