//! Exact distribution of the longest success run in independent Bernoulli
//! trials.
//!
//! The primary route tracks the current success run as a Markov chain whose
//! state `m` is absorbing. After `n` steps from state 0, the probability of
//! sitting in state `m` is the probability that a run of at least `m`
//! successes has occurred. Sweeping `m` gives the full distribution.
//!
//! [`dp_longest_run_distribution`] and [`brute_force_distribution`] compute
//! the same quantity without the chain and serve as cross-checks.

use thiserror::Error;

/// Tail probabilities below this are treated as zero when sweeping run lengths.
pub const TAIL_CUTOFF: f64 = 1e-15;

/// Largest trial count accepted by [`brute_force_distribution`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RunError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("absorbing run length must be at least 1")]
    ZeroRunLength,
    #[error("brute force enumeration is limited to n <= {max}, got {n}")]
    TooManyTrials { n: usize, max: usize },
    #[error("a game needs at least one scoring event")]
    NoScores,
}

pub type Result<T> = std::result::Result<T, RunError>;

fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(RunError::InvalidProbability(p))
    }
}

/// `n` independent trials, each a success with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliRunModel {
    n: usize,
    p: f64,
}

impl BernoulliRunModel {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        Ok(Self {
            n,
            p: check_probability(p)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn distribution(&self) -> LongestRunDistribution {
        chain_distribution(self.n, self.p, &build_transition_matrix)
            .expect("model probability already validated")
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * d..(k + 1) * d];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Matrix { dim: d, data: out }
    }

    /// Row vector times matrix.
    fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (k, &a) in v.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(self.row(k)) {
                *o += a * b;
            }
        }
        out
    }

    /// `self^exp` by repeated squaring.
    pub fn pow(&self, mut exp: u64) -> Matrix {
        let mut result = Matrix::identity(self.dim);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Row `row` of `self^exp`, squaring the base but only carrying one row
    /// of the accumulated product.
    pub fn pow_row(&self, mut exp: u64, row: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        acc[row] = 1.0;
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = base.left_mul(&acc);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// Transition matrix of the current-run chain on states `0..=m`, with `m`
/// absorbing.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    p: f64,
    m: usize,
    matrix: Matrix,
}

impl AbsorbingChain {
    pub fn p(&self) -> f64 {
        self.p
    }

    /// The absorbing state, i.e. the run length being waited for.
    pub fn absorbing_state(&self) -> usize {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix.get(row, col)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

/// Builds the `(m+1) x (m+1)` chain: from each transient state `i` a success
/// moves to `i+1` and a failure resets to 0; state `m` is absorbing.
pub fn build_transition_matrix(p: f64, m: usize) -> Result<AbsorbingChain> {
    let p = check_probability(p)?;
    if m == 0 {
        return Err(RunError::ZeroRunLength);
    }
    let dim = m + 1;
    let mut data = vec![0.0; dim * dim];
    for i in 0..m {
        data[i * dim + i + 1] = p;
        data[i * dim] = 1.0 - p;
    }
    data[m * dim + m] = 1.0;
    Ok(AbsorbingChain {
        p,
        m,
        matrix: Matrix { dim, data },
    })
}

/// n-step transition probabilities of `chain`.
pub fn matrix_power(chain: &AbsorbingChain, n: u64) -> Matrix {
    chain.matrix.pow(n)
}

/// P(longest success run in `n` trials >= `m`).
pub fn prob_longest_run_at_least(n: usize, p: f64, m: usize) -> Result<f64> {
    at_least_with(n, p, m, &build_transition_matrix)
}

type ChainBuilder<'a> = &'a dyn Fn(f64, usize) -> Result<AbsorbingChain>;

fn at_least_with(n: usize, p: f64, m: usize, builder: ChainBuilder<'_>) -> Result<f64> {
    check_probability(p)?;
    if m == 0 {
        return Ok(1.0);
    }
    if m > n {
        return Ok(0.0);
    }
    let chain = builder(p, m)?;
    let row = chain.matrix.pow_row(n as u64, 0);
    Ok(row[chain.m])
}

/// Exact pmf of the longest success run over lengths `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LongestRunDistribution {
    n: usize,
    p: f64,
    pmf: Vec<f64>,
}

impl LongestRunDistribution {
    fn from_pmf(n: usize, p: f64, pmf: Vec<f64>) -> Self {
        debug_assert_eq!(pmf.len(), n + 1);
        Self { n, p, pmf }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Probability that the longest run is exactly `len`.
    pub fn pmf(&self, len: usize) -> f64 {
        self.pmf.get(len).copied().unwrap_or(0.0)
    }

    /// Probabilities indexed by run length, `0..=n`.
    pub fn probabilities(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf(&self, len: usize) -> f64 {
        let end = (len + 1).min(self.pmf.len());
        self.pmf[..end].iter().sum::<f64>().min(1.0)
    }

    /// P(longest >= len).
    pub fn tail(&self, len: usize) -> f64 {
        self.pmf.iter().skip(len).sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(len, &q)| len as f64 * q)
            .sum()
    }
}

/// Markov-chain route: sweeps `m = 1..=n` and differences the tails.
pub fn longest_run_distribution(n: usize, p: f64) -> Result<LongestRunDistribution> {
    chain_distribution(n, p, &build_transition_matrix)
}

/// Same as [`longest_run_distribution`] but with a caller-supplied chain
/// builder. Used by validation to prove that a broken builder is caught.
pub fn chain_distribution(
    n: usize,
    p: f64,
    builder: ChainBuilder<'_>,
) -> Result<LongestRunDistribution> {
    check_probability(p)?;
    // tails[m] = P(longest >= m), tails[n + 1] = 0
    let mut tails = vec![0.0; n + 2];
    tails[0] = 1.0;
    for m in 1..=n {
        let t = at_least_with(n, p, m, builder)?;
        if t < TAIL_CUTOFF {
            break;
        }
        tails[m] = t;
    }
    let pmf = tails.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    Ok(LongestRunDistribution::from_pmf(n, p, pmf))
}

pub fn expected_longest_run(n: usize, p: f64) -> Result<f64> {
    Ok(longest_run_distribution(n, p)?.mean())
}

/// Forward dynamic program over (current run, longest run so far), one trial
/// at a time. Independent of the chain construction.
pub fn dp_longest_run_distribution(n: usize, p: f64) -> Result<LongestRunDistribution> {
    let p = check_probability(p)?;
    let q = 1.0 - p;
    // state[best][cur] with cur <= best <= n
    let mut state = vec![vec![0.0; n + 1]; n + 1];
    state[0][0] = 1.0;
    for trial in 0..n {
        let mut next = vec![vec![0.0; n + 1]; n + 1];
        // After `trial` trials neither run can exceed `trial`.
        for best in 0..=trial {
            for cur in 0..=best {
                let w = state[best][cur];
                if w == 0.0 {
                    continue;
                }
                next[best][0] += w * q;
                let grown = cur + 1;
                next[best.max(grown)][grown] += w * p;
            }
        }
        state = next;
    }
    let pmf = state.iter().map(|row| row.iter().sum()).collect();
    Ok(LongestRunDistribution::from_pmf(n, p, pmf))
}

/// Enumerates all `2^n` outcome sequences. Test oracle only; `n <= 20`.
pub fn brute_force_distribution(n: usize, p: f64) -> Result<LongestRunDistribution> {
    let p = check_probability(p)?;
    if n > BRUTE_FORCE_MAX_N {
        return Err(RunError::TooManyTrials {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let mut pmf = vec![0.0; n + 1];
    for outcome in 0u32..(1u32 << n) {
        let mut longest = 0;
        let mut cur = 0;
        for bit in 0..n {
            if outcome >> bit & 1 == 1 {
                cur += 1;
                longest = longest.max(cur);
            } else {
                cur = 0;
            }
        }
        let successes = outcome.count_ones() as i32;
        let failures = n as i32 - successes;
        pmf[longest] += p.powi(successes) * (1.0 - p).powi(failures);
    }
    Ok(LongestRunDistribution::from_pmf(n, p, pmf))
}

/// How a game with `N` scoring events maps onto Bernoulli trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialConvention {
    /// `N - 1` same/different symbols, one per consecutive pair of scores.
    EventsMinusOne,
    /// `N` symbols.
    Events,
}

impl TrialConvention {
    pub fn trials(self, total_scores: usize) -> usize {
        match self {
            TrialConvention::EventsMinusOne => total_scores.saturating_sub(1),
            TrialConvention::Events => total_scores,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            TrialConvention::EventsMinusOne => {
                "N scoring events -> N-1 same/different trials; team run = 1 + longest same-team run"
            }
            TrialConvention::Events => {
                "N scoring events -> N same/different trials; team run = 1 + longest same-team run"
            }
        }
    }
}

/// Convention used for all team-run computations. The literal transform
/// reproduces the reference expectations for 50..150 scores within 0.02.
pub const TRIAL_CONVENTION: TrialConvention = TrialConvention::EventsMinusOne;

/// Pmf of the longest team run in a game with `total_scores` scoring events,
/// indexed by run length (`0..=total_scores`, entry 0 is always zero).
pub fn team_run_pmf(total_scores: usize, p_same: f64) -> Result<Vec<f64>> {
    if total_scores == 0 {
        return Err(RunError::NoScores);
    }
    let trials = TRIAL_CONVENTION.trials(total_scores);
    let dist = longest_run_distribution(trials, p_same)?;
    let mut pmf = vec![0.0; total_scores + 1];
    for (s_run, &q) in dist.probabilities().iter().enumerate() {
        pmf[s_run + 1] += q;
    }
    Ok(pmf)
}

/// Expected longest run of consecutive scores by one team.
pub fn team_run_expectation(total_scores: usize, p_same: f64) -> Result<f64> {
    if total_scores == 0 {
        return Err(RunError::NoScores);
    }
    let trials = TRIAL_CONVENTION.trials(total_scores);
    Ok(1.0 + expected_longest_run(trials, p_same)?)
}
