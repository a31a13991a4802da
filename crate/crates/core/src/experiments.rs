//! Monte Carlo experiments on random mixed-unitary channels: expected
//! deviation against closed-form bounds, bounded differences, concentration
//! tails, minimal-cardinality sweeps and the cardinality formulas they are
//! compared with.
//!
//! Every experiment derives all of its randomness from `ExperimentConfig::seed`
//! through [`Seed::split`], one sub-stream per trial, so results do not depend
//! on how trials are scheduled across threads.

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{haar_unitary_from, sample_pure_state, PureState, Seed, UnitaryEnsemble};
use crate::linalg::ComplexMatrix;
use crate::net::{build_net, Net, MAX_NET_DIM};
use crate::norms::{
    check_hoelder, check_interpolation, check_reverse_triangle, schatten_norm, PExponent, INEQUALITY_SLACK,
};
use crate::randomizer::{randomization_threshold, required_net_radius, RandomizingChannel};

const TAG_EXPECTATION: u64 = 0x45;
const TAG_BOUNDED_DIFF: u64 = 0x42;
const TAG_TAIL: u64 = 0x54;
const TAG_SWEEP: u64 = 0x53;
const TAG_NET: u64 = 0x4e;
const TAG_ORACLES: u64 = 0x4f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Evaluate on an eta-net at half threshold (d <= 3 only).
    Net,
    /// Evaluate on sampled states at full threshold.
    Sample,
}

/// Where ensembles come from. `PauliCycle` replaces Haar draws by the
/// cyclic Pauli sequence and only makes sense at d = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleSource {
    Haar,
    #[serde(alias = "pauli")]
    PauliCycle,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "net" => Ok(Mode::Net),
            "sample" => Ok(Mode::Sample),
            _ => Err(Error::InvalidInput(format!("unknown mode {s:?} (expected net or sample)"))),
        }
    }
}

impl FromStr for EnsembleSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(EnsembleSource::Haar),
            "pauli" | "pauli_cycle" => Ok(EnsembleSource::PauliCycle),
            _ => Err(Error::InvalidInput(format!("unknown ensemble {s:?} (expected haar or pauli)"))),
        }
    }
}

/// Cardinality range; a single value when `min == max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MRange {
    pub min: usize,
    pub max: usize,
    pub ratio: f64,
}

impl MRange {
    pub const DEFAULT_RATIO: f64 = 1.3;

    pub fn fixed(m: usize) -> Self {
        Self { min: m, max: m, ratio: Self::DEFAULT_RATIO }
    }

    pub fn geometric(min: usize, max: usize) -> Self {
        Self { min, max, ratio: Self::DEFAULT_RATIO }
    }

    pub fn is_fixed(&self) -> bool {
        self.min == self.max
    }

    /// `min, round(min * ratio), ...` up to `max`, strictly increasing.
    pub fn grid(&self) -> Vec<usize> {
        let mut out = vec![self.min];
        let mut current = self.min;
        while current < self.max {
            let next = ((current as f64 * self.ratio).round() as usize).max(current + 1).min(self.max);
            out.push(next);
            current = next;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    pub p: PExponent,
    /// Companion exponent for the expectation bound; `p + 1` when absent.
    pub r: Option<PExponent>,
    pub epsilon: f64,
    pub m: MRange,
    pub trials: usize,
    pub states_per_trial: usize,
    pub seed: Seed,
    pub mode: Mode,
    pub source: EnsembleSource,
    /// Consecutive-rejection budget when a net has to be built.
    pub net_budget: usize,
}

impl ExperimentConfig {
    pub fn new(d: usize, p: PExponent, epsilon: f64, m: MRange, seed: Seed) -> Self {
        Self {
            d,
            p,
            r: None,
            epsilon,
            m,
            trials: 100,
            states_per_trial: 50,
            seed,
            mode: Mode::Sample,
            source: EnsembleSource::Haar,
            net_budget: 2000,
        }
    }

    pub fn companion(&self) -> PExponent {
        self.r.unwrap_or_else(|| self.p.companion())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidInput("d must be positive".into()));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.trials == 0 || self.states_per_trial == 0 {
            return Err(Error::InvalidInput("trials and states_per_trial must be positive".into()));
        }
        if self.m.min == 0 || self.m.max < self.m.min || !(self.m.ratio > 1.0) {
            return Err(Error::InvalidInput(format!("invalid m range {:?}", self.m)));
        }
        if let Some(r) = self.r {
            if r <= self.p {
                return Err(Error::InvalidExponent(format!("need r > p, got p = {}, r = {r}", self.p)));
            }
        }
        if self.source == EnsembleSource::PauliCycle && self.d != 2 {
            return Err(Error::InvalidInput("the Pauli ensemble requires d = 2".into()));
        }
        if self.mode == Mode::Net && self.d > MAX_NET_DIM {
            return Err(Error::NetDimensionGuard { d: self.d });
        }
        Ok(())
    }

    fn single_m(&self) -> Result<usize> {
        if !self.m.is_fixed() {
            return Err(Error::InvalidInput("this experiment needs a single m value".into()));
        }
        Ok(self.m.min)
    }

    fn channel(&self, m: usize, seed: Seed) -> Result<RandomizingChannel> {
        match self.source {
            EnsembleSource::Haar => RandomizingChannel::haar(self.d, m, seed),
            EnsembleSource::PauliCycle => Ok(RandomizingChannel::pauli_cycle(m)),
        }
    }
}

fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `(d^(1/p)/m^p + r/(m^(p-1) d^(1/p)))^(1/r)` for finite `r > p`.
pub fn expectation_bound_general(d: usize, m: usize, p: PExponent, r: PExponent) -> Option<f64> {
    let (PExponent::Finite(p), PExponent::Finite(r)) = (p, r) else {
        return None;
    };
    let (d, m) = (d as f64, m as f64);
    let root = d.powf(1.0 / p);
    Some((root / m.powf(p) + r / (m.powf(p - 1.0) * root)).powf(1.0 / r))
}

/// Closed forms for `(p, r) = (1, 2)`: `sqrt(d/m)`, and `(2, 3)`:
/// `(sqrt(d)/m^2 + 3/(m sqrt(d)))^(1/3)`.
pub fn expectation_bound_specialized(d: usize, m: usize, p: PExponent, r: PExponent) -> Option<f64> {
    let (d, m) = (d as f64, m as f64);
    match (p, r) {
        (PExponent::Finite(p), PExponent::Finite(r)) if p == 1.0 && r == 2.0 => Some((d / m).sqrt()),
        (PExponent::Finite(p), PExponent::Finite(r)) if p == 2.0 && r == 3.0 => {
            Some((d.sqrt() / (m * m) + 3.0 / (m * d.sqrt())).cbrt())
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMomentCheck {
    /// Mean of `d ||R(psi)||_2^2 - 1`.
    pub mean: f64,
    pub std_error: f64,
    /// `d/m`
    pub bound: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedDeviation {
    pub m: usize,
    pub trials: usize,
    pub p: PExponent,
    pub r: PExponent,
    pub mean_y: f64,
    pub std_error: f64,
    /// The specialized closed form when one exists, else the general formula.
    pub lemma3_bound: f64,
    pub general_bound: f64,
    pub specialized_bound: Option<f64>,
    /// `mean_y <= lemma3_bound + 2 std_error`
    pub within: bool,
    pub within_general: bool,
    pub second_moment: SecondMomentCheck,
}

/// Monte Carlo estimate of `E ||R(psi) - I/d||_p` over fresh ensembles and
/// states, compared with the expectation bounds.
pub fn estimate_expected_deviation(cfg: &ExperimentConfig) -> Result<ExpectedDeviation> {
    cfg.validate()?;
    let m = cfg.single_m()?;
    let r = cfg.companion();
    if r <= cfg.p {
        return Err(Error::InvalidExponent(format!("need r > p, got p = {}, r = {r}", cfg.p)));
    }
    if cfg.trials < 30 {
        return Err(Error::InvalidInput(format!("need >= 30 trials, got {}", cfg.trials)));
    }
    let general_bound = expectation_bound_general(cfg.d, m, cfg.p, r)
        .ok_or_else(|| Error::InvalidExponent("expectation bound needs finite p and r".into()))?;
    let specialized_bound = expectation_bound_specialized(cfg.d, m, cfg.p, r);

    let base = cfg.seed.split(TAG_EXPECTATION);
    let d = cfg.d as f64;
    let samples = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = base.split(t);
            let ch = cfg.channel(m, s.split(0))?;
            let psi = sample_pure_state(cfg.d, s.split(1))?;
            let out = ch.apply_pure(&psi)?;
            let y = schatten_norm(&out.shift_diagonal(1.0 / d)?, cfg.p)?;
            Ok((y, d * out.frobenius_sq() - 1.0))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let ys: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let second: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (mean_y, std_error) = mean_and_std_error(&ys);
    let (mean2, se2) = mean_and_std_error(&second);
    let lemma3_bound = specialized_bound.unwrap_or(general_bound);
    let second_bound = d / m as f64;
    Ok(ExpectedDeviation {
        m,
        trials: cfg.trials,
        p: cfg.p,
        r,
        mean_y,
        std_error,
        lemma3_bound,
        general_bound,
        specialized_bound,
        within: mean_y <= lemma3_bound + 2.0 * std_error,
        within_general: mean_y <= general_bound + 2.0 * std_error,
        second_moment: SecondMomentCheck {
            mean: mean2,
            std_error: se2,
            bound: second_bound,
            within: mean2 <= second_bound + 3.0 * se2,
        },
    })
}

/// Bounded-difference constant `2^(1/p) / m`.
pub fn bounded_difference_constant(m: usize, p: PExponent) -> f64 {
    2f64.powf(p.reciprocal()) / m as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedDifference {
    pub replacements: usize,
    pub max_delta: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|Y - Y_hat|` when member `index` of `ensemble` is replaced by `replacement`.
pub fn replacement_delta(
    ensemble: &UnitaryEnsemble,
    psi: &PureState,
    index: usize,
    replacement: &ComplexMatrix,
    p: PExponent,
) -> Result<f64> {
    let before = RandomizingChannel::new(ensemble.clone());
    let after = RandomizingChannel::new(ensemble.with_replaced(index, replacement.clone())?);
    Ok((before.distance_to_mixed(psi, p)? - after.distance_to_mixed(psi, p)?).abs())
}

/// Replaces one uniformly chosen member of a fixed ensemble by a fresh Haar
/// unitary, `replacements` times, and records the largest change in `Y`.
pub fn check_bounded_difference(cfg: &ExperimentConfig, replacements: usize) -> Result<BoundedDifference> {
    cfg.validate()?;
    let m = cfg.single_m()?;
    if m < 2 {
        return Err(Error::InvalidInput("bounded-difference check needs m >= 2".into()));
    }
    if replacements == 0 {
        return Err(Error::InvalidInput("need at least one replacement".into()));
    }
    let base = cfg.seed.split(TAG_BOUNDED_DIFF);
    let ch = cfg.channel(m, base.split(0))?;
    let psi = sample_pure_state(cfg.d, base.split(1))?;
    let d = cfg.d;
    let inv_d = 1.0 / d as f64;
    let inv_m = 1.0 / m as f64;

    let output = ch.apply_pure(&psi)?;
    let y = schatten_norm(&output.shift_diagonal(inv_d)?, cfg.p)?;
    let images: Vec<ComplexMatrix> = ch
        .ensemble()
        .members()
        .iter()
        .map(|u| u.apply(psi.amplitudes()).map(|v| ComplexMatrix::outer(&v)))
        .collect::<Result<_>>()?;

    let replacement_seed = base.split(2);
    let deltas = (0..replacements as u64)
        .into_par_iter()
        .map(|k| {
            let mut source = replacement_seed.split(k).gaussian();
            let index = source.uniform_index(m);
            let fresh = haar_unitary_from(d, &mut source);
            let image = ComplexMatrix::outer(&fresh.apply(psi.amplitudes())?);
            let updated = output.add(&image.sub(&images[index])?.scale(Complex64::new(inv_m, 0.0)))?;
            let y_hat = schatten_norm(&updated.shift_diagonal(inv_d)?, cfg.p)?;
            Ok((y - y_hat).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_delta = deltas.into_iter().fold(0.0, f64::max);
    let bound = bounded_difference_constant(m, cfg.p);
    Ok(BoundedDifference { replacements, max_delta, bound, holds: max_delta <= bound + INEQUALITY_SLACK })
}

/// The saturating construction at `d = m = 2`: ensemble `{I, I}`, input
/// `|0>`, and the second member replaced by Pauli X, which sends `|0>` to
/// an orthogonal state. `Y` drops from `||psi - I/2||_p = 2^(1/p)/2` to 0.
pub fn bounded_difference_witness(p: PExponent) -> Result<BoundedDifference> {
    let id = ComplexMatrix::identity(2);
    let ensemble = UnitaryEnsemble::from_members(vec![id.clone(), id], None)?;
    let psi = PureState::basis(2, 0)?;
    let x = crate::randomizer::pauli_matrices()[1].clone();
    let max_delta = replacement_delta(&ensemble, &psi, 1, &x, p)?;
    let bound = bounded_difference_constant(2, p);
    Ok(BoundedDifference { replacements: 1, max_delta, bound, holds: max_delta <= bound + INEQUALITY_SLACK })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub t: f64,
    pub trials: usize,
    pub mean_y: f64,
    pub exceedances: usize,
    pub empirical_tail: f64,
    /// `2 exp(-m t^2 2^(1 - 2/p))`
    pub bound: f64,
    /// The same exponent read in base 2: `2 * 2^(-m t^2 2^(1 - 2/p))`.
    pub bound_base2: f64,
    /// Binomial standard error of `empirical_tail`.
    pub std_error: f64,
    pub within: bool,
}

/// `2 exp(-2 t^2 / sum c_i^2)` with `c_i = 2^(1/p)/m`, natural exponential.
pub fn mcdiarmid_bound(m: usize, p: PExponent, t: f64) -> f64 {
    2.0 * (-mcdiarmid_exponent(m, p, t)).exp()
}

fn mcdiarmid_exponent(m: usize, p: PExponent, t: f64) -> f64 {
    m as f64 * t * t * 2f64.powf(1.0 - 2.0 * p.reciprocal())
}

fn tail_from_samples(ys: &[f64], m: usize, p: PExponent, t: f64) -> TailCheck {
    let n = ys.len();
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let exceedances = ys.iter().filter(|y| (*y - mean_y).abs() >= t).count();
    let empirical_tail = exceedances as f64 / n as f64;
    let std_error = (empirical_tail * (1.0 - empirical_tail) / n as f64).sqrt();
    let bound = mcdiarmid_bound(m, p, t);
    TailCheck {
        t,
        trials: n,
        mean_y,
        exceedances,
        empirical_tail,
        bound,
        bound_base2: 2.0 * 2f64.powf(-mcdiarmid_exponent(m, p, t)),
        std_error,
        within: empirical_tail <= bound + 3.0 * std_error,
    }
}

fn tail_samples(cfg: &ExperimentConfig, m: usize) -> Result<Vec<f64>> {
    let base = cfg.seed.split(TAG_TAIL);
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| {
            let s = base.split(k);
            let ch = cfg.channel(m, s.split(0))?;
            let psi = sample_pure_state(cfg.d, s.split(1))?;
            ch.distance_to_mixed(&psi, cfg.p)
        })
        .collect()
}

/// Empirical `P[|Y - mean| >= t]` over independent ensembles against the
/// bounded-difference concentration bound.
pub fn mcdiarmid_tail(cfg: &ExperimentConfig, t: f64) -> Result<TailCheck> {
    Ok(mcdiarmid_tails(cfg, &[t])?.remove(0))
}

/// Several thresholds evaluated on one shared set of samples.
pub fn mcdiarmid_tails(cfg: &ExperimentConfig, ts: &[f64]) -> Result<Vec<TailCheck>> {
    cfg.validate()?;
    let m = cfg.single_m()?;
    if ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput("tail thresholds must be positive".into()));
    }
    let ys = tail_samples(cfg, m)?;
    Ok(ts.iter().map(|&t| tail_from_samples(&ys, m, cfg.p, t)).collect())
}

/// Cardinalities from the competing formulas. All logarithms are base 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CardinalityFormulas {
    pub d: usize,
    pub epsilon: f64,
    pub p: PExponent,
    pub c_p: f64,
    /// `c_p d / eps^2 * log2(10 d^((p-1)/p) / eps)`
    pub theorem1_m: f64,
    /// `134 d log2(d) / eps^2`
    pub hlsw_m: f64,
    /// `37 d / eps^2 * log2(15 / eps)`
    pub dn_m: f64,
    /// `d / eps^2`, i.e. `C d / eps^2` with `C = 1`
    pub aubrun_m: f64,
    /// Human-readable argument of the logarithm in `theorem1_m`.
    pub log_argument: String,
}

pub fn theorem1_log_argument(d: usize, epsilon: f64, p: PExponent) -> f64 {
    10.0 * (d as f64).powf(p.conjugate_fraction()) / epsilon
}

pub fn theorem1_log_label(p: PExponent) -> String {
    match p {
        PExponent::Finite(q) if q == 1.0 => "10/\u{03b5}".to_string(),
        PExponent::Infinity => "10\u{00b7}d/\u{03b5}".to_string(),
        _ => format!("10\u{00b7}d^({})/\u{03b5}", p.conjugate_fraction()),
    }
}

pub fn dn_baseline(d: usize, epsilon: f64) -> f64 {
    37.0 * d as f64 / (epsilon * epsilon) * (15.0 / epsilon).log2()
}

pub fn hlsw_baseline(d: usize, epsilon: f64) -> f64 {
    134.0 * d as f64 * (d as f64).log2() / (epsilon * epsilon)
}

pub fn evaluate_cardinality_formulas(
    d: usize,
    epsilon: f64,
    p: PExponent,
    c_p: f64,
) -> Result<CardinalityFormulas> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("need d >= 2, got {d}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(c_p > 0.0) {
        return Err(Error::InvalidInput(format!("c_p must be positive, got {c_p}")));
    }
    let df = d as f64;
    let eps2 = epsilon * epsilon;
    Ok(CardinalityFormulas {
        d,
        epsilon,
        p,
        c_p,
        theorem1_m: c_p * df / eps2 * theorem1_log_argument(d, epsilon, p).log2(),
        hlsw_m: hlsw_baseline(d, epsilon),
        dn_m: dn_baseline(d, epsilon),
        aubrun_m: df / eps2,
        log_argument: theorem1_log_label(p),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub m: usize,
    pub trials: usize,
    pub passes: usize,
    pub pass_fraction: f64,
    /// Mean over trials of the per-trial mean `Y`.
    pub mean_y: f64,
    pub max_y: f64,
    /// Standard error of `mean_y` across trials.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub m_star: usize,
    pub pass_fraction: f64,
    pub previous_m: Option<usize>,
    pub previous_pass_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryComparison {
    /// `d / eps^2 * log2(10 d^((p-1)/p) / eps)`, the formula with `c_p = 1`.
    pub unit_formula_m: f64,
    /// `m_star / unit_formula_m`
    pub fitted_c_p: Option<f64>,
    pub theorem1_m_fitted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baselines {
    pub hlsw_m: f64,
    pub dn_m: f64,
    /// `d / eps^2`
    pub aubrun_form: f64,
    /// `m_star / aubrun_form`
    pub aubrun_fitted_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailObservation {
    pub t: f64,
    pub empirical_tail: f64,
    pub bound: f64,
    pub bound_base2: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McDiarmidSummary {
    pub m: usize,
    pub max_observed_delta: f64,
    pub bound: f64,
    pub tails: Vec<TailObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub success_fraction: f64,
    pub points: Vec<SweepPoint>,
    pub m_star: Option<usize>,
    pub bracket: Option<Bracket>,
    pub theory: TheoryComparison,
    pub baselines: Baselines,
    pub mcdiarmid: Option<McDiarmidSummary>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl SweepReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

struct TrialOutcome {
    pass: bool,
    mean_y: f64,
    max_y: f64,
    first_y: f64,
}

fn run_trial(
    cfg: &ExperimentConfig,
    m: usize,
    seed: Seed,
    net: Option<&Net>,
) -> Result<TrialOutcome> {
    let ch = cfg.channel(m, seed.split(0))?;
    let ys: Vec<f64> = match net {
        Some(net) => net
            .points()
            .iter()
            .map(|psi| ch.distance_to_mixed(psi, cfg.p))
            .collect::<Result<_>>()?,
        None => {
            let states = seed.split(1);
            (0..cfg.states_per_trial as u64)
                .map(|k| {
                    let psi = sample_pure_state(cfg.d, states.split(k))?;
                    ch.distance_to_mixed(&psi, cfg.p)
                })
                .collect::<Result<_>>()?
        }
    };
    let threshold = match net {
        Some(_) => required_net_radius(cfg.epsilon, cfg.d, cfg.p),
        None => randomization_threshold(cfg.epsilon, cfg.d, cfg.p),
    };
    let max_y = ys.iter().copied().fold(0.0, f64::max);
    Ok(TrialOutcome {
        pass: ys.iter().all(|&y| y <= threshold),
        mean_y: ys.iter().sum::<f64>() / ys.len() as f64,
        max_y,
        first_y: ys[0],
    })
}

const SWEEP_TAIL_TS: [f64; 3] = [0.05, 0.1, 0.2];
const SWEEP_REPLACEMENTS: usize = 200;

/// Walks the geometric `m` grid until the fraction of passing trials
/// reaches `success_fraction`. A trial passes when every evaluated state
/// meets the threshold (half threshold on net points).
pub fn minimal_m_sweep(cfg: &ExperimentConfig, success_fraction: f64) -> Result<SweepReport> {
    cfg.validate()?;
    if !(success_fraction > 0.0 && success_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("success_fraction must lie in (0, 1], got {success_fraction}")));
    }
    let net = match cfg.mode {
        Mode::Net => {
            let eta = required_net_radius(cfg.epsilon, cfg.d, cfg.p).min(2.0);
            Some(build_net(cfg.d, eta, cfg.net_budget, cfg.seed.split(TAG_NET))?)
        }
        Mode::Sample => None,
    };
    let base = cfg.seed.split(TAG_SWEEP);

    let mut points = Vec::new();
    let mut m_star = None;
    let mut star_samples = Vec::new();
    for m in cfg.m.grid() {
        let grid_seed = base.split(m as u64);
        let outcomes = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, m, grid_seed.split(t), net.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let passes = outcomes.iter().filter(|o| o.pass).count();
        let means: Vec<f64> = outcomes.iter().map(|o| o.mean_y).collect();
        let (mean_y, std_error) = mean_and_std_error(&means);
        let pass_fraction = passes as f64 / cfg.trials as f64;
        points.push(SweepPoint {
            m,
            trials: cfg.trials,
            passes,
            pass_fraction,
            mean_y,
            max_y: outcomes.iter().map(|o| o.max_y).fold(0.0, f64::max),
            std_error,
        });
        if pass_fraction >= success_fraction {
            m_star = Some(m);
            star_samples = outcomes.iter().map(|o| o.first_y).collect();
            break;
        }
    }

    let bracket = m_star.map(|m| {
        let n = points.len();
        Bracket {
            m_star: m,
            pass_fraction: points[n - 1].pass_fraction,
            previous_m: (n >= 2).then(|| points[n - 2].m),
            previous_pass_fraction: (n >= 2).then(|| points[n - 2].pass_fraction),
        }
    });

    let eps2 = cfg.epsilon * cfg.epsilon;
    let unit_formula_m =
        cfg.d as f64 / eps2 * theorem1_log_argument(cfg.d, cfg.epsilon, cfg.p).log2();
    let fitted_c_p = m_star.map(|m| m as f64 / unit_formula_m);
    let aubrun_form = cfg.d as f64 / eps2;

    let mcdiarmid = match (m_star, cfg.source) {
        (Some(m), EnsembleSource::Haar) if m >= 2 => {
            let mut bd_cfg = cfg.clone();
            bd_cfg.m = MRange::fixed(m);
            bd_cfg.mode = Mode::Sample;
            let bd = check_bounded_difference(&bd_cfg, SWEEP_REPLACEMENTS)?;
            let tails = SWEEP_TAIL_TS
                .iter()
                .map(|&t| {
                    let chk = tail_from_samples(&star_samples, m, cfg.p, t);
                    TailObservation {
                        t,
                        empirical_tail: chk.empirical_tail,
                        bound: chk.bound,
                        bound_base2: chk.bound_base2,
                        within: chk.within,
                    }
                })
                .collect();
            Some(McDiarmidSummary { m, max_observed_delta: bd.max_delta, bound: bd.bound, tails })
        }
        _ => None,
    };

    let mut verdicts = vec![Verdict { name: "m_star_found".into(), pass: m_star.is_some() }];
    if let Some(b) = &bracket {
        let pass = b.pass_fraction >= success_fraction
            && b.previous_pass_fraction.is_none_or(|f| f < success_fraction);
        verdicts.push(Verdict { name: "m_star_bracketing".into(), pass });
    }
    let monotone = points.windows(2).all(|w| {
        let slack = 2.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].mean_y <= w[0].mean_y + slack
    });
    verdicts.push(Verdict { name: "mean_y_non_increasing".into(), pass: monotone });
    if let Some(mc) = &mcdiarmid {
        verdicts.push(Verdict {
            name: "bounded_difference".into(),
            pass: mc.max_observed_delta <= mc.bound + INEQUALITY_SLACK,
        });
        verdicts.push(Verdict {
            name: "mcdiarmid_tails".into(),
            pass: mc.tails.iter().all(|t| t.within),
        });
    }

    Ok(SweepReport {
        config: cfg.clone(),
        success_fraction,
        points,
        m_star,
        bracket,
        theory: TheoryComparison {
            unit_formula_m,
            fitted_c_p,
            theorem1_m_fitted: fitted_c_p.map(|c| c * unit_formula_m),
        },
        baselines: Baselines {
            hlsw_m: hlsw_baseline(cfg.d, cfg.epsilon),
            dn_m: dn_baseline(cfg.d, cfg.epsilon),
            aubrun_form,
            aubrun_fitted_c: m_star.map(|m| m as f64 / aubrun_form),
        },
        mcdiarmid,
        verdicts,
        notes: sweep_notes(),
    })
}

fn sweep_notes() -> Vec<String> {
    vec![
        "success criterion is per trial (all evaluated states pass) with a configurable success fraction; the 1 - e^-m success probability is not observable at these trial counts".into(),
        "tail bounds use the natural exponential; bound_base2 reads the same exponent in base 2".into(),
        "the threshold-matching exponent 1/(rd) appearing in the cardinality derivation is not checked".into(),
        "the 1 - e^-m success probability differs from the 1 - exp(-d/2) probability of the trace-norm baseline; neither is tested".into(),
    ]
}

/// Least-squares fit of `m_star` against `d` across several sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Through-origin fit of `m_star` against `d / eps^2`.
    pub aubrun_c: f64,
    /// Through-origin fit of `m_star` against `d / eps^2 * log2(10 d^((p-1)/p) / eps)`.
    pub c_p: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}

fn through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>()
}

pub fn fit_scaling(points: &[(usize, usize)], epsilon: f64, p: PExponent) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("need at least two (d, m_star) points".into()));
    }
    let ds: Vec<f64> = points.iter().map(|&(d, _)| d as f64).collect();
    let ms: Vec<f64> = points.iter().map(|&(_, m)| m as f64).collect();
    let (slope, intercept, r_squared) = linear_fit(&ds, &ms);
    let eps2 = epsilon * epsilon;
    let aubrun_x: Vec<f64> = ds.iter().map(|d| d / eps2).collect();
    let theory_x: Vec<f64> = points
        .iter()
        .map(|&(d, _)| d as f64 / eps2 * theorem1_log_argument(d, epsilon, p).log2())
        .collect();
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        aubrun_c: through_origin(&aubrun_x, &ms),
        c_p: through_origin(&theory_x, &ms),
    })
}

/// Exponents exercised by the inequality oracles.
pub const ORACLE_EXPONENTS: [PExponent; 5] = [
    PExponent::Finite(1.0),
    PExponent::Finite(1.5),
    PExponent::Finite(2.0),
    PExponent::Finite(3.0),
    PExponent::Infinity,
];

/// Failures and the worst margin (`lhs - rhs`, negative when slack
/// remains) of one inequality family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleTally {
    pub checked: usize,
    pub failures: usize,
    pub worst_margin: f64,
}

impl OracleTally {
    fn new() -> Self {
        Self { checked: 0, failures: 0, worst_margin: f64::NEG_INFINITY }
    }

    fn record(&mut self, holds: bool, margin: f64) {
        self.checked += 1;
        if !holds {
            self.failures += 1;
        }
        self.worst_margin = self.worst_margin.max(margin);
    }

    fn merge(mut self, other: &OracleTally) -> Self {
        self.checked += other.checked;
        self.failures += other.failures;
        self.worst_margin = self.worst_margin.max(other.worst_margin);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleBatch {
    pub matrices: usize,
    pub dims: Vec<usize>,
    pub exponents: Vec<PExponent>,
    pub interpolation: OracleTally,
    pub hoelder: OracleTally,
    pub reverse_triangle: OracleTally,
}

impl OracleBatch {
    pub fn all_pass(&self) -> bool {
        self.interpolation.failures == 0 && self.hoelder.failures == 0 && self.reverse_triangle.failures == 0
    }
}

/// Random test matrix number `k`: alternately real and complex, cycling
/// through general, Hermitian and low-rank shapes.
pub fn oracle_matrix(d: usize, k: u64, seed: Seed) -> ComplexMatrix {
    let mut source = seed.gaussian();
    let real = k % 2 == 0;
    let draw = |source: &mut crate::haar::GaussianSource<_>| -> ComplexMatrix {
        let data = (0..d * d)
            .map(|_| {
                let z = source.next_complex();
                if real { Complex64::new(z.re, 0.0) } else { z }
            })
            .collect();
        ComplexMatrix::from_raw(d, d, data)
    };
    let a = draw(&mut source);
    match (k / 2) % 3 {
        0 => a,
        1 => a.symmetrized().expect("square"),
        _ => {
            let v: Vec<Complex64> = a.column(0);
            ComplexMatrix::outer(&v)
        }
    }
}

/// Interpolation, Hoelder and reverse-triangle checks on `count` seeded
/// random matrices with dimensions cycling through `dims`, at every
/// exponent in [`ORACLE_EXPONENTS`].
pub fn inequality_oracles(count: usize, dims: &[usize], seed: Seed) -> Result<OracleBatch> {
    if count == 0 || dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidInput("need a positive count and positive dimensions".into()));
    }
    let base = seed.split(TAG_ORACLES);
    let tallies = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let d = dims[k as usize % dims.len()];
            let s = base.split(k);
            let a = oracle_matrix(d, k, s.split(0));
            let b = oracle_matrix(d, k + 1, s.split(1));
            let mut t = [OracleTally::new(), OracleTally::new(), OracleTally::new()];
            for (i, &p) in ORACLE_EXPONENTS.iter().enumerate() {
                let c = check_interpolation(&a, p)?;
                let margin = (c.operator_norm - c.p_norm).max(c.p_norm - c.trace_norm);
                t[0].record(c.holds, margin);
                for &r in &ORACLE_EXPONENTS[i + 1..] {
                    let h = check_hoelder(&a, p, r)?;
                    t[1].record(h.holds, (h.r_norm - h.p_norm).max(h.p_norm - h.upper));
                }
                let rt = check_reverse_triangle(&a, &b, p)?;
                t[2].record(rt.holds, rt.norm_gap - rt.difference_norm);
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let [mut interpolation, mut hoelder, mut reverse_triangle] =
        [OracleTally::new(), OracleTally::new(), OracleTally::new()];
    for t in &tallies {
        interpolation = interpolation.merge(&t[0]);
        hoelder = hoelder.merge(&t[1]);
        reverse_triangle = reverse_triangle.merge(&t[2]);
    }
    Ok(OracleBatch {
        matrices: count,
        dims: dims.to_vec(),
        exponents: ORACLE_EXPONENTS.to_vec(),
        interpolation,
        hoelder,
        reverse_triangle,
    })
}
