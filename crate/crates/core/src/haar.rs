//! Seeded sampling of Haar unitaries and uniformly random pure states.
//!
//! Every draw is a pure function of a [`Seed`]: the generator is ChaCha8
//! keyed by `value` on stream `stream`, so independent trials simply use
//! distinct streams (see [`Seed::split`]). Gaussians come from Box-Muller on
//! that uniform stream.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_unitary, ComplexMatrix};
use crate::norms::{schatten_norm, PExponent};

/// Unitarity tolerance for ensemble members.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Normalization tolerance for pure states.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    pub stream: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Seed {
    pub fn new(value: u64, stream: u64) -> Self {
        Self { value, stream }
    }

    /// Child seed on a stream determined by `(self.stream, tag)`. Distinct
    /// tags give distinct, reproducible sub-streams.
    pub fn split(self, tag: u64) -> Seed {
        Seed {
            value: self.value,
            stream: splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.value);
        rng.set_stream(self.stream);
        rng
    }

    pub fn gaussian(self) -> GaussianSource<ChaCha8Rng> {
        GaussianSource::new(self.rng())
    }
}

/// Standard normal variates from a uniform generator via Box-Muller.
pub struct GaussianSource<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: Rng> GaussianSource<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Standard complex Gaussian: `E|z|^2 = 1`.
    pub fn next_complex(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.next_normal() * s, self.next_normal() * s)
    }

    pub fn uniform_index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Ginibre matrix (i.i.d. standard complex Gaussian entries).
pub fn ginibre<R: Rng>(d: usize, source: &mut GaussianSource<R>) -> ComplexMatrix {
    let data = (0..d * d).map(|_| source.next_complex()).collect();
    ComplexMatrix::from_raw(d, d, data)
}

/// Haar-random unitary from a running Gaussian source.
///
/// The Ginibre draw is QR-factorized with `R` normalized to a positive real
/// diagonal; that normalization (the phase correction of `Q`'s columns) is
/// what makes `Q` Haar distributed. Rank-deficient draws are redrawn.
pub fn haar_unitary_from<R: Rng>(d: usize, source: &mut GaussianSource<R>) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be positive");
    loop {
        match qr_unitary(&ginibre(d, source)) {
            Ok((q, _)) => return q,
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => unreachable!("QR of a square Ginibre matrix failed: {e}"),
        }
    }
}

pub fn sample_haar_unitary(d: usize, seed: Seed) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    Ok(haar_unitary_from(d, &mut seed.gaussian()))
}

/// Unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Rejects vectors whose squared norm is off by more than 1e-12.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidInput("pure state needs at least one amplitude".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!(
                "pure state must have unit norm, got squared norm {norm_sq}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// Computational basis vector `|index>`.
    pub fn basis(d: usize, index: usize) -> Result<Self> {
        if index >= d {
            return Err(Error::InvalidInput(format!("basis index {index} out of range for d = {d}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

pub fn pure_state_from<R: Rng>(d: usize, source: &mut GaussianSource<R>) -> PureState {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| source.next_complex()).collect();
        if let Ok(state) = PureState::normalized(v) {
            return state;
        }
    }
}

pub fn sample_pure_state(d: usize, seed: Seed) -> Result<PureState> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    Ok(pure_state_from(d, &mut seed.gaussian()))
}

/// An ordered list of `m >= 1` unitaries of a common dimension, plus the
/// seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryEnsemble {
    dim: usize,
    members: Vec<ComplexMatrix>,
    seed: Option<Seed>,
}

impl UnitaryEnsemble {
    /// `m` independent Haar unitaries; member `i` is drawn from `seed.split(i)`.
    pub fn haar(d: usize, m: usize, seed: Seed) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidInput(format!(
                "ensemble needs d >= 1 and m >= 1 (got d = {d}, m = {m})"
            )));
        }
        let members = (0..m as u64)
            .map(|i| haar_unitary_from(d, &mut seed.split(i).gaussian()))
            .collect();
        Ok(Self { dim: d, members, seed: Some(seed) })
    }

    /// Wraps explicit unitaries, checking the unitarity invariant.
    pub fn from_members(members: Vec<ComplexMatrix>, seed: Option<Seed>) -> Result<Self> {
        let dim = members
            .first()
            .ok_or_else(|| Error::InvalidInput("ensemble must be non-empty".into()))?
            .rows();
        for (i, u) in members.iter().enumerate() {
            if u.rows() != dim || u.cols() != dim {
                return Err(Error::DimensionMismatch(format!("member {i} is not {dim}x{dim}")));
            }
            let residual = u.unitarity_residual()?;
            if residual > UNITARITY_TOL {
                return Err(Error::InvalidInput(format!(
                    "member {i} is not unitary (residual {residual:e})"
                )));
            }
        }
        Ok(Self { dim, members, seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[ComplexMatrix] {
        &self.members
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    /// Copy with member `index` swapped for `replacement`.
    pub fn with_replaced(&self, index: usize, replacement: ComplexMatrix) -> Result<Self> {
        if index >= self.members.len() {
            return Err(Error::InvalidInput(format!("member index {index} out of range")));
        }
        let mut members = self.members.clone();
        members[index] = replacement;
        Self::from_members(members, self.seed)
    }

    /// Copy with every member left-multiplied by `v`.
    pub fn left_multiplied(&self, v: &ComplexMatrix) -> Result<Self> {
        let members = self.members.iter().map(|u| v.matmul(u)).collect::<Result<Vec<_>>>()?;
        Self::from_members(members, self.seed)
    }

    /// Largest unitarity residual over the members.
    pub fn max_unitarity_residual(&self) -> f64 {
        self.members
            .iter()
            .map(|u| u.unitarity_residual().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// Monte Carlo check that Haar averaging maps `psi` to `I/d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotropyCheck {
    /// `||(1/n) sum U psi U^dagger - I/d||_2`
    pub deviation: f64,
    /// `4 / sqrt(n)`
    pub tolerance: f64,
    pub pass: bool,
}

/// The estimator's expected squared deviation is `(1 - 1/d)/n`, so its
/// standard error is at most `1/sqrt(n)`; the check allows four of those.
pub fn check_isotropy(d: usize, n_samples: usize, psi: &PureState, seed: Seed) -> Result<IsotropyCheck> {
    if n_samples < 100 {
        return Err(Error::InvalidInput(format!("isotropy check needs >= 100 samples, got {n_samples}")));
    }
    if psi.dim() != d {
        return Err(Error::DimensionMismatch(format!("state has dim {}, expected {d}", psi.dim())));
    }
    let mut source = seed.gaussian();
    let mut acc = ComplexMatrix::zeros(d, d);
    for _ in 0..n_samples {
        let u = haar_unitary_from(d, &mut source);
        let v = u.apply(psi.amplitudes())?;
        acc = acc.add(&ComplexMatrix::outer(&v))?;
    }
    let avg = acc.scale_real(1.0 / n_samples as f64);
    let deviation = schatten_norm(&avg.shift_diagonal(1.0 / d as f64)?, PExponent::TWO)?;
    let tolerance = 4.0 / (n_samples as f64).sqrt();
    Ok(IsotropyCheck { deviation, tolerance, pass: deviation <= tolerance })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut best) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}
