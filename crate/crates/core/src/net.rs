//! Finite nets of pure states in trace distance, built by greedy random
//! packing and checked for covering by random probes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{pure_state_from, sample_pure_state, PureState, Seed};
use crate::norms::{schatten_norm, PExponent};

/// Largest dimension for which nets are built.
pub const MAX_NET_DIM: usize = 3;

/// Trace distance `|| a a^dagger - b b^dagger ||_1 = 2 sqrt(1 - |<a|b>|^2)`.
///
/// `1 - |<a|b>|^2` is evaluated through the Lagrange identity
/// `sum_{i<j} |a_i b_j - a_j b_i|^2`, which stays accurate when the states
/// nearly coincide.
pub fn trace_distance_pure(a: &PureState, b: &PureState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states have dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let (x, y) = (a.amplitudes(), b.amplitudes());
    let mut gap = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            gap += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
        }
    }
    Ok(2.0 * gap.min(1.0).sqrt())
}

/// The same distance from the spectrum of the projector difference.
pub fn trace_distance_projectors(a: &PureState, b: &PureState) -> Result<f64> {
    schatten_norm(&a.projector().sub(&b.projector())?, PExponent::ONE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    dim: usize,
    eta: f64,
    points: Vec<PureState>,
    construction_seed: Seed,
    /// `(5/eta)^(2d)`
    size_bound: f64,
}

impl Net {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn points(&self) -> &[PureState] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn construction_seed(&self) -> Seed {
        self.construction_seed
    }

    pub fn size_bound(&self) -> f64 {
        self.size_bound
    }

    /// Nearest net point to `probe` and its distance.
    pub fn nearest(&self, probe: &PureState) -> Result<(usize, f64)> {
        let mut best = (0, f64::INFINITY);
        for (k, point) in self.points.iter().enumerate() {
            let dist = trace_distance_pure(probe, point)?;
            if dist < best.1 {
                best = (k, dist);
            }
        }
        Ok(best)
    }

    /// Net consisting of the given points, for tests and fixtures.
    pub fn from_points(eta: f64, points: Vec<PureState>, construction_seed: Seed) -> Result<Self> {
        let dim = points
            .first()
            .ok_or_else(|| Error::InvalidInput("net needs at least one point".into()))?
            .dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch("net points differ in dimension".into()));
        }
        Ok(Self {
            dim,
            eta,
            points,
            construction_seed,
            size_bound: (5.0 / eta).powf(2.0 * dim as f64),
        })
    }
}

/// `(5/eta)^(2d)`.
pub fn net_size_bound(d: usize, eta: f64) -> f64 {
    (5.0 / eta).powf(2.0 * d as f64)
}

/// Greedy packing at radius `eta/2`: random candidates are admitted when
/// they are farther than `eta/2` from every admitted point, and the search
/// stops after `budget` consecutive rejections. A maximal `eta/2`-packing
/// covers at radius `eta/2 <= eta`; [`verify_covering`] measures how close
/// to maximal the result is.
pub fn build_net(d: usize, eta: f64, budget: usize, seed: Seed) -> Result<Net> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if d > MAX_NET_DIM {
        return Err(Error::NetDimensionGuard { d });
    }
    if !(eta > 0.0 && eta <= 2.0) {
        return Err(Error::InvalidInput(format!("eta must lie in (0, 2], got {eta}")));
    }
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be positive".into()));
    }
    let separation = eta / 2.0;
    let mut source = seed.gaussian();
    let mut points: Vec<PureState> = Vec::new();
    let mut rejections = 0usize;
    let mut draws = 0usize;
    while rejections < budget {
        let candidate = pure_state_from(d, &mut source);
        draws += 1;
        let mut admit = true;
        for p in &points {
            if trace_distance_pure(&candidate, p)? <= separation {
                admit = false;
                break;
            }
        }
        if admit {
            points.push(candidate);
            rejections = 0;
        } else {
            rejections += 1;
        }
        if points.is_empty() && draws >= budget {
            return Err(Error::NetBudgetExhausted);
        }
    }
    Net::from_points(eta, points, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringCheck {
    pub max_min_distance: f64,
    pub pass: bool,
}

/// Largest distance from a random probe to its nearest net point.
pub fn verify_covering(net: &Net, probes: usize, seed: Seed) -> Result<CoveringCheck> {
    if probes < 100 {
        return Err(Error::InvalidInput(format!("need >= 100 probes, got {probes}")));
    }
    let distances = (0..probes as u64)
        .into_par_iter()
        .map(|k| {
            let probe = sample_pure_state(net.dim(), seed.split(k))?;
            Ok(net.nearest(&probe)?.1)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_min_distance = distances.into_iter().fold(0.0, f64::max);
    Ok(CoveringCheck { max_min_distance, pass: max_min_distance <= net.eta() })
}
