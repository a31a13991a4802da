//! Mixed-unitary channels `R(rho) = (1/m) sum_i U_i rho U_i^dagger`, their
//! distance to the maximally mixed state, and certification against the
//! p-norm randomization threshold `eps / d^((p-1)/p)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::haar::{sample_pure_state, PureState, Seed, UnitaryEnsemble};
use crate::linalg::ComplexMatrix;
use crate::net::Net;
use crate::norms::{ensure_density, schatten_norm, PExponent, INEQUALITY_SLACK};

/// Tolerance for validating density-matrix inputs.
pub const DENSITY_TOL: f64 = 1e-9;

/// Randomization threshold `eps / d^((p-1)/p)`: `eps` for the trace norm,
/// `eps/sqrt(d)` for `p = 2` and `eps/d` for the operator norm.
pub fn randomization_threshold(epsilon: f64, d: usize, p: PExponent) -> f64 {
    epsilon / (d as f64).powf(p.conjugate_fraction())
}

/// The four Pauli matrices `{I, X, Y, Z}`.
pub fn pauli_matrices() -> [ComplexMatrix; 4] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let m = |rows: [[Complex64; 2]; 2]| {
        ComplexMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).expect("2x2")
    };
    [
        m([[l, o], [o, l]]),
        m([[o, l], [l, o]]),
        m([[o, -i], [i, o]]),
        m([[l, o], [o, -l]]),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizingChannel {
    ensemble: UnitaryEnsemble,
}

impl RandomizingChannel {
    pub fn new(ensemble: UnitaryEnsemble) -> Self {
        Self { ensemble }
    }

    /// Channel over `m` independent Haar unitaries.
    pub fn haar(d: usize, m: usize, seed: Seed) -> Result<Self> {
        Ok(Self::new(UnitaryEnsemble::haar(d, m, seed)?))
    }

    /// Qubit Pauli twirl `{I, X, Y, Z}`, which maps every state to `I/2`.
    pub fn pauli() -> Self {
        Self::pauli_cycle(4)
    }

    /// The first `m` entries of the cyclic sequence `I, X, Y, Z, I, X, ...`.
    /// Completely randomizing exactly when `m` is a multiple of 4.
    pub fn pauli_cycle(m: usize) -> Self {
        let paulis = pauli_matrices();
        let members = (0..m.max(1)).map(|k| paulis[k % 4].clone()).collect();
        Self::new(UnitaryEnsemble::from_members(members, None).expect("Paulis are unitary"))
    }

    pub fn ensemble(&self) -> &UnitaryEnsemble {
        &self.ensemble
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    pub fn cardinality(&self) -> usize {
        self.ensemble.len()
    }

    /// `(1/m) sum_i U_i rho U_i^dagger` for a density matrix `rho`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.dim();
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "channel acts on {d}x{d}, got {}x{}",
                rho.rows(),
                rho.cols()
            )));
        }
        ensure_density(rho, DENSITY_TOL)?;
        Ok(self.apply_unchecked(rho))
    }

    pub(crate) fn apply_unchecked(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for u in self.ensemble.members() {
            let term = u.matmul(rho).and_then(|x| x.matmul(&u.adjoint())).expect("square");
            acc = acc.add(&term).expect("same shape");
        }
        acc.scale_real(1.0 / self.cardinality() as f64).symmetrized().expect("square")
    }

    /// Output on a pure input, accumulated as `(1/m) sum_i (U_i psi)(U_i psi)^dagger`.
    pub fn apply_pure(&self, psi: &PureState) -> Result<ComplexMatrix> {
        let d = self.dim();
        if psi.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "channel acts on dimension {d}, state has dimension {}",
                psi.dim()
            )));
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
        for u in self.ensemble.members() {
            let v = u.apply(psi.amplitudes())?;
            for i in 0..d {
                for j in 0..d {
                    acc[i * d + j] += v[i] * v[j].conj();
                }
            }
        }
        let scale = 1.0 / self.cardinality() as f64;
        Ok(ComplexMatrix::from_raw(d, d, acc.into_iter().map(|z| z * scale).collect()))
    }

    /// `||R(psi) - I/d||_p`.
    pub fn distance_to_mixed(&self, psi: &PureState, p: PExponent) -> Result<f64> {
        let out = self.apply_pure(psi)?;
        schatten_norm(&out.shift_diagonal(1.0 / self.dim() as f64)?, p)
    }

    /// Deviation record for `psi` against the full threshold at `epsilon`.
    pub fn deviation(
        &self,
        psi: &PureState,
        p: PExponent,
        epsilon: f64,
        state_seed: Option<Seed>,
    ) -> Result<DeviationRecord> {
        let threshold = randomization_threshold(epsilon, self.dim(), p);
        self.deviation_against(psi, p, threshold, state_seed)
    }

    fn deviation_against(
        &self,
        psi: &PureState,
        p: PExponent,
        threshold: f64,
        state_seed: Option<Seed>,
    ) -> Result<DeviationRecord> {
        let y_value = self.distance_to_mixed(psi, p)?;
        Ok(DeviationRecord { p, y_value, threshold, meets: y_value <= threshold, state_seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRecord {
    pub p: PExponent,
    /// `||R(psi) - I/d||_p`
    pub y_value: f64,
    pub threshold: f64,
    pub meets: bool,
    pub state_seed: Option<Seed>,
}

/// What a certification run established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    /// Every point of an adequately fine net passed at half threshold.
    Certificate,
    /// Sampled states only; not a proof for all inputs.
    StatisticalEvidence,
}

pub enum EvaluationPlan<'a> {
    Net(&'a Net),
    Samples { count: usize, seed: Seed },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub kind: EvidenceKind,
    pub certified: bool,
    pub worst: DeviationRecord,
    /// Threshold applied at each evaluated state.
    pub applied_threshold: f64,
    pub evaluated: usize,
    pub failures: usize,
}

/// Net radius sufficient for a certificate: `eps / (2 d^((p-1)/p))`.
pub fn required_net_radius(epsilon: f64, d: usize, p: PExponent) -> f64 {
    randomization_threshold(epsilon, d, p) / 2.0
}

/// Checks the randomization condition on a net (half threshold at every
/// net point, which covers all pure states) or on sampled states (full
/// threshold, reported as statistical evidence only).
pub fn certify_epsilon_randomizing(
    ch: &RandomizingChannel,
    p: PExponent,
    epsilon: f64,
    plan: EvaluationPlan<'_>,
) -> Result<Certification> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = ch.dim();
    let (kind, threshold, records) = match plan {
        EvaluationPlan::Net(net) => {
            if net.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "net has dimension {}, channel {d}",
                    net.dim()
                )));
            }
            let required = required_net_radius(epsilon, d, p);
            if net.eta() > required {
                return Err(Error::NetTooCoarse { given: net.eta(), required });
            }
            let records = net
                .points()
                .par_iter()
                .map(|psi| ch.deviation_against(psi, p, required, None))
                .collect::<Result<Vec<_>>>()?;
            (EvidenceKind::Certificate, required, records)
        }
        EvaluationPlan::Samples { count, seed } => {
            if count == 0 {
                return Err(Error::InvalidInput("sample plan needs at least one state".into()));
            }
            let threshold = randomization_threshold(epsilon, d, p);
            let records = (0..count as u64)
                .into_par_iter()
                .map(|k| {
                    let s = seed.split(k);
                    let psi = sample_pure_state(d, s)?;
                    ch.deviation_against(&psi, p, threshold, Some(s))
                })
                .collect::<Result<Vec<_>>>()?;
            (EvidenceKind::StatisticalEvidence, threshold, records)
        }
    };
    let worst = *records
        .iter()
        .reduce(|a, b| if b.y_value > a.y_value { b } else { a })
        .ok_or_else(|| Error::InvalidInput("nothing to evaluate".into()))?;
    let failures = records.iter().filter(|r| !r.meets).count();
    Ok(Certification {
        kind,
        certified: failures == 0,
        worst,
        applied_threshold: threshold,
        evaluated: records.len(),
        failures,
    })
}

/// Largest sampled `||R(psi)||_p` against `((1 + eps)/d)^(1 - 1/p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputNormCheck {
    pub max_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn hayden_winter_bound(
    ch: &RandomizingChannel,
    p: PExponent,
    epsilon: f64,
    samples: usize,
    seed: Seed,
) -> Result<OutputNormCheck> {
    if p == PExponent::ONE {
        return Err(Error::InvalidExponent("output-norm bound requires p > 1".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let d = ch.dim();
    let norms = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let psi = sample_pure_state(d, seed.split(k))?;
            schatten_norm(&ch.apply_pure(&psi)?, p)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_norm = norms.into_iter().fold(0.0, f64::max);
    let bound = ((1.0 + epsilon) / d as f64).powf(p.conjugate_fraction());
    Ok(OutputNormCheck { max_norm, bound, holds: max_norm <= bound + INEQUALITY_SLACK })
}
