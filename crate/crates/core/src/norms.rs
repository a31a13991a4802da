//! Schatten p-norms and checkers for the standard inequalities between them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix};

/// Slack applied by every inequality checker in this module.
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// Eigenvalues of `A^dagger A` below this fraction of the largest one are
/// treated as exact zeros before taking square roots.
const GRAM_CLAMP: f64 = 1e-14;

/// A Schatten exponent: any real `p >= 1`, or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub enum PExponent {
    Finite(f64),
    Infinity,
}

impl PExponent {
    pub const ONE: PExponent = PExponent::Finite(1.0);
    pub const TWO: PExponent = PExponent::Finite(2.0);

    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(format!("p must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(PExponent::Infinity);
        }
        Ok(PExponent::Finite(p))
    }

    /// `1/p`, with `1/inf = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            PExponent::Finite(p) => 1.0 / p,
            PExponent::Infinity => 0.0,
        }
    }

    /// `(p - 1)/p`, continued to 1 at infinity.
    pub fn conjugate_fraction(self) -> f64 {
        1.0 - self.reciprocal()
    }

    pub fn value(self) -> f64 {
        match self {
            PExponent::Finite(p) => p,
            PExponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, PExponent::Infinity)
    }

    /// Default companion exponent `r = p + 1` (stays infinite at infinity).
    pub fn companion(self) -> PExponent {
        match self {
            PExponent::Finite(p) => PExponent::Finite(p + 1.0),
            PExponent::Infinity => PExponent::Infinity,
        }
    }
}

impl PartialOrd for PExponent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PExponent::Finite(p) => write!(f, "{p}"),
            PExponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for PExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "\u{221e}" => Ok(PExponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidExponent(format!("cannot parse {s:?} as p")))?;
                PExponent::finite(p)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for PExponent {
    type Error = Error;

    fn try_from(repr: ExponentRepr) -> Result<Self> {
        match repr {
            ExponentRepr::Number(p) => PExponent::finite(p),
            ExponentRepr::Text(s) => s.parse(),
        }
    }
}

impl From<PExponent> for ExponentRepr {
    fn from(p: PExponent) -> Self {
        match p {
            PExponent::Finite(p) => ExponentRepr::Number(p),
            PExponent::Infinity => ExponentRepr::Text("inf".into()),
        }
    }
}

/// Singular values of a square matrix, descending.
///
/// Hermitian inputs (exactly Hermitian up to a rounding-level tolerance) use
/// the absolute eigenvalues directly, which keeps small singular values
/// accurate; anything else goes through the eigenvalues of `A^dagger A`.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    a.ensure_square()?;
    let scale = a.max_abs();
    let mut values = if a.hermitian_deviation()? <= 1e-14 * scale {
        hermitian_eigen(a)?.eigenvalues.into_iter().map(f64::abs).collect::<Vec<_>>()
    } else {
        singular_values_via_gram(a)?
    };
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// Square roots of the eigenvalues of `A^dagger A`, with tiny negatives and
/// round-off noise clamped to zero.
pub fn singular_values_via_gram(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let eig = hermitian_eigen(&a.gram())?.eigenvalues;
    let top = eig.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut values: Vec<f64> = eig
        .into_iter()
        .map(|x| if x < GRAM_CLAMP * top { 0.0 } else { x.sqrt() })
        .collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// `(sum_i s_i^p)^(1/p)` evaluated without overflow; `max s_i` at infinity.
pub fn norm_from_singular_values(values: &[f64], p: PExponent) -> f64 {
    let top = values.iter().fold(0.0f64, |acc, &s| acc.max(s));
    match p {
        PExponent::Infinity => top,
        _ if top == 0.0 => 0.0,
        PExponent::Finite(q) if q == 1.0 => values.iter().sum(),
        PExponent::Finite(q) => {
            let sum: f64 = values.iter().map(|&s| (s / top).powf(q)).sum();
            top * sum.powf(1.0 / q)
        }
    }
}

/// Schatten p-norm of a square matrix. `p = 2` is evaluated directly as
/// `sqrt(tr A^dagger A)`.
pub fn schatten_norm(a: &ComplexMatrix, p: PExponent) -> Result<f64> {
    a.ensure_square()?;
    if p == PExponent::TWO {
        return Ok(a.frobenius_sq().sqrt());
    }
    Ok(norm_from_singular_values(&singular_values(a)?, p))
}

/// Several Schatten norms from a single decomposition.
pub fn schatten_norms(a: &ComplexMatrix, ps: &[PExponent]) -> Result<Vec<f64>> {
    a.ensure_square()?;
    let values = singular_values(a)?;
    Ok(ps
        .iter()
        .map(|&p| {
            if p == PExponent::TWO {
                a.frobenius_sq().sqrt()
            } else {
                norm_from_singular_values(&values, p)
            }
        })
        .collect())
}

/// `||A||_inf <= ||A||_p <= ||A||_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationCheck {
    pub holds: bool,
    pub operator_norm: f64,
    pub p_norm: f64,
    pub trace_norm: f64,
}

pub fn check_interpolation(a: &ComplexMatrix, p: PExponent) -> Result<InterpolationCheck> {
    let norms = schatten_norms(a, &[PExponent::Infinity, p, PExponent::ONE])?;
    let (operator_norm, p_norm, trace_norm) = (norms[0], norms[1], norms[2]);
    let holds = operator_norm <= p_norm + INEQUALITY_SLACK && p_norm <= trace_norm + INEQUALITY_SLACK;
    Ok(InterpolationCheck { holds, operator_norm, p_norm, trace_norm })
}

/// `||A||_r <= ||A||_p <= d^(1/p - 1/r) ||A||_r` for `r > p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoelderCheck {
    pub holds: bool,
    pub r_norm: f64,
    pub p_norm: f64,
    pub upper: f64,
}

pub fn check_hoelder(a: &ComplexMatrix, p: PExponent, r: PExponent) -> Result<HoelderCheck> {
    if r <= p {
        return Err(Error::InvalidExponent(format!("need r > p, got p = {p}, r = {r}")));
    }
    let d = a.ensure_square()? as f64;
    let norms = schatten_norms(a, &[r, p])?;
    let (r_norm, p_norm) = (norms[0], norms[1]);
    let upper = d.powf(p.reciprocal() - r.reciprocal()) * r_norm;
    let holds = r_norm <= p_norm + INEQUALITY_SLACK && p_norm <= upper + INEQUALITY_SLACK;
    Ok(HoelderCheck { holds, r_norm, p_norm, upper })
}

/// `| ||A||_p - ||B||_p | <= ||A - B||_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReverseTriangleCheck {
    pub holds: bool,
    pub norm_gap: f64,
    pub difference_norm: f64,
}

pub fn check_reverse_triangle(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    p: PExponent,
) -> Result<ReverseTriangleCheck> {
    a.ensure_square()?;
    let diff = a.sub(b)?;
    let norm_gap = (schatten_norm(a, p)? - schatten_norm(b, p)?).abs();
    let difference_norm = schatten_norm(&diff, p)?;
    Ok(ReverseTriangleCheck {
        holds: norm_gap <= difference_norm + INEQUALITY_SLACK,
        norm_gap,
        difference_norm,
    })
}

/// Validates a density matrix: square, Hermitian, unit trace and positive
/// semidefinite, each within `tol`.
pub fn ensure_density(a: &ComplexMatrix, tol: f64) -> Result<()> {
    a.ensure_square()?;
    let herm = a.hermitian_deviation()?;
    if herm > tol {
        return Err(Error::NotDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = a.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::NotDensityMatrix(format!("trace is {tr}, expected 1")));
    }
    let min = hermitian_eigen(&a.symmetrized()?)?.eigenvalues[0];
    if min < -tol {
        return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Evaluation of the bound `||A - I/d||_p^r <= d^((r-p)/p) ||A||_r^r - s`
/// for a density matrix `A`, under two readings of the subtrahend `s`:
/// `d^((r-p)/p) / d^p` (as usually written) and `d^((r-p)/p) * d^(-r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub rhs_alternate: f64,
    pub holds_alternate: bool,
    /// The two readings disagree on this input.
    pub variants_disagree: bool,
}

pub fn lemma1_bound(a: &ComplexMatrix, p: PExponent, r: PExponent) -> Result<DensityBoundCheck> {
    let (pv, rv) = match (p, r) {
        (PExponent::Finite(p), PExponent::Finite(r)) => (p, r),
        _ => return Err(Error::InvalidExponent("p and r must both be finite".into())),
    };
    if rv <= pv {
        return Err(Error::InvalidExponent(format!("need r > p, got p = {pv}, r = {rv}")));
    }
    ensure_density(a, 1e-9)?;
    let d = a.rows() as f64;

    let centered = a.shift_diagonal(1.0 / d)?;
    let lhs = schatten_norm(&centered, p)?.powf(rv);
    let factor = d.powf((rv - pv) / pv);
    let main = factor * schatten_norm(a, r)?.powf(rv);
    let rhs = main - factor / d.powf(pv);
    let rhs_alternate = main - factor * d.powf(-rv);
    let holds = lhs <= rhs + INEQUALITY_SLACK;
    let holds_alternate = lhs <= rhs_alternate + INEQUALITY_SLACK;
    Ok(DensityBoundCheck {
        lhs,
        rhs,
        holds,
        rhs_alternate,
        holds_alternate,
        variants_disagree: holds != holds_alternate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::*;
    use num_complex::Complex64;

    fn p(x: f64) -> PExponent {
        PExponent::finite(x).unwrap()
    }

    fn projector(v: &[Complex64]) -> ComplexMatrix {
        ComplexMatrix::outer(v)
    }

    #[test]
    fn exponent_parsing_and_validation() {
        assert_eq!("inf".parse::<PExponent>().unwrap(), PExponent::Infinity);
        assert_eq!("1.5".parse::<PExponent>().unwrap(), p(1.5));
        assert!("0.5".parse::<PExponent>().is_err());
        assert!(PExponent::finite(f64::NAN).is_err());
        assert_eq!(PExponent::Infinity.conjugate_fraction(), 1.0);
        assert_eq!(PExponent::ONE.conjugate_fraction(), 0.0);
        let json = serde_json::to_string(&[PExponent::Infinity, p(3.0)]).unwrap();
        assert_eq!(json, r#"["inf",3.0]"#);
        let back: Vec<PExponent> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![PExponent::Infinity, p(3.0)]);
    }

    #[test]
    fn identity_norms() {
        for d in [1usize, 2, 5, 16] {
            let id = ComplexMatrix::identity(d);
            for q in [1.0, 1.5, 2.0, 3.0, 7.0] {
                let n = schatten_norm(&id, p(q)).unwrap();
                assert!((n - (d as f64).powf(1.0 / q)).abs() < 1e-12);
            }
            assert_eq!(schatten_norm(&id, PExponent::Infinity).unwrap(), 1.0);
        }
    }

    #[test]
    fn diag_3_4_fixture() {
        let a = ComplexMatrix::from_diag(&[3.0, 4.0]);
        assert_eq!(schatten_norm(&a, PExponent::ONE).unwrap(), 7.0);
        assert_eq!(schatten_norm(&a, PExponent::TWO).unwrap(), 5.0);
        assert_eq!(schatten_norm(&a, PExponent::Infinity).unwrap(), 4.0);
    }

    #[test]
    fn pure_projector_has_unit_norm() {
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        for q in [p(1.0), p(1.5), p(2.0), p(3.0), PExponent::Infinity] {
            assert!((schatten_norm(&projector(&v), q).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(schatten_norm(&ComplexMatrix::zeros(2, 3), PExponent::ONE).is_err());
    }

    #[test]
    fn gram_path_matches_hermitian_path() {
        let h = random_hermitian(6, 9);
        let a = singular_values(&h).unwrap();
        let b = singular_values_via_gram(&h).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-7 * a[0]);
        }
    }

    #[test]
    fn interpolation_examples() {
        let chk = check_interpolation(&ComplexMatrix::from_diag(&[3.0, 4.0]), p(2.0)).unwrap();
        assert!(chk.holds);
        assert_eq!((chk.operator_norm, chk.p_norm, chk.trace_norm), (4.0, 5.0, 7.0));

        let chk = check_interpolation(&ComplexMatrix::zeros(3, 3), p(2.0)).unwrap();
        assert!(chk.holds);
        assert_eq!((chk.operator_norm, chk.p_norm, chk.trace_norm), (0.0, 0.0, 0.0));

        let g = random_matrix(8, 77, false);
        assert!(check_interpolation(&g, p(3.0)).unwrap().holds);
    }

    #[test]
    fn hoelder_examples() {
        let d = 5usize;
        let chk = check_hoelder(&ComplexMatrix::identity(d), p(1.0), p(2.0)).unwrap();
        assert!(chk.holds);
        assert!((chk.upper - d as f64).abs() < 1e-12);
        assert!((chk.p_norm - d as f64).abs() < 1e-12);

        let chk = check_hoelder(&ComplexMatrix::from_diag(&[3.0, 4.0]), p(1.0), p(2.0)).unwrap();
        assert!(chk.holds);
        assert_eq!(chk.r_norm, 5.0);
        assert_eq!(chk.p_norm, 7.0);
        assert!((chk.upper - 5.0 * 2f64.sqrt()).abs() < 1e-12);

        let psi = projector(&[c(0.6, 0.0), c(0.0, 0.8)]);
        let chk = check_hoelder(&psi, p(1.5), PExponent::Infinity).unwrap();
        assert!((chk.r_norm - 1.0).abs() < 1e-12 && (chk.p_norm - 1.0).abs() < 1e-12);

        assert!(check_hoelder(&psi, p(2.0), p(2.0)).is_err());
        assert!(check_hoelder(&psi, p(3.0), p(2.0)).is_err());
    }

    #[test]
    fn reverse_triangle_examples() {
        let a = random_matrix(4, 1, false);
        let chk = check_reverse_triangle(&a, &a, p(1.5)).unwrap();
        assert!(chk.holds && chk.norm_gap == 0.0 && chk.difference_norm == 0.0);

        let e0 = ComplexMatrix::from_diag(&[1.0, 0.0]);
        let e1 = ComplexMatrix::from_diag(&[0.0, 1.0]);
        let chk = check_reverse_triangle(&e0, &e1, PExponent::ONE).unwrap();
        assert!(chk.holds);
        assert_eq!(chk.norm_gap, 0.0);
        assert_eq!(chk.difference_norm, 2.0);

        let b = random_matrix(8, 2, false);
        let a = random_matrix(8, 3, false);
        assert!(check_reverse_triangle(&a, &b, p(1.5)).unwrap().holds);

        assert!(check_reverse_triangle(&a, &ComplexMatrix::zeros(4, 4), p(1.0)).is_err());
    }

    #[test]
    fn density_bound_at_maximally_mixed_state() {
        // lhs = 0, rhs = d^((r-p)/p) (d^(1-r) - d^(-p)); zero when r = p + 1
        // and negative when r > p + 1.
        for d in [2usize, 3, 8] {
            let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
            let df = d as f64;

            let chk = lemma1_bound(&mixed, p(1.0), p(2.0)).unwrap();
            assert!(chk.lhs < 1e-24);
            assert!(chk.rhs.abs() < 1e-12);
            assert!(chk.holds);

            let chk = lemma1_bound(&mixed, p(1.0), p(3.0)).unwrap();
            let expected = df.powf(2.0) * (df * df.powf(-3.0) - df.powf(-1.0));
            assert!((chk.rhs - expected).abs() < 1e-12);
            assert!(chk.rhs < 0.0);
            assert!(!chk.holds);
            assert!(chk.holds_alternate);
            assert!(chk.variants_disagree);
        }
    }

    #[test]
    fn density_bound_pure_state_cases() {
        let psi2 = projector(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let chk = lemma1_bound(&psi2, p(1.0), p(2.0)).unwrap();
        assert!((chk.lhs - 1.0).abs() < 1e-12);
        assert!((chk.rhs - 1.0).abs() < 1e-12);
        assert!(chk.holds);

        let psi4 = projector(&[c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)]);
        let chk = lemma1_bound(&psi4, p(1.0), p(2.0)).unwrap();
        assert!((chk.lhs - 2.25).abs() < 1e-12);
        assert!((chk.rhs - 3.0).abs() < 1e-12);
        assert!(chk.holds);
    }

    #[test]
    fn density_bound_rejects_non_density() {
        let a = ComplexMatrix::from_diag(&[2.0, 0.0]);
        assert!(matches!(
            lemma1_bound(&a, p(1.0), p(2.0)),
            Err(Error::NotDensityMatrix(_))
        ));
        let a = ComplexMatrix::from_diag(&[1.5, -0.5]);
        assert!(lemma1_bound(&a, p(1.0), p(2.0)).is_err());
        let a = ComplexMatrix::from_diag(&[0.5, 0.5]);
        assert!(lemma1_bound(&a, p(1.0), PExponent::Infinity).is_err());
    }

    #[test]
    fn homogeneity() {
        let a = random_matrix(5, 8, false);
        let k = c(-1.5, 2.0);
        for q in [p(1.0), p(1.5), p(2.0), p(3.0), PExponent::Infinity] {
            let lhs = schatten_norm(&a.scale(k), q).unwrap();
            let rhs = k.norm() * schatten_norm(&a, q).unwrap();
            assert!(((lhs - rhs) / rhs).abs() < 1e-9);
        }
    }
}
