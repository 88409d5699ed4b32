//! Mermin/MABK operators, correlation-tensor reshaping, singular spectra,
//! and the analytic expectation-value bound.
//!
//! The pipeline is `correlation_data -> reshape_tensor -> singular_spectrum`;
//! the bound on the maximal operator expectation is `2*sqrt(2)` times the
//! largest singular value of the reshaped pure-correlation block. The same
//! expectation value can be computed two independent ways — as a matrix
//! trace against the explicit operator, or as a contraction of the
//! correlation tensor with the measurement vectors — and the two paths are
//! held to agree within 1e-10 throughout the test suite.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizer::{self, OptResult};
use crate::qstate::{correlation_data, ComplexMatrix, CorrelationData, DensityMatrix, QStateError};

pub mod decompose;

pub use decompose::{
    decompose_product_form, decompose_top_vectors, ProductFormDecomposition, TightnessCertificate,
};

/// Default absolute tolerance for tightness certification.
pub const CERTIFICATION_TOL_DEFAULT: f64 = 1e-6;
/// Relative tolerance for counting degenerate top singular values.
pub const DEGENERACY_REL_TOL: f64 = 1e-9;
/// Guard band on the classical-violation verdict, so float noise at an
/// exactly-threshold bound cannot flip the boolean.
pub const CLASSICAL_VIOLATION_MARGIN: f64 = 1e-9;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("vector ({x}, {y}, {z}) is not unit length: |v|^2 - 1 = {residual:.3e}")]
    NotUnitLength {
        x: f64,
        y: f64,
        z: f64,
        residual: f64,
    },

    #[error("cannot normalize a near-zero vector (norm {norm:.3e})")]
    ZeroVector { norm: f64 },

    #[error("operator expects {expected} parties, settings provide {got}")]
    WrongPartyCount { expected: usize, got: usize },

    #[error("party count {0} outside supported range {1}..={2}")]
    PartyCountOutOfRange(usize, usize, usize),

    #[error("operator dimension {op_dim} does not match state dimension {state_dim}")]
    DimensionMismatch { op_dim: usize, state_dim: usize },

    #[error("expectation value has imaginary residue {residual:.3e}")]
    NonRealExpectation { residual: f64 },

    #[error("contracted expectation is only defined for n in {{3, 4}}, got {0}")]
    UnsupportedContraction(usize),

    #[error("reshape split {split} must satisfy 1 <= split <= n-1 = {max}")]
    BadSplit { split: usize, max: usize },

    #[error("top-vector decomposition requires degeneracy >= 2, spectrum has {0}")]
    DegeneracyTooLow(usize),

    #[error("top-vector decomposition is implemented for n = 3, got {0}")]
    DecompositionRequiresThreeParties(usize),

    #[error(
        "oracle value {oracle:.12} exceeds analytic bound {bound:.12} by more than {tol:.1e}; \
         one of the two evaluation paths is broken"
    )]
    OracleExceedsBound { oracle: f64, bound: f64, tol: f64 },

    #[error(transparent)]
    State(#[from] QStateError),
}

// ---------------------------------------------------------------------------
// Measurement settings
// ---------------------------------------------------------------------------

/// Unit vector in R^3, validated to 1e-12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector3 {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector3 {
    pub const X: UnitVector3 = UnitVector3 {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const Y: UnitVector3 = UnitVector3 {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const Z: UnitVector3 = UnitVector3 {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, BoundsError> {
        let residual = (x * x + y * y + z * z - 1.0).abs();
        if residual > 1e-12 {
            return Err(BoundsError::NotUnitLength { x, y, z, residual });
        }
        Ok(Self { x, y, z })
    }

    /// Normalize an arbitrary non-zero vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self, BoundsError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm < 1e-12 {
            return Err(BoundsError::ZeroVector { norm });
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self, BoundsError> {
        Self::new(v[0], v[1], v[2])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

impl std::ops::Neg for UnitVector3 {
    type Output = UnitVector3;
    fn neg(self) -> UnitVector3 {
        UnitVector3 {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

impl Serialize for UnitVector3 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UnitVector3 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = <[f64; 3]>::deserialize(deserializer)?;
        UnitVector3::from_array(v).map_err(serde::de::Error::custom)
    }
}

/// One party's measurement pair (unprimed, primed).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeasurementPair {
    pub v: UnitVector3,
    pub v_prime: UnitVector3,
}

/// Per-party measurement directions defining a Bell-operator instance:
/// exactly one (unprimed, primed) pair per party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementSettings {
    pairs: Vec<MeasurementPair>,
}

impl MeasurementSettings {
    pub fn new(pairs: Vec<MeasurementPair>) -> Result<Self, BoundsError> {
        if pairs.is_empty() || pairs.len() > crate::qstate::MAX_QUBITS {
            return Err(BoundsError::PartyCountOutOfRange(
                pairs.len(),
                1,
                crate::qstate::MAX_QUBITS,
            ));
        }
        Ok(Self { pairs })
    }

    pub fn from_vectors(pairs: Vec<(UnitVector3, UnitVector3)>) -> Result<Self, BoundsError> {
        Self::new(
            pairs
                .into_iter()
                .map(|(v, v_prime)| MeasurementPair { v, v_prime })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[MeasurementPair] {
        &self.pairs
    }

    pub fn pair(&self, party: usize) -> &MeasurementPair {
        &self.pairs[party]
    }
}

/// 2x2 operator v . sigma for an arbitrary (not necessarily unit) vector.
fn dot_sigma(v: [f64; 3]) -> ComplexMatrix {
    use num_complex::Complex64;
    let mut m = ComplexMatrix::zeros(2);
    m.set(0, 0, Complex64::new(v[2], 0.0));
    m.set(0, 1, Complex64::new(v[0], -v[1]));
    m.set(1, 0, Complex64::new(v[0], v[1]));
    m.set(1, 1, Complex64::new(-v[2], 0.0));
    m
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Three-party Mermin operator
/// `a.s x b.s x c'.s + a.s x b'.s x c.s + a'.s x b.s x c.s - a'.s x b'.s x c'.s`.
pub fn mermin_operator(settings: &MeasurementSettings) -> Result<ComplexMatrix, BoundsError> {
    if settings.n() != 3 {
        return Err(BoundsError::WrongPartyCount {
            expected: 3,
            got: settings.n(),
        });
    }
    let a = settings.pair(0).v.as_array();
    let ap = settings.pair(0).v_prime.as_array();
    let b = settings.pair(1).v.as_array();
    let bp = settings.pair(1).v_prime.as_array();
    let c = settings.pair(2).v.as_array();
    let cp = settings.pair(2).v_prime.as_array();

    let term = |x: [f64; 3], y: [f64; 3], z: [f64; 3]| {
        dot_sigma(x).kron(&dot_sigma(y)).kron(&dot_sigma(z))
    };
    Ok(term(a, b, cp)
        .add(&term(a, bp, c))
        .add(&term(ap, b, c))
        .sub(&term(ap, bp, cp)))
}

/// n-party MABK operator, built by the recursion
/// `B_n = B_{n-1} x (a_n + a_n').s/2 + B_{n-1}' x (a_n - a_n').s/2`
/// from the CHSH base `B_2 = a.s x (b + b').s + a'.s x (b - b').s`,
/// where the primed operator swaps every primed/unprimed vector.
pub fn mabk_operator(settings: &MeasurementSettings) -> Result<ComplexMatrix, BoundsError> {
    let n = settings.n();
    if !(2..=crate::qstate::MAX_QUBITS).contains(&n) {
        return Err(BoundsError::PartyCountOutOfRange(
            n,
            2,
            crate::qstate::MAX_QUBITS,
        ));
    }
    Ok(mabk_pair(settings, n).0)
}

/// (B_n, B_n') for the first `n` parties of the settings.
fn mabk_pair(settings: &MeasurementSettings, n: usize) -> (ComplexMatrix, ComplexMatrix) {
    let avg = |u: [f64; 3], w: [f64; 3]| {
        [
            (u[0] + w[0]) / 2.0,
            (u[1] + w[1]) / 2.0,
            (u[2] + w[2]) / 2.0,
        ]
    };
    let half_diff = |u: [f64; 3], w: [f64; 3]| {
        [
            (u[0] - w[0]) / 2.0,
            (u[1] - w[1]) / 2.0,
            (u[2] - w[2]) / 2.0,
        ]
    };

    if n == 2 {
        let a = settings.pair(0).v.as_array();
        let ap = settings.pair(0).v_prime.as_array();
        let b = settings.pair(1).v.as_array();
        let bp = settings.pair(1).v_prime.as_array();
        let sum = [b[0] + bp[0], b[1] + bp[1], b[2] + bp[2]];
        let diff = [b[0] - bp[0], b[1] - bp[1], b[2] - bp[2]];
        let base = dot_sigma(a)
            .kron(&dot_sigma(sum))
            .add(&dot_sigma(ap).kron(&dot_sigma(diff)));
        let swapped = dot_sigma(ap)
            .kron(&dot_sigma(sum))
            .add(&dot_sigma(a).kron(&dot_sigma(diff).scaled_re(-1.0)));
        return (base, swapped);
    }

    let (prev, prev_swapped) = mabk_pair(settings, n - 1);
    let v = settings.pair(n - 1).v.as_array();
    let vp = settings.pair(n - 1).v_prime.as_array();
    let p = dot_sigma(avg(v, vp));
    let m = dot_sigma(half_diff(v, vp));
    let current = prev.kron(&p).add(&prev_swapped.kron(&m));
    let current_swapped = prev_swapped.kron(&p).sub(&prev.kron(&m));
    (current, current_swapped)
}

/// `Tr[op rho]`, checked real.
pub fn expectation(op: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64, BoundsError> {
    if op.dim() != rho.dim() {
        return Err(BoundsError::DimensionMismatch {
            op_dim: op.dim(),
            state_dim: rho.dim(),
        });
    }
    let d = op.dim();
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for r in 0..d {
        for k in 0..d {
            acc += op.get(r, k) * rho.matrix().get(k, r);
        }
    }
    if acc.im.abs() > 1e-10 {
        return Err(BoundsError::NonRealExpectation { residual: acc.im });
    }
    Ok(acc.re)
}

fn kron3(a: [f64; 3], b: [f64; 3]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[i * 3 + j] = a[i] * b[j];
        }
    }
    out
}

fn add9(a: [f64; 9], b: [f64; 9], sign: f64) -> [f64; 9] {
    let mut out = [0.0; 9];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = a[i] + sign * b[i];
    }
    out
}

/// Expectation of the Mermin (n = 3) or MABK (n = 4) operator evaluated by
/// contracting the reshaped correlation matrix with the measurement vectors
/// instead of taking a matrix trace. This is the independent second route
/// used to cross-check [`expectation`].
pub fn contracted_expectation(
    corr: &CorrelationData,
    settings: &MeasurementSettings,
) -> Result<f64, BoundsError> {
    if corr.n() != settings.n() {
        return Err(BoundsError::WrongPartyCount {
            expected: corr.n(),
            got: settings.n(),
        });
    }
    match corr.n() {
        3 => {
            let t = reshape_tensor(corr)?;
            let a = settings.pair(0).v.as_array();
            let ap = settings.pair(0).v_prime.as_array();
            let b = settings.pair(1).v.as_array();
            let bp = settings.pair(1).v_prime.as_array();
            let c = settings.pair(2).v.as_array();
            let cp = settings.pair(2).v_prime.as_array();
            // a^T T (b x c' + b' x c) + a'^T T (b x c - b' x c')
            let plus = add9(kron3(b, cp), kron3(bp, c), 1.0);
            let minus = add9(kron3(b, c), kron3(bp, cp), -1.0);
            Ok(row_contract(&t, &a, &plus) + row_contract(&t, &ap, &minus))
        }
        4 => {
            let t = reshape_tensor(corr)?;
            let a = settings.pair(0).v.as_array();
            let ap = settings.pair(0).v_prime.as_array();
            let b = settings.pair(1).v.as_array();
            let bp = settings.pair(1).v_prime.as_array();
            let c = settings.pair(2).v.as_array();
            let cp = settings.pair(2).v_prime.as_array();
            let d = settings.pair(3).v.as_array();
            let dp = settings.pair(3).v_prime.as_array();
            let dsum = [
                (d[0] + dp[0]) / 2.0,
                (d[1] + dp[1]) / 2.0,
                (d[2] + dp[2]) / 2.0,
            ];
            let ddiff = [
                (d[0] - dp[0]) / 2.0,
                (d[1] - dp[1]) / 2.0,
                (d[2] - dp[2]) / 2.0,
            ];
            // (a x b - a' x b')^T T (c' x (d+d')/2 - c x (d-d')/2)
            //   + (a x b' + a' x b)^T T (c x (d+d')/2 + c' x (d-d')/2)
            let left1 = add9(kron3(a, b), kron3(ap, bp), -1.0);
            let right1 = add9(kron3(cp, dsum), kron3(c, ddiff), -1.0);
            let left2 = add9(kron3(a, bp), kron3(ap, b), 1.0);
            let right2 = add9(kron3(c, dsum), kron3(cp, ddiff), 1.0);
            Ok(row_contract(&t, &left1, &right1) + row_contract(&t, &left2, &right2))
        }
        n => Err(BoundsError::UnsupportedContraction(n)),
    }
}

/// x^T M y for a reshaped correlation matrix.
fn row_contract(t: &ReshapedCorrelation, x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), t.rows);
    debug_assert_eq!(y.len(), t.cols);
    let mut acc = 0.0;
    for (r, &xr) in x.iter().enumerate() {
        if xr == 0.0 {
            continue;
        }
        let row = &t.entries[r * t.cols..(r + 1) * t.cols];
        let mut dot = 0.0;
        for (c, &yc) in y.iter().enumerate() {
            dot += row[c] * yc;
        }
        acc += xr * dot;
    }
    acc
}

// ---------------------------------------------------------------------------
// Reshaping and singular spectra
// ---------------------------------------------------------------------------

/// The pure-correlation block of a tensor (all Pauli indices in 1..=3)
/// reshaped into a `3^split x 3^(n-split)` matrix: rows are indexed by the
/// first `split` parties (big-endian), columns by the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct ReshapedCorrelation {
    rows: usize,
    cols: usize,
    split: usize,
    n: usize,
    entries: Vec<f64>,
}

impl ReshapedCorrelation {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }
}

/// Reshape with the default bipartition: rows take the first floor(n/2)
/// parties, matching the proven three- and four-party contractions. For
/// n >= 5 this split is a heuristic; see [`reshape_tensor_with_split`].
pub fn reshape_tensor(corr: &CorrelationData) -> Result<ReshapedCorrelation, BoundsError> {
    reshape_tensor_with_split(corr, (corr.n() / 2).max(1))
}

/// Reshape with an explicit row split `1 <= split <= n-1`.
pub fn reshape_tensor_with_split(
    corr: &CorrelationData,
    split: usize,
) -> Result<ReshapedCorrelation, BoundsError> {
    let n = corr.n();
    if n < 2 {
        return Err(BoundsError::PartyCountOutOfRange(
            n,
            2,
            crate::qstate::MAX_QUBITS,
        ));
    }
    if split == 0 || split >= n {
        return Err(BoundsError::BadSplit { split, max: n - 1 });
    }
    let rows = 3usize.pow(split as u32);
    let cols = 3usize.pow((n - split) as u32);
    let mut entries = vec![0.0; rows * cols];
    // Walk pure-correlation multi-indices in lexicographic order; that order
    // is exactly row-major order of the reshaped matrix.
    let mut components = vec![1u8; n];
    for slot in entries.iter_mut() {
        let flat = components
            .iter()
            .fold(0usize, |acc, &c| acc * 4 + c as usize);
        *slot = corr.get_flat(flat);
        // Increment the base-3 counter over components 1..=3.
        for i in (0..n).rev() {
            if components[i] < 3 {
                components[i] += 1;
                break;
            }
            components[i] = 1;
        }
    }
    Ok(ReshapedCorrelation {
        rows,
        cols,
        split,
        n,
        entries,
    })
}

/// Full singular value decomposition of a reshaped correlation matrix, with
/// the degeneracy of the top value counted at relative tolerance 1e-9.
#[derive(Clone, Debug)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    left_vectors: Vec<Vec<f64>>,
    right_vectors: Vec<Vec<f64>>,
    degeneracy_of_max: usize,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn left_vectors(&self) -> &[Vec<f64>] {
        &self.left_vectors
    }

    pub fn right_vectors(&self) -> &[Vec<f64>] {
        &self.right_vectors
    }

    pub fn degeneracy_of_max(&self) -> usize {
        self.degeneracy_of_max
    }
}

/// One-sided Jacobi SVD of the reshaped matrix.
pub fn singular_spectrum(m: &ReshapedCorrelation) -> SingularSpectrum {
    let svd = crate::linalg::svd(m.rows, m.cols, &m.entries);
    let lambda_max = svd.values[0];
    let tol = DEGENERACY_REL_TOL * lambda_max.max(1e-30);
    let degeneracy_of_max = svd
        .values
        .iter()
        .take_while(|&&v| (lambda_max - v) <= tol)
        .count();
    SingularSpectrum {
        values: svd.values,
        left_vectors: svd.left,
        right_vectors: svd.right,
        degeneracy_of_max,
    }
}

// ---------------------------------------------------------------------------
// Bound reports and certification
// ---------------------------------------------------------------------------

/// Tightness status of the analytic bound for a particular state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tightness {
    CertifiedTight,
    CertifiedNotTight,
    Undetermined,
}

/// Result of the analytic bound pipeline for one state.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub lambda_max: f64,
    /// Always exactly `2*sqrt(2) * lambda_max`.
    pub bound: f64,
    pub degeneracy: usize,
    pub singular_values: Vec<f64>,
    pub tightness: Tightness,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_value: Option<f64>,
    /// Deterministic-strategy maximum of the same operator.
    pub classical_bound: f64,
    pub violates_classical: bool,
    #[serde(skip)]
    pub oracle_settings: Option<MeasurementSettings>,
}

/// Analytic upper bound on `max |<B_n>|` for a state, with the default
/// reshape split.
pub fn analytic_bound(rho: &DensityMatrix) -> Result<BoundReport, BoundsError> {
    analytic_bound_with_split(rho, None)
}

/// Analytic bound with an explicit reshape split (`None` = floor(n/2)).
pub fn analytic_bound_with_split(
    rho: &DensityMatrix,
    split: Option<usize>,
) -> Result<BoundReport, BoundsError> {
    let n = rho.n();
    if !(2..=crate::qstate::MAX_QUBITS).contains(&n) {
        return Err(BoundsError::PartyCountOutOfRange(
            n,
            2,
            crate::qstate::MAX_QUBITS,
        ));
    }
    let corr = correlation_data(rho)?;
    let reshaped = match split {
        Some(k) => reshape_tensor_with_split(&corr, k)?,
        None => reshape_tensor(&corr)?,
    };
    let spectrum = singular_spectrum(&reshaped);
    let lambda_max = spectrum.lambda_max();
    let bound = 2.0 * SQRT2 * lambda_max;
    let classical_bound = optimizer::lhv_bound_recursive(n);
    Ok(BoundReport {
        lambda_max,
        bound,
        degeneracy: spectrum.degeneracy_of_max(),
        singular_values: spectrum.values().to_vec(),
        tightness: Tightness::Undetermined,
        oracle_value: None,
        classical_bound,
        violates_classical: bound > classical_bound + CLASSICAL_VIOLATION_MARGIN,
        oracle_settings: None,
    })
}

/// Merge an oracle run into a bound report and decide tightness.
///
/// The oracle value may never exceed the bound: that would mean one of the
/// two evaluation paths is wrong, and it is reported as a hard error rather
/// than a certification outcome. `CertifiedNotTight` additionally requires a
/// converged oracle with at least 32 restarts, so a thin search cannot
/// refute the bound.
pub fn certify_tightness(
    report: &BoundReport,
    oracle: &OptResult,
    tol: f64,
) -> Result<BoundReport, BoundsError> {
    if oracle.best_value > report.bound + tol {
        return Err(BoundsError::OracleExceedsBound {
            oracle: oracle.best_value,
            bound: report.bound,
            tol,
        });
    }
    let mut out = report.clone();
    out.oracle_value = Some(oracle.best_value);
    out.oracle_settings = Some(oracle.settings.clone());
    out.tightness = if oracle.best_value >= report.bound - tol {
        Tightness::CertifiedTight
    } else if oracle.restart_values.len() >= 32 && oracle.converged {
        Tightness::CertifiedNotTight
    } else {
        Tightness::Undetermined
    };
    Ok(out)
}
