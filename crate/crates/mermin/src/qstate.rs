//! n-qubit density matrices, Pauli correlation tensors, and state families.
//!
//! The correlation tensor of a state is the full set of real coefficients
//! `Lambda[idx] = Tr[(sigma_{mu_1} x ... x sigma_{mu_n}) rho]` over Pauli
//! multi-indices, with `sigma_0` the identity and `sigma_{1,2,3}` the x, y, z
//! Pauli matrices. `correlation_data` and `reconstruct` convert between the
//! matrix and tensor pictures; the family constructors build the states used
//! throughout the test and reproduction suites.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::hermitian_eigenvalues;

/// Largest supported qubit count (dim 256, tensor 65536 entries).
pub const MAX_QUBITS: usize = 8;

/// Hermiticity tolerance for density-matrix entries.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Unit-trace tolerance.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues may dip this far below zero before a state is rejected.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed excursion of correlation entries outside [-1, 1].
pub const CORRELATION_RANGE_TOL: f64 = 1e-10;
/// Largest imaginary residue tolerated in a Pauli-string trace.
pub const IMAG_TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum QStateError {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(usize),

    #[error("matrix has {entries} entries, expected dim^2 = {expected}")]
    EntryCountMismatch { entries: usize, expected: usize },

    #[error("matrix dimension {dim} does not equal 2^{n}")]
    DimensionMismatch { dim: usize, n: usize },

    #[error("matrix is not Hermitian: max |rho_jk - conj(rho_kj)| = {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error("trace {trace:.17} is not 1 within {TRACE_TOL:.0e}")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("Pauli index component {component} at position {position} outside 0..=3")]
    InvalidPauliComponent { component: u8, position: usize },

    #[error("correlation tensor has {entries} entries, expected 4^{n}")]
    TensorSizeMismatch { entries: usize, n: usize },

    #[error("normalization entry Lambda_0...0 = {value:.17}, expected 1")]
    BadNormalization { value: f64 },

    #[error("correlation entry {value:.17} at flat index {index} outside [-1, 1]")]
    CorrelationOutOfRange { index: usize, value: f64 },

    #[error("Pauli trace has imaginary residue {residual:.3e}; state data is corrupted")]
    NonRealCorrelation { residual: f64 },

    #[error("view requires a three-qubit tensor, this one has n = {0}")]
    ViewRequiresThreeQubits(usize),

    #[error("family parameter rejected: {constraint}")]
    FamilyParameter { constraint: String },

    #[error("state file is malformed: {0}")]
    MalformedFile(String),
}

// ---------------------------------------------------------------------------
// Complex matrices
// ---------------------------------------------------------------------------

/// Dense square complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self, QStateError> {
        if entries.len() != dim * dim {
            return Err(QStateError::EntryCountMismatch {
                entries: entries.len(),
                expected: dim * dim,
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.dim + c] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a + b)
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a - b)
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in product");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.entries[r * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    out.entries[r * d + c] += a * other.entries[k * d + c];
                }
            }
        }
        out
    }

    /// Kronecker product; `self` indexes the most significant subsystem.
    pub fn kron(&self, other: &Self) -> Self {
        let da = self.dim;
        let db = other.dim;
        let d = da * db;
        let mut out = Self::zeros(d);
        for ra in 0..da {
            for ca in 0..da {
                let a = self.entries[ra * da + ca];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for rb in 0..db {
                    for cb in 0..db {
                        out.entries[(ra * db + rb) * d + (ca * db + cb)] =
                            a * other.entries[rb * db + cb];
                    }
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                out.entries[r * d + c] = self.entries[c * d + r].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    /// Largest entry-wise deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                let diff = (self.entries[r * d + c] - self.entries[c * d + r].conj()).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues (ascending) assuming the matrix is Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self.dim, &self.entries)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.entries[r * self.dim + c]
    }
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Validated n-qubit density matrix: Hermitian, unit trace, PSD within
/// tolerance. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(n: usize, matrix: ComplexMatrix) -> Result<Self, QStateError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(QStateError::QubitCountOutOfRange(n));
        }
        if matrix.dim() != 1 << n {
            return Err(QStateError::DimensionMismatch {
                dim: matrix.dim(),
                n,
            });
        }
        let residual = matrix.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(QStateError::NotHermitian { residual });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(QStateError::TraceNotOne { trace: trace.re });
        }
        let eigs = matrix.hermitian_eigenvalues();
        if eigs[0] < -PSD_TOL {
            return Err(QStateError::NotPositiveSemidefinite {
                min_eigenvalue: eigs[0],
            });
        }
        Ok(Self { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Parse the state file format: `{"n": ..., "re": [[...]], "im": [[...]]}`.
    pub fn from_json_str(text: &str) -> Result<Self, QStateError> {
        let file: DensityMatrixFile =
            serde_json::from_str(text).map_err(|e| QStateError::MalformedFile(e.to_string()))?;
        file.into_density_matrix()
    }

    pub fn to_json_string(&self) -> String {
        let d = self.dim();
        let re: Vec<Vec<f64>> = (0..d)
            .map(|r| (0..d).map(|c| self.matrix.get(r, c).re).collect())
            .collect();
        let im: Vec<Vec<f64>> = (0..d)
            .map(|r| (0..d).map(|c| self.matrix.get(r, c).im).collect())
            .collect();
        serde_json::to_string_pretty(&DensityMatrixFile { n: self.n, re, im })
            .expect("density matrix serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixFile {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl DensityMatrixFile {
    fn into_density_matrix(self) -> Result<DensityMatrix, QStateError> {
        if self.n == 0 || self.n > MAX_QUBITS {
            return Err(QStateError::QubitCountOutOfRange(self.n));
        }
        let d = 1usize << self.n;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(QStateError::MalformedFile(format!(
                "re/im arrays must both be {d}x{d}"
            )));
        }
        let mut m = ComplexMatrix::zeros(d);
        for r in 0..d {
            for c in 0..d {
                m.set(r, c, Complex64::new(self.re[r][c], self.im[r][c]));
            }
        }
        DensityMatrix::new(self.n, m)
    }
}

// ---------------------------------------------------------------------------
// Pauli multi-indices and strings
// ---------------------------------------------------------------------------

/// Multi-index into the Pauli basis: one component in 0..=3 per qubit,
/// with 0 the identity and 1..=3 the x, y, z Paulis. The flat offset is
/// big-endian (first qubit most significant), matching the Kronecker order
/// of [`pauli_string`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliMultiIndex(Vec<u8>);

impl PauliMultiIndex {
    pub fn new(components: Vec<u8>) -> Result<Self, QStateError> {
        if components.is_empty() || components.len() > MAX_QUBITS {
            return Err(QStateError::QubitCountOutOfRange(components.len()));
        }
        for (position, &component) in components.iter().enumerate() {
            if component > 3 {
                return Err(QStateError::InvalidPauliComponent {
                    component,
                    position,
                });
            }
        }
        Ok(Self(components))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u8] {
        &self.0
    }

    pub fn flat_offset(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &c| acc * 4 + c as usize)
    }

    pub fn from_flat(n: usize, mut offset: usize) -> Self {
        debug_assert!((1..=MAX_QUBITS).contains(&n) && offset < 1 << (2 * n));
        let mut components = vec![0u8; n];
        for i in (0..n).rev() {
            components[i] = (offset % 4) as u8;
            offset /= 4;
        }
        Self(components)
    }
}

/// Single-qubit Pauli entry sigma_mu[r][c] for mu in 0..=3.
fn sigma_entry(mu: u8, r: usize, c: usize) -> Complex64 {
    match (mu, r, c) {
        (0, 0, 0) | (0, 1, 1) => Complex64::new(1.0, 0.0),
        (1, 0, 1) | (1, 1, 0) => Complex64::new(1.0, 0.0),
        (2, 0, 1) => Complex64::new(0.0, -1.0),
        (2, 1, 0) => Complex64::new(0.0, 1.0),
        (3, 0, 0) => Complex64::new(1.0, 0.0),
        (3, 1, 1) => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Kronecker product of single-qubit Pauli matrices for a multi-index.
pub fn pauli_string(idx: &PauliMultiIndex) -> ComplexMatrix {
    let n = idx.n();
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim);
    // Each Pauli string has exactly one non-zero entry per row.
    let flip = flip_mask(idx);
    for r in 0..dim {
        let c = r ^ flip;
        out.set(r, c, pauli_row_factor(idx, r, c));
    }
    out
}

/// Column displacement of the string: x and y flip a qubit's bit.
fn flip_mask(idx: &PauliMultiIndex) -> usize {
    let n = idx.n();
    let mut mask = 0usize;
    for (i, &mu) in idx.components().iter().enumerate() {
        if mu == 1 || mu == 2 {
            mask |= 1 << (n - 1 - i);
        }
    }
    mask
}

fn pauli_row_factor(idx: &PauliMultiIndex, r: usize, c: usize) -> Complex64 {
    let n = idx.n();
    let mut factor = Complex64::new(1.0, 0.0);
    for (i, &mu) in idx.components().iter().enumerate() {
        let rb = (r >> (n - 1 - i)) & 1;
        let cb = (c >> (n - 1 - i)) & 1;
        factor *= sigma_entry(mu, rb, cb);
    }
    factor
}

// ---------------------------------------------------------------------------
// Correlation tensors
// ---------------------------------------------------------------------------

/// Full real Pauli correlation tensor of an n-qubit state: 4^n entries in
/// flat big-endian order. `lambda[0] = 1` is the normalization entry and
/// every entry lies in [-1, 1] up to tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationData {
    n: usize,
    lambda: Vec<f64>,
}

impl CorrelationData {
    pub fn new(n: usize, lambda: Vec<f64>) -> Result<Self, QStateError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(QStateError::QubitCountOutOfRange(n));
        }
        if lambda.len() != 1 << (2 * n) {
            return Err(QStateError::TensorSizeMismatch {
                entries: lambda.len(),
                n,
            });
        }
        if (lambda[0] - 1.0).abs() > TRACE_TOL {
            return Err(QStateError::BadNormalization { value: lambda[0] });
        }
        for (index, &value) in lambda.iter().enumerate() {
            if value.abs() > 1.0 + CORRELATION_RANGE_TOL {
                return Err(QStateError::CorrelationOutOfRange { index, value });
            }
        }
        Ok(Self { n, lambda })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn get(&self, idx: &PauliMultiIndex) -> f64 {
        debug_assert_eq!(idx.n(), self.n);
        self.lambda[idx.flat_offset()]
    }

    pub fn get_flat(&self, offset: usize) -> f64 {
        self.lambda[offset]
    }

    fn entry3(&self, a: u8, b: u8, c: u8) -> f64 {
        self.lambda[(a as usize) * 16 + (b as usize) * 4 + c as usize]
    }

    fn require_three(&self) -> Result<(), QStateError> {
        if self.n == 3 {
            Ok(())
        } else {
            Err(QStateError::ViewRequiresThreeQubits(self.n))
        }
    }

    /// Bloch vector of the first party (n = 3 view).
    pub fn bloch_a(&self) -> Result<[f64; 3], QStateError> {
        self.require_three()?;
        Ok([
            self.entry3(1, 0, 0),
            self.entry3(2, 0, 0),
            self.entry3(3, 0, 0),
        ])
    }

    pub fn bloch_b(&self) -> Result<[f64; 3], QStateError> {
        self.require_three()?;
        Ok([
            self.entry3(0, 1, 0),
            self.entry3(0, 2, 0),
            self.entry3(0, 3, 0),
        ])
    }

    pub fn bloch_c(&self) -> Result<[f64; 3], QStateError> {
        self.require_three()?;
        Ok([
            self.entry3(0, 0, 1),
            self.entry3(0, 0, 2),
            self.entry3(0, 0, 3),
        ])
    }

    /// Two-party correlation matrix Theta_ij = Lambda_{ij0} (n = 3 view).
    pub fn pair_ab(&self) -> Result<[[f64; 3]; 3], QStateError> {
        self.require_three()?;
        Ok(self.pair_view(|i, j| self.entry3(i, j, 0)))
    }

    /// Two-party correlation matrix Phi_ik = Lambda_{i0k} (n = 3 view).
    pub fn pair_ac(&self) -> Result<[[f64; 3]; 3], QStateError> {
        self.require_three()?;
        Ok(self.pair_view(|i, k| self.entry3(i, 0, k)))
    }

    /// Two-party correlation matrix Omega_jk = Lambda_{0jk} (n = 3 view).
    pub fn pair_bc(&self) -> Result<[[f64; 3]; 3], QStateError> {
        self.require_three()?;
        Ok(self.pair_view(|j, k| self.entry3(0, j, k)))
    }

    fn pair_view(&self, f: impl Fn(u8, u8) -> f64) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = f(i as u8 + 1, j as u8 + 1);
            }
        }
        out
    }

    /// Tripartite correlation matrix T = [Lambda_{ijk}] as a 3x9 row-major
    /// array, rows indexed by the first party (n = 3 view).
    pub fn tripartite(&self) -> Result<[[f64; 9]; 3], QStateError> {
        self.require_three()?;
        let mut out = [[0.0; 9]; 3];
        for i in 1..=3u8 {
            for j in 1..=3u8 {
                for k in 1..=3u8 {
                    out[(i - 1) as usize][((j - 1) * 3 + (k - 1)) as usize] = self.entry3(i, j, k);
                }
            }
        }
        Ok(out)
    }
}

/// Trace of a Pauli string against a density matrix, exploiting the
/// one-non-zero-entry-per-row structure of Pauli strings.
fn pauli_trace(rho: &DensityMatrix, idx: &PauliMultiIndex) -> Complex64 {
    let dim = rho.dim();
    let flip = flip_mask(idx);
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        let c = r ^ flip;
        acc += pauli_row_factor(idx, r, c) * rho.matrix().get(c, r);
    }
    acc
}

/// Extract the full correlation tensor of a state.
pub fn correlation_data(rho: &DensityMatrix) -> Result<CorrelationData, QStateError> {
    let n = rho.n();
    let size = 1usize << (2 * n);
    let mut lambda = vec![0.0; size];
    for (offset, slot) in lambda.iter_mut().enumerate() {
        let idx = PauliMultiIndex::from_flat(n, offset);
        let tr = pauli_trace(rho, &idx);
        if tr.im.abs() > IMAG_TRACE_TOL {
            return Err(QStateError::NonRealCorrelation { residual: tr.im });
        }
        *slot = tr.re;
    }
    CorrelationData::new(n, lambda)
}

/// Rebuild the density matrix from its correlation tensor:
/// `rho = 2^{-n} sum_idx Lambda[idx] sigma_idx`.
pub fn reconstruct(corr: &CorrelationData) -> Result<DensityMatrix, QStateError> {
    let n = corr.n();
    let dim = 1usize << n;
    let norm = 1.0 / dim as f64;
    let mut m = ComplexMatrix::zeros(dim);
    for offset in 0..corr.lambda().len() {
        let coeff = corr.get_flat(offset);
        if coeff == 0.0 {
            continue;
        }
        let idx = PauliMultiIndex::from_flat(n, offset);
        let flip = flip_mask(&idx);
        for r in 0..dim {
            let c = r ^ flip;
            let add = pauli_row_factor(&idx, r, c) * (coeff * norm);
            m.set(r, c, m.get(r, c) + add);
        }
    }
    DensityMatrix::new(n, m)
}

// ---------------------------------------------------------------------------
// State families
// ---------------------------------------------------------------------------

/// Parameters of the GHZ-symmetric family rho(l, theta): a mixture of the
/// GHZ_+/- projectors and white noise, positive semidefinite iff
/// `-1/(4 sqrt 3) <= theta <= sqrt(3)/4` and `|l| <= 1/8 + (sqrt(3)/2) theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhzSymmetricParams {
    pub ell: f64,
    pub theta: f64,
}

impl GhzSymmetricParams {
    pub fn new(ell: f64, theta: f64) -> Result<Self, QStateError> {
        let sqrt3 = 3.0f64.sqrt();
        let theta_lo = -1.0 / (4.0 * sqrt3);
        let theta_hi = sqrt3 / 4.0;
        // Boundary states are valid (smallest eigenvalue exactly zero), so
        // the checks carry a small grace for float rounding on the bounds.
        if theta < theta_lo - 1e-12 || theta > theta_hi + 1e-12 {
            return Err(QStateError::FamilyParameter {
                constraint: format!(
                    "theta = {theta} violates -1/(4*sqrt(3)) = {theta_lo:.12} <= theta <= sqrt(3)/4 = {theta_hi:.12}"
                ),
            });
        }
        let ell_max = 0.125 + (sqrt3 / 2.0) * theta;
        if ell.abs() > ell_max + 1e-12 {
            return Err(QStateError::FamilyParameter {
                constraint: format!(
                    "|l| = {} violates |l| <= 1/8 + (sqrt(3)/2)*theta = {ell_max:.12}",
                    ell.abs()
                ),
            });
        }
        Ok(Self { ell, theta })
    }
}

/// Mixing weight for the noisy families, p in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisyStateParams {
    pub p: f64,
}

impl NoisyStateParams {
    pub fn new(p: f64) -> Result<Self, QStateError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QStateError::FamilyParameter {
                constraint: format!("p = {p} violates 0 <= p <= 1"),
            });
        }
        Ok(Self { p })
    }
}

/// Angle of the generalized four-qubit GHZ state
/// `cos(phi)|0000> + sin(phi)|1111>`, reduced to the canonical range
/// [0, pi/2]: phi is first folded mod pi (a global sign), then phi > pi/2
/// maps to pi - phi, which changes the state only by a local phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedGhz4Params {
    pub phi: f64,
}

impl GeneralizedGhz4Params {
    pub fn new(phi: f64) -> Result<Self, QStateError> {
        if !phi.is_finite() {
            return Err(QStateError::FamilyParameter {
                constraint: format!("phi = {phi} is not finite"),
            });
        }
        let mut reduced = phi.rem_euclid(std::f64::consts::PI);
        if reduced > std::f64::consts::FRAC_PI_2 {
            reduced = std::f64::consts::PI - reduced;
        }
        Ok(Self { phi: reduced })
    }
}

/// The built-in state families.
#[derive(Clone, Debug, PartialEq)]
pub enum StateFamily {
    GhzSymmetric(GhzSymmetricParams),
    NoisyGhzTilde(NoisyStateParams),
    NoisyGhz(NoisyStateParams),
    NoisyW(NoisyStateParams),
    GeneralizedGhz4(GeneralizedGhz4Params),
    Ghz { n: usize },
    W3,
    MaximallyMixed { n: usize },
}

impl StateFamily {
    pub fn n(&self) -> usize {
        match self {
            StateFamily::GhzSymmetric(_)
            | StateFamily::NoisyGhzTilde(_)
            | StateFamily::NoisyGhz(_)
            | StateFamily::NoisyW(_)
            | StateFamily::W3 => 3,
            StateFamily::GeneralizedGhz4(_) => 4,
            StateFamily::Ghz { n } | StateFamily::MaximallyMixed { n } => *n,
        }
    }
}

/// Construct the density matrix of a family member.
pub fn make_family(family: &StateFamily) -> Result<DensityMatrix, QStateError> {
    match family {
        StateFamily::GhzSymmetric(params) => ghz_symmetric(params),
        StateFamily::NoisyGhzTilde(params) => noisy_ghz_tilde(params.p),
        StateFamily::NoisyGhz(params) => noisy_ghz(params.p),
        StateFamily::NoisyW(params) => noisy_w(params.p),
        StateFamily::GeneralizedGhz4(params) => generalized_ghz4(params.phi),
        StateFamily::Ghz { n } => {
            if *n < 2 || *n > MAX_QUBITS {
                return Err(QStateError::FamilyParameter {
                    constraint: format!("ghz family requires 2 <= n <= {MAX_QUBITS}, got {n}"),
                });
            }
            DensityMatrix::new(*n, projector(&ghz_vector(*n)))
        }
        StateFamily::W3 => DensityMatrix::new(3, projector(&w3_vector())),
        StateFamily::MaximallyMixed { n } => {
            if *n == 0 || *n > MAX_QUBITS {
                return Err(QStateError::QubitCountOutOfRange(*n));
            }
            let dim = 1usize << n;
            DensityMatrix::new(*n, ComplexMatrix::identity(dim).scaled_re(1.0 / dim as f64))
        }
    }
}

/// (|0..0> + |1..1>)/sqrt(2) as an amplitude vector.
pub(crate) fn ghz_vector(n: usize) -> Vec<Complex64> {
    let dim = 1usize << n;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = a;
    amps[dim - 1] = a;
    amps
}

/// (|001> + |010> + |100>)/sqrt(3).
pub(crate) fn w3_vector() -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    let a = Complex64::new(1.0 / 3.0f64.sqrt(), 0.0);
    amps[0b001] = a;
    amps[0b010] = a;
    amps[0b100] = a;
    amps
}

fn ghz_minus_vector(n: usize) -> Vec<Complex64> {
    let mut amps = ghz_vector(n);
    let last = amps.len() - 1;
    amps[last] = -amps[last];
    amps
}

/// Rank-one projector |psi><psi| from an amplitude vector.
pub(crate) fn projector(amps: &[Complex64]) -> ComplexMatrix {
    let dim = amps.len();
    let mut m = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            m.set(r, c, amps[r] * amps[c].conj());
        }
    }
    m
}

fn ghz_symmetric(params: &GhzSymmetricParams) -> Result<DensityMatrix, QStateError> {
    let sqrt3 = 3.0f64.sqrt();
    let white = (1.0 - 4.0 * params.theta / sqrt3) / 8.0;
    let plus = 2.0 * params.theta / sqrt3 + params.ell;
    let minus = 2.0 * params.theta / sqrt3 - params.ell;
    let m = ComplexMatrix::identity(8)
        .scaled_re(white)
        .add(&projector(&ghz_vector(3)).scaled_re(plus))
        .add(&projector(&ghz_minus_vector(3)).scaled_re(minus));
    DensityMatrix::new(3, m)
}

fn noisy_ghz_tilde(p: f64) -> Result<DensityMatrix, QStateError> {
    // (1-p)/4 * I_2 x diag(1, 0, 0, 1) keeps only the GHZ-diagonal noise.
    let mut tilde = ComplexMatrix::zeros(4);
    tilde.set(0, 0, Complex64::new(1.0, 0.0));
    tilde.set(3, 3, Complex64::new(1.0, 0.0));
    let noise = ComplexMatrix::identity(2).kron(&tilde);
    let m = projector(&ghz_vector(3))
        .scaled_re(p)
        .add(&noise.scaled_re((1.0 - p) / 4.0));
    DensityMatrix::new(3, m)
}

fn noisy_ghz(p: f64) -> Result<DensityMatrix, QStateError> {
    let m = projector(&ghz_vector(3))
        .scaled_re(p)
        .add(&ComplexMatrix::identity(8).scaled_re((1.0 - p) / 8.0));
    DensityMatrix::new(3, m)
}

fn noisy_w(p: f64) -> Result<DensityMatrix, QStateError> {
    let m = projector(&w3_vector())
        .scaled_re(p)
        .add(&ComplexMatrix::identity(8).scaled_re((1.0 - p) / 8.0));
    DensityMatrix::new(3, m)
}

fn generalized_ghz4(phi: f64) -> Result<DensityMatrix, QStateError> {
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    amps[0] = Complex64::new(phi.cos(), 0.0);
    amps[15] = Complex64::new(phi.sin(), 0.0);
    DensityMatrix::new(4, projector(&amps))
}
