//! Genuine multipartite concurrence for three-qubit X-states.
//!
//! An X-state is supported only on the main diagonal and antidiagonal. In
//! block form `rho_X = [[M, Z], [Z^dagger, N]]` with `M = diag(m1..m4)`,
//! `N = diag(n4, n3, n2, n1)` and `Z = antidiag(z4, z3, z2, z1)`, the
//! genuine multipartite concurrence has the closed form
//! `C_m = 2 max_i {0, |z_i| - w_i}` with `w_i = sum_{j != i} sqrt(m_j n_j)`.
//!
//! Position map between the 8x8 density matrix and the (m, n, z) triples
//! (`i` is the 1-based triple index):
//!
//! | i | m_i     | n_i     | z_i     |
//! |---|---------|---------|---------|
//! | 1 | rho[0,0] | rho[7,7] | rho[0,7] |
//! | 2 | rho[1,1] | rho[6,6] | rho[1,6] |
//! | 3 | rho[2,2] | rho[5,5] | rho[2,5] |
//! | 4 | rho[3,3] | rho[4,4] | rho[3,4] |
//!
//! so triple i couples the basis state `i-1` with its bitwise complement.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::qstate::DensityMatrix;

/// Entries off the diagonal/antidiagonal pattern above this magnitude make
/// a state non-X. Family constructors produce exact zeros; the tolerance
/// guards file-loaded states.
pub const X_PATTERN_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EntanglementError {
    #[error("X-state extraction requires three qubits, state has {0}")]
    WrongQubitCount(usize),

    #[error(
        "not an X-state: entry ({row}, {col}) has magnitude {magnitude:.3e} \
         off the diagonal/antidiagonal pattern"
    )]
    NotAnXState {
        row: usize,
        col: usize,
        magnitude: f64,
    },

    #[error("invalid X-state form: {0}")]
    InvalidForm(String),

    #[error("state vector must have {expected} amplitudes, got {got}")]
    WrongAmplitudeCount { expected: usize, got: usize },

    #[error("state vector norm {norm:.17} is not 1")]
    NotNormalized { norm: f64 },

    #[error("no concurrence relation is known for family '{0}'")]
    UnknownFamily(String),

    #[error("family '{0}' needs parameter {1}")]
    MissingParameter(&'static str, &'static str),
}

/// Diagonal/antidiagonal parameters of a three-qubit X-state.
#[derive(Clone, Debug, PartialEq)]
pub struct XStateForm {
    m: [f64; 4],
    n: [f64; 4],
    z: [Complex64; 4],
}

impl XStateForm {
    pub fn new(m: [f64; 4], n: [f64; 4], z: [Complex64; 4]) -> Result<Self, EntanglementError> {
        let total: f64 = m.iter().sum::<f64>() + n.iter().sum::<f64>();
        if (total - 1.0).abs() > 1e-12 {
            return Err(EntanglementError::InvalidForm(format!(
                "diagonal sums to {total:.17}, expected 1"
            )));
        }
        for i in 0..4 {
            if m[i] < -1e-12 || n[i] < -1e-12 {
                return Err(EntanglementError::InvalidForm(format!(
                    "negative diagonal entry in triple {} (m = {}, n = {})",
                    i + 1,
                    m[i],
                    n[i]
                )));
            }
            let cap = (m[i].max(0.0) * n[i].max(0.0)).sqrt();
            if z[i].norm() > cap + 1e-10 {
                return Err(EntanglementError::InvalidForm(format!(
                    "|z_{}| = {:.12} exceeds sqrt(m n) = {cap:.12}",
                    i + 1,
                    z[i].norm()
                )));
            }
        }
        Ok(Self { m, n, z })
    }

    pub fn m(&self) -> &[f64; 4] {
        &self.m
    }

    pub fn n(&self) -> &[f64; 4] {
        &self.n
    }

    pub fn z(&self) -> &[Complex64; 4] {
        &self.z
    }

    /// JSON form `{m, n, zRe, zIm}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        #[derive(Serialize)]
        #[serde(rename_all = "camelCase")]
        struct Shadow {
            m: [f64; 4],
            n: [f64; 4],
            z_re: [f64; 4],
            z_im: [f64; 4],
        }
        let shadow = Shadow {
            m: self.m,
            n: self.n,
            z_re: [self.z[0].re, self.z[1].re, self.z[2].re, self.z[3].re],
            z_im: [self.z[0].im, self.z[1].im, self.z[2].im, self.z[3].im],
        };
        serde_json::to_value(shadow).expect("X-state form serialization cannot fail")
    }
}

/// Read the X-state parameters off a three-qubit density matrix, rejecting
/// any entry off the diagonal/antidiagonal pattern.
pub fn extract_x_form(rho: &DensityMatrix) -> Result<XStateForm, EntanglementError> {
    if rho.n() != 3 {
        return Err(EntanglementError::WrongQubitCount(rho.n()));
    }
    let m = rho.matrix();
    for row in 0..8 {
        for col in 0..8 {
            if row == col || row + col == 7 {
                continue;
            }
            let magnitude = m.get(row, col).norm();
            if magnitude > X_PATTERN_TOL {
                return Err(EntanglementError::NotAnXState {
                    row,
                    col,
                    magnitude,
                });
            }
        }
    }
    let mut mm = [0.0; 4];
    let mut nn = [0.0; 4];
    let mut zz = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        mm[i] = m.get(i, i).re;
        nn[i] = m.get(7 - i, 7 - i).re;
        zz[i] = m.get(i, 7 - i);
    }
    XStateForm::new(mm, nn, zz)
}

/// Genuine multipartite concurrence of an X-state:
/// `C_m = 2 max_i {0, |z_i| - w_i}`, `w_i = sum_{j != i} sqrt(m_j n_j)`.
pub fn gmc(x: &XStateForm) -> f64 {
    let root = |i: usize| (x.m[i].max(0.0) * x.n[i].max(0.0)).sqrt();
    let mut best = 0.0f64;
    for i in 0..4 {
        let w: f64 = (0..4).filter(|&j| j != i).map(root).sum();
        best = best.max(x.z[i].norm() - w);
    }
    2.0 * best
}

/// Genuine multipartite concurrence of a pure three-qubit state:
/// `min_j sqrt(2 (1 - P_j))` over the three one-vs-rest bipartitions, with
/// `P_j` the purity of the reduced state. Used as an independent cross-check
/// of the X-state formula on pure family members.
pub fn gmc_pure(amplitudes: &[Complex64]) -> Result<f64, EntanglementError> {
    if amplitudes.len() != 8 {
        return Err(EntanglementError::WrongAmplitudeCount {
            expected: 8,
            got: amplitudes.len(),
        });
    }
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(EntanglementError::NotNormalized { norm });
    }
    let mut worst = f64::INFINITY;
    for party in 0..3usize {
        // Reshape the amplitudes into a 2 x 4 matrix with the chosen party
        // as the row index; the reduced purity is |A A^dagger|_F^2.
        let row_of = |basis: usize| (basis >> (2 - party)) & 1;
        let col_of = |basis: usize| {
            let hi = basis >> (3 - party); // bits above the chosen party
            let lo = basis & ((1 << (2 - party)) - 1); // bits below
            (hi << (2 - party)) | lo
        };
        let mut a = [[Complex64::new(0.0, 0.0); 4]; 2];
        for (basis, amp) in amplitudes.iter().enumerate() {
            a[row_of(basis)][col_of(basis)] = *amp;
        }
        // gram = A A^dagger (2x2 Hermitian).
        let mut gram = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                for (x, y) in a[r].iter().zip(a[c].iter()) {
                    gram[r][c] += x * y.conj();
                }
            }
        }
        let purity: f64 = (0..2)
            .flat_map(|r| (0..2).map(move |c| (r, c)))
            .map(|(r, c)| gram[r][c].norm_sqr())
            .sum();
        let concurrence = (2.0 * (1.0 - purity)).max(0.0).sqrt();
        worst = worst.min(concurrence);
    }
    Ok(worst)
}

/// Residual of a stated concurrence/bound relation for one family:
/// `|bound - relation(C_m, params)|`.
///
/// Known relations (valid where the family is genuinely entangled,
/// `C_m > 0`):
/// * `ghz-symmetric`:   bound = 4 (C_m + 3/4 - sqrt(3) theta), needs theta
/// * `noisy-ghz-tilde`: bound = 4/3 (2 C_m + 1)
/// * `noisy-ghz`:       bound = 4/7 (4 C_m + 3)
pub fn verify_relation(
    family: &str,
    theta: Option<f64>,
    bound: f64,
    cm: f64,
) -> Result<f64, EntanglementError> {
    let predicted = match family {
        "ghz-symmetric" => {
            let theta = theta.ok_or(EntanglementError::MissingParameter(
                "ghz-symmetric",
                "theta",
            ))?;
            4.0 * (cm + 0.75 - 3.0f64.sqrt() * theta)
        }
        "noisy-ghz-tilde" => 4.0 / 3.0 * (2.0 * cm + 1.0),
        "noisy-ghz" => 4.0 / 7.0 * (4.0 * cm + 3.0),
        other => return Err(EntanglementError::UnknownFamily(other.to_string())),
    };
    Ok((bound - predicted).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::analytic_bound;
    use crate::qstate::{make_family, GhzSymmetricParams, NoisyStateParams, StateFamily};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_near(a: f64, b: f64, tol: f64, msg: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{msg}: {a} vs {b} (diff {})",
            (a - b).abs()
        );
    }

    #[test]
    fn extract_ghz_projector() {
        let rho = make_family(&StateFamily::Ghz { n: 3 }).unwrap();
        let x = extract_x_form(&rho).unwrap();
        assert_near(x.m()[0], 0.5, 1e-15, "m1");
        assert_near(x.n()[0], 0.5, 1e-15, "n1");
        assert_near(x.z()[0].re, 0.5, 1e-15, "z1");
        for i in 1..4 {
            assert_near(x.m()[i], 0.0, 1e-15, "m tail");
            assert_near(x.n()[i], 0.0, 1e-15, "n tail");
            assert_near(x.z()[i].norm(), 0.0, 1e-15, "z tail");
        }
    }

    #[test]
    fn extract_noisy_ghz_tilde() {
        let p = 0.6;
        let rho = make_family(&StateFamily::NoisyGhzTilde(
            NoisyStateParams::new(p).unwrap(),
        ))
        .unwrap();
        let x = extract_x_form(&rho).unwrap();
        assert_near(x.m()[0], p / 2.0 + (1.0 - p) / 4.0, 1e-15, "m1");
        assert_near(x.n()[0], p / 2.0 + (1.0 - p) / 4.0, 1e-15, "n1");
        assert_near(x.m()[3], (1.0 - p) / 4.0, 1e-15, "m4");
        assert_near(x.n()[3], (1.0 - p) / 4.0, 1e-15, "n4");
        assert_near(x.z()[0].re, p / 2.0, 1e-15, "z1");
        assert_near(x.m()[1], 0.0, 1e-15, "m2");
        assert_near(x.m()[2], 0.0, 1e-15, "m3");
    }

    #[test]
    fn w_state_is_not_x() {
        let rho = make_family(&StateFamily::W3).unwrap();
        match extract_x_form(&rho) {
            Err(EntanglementError::NotAnXState { .. }) => {}
            other => panic!("expected NotAnXState, got {other:?}"),
        }
    }

    #[test]
    fn gmc_values() {
        // Pure GHZ: C_m = 2 (1/2 - 0) = 1.
        let ghz = extract_x_form(&make_family(&StateFamily::Ghz { n: 3 }).unwrap()).unwrap();
        assert_near(gmc(&ghz), 1.0, 1e-15, "GHZ concurrence");

        // Noisy tilde family: C_m = max(0, (3p-1)/2); 1/4 at p = 1/2.
        for p in [0.0, 0.2, 0.5, 0.8, 1.0] {
            let x = extract_x_form(
                &make_family(&StateFamily::NoisyGhzTilde(
                    NoisyStateParams::new(p).unwrap(),
                ))
                .unwrap(),
            )
            .unwrap();
            let expect = (0.0f64).max((3.0 * p - 1.0) / 2.0);
            assert_near(gmc(&x), expect, 1e-13, "tilde concurrence");
        }
        let x = extract_x_form(
            &make_family(&StateFamily::NoisyGhzTilde(
                NoisyStateParams::new(0.5).unwrap(),
            ))
            .unwrap(),
        )
        .unwrap();
        assert_near(gmc(&x), 0.25, 1e-15, "C_m at p = 1/2");

        // Separable diagonal state: all z = 0.
        let mixed =
            extract_x_form(&make_family(&StateFamily::MaximallyMixed { n: 3 }).unwrap()).unwrap();
        assert_near(gmc(&mixed), 0.0, 0.0, "diagonal state");
    }

    #[test]
    fn gmc_invariant_under_triple_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..100 {
            let x = random_form(&mut rng);
            let base = gmc(&x);
            // Swap triples 1 and 3 (simultaneously in m, n, z).
            let mut m = *x.m();
            let mut n = *x.n();
            let mut z = *x.z();
            m.swap(0, 2);
            n.swap(0, 2);
            z.swap(0, 2);
            let swapped = XStateForm::new(m, n, z).unwrap();
            assert_near(gmc(&swapped), base, 1e-14, "relabeling symmetry");
        }
    }

    #[test]
    fn gmc_range_on_random_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..1000 {
            let x = random_form(&mut rng);
            let value = gmc(&x);
            assert!((0.0..=1.0 + 1e-12).contains(&value), "C_m = {value}");
        }
    }

    /// Random valid X-state form: non-negative diagonal normalized to 1,
    /// antidiagonal within the PSD cap of each 2x2 block.
    fn random_form(rng: &mut ChaCha8Rng) -> XStateForm {
        let mut diag = [0.0f64; 8];
        let mut total = 0.0;
        for d in diag.iter_mut() {
            *d = rng.gen_range(0.0..1.0);
            total += *d;
        }
        for d in diag.iter_mut() {
            *d /= total;
        }
        let m = [diag[0], diag[1], diag[2], diag[3]];
        let n = [diag[4], diag[5], diag[6], diag[7]];
        let mut z = [Complex64::new(0.0, 0.0); 4];
        for i in 0..4 {
            let cap = (m[i] * n[i]).sqrt();
            let magnitude = rng.gen_range(0.0..=1.0) * cap;
            let (s, c) = rng.gen_range(0.0..std::f64::consts::TAU).sin_cos();
            z[i] = Complex64::new(c * magnitude, s * magnitude);
        }
        XStateForm::new(m, n, z).unwrap()
    }

    #[test]
    fn pure_state_definition_cross_check() {
        // Both definitions give 1 on the pure GHZ state.
        let x = extract_x_form(&make_family(&StateFamily::Ghz { n: 3 }).unwrap()).unwrap();
        let via_bipartitions = gmc_pure(&crate::qstate::ghz_vector(3)).unwrap();
        assert_near(gmc(&x), via_bipartitions, 1e-12, "two definitions on GHZ");

        // W state: every one-vs-rest purity is 5/9, so C_m = sqrt(8)/3.
        let w = gmc_pure(&crate::qstate::w3_vector()).unwrap();
        assert_near(w, 8.0f64.sqrt() / 3.0, 1e-12, "pure W concurrence");
    }

    #[test]
    fn relation_residuals() {
        // ghz-symmetric at (0.2, 0.3).
        let params = GhzSymmetricParams::new(0.2, 0.3).unwrap();
        let rho = make_family(&StateFamily::GhzSymmetric(params)).unwrap();
        let bound = analytic_bound(&rho).unwrap().bound;
        let cm = gmc(&extract_x_form(&rho).unwrap());
        assert!(cm > 0.0, "sample must be genuinely entangled");
        let residual = verify_relation("ghz-symmetric", Some(0.3), bound, cm).unwrap();
        assert!(residual <= 1e-9, "residual {residual}");

        // noisy-ghz-tilde at p = 0.75: bound 3, C_m = 0.625.
        let rho = make_family(&StateFamily::NoisyGhzTilde(
            NoisyStateParams::new(0.75).unwrap(),
        ))
        .unwrap();
        let bound = analytic_bound(&rho).unwrap().bound;
        let cm = gmc(&extract_x_form(&rho).unwrap());
        assert_near(bound, 3.0, 1e-13, "bound at p = 0.75");
        assert_near(cm, 0.625, 1e-13, "C_m at p = 0.75");
        let residual = verify_relation("noisy-ghz-tilde", None, bound, cm).unwrap();
        assert!(residual <= 1e-9, "residual {residual}");

        // noisy-ghz across a grid inside the entangled region p > 3/7.
        for k in 0..=20 {
            let p = 0.45 + 0.55 * k as f64 / 20.0;
            let rho =
                make_family(&StateFamily::NoisyGhz(NoisyStateParams::new(p).unwrap())).unwrap();
            let bound = analytic_bound(&rho).unwrap().bound;
            let cm = gmc(&extract_x_form(&rho).unwrap());
            let residual = verify_relation("noisy-ghz", None, bound, cm).unwrap();
            assert!(residual <= 1e-9, "residual {residual} at p = {p}");
        }

        assert!(matches!(
            verify_relation("noisy-w", None, 1.0, 0.5),
            Err(EntanglementError::UnknownFamily(_))
        ));
        assert!(matches!(
            verify_relation("ghz-symmetric", None, 1.0, 0.5),
            Err(EntanglementError::MissingParameter(_, _))
        ));
    }

    #[test]
    fn violation_thresholds_agree_with_bound() {
        // ghz-symmetric: C_m > sqrt(3) theta - 1/4 iff bound > 2, on the
        // genuinely entangled part (C_m > 0) of the positivity triangle.
        let sqrt3 = 3.0f64.sqrt();
        let mut checked = 0usize;
        for i in 0..50 {
            let theta =
                -1.0 / (4.0 * sqrt3) + (sqrt3 / 4.0 + 1.0 / (4.0 * sqrt3)) * i as f64 / 49.0;
            let ell_max = 0.125 + sqrt3 / 2.0 * theta;
            for j in 0..50 {
                let ell = -ell_max + 2.0 * ell_max * j as f64 / 49.0;
                let params = match GhzSymmetricParams::new(ell, theta) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let rho = make_family(&StateFamily::GhzSymmetric(params)).unwrap();
                let cm = gmc(&extract_x_form(&rho).unwrap());
                if cm <= 1e-12 {
                    continue;
                }
                let bound = analytic_bound(&rho).unwrap().bound;
                let by_cm = cm > sqrt3 * theta - 0.25 + 1e-9;
                let by_bound = bound > 2.0 + 1e-9;
                assert_eq!(by_cm, by_bound, "mismatch at l = {ell}, theta = {theta}");
                checked += 1;
            }
        }
        assert!(checked > 500, "grid too sparse: {checked}");
    }

    #[test]
    fn x_form_validation() {
        assert!(matches!(
            XStateForm::new([0.5; 4], [0.5; 4], [Complex64::new(0.0, 0.0); 4]),
            Err(EntanglementError::InvalidForm(_))
        ));
        let mut z = [Complex64::new(0.0, 0.0); 4];
        z[0] = Complex64::new(0.4, 0.0);
        assert!(matches!(
            XStateForm::new([0.125; 4], [0.125; 4], z),
            Err(EntanglementError::InvalidForm(_))
        ));
    }

    #[test]
    fn json_shape() {
        let x = extract_x_form(&make_family(&StateFamily::Ghz { n: 3 }).unwrap()).unwrap();
        let json = x.to_json_value();
        for key in ["m", "n", "zRe", "zIm"] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
    }
}
