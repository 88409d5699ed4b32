//! Decomposition of top singular vectors into per-party measurement vectors.
//!
//! When the largest singular value of a 3x9 reshaped correlation matrix is
//! degenerate, the bound saturates iff the top singular subspace contains a
//! pair of vectors of the forms `b x c' + b' x c` and `b x c - b' x c'`
//! (up to normalization) built from shared unit vectors. This module
//! searches for such a pair and packages the outcome as a certificate.
//!
//! The search space is two angles: a rotation `phi` inside the degenerate
//! 2-plane of singular vectors, and the direction `psi` of `b` inside the
//! column space of the reshaped candidate. Everything else — `b'`, `c`,
//! `c'`, and the overall scale — then has a closed form, so the search is a
//! dense grid scan followed by a pattern-search polish.

use serde::Serialize;

use super::{BoundsError, SingularSpectrum, UnitVector3};

/// Residual below which a decomposition is accepted as exact.
const ACCEPT_TOL: f64 = 1e-9;
/// Relative rank cut: singular values below this times the largest count
/// as zero when classifying a reshaped vector.
const RANK_TOL: f64 = 1e-9;

/// Per-party unit vectors expressing candidate singular vectors in the
/// product forms, with the scale of the plus form. The decomposition of a
/// rank-2 matrix is a one-parameter family; the joint search returns the
/// member consistent with both candidate vectors.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductFormDecomposition {
    pub b: UnitVector3,
    pub b_prime: UnitVector3,
    pub c: UnitVector3,
    pub c_prime: UnitVector3,
    /// Scale t with `reshaped candidate = t (b c'^T + b' c^T)`.
    pub scale: f64,
}

impl ProductFormDecomposition {
    /// The 9-vector `b x c' + b' x c`.
    pub fn plus_form(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        let (b, bp) = (self.b.as_array(), self.b_prime.as_array());
        let (c, cp) = (self.c.as_array(), self.c_prime.as_array());
        for i in 0..3 {
            for j in 0..3 {
                out[i * 3 + j] = b[i] * cp[j] + bp[i] * c[j];
            }
        }
        out
    }

    /// The 9-vector `b x c - b' x c'`.
    pub fn minus_form(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        let (b, bp) = (self.b.as_array(), self.b_prime.as_array());
        let (c, cp) = (self.c.as_array(), self.c_prime.as_array());
        for i in 0..3 {
            for j in 0..3 {
                out[i * 3 + j] = b[i] * c[j] - bp[i] * cp[j];
            }
        }
        out
    }

    /// Principal angle theta with cos(theta) = (b.b')(c.c').
    pub fn principal_angle(&self) -> f64 {
        let cos = self.b.dot(&self.b_prime) * self.c.dot(&self.c_prime);
        cos.clamp(-1.0, 1.0).acos()
    }
}

/// Evidence about saturation of the bound for one state: the two top
/// singular vectors examined and, when found, their joint decomposition
/// into measurement vectors with the principal angle.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TightnessCertificate {
    pub candidate_vectors: [Vec<f64>; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub principal_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<ProductFormDecomposition>,
}

/// Search the degenerate top singular subspace of a three-party spectrum
/// for a decomposable pair of singular vectors.
///
/// Requires `n = 3` and top-value degeneracy at least 2. On success the
/// certificate's candidate vectors are the rotated orthonormal pair that
/// decomposes (still top singular vectors — any orthonormal basis of the
/// degenerate subspace is one), and reassembling the product forms from the
/// returned unit vectors reproduces them to 1e-8. On failure the
/// certificate carries the first two singular vectors and no decomposition.
pub fn decompose_top_vectors(
    spectrum: &SingularSpectrum,
    n: usize,
) -> Result<TightnessCertificate, BoundsError> {
    if n != 3 {
        return Err(BoundsError::DecompositionRequiresThreeParties(n));
    }
    if spectrum.degeneracy_of_max() < 2 {
        return Err(BoundsError::DegeneracyTooLow(spectrum.degeneracy_of_max()));
    }
    let v1: [f64; 9] = spectrum.right_vectors()[0]
        .as_slice()
        .try_into()
        .expect("three-party right vectors are 9-dimensional");
    let v2: [f64; 9] = spectrum.right_vectors()[1]
        .as_slice()
        .try_into()
        .expect("three-party right vectors are 9-dimensional");

    let objective = |phi: f64, psi: f64, flip: bool| candidate_residual(&v1, &v2, phi, psi, flip);

    // Dense scan over the two angles and the candidate sign.
    const GRID: usize = 96;
    let mut best = (f64::INFINITY, 0.0, 0.0, false);
    for i in 0..GRID {
        let phi = std::f64::consts::PI * i as f64 / GRID as f64;
        for j in 0..GRID {
            let psi = std::f64::consts::PI * j as f64 / GRID as f64;
            for flip in [false, true] {
                let r = objective(phi, psi, flip);
                if r < best.0 {
                    best = (r, phi, psi, flip);
                }
            }
        }
    }

    // Pattern-search polish around the best grid cell.
    let (_, mut phi, mut psi, flip) = best;
    let mut step = std::f64::consts::PI / GRID as f64;
    let mut current = objective(phi, psi, flip);
    while step > 1e-14 {
        let mut moved = false;
        for (dp, ds) in [
            (step, 0.0),
            (-step, 0.0),
            (0.0, step),
            (0.0, -step),
            (step, step),
            (step, -step),
            (-step, step),
            (-step, -step),
        ] {
            let r = objective(phi + dp, psi + ds, flip);
            if r < current {
                current = r;
                phi += dp;
                psi += ds;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }

    if current <= ACCEPT_TOL {
        let (x_dir, y_dir) = rotated_pair(&v1, &v2, phi);
        let (decomposition, _) =
            solve_candidate(&v1, &v2, phi, psi, flip).expect("residual below tolerance");
        let angle = decomposition.principal_angle();
        Ok(TightnessCertificate {
            candidate_vectors: [x_dir.to_vec(), y_dir.to_vec()],
            principal_angle: Some(angle),
            decomposition: Some(decomposition),
        })
    } else {
        Ok(TightnessCertificate {
            candidate_vectors: [v1.to_vec(), v2.to_vec()],
            principal_angle: None,
            decomposition: None,
        })
    }
}

fn rotated_pair(v1: &[f64; 9], v2: &[f64; 9], phi: f64) -> ([f64; 9], [f64; 9]) {
    let (s, c) = phi.sin_cos();
    let mut x = [0.0; 9];
    let mut y = [0.0; 9];
    for i in 0..9 {
        x[i] = c * v1[i] + s * v2[i];
        y[i] = -s * v1[i] + c * v2[i];
    }
    (x, y)
}

/// Residual of the best decomposition at fixed search angles; +inf when the
/// closed form degenerates.
fn candidate_residual(v1: &[f64; 9], v2: &[f64; 9], phi: f64, psi: f64, flip: bool) -> f64 {
    match solve_candidate(v1, v2, phi, psi, flip) {
        Some((decomposition, _)) => {
            let (x_dir, y_dir) = rotated_pair(v1, v2, phi);
            let x_res = normalized_match(&decomposition.plus_form(), &x_dir);
            let y_res = normalized_match(&decomposition.minus_form(), &y_dir);
            (x_res * x_res + y_res * y_res).sqrt()
        }
        None => f64::INFINITY,
    }
}

/// Distance between a form and a unit target after normalizing the form,
/// minimized over the overall sign.
fn normalized_match(form: &[f64; 9], target: &[f64; 9]) -> f64 {
    let norm = form.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return f64::INFINITY;
    }
    let mut plus = 0.0;
    let mut minus = 0.0;
    for i in 0..9 {
        let f = form[i] / norm;
        plus += (f - target[i]) * (f - target[i]);
        minus += (f + target[i]) * (f + target[i]);
    }
    plus.min(minus).sqrt()
}

/// Closed-form inner solve at fixed angles.
///
/// Reshape the plus candidate `x(phi)` (negated when `flip`) to a 3x3
/// matrix M and posit `M = t (b c'^T + b' c^T)`. With `b` fixed inside the
/// column plane of M by `psi` and `b' = cos(mu) b + sin(mu) b_perp`, the
/// unit-norm constraints on c and c' give
///   `t sin(mu) = |M^T b_perp|` and `tan(mu) = 2 w.u / (|w|^2 - |u|^2)`
/// with `w = M^T b`, `u = M^T b_perp`. The minus form is then fixed and its
/// mismatch against `y(phi)` is the search residual. Returns the
/// decomposition (signs arranged for a positive-sign y match) and the sign
/// of the y fit before arrangement.
fn solve_candidate(
    v1: &[f64; 9],
    v2: &[f64; 9],
    phi: f64,
    psi: f64,
    flip: bool,
) -> Option<(ProductFormDecomposition, f64)> {
    let (x_dir, y_dir) = rotated_pair(v1, v2, phi);
    let sign = if flip { -1.0 } else { 1.0 };
    let m = {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = sign * x_dir[i * 3 + j];
            }
        }
        m
    };

    // Column plane of M from its 3x3 SVD.
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let svd = crate::linalg::svd(3, 3, &flat);
    if svd.values[0] < 1e-12 {
        return None;
    }
    let p1 = &svd.left[0];
    let p2 = &svd.left[1];
    let (sp, cp) = psi.sin_cos();
    let b = [
        cp * p1[0] + sp * p2[0],
        cp * p1[1] + sp * p2[1],
        cp * p1[2] + sp * p2[2],
    ];
    let b_perp = [
        -sp * p1[0] + cp * p2[0],
        -sp * p1[1] + cp * p2[1],
        -sp * p1[2] + cp * p2[2],
    ];

    let mt = |v: [f64; 3]| {
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    };
    let w = mt(b);
    let u = mt(b_perp);
    let m2 = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if m2 < 1e-12 {
        return None;
    }
    let a_dot = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let b_dot = w[0] * u[0] + w[1] * u[1] + w[2] * u[2];
    let c_dot = m2 * m2;

    let mut mu = if (2.0 * b_dot).abs() < 1e-300 && (a_dot - c_dot).abs() < 1e-300 {
        std::f64::consts::FRAC_PI_2
    } else {
        (2.0 * b_dot).atan2(a_dot - c_dot)
    };
    if mu <= 0.0 {
        mu += std::f64::consts::PI;
    }
    let (sin_mu, cos_mu) = mu.sin_cos();
    if sin_mu < 1e-9 {
        return None;
    }

    let t = m2 / sin_mu;
    let c = [u[0] / m2, u[1] / m2, u[2] / m2];
    let c_prime = [
        (sin_mu * w[0] - cos_mu * u[0]) / m2,
        (sin_mu * w[1] - cos_mu * u[1]) / m2,
        (sin_mu * w[2] - cos_mu * u[2]) / m2,
    ];
    let b_prime = [
        cos_mu * b[0] + sin_mu * b_perp[0],
        cos_mu * b[1] + sin_mu * b_perp[1],
        cos_mu * b[2] + sin_mu * b_perp[2],
    ];

    // Absorb the candidate sign: -M = t((-b) c'^T + (-b') c^T).
    let (b, b_prime) = if flip {
        (
            [-b[0], -b[1], -b[2]],
            [-b_prime[0], -b_prime[1], -b_prime[2]],
        )
    } else {
        (b, b_prime)
    };

    let mut decomposition = ProductFormDecomposition {
        b: UnitVector3::normalized(b[0], b[1], b[2]).ok()?,
        b_prime: UnitVector3::normalized(b_prime[0], b_prime[1], b_prime[2]).ok()?,
        c: UnitVector3::normalized(c[0], c[1], c[2]).ok()?,
        c_prime: UnitVector3::normalized(c_prime[0], c_prime[1], c_prime[2]).ok()?,
        scale: t,
    };

    // Orient the minus form toward +y: flipping (b', c) together negates the
    // minus form while fixing the plus form.
    let minus = decomposition.minus_form();
    let fit: f64 = minus.iter().zip(y_dir.iter()).map(|(a, b)| a * b).sum();
    if fit < 0.0 {
        decomposition.b_prime = -decomposition.b_prime;
        decomposition.c = -decomposition.c;
    }
    Some((decomposition, fit))
}

/// Express a single 9-vector in the plus form `t (b x c' + b' x c)`.
///
/// A rank-one reshape `b x c` is the degenerate case `b' = b`, `c' = c`
/// (principal angle zero). A rank-two reshape admits a one-parameter family
/// of decompositions; the returned member maximizes the angle between `b`
/// and `b'` (the best-conditioned representative). Rank three is not
/// decomposable and yields `None`.
pub fn decompose_product_form(v: &[f64; 9]) -> Option<ProductFormDecomposition> {
    let svd = crate::linalg::svd(3, 3, v);
    let s1 = svd.values[0];
    if s1 < 1e-12 {
        return None;
    }
    if svd.values[2] > RANK_TOL * s1 {
        return None;
    }
    if svd.values[1] <= RANK_TOL * s1 {
        // Rank one: v = s1 * u1 w1^T = (s1/2)(b c'^T + b' c^T) with b' = b,
        // c' = c.
        let b = UnitVector3::normalized(svd.left[0][0], svd.left[0][1], svd.left[0][2]).ok()?;
        let c = UnitVector3::normalized(svd.right[0][0], svd.right[0][1], svd.right[0][2]).ok()?;
        return Some(ProductFormDecomposition {
            b,
            b_prime: b,
            c,
            c_prime: c,
            scale: s1 / 2.0,
        });
    }

    // Rank two: scan b over the column plane, keep the best-conditioned
    // closed-form solution.
    let m: [[f64; 3]; 3] = [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]];
    let p1 = &svd.left[0];
    let p2 = &svd.left[1];
    let mut best: Option<(f64, ProductFormDecomposition)> = None;
    const STEPS: usize = 360;
    for k in 0..STEPS {
        let psi = std::f64::consts::PI * k as f64 / STEPS as f64;
        let (sp, cp) = psi.sin_cos();
        let b = [
            cp * p1[0] + sp * p2[0],
            cp * p1[1] + sp * p2[1],
            cp * p1[2] + sp * p2[2],
        ];
        let b_perp = [
            -sp * p1[0] + cp * p2[0],
            -sp * p1[1] + cp * p2[1],
            -sp * p1[2] + cp * p2[2],
        ];
        let mt = |x: [f64; 3]| {
            [
                m[0][0] * x[0] + m[1][0] * x[1] + m[2][0] * x[2],
                m[0][1] * x[0] + m[1][1] * x[1] + m[2][1] * x[2],
                m[0][2] * x[0] + m[1][2] * x[1] + m[2][2] * x[2],
            ]
        };
        let w = mt(b);
        let u = mt(b_perp);
        let m2 = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if m2 < 1e-12 {
            continue;
        }
        let a_dot = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let b_dot = w[0] * u[0] + w[1] * u[1] + w[2] * u[2];
        let c_dot = m2 * m2;
        let mut mu = if (2.0 * b_dot).abs() < 1e-300 && (a_dot - c_dot).abs() < 1e-300 {
            std::f64::consts::FRAC_PI_2
        } else {
            (2.0 * b_dot).atan2(a_dot - c_dot)
        };
        if mu <= 0.0 {
            mu += std::f64::consts::PI;
        }
        let (sin_mu, cos_mu) = mu.sin_cos();
        if sin_mu < 1e-9 {
            continue;
        }
        if best.as_ref().is_some_and(|(q, _)| *q >= sin_mu) {
            continue;
        }
        let t = m2 / sin_mu;
        let c = [u[0] / m2, u[1] / m2, u[2] / m2];
        let c_prime = [
            (sin_mu * w[0] - cos_mu * u[0]) / m2,
            (sin_mu * w[1] - cos_mu * u[1]) / m2,
            (sin_mu * w[2] - cos_mu * u[2]) / m2,
        ];
        let b_prime = [
            cos_mu * b[0] + sin_mu * b_perp[0],
            cos_mu * b[1] + sin_mu * b_perp[1],
            cos_mu * b[2] + sin_mu * b_perp[2],
        ];
        let candidate = ProductFormDecomposition {
            b: UnitVector3::normalized(b[0], b[1], b[2]).ok()?,
            b_prime: UnitVector3::normalized(b_prime[0], b_prime[1], b_prime[2]).ok()?,
            c: UnitVector3::normalized(c[0], c[1], c[2]).ok()?,
            c_prime: UnitVector3::normalized(c_prime[0], c_prime[1], c_prime[2]).ok()?,
            scale: t,
        };
        best = Some((sin_mu, candidate));
    }
    let (_, candidate) = best?;
    // Reject if the reassembly misses the input (rank-3 leakage).
    let plus = candidate.plus_form();
    let mut residual = 0.0;
    for i in 0..9 {
        let diff = candidate.scale * plus[i] - v[i];
        residual += diff * diff;
    }
    if residual.sqrt() > 1e-8 * s1.max(1.0) {
        return None;
    }
    Some(candidate)
}
