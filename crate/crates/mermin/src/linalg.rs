//! Small dense linear-algebra kernels.
//!
//! Two Jacobi-type routines back the whole pipeline: a one-sided Jacobi SVD
//! for real rectangular matrices and a cyclic Jacobi eigensolver for complex
//! Hermitian matrices. The matrices involved stay tiny (reshaped correlation
//! blocks are at most 81x81, density matrices at most 256x256), so the
//! O(n^3)-per-sweep cost never matters; what matters is that both routines
//! are deterministic and accurate to near machine precision.

use num_complex::Complex64;

/// Off-diagonal convergence threshold, relative to the Frobenius scale.
const JACOBI_OFF_TOL: f64 = 1e-14;
/// Sweep cap; cyclic Jacobi converges quadratically and never gets close.
const MAX_SWEEPS: usize = 64;

/// Thin singular value decomposition of a real `rows x cols` matrix.
///
/// Holds `k = min(rows, cols)` triplets: `values` sorted descending,
/// `left[i]` of length `rows`, `right[i]` of length `cols`, with
/// `A = sum_i values[i] * left[i] * right[i]^T`. Both vector sets are
/// orthonormal; vectors paired with zero singular values are completed by
/// Gram-Schmidt so orthonormality holds for the full set.
#[derive(Clone, Debug)]
pub struct Svd {
    pub values: Vec<f64>,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
}

/// One-sided Jacobi SVD of a real matrix given in row-major order.
///
/// Wide matrices are handled by factoring the transpose and swapping the
/// roles of the two vector sets.
pub fn svd(rows: usize, cols: usize, entries: &[f64]) -> Svd {
    assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
    assert!(rows > 0 && cols > 0, "svd of an empty matrix");

    if rows >= cols {
        let columns: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| entries[r * cols + c]).collect())
            .collect();
        let (values, col_side, rot_side) = svd_tall(columns);
        Svd {
            values,
            left: col_side,
            right: rot_side,
        }
    } else {
        // Transpose: columns of A^T are the rows of A.
        let columns: Vec<Vec<f64>> = (0..rows)
            .map(|r| entries[r * cols..(r + 1) * cols].to_vec())
            .collect();
        let (values, col_side, rot_side) = svd_tall(columns);
        Svd {
            values,
            left: rot_side,
            right: col_side,
        }
    }
}

/// Core one-sided Jacobi on a tall matrix stored as `w` columns of length
/// `h >= w`. Returns (singular values desc, normalized columns h-dim,
/// accumulated rotations w-dim).
fn svd_tall(mut cols: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let w = cols.len();
    let h = cols[0].len();
    debug_assert!(h >= w);

    // V starts as the identity, stored column-wise.
    let mut v: Vec<Vec<f64>> = (0..w)
        .map(|c| (0..w).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..MAX_SWEEPS {
        let fro2: f64 = cols.iter().map(|c| dot(c, c)).sum();
        let mut off2 = 0.0;
        let mut rotated = false;

        for p in 0..w {
            for q in (p + 1)..w {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                off2 += gamma * gamma;
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
                rotated = true;
            }
        }

        let scale = fro2.max(f64::MIN_POSITIVE);
        if !rotated || off2.sqrt() <= JACOBI_OFF_TOL * scale {
            break;
        }
    }

    // Sort by column norm, descending; stable so ties keep column order.
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..w).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    cols = order.iter().map(|&i| cols[i].clone()).collect();
    let v: Vec<Vec<f64>> = order.iter().map(|&i| v[i].clone()).collect();
    norms = order.iter().map(|&i| norms[i]).collect();

    // Normalize columns; complete directions lost to zero singular values.
    let sigma_max = norms[0];
    let mut col_side: Vec<Vec<f64>> = Vec::with_capacity(w);
    for (c, &nrm) in cols.iter().zip(norms.iter()) {
        if nrm > sigma_max * 1e-15 + f64::MIN_POSITIVE {
            col_side.push(c.iter().map(|x| x / nrm).collect());
        } else {
            col_side.push(orthonormal_complement(h, &col_side));
        }
    }

    (norms, col_side, v)
}

/// Deterministic Gram-Schmidt completion: the standard basis vector with the
/// largest residual against `existing`, orthogonalized and normalized.
fn orthonormal_complement(dim: usize, existing: &[Vec<f64>]) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..dim {
        let mut u = vec![0.0; dim];
        u[k] = 1.0;
        for e in existing {
            let proj = e[k];
            for (ui, ei) in u.iter_mut().zip(e.iter()) {
                *ui -= proj * ei;
            }
        }
        let nrm = dot(&u, &u).sqrt();
        if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
            best = Some((nrm, u));
        }
    }
    let (nrm, u) = best.expect("dim > 0");
    assert!(nrm > 1e-6, "no completion direction left");
    u.iter().map(|x| x / nrm).collect()
}

// p < q required.
fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    for (xp, xq) in head[p].iter_mut().zip(tail[0].iter_mut()) {
        let (a, b) = (*xp, *xq);
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenvalues of a complex Hermitian matrix, ascending, by cyclic Jacobi.
///
/// Each rotation is the real Jacobi rotation for off-diagonal magnitude
/// `|a_pq|` combined with the phase of `a_pq`; only eigenvalues are
/// accumulated. Hermiticity of the input is the caller's responsibility.
pub fn hermitian_eigenvalues(dim: usize, entries: &[Complex64]) -> Vec<f64> {
    assert_eq!(entries.len(), dim * dim, "entry count must be dim^2");
    if dim == 1 {
        return vec![entries[0].re];
    }
    let mut a = entries.to_vec();
    let idx = |r: usize, c: usize| r * dim + c;

    for _sweep in 0..MAX_SWEEPS {
        let mut off2 = 0.0;
        let mut fro2 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                let m2 = a[idx(r, c)].norm_sqr();
                fro2 += m2;
                if r != c {
                    off2 += m2;
                }
            }
        }
        let scale = fro2.sqrt().max(f64::MIN_POSITIVE);
        if off2.sqrt() <= JACOBI_OFF_TOL * scale {
            break;
        }

        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[idx(p, q)];
                let r = apq.norm();
                let app = a[idx(p, p)].re;
                let aqq = a[idx(q, q)].re;
                if r <= 1e-18 * (app.abs() + aqq.abs() + r) || r == 0.0 {
                    continue;
                }
                let u = apq / r;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                a[idx(p, p)] = Complex64::new(app - t * r, 0.0);
                a[idx(q, q)] = Complex64::new(aqq + t * r, 0.0);
                a[idx(p, q)] = Complex64::new(0.0, 0.0);
                a[idx(q, p)] = Complex64::new(0.0, 0.0);

                for k in 0..dim {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    let new_kp = c * akp - s * u.conj() * akq;
                    let new_kq = s * u * akp + c * akq;
                    a[idx(k, p)] = new_kp;
                    a[idx(k, q)] = new_kq;
                    a[idx(p, k)] = new_kp.conj();
                    a[idx(q, k)] = new_kq.conj();
                }
            }
        }
    }

    let mut eigs: Vec<f64> = (0..dim).map(|i| a[idx(i, i)].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_near(a: f64, b: f64, tol: f64, msg: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{msg}: {a} vs {b} (diff {})",
            (a - b).abs()
        );
    }

    fn reconstruct(s: &Svd, rows: usize, cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows * cols];
        for (k, &sv) in s.values.iter().enumerate() {
            for r in 0..rows {
                for c in 0..cols {
                    out[r * cols + c] += sv * s.left[k][r] * s.right[k][c];
                }
            }
        }
        out
    }

    fn check_orthonormal(vs: &[Vec<f64>], tol: f64) {
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_near(dot(&vs[i], &vs[j]), expect, tol, "orthonormality");
            }
        }
    }

    #[test]
    fn svd_diagonal() {
        let m = [5.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 1.0];
        let s = svd(3, 3, &m);
        assert_near(s.values[0], 5.0, 1e-12, "sigma0");
        assert_near(s.values[1], 3.0, 1e-12, "sigma1");
        assert_near(s.values[2], 1.0, 1e-12, "sigma2");
    }

    #[test]
    fn svd_known_2x2() {
        // A^T A has eigenvalues 25 and 1.
        let m = [3.0, 2.0, 2.0, 3.0];
        let s = svd(2, 2, &m);
        assert_near(s.values[0], 5.0, 1e-12, "sigma0");
        assert_near(s.values[1], 1.0, 1e-12, "sigma1");
    }

    #[test]
    fn svd_wide_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let entries: Vec<f64> = (0..27).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = svd(3, 9, &entries);
            assert_eq!(s.values.len(), 3);
            let rec = reconstruct(&s, 3, 9);
            for (a, b) in rec.iter().zip(entries.iter()) {
                assert_near(*a, *b, 1e-12, "reconstruction 3x9");
            }
            check_orthonormal(&s.left, 1e-12);
            check_orthonormal(&s.right, 1e-12);
            assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_square_9x9_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let entries: Vec<f64> = (0..81).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = svd(9, 9, &entries);
            let rec = reconstruct(&s, 9, 9);
            for (a, b) in rec.iter().zip(entries.iter()) {
                assert_near(*a, *b, 1e-11, "reconstruction 9x9");
            }
        }
    }

    #[test]
    fn svd_rank_deficient_completes_basis() {
        // Rank-1: outer product of two fixed vectors.
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, 0.0, 0.0, -0.5, 1.0, 0.0, 0.0, 0.0, 2.0];
        let mut m = vec![0.0; 27];
        for r in 0..3 {
            for c in 0..9 {
                m[r * 9 + c] = u[r] * v[c];
            }
        }
        let s = svd(3, 9, &m);
        assert!(s.values[0] > 1.0);
        assert_near(s.values[1], 0.0, 1e-12, "sigma1 zero");
        assert_near(s.values[2], 0.0, 1e-12, "sigma2 zero");
        check_orthonormal(&s.left, 1e-12);
        check_orthonormal(&s.right, 1e-12);
    }

    #[test]
    fn svd_zero_matrix() {
        let s = svd(3, 9, &vec![0.0; 27]);
        assert!(s.values.iter().all(|&x| x == 0.0));
        check_orthonormal(&s.left, 1e-12);
        check_orthonormal(&s.right, 1e-12);
    }

    #[test]
    fn hermitian_eigen_pauli_y() {
        let y = [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ];
        let e = hermitian_eigenvalues(2, &y);
        assert_near(e[0], -1.0, 1e-13, "lambda0");
        assert_near(e[1], 1.0, 1e-13, "lambda1");
    }

    #[test]
    fn hermitian_eigen_trace_and_frobenius_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let dim = 8;
            // Random Hermitian: H = (G + G^dagger)/2.
            let mut h = vec![Complex64::new(0.0, 0.0); dim * dim];
            for r in 0..dim {
                for c in 0..dim {
                    h[r * dim + c] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let mut herm = vec![Complex64::new(0.0, 0.0); dim * dim];
            for r in 0..dim {
                for c in 0..dim {
                    herm[r * dim + c] = (h[r * dim + c] + h[c * dim + r].conj()) * 0.5;
                }
            }
            let eigs = hermitian_eigenvalues(dim, &herm);
            let trace: f64 = (0..dim).map(|i| herm[i * dim + i].re).sum();
            let fro2: f64 = herm.iter().map(|z| z.norm_sqr()).sum();
            assert_near(eigs.iter().sum::<f64>(), trace, 1e-10, "eigen sum = trace");
            assert_near(
                eigs.iter().map(|e| e * e).sum::<f64>(),
                fro2,
                1e-9,
                "eigen square sum = frobenius^2",
            );
        }
    }

    #[test]
    fn hermitian_eigen_psd_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let dim = 6;
        let mut g = vec![Complex64::new(0.0, 0.0); dim * dim];
        for z in g.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        // G G^dagger is PSD.
        let mut gram = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += g[r * dim + k] * g[c * dim + k].conj();
                }
                gram[r * dim + c] = acc;
            }
        }
        let eigs = hermitian_eigenvalues(dim, &gram);
        assert!(eigs[0] >= -1e-12, "gram matrix eigenvalues non-negative");
    }
}
