//! Numerical oracle for the maximal operator expectation value.
//!
//! `seesaw_maximize` runs coordinate ascent over the 2n measurement
//! directions: the expectation is linear in each vector with the others
//! fixed, so each update snaps a vector to its closed-form conditional
//! optimum `g/|g|`. Restarts are seeded through independent ChaCha8 streams
//! (stream index = restart index), which makes runs reproducible bit for
//! bit and restart results independent of evaluation order.
//!
//! `lhv_bound_by_enumeration` computes the classical (local hidden variable)
//! maximum of the same operator exactly, by sweeping all deterministic
//! sign assignments of the 2n observables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{reshape_tensor, BoundsError, MeasurementSettings, UnitVector3};
use crate::qstate::{correlation_data, DensityMatrix, QStateError};

pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-12;
/// Default RNG seed when neither the CLI flag nor MERMIN_SEED is given.
pub const DEFAULT_SEED: u64 = 0x4D41424B; // "MABK"

/// Gradients below this norm leave the current vector unchanged: any unit
/// vector is conditionally optimal there.
const DEGENERATE_GRADIENT: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("see-saw oracle supports 2..=6 parties, state has {0}")]
    PartyCountOutOfRange(usize),

    #[error("the Mermin operator family is three-party, state has {0}")]
    MerminNeedsThreeParties(usize),

    #[error("deterministic enumeration supports {family} up to n = {max}, got {n}")]
    EnumerationTooLarge {
        family: &'static str,
        max: usize,
        n: usize,
    },

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    State(#[from] QStateError),

    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Which Bell-operator family the oracle drives. For n = 3 the two families
/// coincide; `Mermin` simply insists on three parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorFamily {
    Mermin,
    Mabk,
}

/// See-saw configuration. Identical configurations on identical states give
/// bit-identical results.
#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            seed: DEFAULT_SEED,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<(), OptimizerError> {
        if self.restarts == 0 {
            return Err(OptimizerError::InvalidConfig(
                "restarts must be >= 1".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(OptimizerError::InvalidConfig(
                "max_iterations must be >= 1".into(),
            ));
        }
        // Rejects NaN along with non-positive values.
        if self.convergence_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(OptimizerError::InvalidConfig(
                "convergence_tol must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Best value found by the oracle, with the settings that achieve it.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptResult {
    /// max |<B_n>| over all restarts and both signs.
    pub best_value: f64,
    pub converged: bool,
    pub iterations_total: usize,
    pub settings: MeasurementSettings,
    pub restart_values: Vec<f64>,
}

/// Raw per-party measurement vectors used inside the ascent. Entries are
/// unit vectors except transiently during gradient evaluation.
type RawSettings = Vec<([f64; 3], [f64; 3])>;

/// Maximize |<B_n>| over all measurement settings by seeded see-saw ascent.
pub fn seesaw_maximize(
    rho: &DensityMatrix,
    family: OperatorFamily,
    cfg: &OptimizerConfig,
) -> Result<OptResult, OptimizerError> {
    cfg.validate()?;
    let n = rho.n();
    if family == OperatorFamily::Mermin && n != 3 {
        return Err(OptimizerError::MerminNeedsThreeParties(n));
    }
    if !(2..=6).contains(&n) {
        return Err(OptimizerError::PartyCountOutOfRange(n));
    }

    let corr = correlation_data(rho)?;
    let tensor = reshape_tensor(&corr)?.entries().to_vec();

    let mut best_value = f64::NEG_INFINITY;
    let mut best_settings: Option<RawSettings> = None;
    let mut best_converged = false;
    let mut restart_values = Vec::with_capacity(cfg.restarts);
    let mut iterations_total = 0;

    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let init: RawSettings = (0..n)
            .map(|_| (random_unit_array(&mut rng), random_unit_array(&mut rng)))
            .collect();

        // The objective is defined with |.|, so ascend +<B> and -<B>
        // separately from the same initialization and keep the larger.
        let mut restart_best = f64::NEG_INFINITY;
        for sign in [1.0, -1.0] {
            let mut settings = init.clone();
            let outcome = ascend(&tensor, n, &mut settings, sign, cfg, None);
            iterations_total += outcome.iterations;
            let value = outcome.value.abs();
            if value > restart_best {
                restart_best = value;
            }
            if value > best_value {
                best_value = value;
                best_settings = Some(settings);
                best_converged = outcome.converged;
            }
        }
        restart_values.push(restart_best);
    }

    Ok(OptResult {
        best_value,
        converged: best_converged,
        iterations_total,
        settings: to_measurement_settings(&best_settings.expect("restarts >= 1")),
        restart_values,
    })
}

struct AscentOutcome {
    value: f64,
    iterations: usize,
    converged: bool,
}

/// One see-saw run: cycle parties 1..n, unprimed before primed, snapping
/// each vector to its conditional optimum, until the improvement per pass
/// drops below the tolerance. The objective `sign * <B_n>` never decreases.
fn ascend(
    tensor: &[f64],
    n: usize,
    settings: &mut RawSettings,
    sign: f64,
    cfg: &OptimizerConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> AscentOutcome {
    let mut value = sign * mabk_value(tensor, settings).0;
    if let Some(t) = trace.as_deref_mut() {
        t.push(value);
    }
    for iteration in 1..=cfg.max_iterations {
        for party in 0..n {
            for primed in [false, true] {
                let g = gradient(tensor, settings, party, primed, sign);
                let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                if norm < DEGENERATE_GRADIENT {
                    continue;
                }
                let unit = [g[0] / norm, g[1] / norm, g[2] / norm];
                if primed {
                    settings[party].1 = unit;
                } else {
                    settings[party].0 = unit;
                }
            }
        }
        let new_value = sign * mabk_value(tensor, settings).0;
        let improvement = new_value - value;
        value = new_value;
        if let Some(t) = trace.as_deref_mut() {
            t.push(value);
        }
        if improvement < cfg.convergence_tol {
            return AscentOutcome {
                value,
                iterations: iteration,
                converged: true,
            };
        }
    }
    AscentOutcome {
        value,
        iterations: cfg.max_iterations,
        converged: false,
    }
}

/// Gradient of `sign * <B_n>` with respect to one party's vector: the
/// expectation is linear in the pair (v, v'), so evaluating with the target
/// vector replaced by basis vectors and its partner zeroed reads it off.
fn gradient(
    tensor: &[f64],
    settings: &RawSettings,
    party: usize,
    primed: bool,
    sign: f64,
) -> [f64; 3] {
    let mut g = [0.0; 3];
    let mut probe = settings.clone();
    for (axis, slot) in g.iter_mut().enumerate() {
        let mut basis = [0.0; 3];
        basis[axis] = 1.0;
        if primed {
            probe[party] = (settings[party].0, basis);
            probe[party].0 = [0.0; 3];
        } else {
            probe[party] = (basis, settings[party].1);
            probe[party].1 = [0.0; 3];
        }
        *slot = sign * mabk_value(tensor, &probe).0;
        probe[party] = settings[party];
    }
    g
}

/// (<B_n>, <B_n'>) by recursive contraction of the pure-correlation tensor.
/// The tensor argument is the 3^n block in lexicographic (row-major) order;
/// vectors need not be unit length — the form is multilinear.
fn mabk_value(tensor: &[f64], settings: &[([f64; 3], [f64; 3])]) -> (f64, f64) {
    let n = settings.len();
    debug_assert_eq!(tensor.len(), 3usize.pow(n as u32));
    if n == 2 {
        let (a, ap) = settings[0];
        let (b, bp) = settings[1];
        let sum = [b[0] + bp[0], b[1] + bp[1], b[2] + bp[2]];
        let diff = [b[0] - bp[0], b[1] - bp[1], b[2] - bp[2]];
        let bilinear = |x: [f64; 3], y: [f64; 3]| {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += x[i] * tensor[i * 3 + j] * y[j];
                }
            }
            acc
        };
        let value = bilinear(a, sum) + bilinear(ap, diff);
        let swapped = bilinear(ap, sum) - bilinear(a, diff);
        return (value, swapped);
    }

    let (v, vp) = settings[n - 1];
    let p = [
        (v[0] + vp[0]) / 2.0,
        (v[1] + vp[1]) / 2.0,
        (v[2] + vp[2]) / 2.0,
    ];
    let m = [
        (v[0] - vp[0]) / 2.0,
        (v[1] - vp[1]) / 2.0,
        (v[2] - vp[2]) / 2.0,
    ];
    let stride = tensor.len() / 3;
    let mut t_p = vec![0.0; stride];
    let mut t_m = vec![0.0; stride];
    for i in 0..stride {
        let base = i * 3;
        let (x, y, z) = (tensor[base], tensor[base + 1], tensor[base + 2]);
        t_p[i] = x * p[0] + y * p[1] + z * p[2];
        t_m[i] = x * m[0] + y * m[1] + z * m[2];
    }
    // Contracting the last party leaves the tensor for the first n-1 in the
    // same lexicographic layout. Watch the index order: the last party is
    // the fastest-varying axis.
    let (vp_val, vp_swapped) = mabk_value(&t_p, &settings[..n - 1]);
    let (vm_val, vm_swapped) = mabk_value(&t_m, &settings[..n - 1]);
    (vp_val + vm_swapped, vp_swapped - vm_val)
}

fn to_measurement_settings(raw: &RawSettings) -> MeasurementSettings {
    MeasurementSettings::from_vectors(
        raw.iter()
            .map(|(v, vp)| {
                (
                    UnitVector3::normalized(v[0], v[1], v[2]).expect("unit by construction"),
                    UnitVector3::normalized(vp[0], vp[1], vp[2]).expect("unit by construction"),
                )
            })
            .collect(),
    )
    .expect("party count preserved")
}

/// Uniform random direction by rejection sampling from the unit ball; avoids
/// any libm dependence in the sampling path.
fn random_unit_array(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let x = rng.gen_range(-1.0..1.0);
        let y = rng.gen_range(-1.0..1.0);
        let z = rng.gen_range(-1.0..1.0);
        let n2: f64 = x * x + y * y + z * z;
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [x / n, y / n, z / n];
        }
    }
}

// ---------------------------------------------------------------------------
// Classical bounds by deterministic enumeration
// ---------------------------------------------------------------------------

/// Exact LHV bound of the Mermin (n = 3) or MABK operator by exhaustive
/// enumeration of the 2^(2n) deterministic +/-1 assignments.
pub fn lhv_bound_by_enumeration(family: OperatorFamily, n: usize) -> Result<f64, OptimizerError> {
    match family {
        OperatorFamily::Mermin => {
            if n != 3 {
                return Err(OptimizerError::MerminNeedsThreeParties(n));
            }
        }
        OperatorFamily::Mabk => {
            if !(2..=5).contains(&n) {
                return Err(OptimizerError::EnumerationTooLarge {
                    family: "mabk",
                    max: 5,
                    n,
                });
            }
        }
    }
    Ok(lhv_bound_recursive(n))
}

/// Enumeration core, shared with the bound report (which needs a classical
/// bound for every supported n). Evaluates the operator's coefficient
/// polynomial on every deterministic assignment via the scalar recursion
/// `f_k = f_{k-1} (a_k + a_k')/2 + f_{k-1}' (a_k - a_k')/2`; each value is
/// an exact small integer, so the maximum is exact.
pub(crate) fn lhv_bound_recursive(n: usize) -> f64 {
    debug_assert!((2..=crate::qstate::MAX_QUBITS).contains(&n));
    let assignments = 1usize << (2 * n);
    let mut best = f64::NEG_INFINITY;
    for bits in 0..assignments {
        let sign_of = |k: usize| if bits >> k & 1 == 0 { 1.0 } else { -1.0 };
        // Party i uses bits 2i (unprimed) and 2i+1 (primed).
        let a1 = sign_of(0);
        let a1p = sign_of(1);
        let a2 = sign_of(2);
        let a2p = sign_of(3);
        let mut f = a1 * (a2 + a2p) + a1p * (a2 - a2p);
        let mut f_swapped = a1p * (a2 + a2p) + a1 * (a2p - a2);
        for party in 2..n {
            let v = sign_of(2 * party);
            let vp = sign_of(2 * party + 1);
            let p = (v + vp) / 2.0;
            let m = (v - vp) / 2.0;
            let next = f * p + f_swapped * m;
            let next_swapped = f_swapped * p - f * m;
            f = next;
            f_swapped = next_swapped;
        }
        if f > best {
            best = f;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Grid refinement
// ---------------------------------------------------------------------------

/// Local verification sweep: scan a spherical-cap grid of angular `radius`
/// around every measurement vector, adopting any improvement, until a full
/// pass finds none above 1e-9. Confirms (or escapes) local optimality of a
/// candidate optimum.
pub fn grid_refine(
    rho: &DensityMatrix,
    start: &MeasurementSettings,
    radius: f64,
    steps: usize,
) -> Result<OptResult, OptimizerError> {
    let n = rho.n();
    if start.n() != n {
        return Err(OptimizerError::Bounds(BoundsError::WrongPartyCount {
            expected: n,
            got: start.n(),
        }));
    }
    if !(2..=6).contains(&n) {
        return Err(OptimizerError::PartyCountOutOfRange(n));
    }
    let corr = correlation_data(rho)?;
    let tensor = reshape_tensor(&corr)?.entries().to_vec();

    let mut settings: RawSettings = start
        .pairs()
        .iter()
        .map(|p| (p.v.as_array(), p.v_prime.as_array()))
        .collect();
    let mut best = mabk_value(&tensor, &settings).0.abs();
    let mut passes = 0;

    if radius > 0.0 && steps > 0 {
        const IMPROVEMENT_TOL: f64 = 1e-9;
        const MAX_PASSES: usize = 32;
        loop {
            passes += 1;
            let mut improved = false;
            for party in 0..n {
                for primed in [false, true] {
                    let current = if primed {
                        settings[party].1
                    } else {
                        settings[party].0
                    };
                    let (t1, t2) = tangent_basis(current);
                    for ir in 1..=steps {
                        let theta = radius * ir as f64 / steps as f64;
                        let (sin_t, cos_t) = theta.sin_cos();
                        for ia in 0..steps.max(1) {
                            let psi = 2.0 * std::f64::consts::PI * ia as f64 / steps as f64;
                            let (sin_p, cos_p) = psi.sin_cos();
                            let candidate = [
                                cos_t * current[0] + sin_t * (cos_p * t1[0] + sin_p * t2[0]),
                                cos_t * current[1] + sin_t * (cos_p * t1[1] + sin_p * t2[1]),
                                cos_t * current[2] + sin_t * (cos_p * t1[2] + sin_p * t2[2]),
                            ];
                            let mut probe = settings.clone();
                            if primed {
                                probe[party].1 = candidate;
                            } else {
                                probe[party].0 = candidate;
                            }
                            let value = mabk_value(&tensor, &probe).0.abs();
                            if value > best + IMPROVEMENT_TOL {
                                best = value;
                                settings = probe;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved || passes >= MAX_PASSES {
                break;
            }
        }
    }

    Ok(OptResult {
        best_value: best,
        converged: true,
        iterations_total: passes,
        settings: to_measurement_settings(&settings),
        restart_values: vec![best],
    })
}

/// Deterministic orthonormal tangent frame at a unit vector.
fn tangent_basis(v: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // Cross with the axis least aligned with v.
    let axis = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
        [1.0, 0.0, 0.0]
    } else if v[1].abs() <= v[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let t1 = cross(v, axis);
    let n1 = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    let t1 = [t1[0] / n1, t1[1] / n1, t1[2] / n1];
    let t2 = cross(v, t1);
    (t1, t2)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
