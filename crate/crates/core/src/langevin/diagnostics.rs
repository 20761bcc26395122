//! Simulation diagnostics: coupling contraction, convexity probing, spectral
//! reports with a support-connectivity verdict, and cross-N norm
//! stabilization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ncpoly::{self, NCPoly, Potential};
use crate::numeric::{linear_fit, median, LinearFit};
use crate::{C64, CMat};

use super::{
    brownian_increment, gue, hermitian_eigenvalues, op_norm, random_tuple_in_ball, scale_mat,
    Ensemble, LangevinError, SimConfig, Trajectory,
};

/// Log-distance trace of two trajectories driven by the same noise.
#[derive(Clone, Debug)]
pub struct CouplingDecay {
    /// `(t, distance)` samples; the distance is the max over coordinates of
    /// the operator norm.
    pub points: Vec<(f64, f64)>,
    /// Least-squares fit of `log distance` against `t`, when defined.
    pub log_fit: Option<LinearFit>,
}

/// Evolve two copies (initial data `z` and zero) under the identical noise
/// stream and record their operator-norm distance.
pub fn coupling_decay(
    cfg: &SimConfig,
    z: &[CMat],
    t_max: f64,
    record_stride: usize,
) -> Result<CouplingDecay, LangevinError> {
    cfg.validate()?;
    let grads: Vec<NCPoly> = cfg.potential.gradients()?;
    let mut x = Ensemble::with_initial(z.to_vec(), cfg.seed);
    let mut y = Ensemble::new(cfg.n, cfg.m, cfg.seed);
    let mut noise = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::new();
    let record = |x: &Ensemble, y: &Ensemble, t: f64, points: &mut Vec<(f64, f64)>| {
        let d = (0..cfg.m)
            .map(|i| op_norm(&(&x.mats[i] - &y.mats[i])))
            .fold(0.0, f64::max);
        points.push((t, d));
    };
    record(&x, &y, 0.0, &mut points);
    let steps = (t_max / cfg.dt).round() as usize;
    for s in 1..=steps {
        let inc = brownian_increment(cfg.n, cfg.m, cfg.dt, &mut noise);
        for ens in [&mut x, &mut y] {
            let drifts: Vec<CMat> = grads
                .iter()
                .map(|g| ncpoly::evaluate(g, &ens.mats))
                .collect::<Result<_, _>>()?;
            for i in 0..cfg.m {
                let mut next = ens.mats[i].clone();
                for col in 0..cfg.n {
                    for row in 0..cfg.n {
                        next[(row, col)] +=
                            inc[i][(row, col)] - drifts[i][(row, col)] * (0.5 * cfg.dt);
                    }
                }
                ens.mats[i] = ncpoly::hermitian_part(&next);
            }
            ens.time += cfg.dt;
        }
        if s % record_stride == 0 {
            record(&x, &y, s as f64 * cfg.dt, &mut points);
        }
    }
    let positive: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, d)| *d > 1e-290)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    let log_fit = if positive.len() >= 2 {
        let (ts, ls): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        Some(linear_fit(&ts, &ls))
    } else {
        None
    };
    Ok(CouplingDecay { points, log_fit })
}

/// Result of sampling the local convexity inequality.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexityReport {
    /// Smallest eigenvalue of the probe expression over all samples: the
    /// operator-inequality reading. Strictly stronger than the trace form;
    /// polynomial maps like `x ↦ x³` are not operator monotone, so small
    /// negative values here occur even for potentials whose trace form is
    /// convex.
    pub min_eigenvalue: f64,
    /// Smallest normalized trace of the probe expression: the trace-form
    /// reading, equivalent to strict convexity of `X ↦ Tr V(X)`.
    pub min_trace: f64,
    /// Sample index attaining the trace-form minimum, when negative.
    pub witness: Option<usize>,
    /// True when no sampled pair refutes trace-form `(c, M)`-convexity. A
    /// pass is evidence only; a fail is a certificate.
    pub pass: bool,
}

/// Sample pairs `(X, Y)` of Hermitian tuples with norms ≤ `radius` and probe
/// `[DV(X) − DV(Y)].(X − Y) − c (X − Y).(X − Y)`,
/// where `A.B = ½ Σ (A_i B_i + B_i A_i)`; both the smallest eigenvalue and
/// the smallest normalized trace over the samples are reported.
pub fn convexity_probe(
    potential: &Potential,
    c: f64,
    radius: f64,
    samples: usize,
    n: usize,
    seed: u64,
) -> Result<ConvexityReport, LangevinError> {
    let grads: Vec<NCPoly> = potential.gradients()?;
    let m = potential.ambient();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_eig = f64::INFINITY;
    let mut min_trace = f64::INFINITY;
    let mut witness = None;
    for s in 0..samples {
        let x = random_tuple_in_ball(m, n, radius, &mut rng);
        let y = random_tuple_in_ball(m, n, radius, &mut rng);
        let dx: Vec<CMat> = (0..m).map(|i| &x[i] - &y[i]).collect();
        let dgrad: Vec<CMat> = (0..m)
            .map(|i| {
                Ok::<CMat, LangevinError>(
                    &ncpoly::evaluate(&grads[i], &x)? - &ncpoly::evaluate(&grads[i], &y)?,
                )
            })
            .collect::<Result<_, _>>()?;
        let mut expr = faer::Mat::<C64>::zeros(n, n);
        for i in 0..m {
            // ½ (A B + B A) − c ½ (B B + B B)
            let ab = &(&dgrad[i] * &dx[i]) + &(&dx[i] * &dgrad[i]);
            let bb = &dx[i] * &dx[i];
            for col in 0..n {
                for row in 0..n {
                    expr[(row, col)] += ab[(row, col)] * 0.5 - bb[(row, col)] * c;
                }
            }
        }
        let herm = ncpoly::hermitian_part(&expr);
        let eigs = hermitian_eigenvalues(&herm);
        min_eig = min_eig.min(eigs.first().copied().unwrap_or(0.0));
        let tr = (0..n).map(|k| herm[(k, k)].re).sum::<f64>() / n as f64;
        if tr < min_trace {
            min_trace = tr;
            witness = Some(s);
        }
    }
    let pass = min_trace >= -1e-10;
    Ok(ConvexityReport {
        min_eigenvalue: min_eig,
        min_trace,
        witness: if pass { None } else { witness },
        pass,
    })
}

/// Gap-detector thresholds for the connectivity verdict. All heuristic and
/// configurable: connectivity is an N → ∞ statement.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapParams {
    /// Extreme eigenvalues excluded on each side before gap detection.
    pub k_edge: usize,
    /// Gap must exceed this multiple of the median bulk spacing ...
    pub ratio_threshold: f64,
    /// ... and this fraction of the full spectral range.
    pub abs_threshold_frac: f64,
}

impl Default for GapParams {
    fn default() -> Self {
        GapParams { k_edge: 3, ratio_threshold: 8.0, abs_threshold_frac: 0.05 }
    }
}

/// Sorted spectrum of an observable with the gap statistic and verdict.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub observable: String,
    pub eigenvalues: Vec<f64>,
    /// Midpoint of the widest bulk gap.
    pub gap_location: f64,
    pub gap_width: f64,
    /// Width relative to the median bulk spacing.
    pub gap_relative_width: f64,
    pub connected: bool,
}

/// Verdict from an already-pooled sorted spectrum.
pub fn spectral_report_from_eigenvalues(
    observable: String,
    mut eigenvalues: Vec<f64>,
    params: &GapParams,
) -> SpectralReport {
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = eigenvalues.len();
    let lo = params.k_edge.min(n.saturating_sub(2));
    let hi = n.saturating_sub(params.k_edge).max(lo + 2);
    let bulk = &eigenvalues[lo..hi];
    let spacings: Vec<f64> = bulk.windows(2).map(|w| w[1] - w[0]).collect();
    if spacings.is_empty() {
        return SpectralReport {
            observable,
            eigenvalues,
            gap_location: 0.0,
            gap_width: 0.0,
            gap_relative_width: 0.0,
            connected: true,
        };
    }
    let med = median(&spacings).max(1e-300);
    let (arg, widest) = spacings
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, w)| (i, *w))
        .unwrap();
    let range = eigenvalues[n - 1] - eigenvalues[0];
    let relative = widest / med;
    let disconnected =
        relative > params.ratio_threshold && widest > params.abs_threshold_frac * range;
    SpectralReport {
        observable,
        gap_location: 0.5 * (bulk[arg] + bulk[arg + 1]),
        gap_width: widest,
        gap_relative_width: relative,
        connected: !disconnected,
        eigenvalues,
    }
}

/// Eigenvalues of a self-adjoint observable on the current state.
pub fn observable_eigenvalues(
    mats: &[CMat],
    observable: &NCPoly,
) -> Result<Vec<f64>, LangevinError> {
    if *observable != observable.involution_self_adjoint() {
        return Err(LangevinError::NotSelfAdjoint(observable.to_string()));
    }
    let e = ncpoly::evaluate(observable, mats)?;
    Ok(hermitian_eigenvalues(&e))
}

/// Run a trajectory and pool the observable spectrum over `snapshots`
/// post-burn-in snapshots spaced by the thinning stride.
pub fn spectral_survey(
    cfg: &SimConfig,
    observable: &NCPoly,
    snapshots: usize,
    params: &GapParams,
) -> Result<SpectralReport, LangevinError> {
    if *observable != observable.involution_self_adjoint() {
        return Err(LangevinError::NotSelfAdjoint(observable.to_string()));
    }
    let mut traj = Trajectory::new(cfg.clone())?;
    traj.run_until(cfg.burn_in)?;
    let mut pooled = Vec::with_capacity(snapshots * cfg.n);
    for _ in 0..snapshots {
        for _ in 0..cfg.thinning {
            traj.step()?;
        }
        pooled.extend(observable_eigenvalues(traj.ensemble().matrices(), observable)?);
    }
    Ok(spectral_report_from_eigenvalues(observable.to_string(), pooled, params))
}

/// One row of the cross-N norm table.
#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub n: usize,
    /// Time-averaged operator norm of the observable at stationarity.
    pub norm_mean: f64,
    pub norm_se: f64,
}

/// Operator norm of `P(X^N)` at stationarity for each N, averaged over
/// post-burn-in snapshots. Seeds derive deterministically from the base
/// config seed and N.
pub fn norm_stabilization(
    base: &SimConfig,
    observable: &NCPoly,
    n_list: &[usize],
    snapshots: usize,
) -> Result<Vec<NormRow>, LangevinError> {
    n_list
        .par_iter()
        .map(|&n| {
            let mut cfg = base.clone();
            cfg.n = n;
            cfg.seed = base.seed.wrapping_add(n as u64);
            let mut traj = Trajectory::new(cfg.clone())?;
            traj.run_until(cfg.burn_in)?;
            let mut norms = Vec::with_capacity(snapshots);
            for _ in 0..snapshots {
                for _ in 0..cfg.thinning {
                    traj.step()?;
                }
                let e = ncpoly::evaluate(observable, traj.ensemble().matrices())?;
                norms.push(op_norm(&e));
            }
            let mean = norms.iter().sum::<f64>() / norms.len() as f64;
            let var = norms.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (norms.len() as f64 - 1.0).max(1.0);
            Ok(NormRow { n, norm_mean: mean, norm_se: (var / norms.len() as f64).sqrt() })
        })
        .collect()
}

/// Helper shared by tests: a random Hermitian tuple scaled to exact norm.
pub fn tuple_with_norm(m: usize, n: usize, norm: f64, seed: u64) -> Vec<CMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            let g = gue(n, &mut rng);
            let nrm = op_norm(&g).max(1e-12);
            scale_mat(&g, C64::new(norm / nrm, 0.0))
        })
        .collect()
}
