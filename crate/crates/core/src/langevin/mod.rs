//! Finite-N matrix Langevin dynamics.
//!
//! Euler-Maruyama integration of `dX = dH − ½ DV(X) dt` on an m-tuple of
//! N×N Hermitian matrices, where `H` is a Hermitian Brownian motion with
//! entry variance `t/N`. Each step re-symmetrizes exactly, so Hermiticity is
//! structural. Trajectories are deterministic given the seed: the noise
//! stream is a counter-based generator whose position is part of the
//! checkpoint format.
//!
//! After burn-in the time marginal samples the Gibbs measure
//! `exp(−N Tr V(X)) dX`, whose normalized trace observables converge to the
//! Schwinger-Dyson law as N grows; the diagnostics in [`diagnostics`] measure
//! exactly that, plus the coupling contraction rate, local convexity of the
//! potential, spectral densities and support connectivity.

use std::collections::BTreeMap;

use faer::Mat;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ncpoly::{self, text, NCPoly, PolyError, Potential, Word};
use crate::{C64, CMat};

pub mod checkpoint;
pub mod diagnostics;

pub use diagnostics::{
    convexity_probe, coupling_decay, norm_stabilization, spectral_report_from_eigenvalues,
    spectral_survey, ConvexityReport, CouplingDecay, GapParams, NormRow, SpectralReport,
};

#[derive(Debug, Error)]
pub enum LangevinError {
    #[error("config validation: {0}")]
    Validation(String),
    #[error("non-finite matrix entries at t = {time}: dt too large or potential not convex on the reached region")]
    Blowup { time: f64 },
    #[error("observable is not self-adjoint: {0}")]
    NotSelfAdjoint(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_true() -> bool {
    true
}

/// Potential specification as it appears in JSON configs: a polynomial in the
/// text grammar plus mode flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub text: String,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_true")]
    pub self_adjoint: bool,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential, PolyError> {
        let poly = match self.m {
            Some(m) => text::parse_poly(&self.text, m)?,
            None => text::parse_poly_auto(&self.text)?,
        };
        Potential::from_ncpoly(&poly, self.self_adjoint)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawSimConfig {
    n: usize,
    #[serde(default)]
    m: Option<usize>,
    dt: f64,
    t_max: f64,
    #[serde(default)]
    burn_in: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_thinning")]
    thinning: usize,
    potential: PotentialSpec,
    #[serde(default)]
    norm_cap: Option<f64>,
    #[serde(default)]
    observables: Vec<String>,
}

fn default_thinning() -> usize {
    10
}

/// Full simulation configuration.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    pub dt: f64,
    pub t_max: f64,
    pub burn_in: f64,
    pub seed: u64,
    /// Observables are sampled every `thinning` steps after burn-in.
    pub thinning: usize,
    pub potential: Potential,
    /// Spectral clipping radius; `None` disables the cutoff.
    pub norm_cap: Option<f64>,
    pub observables: Vec<Word>,
}

impl SimConfig {
    pub fn new(potential: Potential, n: usize, dt: f64, t_max: f64, burn_in: f64, seed: u64) -> Self {
        let m = potential.ambient();
        SimConfig {
            n,
            m,
            dt,
            t_max,
            burn_in,
            seed,
            thinning: default_thinning(),
            observables: default_observables(m),
            potential,
            norm_cap: None,
        }
    }

    pub fn from_json(src: &str) -> Result<Self, LangevinError> {
        let raw: RawSimConfig = serde_json::from_str(src)
            .map_err(|e| LangevinError::Validation(format!("bad config JSON: {e}")))?;
        let potential = raw.potential.build()?;
        let m = raw.m.unwrap_or_else(|| potential.ambient());
        if m != potential.ambient() {
            return Err(LangevinError::Validation(format!(
                "config m = {m} but potential has {} letters",
                potential.ambient()
            )));
        }
        let observables = if raw.observables.is_empty() {
            default_observables(m)
        } else {
            raw.observables
                .iter()
                .map(|s| text::parse_word(s, m))
                .collect::<Result<Vec<_>, _>>()?
        };
        let cfg = SimConfig {
            n: raw.n,
            m,
            dt: raw.dt,
            t_max: raw.t_max,
            burn_in: raw.burn_in,
            seed: raw.seed,
            thinning: raw.thinning,
            potential,
            norm_cap: raw.norm_cap,
            observables,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "m": self.m,
            "dt": self.dt,
            "t_max": self.t_max,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "thinning": self.thinning,
            "potential": {
                "text": self.potential.as_ncpoly().to_string(),
                "m": self.m,
                "self_adjoint": self.potential.is_self_adjoint_mode(),
            },
            "norm_cap": self.norm_cap,
            "observables": self.observables.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        })
    }

    /// Sampled Lipschitz bound of `DV` on the ball of radius `radius`.
    pub fn lipschitz_estimate(&self, radius: f64, samples: usize, probe_n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x4c69_7073);
        let grads: Vec<NCPoly> = self.potential.gradients().expect("validated potential");
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = random_tuple_in_ball(self.m, probe_n, radius, &mut rng);
            let y = random_tuple_in_ball(self.m, probe_n, radius, &mut rng);
            let mut num: f64 = 0.0;
            let mut den: f64 = 0.0;
            for i in 0..self.m {
                let dx = &x[i] - &y[i];
                let dgrad = &ncpoly::evaluate(&grads[i], &x).unwrap()
                    - &ncpoly::evaluate(&grads[i], &y).unwrap();
                num = num.max(op_norm(&dgrad));
                den = den.max(op_norm(&dx));
            }
            if den > 1e-12 {
                worst = worst.max(num / den);
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<(), LangevinError> {
        if self.n == 0 {
            return Err(LangevinError::Validation("N must be positive".into()));
        }
        if self.m != self.potential.ambient() {
            return Err(LangevinError::Validation("m mismatch with potential".into()));
        }
        if !(self.dt > 0.0) {
            return Err(LangevinError::Validation("dt must be positive".into()));
        }
        if !(self.potential.quadratic_weight() > 0.0) {
            return Err(LangevinError::Validation("quadratic weight c must be positive".into()));
        }
        if self.thinning == 0 {
            return Err(LangevinError::Validation("thinning stride must be positive".into()));
        }
        for w in &self.observables {
            if w.max_letter_index() > self.m {
                return Err(LangevinError::Validation(format!(
                    "observable {w} uses letters beyond m = {}",
                    self.m
                )));
            }
        }
        // stability: dt (c + L) < 2 with L the measured Lipschitz bound of DV
        // on the reachable ball
        let radius = self.norm_cap.unwrap_or(3.0 / self.potential.quadratic_weight().sqrt());
        let lip = self.lipschitz_estimate(radius, 24, 12.min(self.n.max(2)));
        let c = self.potential.quadratic_weight();
        if self.dt * (c + lip) >= 2.0 {
            return Err(LangevinError::Validation(format!(
                "stability violated: dt (c + L) = {:.3} >= 2 with measured L = {lip:.3} on radius {radius:.2}",
                self.dt * (c + lip)
            )));
        }
        Ok(())
    }
}

fn default_observables(m: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for i in 1..=m {
        for k in 1..=4 {
            out.push(Word::power(i, k));
        }
    }
    out
}

/// An m-tuple of Hermitian matrices with its noise stream.
#[derive(Clone, Debug)]
pub struct Ensemble {
    mats: Vec<CMat>,
    time: f64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl Ensemble {
    /// Zero initial data.
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Ensemble {
            mats: (0..m).map(|_| Mat::zeros(n, n)).collect(),
            time: 0.0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Explicit initial data (symmetrized defensively).
    pub fn with_initial(mats: Vec<CMat>, seed: u64) -> Self {
        let mats = mats.iter().map(ncpoly::hermitian_part).collect();
        Ensemble { mats, time: 0.0, seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub(crate) fn restore(mats: Vec<CMat>, time: f64, seed: u64, stream_pos: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(stream_pos as u128);
        Ensemble { mats, time, seed, rng }
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.mats
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_position(&self) -> u64 {
        self.rng.get_word_pos() as u64
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.mats.first().map(|a| a.nrows()).unwrap_or(0), self.mats.len())
    }
}

/// Independent Hermitian Brownian increments over time `dt`: off-diagonal
/// entries `(B + iB')/√(2N)` and real diagonal `B/√N`, giving entry variance
/// `dt/N` throughout.
pub fn brownian_increment(n: usize, m: usize, dt: f64, rng: &mut ChaCha8Rng) -> Vec<CMat> {
    let diag_sd = (dt / n as f64).sqrt();
    let off_sd = (dt / (2.0 * n as f64)).sqrt();
    (0..m)
        .map(|_| {
            let mut h = Mat::<C64>::zeros(n, n);
            for k in 0..n {
                let g: f64 = rng.sample(StandardNormal);
                h[(k, k)] = C64::new(g * diag_sd, 0.0);
                for l in k + 1..n {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let v = C64::new(re * off_sd, im * off_sd);
                    h[(k, l)] = v;
                    h[(l, k)] = v.conj();
                }
            }
            h
        })
        .collect()
}

/// Standard GUE sample: Hermitian, entry variance `1/n`, spectrum on `[-2, 2]`.
pub fn gue(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut h = brownian_increment(n, 1, 1.0, rng);
    h.pop().unwrap()
}

/// Random Hermitian tuple with operator norms at most `radius`.
pub fn random_tuple_in_ball(m: usize, n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<CMat> {
    (0..m)
        .map(|_| {
            let g = gue(n, rng);
            let nrm = op_norm(&g).max(1e-12);
            let scale = radius * rng.random_range(0.0..1.0f64).sqrt() / nrm;
            scale_mat(&g, C64::new(scale, 0.0))
        })
        .collect()
}

pub(crate) fn scale_mat(a: &CMat, c: C64) -> CMat {
    let mut out = a.clone();
    for j in 0..out.ncols() {
        for i in 0..out.nrows() {
            out[(i, j)] *= c;
        }
    }
    out
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &CMat) -> f64 {
    let gram = a.adjoint() * a;
    let eigs = gram
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("eigensolve failed");
    eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Max over coordinates of the operator norm: the tuple norm.
pub fn tuple_norm(mats: &[CMat]) -> f64 {
    mats.iter().map(op_norm).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    a.self_adjoint_eigenvalues(faer::Side::Lower).expect("eigensolve failed")
}

/// A configured trajectory: ensemble plus precomputed drift gradients.
pub struct Trajectory {
    cfg: SimConfig,
    grads: Vec<NCPoly>,
    ens: Ensemble,
}

impl Trajectory {
    pub fn new(cfg: SimConfig) -> Result<Self, LangevinError> {
        cfg.validate()?;
        let ens = Ensemble::new(cfg.n, cfg.m, cfg.seed);
        Self::from_ensemble(cfg, ens)
    }

    pub fn from_ensemble(cfg: SimConfig, ens: Ensemble) -> Result<Self, LangevinError> {
        let (n, m) = ens.dims();
        if n != cfg.n || m != cfg.m {
            return Err(LangevinError::Validation(format!(
                "ensemble is {m}-tuple of {n}x{n}, config wants {}x{}",
                cfg.m, cfg.n
            )));
        }
        let grads = cfg.potential.gradients()?;
        Ok(Trajectory { cfg, grads, ens })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ens
    }

    pub fn into_ensemble(self) -> Ensemble {
        self.ens
    }

    /// One Euler-Maruyama step with exact re-symmetrization.
    pub fn step(&mut self) -> Result<(), LangevinError> {
        let dt = self.cfg.dt;
        let inc = brownian_increment(self.cfg.n, self.cfg.m, dt, &mut self.ens.rng);
        // evaluate all drifts on the pre-step state
        let drifts: Vec<CMat> = self
            .grads
            .iter()
            .map(|g| ncpoly::evaluate(g, &self.ens.mats))
            .collect::<Result<_, _>>()?;
        for i in 0..self.cfg.m {
            let n = self.cfg.n;
            let mut next = self.ens.mats[i].clone();
            for col in 0..n {
                for row in 0..n {
                    next[(row, col)] +=
                        inc[i][(row, col)] - drifts[i][(row, col)] * (0.5 * dt);
                }
            }
            let mut herm = ncpoly::hermitian_part(&next);
            if let Some(cap) = self.cfg.norm_cap {
                herm = clamp_spectrum(&herm, cap);
            }
            self.ens.mats[i] = herm;
        }
        self.ens.time += dt;
        for a in &self.ens.mats {
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    if !a[(i, j)].re.is_finite() || !a[(i, j)].im.is_finite() {
                        return Err(LangevinError::Blowup { time: self.ens.time });
                    }
                }
            }
        }
        Ok(())
    }

    /// Step until the trajectory time reaches `t`.
    pub fn run_until(&mut self, t: f64) -> Result<(), LangevinError> {
        while self.ens.time < t - 1e-12 {
            self.step()?;
        }
        Ok(())
    }

    /// Normalized trace of a word observable.
    pub fn trace(&self, w: &Word) -> Result<C64, LangevinError> {
        let p = NCPoly::monomial(self.cfg.m, w.clone(), C64::ONE)?;
        self.trace_poly(&p)
    }

    pub fn trace_poly(&self, p: &NCPoly) -> Result<C64, LangevinError> {
        let e = ncpoly::evaluate(p, &self.ens.mats)?;
        let n = self.cfg.n;
        Ok((0..n).map(|k| e[(k, k)]).sum::<C64>() / n as f64)
    }
}

/// Clamp the spectrum of a Hermitian matrix to `[-cap, cap]`.
fn clamp_spectrum(a: &CMat, cap: f64) -> CMat {
    let evd = a.self_adjoint_eigen(faer::Side::Lower).expect("eigensolve failed");
    let n = a.nrows();
    let mut clipped = Mat::<C64>::zeros(n, n);
    for k in 0..n {
        let lam = evd.S()[k].re.clamp(-cap, cap);
        clipped[(k, k)] = C64::new(lam, 0.0);
    }
    let u = evd.U();
    &(u * &clipped) * &u.adjoint()
}

/// Time series of sampled observables after burn-in.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub times: Vec<f64>,
    pub traces: BTreeMap<Word, Vec<C64>>,
}

impl RunSummary {
    pub fn mean(&self, w: &Word) -> Option<C64> {
        let s = self.traces.get(w)?;
        Some(s.iter().sum::<C64>() / s.len() as f64)
    }

    /// Batch-means standard error of the real part.
    pub fn standard_error(&self, w: &Word) -> Option<f64> {
        let s = self.traces.get(w)?;
        let re: Vec<f64> = s.iter().map(|v| v.re).collect();
        Some(crate::numeric::batch_means_se(&re, 32))
    }
}

/// Run the configured trajectory, sampling every `thinning` steps after
/// burn-in.
pub fn run_sampling(cfg: &SimConfig) -> Result<RunSummary, LangevinError> {
    let mut traj = Trajectory::new(cfg.clone())?;
    traj.run_until(cfg.burn_in)?;
    let mut times = Vec::new();
    let mut traces: BTreeMap<Word, Vec<C64>> =
        cfg.observables.iter().map(|w| (w.clone(), Vec::new())).collect();
    let mut step_count = 0usize;
    while traj.ens.time < cfg.burn_in + cfg.t_max - 1e-12 {
        traj.step()?;
        step_count += 1;
        if step_count % cfg.thinning == 0 {
            times.push(traj.ens.time);
            for w in &cfg.observables {
                let v = traj.trace(w)?;
                traces.get_mut(w).unwrap().push(v);
            }
        }
    }
    Ok(RunSummary { times, traces })
}

#[cfg(test)]
mod tests;
