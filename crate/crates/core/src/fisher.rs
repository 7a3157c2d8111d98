//! Fisher information of couplings from correlator derivatives.
//!
//! With Gaussian read-out noise the (noise-rescaled) Fisher information of a
//! coupling `J` carried by a correlator `C` is the squared derivative
//! `|∂C/∂J|²`. Derivatives are central finite differences evaluated with
//! *common random numbers*: both `J ± step` evaluations reuse the identical
//! Haar-state ensemble, so state-sampling noise cancels instead of being
//! amplified by the division by `2·step`.
//!
//! The estimator bias at finite `N_ψ` (`E|D̄|² = |D|² + Var/N_ψ`) is removed
//! by the `1/N_ψ` linear extrapolation over nested sample prefixes.

use num_complex::{Complex32, Complex64};

use crate::correlate::{
    estimate_request, supports_strobe, CorrClass, CorrEntryKey, CorrelatorRequest, CorrelatorSpec,
    Ensemble, KrylovBackend, StrobeBackend,
};
use crate::error::{CoreError, Result};
use crate::evolve::KrylovOptions;
use crate::exec;
use crate::seed::SeedTree;
use crate::system::{sample_disorder, CavityConfig, CouplingRef, Drive, Geometry, SystemSpec};

/// Which evolution backend evaluates the correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    /// stroboscopic `c64` cache when the grid allows it, Krylov otherwise
    Auto,
    Krylov,
    StrobeC64,
    StrobeC32,
}

pub(crate) fn run_request(
    system: &SystemSpec,
    request: &CorrelatorRequest,
    ensemble: &Ensemble,
    backend: BackendKind,
    tol: f64,
) -> Result<crate::correlate::CorrTable> {
    let kind = match backend {
        BackendKind::Auto => {
            if supports_strobe(system, request) {
                BackendKind::StrobeC64
            } else {
                BackendKind::Krylov
            }
        }
        other => other,
    };
    match kind {
        BackendKind::Krylov | BackendKind::Auto => {
            let b = KrylovBackend::with_options(system, KrylovOptions::with_tol(tol))?;
            estimate_request(&b, system, request, ensemble)
        }
        BackendKind::StrobeC64 => {
            let b = StrobeBackend::<Complex64>::for_request(system, request)?;
            estimate_request(&b, system, request, ensemble)
        }
        BackendKind::StrobeC32 => {
            let b = StrobeBackend::<Complex32>::for_request(system, request)?;
            estimate_request(&b, system, request, ensemble)
        }
    }
}

/// Per-entry, per-state central-difference derivatives `∂C/∂J`.
#[derive(Debug, Clone)]
pub struct DerivativeTable {
    pub keys: Vec<CorrEntryKey>,
    /// `per_state[k][e]`: sample `k`'s derivative of entry `e`
    pub per_state: Vec<Vec<f64>>,
}

impl DerivativeTable {
    pub fn n_states(&self) -> usize {
        self.per_state.len()
    }

    /// Mean derivative of each entry over the first `n` states.
    pub fn prefix_means(&self, n: usize) -> Vec<f64> {
        assert!(n >= 1 && n <= self.n_states());
        let ne = self.keys.len();
        let mut out = vec![0.0; ne];
        for row in &self.per_state[..n] {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o /= n as f64;
        }
        out
    }
}

/// Evaluate the whole request at `J ± step` with identical ensembles and
/// return per-state central differences.
pub fn derivative_table(
    system: &SystemSpec,
    request: &CorrelatorRequest,
    coupling: CouplingRef,
    step: f64,
    ensemble: &Ensemble,
    backend: BackendKind,
    tol: f64,
) -> Result<DerivativeTable> {
    assert!(step > 0.0, "finite-difference step must be positive");
    let j0 = system.coupling_value(coupling)?;
    let plus = system.with_coupling(coupling, j0 + step)?;
    let minus = system.with_coupling(coupling, j0 - step)?;
    let tp = run_request(&plus, request, ensemble, backend, tol)?;
    let tm = run_request(&minus, request, ensemble, backend, tol)?;
    let inv = 1.0 / (2.0 * step);
    let per_state = tp
        .per_state
        .iter()
        .zip(&tm.per_state)
        .map(|(rp, rm)| {
            rp.iter()
                .zip(rm)
                .map(|(a, b)| (a.re - b.re) * inv)
                .collect()
        })
        .collect();
    Ok(DerivativeTable {
        keys: tp.keys,
        per_state,
    })
}

/// Central-difference derivative of a single correlator (common random
/// numbers across the `±step` evaluations).
pub fn correlator_derivative(
    system: &SystemSpec,
    spec: &CorrelatorSpec,
    coupling: CouplingRef,
    step: f64,
    seed: SeedTree,
) -> Result<f64> {
    let request = CorrelatorRequest::from_single(spec, system)?;
    let ensemble = Ensemble::haar(spec.n_psi, seed);
    let table = derivative_table(
        system,
        &request,
        coupling,
        step,
        &ensemble,
        BackendKind::Krylov,
        1e-10,
    )?;
    Ok(table.prefix_means(table.n_states())[0])
}

/// Result of the `1/N_ψ` linear fit `FI(N) = FI_∞ + A/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrapolationFit {
    pub fi_inf: f64,
    pub a: f64,
    /// root-mean-square fit residual
    pub residual: f64,
    /// true when a negative intercept was clamped to zero
    pub clamped: bool,
}

/// Least-squares fit of `FI(N) = FI_∞ + A/N` over at least three distinct
/// `N` values; a negative intercept is clamped to 0 and flagged.
pub fn extrapolate_fisher(points: &[(usize, f64)]) -> Result<ExtrapolationFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(CoreError::TooFewPoints(ns.len()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| 1.0 / p.0 as f64).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| (1.0 / p.0 as f64).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| p.1 / p.0 as f64).sum();
    let denom = n * sxx - sx * sx;
    let a = (n * sxy - sx * sy) / denom;
    let intercept = (sy - a * sx) / n;
    let residual = (points
        .iter()
        .map(|p| {
            let fit = intercept + a / p.0 as f64;
            (p.1 - fit).powi(2)
        })
        .sum::<f64>()
        / n)
        .sqrt();
    let clamped = intercept < 0.0;
    Ok(ExtrapolationFit {
        fi_inf: intercept.max(0.0),
        a,
        residual,
        clamped,
    })
}

/// Max-FI of one coupling for one disorder realization.
#[derive(Debug, Clone)]
pub struct FisherEstimate {
    pub coupling: CouplingRef,
    /// (class, FI, argmax entry) — FI is extrapolated when a grid was given
    pub by_class: Vec<(CorrClass, f64, Option<CorrEntryKey>)>,
    pub extrapolation: Vec<(CorrClass, ExtrapolationFit)>,
    pub n_psi: usize,
    /// chain-rule factor applied: FI(log J) = J² FI(J)
    pub log_scale: bool,
}

impl FisherEstimate {
    pub fn class_fi(&self, class: CorrClass) -> Option<f64> {
        self.by_class
            .iter()
            .find(|(c, _, _)| *c == class)
            .map(|(_, fi, _)| *fi)
    }

    pub fn class_argmax(&self, class: CorrClass) -> Option<&CorrEntryKey> {
        self.by_class
            .iter()
            .find(|(c, _, _)| *c == class)
            .and_then(|(_, _, k)| k.as_ref())
    }
}

/// Controls for a Fisher evaluation.
#[derive(Debug, Clone)]
pub struct FisherOptions {
    /// central-difference step (couplings are O(1))
    pub step: f64,
    pub n_psi: usize,
    /// nested prefixes for the `1/N` extrapolation; empty = no extrapolation
    pub n_psi_grid: Vec<usize>,
    /// report FI of `log J` via the exact chain rule
    pub log_scale: bool,
    pub backend: BackendKind,
    pub tol: f64,
}

impl Default for FisherOptions {
    fn default() -> Self {
        FisherOptions {
            step: 1e-2,
            n_psi: 4,
            n_psi_grid: Vec::new(),
            log_scale: false,
            backend: BackendKind::Auto,
            tol: 1e-8,
        }
    }
}

/// Maximize `|∂C/∂J|²` over every entry of the request, per correlator class,
/// optionally extrapolating `N_ψ → ∞` over nested prefixes.
pub fn max_fisher(
    system: &SystemSpec,
    request: &CorrelatorRequest,
    coupling: CouplingRef,
    opts: &FisherOptions,
    seed: SeedTree,
) -> Result<FisherEstimate> {
    assert!(!request.families.is_empty(), "family set must be nonempty");
    let ensemble = Ensemble::haar(opts.n_psi, seed);
    let table = derivative_table(
        system,
        request,
        coupling,
        opts.step,
        &ensemble,
        opts.backend,
        opts.tol,
    )?;
    let chain = if opts.log_scale {
        let j = system.coupling_value(coupling)?;
        j * j
    } else {
        1.0
    };

    let class_max = |means: &[f64]| -> Vec<(CorrClass, f64, Option<CorrEntryKey>)> {
        let mut out = Vec::new();
        for class in [CorrClass::Toc, CorrClass::Otoc] {
            let mut best: Option<(f64, usize)> = None;
            for (e, key) in table.keys.iter().enumerate() {
                if key.class() != class {
                    continue;
                }
                let fi = means[e] * means[e] * chain;
                if best.map(|(b, _)| fi > b).unwrap_or(true) {
                    best = Some((fi, e));
                }
            }
            if let Some((fi, e)) = best {
                out.push((class, fi, Some(table.keys[e].clone())));
            }
        }
        out
    };

    let full = class_max(&table.prefix_means(opts.n_psi));
    let mut extrapolation = Vec::new();
    let mut by_class = full.clone();
    if opts.n_psi_grid.len() >= 3 {
        for class in [CorrClass::Toc, CorrClass::Otoc] {
            let points: Vec<(usize, f64)> = opts
                .n_psi_grid
                .iter()
                .filter(|&&n| n <= opts.n_psi)
                .map(|&n| {
                    let m = class_max(&table.prefix_means(n));
                    let fi = m
                        .iter()
                        .find(|(c, _, _)| *c == class)
                        .map(|(_, fi, _)| *fi)
                        .unwrap_or(0.0);
                    (n, fi)
                })
                .collect();
            if points.len() >= 3 {
                let fit = extrapolate_fisher(&points)?;
                if let Some(slot) = by_class.iter_mut().find(|(c, _, _)| *c == class) {
                    slot.1 = fit.fi_inf;
                }
                extrapolation.push((class, fit));
            }
        }
    }
    Ok(FisherEstimate {
        coupling,
        by_class,
        extrapolation,
        n_psi: opts.n_psi,
        log_scale: opts.log_scale,
    })
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanStderr {
    pub fn from_samples(xs: &[f64]) -> MeanStderr {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        MeanStderr { mean, stderr, n }
    }
}

/// One experiment definition for disorder-averaged FI: the ensemble of
/// systems plus the correlator grid and the coupling under study.
#[derive(Debug, Clone)]
pub struct FisherJob {
    pub geometry: Geometry,
    pub drive: Drive,
    pub cavity: Option<CavityConfig>,
    pub j_link: Option<f64>,
    pub request: CorrelatorRequest,
    pub coupling: CouplingRef,
    pub opts: FisherOptions,
}

/// Disorder-averaged max-FI per correlator class.
#[derive(Debug, Clone)]
pub struct DisorderAveragedFisher {
    pub coupling: CouplingRef,
    pub per_class: Vec<(CorrClass, MeanStderr)>,
    /// per-realization estimates, in realization order
    pub realizations: Vec<FisherEstimate>,
}

impl DisorderAveragedFisher {
    pub fn class_mean(&self, class: CorrClass) -> Option<MeanStderr> {
        self.per_class
            .iter()
            .find(|(c, _)| *c == class)
            .map(|(_, m)| *m)
    }
}

/// Arithmetic mean of per-realization max-FI over fresh disorder draws.
/// Realizations are independent seeded tasks (parallel when enabled).
pub fn disorder_average_fisher(
    job: &FisherJob,
    n_realizations: usize,
    seed: SeedTree,
) -> Result<DisorderAveragedFisher> {
    assert!(n_realizations >= 1);
    let results: Vec<Result<FisherEstimate>> = exec::map_range(n_realizations, |r| {
        let rseed = seed.index(r as u64);
        let dis = sample_disorder(&job.geometry, job.j_link, rseed.child("disorder"));
        let mut system = SystemSpec::new(job.geometry.clone(), dis, job.drive);
        if let Some(c) = job.cavity {
            system = system.with_cavity(c);
        }
        max_fisher(
            &system,
            &job.request,
            job.coupling,
            &job.opts,
            rseed.child("haar"),
        )
    });
    let mut realizations = Vec::with_capacity(n_realizations);
    for r in results {
        realizations.push(r?);
    }
    let mut per_class = Vec::new();
    for class in [CorrClass::Toc, CorrClass::Otoc] {
        let vals: Vec<f64> = realizations
            .iter()
            .filter_map(|e| e.class_fi(class))
            .collect();
        if !vals.is_empty() {
            per_class.push((class, MeanStderr::from_samples(&vals)));
        }
    }
    Ok(DisorderAveragedFisher {
        coupling: job.coupling,
        per_class,
        realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolation_recovers_exact_affine_data() {
        let pts: Vec<(usize, f64)> = [1usize, 2, 4, 8, 25]
            .iter()
            .map(|&n| (n, 0.37 + 2.1 / n as f64))
            .collect();
        let fit = extrapolate_fisher(&pts).unwrap();
        assert!((fit.fi_inf - 0.37).abs() < 1e-12);
        assert!((fit.a - 2.1).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(!fit.clamped);
    }

    #[test]
    fn extrapolation_constant_data_and_clamping() {
        let pts: Vec<(usize, f64)> = [1usize, 4, 16].iter().map(|&n| (n, 0.5)).collect();
        let fit = extrapolate_fisher(&pts).unwrap();
        assert!((fit.fi_inf - 0.5).abs() < 1e-12);
        assert!(fit.a.abs() < 1e-12);

        // negative intercept clamps to zero with the flag set
        let pts: Vec<(usize, f64)> = [1usize, 2, 4]
            .iter()
            .map(|&n| (n, -0.2 + 1.0 / n as f64))
            .collect();
        let fit = extrapolate_fisher(&pts).unwrap();
        assert_eq!(fit.fi_inf, 0.0);
        assert!(fit.clamped);
    }

    #[test]
    fn extrapolation_needs_three_distinct_points() {
        assert!(extrapolate_fisher(&[(1, 0.1), (2, 0.2)]).is_err());
        assert!(extrapolate_fisher(&[(1, 0.1), (1, 0.2), (1, 0.3)]).is_err());
    }

    #[test]
    fn log_scale_is_exact_chain_rule() {
        use crate::correlate::{CorrelatorRequest, FamilyGrid};
        use crate::operators::Axis;
        let g = Geometry::chain(3).unwrap();
        let dis = sample_disorder(&g, None, SeedTree::new(2).child("d"));
        let system = SystemSpec::new(g, dis, Drive::floquet());
        let request = CorrelatorRequest::new(
            vec![FamilyGrid::AutoToc {
                v_axes: vec![Axis::Z],
            }],
            vec![1.0, 2.0],
        );
        let coupling = CouplingRef::Edge((1, 2));
        let seed = SeedTree::new(5).child("h");
        let mut opts = FisherOptions {
            n_psi: 2,
            ..Default::default()
        };
        let plain = max_fisher(&system, &request, coupling, &opts, seed).unwrap();
        opts.log_scale = true;
        let logged = max_fisher(&system, &request, coupling, &opts, seed).unwrap();
        let j = system.coupling_value(coupling).unwrap();
        let a = plain.class_fi(CorrClass::Toc).unwrap();
        let b = logged.class_fi(CorrClass::Toc).unwrap();
        assert!((b - j * j * a).abs() <= 1e-12 * b.abs().max(1.0));
    }
}
