//! Correlator estimation for every family used in the learning tasks:
//! probe-local TOC/OTOC, two-point TOC, local OTOC, and global-rotation
//! variants, with Haar-state trace averaging and read-out-noise injection.
//!
//! The infinite-temperature trace `tr(M)/2^L` is estimated as the average of
//! `⟨ψ|M|ψ⟩` over Haar-random states; the `V_p`-polarized preparation of the
//! probe protocol and the trace formula coincide at infinite temperature, so
//! one estimator path serves both readings. Sampling over the complete
//! computational basis instead ([`Ensemble::FullBasis`]) turns the same code
//! into an exact trace, which the oracle tests exploit.
//!
//! Every estimator is "measured" in the protocol sense: states are evolved
//! forward (and, for OTOC families, backward) through the Floquet schedule,
//! so imperfect reversal with a cavity is captured automatically.

mod backend;
mod engine;
mod request;
mod strobe;

pub use backend::{echo_fidelity, EvolutionBackend, KrylovBackend};
pub use engine::estimate_request;
pub use request::{CorrEntryKey, CorrTable, CorrelatorRequest, FamilyGrid, VSite};
pub use strobe::{supports_strobe, StrobeBackend};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::operators::Axis;
use crate::seed::SeedTree;
use crate::system::SystemSpec;

/// Correlator family. TOC families are measurable with forward evolution
/// only; OTOC families require reversed evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `⟨V_p(t) V_p(0)⟩`
    AutoToc,
    /// `⟨V_p(t) W_x(t/2) V_p(0) W_x(t/2)⟩`
    PerturbedToc,
    /// `⟨V_a(t) W_x(0) V_a(t) W_x(0)⟩` with `a` the probe or an explicit site
    LocalOtoc,
    /// `⟨V_x(t) W_x'(0)⟩`
    TwoPointToc,
    /// probe TOC with the local insertion replaced by a global rotation
    GlobalToc,
    /// probe OTOC with global rotations at time zero
    GlobalOtoc,
}

/// Time-ordering class of a family (TOC vs OTOC feature sets).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrClass {
    Toc,
    Otoc,
}

impl CorrClass {
    pub fn label(self) -> &'static str {
        match self {
            CorrClass::Toc => "TOC",
            CorrClass::Otoc => "OTOC",
        }
    }
}

impl Family {
    pub fn class(self) -> CorrClass {
        match self {
            Family::AutoToc | Family::PerturbedToc | Family::TwoPointToc | Family::GlobalToc => {
                CorrClass::Toc
            }
            Family::LocalOtoc | Family::GlobalOtoc => CorrClass::Otoc,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::AutoToc => "auto_toc",
            Family::PerturbedToc => "perturbed_toc",
            Family::LocalOtoc => "local_otoc",
            Family::TwoPointToc => "two_point_toc",
            Family::GlobalToc => "global_toc",
            Family::GlobalOtoc => "global_otoc",
        }
    }
}

/// One correlator to estimate: family, operators, sites, time (in periods),
/// optional rotation angle, and the Haar sample count.
#[derive(Debug, Clone)]
pub struct CorrelatorSpec {
    pub family: Family,
    pub v_axis: Axis,
    pub w_axis: Axis,
    pub site_x: Option<usize>,
    pub site_xp: Option<usize>,
    pub t: f64,
    pub phi: Option<f64>,
    pub n_psi: usize,
}

impl CorrelatorSpec {
    pub fn new(family: Family, t: f64) -> Self {
        CorrelatorSpec {
            family,
            v_axis: Axis::Z,
            w_axis: Axis::Z,
            site_x: None,
            site_xp: None,
            t,
            phi: None,
            n_psi: 1,
        }
    }

    pub fn with_axes(mut self, v: Axis, w: Axis) -> Self {
        self.v_axis = v;
        self.w_axis = w;
        self
    }

    pub fn with_sites(mut self, x: Option<usize>, xp: Option<usize>) -> Self {
        self.site_x = x;
        self.site_xp = xp;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn with_n_psi(mut self, n: usize) -> Self {
        self.n_psi = n;
        self
    }

    /// Family-specific field checks, including the OTOC operator restriction
    /// `V = W = Z`.
    pub fn validate(&self, system: &SystemSpec) -> Result<()> {
        let l = system.l();
        let check_site = |s: Option<usize>, name: &'static str| -> Result<()> {
            match s {
                Some(v) if v >= l => Err(CoreError::SiteOutOfRange { site: v, l }),
                Some(_) => Ok(()),
                None => Err(CoreError::MissingField(name)),
            }
        };
        match self.family {
            Family::AutoToc => {
                system.geometry.require_probe()?;
            }
            Family::PerturbedToc => {
                system.geometry.require_probe()?;
                check_site(self.site_x, "site_x")?;
            }
            Family::LocalOtoc => {
                if self.site_xp.is_none() {
                    system.geometry.require_probe()?;
                }
                check_site(self.site_x, "site_x")?;
                if self.v_axis != Axis::Z || self.w_axis != Axis::Z {
                    return Err(CoreError::Parse("OTOC families restrict V = W = Z".into()));
                }
            }
            Family::TwoPointToc => {
                check_site(self.site_x, "site_x")?;
                check_site(self.site_xp, "site_x'")?;
            }
            Family::GlobalToc => {
                system.geometry.require_probe()?;
                if self.phi.is_none() {
                    return Err(CoreError::MissingField("phi"));
                }
            }
            Family::GlobalOtoc => {
                system.geometry.require_probe()?;
                if self.phi.is_none() {
                    return Err(CoreError::MissingField("phi"));
                }
                if self.v_axis != Axis::Z || self.w_axis != Axis::Z {
                    return Err(CoreError::Parse("OTOC families restrict V = W = Z".into()));
                }
            }
        }
        Ok(())
    }
}

/// An estimated correlator: sample mean, standard error (absent for a single
/// sample or an exact full-basis average), and optionally the value after
/// read-out noise. `imag_mean` is a diagnostic — the estimated quantity is
/// real for the Hermitian operator pairs used here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorValue {
    pub mean: f64,
    pub stderr: Option<f64>,
    pub n_psi: usize,
    pub noisy: Option<f64>,
    pub imag_mean: f64,
}

impl CorrelatorValue {
    pub(crate) fn from_samples(samples: &[Complex64], exact: bool) -> CorrelatorValue {
        let n = samples.len();
        let mean = samples.iter().map(|v| v.re).sum::<f64>() / n as f64;
        let imag_mean = samples.iter().map(|v| v.im).sum::<f64>() / n as f64;
        let stderr = if exact || n < 2 {
            None
        } else {
            let var = samples
                .iter()
                .map(|v| (v.re - mean) * (v.re - mean))
                .sum::<f64>()
                / (n as f64 - 1.0);
            Some((var / n as f64).sqrt())
        };
        CorrelatorValue {
            mean,
            stderr,
            n_psi: n,
            noisy: None,
            imag_mean,
        }
    }
}

/// Which states the trace average runs over.
#[derive(Debug, Clone, Copy)]
pub enum Ensemble {
    /// `n` Haar-random states from the given stream; stream index `k` yields
    /// sample `k`, so prefixes are nested across reruns.
    Haar { n: usize, seed: SeedTree },
    /// the complete computational basis — an exact trace at `O(2^L)` cost
    FullBasis,
}

impl Ensemble {
    pub fn haar(n: usize, seed: SeedTree) -> Self {
        Ensemble::Haar { n, seed }
    }

    pub fn len(&self, l: usize) -> usize {
        match self {
            Ensemble::Haar { n, .. } => *n,
            Ensemble::FullBasis => 1usize << l,
        }
    }

    pub fn is_empty(&self, l: usize) -> bool {
        self.len(l) == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Ensemble::FullBasis)
    }

    pub(crate) fn state(
        &self,
        k: usize,
        l: usize,
        cavity_dim: usize,
    ) -> crate::operators::StateVector {
        match self {
            Ensemble::Haar { seed, .. } => {
                crate::operators::sample_haar_state_with_cavity(l, cavity_dim, seed.index(k as u64))
            }
            Ensemble::FullBasis => {
                let mut s = crate::operators::StateVector::zero_state_with_cavity(l, cavity_dim);
                s.amplitudes_mut()[0] = Complex64::new(0.0, 0.0);
                s.amplitudes_mut()[k] = Complex64::new(1.0, 0.0);
                s
            }
        }
    }
}

/// Add Gaussian read-out noise of standard deviation `delta` to the mean;
/// the exact mean is retained for diagnostics.
pub fn inject_readout_noise(
    value: &CorrelatorValue,
    delta: f64,
    seed: SeedTree,
) -> CorrelatorValue {
    assert!(delta >= 0.0);
    let mut out = *value;
    if delta == 0.0 {
        out.noisy = Some(value.mean);
        return out;
    }
    let g: f64 = seed.rng().sample(StandardNormal);
    out.noisy = Some(value.mean + delta * g);
    out
}

fn single_value(
    spec: &CorrelatorSpec,
    system: &SystemSpec,
    seed: SeedTree,
) -> Result<CorrelatorValue> {
    spec.validate(system)?;
    let request = CorrelatorRequest::from_single(spec, system)?;
    let backend = KrylovBackend::new(system)?;
    let table = estimate_request(&backend, system, &request, &Ensemble::haar(spec.n_psi, seed))?;
    Ok(table.aggregate()[0])
}

/// Monte-Carlo estimate of `⟨V_p(t) V_p(0)⟩` over `n_psi` Haar states.
pub fn estimate_auto_toc(
    spec: &CorrelatorSpec,
    system: &SystemSpec,
    seed: SeedTree,
) -> Result<CorrelatorValue> {
    assert_eq!(spec.family, Family::AutoToc);
    single_value(spec, system, seed)
}

/// The probe protocol with `τ = τ' = t/2`: prepare, evolve, perturb at
/// `site_x`, evolve, read out `V_p`.
pub fn estimate_perturbed_toc(
    spec: &CorrelatorSpec,
    system: &SystemSpec,
    seed: SeedTree,
) -> Result<CorrelatorValue> {
    assert_eq!(spec.family, Family::PerturbedToc);
    single_value(spec, system, seed)
}

/// Forward-evolve `t`, perturb, backward-evolve `t`, read out. With a cavity
/// the backward leg uses the imperfect-reversal Hamiltonians.
pub fn estimate_local_otoc(
    spec: &CorrelatorSpec,
    system: &SystemSpec,
    seed: SeedTree,
) -> Result<CorrelatorValue> {
    assert_eq!(spec.family, Family::LocalOtoc);
    single_value(spec, system, seed)
}

/// `⟨V_x(t) W_x'(0)⟩` between two explicit sites.
pub fn estimate_two_point_toc(
    spec: &CorrelatorSpec,
    system: &SystemSpec,
    seed: SeedTree,
) -> Result<CorrelatorValue> {
    assert_eq!(spec.family, Family::TwoPointToc);
    single_value(spec, system, seed)
}

/// Global-rotation TOC or OTOC, depending on `spec.family`.
pub fn estimate_global_correlators(
    spec: &CorrelatorSpec,
    system: &SystemSpec,
    seed: SeedTree,
) -> Result<CorrelatorValue> {
    assert!(matches!(
        spec.family,
        Family::GlobalToc | Family::GlobalOtoc
    ));
    single_value(spec, system, seed)
}
