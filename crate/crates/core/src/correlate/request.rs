use num_complex::Complex64;

use crate::correlate::{CorrClass, CorrelatorSpec, CorrelatorValue, Family};
use crate::error::{CoreError, Result};
use crate::operators::Axis;
use crate::system::SystemSpec;

/// Site carrying the evolved operator `V` in a local OTOC: the probe, or an
/// explicit site (the weak-link grid sweeps both endpoints).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VSite {
    Probe,
    Site(usize),
}

impl VSite {
    pub fn resolve(self, system: &SystemSpec) -> Result<usize> {
        match self {
            VSite::Probe => system.geometry.require_probe(),
            VSite::Site(s) => Ok(s),
        }
    }
}

/// A grid of correlators from one family. The request, not the family,
/// fixes which sites, axes, and angles are swept.
#[derive(Debug, Clone)]
pub enum FamilyGrid {
    AutoToc {
        v_axes: Vec<Axis>,
    },
    /// `V = W` on each axis, probe readout, perturbation swept over `w_sites`
    PerturbedToc {
        axes: Vec<Axis>,
        w_sites: Vec<usize>,
    },
    /// `V = W = Z`; `v_sites` anchors the evolved operator
    LocalOtoc {
        v_sites: Vec<VSite>,
        w_sites: Vec<usize>,
    },
    /// `V = W` on each axis over explicit site pairs
    TwoPointToc {
        axes: Vec<Axis>,
        v_sites: Vec<usize>,
        w_sites: Vec<usize>,
    },
    GlobalToc {
        v_axes: Vec<Axis>,
        w_axis: Axis,
        phis: Vec<f64>,
    },
    GlobalOtoc {
        w_axis: Axis,
        phis: Vec<f64>,
    },
}

impl FamilyGrid {
    pub fn family(&self) -> Family {
        match self {
            FamilyGrid::AutoToc { .. } => Family::AutoToc,
            FamilyGrid::PerturbedToc { .. } => Family::PerturbedToc,
            FamilyGrid::LocalOtoc { .. } => Family::LocalOtoc,
            FamilyGrid::TwoPointToc { .. } => Family::TwoPointToc,
            FamilyGrid::GlobalToc { .. } => Family::GlobalToc,
            FamilyGrid::GlobalOtoc { .. } => Family::GlobalOtoc,
        }
    }
}

/// A batch of correlators sharing one time grid, evaluated together so the
/// trajectory work is amortized across entries.
#[derive(Debug, Clone)]
pub struct CorrelatorRequest {
    pub families: Vec<FamilyGrid>,
    /// times in periods, strictly increasing
    pub times: Vec<f64>,
}

impl CorrelatorRequest {
    pub fn new(families: Vec<FamilyGrid>, times: Vec<f64>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[1] > w[0]));
        CorrelatorRequest { families, times }
    }

    /// Whether any family needs states at half times `t/2` (protocol
    /// insertions in the middle of the evolution).
    pub fn needs_half_times(&self) -> bool {
        self.families.iter().any(|f| {
            matches!(
                f,
                FamilyGrid::PerturbedToc { .. } | FamilyGrid::GlobalToc { .. }
            )
        })
    }

    /// Wrap a single [`CorrelatorSpec`] as a one-entry request.
    pub fn from_single(spec: &CorrelatorSpec, system: &SystemSpec) -> Result<Self> {
        spec.validate(system)?;
        let grid = match spec.family {
            Family::AutoToc => FamilyGrid::AutoToc {
                v_axes: vec![spec.v_axis],
            },
            Family::PerturbedToc => FamilyGrid::PerturbedToc {
                axes: vec![spec.v_axis],
                w_sites: vec![spec.site_x.unwrap()],
            },
            Family::LocalOtoc => FamilyGrid::LocalOtoc {
                v_sites: vec![spec.site_xp.map(VSite::Site).unwrap_or(VSite::Probe)],
                w_sites: vec![spec.site_x.unwrap()],
            },
            Family::TwoPointToc => FamilyGrid::TwoPointToc {
                axes: vec![spec.v_axis],
                v_sites: vec![spec.site_x.unwrap()],
                w_sites: vec![spec.site_xp.unwrap()],
            },
            Family::GlobalToc => FamilyGrid::GlobalToc {
                v_axes: vec![spec.v_axis],
                w_axis: spec.w_axis,
                phis: vec![spec.phi.unwrap()],
            },
            Family::GlobalOtoc => FamilyGrid::GlobalOtoc {
                w_axis: spec.w_axis,
                phis: vec![spec.phi.unwrap()],
            },
        };
        Ok(CorrelatorRequest::new(vec![grid], vec![spec.t]))
    }

    /// Flat entry keys in schema order (family → axis → sites/angle → time).
    pub fn entry_keys(&self, system: &SystemSpec) -> Result<Vec<CorrEntryKey>> {
        let mut keys = Vec::new();
        let probe = system.geometry.probe();
        for grid in &self.families {
            match grid {
                FamilyGrid::AutoToc { v_axes } => {
                    let p = probe.ok_or(CoreError::MissingProbe)?;
                    for &v in v_axes {
                        for &t in &self.times {
                            keys.push(CorrEntryKey {
                                family: Family::AutoToc,
                                v_axis: v,
                                w_axis: v,
                                v_site: Some(p),
                                w_site: None,
                                phi: None,
                                t,
                            });
                        }
                    }
                }
                FamilyGrid::PerturbedToc { axes, w_sites } => {
                    let p = probe.ok_or(CoreError::MissingProbe)?;
                    for &v in axes {
                        for &x in w_sites {
                            for &t in &self.times {
                                keys.push(CorrEntryKey {
                                    family: Family::PerturbedToc,
                                    v_axis: v,
                                    w_axis: v,
                                    v_site: Some(p),
                                    w_site: Some(x),
                                    phi: None,
                                    t,
                                });
                            }
                        }
                    }
                }
                FamilyGrid::LocalOtoc { v_sites, w_sites } => {
                    for &vs in v_sites {
                        let v_site = vs.resolve(system)?;
                        for &x in w_sites {
                            for &t in &self.times {
                                keys.push(CorrEntryKey {
                                    family: Family::LocalOtoc,
                                    v_axis: Axis::Z,
                                    w_axis: Axis::Z,
                                    v_site: Some(v_site),
                                    w_site: Some(x),
                                    phi: None,
                                    t,
                                });
                            }
                        }
                    }
                }
                FamilyGrid::TwoPointToc {
                    axes,
                    v_sites,
                    w_sites,
                } => {
                    for &v in axes {
                        for &xv in v_sites {
                            for &xw in w_sites {
                                for &t in &self.times {
                                    keys.push(CorrEntryKey {
                                        family: Family::TwoPointToc,
                                        v_axis: v,
                                        w_axis: v,
                                        v_site: Some(xv),
                                        w_site: Some(xw),
                                        phi: None,
                                        t,
                                    });
                                }
                            }
                        }
                    }
                }
                FamilyGrid::GlobalToc {
                    v_axes,
                    w_axis,
                    phis,
                } => {
                    let p = probe.ok_or(CoreError::MissingProbe)?;
                    for &v in v_axes {
                        for &phi in phis {
                            for &t in &self.times {
                                keys.push(CorrEntryKey {
                                    family: Family::GlobalToc,
                                    v_axis: v,
                                    w_axis: *w_axis,
                                    v_site: Some(p),
                                    w_site: None,
                                    phi: Some(phi),
                                    t,
                                });
                            }
                        }
                    }
                }
                FamilyGrid::GlobalOtoc { w_axis, phis } => {
                    let p = probe.ok_or(CoreError::MissingProbe)?;
                    for &phi in phis {
                        for &t in &self.times {
                            keys.push(CorrEntryKey {
                                family: Family::GlobalOtoc,
                                v_axis: Axis::Z,
                                w_axis: *w_axis,
                                v_site: Some(p),
                                w_site: None,
                                phi: Some(phi),
                                t,
                            });
                        }
                    }
                }
            }
        }
        Ok(keys)
    }
}

/// Identity of one estimated correlator within a request.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrEntryKey {
    pub family: Family,
    pub v_axis: Axis,
    pub w_axis: Axis,
    pub v_site: Option<usize>,
    pub w_site: Option<usize>,
    pub phi: Option<f64>,
    pub t: f64,
}

impl CorrEntryKey {
    pub fn class(&self) -> CorrClass {
        self.family.class()
    }
}

/// Estimation result: per-state complex samples for every entry, plus the
/// entry keys in schema order. Aggregates are computed on demand so the
/// Fisher pipeline can reuse per-state values for `N_psi` prefixes.
#[derive(Debug, Clone)]
pub struct CorrTable {
    pub keys: Vec<CorrEntryKey>,
    /// `per_state[k][e]` = sample `k`'s value of entry `e`
    pub per_state: Vec<Vec<Complex64>>,
    pub exact: bool,
}

impl CorrTable {
    pub fn n_entries(&self) -> usize {
        self.keys.len()
    }

    pub fn n_states(&self) -> usize {
        self.per_state.len()
    }

    /// Mean/stderr aggregate per entry.
    pub fn aggregate(&self) -> Vec<CorrelatorValue> {
        self.aggregate_prefix(self.n_states())
    }

    /// Aggregate over the first `n` states only (nested-prefix estimates for
    /// the `1/N_psi` extrapolation).
    pub fn aggregate_prefix(&self, n: usize) -> Vec<CorrelatorValue> {
        assert!(n >= 1 && n <= self.n_states());
        let mut out = Vec::with_capacity(self.n_entries());
        let mut buf = Vec::with_capacity(n);
        for e in 0..self.n_entries() {
            buf.clear();
            for k in 0..n {
                buf.push(self.per_state[k][e]);
            }
            out.push(CorrelatorValue::from_samples(&buf, self.exact));
        }
        out
    }
}
