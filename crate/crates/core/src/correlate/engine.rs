use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::correlate::backend::EvolutionBackend;
use crate::correlate::request::{CorrelatorRequest, FamilyGrid, CorrTable};
use crate::correlate::Ensemble;
use crate::error::Result;
use crate::exec;
use crate::operators::{Axis, PauliString, StateVector};
use crate::system::SystemSpec;

/// Resolved execution plan: per family, the operator combinations and their
/// base offsets into the flat entry array (entry = base + time index).
struct Plan {
    times: Vec<f64>,
    n_entries: usize,
    probe: Option<usize>,
    auto: Vec<(Axis, usize)>,
    perturbed: Vec<(Axis, usize, usize)>,
    local_otoc: Vec<(usize, usize, usize)>,
    two_point: Vec<(Axis, usize, usize, usize)>,
    global_toc: Vec<(Axis, Axis, f64, usize)>,
    global_otoc: Vec<(Axis, f64, usize)>,
    needs_u: bool,
    uv_axes: BTreeSet<Axis>,
    /// forward trajectories from `W ψ`, keyed by (axis, site)
    w_trajs: BTreeSet<(Axis, usize)>,
    half_axes: BTreeSet<Axis>,
    rot_trajs: BTreeSet<(Axis, OrdF64)>,
}

/// f64 wrapper with total order for use as a set key (angles are finite).
#[derive(Clone, Copy, PartialEq, Debug)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Plan {
    fn resolve(request: &CorrelatorRequest, system: &SystemSpec) -> Result<Plan> {
        let nt = request.times.len();
        let mut plan = Plan {
            times: request.times.clone(),
            n_entries: 0,
            probe: system.geometry.probe(),
            auto: Vec::new(),
            perturbed: Vec::new(),
            local_otoc: Vec::new(),
            two_point: Vec::new(),
            global_toc: Vec::new(),
            global_otoc: Vec::new(),
            needs_u: false,
            uv_axes: BTreeSet::new(),
            w_trajs: BTreeSet::new(),
            half_axes: BTreeSet::new(),
            rot_trajs: BTreeSet::new(),
        };
        let mut base = 0usize;
        for grid in &request.families {
            match grid {
                FamilyGrid::AutoToc { v_axes } => {
                    for &v in v_axes {
                        plan.auto.push((v, base));
                        plan.needs_u = true;
                        plan.uv_axes.insert(v);
                        base += nt;
                    }
                }
                FamilyGrid::PerturbedToc { axes, w_sites } => {
                    for &v in axes {
                        for &x in w_sites {
                            plan.perturbed.push((v, x, base));
                            plan.half_axes.insert(v);
                            base += nt;
                        }
                    }
                }
                FamilyGrid::LocalOtoc { v_sites, w_sites } => {
                    for &vs in v_sites {
                        let v_site = vs.resolve(system)?;
                        for &x in w_sites {
                            plan.local_otoc.push((v_site, x, base));
                            plan.needs_u = true;
                            plan.w_trajs.insert((Axis::Z, x));
                            base += nt;
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
                                plan.two_point.push((v, xv, xw, base));
                                plan.needs_u = true;
                                plan.w_trajs.insert((v, xw));
                                base += nt;
                            }
                        }
                    }
                }
                FamilyGrid::GlobalToc {
                    v_axes,
                    w_axis,
                    phis,
                } => {
                    for &v in v_axes {
                        for &phi in phis {
                            plan.global_toc.push((v, *w_axis, phi, base));
                            plan.half_axes.insert(v);
                            base += nt;
                        }
                    }
                }
                FamilyGrid::GlobalOtoc { w_axis, phis } => {
                    for &phi in phis {
                        plan.global_otoc.push((*w_axis, phi, base));
                        plan.needs_u = true;
                        plan.rot_trajs.insert((*w_axis, OrdF64(phi)));
                        base += nt;
                    }
                }
            }
        }
        plan.n_entries = base;
        Ok(plan)
    }
}

/// A group of trajectories that always sit at the same phase, stored
/// contiguously so the backend can advance them as one block.
struct TrajGroup<S> {
    states: Vec<S>,
    phase: f64,
    index: BTreeMap<TrajKey, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TrajKey {
    U,
    Uv(Axis),
    W(Axis, usize),
    Rot(Axis, OrdF64),
}

impl<S: Clone + Send> TrajGroup<S> {
    fn new() -> Self {
        TrajGroup {
            states: Vec::new(),
            phase: 0.0,
            index: BTreeMap::new(),
        }
    }

    fn insert(&mut self, key: TrajKey, state: S) {
        self.index.insert(key, self.states.len());
        self.states.push(state);
    }

    fn get(&self, key: &TrajKey) -> &S {
        &self.states[self.index[key]]
    }

    fn advance_to<B: EvolutionBackend<State = S>>(&mut self, backend: &B, t: f64) -> Result<()> {
        if !self.states.is_empty() && (t - self.phase).abs() > 1e-12 {
            backend.advance_block(&mut self.states, self.phase, t)?;
        }
        self.phase = t;
        Ok(())
    }
}

/// All entries of the request for one ensemble member.
fn state_values<B: EvolutionBackend>(
    backend: &B,
    plan: &Plan,
    psi: &StateVector,
) -> Result<Vec<Complex64>> {
    let mut vals = vec![Complex64::new(0.0, 0.0); plan.n_entries];
    let probe = plan.probe;
    let pauli = |site: usize, axis: Axis| PauliString::single(site, axis);

    // trajectories at the full phase t: U(t)ψ, U(t)V_pψ, U(t)W_xψ, U(t)R_φψ
    let mut full: TrajGroup<B::State> = TrajGroup::new();
    if plan.needs_u {
        full.insert(TrajKey::U, backend.prepare(psi));
    }
    for &axis in &plan.uv_axes {
        let mut s = backend.prepare(psi);
        backend.apply_pauli(&mut s, &pauli(probe.expect("probe family"), axis))?;
        full.insert(TrajKey::Uv(axis), s);
    }
    for &(axis, site) in &plan.w_trajs {
        let mut s = backend.prepare(psi);
        backend.apply_pauli(&mut s, &pauli(site, axis))?;
        full.insert(TrajKey::W(axis, site), s);
    }
    for &(axis, phi) in &plan.rot_trajs {
        let mut s = backend.prepare(psi);
        backend.apply_global_rotation(&mut s, axis, phi.0);
        full.insert(TrajKey::Rot(axis, phi), s);
    }
    // trajectories at the half phase t/2 (protocol insertions)
    let mut half: TrajGroup<B::State> = TrajGroup::new();
    if !plan.perturbed.is_empty() || !plan.global_toc.is_empty() {
        half.insert(TrajKey::U, backend.prepare(psi));
        for &axis in &plan.half_axes {
            let mut s = backend.prepare(psi);
            backend.apply_pauli(&mut s, &pauli(probe.expect("probe family"), axis))?;
            half.insert(TrajKey::Uv(axis), s);
        }
    }

    let n_toc_legs = 2 * (plan.perturbed.len() + plan.global_toc.len());
    for (ti, &t) in plan.times.iter().enumerate() {
        full.advance_to(backend, t)?;
        half.advance_to(backend, t / 2.0)?;

        // ⟨V_p(t) V_p⟩ = ⟨V u(t), uv(t)⟩
        for &(axis, b) in &plan.auto {
            let mut tmp = full.get(&TrajKey::U).clone();
            backend.apply_pauli(&mut tmp, &pauli(probe.unwrap(), axis))?;
            vals[b + ti] = backend.inner(&tmp, full.get(&TrajKey::Uv(axis)));
        }

        // ⟨V_x(t) W_x'⟩ = ⟨V_x u(t), U(t) W_x' ψ⟩
        if !plan.two_point.is_empty() {
            let mut cache: BTreeMap<(Axis, usize), B::State> = BTreeMap::new();
            for &(axis, xv, xw, b) in &plan.two_point {
                let tmp = cache.entry((axis, xv)).or_insert_with(|| {
                    let mut s = full.get(&TrajKey::U).clone();
                    backend
                        .apply_pauli(&mut s, &pauli(xv, axis))
                        .expect("validated sites");
                    s
                });
                vals[b + ti] = backend.inner(tmp, full.get(&TrajKey::W(axis, xw)));
            }
        }

        // protocol TOC second legs, advanced t/2 -> t as one block:
        // layout [r_0, l_0, r_1, l_1, ...] over perturbed then global combos
        if n_toc_legs > 0 {
            let mut legs: Vec<B::State> = Vec::with_capacity(n_toc_legs);
            for &(axis, x, _) in &plan.perturbed {
                let w = pauli(x, axis);
                let mut r = half.get(&TrajKey::U).clone();
                backend.apply_pauli(&mut r, &w)?;
                legs.push(r);
                let mut l = half.get(&TrajKey::Uv(axis)).clone();
                backend.apply_pauli(&mut l, &w)?;
                legs.push(l);
            }
            for &(v_axis, w_axis, phi, _) in &plan.global_toc {
                let mut r = half.get(&TrajKey::U).clone();
                backend.apply_global_rotation(&mut r, w_axis, -phi);
                legs.push(r);
                let mut l = half.get(&TrajKey::Uv(v_axis)).clone();
                backend.apply_global_rotation(&mut l, w_axis, -phi);
                legs.push(l);
            }
            backend.advance_block(&mut legs, t / 2.0, t)?;
            let mut it = legs.into_iter();
            for &(axis, _, b) in &plan.perturbed {
                let r = it.next().unwrap();
                let mut l = it.next().unwrap();
                backend.apply_pauli(&mut l, &pauli(probe.unwrap(), axis))?;
                vals[b + ti] = backend.inner(&l, &r);
            }
            for &(v_axis, _, _, b) in &plan.global_toc {
                let r = it.next().unwrap();
                let mut l = it.next().unwrap();
                backend.apply_pauli(&mut l, &pauli(probe.unwrap(), v_axis))?;
                vals[b + ti] = backend.inner(&l, &r);
            }
        }

        // OTOC legs, all retreating t -> 0 as one block:
        // a = U†(t) V U(t) ψ per evolved-operator site, then
        // b = U†(t) V U(t) W ψ per (site, perturbation) / rotation
        if !plan.local_otoc.is_empty() || !plan.global_otoc.is_empty() {
            let mut a_sites: Vec<usize> = plan.local_otoc.iter().map(|&(v, _, _)| v).collect();
            if !plan.global_otoc.is_empty() {
                a_sites.push(probe.unwrap());
            }
            a_sites.sort_unstable();
            a_sites.dedup();
            let mut legs: Vec<B::State> =
                Vec::with_capacity(a_sites.len() + plan.local_otoc.len() + plan.global_otoc.len());
            for &v_site in &a_sites {
                let mut s = full.get(&TrajKey::U).clone();
                backend.apply_pauli(&mut s, &pauli(v_site, Axis::Z))?;
                legs.push(s);
            }
            for &(v_site, x, _) in &plan.local_otoc {
                let mut s = full.get(&TrajKey::W(Axis::Z, x)).clone();
                backend.apply_pauli(&mut s, &pauli(v_site, Axis::Z))?;
                legs.push(s);
            }
            for &(w_axis, phi, _) in &plan.global_otoc {
                let mut s = full.get(&TrajKey::Rot(w_axis, OrdF64(phi))).clone();
                backend.apply_pauli(&mut s, &pauli(probe.unwrap(), Axis::Z))?;
                legs.push(s);
            }
            backend.advance_block(&mut legs, t, 0.0)?;
            let (a_block, b_block) = legs.split_at(a_sites.len());
            let a_idx =
                |site: usize| a_sites.binary_search(&site).expect("collected above");
            for (k, &(v_site, x, b)) in plan.local_otoc.iter().enumerate() {
                let mut a = a_block[a_idx(v_site)].clone();
                backend.apply_pauli(&mut a, &pauli(x, Axis::Z))?;
                vals[b + ti] = backend.inner(&a, &b_block[k]);
            }
            for (k, &(w_axis, phi, b)) in plan.global_otoc.iter().enumerate() {
                let mut a = a_block[a_idx(probe.unwrap())].clone();
                backend.apply_global_rotation(&mut a, w_axis, phi);
                vals[b + ti] =
                    backend.inner(&a, &b_block[plan.local_otoc.len() + k]);
            }
        }
    }
    Ok(vals)
}

/// Estimate every entry of a request over the ensemble. Per-state work is a
/// parallel map; results are reduced in fixed state order, so outputs are
/// bitwise reproducible for any worker count.
pub fn estimate_request<B: EvolutionBackend>(
    backend: &B,
    system: &SystemSpec,
    request: &CorrelatorRequest,
    ensemble: &Ensemble,
) -> Result<CorrTable> {
    let keys = request.entry_keys(system)?;
    let plan = Plan::resolve(request, system)?;
    debug_assert_eq!(keys.len(), plan.n_entries);
    let l = backend.qubits();
    let cav = backend.cavity_dim();
    let n = ensemble.len(l);
    assert!(n > 0, "ensemble must contain at least one state");
    let results: Vec<Result<Vec<Complex64>>> = exec::map_range(n, |k| {
        let psi = ensemble.state(k, l, cav);
        state_values(backend, &plan, &psi)
    });
    let mut per_state = Vec::with_capacity(n);
    for r in results {
        per_state.push(r?);
    }
    Ok(CorrTable {
        keys,
        per_state,
        exact: ensemble.is_exact(),
    })
}
