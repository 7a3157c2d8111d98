//! Geometries, disorder realizations, and the Hamiltonians they define.
//!
//! Every experiment is specified by a [`SystemSpec`]: a connectivity graph
//! with an optional probe site and weak-link edge, one draw of disordered
//! on-site fields and bond couplings, a drive (Floquet or time-independent),
//! and an optional cavity mode for imperfect time reversal.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{CoreError, Result};
use crate::operators::{Axis, PauliString};
use crate::seed::SeedTree;

/// Undirected edge, stored with `a < b`.
pub type Edge = (usize, usize);

fn ordered(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Which of the three-way task geometries a graph realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ThreeWayVariant {
    /// plain chain continuing past the probe segment
    A,
    /// T-junction: two branches split past the probe segment
    B,
    /// loop: the remaining sites close into a ring
    C,
}

impl ThreeWayVariant {
    pub const ALL: [ThreeWayVariant; 3] = [ThreeWayVariant::A, ThreeWayVariant::B, ThreeWayVariant::C];

    pub fn label(self) -> &'static str {
        match self {
            ThreeWayVariant::A => "chain",
            ThreeWayVariant::B => "tjunction",
            ThreeWayVariant::C => "loop",
        }
    }
}

/// Tagged geometry family, kept for provenance and distance checks.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    Chain,
    Ring,
    /// two chains intersecting at graph distance `d` from the probe
    CrossedChains { d: usize },
    /// ring with a single designated weak edge
    WeakLinkRing,
    ThreeWay { which: ThreeWayVariant, d: usize },
    /// loaded from a geometry file or built ad hoc
    Custom(String),
}

/// Site-connectivity graph with an optional probe site and weak-link edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    l: usize,
    edges: Vec<Edge>,
    probe: Option<usize>,
    weak_edge: Option<Edge>,
    kind: GeometryKind,
}

impl Geometry {
    pub fn new(
        l: usize,
        mut edges: Vec<Edge>,
        probe: Option<usize>,
        weak_edge: Option<Edge>,
        kind: GeometryKind,
    ) -> Result<Self> {
        if l == 0 {
            return Err(CoreError::InvalidGeometry("L must be >= 1".into()));
        }
        for e in edges.iter_mut() {
            *e = ordered(e.0, e.1);
        }
        edges.sort_unstable();
        edges.dedup();
        for &(a, b) in &edges {
            if a == b {
                return Err(CoreError::InvalidGeometry(format!("self-loop at site {a}")));
            }
            if b >= l {
                return Err(CoreError::InvalidGeometry(format!(
                    "edge ({a},{b}) references site >= L={l}"
                )));
            }
        }
        if let Some(p) = probe {
            if p >= l {
                return Err(CoreError::InvalidGeometry(format!("probe {p} >= L={l}")));
            }
        }
        if let Some(w) = weak_edge {
            let w = ordered(w.0, w.1);
            if !edges.contains(&w) {
                return Err(CoreError::InvalidGeometry(format!(
                    "weak edge ({},{}) not in edge list",
                    w.0, w.1
                )));
            }
        }
        let g = Geometry {
            l,
            edges,
            probe,
            weak_edge: weak_edge.map(|w| ordered(w.0, w.1)),
            kind,
        };
        if l > 1 && !g.is_connected() {
            // A zero-strength weak link may legitimately disconnect the
            // dynamics, but the declared graph itself must be connected.
            return Err(CoreError::InvalidGeometry("graph is not connected".into()));
        }
        Ok(g)
    }

    /// Open chain `0-1-...-L-1` with the probe at site 0.
    pub fn chain(l: usize) -> Result<Self> {
        let edges = (0..l.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Geometry::new(l, edges, Some(0), None, GeometryKind::Chain)
    }

    /// Periodic ring with the probe at site 0.
    pub fn ring(l: usize) -> Result<Self> {
        if l < 3 {
            return Err(CoreError::InvalidGeometry("ring needs L >= 3".into()));
        }
        let mut edges: Vec<Edge> = (0..l - 1).map(|i| (i, i + 1)).collect();
        edges.push((0, l - 1));
        Geometry::new(l, edges, Some(0), None, GeometryKind::Ring)
    }

    /// Periodic ring whose edge `(0, L-1)` carries the weak coupling.
    pub fn weak_link_ring(l: usize) -> Result<Self> {
        if l < 3 {
            return Err(CoreError::InvalidGeometry("ring needs L >= 3".into()));
        }
        let mut edges: Vec<Edge> = (0..l - 1).map(|i| (i, i + 1)).collect();
        edges.push((0, l - 1));
        Geometry::new(
            l,
            edges,
            Some(0),
            Some((0, l - 1)),
            GeometryKind::WeakLinkRing,
        )
    }

    /// Two open chains sharing one intersection site at graph distance `d`
    /// from the probe. The probe chain has `L-4` sites (probe at one end);
    /// the crossing chain contributes two 2-site arms at the intersection,
    /// so the intersection has degree 4 in the interior case.
    pub fn crossed_chains(l: usize, d: usize) -> Result<Self> {
        if l < 7 {
            return Err(CoreError::InvalidGeometry(
                "crossed chains need L >= 7".into(),
            ));
        }
        let pc = l - 4; // probe-chain sites 0..pc-1
        if d > pc - 1 {
            return Err(CoreError::InvalidGeometry(format!(
                "intersection distance {d} exceeds probe chain length {}",
                pc - 1
            )));
        }
        let mut edges: Vec<Edge> = (0..pc - 1).map(|i| (i, i + 1)).collect();
        // crossing chain: (pc)-(pc+1)-d-(pc+2)-(pc+3)
        edges.push((pc, pc + 1));
        edges.push((pc + 1, d));
        edges.push((d, pc + 2));
        edges.push((pc + 2, pc + 3));
        Geometry::new(l, edges, Some(0), None, GeometryKind::CrossedChains { d })
    }

    /// Three-way task geometries: a probe-side path `0..=d` identical across
    /// variants, then a variant-specific structure on the remaining sites
    /// (chain / T-junction / loop).
    pub fn three_way(l: usize, which: ThreeWayVariant, d: usize) -> Result<Self> {
        if d + 4 > l {
            return Err(CoreError::InvalidGeometry(format!(
                "three-way geometry needs at least {} sites for d={d}",
                d + 4
            )));
        }
        let mut edges: Vec<Edge> = (0..d).map(|i| (i, i + 1)).collect();
        let rest: Vec<usize> = (d + 1..l).collect();
        match which {
            ThreeWayVariant::A => {
                // continue the path through all remaining sites
                let mut prev = d;
                for &s in &rest {
                    edges.push((prev, s));
                    prev = s;
                }
            }
            ThreeWayVariant::B => {
                // hub right after the segment, two balanced branches
                let hub = rest[0];
                edges.push((d, hub));
                let branches = &rest[1..];
                let half = branches.len().div_ceil(2);
                let mut prev = hub;
                for &s in &branches[..half] {
                    edges.push((prev, s));
                    prev = s;
                }
                prev = hub;
                for &s in &branches[half..] {
                    edges.push((prev, s));
                    prev = s;
                }
            }
            ThreeWayVariant::C => {
                // remaining sites form a ring entered at rest[0]
                edges.push((d, rest[0]));
                for w in rest.windows(2) {
                    edges.push((w[0], w[1]));
                }
                edges.push((rest[0], *rest.last().unwrap()));
            }
        }
        Geometry::new(l, edges, Some(0), None, GeometryKind::ThreeWay { which, d })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn probe(&self) -> Option<usize> {
        self.probe
    }

    pub fn require_probe(&self) -> Result<usize> {
        self.probe.ok_or(CoreError::MissingProbe)
    }

    pub fn weak_edge(&self) -> Option<Edge> {
        self.weak_edge
    }

    pub fn kind(&self) -> &GeometryKind {
        &self.kind
    }

    pub fn with_probe(mut self, probe: usize) -> Self {
        self.probe = Some(probe);
        self
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.l];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(|d| d.is_some())
    }

    /// BFS distances from `origin`; `None` for unreachable sites.
    pub fn distances_from(&self, origin: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.l];
        let mut queue = VecDeque::new();
        dist[origin] = Some(0);
        queue.push_back(origin);
        while let Some(s) = queue.pop_front() {
            for &t in &adj[s] {
                if dist[t].is_none() {
                    dist[t] = Some(dist[s].unwrap() + 1);
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    /// Graph distance from the probe to the nearer endpoint of an edge.
    pub fn edge_distance_from_probe(&self, edge: Edge) -> Result<usize> {
        let p = self.require_probe()?;
        let dist = self.distances_from(p);
        let (a, b) = ordered(edge.0, edge.1);
        match (dist[a], dist[b]) {
            (Some(da), Some(db)) => Ok(da.min(db)),
            _ => Err(CoreError::InvalidGeometry(format!(
                "edge ({a},{b}) unreachable from probe"
            ))),
        }
    }

    /// First edge (in sorted order) at the given graph distance from the probe.
    pub fn edge_at_distance(&self, d: usize) -> Result<Edge> {
        for &e in &self.edges {
            if self.edge_distance_from_probe(e)? == d {
                return Ok(e);
            }
        }
        Err(CoreError::UnknownCoupling(format!("no edge at distance {d}")))
    }

    /// Sites within graph distance `radius` of either weak-link endpoint,
    /// sorted. For the shipped ring with radius 2 this is the 6-site
    /// neighborhood used by the weak-link correlator grid.
    pub fn link_neighborhood(&self, radius: usize) -> Result<Vec<usize>> {
        let (a, b) = self
            .weak_edge
            .ok_or_else(|| CoreError::InvalidGeometry("geometry has no weak edge".into()))?;
        let da = self.distances_from(a);
        let db = self.distances_from(b);
        let mut sites: Vec<usize> = (0..self.l)
            .filter(|&s| {
                da[s].map(|d| d <= radius).unwrap_or(false)
                    || db[s].map(|d| d <= radius).unwrap_or(false)
            })
            .collect();
        sites.sort_unstable();
        Ok(sites)
    }

    /// Serialize to the versioned geometry text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# otoc-geometry v1");
        let _ = writeln!(s, "l {}", self.l);
        if let Some(p) = self.probe {
            let _ = writeln!(s, "probe {p}");
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "edge {a} {b}");
        }
        if let Some((a, b)) = self.weak_edge {
            let _ = writeln!(s, "weak-link {a} {b}");
        }
        s
    }

    /// Parse the geometry text format (see `to_text`). Lines starting with
    /// `#` are comments; the version header is required.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty geometry file".into()))?;
        if !header.starts_with("# otoc-geometry v1") {
            return Err(CoreError::Parse(format!(
                "unsupported geometry header: {header}"
            )));
        }
        let mut l = None;
        let mut probe = None;
        let mut weak = None;
        let mut edges = Vec::new();
        for line in lines {
            if line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap();
            let mut num = |name: &str| -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| CoreError::Parse(format!("{key}: missing {name}")))?
                    .parse()
                    .map_err(|e| CoreError::Parse(format!("{key}: {e}")))
            };
            match key {
                "l" => l = Some(num("L")?),
                "probe" => probe = Some(num("site")?),
                "edge" => {
                    let a = num("site a")?;
                    let b = num("site b")?;
                    edges.push((a, b));
                }
                "weak-link" => {
                    let a = num("site a")?;
                    let b = num("site b")?;
                    weak = Some((a, b));
                }
                other => return Err(CoreError::Parse(format!("unknown key `{other}`"))),
            }
        }
        let l = l.ok_or_else(|| CoreError::Parse("geometry file missing `l`".into()))?;
        Geometry::new(
            l,
            edges,
            probe,
            weak,
            GeometryKind::Custom("file".into()),
        )
    }
}

/// One draw of disordered fields and couplings.
///
/// `h[site][axis] ∈ [-1, 1]`, `J ∈ [0.6, 1.4]` per non-link edge; the weak
/// link (when present) carries `j_link ≥ 0` instead of a sampled coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub fields: Vec<[f64; 3]>,
    pub couplings: BTreeMap<Edge, f64>,
    pub j_link: Option<f64>,
    pub seed_key: u64,
}

/// Uniform i.i.d. draws in the paper's intervals; deterministic in the seed.
pub fn sample_disorder(geometry: &Geometry, j_link: Option<f64>, seed: SeedTree) -> DisorderRealization {
    let mut rng = seed.rng();
    let fields = (0..geometry.l())
        .map(|_| {
            // fixed draw order: x, y, z
            [
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
            ]
        })
        .collect();
    let mut couplings = BTreeMap::new();
    for &e in geometry.edges() {
        if Some(e) == geometry.weak_edge() {
            continue;
        }
        couplings.insert(e, rng.gen_range(0.6..=1.4));
    }
    DisorderRealization {
        fields,
        couplings,
        j_link,
        seed_key: seed.key(),
    }
}

/// Drive protocol. Floquet alternates `H_f` for `T` and `H_c` for `T` within
/// each period; the time-independent drive evolves under `H_f + H_c`. One
/// period corresponds to raw time `2T` in either case, and all correlator
/// times are measured in periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Floquet { half_period: f64 },
    TimeIndependent,
}

impl Drive {
    pub fn floquet() -> Self {
        Drive::Floquet {
            half_period: FRAC_PI_2,
        }
    }

    /// Raw duration of one period.
    pub fn period_raw(&self) -> f64 {
        match self {
            Drive::Floquet { half_period } => 2.0 * half_period,
            Drive::TimeIndependent => 2.0 * FRAC_PI_2,
        }
    }
}

/// Spin–cavity extension for imperfect time reversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    /// spin-cavity coupling g
    pub g: f64,
    /// cavity frequency ω
    pub omega: f64,
    /// max occupation kept in the truncated register
    pub cutoff: usize,
}

/// Full experiment definition: geometry + disorder + drive + optional cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub geometry: Geometry,
    pub disorder: DisorderRealization,
    pub drive: Drive,
    pub cavity: Option<CavityConfig>,
}

impl SystemSpec {
    pub fn new(geometry: Geometry, disorder: DisorderRealization, drive: Drive) -> Self {
        SystemSpec {
            geometry,
            disorder,
            drive,
            cavity: None,
        }
    }

    pub fn with_cavity(mut self, cavity: CavityConfig) -> Self {
        assert!(
            cavity.cutoff <= self.geometry.l(),
            "cavity cutoff must not exceed L"
        );
        self.cavity = Some(cavity);
        self
    }

    pub fn l(&self) -> usize {
        self.geometry.l()
    }

    pub fn cavity_dim(&self) -> usize {
        self.cavity.map(|c| c.cutoff + 1).unwrap_or(1)
    }

    /// Total Hilbert dimension `2^L * cavity_dim`.
    pub fn dim(&self) -> usize {
        (1usize << self.l()) * self.cavity_dim()
    }

    /// The coupling value on an edge (weak link included).
    pub fn coupling(&self, edge: Edge) -> Result<f64> {
        let e = ordered(edge.0, edge.1);
        if Some(e) == self.geometry.weak_edge() {
            return self
                .disorder
                .j_link
                .ok_or_else(|| CoreError::UnknownCoupling("weak link value not set".into()));
        }
        self.disorder
            .couplings
            .get(&e)
            .copied()
            .ok_or_else(|| CoreError::UnknownCoupling(format!("edge ({},{})", e.0, e.1)))
    }

    /// Copy of the spec with one coupling replaced (used by finite differences).
    pub fn with_coupling(&self, coupling: CouplingRef, value: f64) -> Result<SystemSpec> {
        let mut out = self.clone();
        match coupling {
            CouplingRef::Edge(e) => {
                let e = ordered(e.0, e.1);
                if Some(e) == out.geometry.weak_edge() {
                    out.disorder.j_link = Some(value);
                } else if let Some(v) = out.disorder.couplings.get_mut(&e) {
                    *v = value;
                } else {
                    return Err(CoreError::UnknownCoupling(format!("edge ({},{})", e.0, e.1)));
                }
            }
            CouplingRef::WeakLink => {
                if out.geometry.weak_edge().is_none() {
                    return Err(CoreError::UnknownCoupling("weak link".into()));
                }
                out.disorder.j_link = Some(value);
            }
        }
        Ok(out)
    }

    pub fn coupling_value(&self, coupling: CouplingRef) -> Result<f64> {
        match coupling {
            CouplingRef::Edge(e) => self.coupling(e),
            CouplingRef::WeakLink => self
                .disorder
                .j_link
                .ok_or_else(|| CoreError::UnknownCoupling("weak link value not set".into())),
        }
    }
}

/// Which coupling a Fisher-information derivative targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingRef {
    Edge(Edge),
    WeakLink,
}

impl std::fmt::Display for CouplingRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CouplingRef::Edge((a, b)) => write!(f, "J({a},{b})"),
            CouplingRef::WeakLink => write!(f, "J_link"),
        }
    }
}

/// A single Hermitian term of a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub enum HTerm {
    /// `weight * P` for a Hermitian Pauli string (phase ±1, real weight)
    Pauli { weight: f64, op: PauliString },
    /// `weight * a†a`
    CavityNumber { weight: f64 },
    /// `weight * (a† σ⁻_site + a σ⁺_site)` — the excitation-conserving
    /// spin-cavity exchange
    SpinCavityExchange { weight: f64, site: usize },
}

/// Weighted term list defining a Hamiltonian on `qubits` spins and an
/// optional cavity register. Hermitian by construction: every constructor
/// asserts real weights on Hermitian Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerms {
    terms: Vec<HTerm>,
    qubits: usize,
    cavity_dim: usize,
}

impl HamiltonianTerms {
    pub fn new(qubits: usize, cavity_dim: usize) -> Self {
        HamiltonianTerms {
            terms: Vec::new(),
            qubits,
            cavity_dim,
        }
    }

    pub fn push_pauli(&mut self, weight: f64, op: PauliString) {
        assert!(op.is_hermitian(), "Hamiltonian terms must be Hermitian");
        assert!(weight.is_finite());
        if weight != 0.0 {
            self.terms.push(HTerm::Pauli { weight, op });
        }
    }

    pub fn push(&mut self, term: HTerm) {
        self.terms.push(term);
    }

    pub fn terms(&self) -> &[HTerm] {
        &self.terms
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn cavity_dim(&self) -> usize {
        self.cavity_dim
    }

    pub fn dim(&self) -> usize {
        (1usize << self.qubits) * self.cavity_dim
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every term is a single-site Pauli (exactly exponentiable as
    /// a product of one-qubit rotations).
    pub fn is_single_site_only(&self) -> bool {
        self.terms.iter().all(|t| match t {
            HTerm::Pauli { op, .. } => op.weight() <= 1,
            _ => false,
        })
    }

    /// Combine two term lists (`H_f + H_c` for the time-independent drive).
    pub fn concat(&self, other: &HamiltonianTerms) -> HamiltonianTerms {
        assert_eq!(self.qubits, other.qubits);
        assert_eq!(self.cavity_dim, other.cavity_dim);
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out
    }

    /// Spin-sign-flipped copy: Pauli weights negated, cavity terms unchanged.
    /// This is exactly the imperfect-reversal convention.
    pub fn spin_negated(&self) -> HamiltonianTerms {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                HTerm::Pauli { weight, op } => HTerm::Pauli {
                    weight: -weight,
                    op: op.clone(),
                },
                other => other.clone(),
            })
            .collect();
        HamiltonianTerms {
            terms,
            qubits: self.qubits,
            cavity_dim: self.cavity_dim,
        }
    }
}

/// Time direction of an evolution segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

/// `H_f = Σ_{i,α} h_i^α σ^α_i` — one weighted single-site Pauli per
/// (site, axis) with a nonzero field.
pub fn build_field_hamiltonian(spec: &SystemSpec) -> HamiltonianTerms {
    let mut h = HamiltonianTerms::new(spec.l(), spec.cavity_dim());
    for (site, f) in spec.disorder.fields.iter().enumerate() {
        for (k, axis) in Axis::ALL.iter().enumerate() {
            h.push_pauli(f[k], PauliString::single(site, *axis));
        }
    }
    h
}

/// `H_c = Σ_⟨ij⟩ J_ij (σ^x_i σ^x_j + σ^y_i σ^y_j - 2 σ^z_i σ^z_j)`, with the
/// weak-link edge using `J_link` in place of a sampled coupling. A zero
/// `J_link` removes the link terms entirely.
pub fn build_coupling_hamiltonian(spec: &SystemSpec) -> HamiltonianTerms {
    let mut h = HamiltonianTerms::new(spec.l(), spec.cavity_dim());
    for &e in spec.geometry.edges() {
        let j = if Some(e) == spec.geometry.weak_edge() {
            spec.disorder.j_link.unwrap_or(0.0)
        } else {
            spec.disorder.couplings[&e]
        };
        let (a, b) = e;
        h.push_pauli(j, PauliString::two_site(a, Axis::X, b, Axis::X));
        h.push_pauli(j, PauliString::two_site(a, Axis::Y, b, Axis::Y));
        h.push_pauli(-2.0 * j, PauliString::two_site(a, Axis::Z, b, Axis::Z));
    }
    h
}

/// Which Floquet half a cavity Hamiltonian extends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloquetHalf {
    Field,
    Coupling,
}

/// Cavity-extended Hamiltonians `H_1 = ±H_f + g Σ_i (a†σ⁻_i + aσ⁺_i) + ω a†a`
/// (and `H_2` with `H_c`). The spin part flips sign for backward evolution
/// while the spin-cavity exchange and `ω a†a` keep sign `+1` in both
/// directions — time reversal is imperfect by construction.
pub fn build_cavity_hamiltonians(
    spec: &SystemSpec,
    half: FloquetHalf,
    direction: TimeDirection,
) -> Result<HamiltonianTerms> {
    let cavity = spec.cavity.ok_or(CoreError::MissingCavity)?;
    let spin = match half {
        FloquetHalf::Field => build_field_hamiltonian(spec),
        FloquetHalf::Coupling => build_coupling_hamiltonian(spec),
    };
    let mut h = match direction {
        TimeDirection::Forward => spin,
        TimeDirection::Backward => spin.spin_negated(),
    };
    for site in 0..spec.l() {
        h.push(HTerm::SpinCavityExchange {
            weight: cavity.g,
            site,
        });
    }
    h.push(HTerm::CavityNumber {
        weight: cavity.omega,
    });
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_ring_shapes() {
        let c = Geometry::chain(5).unwrap();
        assert_eq!(c.edges().len(), 4);
        let r = Geometry::ring(5).unwrap();
        assert_eq!(r.edges().len(), 5);
        assert!(Geometry::ring(2).is_err());
    }

    #[test]
    fn crossed_chains_distance_matches_declared_d() {
        for d in 0..=5 {
            let g = Geometry::crossed_chains(10, d).unwrap();
            // intersection carries the two crossing arms
            let dist = g.distances_from(0);
            assert_eq!(dist[d], Some(d), "intersection site distance");
            // the first crossing-arm site past the intersection sits at d+1
            assert_eq!(dist[7], Some(d + 1));
            assert_eq!(dist[8], Some(d + 1));
        }
    }

    #[test]
    fn weak_link_neighborhood_is_six_sites() {
        let g = Geometry::weak_link_ring(10).unwrap();
        let sites = g.link_neighborhood(2).unwrap();
        assert_eq!(sites, vec![0, 1, 2, 7, 8, 9]);
    }

    #[test]
    fn three_way_variants_share_probe_segment() {
        for which in ThreeWayVariant::ALL {
            let g = Geometry::three_way(14, which, 3).unwrap();
            assert_eq!(g.l(), 14);
            let dist = g.distances_from(0);
            for s in 0..=3 {
                assert_eq!(dist[s], Some(s));
            }
        }
        // variants differ in structure
        let a = Geometry::three_way(14, ThreeWayVariant::A, 3).unwrap();
        let c = Geometry::three_way(14, ThreeWayVariant::C, 3).unwrap();
        assert_ne!(a.edges(), c.edges());
        assert_eq!(a.edges().len() + 1, c.edges().len()); // loop closes one extra edge
    }

    #[test]
    fn geometry_file_round_trip() {
        let g = Geometry::weak_link_ring(8).unwrap();
        let text = g.to_text();
        let back = Geometry::from_text(&text).unwrap();
        assert_eq!(back.l(), 8);
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.probe(), g.probe());
        assert_eq!(back.weak_edge(), g.weak_edge());
        assert!(Geometry::from_text("no header\nl 3").is_err());
    }

    #[test]
    fn disorder_bounds_and_determinism() {
        let g = Geometry::ring(6).unwrap();
        let seed = SeedTree::new(3).child("dis");
        let a = sample_disorder(&g, None, seed);
        let b = sample_disorder(&g, None, seed);
        assert_eq!(a, b);
        for f in &a.fields {
            for v in f {
                assert!((-1.0..=1.0).contains(v));
            }
        }
        for v in a.couplings.values() {
            assert!((0.6..=1.4).contains(v));
        }
    }

    #[test]
    fn disorder_moments_match_uniform_intervals() {
        let g = Geometry::chain(2).unwrap();
        let root = SeedTree::new(17).child("mom");
        let n = 10_000;
        let mut j_sum = 0.0;
        let mut j_min = f64::INFINITY;
        let mut j_max = f64::NEG_INFINITY;
        let mut h_sum = 0.0;
        for k in 0..n {
            let d = sample_disorder(&g, None, root.index(k));
            let j = d.couplings[&(0, 1)];
            j_sum += j;
            j_min = j_min.min(j);
            j_max = j_max.max(j);
            h_sum += d.fields[0][0];
        }
        let j_mean = j_sum / n as f64;
        assert!(j_min >= 0.6 && j_max <= 1.4);
        assert!((j_mean - 1.0).abs() < 0.01, "J mean {j_mean}");
        assert!((h_sum / n as f64).abs() < 0.02);
    }

    #[test]
    fn field_hamiltonian_examples() {
        // L=1 with h = (0,0,1): the single term 1.0 * Z_0.
        let g = Geometry::chain(1).unwrap();
        let mut dis = sample_disorder(&g, None, SeedTree::new(1));
        dis.fields[0] = [0.0, 0.0, 1.0];
        let spec = SystemSpec::new(g.clone(), dis.clone(), Drive::floquet());
        let h = build_field_hamiltonian(&spec);
        assert_eq!(h.terms().len(), 1);
        match &h.terms()[0] {
            HTerm::Pauli { weight, op } => {
                assert_eq!(*weight, 1.0);
                assert_eq!(op, &PauliString::single(0, Axis::Z));
            }
            _ => panic!("expected Pauli term"),
        }
        // all-zero fields: empty list
        dis.fields[0] = [0.0; 3];
        let spec = SystemSpec::new(g, dis, Drive::floquet());
        assert!(build_field_hamiltonian(&spec).is_empty());
    }

    #[test]
    fn coupling_hamiltonian_pattern_and_link_removal() {
        let g = Geometry::chain(2).unwrap();
        let mut dis = sample_disorder(&g, None, SeedTree::new(2));
        dis.couplings.insert((0, 1), 1.0);
        let spec = SystemSpec::new(g, dis, Drive::floquet());
        let h = build_coupling_hamiltonian(&spec);
        let weights: Vec<f64> = h
            .terms()
            .iter()
            .map(|t| match t {
                HTerm::Pauli { weight, .. } => *weight,
                _ => panic!(),
            })
            .collect();
        assert_eq!(weights, vec![1.0, 1.0, -2.0]);

        // J_link = 0 removes the link terms
        let g = Geometry::weak_link_ring(4).unwrap();
        let dis = sample_disorder(&g, Some(0.0), SeedTree::new(4));
        let spec = SystemSpec::new(g, dis, Drive::floquet());
        let h = build_coupling_hamiltonian(&spec);
        assert_eq!(h.terms().len(), 3 * 3); // 4 edges, one silenced
    }

    #[test]
    fn cavity_hamiltonian_signs_and_terms() {
        let g = Geometry::chain(3).unwrap();
        let dis = sample_disorder(&g, None, SeedTree::new(5));
        let spec = SystemSpec::new(g, dis, Drive::floquet()).with_cavity(CavityConfig {
            g: 0.25,
            omega: 1.7,
            cutoff: 3,
        });
        let fwd = build_cavity_hamiltonians(&spec, FloquetHalf::Field, TimeDirection::Forward)
            .unwrap();
        let bwd = build_cavity_hamiltonians(&spec, FloquetHalf::Field, TimeDirection::Backward)
            .unwrap();
        let omega_terms: Vec<&HTerm> = fwd
            .terms()
            .iter()
            .filter(|t| matches!(t, HTerm::CavityNumber { .. }))
            .collect();
        assert_eq!(omega_terms.len(), 1);
        match omega_terms[0] {
            HTerm::CavityNumber { weight } => assert_eq!(*weight, 1.7),
            _ => unreachable!(),
        }
        // spin weights flip, cavity weights do not
        for (t_f, t_b) in fwd.terms().iter().zip(bwd.terms()) {
            match (t_f, t_b) {
                (HTerm::Pauli { weight: wf, .. }, HTerm::Pauli { weight: wb, .. }) => {
                    assert_eq!(*wf, -*wb)
                }
                (HTerm::SpinCavityExchange { weight: wf, .. }, HTerm::SpinCavityExchange { weight: wb, .. }) => {
                    assert_eq!(*wf, *wb)
                }
                (HTerm::CavityNumber { weight: wf }, HTerm::CavityNumber { weight: wb }) => {
                    assert_eq!(*wf, *wb)
                }
                _ => panic!("term lists misaligned"),
            }
        }
        // missing cavity config errors
        let g = Geometry::chain(2).unwrap();
        let dis = sample_disorder(&g, None, SeedTree::new(6));
        let bare = SystemSpec::new(g, dis, Drive::floquet());
        assert!(build_cavity_hamiltonians(&bare, FloquetHalf::Field, TimeDirection::Forward).is_err());
    }

    #[test]
    fn coupling_lookup_and_replacement() {
        let g = Geometry::weak_link_ring(5).unwrap();
        let dis = sample_disorder(&g, Some(0.3), SeedTree::new(8));
        let spec = SystemSpec::new(g, dis, Drive::floquet());
        assert_eq!(spec.coupling((0, 4)).unwrap(), 0.3);
        let bumped = spec.with_coupling(CouplingRef::WeakLink, 0.4).unwrap();
        assert_eq!(bumped.coupling((4, 0)).unwrap(), 0.4);
        let e = (1, 2);
        let j = spec.coupling(e).unwrap();
        let bumped = spec.with_coupling(CouplingRef::Edge(e), j + 0.01).unwrap();
        assert!((bumped.coupling(e).unwrap() - j - 0.01).abs() < 1e-15);
        assert!(spec.with_coupling(CouplingRef::Edge((0, 2)), 1.0).is_err());
    }
}
