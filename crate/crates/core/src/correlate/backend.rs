use num_complex::Complex64;

use crate::dense::CMat;
use crate::error::Result;
use crate::evolve::{expm_multiply_csr, phase_pieces, rotations, CsrMatrix, HamKind, KrylovOptions};
use crate::operators::{Axis, PauliString, StateVector};
use crate::system::{
    build_cavity_hamiltonians, build_coupling_hamiltonian, build_field_hamiltonian, FloquetHalf,
    HamiltonianTerms, SystemSpec, TimeDirection,
};

/// Uniform interface the correlator engine drives: prepare a working state,
/// move it between schedule phases (in periods, either direction), apply
/// operator insertions, and take inner products.
///
/// `advance` with `to < from` is *backward protocol evolution*: without a
/// cavity this is the exact inverse, with a cavity it evolves under the
/// spin-negated Hamiltonians while the cavity terms keep their sign.
pub trait EvolutionBackend: Sync {
    type State: Clone + Send;

    fn qubits(&self) -> usize;
    fn cavity_dim(&self) -> usize;
    fn prepare(&self, psi: &StateVector) -> Self::State;
    fn advance(&self, s: &mut Self::State, from: f64, to: f64) -> Result<()>;
    /// Move a batch of states over the same interval. Backends override this
    /// when evolving together is cheaper (dense gemm, Chebyshev blocks).
    fn advance_block(&self, states: &mut [Self::State], from: f64, to: f64) -> Result<()> {
        for s in states.iter_mut() {
            self.advance(s, from, to)?;
        }
        Ok(())
    }
    fn apply_pauli(&self, s: &mut Self::State, p: &PauliString) -> Result<()>;
    /// `e^{-iφ Σ_x σ^axis_x}` over all sites.
    fn apply_global_rotation(&self, s: &mut Self::State, axis: Axis, phi: f64);
    /// `⟨a|b⟩`, accumulated in double precision.
    fn inner(&self, a: &Self::State, b: &Self::State) -> Complex64;
}

/// Matrix-free backend: sparse Hamiltonian action with Lanczos propagation.
/// Handles every drive, fractional times, and the spin–cavity model.
/// Batched legs (`advance_block`) go through a Chebyshev block expansion over
/// cached Ritz spectral bounds, which amortizes the Hamiltonian streaming
/// across the batch.
pub struct KrylovBackend {
    spec: SystemSpec,
    opts: KrylovOptions,
    /// field terms kept for the exact single-site rotation fast path
    field_terms: Option<HamiltonianTerms>,
    field_fwd: Option<Bounded>,
    field_bwd: Option<Bounded>,
    coupling_fwd: Bounded,
    coupling_bwd: Option<Bounded>,
    full_fwd: Option<Bounded>,
    full_bwd: Option<Bounded>,
}

/// CSR matrix with its cached spectral-interval estimate.
struct Bounded {
    m: CsrMatrix,
    bounds: (f64, f64),
}

impl Bounded {
    fn new(m: CsrMatrix) -> Self {
        let bounds = m.ritz_bounds();
        Bounded { m, bounds }
    }
}

impl KrylovBackend {
    pub fn new(spec: &SystemSpec) -> Result<Self> {
        Self::with_options(spec, KrylovOptions::default())
    }

    pub fn with_options(spec: &SystemSpec, opts: KrylovOptions) -> Result<Self> {
        let has_cavity = spec.cavity.is_some();
        let time_independent = matches!(spec.drive, crate::system::Drive::TimeIndependent);

        let (field_terms, field_fwd, field_bwd, coupling_fwd, coupling_bwd) = if has_cavity {
            let h1f = build_cavity_hamiltonians(spec, FloquetHalf::Field, TimeDirection::Forward)?;
            let h1b = build_cavity_hamiltonians(spec, FloquetHalf::Field, TimeDirection::Backward)?;
            let h2f =
                build_cavity_hamiltonians(spec, FloquetHalf::Coupling, TimeDirection::Forward)?;
            let h2b =
                build_cavity_hamiltonians(spec, FloquetHalf::Coupling, TimeDirection::Backward)?;
            (
                None,
                Some(Bounded::new(CsrMatrix::from_terms(&h1f))),
                Some(Bounded::new(CsrMatrix::from_terms(&h1b))),
                Bounded::new(CsrMatrix::from_terms(&h2f)),
                Some(Bounded::new(CsrMatrix::from_terms(&h2b))),
            )
        } else {
            let hf = build_field_hamiltonian(spec);
            let hc = build_coupling_hamiltonian(spec);
            // backward evolution is exact reversal: reuse the forward matrix
            // with negated time
            (
                Some(hf),
                None,
                None,
                Bounded::new(CsrMatrix::from_terms(&hc)),
                None,
            )
        };

        let (full_fwd, full_bwd) = if time_independent {
            if has_cavity {
                let spin = build_field_hamiltonian(spec).concat(&build_coupling_hamiltonian(spec));
                let mut fwd = spin.clone();
                let mut bwd = spin.spin_negated();
                let cavity = spec.cavity.unwrap();
                for h in [&mut fwd, &mut bwd] {
                    for site in 0..spec.l() {
                        h.push(crate::system::HTerm::SpinCavityExchange {
                            weight: cavity.g,
                            site,
                        });
                    }
                    h.push(crate::system::HTerm::CavityNumber {
                        weight: cavity.omega,
                    });
                }
                (
                    Some(Bounded::new(CsrMatrix::from_terms(&fwd))),
                    Some(Bounded::new(CsrMatrix::from_terms(&bwd))),
                )
            } else {
                let spin = build_field_hamiltonian(spec).concat(&build_coupling_hamiltonian(spec));
                (Some(Bounded::new(CsrMatrix::from_terms(&spin))), None)
            }
        } else {
            (None, None)
        };

        Ok(KrylovBackend {
            spec: spec.clone(),
            opts,
            field_terms,
            field_fwd,
            field_bwd,
            coupling_fwd,
            coupling_bwd,
            full_fwd,
            full_bwd,
        })
    }

    pub fn options(&self) -> &KrylovOptions {
        &self.opts
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// Which matrix and signed raw time realize one schedule piece.
    fn piece_operator(&self, kind: HamKind, raw: f64, forward: bool) -> Option<(&Bounded, f64)> {
        match kind {
            HamKind::Field => {
                if self.field_terms.is_some() {
                    None // rotation fast path
                } else if forward {
                    Some((self.field_fwd.as_ref().unwrap(), raw))
                } else {
                    Some((self.field_bwd.as_ref().unwrap(), raw))
                }
            }
            HamKind::Coupling => match (forward, &self.coupling_bwd) {
                (true, _) => Some((&self.coupling_fwd, raw)),
                (false, None) => Some((&self.coupling_fwd, -raw)),
                (false, Some(bwd)) => Some((bwd, raw)),
            },
            HamKind::Full => {
                let fwd = self.full_fwd.as_ref().expect("time-independent drive");
                match (forward, &self.full_bwd) {
                    (true, _) => Some((fwd, raw)),
                    (false, None) => Some((fwd, -raw)),
                    (false, Some(bwd)) => Some((bwd, raw)),
                }
            }
        }
    }

    fn apply_piece(
        &self,
        amps: &mut [Complex64],
        kind: HamKind,
        raw: f64,
        forward: bool,
    ) -> Result<()> {
        match self.piece_operator(kind, raw, forward) {
            None => {
                // no cavity: exact product of one-qubit rotations
                let t = if forward { raw } else { -raw };
                rotations::apply_single_site_exponential(
                    self.field_terms.as_ref().unwrap(),
                    t,
                    amps,
                );
                Ok(())
            }
            Some((b, t)) => expm_multiply_csr(&b.m, t, amps, &self.opts),
        }
    }
}

impl EvolutionBackend for KrylovBackend {
    type State = StateVector;

    fn qubits(&self) -> usize {
        self.spec.l()
    }

    fn cavity_dim(&self) -> usize {
        self.spec.cavity_dim()
    }

    fn prepare(&self, psi: &StateVector) -> StateVector {
        assert_eq!(psi.qubits(), self.spec.l());
        assert_eq!(psi.cavity_dim(), self.spec.cavity_dim());
        psi.clone()
    }

    fn advance(&self, s: &mut StateVector, from: f64, to: f64) -> Result<()> {
        if (to - from).abs() < 1e-12 {
            return Ok(());
        }
        let forward = to > from;
        let (lo, hi) = if forward { (from, to) } else { (to, from) };
        let mut pieces = phase_pieces(&self.spec.drive, lo, hi);
        if !forward {
            pieces.reverse();
        }
        for p in pieces {
            self.apply_piece(s.amplitudes_mut(), p.kind, p.raw_duration, forward)?;
        }
        Ok(())
    }

    fn advance_block(&self, states: &mut [StateVector], from: f64, to: f64) -> Result<()> {
        if states.is_empty() || (to - from).abs() < 1e-12 {
            return Ok(());
        }
        if states.len() < 4 {
            for s in states.iter_mut() {
                self.advance(s, from, to)?;
            }
            return Ok(());
        }
        let forward = to > from;
        let (lo, hi) = if forward { (from, to) } else { (to, from) };
        let mut pieces = phase_pieces(&self.spec.drive, lo, hi);
        if !forward {
            pieces.reverse();
        }
        let dim = states[0].dim();
        let k_cols = states.len();
        let mut block: Option<CMat<Complex64>> = None;
        for p in pieces {
            match self.piece_operator(p.kind, p.raw_duration, forward) {
                None => {
                    // rotations are cheap per state; flush any pending block
                    if let Some(b) = block.take() {
                        unpack_block(&b, states);
                    }
                    let t = if forward {
                        p.raw_duration
                    } else {
                        -p.raw_duration
                    };
                    for s in states.iter_mut() {
                        rotations::apply_single_site_exponential(
                            self.field_terms.as_ref().unwrap(),
                            t,
                            s.amplitudes_mut(),
                        );
                    }
                }
                Some((b_op, t)) => {
                    let x = match block.take() {
                        Some(b) => b,
                        None => pack_block(states, dim, k_cols),
                    };
                    let y = crate::evolve::chebyshev::expm_block_bounded(
                        &b_op.m,
                        t,
                        &x,
                        (self.opts.tol * 1e-1).max(1e-13),
                        b_op.bounds,
                    );
                    block = Some(y);
                }
            }
        }
        if let Some(b) = block.take() {
            unpack_block(&b, states);
        }
        Ok(())
    }

    fn apply_pauli(&self, s: &mut StateVector, p: &PauliString) -> Result<()> {
        crate::operators::apply_pauli_mut(p, s)
    }

    fn apply_global_rotation(&self, s: &mut StateVector, axis: Axis, phi: f64) {
        let l = s.qubits();
        let v = match axis {
            Axis::X => (phi, 0.0, 0.0),
            Axis::Y => (0.0, phi, 0.0),
            Axis::Z => (0.0, 0.0, phi),
        };
        let gate = rotations::rotation_gate(v.0, v.1, v.2);
        for site in 0..l {
            rotations::apply_single_qubit_gate(s.amplitudes_mut(), l, site, gate);
        }
    }

    fn inner(&self, a: &StateVector, b: &StateVector) -> Complex64 {
        a.inner(b)
    }
}

/// Stack state amplitudes into a `dim × k` row-major block (state `s` in
/// column `s`).
fn pack_block(states: &[StateVector], dim: usize, k_cols: usize) -> CMat<Complex64> {
    let mut m = CMat::<Complex64>::zeros(dim, k_cols);
    for (s, st) in states.iter().enumerate() {
        for (i, &a) in st.amplitudes().iter().enumerate() {
            m.data[i * k_cols + s] = a;
        }
    }
    m
}

fn unpack_block(block: &CMat<Complex64>, states: &mut [StateVector]) {
    let k_cols = states.len();
    for (s, st) in states.iter_mut().enumerate() {
        for (i, a) in st.amplitudes_mut().iter_mut().enumerate() {
            *a = block.data[i * k_cols + s];
        }
    }
}

/// Convenience: echo fidelity `|⟨ψ| B(t)F(t) |ψ⟩|²` of forward evolution to
/// `t` followed by protocol reversal back to 0 — equals 1 without a cavity
/// and strictly less once the spin-cavity coupling is on.
pub fn echo_fidelity(spec: &SystemSpec, psi: &StateVector, t: f64) -> Result<f64> {
    let backend = KrylovBackend::new(spec)?;
    let mut s = backend.prepare(psi);
    backend.advance(&mut s, 0.0, t)?;
    backend.advance(&mut s, t, 0.0)?;
    let overlap = psi.inner(&s);
    Ok(overlap.norm_sqr())
}
