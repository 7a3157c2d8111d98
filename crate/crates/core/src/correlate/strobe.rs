use num_complex::Complex64;

use crate::correlate::backend::EvolutionBackend;
use crate::correlate::request::CorrelatorRequest;
use crate::dense::{CMat, CScalar};
use crate::error::{CoreError, Result};
use crate::evolve::chebyshev;
use crate::evolve::{rotations, CsrMatrix};
use crate::operators::{Axis, PauliString, StateVector};
use crate::system::{
    build_coupling_hamiltonian, build_field_hamiltonian, Drive, SystemSpec,
};

fn is_half_multiple(t: f64) -> bool {
    (2.0 * t - (2.0 * t).round()).abs() < 1e-9
}

/// True when the stroboscopic cache can serve this request: no cavity, and
/// every needed phase (the time grid, plus half times for mid-protocol
/// insertions) lands on a multiple of half a period.
pub fn supports_strobe(system: &SystemSpec, request: &CorrelatorRequest) -> bool {
    if system.cavity.is_some() {
        return false;
    }
    if !request.times.iter().all(|&t| is_half_multiple(t)) {
        return false;
    }
    if request.needs_half_times() && !request.times.iter().all(|&t| is_half_multiple(t / 2.0)) {
        return false;
    }
    true
}

/// Dense cached one-period (and half-period) Floquet maps with a short ladder
/// of matrix powers, so any stroboscopic leg costs a handful of dense
/// matrix-vector products instead of a Krylov solve per half period.
///
/// Maps are built once per disorder realization in double precision (Lanczos
/// columns at tolerance 1e-10) and optionally downcast: with read-out noise
/// at the percent level, single-precision propagation is far below the
/// physics scales, and halves the memory traffic.
pub struct StrobeBackend<C: CScalar> {
    l: usize,
    dim: usize,
    /// first half-period map (E_f for Floquet, e^{-iHT} for time-independent)
    half_a: CMat<C>,
    half_a_adj: CMat<C>,
    /// second half-period map (E_c for Floquet; same as `half_a` otherwise)
    half_b: Option<CMat<C>>,
    half_b_adj: Option<CMat<C>>,
    /// (periods, F^periods, adjoint), sorted by descending periods
    powers: Vec<(usize, CMat<C>, CMat<C>)>,
}

impl<C: CScalar> StrobeBackend<C> {
    /// Build the cache for a request's time grid. `needs_halves` follows from
    /// the request families; `max_periods` from its largest time.
    pub fn for_request(system: &SystemSpec, request: &CorrelatorRequest) -> Result<Self> {
        if !supports_strobe(system, request) {
            return Err(CoreError::NotStroboscopic {
                t: *request.times.last().unwrap_or(&f64::NAN),
            });
        }
        let max_t = request.times.iter().cloned().fold(0.0, f64::max);
        Self::build(system, max_t.ceil() as usize, request.needs_half_times())
    }

    pub fn build(system: &SystemSpec, max_periods: usize, needs_halves: bool) -> Result<Self> {
        if system.cavity.is_some() {
            return Err(CoreError::NotStroboscopic { t: f64::NAN });
        }
        let l = system.l();
        let dim = 1usize << l;
        let build_tol = 1e-11;
        let hf = build_field_hamiltonian(system);
        let hc = build_coupling_hamiltonian(system);
        let half = system.drive.period_raw() / 2.0;

        let (half_a64, half_b64, f64mat): (
            CMat<Complex64>,
            Option<CMat<Complex64>>,
            CMat<Complex64>,
        ) = match system.drive {
            Drive::Floquet { .. } => {
                // E_f is an exact product of one-qubit rotations,
                // materialized by applying them to identity columns
                let mut ef = CMat::<Complex64>::zeros(dim, dim);
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                for col in 0..dim {
                    v.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                    v[col] = Complex64::new(1.0, 0.0);
                    rotations::apply_single_site_exponential(&hf, half, &mut v);
                    for (row, val) in v.iter().enumerate() {
                        ef.set(row, col, *val);
                    }
                }
                // F = E_c E_f in one Chebyshev block application over all
                // of E_f's columns at once
                let csr_c = CsrMatrix::from_terms(&hc);
                let f = chebyshev::expm_block(&csr_c, half, &ef, build_tol);
                let ec = if needs_halves {
                    let id = CMat::<Complex64>::identity(dim);
                    Some(chebyshev::expm_block(&csr_c, half, &id, build_tol))
                } else {
                    None
                };
                (ef, ec, f)
            }
            Drive::TimeIndependent => {
                let hfull = hf.concat(&hc);
                let csr = CsrMatrix::from_terms(&hfull);
                let id = CMat::<Complex64>::identity(dim);
                let g = chebyshev::expm_block(&csr, half, &id, build_tol);
                let f = g.matmul(&g);
                (g, None, f)
            }
        };

        // power ladder F, F², F⁴, F⁸... up to the grid horizon, multiplied in
        // the target precision
        let mut powers: Vec<(usize, CMat<C>, CMat<C>)> = Vec::new();
        let fc: CMat<C> = f64mat.cast();
        powers.push((1, fc.clone(), fc.adjoint()));
        let mut cur: CMat<C> = fc;
        let mut n = 1usize;
        while 2 * n <= max_periods.max(1) {
            cur = cur.matmul(&cur);
            n *= 2;
            powers.push((n, cur.clone(), cur.adjoint()));
        }
        powers.sort_by(|a, b| b.0.cmp(&a.0));

        let half_a: CMat<C> = half_a64.cast();
        let half_a_adj = half_a.adjoint();
        let (half_b, half_b_adj) = match (&system.drive, half_b64) {
            (Drive::TimeIndependent, _) => (None, None),
            (_, Some(ec)) => {
                let c: CMat<C> = ec.cast();
                let adj = c.adjoint();
                (Some(c), Some(adj))
            }
            (_, None) => (None, None),
        };

        Ok(StrobeBackend {
            l,
            dim,
            half_a,
            half_a_adj,
            half_b,
            half_b_adj,
            powers,
        })
    }

    fn second_half(&self) -> (&CMat<C>, &CMat<C>) {
        match (&self.half_b, &self.half_b_adj) {
            (Some(b), Some(badj)) => (b, badj),
            // time-independent drive: both halves are the same map
            _ => (&self.half_a, &self.half_a_adj),
        }
    }

    fn matvec_into(m: &CMat<C>, x: &mut Vec<C>, scratch: &mut Vec<C>) {
        scratch.resize(x.len(), C::zero());
        m.matvec(x, scratch);
        std::mem::swap(x, scratch);
    }

    /// Ordered cached-map sequence realizing the walk `from -> to`.
    fn jumps(&self, from: f64, to: f64) -> Result<Vec<&CMat<C>>> {
        if !is_half_multiple(from) || !is_half_multiple(to) {
            return Err(CoreError::NotStroboscopic {
                t: if is_half_multiple(from) { to } else { from },
            });
        }
        let mut seq = Vec::new();
        let mut pos = (2.0 * from).round() as i64; // half-periods
        let target = (2.0 * to).round() as i64;
        while pos < target {
            if pos.rem_euclid(2) == 1 {
                seq.push(self.second_half().0);
                pos += 1;
            } else {
                let remaining = (target - pos) / 2;
                if remaining >= 1 {
                    let &(n, ref mat, _) = self
                        .powers
                        .iter()
                        .find(|(n, _, _)| *n as i64 <= remaining)
                        .expect("power ladder always holds F^1");
                    seq.push(mat);
                    pos += 2 * n as i64;
                } else {
                    seq.push(&self.half_a);
                    pos += 1;
                }
            }
        }
        while pos > target {
            if pos.rem_euclid(2) == 1 {
                seq.push(&self.half_a_adj);
                pos -= 1;
            } else {
                let remaining = (pos - target) / 2;
                if remaining >= 1 {
                    let &(n, _, ref adj) = self
                        .powers
                        .iter()
                        .find(|(n, _, _)| *n as i64 <= remaining)
                        .expect("power ladder always holds F^1");
                    seq.push(adj);
                    pos -= 2 * n as i64;
                } else {
                    seq.push(self.second_half().1);
                    pos -= 1;
                }
            }
        }
        Ok(seq)
    }
}

impl<C: CScalar> EvolutionBackend for StrobeBackend<C> {
    type State = Vec<C>;

    fn qubits(&self) -> usize {
        self.l
    }

    fn cavity_dim(&self) -> usize {
        1
    }

    fn prepare(&self, psi: &StateVector) -> Vec<C> {
        assert_eq!(psi.dim(), self.dim);
        psi.amplitudes().iter().map(|&z| C::from_c64(z)).collect()
    }

    fn advance(&self, s: &mut Vec<C>, from: f64, to: f64) -> Result<()> {
        let mut scratch: Vec<C> = Vec::new();
        for m in self.jumps(from, to)? {
            Self::matvec_into(m, s, &mut scratch);
        }
        Ok(())
    }

    fn advance_block(&self, states: &mut [Vec<C>], from: f64, to: f64) -> Result<()> {
        if states.is_empty() {
            return Ok(());
        }
        let seq = self.jumps(from, to)?;
        if seq.is_empty() {
            return Ok(());
        }
        if states.len() < 4 {
            let mut scratch: Vec<C> = Vec::new();
            for s in states.iter_mut() {
                for m in &seq {
                    Self::matvec_into(m, s, &mut scratch);
                }
            }
            return Ok(());
        }
        // pack into a dim × k block so each jump is one gemm
        let k_cols = states.len();
        let mut x = CMat::<C>::zeros(self.dim, k_cols);
        for (s, st) in states.iter().enumerate() {
            for (i, &a) in st.iter().enumerate() {
                x.data[i * k_cols + s] = a;
            }
        }
        for m in seq {
            x = m.matmul(&x);
        }
        for (s, st) in states.iter_mut().enumerate() {
            for (i, a) in st.iter_mut().enumerate() {
                *a = x.data[i * k_cols + s];
            }
        }
        Ok(())
    }

    fn apply_pauli(&self, s: &mut Vec<C>, p: &PauliString) -> Result<()> {
        if let Some(max) = p.max_site() {
            if max >= self.l {
                return Err(CoreError::SiteOutOfRange {
                    site: max,
                    l: self.l,
                });
            }
        }
        crate::operators::pauli::apply_pauli_amps(p, self.l, s);
        Ok(())
    }

    fn apply_global_rotation(&self, s: &mut Vec<C>, axis: Axis, phi: f64) {
        let v = match axis {
            Axis::X => (phi, 0.0, 0.0),
            Axis::Y => (0.0, phi, 0.0),
            Axis::Z => (0.0, 0.0, phi),
        };
        let g64 = rotations::rotation_gate(v.0, v.1, v.2);
        let gate = [
            C::from_c64(g64[0]),
            C::from_c64(g64[1]),
            C::from_c64(g64[2]),
            C::from_c64(g64[3]),
        ];
        for site in 0..self.l {
            rotations::apply_single_qubit_gate(s, self.l, site, gate);
        }
    }

    fn inner(&self, a: &Vec<C>, b: &Vec<C>) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            acc += x.conj().to_c64() * y.to_c64();
        }
        acc
    }
}
