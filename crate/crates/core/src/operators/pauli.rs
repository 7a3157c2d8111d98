use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::operators::state::StateVector;

/// Single-site Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn label(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// A fourth root of unity `i^k`, the phase carried by a Pauli string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn as_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    /// True when the phase is ±1.
    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }
}

/// A tensor product of single-qubit Paulis over a support set, times a phase
/// in `{+1, -1, +i, -i}`. The identity is the empty map with phase `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    factors: BTreeMap<usize, Axis>,
    phase: Phase,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            factors: BTreeMap::new(),
            phase: Phase::ONE,
        }
    }

    /// Single-site Pauli `σ^axis_site`.
    pub fn single(site: usize, axis: Axis) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(site, axis);
        PauliString {
            factors,
            phase: Phase::ONE,
        }
    }

    /// Two-site product `σ^axis_a σ^axis_b` (distinct sites).
    pub fn two_site(a: usize, axis_a: Axis, b: usize, axis_b: Axis) -> Self {
        assert_ne!(a, b, "two_site requires distinct sites");
        let mut factors = BTreeMap::new();
        factors.insert(a, axis_a);
        factors.insert(b, axis_b);
        PauliString {
            factors,
            phase: Phase::ONE,
        }
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn factors(&self) -> &BTreeMap<usize, Axis> {
        &self.factors
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// Largest site index in the support, if any.
    pub fn max_site(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    /// Hermitian iff the phase is real (each Pauli factor is Hermitian).
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// Product `self * other`, with the accumulated phase from the
    /// single-site relations `σ_a σ_b = δ_ab 1 + i ε_abc σ_c`.
    pub fn multiply(&self, other: &PauliString) -> PauliString {
        let mut phase = self.phase.mul(other.phase);
        let mut factors = self.factors.clone();
        for (&site, &axis_b) in &other.factors {
            match factors.remove(&site) {
                None => {
                    factors.insert(site, axis_b);
                }
                Some(axis_a) if axis_a == axis_b => {
                    // σ² = 1 : drop the site
                }
                Some(axis_a) => {
                    let (ph, axis_c) = pauli_product(axis_a, axis_b);
                    phase = phase.mul(ph);
                    factors.insert(site, axis_c);
                }
            }
        }
        PauliString { factors, phase }
    }

    /// Masks used by the fast apply kernels: (flip, phase-sign, number of Ys).
    /// `flip` has a bit set for every X/Y site; `sign` for every Y/Z site.
    pub(crate) fn masks(&self) -> (u64, u64, u32) {
        let mut flip = 0u64;
        let mut sign = 0u64;
        let mut n_y = 0u32;
        for (&site, &axis) in &self.factors {
            match axis {
                Axis::X => flip |= 1 << site,
                Axis::Y => {
                    flip |= 1 << site;
                    sign |= 1 << site;
                    n_y += 1;
                }
                Axis::Z => sign |= 1 << site,
            }
        }
        (flip, sign, n_y)
    }

    /// Base coefficient `phase * i^{n_Y}`; the per-basis-state coefficient is
    /// `base * (-1)^{popcount(index & sign_mask)}`.
    pub(crate) fn base_coefficient(&self) -> Complex64 {
        let (_, _, n_y) = self.masks();
        self.phase.as_complex() * Phase((n_y % 4) as u8).as_complex()
    }

    fn check_sites(&self, qubits: usize) -> Result<()> {
        if let Some(max) = self.max_site() {
            if max >= qubits {
                return Err(CoreError::SiteOutOfRange {
                    site: max,
                    l: qubits,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            Phase::ONE => "",
            Phase::MINUS_ONE => "-",
            Phase::I => "i",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        if self.factors.is_empty() {
            return write!(f, "I");
        }
        for (site, axis) in &self.factors {
            write!(f, "{}{}", axis.label(), site)?;
        }
        Ok(())
    }
}

fn pauli_product(a: Axis, b: Axis) -> (Phase, Axis) {
    use Axis::*;
    match (a, b) {
        (X, Y) => (Phase::I, Z),
        (Y, X) => (Phase::MINUS_I, Z),
        (Y, Z) => (Phase::I, X),
        (Z, Y) => (Phase::MINUS_I, X),
        (Z, X) => (Phase::I, Y),
        (X, Z) => (Phase::MINUS_I, Y),
        _ => unreachable!("equal axes handled by caller"),
    }
}

/// Apply a Pauli string to raw amplitudes laid out as `spin + 2^l * cavity`.
/// The cavity register is untouched. Generic over the scalar so the dense
/// stroboscopic backend can reuse it at reduced precision.
pub(crate) fn apply_pauli_amps<C: crate::dense::CScalar>(
    p: &PauliString,
    l: usize,
    amps: &mut [C],
) {
    let sdim = 1usize << l;
    debug_assert_eq!(amps.len() % sdim, 0);
    let (flip, sign, _) = p.masks();
    let base = C::from_c64(p.base_coefficient());
    let neg_base = base.neg();
    let flip = flip as usize;
    for block in amps.chunks_mut(sdim) {
        if flip == 0 {
            for (i, a) in block.iter_mut().enumerate() {
                let c = if ((i as u64) & sign).count_ones() % 2 == 0 {
                    base
                } else {
                    neg_base
                };
                *a = a.mul(c);
            }
        } else {
            // Visit each {i, i^flip} pair once.
            for i in 0..sdim {
                let j = i ^ flip;
                if j < i {
                    continue;
                }
                let ci = if ((i as u64) & sign).count_ones() % 2 == 0 {
                    base
                } else {
                    neg_base
                };
                let cj = if ((j as u64) & sign).count_ones() % 2 == 0 {
                    base
                } else {
                    neg_base
                };
                let ai = block[i];
                block[i] = block[j].mul(cj);
                block[j] = ai.mul(ci);
            }
        }
    }
}

/// Returns `p|ψ⟩`. Norm-preserving; the cavity register is untouched.
pub fn apply_pauli(p: &PauliString, psi: &StateVector) -> Result<StateVector> {
    let mut out = psi.clone();
    apply_pauli_mut(p, &mut out)?;
    Ok(out)
}

pub fn apply_pauli_mut(p: &PauliString, psi: &mut StateVector) -> Result<()> {
    if let Some(max) = p.max_site() {
        if max >= psi.qubits() {
            return Err(CoreError::SiteOutOfRange {
                site: max,
                l: psi.qubits(),
            });
        }
    }
    let l = psi.qubits();
    apply_pauli_amps(p, l, psi.amplitudes_mut());
    Ok(())
}

/// `Re⟨ψ|p|ψ⟩`, computed without materializing `p|ψ⟩`.
pub fn pauli_expectation(p: &PauliString, psi: &StateVector) -> Result<f64> {
    p.check_sites(psi.qubits())?;
    let sdim = psi.spin_dim();
    let (flip, sign, _) = p.masks();
    let base = p.base_coefficient();
    let flip = flip as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for block in psi.amplitudes().chunks(sdim) {
        for (i, a) in block.iter().enumerate() {
            // (p ψ)[i ^ flip] = coeff(i) ψ[i]
            let s = if ((i as u64) & sign).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += block[i ^ flip].conj() * (base * s) * a;
        }
    }
    let val = acc.re;
    debug_assert!(
        !p.is_hermitian() || val.abs() <= 1.0 + 1e-10 * psi.norm().max(1.0),
        "expectation out of range: {val}"
    );
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn x_flips_basis_state() {
        // X on site 0 applied to |00⟩ gives the site-0-flipped basis state.
        let psi = StateVector::zero_state(2);
        let out = apply_pauli(&PauliString::single(0, Axis::X), &psi).unwrap();
        assert_eq!(out.amplitudes()[0b01], c(1.0, 0.0));
        assert_eq!(out.amplitudes()[0], c(0.0, 0.0));
    }

    #[test]
    fn identity_is_exact() {
        let mut psi = StateVector::zero_state(3);
        psi.amplitudes_mut()[5] = c(0.3, -0.4);
        psi.amplitudes_mut()[0] = c(0.5, 0.0);
        let out = apply_pauli(&PauliString::identity(), &psi).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn z_applies_sign_on_site_one() {
        // Z_1 (|00⟩+|01⟩)/√2 ... basis: index bit 1 is site 1.
        let mut psi = StateVector::zero_state(2);
        let r = 1.0 / 2f64.sqrt();
        psi.amplitudes_mut()[0b00] = c(r, 0.0);
        psi.amplitudes_mut()[0b10] = c(r, 0.0);
        let out = apply_pauli(&PauliString::single(1, Axis::Z), &psi).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0b00].re, r);
        assert_abs_diff_eq!(out.amplitudes()[0b10].re, -r);
    }

    #[test]
    fn y_phases_match_matrix() {
        // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩
        let psi = StateVector::basis_state(1, 0);
        let out = apply_pauli(&PauliString::single(0, Axis::Y), &psi).unwrap();
        assert_eq!(out.amplitudes()[1], c(0.0, 1.0));
        let psi = StateVector::basis_state(1, 1);
        let out = apply_pauli(&PauliString::single(0, Axis::Y), &psi).unwrap();
        assert_eq!(out.amplitudes()[0], c(0.0, -1.0));
    }

    #[test]
    fn site_out_of_range_is_an_error() {
        let psi = StateVector::zero_state(2);
        let err = apply_pauli(&PauliString::single(2, Axis::X), &psi);
        assert!(err.is_err());
        assert!(pauli_expectation(&PauliString::single(7, Axis::Z), &psi).is_err());
    }

    #[test]
    fn expectation_examples() {
        // Z on site 0 over |0..0⟩ -> +1 ; X -> 0 ; Z over equal superposition -> 0.
        let psi = StateVector::zero_state(3);
        assert_abs_diff_eq!(
            pauli_expectation(&PauliString::single(0, Axis::Z), &psi).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            pauli_expectation(&PauliString::single(0, Axis::X), &psi).unwrap(),
            0.0
        );
        let mut plus = StateVector::zero_state(2);
        let r = 1.0 / 2f64.sqrt();
        plus.amplitudes_mut()[0] = c(r, 0.0);
        plus.amplitudes_mut()[1] = c(r, 0.0);
        assert_abs_diff_eq!(
            pauli_expectation(&PauliString::single(0, Axis::Z), &plus).unwrap(),
            0.0
        );
    }

    #[test]
    fn multiply_matches_commutation_table() {
        // All 16 single-site pairs: products commute or anticommute exactly.
        let mut ops = vec![PauliString::identity()];
        for axis in Axis::ALL {
            ops.push(PauliString::single(0, axis));
        }
        for p in &ops {
            for q in &ops {
                let pq = p.multiply(q);
                let qp = q.multiply(p);
                assert_eq!(pq.factors(), qp.factors());
                let ratio = pq.phase().as_complex() / qp.phase().as_complex();
                assert!(
                    (ratio - c(1.0, 0.0)).norm() < 1e-15 || (ratio + c(1.0, 0.0)).norm() < 1e-15,
                    "phase ratio must be ±1, got {ratio} for {p} {q}"
                );
            }
        }
        // Spot check: XY = iZ.
        let x = PauliString::single(0, Axis::X);
        let y = PauliString::single(0, Axis::Y);
        let xy = x.multiply(&y);
        assert_eq!(xy.phase(), Phase::I);
        assert_eq!(xy.factors().get(&0), Some(&Axis::Z));
    }

    #[test]
    fn apply_is_isometry_on_random_inputs() {
        use rand::Rng;
        let mut rng = crate::seed::SeedTree::new(11).rng();
        for trial in 0..100 {
            let l = 1 + trial % 5;
            let dim = 1 << l;
            let amps: Vec<Complex64> = (0..dim)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let mut psi = StateVector::from_amplitudes(l, 1, amps).unwrap();
            psi.normalize();
            let mut p = PauliString::identity();
            for site in 0..l {
                if rng.gen::<f64>() < 0.6 {
                    p = p.multiply(&PauliString::single(site, Axis::ALL[rng.gen_range(0..3)]));
                }
            }
            let out = apply_pauli(&p, &psi).unwrap();
            assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        }
    }
}
