use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Complex amplitude vector over the `2^L` spin space, optionally extended by
/// a bosonic occupation register of dimension `cavity_dim`.
///
/// Basis convention: spin site `i` is bit `i` of the basis index (site 0 is
/// the least significant bit); bit value 0 is the `Z = +1` eigenstate `|0⟩`.
/// With a cavity, the full index is `spin + 2^L * n` for occupation `n`, i.e.
/// the cavity register is the slowest-varying one.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    qubits: usize,
    cavity_dim: usize,
}

impl StateVector {
    /// The all-zeros product state `|0...0⟩` (cavity, if any, in vacuum).
    pub fn zero_state(qubits: usize) -> Self {
        Self::zero_state_with_cavity(qubits, 1)
    }

    pub fn zero_state_with_cavity(qubits: usize, cavity_dim: usize) -> Self {
        assert!(cavity_dim >= 1);
        let mut amps = vec![Complex64::new(0.0, 0.0); (1usize << qubits) * cavity_dim];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector {
            amps,
            qubits,
            cavity_dim,
        }
    }

    /// Computational basis state with the given spin index.
    pub fn basis_state(qubits: usize, index: usize) -> Self {
        let mut s = Self::zero_state(qubits);
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(qubits: usize, cavity_dim: usize, amps: Vec<Complex64>) -> Result<Self> {
        let expected = (1usize << qubits) * cavity_dim;
        if amps.len() != expected {
            return Err(CoreError::DimensionMismatch {
                expected,
                actual: amps.len(),
            });
        }
        Ok(StateVector {
            amps,
            qubits,
            cavity_dim,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn spin_dim(&self) -> usize {
        1usize << self.qubits
    }

    pub fn cavity_dim(&self) -> usize {
        self.cavity_dim
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability weight currently stored in the top cavity occupation level.
    /// Used as a truncation-leakage diagnostic; 0 when there is no cavity.
    pub fn top_cavity_weight(&self) -> f64 {
        if self.cavity_dim == 1 {
            return 0.0;
        }
        let sdim = self.spin_dim();
        let top = (self.cavity_dim - 1) * sdim;
        self.amps[top..top + sdim]
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    }
}
