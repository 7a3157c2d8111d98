use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dense::CMat;
use crate::error::{CoreError, Result};
use crate::operators::state::StateVector;
use crate::seed::SeedTree;

/// Dense storage cap: 2^12 × 2^12 complex doubles ≈ 256 MB.
pub const MAX_DENSE_QUBITS: usize = 12;

fn gaussian_c64<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Unit-norm vector distributed per the Haar measure on the `2^L` sphere:
/// i.i.d. complex-Gaussian components, normalized. Deterministic in the seed.
pub fn sample_haar_state(qubits: usize, seed: SeedTree) -> StateVector {
    sample_haar_state_with_cavity(qubits, 1, seed)
}

/// Haar-random spin state tensored with the cavity vacuum `|n=0⟩`.
pub fn sample_haar_state_with_cavity(
    qubits: usize,
    cavity_dim: usize,
    seed: SeedTree,
) -> StateVector {
    assert!(qubits >= 1);
    let mut rng = seed.rng();
    let sdim = 1usize << qubits;
    let mut amps = vec![Complex64::new(0.0, 0.0); sdim * cavity_dim];
    for a in amps.iter_mut().take(sdim) {
        *a = gaussian_c64(&mut rng);
    }
    let mut psi = StateVector::from_amplitudes(qubits, cavity_dim, amps).expect("sized above");
    psi.normalize();
    psi
}

/// A dense `2^n × 2^n` unitary, stored column-major.
#[derive(Debug, Clone)]
pub struct DenseUnitary {
    entries: Vec<Complex64>,
    qubits: usize,
}

impl DenseUnitary {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.qubits
    }

    /// Entry `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[col * self.dim() + row]
    }

    /// Column-major backing storage.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        let d = self.dim();
        &self.entries[col * d..(col + 1) * d]
    }

    /// `U|ψ⟩` for a state on exactly `n` qubits (no cavity register).
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        let d = self.dim();
        if psi.dim() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                actual: psi.dim(),
            });
        }
        let x = psi.amplitudes();
        let mut y = vec![Complex64::new(0.0, 0.0); d];
        for (col, &xc) in x.iter().enumerate() {
            if xc.norm_sqr() == 0.0 {
                continue;
            }
            let colv = self.column(col);
            for (yr, &u) in y.iter_mut().zip(colv) {
                *yr += u * xc;
            }
        }
        StateVector::from_amplitudes(self.qubits, 1, y)
    }

    /// `U†|ψ⟩`.
    pub fn apply_adjoint(&self, psi: &StateVector) -> Result<StateVector> {
        let d = self.dim();
        if psi.dim() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                actual: psi.dim(),
            });
        }
        let x = psi.amplitudes();
        let mut y = vec![Complex64::new(0.0, 0.0); d];
        for (row, yr) in y.iter_mut().enumerate() {
            // row of U† = conjugated column of U
            let colv = self.column(row);
            let mut acc = Complex64::new(0.0, 0.0);
            for (u, xv) in colv.iter().zip(x) {
                acc += u.conj() * xv;
            }
            *yr = acc;
        }
        StateVector::from_amplitudes(self.qubits, 1, y)
    }

    /// View as a row-major [`CMat`] (transposes the storage).
    pub fn to_cmat(&self) -> CMat<Complex64> {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for col in 0..d {
            for row in 0..d {
                m.set(row, col, self.entries[col * d + row]);
            }
        }
        m
    }

    /// Max deviation of `U†U` from the identity over a column subset
    /// (all columns when `dim <= 256`).
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let ncheck = d.min(256);
        let mut worst: f64 = 0.0;
        for a in 0..ncheck {
            let ca = self.column(a);
            for b in a..ncheck {
                let cb = self.column(b);
                let dot: Complex64 = ca.iter().zip(cb).map(|(x, y)| x.conj() * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// Haar-distributed unitary on `n` qubits.
///
/// Construction: complex Ginibre matrix, orthonormalized column-by-column
/// (modified Gram–Schmidt with a second pass). MGS makes the triangular
/// factor's diagonal real and positive, which is exactly the phase convention
/// under which `Q` from `A = QR` is Haar-distributed; no separate phase
/// correction is needed. Deterministic in the seed.
pub fn sample_haar_unitary(qubits: usize, seed: SeedTree) -> Result<DenseUnitary> {
    if qubits > MAX_DENSE_QUBITS {
        return Err(CoreError::TooManyQubits {
            requested: qubits,
            max: MAX_DENSE_QUBITS,
        });
    }
    let d = 1usize << qubits;
    let mut rng = seed.rng();
    // Column-major Ginibre draw, column order fixed for determinism.
    let mut cols: Vec<Vec<Complex64>> = (0..d)
        .map(|_| (0..d).map(|_| gaussian_c64(&mut rng)).collect())
        .collect();
    for j in 0..d {
        // two orthogonalization passes keep the defect near machine precision
        for _pass in 0..2 {
            for k in 0..j {
                let proj: Complex64 = cols[k]
                    .iter()
                    .zip(cols[j].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let (head, tail) = cols.split_at_mut(j);
                let ck = &head[k];
                for (t, s) in tail[0].iter_mut().zip(ck.iter()) {
                    *t -= proj * s;
                }
            }
        }
        let norm = cols[j].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        // r_jj = norm > 0 almost surely; dividing by it leaves diag(R) = +1 phases.
        let inv = 1.0 / norm;
        for a in cols[j].iter_mut() {
            *a *= inv;
        }
    }
    let mut entries = Vec::with_capacity(d * d);
    for col in cols {
        entries.extend(col);
    }
    let u = DenseUnitary { entries, qubits };
    debug_assert!(u.unitarity_defect() < 1e-10, "Haar sampler lost unitarity");
    Ok(u)
}
