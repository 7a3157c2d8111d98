//! Matrix-free time evolution: Krylov-subspace propagation of sparse
//! Hamiltonian action, Floquet scheduling, and reversed evolution.
//!
//! The propagator is Lanczos with full reorthogonalization (all Hamiltonians
//! here are Hermitian) and adaptive step halving when the residual estimate
//! misses the tolerance. Single-site-only Hamiltonians (the field half of the
//! Floquet drive without a cavity) take an exact one-qubit-rotation fast path.

pub(crate) mod chebyshev;
mod csr;
mod krylov;
pub(crate) mod rotations;
mod schedule;

pub use csr::CsrMatrix;
pub use krylov::{expm_multiply_csr, KrylovOptions};
pub use schedule::{phase_pieces, HamKind, Piece};

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::operators::StateVector;
use crate::system::{HTerm, HamiltonianTerms, TimeDirection};

/// One leg of an evolution plan: a Hamiltonian applied for a positive raw
/// duration, forward or backward. Backward direction negates the spin part of
/// the Hamiltonian while cavity terms keep their sign (imperfect reversal).
#[derive(Debug, Clone)]
pub struct PlanSegment {
    pub terms: HamiltonianTerms,
    pub raw_duration: f64,
    pub direction: TimeDirection,
}

/// Ordered evolution schedule with solver controls.
#[derive(Debug, Clone)]
pub struct EvolutionPlan {
    pub segments: Vec<PlanSegment>,
    pub tolerance: f64,
    pub max_krylov_dim: usize,
}

impl EvolutionPlan {
    pub fn new(segments: Vec<PlanSegment>) -> Self {
        EvolutionPlan {
            segments,
            tolerance: 1e-8,
            max_krylov_dim: 30,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn total_raw_time(&self) -> f64 {
        self.segments.iter().map(|s| s.raw_duration).sum()
    }
}

/// `H|ψ⟩`, term by term, without materializing the `2^L × 2^L` matrix.
pub fn apply_hamiltonian(h: &HamiltonianTerms, psi: &StateVector) -> Result<StateVector> {
    if psi.qubits() != h.qubits() || psi.cavity_dim() != h.cavity_dim() {
        return Err(CoreError::DimensionMismatch {
            expected: h.dim(),
            actual: psi.dim(),
        });
    }
    let sdim = psi.spin_dim();
    let cav = psi.cavity_dim();
    let x = psi.amplitudes();
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for term in h.terms() {
        match term {
            HTerm::Pauli { weight, op } => {
                if let Some(max) = op.max_site() {
                    if max >= psi.qubits() {
                        return Err(CoreError::SiteOutOfRange {
                            site: max,
                            l: psi.qubits(),
                        });
                    }
                }
                let (flip, sign, _) = op.masks();
                let base = op.base_coefficient() * *weight;
                let flip = flip as usize;
                for n in 0..cav {
                    let off = n * sdim;
                    for s in 0..sdim {
                        let sgn = if ((s as u64) & sign).count_ones() % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        y[off + (s ^ flip)] += base * sgn * x[off + s];
                    }
                }
            }
            HTerm::CavityNumber { weight } => {
                for n in 1..cav {
                    let off = n * sdim;
                    let w = Complex64::new(weight * n as f64, 0.0);
                    for s in 0..sdim {
                        y[off + s] += w * x[off + s];
                    }
                }
            }
            HTerm::SpinCavityExchange { weight, site } => {
                let bit = 1usize << site;
                for n in 0..cav {
                    let off = n * sdim;
                    for s in 0..sdim {
                        let a = x[off + s];
                        if a.norm_sqr() == 0.0 {
                            continue;
                        }
                        if s & bit == 0 && n + 1 < cav {
                            // a† σ⁻ : spin flips down, photon emitted
                            let w = weight * ((n + 1) as f64).sqrt();
                            y[(n + 1) * sdim + (s | bit)] += w * a;
                        }
                        if s & bit != 0 && n >= 1 {
                            // a σ⁺ : photon absorbed, spin flips up
                            let w = weight * (n as f64).sqrt();
                            y[(n - 1) * sdim + (s & !bit)] += w * a;
                        }
                    }
                }
            }
        }
    }
    StateVector::from_amplitudes(psi.qubits(), cav, y)
}

/// `e^{-iHt}|ψ⟩` with Euclidean error ≤ `tol`; `t` is raw time and its sign
/// encodes the direction. Internally subdivides adaptively when the Krylov
/// residual estimate exceeds the tolerance.
pub fn krylov_propagate(
    h: &HamiltonianTerms,
    psi: &StateVector,
    t: f64,
    tol: f64,
) -> Result<StateVector> {
    let mut out = psi.clone();
    if t == 0.0 || h.is_empty() {
        return Ok(out);
    }
    let m = CsrMatrix::from_terms(h);
    if m.dim() != psi.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: m.dim(),
            actual: psi.dim(),
        });
    }
    let opts = KrylovOptions::with_tol(tol);
    expm_multiply_csr(&m, t, out.amplitudes_mut(), &opts)?;
    Ok(out)
}

/// Apply the plan segments in order. Backward segments evolve under the
/// spin-negated Hamiltonian (cavity terms keep their sign).
pub fn evolve_plan(plan: &EvolutionPlan, psi: &StateVector) -> Result<StateVector> {
    let mut out = psi.clone();
    let n = plan.segments.len().max(1);
    let seg_tol = plan.tolerance / n as f64;
    for seg in &plan.segments {
        assert!(seg.raw_duration > 0.0, "plan durations must be positive");
        let effective;
        let terms = match seg.direction {
            TimeDirection::Forward => &seg.terms,
            TimeDirection::Backward => {
                effective = seg.terms.spin_negated();
                &effective
            }
        };
        if terms.is_empty() {
            continue;
        }
        if terms.cavity_dim() == 1 && terms.is_single_site_only() {
            rotations::apply_single_site_exponential(
                terms,
                seg.raw_duration,
                out.amplitudes_mut(),
            );
        } else {
            let m = CsrMatrix::from_terms(terms);
            if m.dim() != out.dim() {
                return Err(CoreError::DimensionMismatch {
                    expected: m.dim(),
                    actual: out.dim(),
                });
            }
            let opts = KrylovOptions {
                tol: seg_tol,
                max_dim: plan.max_krylov_dim,
                ..Default::default()
            };
            expm_multiply_csr(&m, seg.raw_duration, out.amplitudes_mut(), &opts)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{sample_haar_state, Axis, PauliString};
    use crate::seed::SeedTree;

    #[test]
    fn apply_hamiltonian_eigenvector_and_linearity() {
        // H = 1.0 Z_0 on |0⟩ returns |0⟩.
        let mut h = HamiltonianTerms::new(1, 1);
        h.push_pauli(1.0, PauliString::single(0, Axis::Z));
        let psi = StateVector::zero_state(1);
        let out = apply_hamiltonian(&h, &psi).unwrap();
        assert_eq!(out.amplitudes()[0], Complex64::new(1.0, 0.0));

        // two identical terms of weight w equal one term of weight 2w
        let mut h1 = HamiltonianTerms::new(2, 1);
        h1.push_pauli(0.4, PauliString::single(1, Axis::X));
        h1.push_pauli(0.4, PauliString::single(1, Axis::X));
        let mut h2 = HamiltonianTerms::new(2, 1);
        h2.push_pauli(0.8, PauliString::single(1, Axis::X));
        let psi = sample_haar_state(2, SeedTree::new(1));
        let a = apply_hamiltonian(&h1, &psi).unwrap();
        let b = apply_hamiltonian(&h2, &psi).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_hamiltonian_dimension_mismatch() {
        let h = HamiltonianTerms::new(3, 1);
        let psi = StateVector::zero_state(2);
        assert!(apply_hamiltonian(&h, &psi).is_err());
    }

    #[test]
    fn plan_echo_recovers_initial_state() {
        use crate::system::{sample_disorder, Drive, Geometry, SystemSpec};
        let g = Geometry::ring(4).unwrap();
        let dis = sample_disorder(&g, None, SeedTree::new(12));
        let spec = SystemSpec::new(g, dis, Drive::floquet());
        let hf = crate::system::build_field_hamiltonian(&spec);
        let hc = crate::system::build_coupling_hamiltonian(&spec);
        let t_half = std::f64::consts::FRAC_PI_2;
        let mut segments = Vec::new();
        for _ in 0..2 {
            segments.push(PlanSegment {
                terms: hf.clone(),
                raw_duration: t_half,
                direction: TimeDirection::Forward,
            });
            segments.push(PlanSegment {
                terms: hc.clone(),
                raw_duration: t_half,
                direction: TimeDirection::Forward,
            });
        }
        // reversed order, backward direction
        for _ in 0..2 {
            segments.push(PlanSegment {
                terms: hc.clone(),
                raw_duration: t_half,
                direction: TimeDirection::Backward,
            });
            segments.push(PlanSegment {
                terms: hf.clone(),
                raw_duration: t_half,
                direction: TimeDirection::Backward,
            });
        }
        let plan = EvolutionPlan::new(segments).with_tolerance(1e-10);
        let psi = sample_haar_state(4, SeedTree::new(5));
        let out = evolve_plan(&plan, &psi).unwrap();
        let overlap = psi.inner(&out);
        assert!(
            (overlap - Complex64::new(1.0, 0.0)).norm() < 4e-10,
            "echo overlap {overlap}"
        );
        assert!((out.norm() - 1.0).abs() < 1e-9);
    }
}
