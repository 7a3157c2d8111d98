use num_complex::Complex64;


use crate::error::{CoreError, Result};
use crate::evolve::csr::CsrMatrix;

/// Krylov propagation controls. `tol` bounds the Euclidean error of one
/// `expm_multiply` call; sub-steps divide the budget proportionally.
#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    pub tol: f64,
    pub max_dim: usize,
    /// smallest raw-time substep before giving up
    pub min_step: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-8,
            max_dim: 30,
            min_step: 1e-9,
        }
    }
}

impl KrylovOptions {
    pub fn with_tol(tol: f64) -> Self {
        KrylovOptions {
            tol,
            ..Default::default()
        }
    }
}

/// In-place `ψ ← e^{-iHt}ψ` for Hermitian `H` in CSR form, by Lanczos with
/// full reorthogonalization and adaptive step halving. `t` is raw time; its
/// sign selects the direction.
pub fn expm_multiply_csr(
    h: &CsrMatrix,
    t: f64,
    psi: &mut [Complex64],
    opts: &KrylovOptions,
) -> Result<()> {
    if t == 0.0 || h.dim() == 0 {
        return Ok(());
    }
    assert_eq!(psi.len(), h.dim());
    let total = t.abs();
    let dir = t.signum();
    let mut done = 0.0;
    // Start with a step the basis can plausibly resolve: m ≳ ||H|| τ.
    let mut step = if h.norm_bound() > 0.0 {
        total.min(0.7 * opts.max_dim as f64 / h.norm_bound())
    } else {
        total
    };
    let mut lanczos = Lanczos::new(h.dim(), opts.max_dim);
    while done < total - 1e-15 * total.max(1.0) {
        let tau = step.min(total - done);
        let budget = opts.tol * (tau / total).max(1e-3);
        match lanczos.step(h, dir * tau, psi, budget, opts.max_dim) {
            StepOutcome::Converged => {
                done += tau;
            }
            StepOutcome::NeedSmallerStep { residual } => {
                step = tau / 2.0;
                if step < opts.min_step {
                    return Err(CoreError::KrylovNoConvergence {
                        residual,
                        tol: budget,
                        dim: opts.max_dim,
                        step,
                        min_step: opts.min_step,
                    });
                }
            }
        }
    }
    Ok(())
}

enum StepOutcome {
    Converged,
    NeedSmallerStep { residual: f64 },
}

/// Reusable Lanczos workspace (basis vectors + scratch).
struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    w: Vec<Complex64>,
}

impl Lanczos {
    fn new(dim: usize, max_dim: usize) -> Self {
        Lanczos {
            basis: Vec::with_capacity(max_dim + 1),
            w: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// One attempted step `ψ ← e^{-iHτ}ψ`. Builds the basis until the
    /// generalized-residual estimate drops below `budget` or `max_dim` is hit.
    /// Convergence is tested at checkpoints (every few iterations) via the
    /// eigendecomposition of the small tridiagonal projection.
    fn step(
        &mut self,
        h: &CsrMatrix,
        tau: f64,
        psi: &mut [Complex64],
        budget: f64,
        max_dim: usize,
    ) -> StepOutcome {
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return StepOutcome::Converged;
        }
        self.basis.clear();
        self.basis.push(psi.iter().map(|a| a / beta0).collect());
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut coeffs: Option<Vec<Complex64>> = None;
        let mut residual = f64::INFINITY;
        for j in 0..max_dim {
            h.apply(&self.basis[j], &mut self.w);
            let alpha = dot(&self.basis[j], &self.w).re;
            alphas.push(alpha);
            axpy(&mut self.w, -Complex64::new(alpha, 0.0), &self.basis[j]);
            if j > 0 {
                axpy(
                    &mut self.w,
                    -Complex64::new(betas[j - 1], 0.0),
                    &self.basis[j - 1],
                );
            }
            // full reorthogonalization keeps the small dimensions exact
            for k in 0..=j {
                let c = dot(&self.basis[k], &self.w);
                if c.norm_sqr() > 0.0 {
                    axpy(&mut self.w, -c, &self.basis[k]);
                }
            }
            let beta = norm(&self.w);
            let m = j + 1;
            let breakdown = beta < 1e-13 * beta0.max(1.0);
            let checkpoint = breakdown || m == max_dim || (m >= 4 && m % 3 == 0);
            if checkpoint {
                let (u, u_half) = expm_tridiag_e1(&alphas, &betas, tau);
                if breakdown {
                    // happy breakdown: the Krylov space is invariant
                    coeffs = Some(u);
                    residual = 0.0;
                    break;
                }
                let est = tau.abs() * beta * (u[m - 1].norm() + u_half[m - 1].norm());
                if est <= 0.5 * budget {
                    coeffs = Some(u);
                    residual = est;
                    break;
                }
                residual = est;
            }
            betas.push(beta);
            self.basis.push(self.w.iter().map(|a| a / beta).collect());
        }
        match coeffs {
            Some(u) => {
                for a in psi.iter_mut() {
                    *a = Complex64::new(0.0, 0.0);
                }
                for (k, uk) in u.iter().enumerate() {
                    axpy(psi, uk * beta0, &self.basis[k]);
                }
                StepOutcome::Converged
            }
            None => StepOutcome::NeedSmallerStep { residual },
        }
    }
}

/// `(e^{-iτT} e_1, e^{-iτT/2} e_1)` for the real symmetric tridiagonal `T`
/// built from the Lanczos coefficients, via its eigendecomposition.
fn expm_tridiag_e1(alphas: &[f64], betas: &[f64], tau: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = alphas.len();
    let (vals, vecs) = crate::dense::symtridiag_eig(alphas, betas);
    let mut u = vec![Complex64::new(0.0, 0.0); m];
    let mut u_half = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..m {
        let w0 = vecs[k]; // ⟨e_1, v_k⟩
        let phase = Complex64::new(0.0, -tau * vals[k]).exp() * w0;
        let phase_half = Complex64::new(0.0, -0.5 * tau * vals[k]).exp() * w0;
        for i in 0..m {
            u[i] += vecs[i * m + k] * phase;
            u_half[i] += vecs[i * m + k] * phase_half;
        }
    }
    (u, u_half)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Axis, PauliString};
    use crate::system::HamiltonianTerms;

    #[test]
    fn zero_time_is_identity() {
        let mut h = HamiltonianTerms::new(2, 1);
        h.push_pauli(1.0, PauliString::single(0, Axis::X));
        let m = CsrMatrix::from_terms(&h);
        let mut psi = vec![Complex64::new(0.0, 0.0); 4];
        psi[2] = Complex64::new(1.0, 0.0);
        let orig = psi.clone();
        expm_multiply_csr(&m, 0.0, &mut psi, &KrylovOptions::default()).unwrap();
        assert_eq!(psi, orig);
    }

    #[test]
    fn single_qubit_rotation_matches_closed_form() {
        // e^{-i t X}|0⟩ = cos t |0⟩ - i sin t |1⟩
        let mut h = HamiltonianTerms::new(1, 1);
        h.push_pauli(1.0, PauliString::single(0, Axis::X));
        let m = CsrMatrix::from_terms(&h);
        let t = 0.9;
        let mut psi = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        expm_multiply_csr(&m, t, &mut psi, &KrylovOptions::with_tol(1e-12)).unwrap();
        assert!((psi[0] - Complex64::new(t.cos(), 0.0)).norm() < 1e-12);
        assert!((psi[1] - Complex64::new(0.0, -t.sin())).norm() < 1e-12);
    }

    #[test]
    fn forward_then_backward_recovers_state() {
        let mut h = HamiltonianTerms::new(3, 1);
        h.push_pauli(0.8, PauliString::two_site(0, Axis::X, 1, Axis::X));
        h.push_pauli(-1.1, PauliString::two_site(1, Axis::Z, 2, Axis::Z));
        h.push_pauli(0.4, PauliString::single(2, Axis::Y));
        let m = CsrMatrix::from_terms(&h);
        let psi0 = crate::operators::sample_haar_state(3, crate::seed::SeedTree::new(2));
        let mut psi: Vec<Complex64> = psi0.amplitudes().to_vec();
        let opts = KrylovOptions::with_tol(1e-10);
        expm_multiply_csr(&m, 2.3, &mut psi, &opts).unwrap();
        expm_multiply_csr(&m, -2.3, &mut psi, &opts).unwrap();
        let overlap: Complex64 = psi0
            .amplitudes()
            .iter()
            .zip(&psi)
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap.re - 1.0).abs() < 2e-10, "echo overlap {overlap}");
    }

    #[test]
    fn tiny_max_dim_with_floor_reports_diagnostics() {
        let mut h = HamiltonianTerms::new(4, 1);
        for i in 0..3 {
            h.push_pauli(1.0, PauliString::two_site(i, Axis::X, i + 1, Axis::X));
            h.push_pauli(0.9, PauliString::two_site(i, Axis::Y, i + 1, Axis::Y));
        }
        let m = CsrMatrix::from_terms(&h);
        let psi0 = crate::operators::sample_haar_state(4, crate::seed::SeedTree::new(3));
        let mut psi: Vec<Complex64> = psi0.amplitudes().to_vec();
        let opts = KrylovOptions {
            tol: 1e-12,
            max_dim: 2,
            min_step: 0.2,
        };
        let err = expm_multiply_csr(&m, 3.0, &mut psi, &opts).unwrap_err();
        match err {
            CoreError::KrylovNoConvergence { dim, .. } => assert_eq!(dim, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}
