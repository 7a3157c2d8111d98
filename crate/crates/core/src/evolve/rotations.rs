use num_complex::Complex64;

use crate::dense::CScalar;
use crate::system::{HTerm, HamiltonianTerms};

/// Apply a one-qubit gate `[[u00,u01],[u10,u11]]` at `site` to amplitudes
/// laid out as `spin + 2^l * cavity`.
pub(crate) fn apply_single_qubit_gate<C: CScalar>(
    amps: &mut [C],
    l: usize,
    site: usize,
    u: [C; 4],
) {
    let sdim = 1usize << l;
    let bit = 1usize << site;
    for block in amps.chunks_mut(sdim) {
        for i0 in 0..sdim {
            if i0 & bit != 0 {
                continue;
            }
            let i1 = i0 | bit;
            let a0 = block[i0];
            let a1 = block[i1];
            block[i0] = u[0].mul(a0).add(u[1].mul(a1));
            block[i1] = u[2].mul(a0).add(u[3].mul(a1));
        }
    }
}

/// The 2×2 matrix `e^{-iθ n̂·σ}` for `v = θ n̂` (not normalized).
pub(crate) fn rotation_gate(vx: f64, vy: f64, vz: f64) -> [Complex64; 4] {
    let r = (vx * vx + vy * vy + vz * vz).sqrt();
    if r == 0.0 {
        return [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
    }
    let (c, s) = (r.cos(), r.sin() / r);
    [
        Complex64::new(c, -s * vz),
        Complex64::new(-s * vy, -s * vx),
        Complex64::new(s * vy, -s * vx),
        Complex64::new(c, s * vz),
    ]
}

/// Exact `ψ ← e^{-iHt}ψ` for Hamiltonians made solely of single-site Pauli
/// terms (the on-site field half of the Floquet drive): the exponential
/// factorizes into independent one-qubit rotations.
pub(crate) fn apply_single_site_exponential(
    h: &HamiltonianTerms,
    t: f64,
    amps: &mut [Complex64],
) {
    debug_assert!(h.is_single_site_only());
    let l = h.qubits();
    let mut fields = vec![[0.0f64; 3]; l];
    for term in h.terms() {
        if let HTerm::Pauli { weight, op } = term {
            if let Some((&site, &axis)) = op.factors().iter().next() {
                let k = match axis {
                    crate::operators::Axis::X => 0,
                    crate::operators::Axis::Y => 1,
                    crate::operators::Axis::Z => 2,
                };
                // phase is ±1 for Hermitian strings; fold it into the weight
                let w = weight * op.phase().as_complex().re;
                fields[site][k] += w;
            }
        }
    }
    for (site, f) in fields.iter().enumerate() {
        if f[0] == 0.0 && f[1] == 0.0 && f[2] == 0.0 {
            continue;
        }
        let u = rotation_gate(t * f[0], t * f[1], t * f[2]);
        apply_single_qubit_gate(amps, l, site, u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::csr::CsrMatrix;
    use crate::evolve::krylov::{expm_multiply_csr, KrylovOptions};
    use crate::operators::{Axis, PauliString};
    use crate::seed::SeedTree;

    #[test]
    fn rotation_product_matches_krylov_on_field_hamiltonian() {
        let l = 4;
        let mut h = HamiltonianTerms::new(l, 1);
        let mut rng_seed = 0u64;
        for site in 0..l {
            for axis in Axis::ALL {
                rng_seed = rng_seed.wrapping_add(0x9e37).wrapping_mul(31);
                let w = ((rng_seed % 1000) as f64 / 500.0) - 1.0;
                h.push_pauli(w, PauliString::single(site, axis));
            }
        }
        let psi0 = crate::operators::sample_haar_state(l, SeedTree::new(41));
        let t = 1.234;
        let mut exact: Vec<_> = psi0.amplitudes().to_vec();
        apply_single_site_exponential(&h, t, &mut exact);
        let mut krylov: Vec<_> = psi0.amplitudes().to_vec();
        let m = CsrMatrix::from_terms(&h);
        expm_multiply_csr(&m, t, &mut krylov, &KrylovOptions::with_tol(1e-12)).unwrap();
        let err: f64 = exact
            .iter()
            .zip(&krylov)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "max amplitude error {err}");
    }
}
