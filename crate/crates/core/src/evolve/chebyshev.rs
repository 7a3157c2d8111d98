//! Chebyshev expansion of `e^{-iHt}` applied to a block of states at once.
//!
//! Used only to materialize the dense stroboscopic maps: the sparse
//! matrix-times-block kernel streams contiguous rows, so building all 2^L
//! columns together is far cheaper than propagating them one by one. Accuracy
//! is set by the Bessel-coefficient tail, which decays super-exponentially
//! once the order passes the scaled bandwidth `r·t`.

use num_complex::Complex64;

use crate::dense::CMat;
use crate::evolve::csr::CsrMatrix;

/// `J_0(z) ... J_kmax(z)` by Miller's downward recurrence, normalized with
/// the identity `J_0 + 2 Σ J_{2k} = 1`.
pub(crate) fn bessel_j_seq(z: f64, kmax: usize) -> Vec<f64> {
    assert!(z >= 0.0);
    if z < 1e-12 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let m = kmax + 16 + (z as usize) / 2;
    let mut vals = vec![0.0f64; m + 2];
    vals[m + 1] = 0.0;
    vals[m] = 1e-300;
    for k in (1..=m).rev() {
        vals[k - 1] = (2.0 * k as f64 / z) * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            let scale = 1e-250;
            for v in vals[k - 1..].iter_mut() {
                *v *= scale;
            }
        }
    }
    let mut norm = vals[0];
    let mut k = 2;
    while k <= m {
        norm += 2.0 * vals[k];
        k += 2;
    }
    let mut out = vec![0.0; kmax + 1];
    for (k, o) in out.iter_mut().enumerate() {
        *o = vals[k] / norm;
    }
    out
}

fn block_scale_add(acc: &mut [Complex64], x: &[Complex64], c: Complex64) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += c * v;
    }
}

/// `e^{-iHt} X` for Hermitian `H` (CSR) and a `dim × K` block `X`.
/// `tol` bounds the Chebyshev truncation error per column (relative to the
/// unit-norm columns used here).
pub(crate) fn expm_block(h: &CsrMatrix, t: f64, x: &CMat<Complex64>, tol: f64) -> CMat<Complex64> {
    expm_block_bounded(h, t, x, tol, h.ritz_bounds())
}

/// Same as [`expm_block`] with precomputed spectral bounds (the expansion
/// degree scales with the covered bandwidth, so tight bounds matter).
pub(crate) fn expm_block_bounded(
    h: &CsrMatrix,
    t: f64,
    x: &CMat<Complex64>,
    tol: f64,
    bounds: (f64, f64),
) -> CMat<Complex64> {
    let dim = h.dim();
    assert_eq!(x.rows(), dim);
    if t == 0.0 {
        return x.clone();
    }
    let (lo, hi) = bounds;
    let width = (hi - lo).max(1e-12);
    let c_shift = 0.5 * (hi + lo);
    let r = 0.5 * width * 1.01 + 1e-9;
    let z = (r * t).abs();
    let kmax = (z + 14.0 * (z + 4.0).sqrt() + 12.0).ceil() as usize;
    let bessel = bessel_j_seq(z, kmax);
    // effective cutoff
    let mut keff = kmax;
    while keff > 1 && bessel[keff].abs() < tol * 1e-2 {
        keff -= 1;
    }
    // (-i sign(t))^k coefficient phases; J_k(-z) = (-1)^k J_k(z)
    let iphase = if t >= 0.0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    };

    let n = x.data().len();
    let mut t0 = x.data().to_vec();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    block_scale_add(&mut acc, &t0, Complex64::new(bessel[0], 0.0));
    // T1 = H̃ X
    let mut t1 = vec![Complex64::new(0.0, 0.0); n];
    let k_cols = x.cols();
    h.apply_block(&t0, &mut t1, k_cols);
    shift_scale(&mut t1, &t0, c_shift, r);
    let mut coeff = iphase * 2.0 * bessel[1];
    block_scale_add(&mut acc, &t1, coeff);
    let mut t2 = vec![Complex64::new(0.0, 0.0); n];
    let mut ik = iphase;
    for k in 2..=keff {
        // T_{k} = 2 H̃ T_{k-1} - T_{k-2}
        h.apply_block(&t1, &mut t2, k_cols);
        for i in 0..n {
            t2[i] = (t2[i] - c_shift * t1[i]) * (2.0 / r) - t0[i];
        }
        ik *= iphase;
        coeff = ik * 2.0 * bessel[k];
        block_scale_add(&mut acc, &t2, coeff);
        std::mem::swap(&mut t0, &mut t1);
        std::mem::swap(&mut t1, &mut t2);
    }
    // global phase e^{-i c t}
    let phase = Complex64::new(0.0, -c_shift * t).exp();
    let mut out = CMat::<Complex64>::zeros(dim, k_cols);
    for (o, a) in out.data.iter_mut().zip(&acc) {
        *o = phase * a;
    }
    out
}

fn shift_scale(y: &mut [Complex64], x: &[Complex64], c_shift: f64, r: f64) {
    // y = (y - c x)/r
    let inv = 1.0 / r;
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = (*yi - c_shift * xi) * inv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::krylov::{expm_multiply_csr, KrylovOptions};
    use crate::operators::{Axis, PauliString};
    use crate::system::HamiltonianTerms;

    #[test]
    fn bessel_values_match_references() {
        // reference values of J_k(2.0) (Abramowitz & Stegun)
        let j = bessel_j_seq(2.0, 6);
        let refs = [
            0.2238907791412357,
            0.5767248077568734,
            0.3528340286156377,
            0.1289432494744021,
            0.0339957198075684,
            0.0070396297558716,
            0.0012024289717899,
        ];
        for (a, b) in j.iter().zip(refs) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // normalization identity at a larger argument
        let j = bessel_j_seq(17.3, 40);
        let mut s = j[0];
        for k in (2..=40).step_by(2) {
            s += 2.0 * j[k];
        }
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn chebyshev_block_matches_krylov_columns() {
        let l = 4;
        let mut h = HamiltonianTerms::new(l, 1);
        for i in 0..l - 1 {
            h.push_pauli(0.9, PauliString::two_site(i, Axis::X, i + 1, Axis::X));
            h.push_pauli(1.1, PauliString::two_site(i, Axis::Y, i + 1, Axis::Y));
            h.push_pauli(-2.0, PauliString::two_site(i, Axis::Z, i + 1, Axis::Z));
        }
        h.push_pauli(0.4, PauliString::single(0, Axis::Z));
        let csr = CsrMatrix::from_terms(&h);
        let dim = 1 << l;
        let x = CMat::<Complex64>::identity(dim);
        for &t in &[0.3, 1.5707963267948966, -2.0] {
            let u = expm_block(&csr, t, &x, 1e-12);
            for col in 0..dim {
                let mut psi = vec![Complex64::new(0.0, 0.0); dim];
                psi[col] = Complex64::new(1.0, 0.0);
                expm_multiply_csr(&csr, t, &mut psi, &KrylovOptions::with_tol(1e-13)).unwrap();
                for row in 0..dim {
                    let err = (u.get(row, col) - psi[row]).norm();
                    assert!(err < 1e-10, "t={t} entry ({row},{col}) err {err:.2e}");
                }
            }
        }
    }
}
