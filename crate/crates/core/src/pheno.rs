//! Closed-form phenomenological layer: correlator profile forms, Fisher
//! scaling descriptors for the restricted-access scenarios, error-induced
//! crossovers, and the log-space scaling fits that confront simulation data
//! with these forms.
//!
//! This module is an analytic oracle, not a theory engine — nothing here
//! feeds back into the simulators.

use crate::error::{CoreError, Result};

/// Phenomenological parameters. Only the fields a given formula uses need to
/// be meaningful; constructors default the rest.
#[derive(Debug, Clone)]
pub struct PhenoParams {
    /// butterfly velocity (typical value; per-bond couplings override it)
    pub v_b: f64,
    /// wavefront-width coefficient
    pub a_width: f64,
    /// diffusion constant
    pub d_diff: f64,
    /// TOC decay rate without conserved quantities
    pub gamma: f64,
    /// local error rate
    pub epsilon: f64,
    /// order-one constant in the error envelope
    pub a_err: f64,
    /// per-bond couplings J_y indexed by bond, used for the
    /// position/time-dependent parameter forms
    pub couplings: Vec<f64>,
}

impl Default for PhenoParams {
    fn default() -> Self {
        PhenoParams {
            v_b: 1.0,
            a_width: 1.0,
            d_diff: 1.0,
            gamma: 1.0,
            epsilon: 0.0,
            a_err: 1.0,
            couplings: Vec::new(),
        }
    }
}

impl PhenoParams {
    /// Position-dependent butterfly velocity: the harmonic mean of the
    /// couplings visited up to `x`, `v_B(x) = [ (1/x) Σ_{y≤x} 1/J_y ]⁻¹`.
    /// Falls back to the typical `v_b` when no couplings are supplied.
    pub fn v_b_at(&self, x: usize) -> f64 {
        if self.couplings.is_empty() || x == 0 {
            return self.v_b;
        }
        let n = x.min(self.couplings.len());
        let s: f64 = self.couplings[..n].iter().map(|j| 1.0 / j).sum();
        n as f64 / s
    }

    /// Time-dependent butterfly velocity for the global OTOC: harmonic mean
    /// over the `~v_B t` bonds inside the light cone.
    pub fn v_b_time(&self, t: f64) -> f64 {
        if self.couplings.is_empty() {
            return self.v_b;
        }
        let reach = ((self.v_b * t).floor() as usize).clamp(1, self.couplings.len());
        let s: f64 = self.couplings[..reach].iter().map(|j| 1.0 / j).sum();
        reach as f64 / s
    }

    /// Time-dependent diffusion constant: harmonic mean over `√(Dt)` bonds.
    pub fn d_at(&self, t: f64) -> f64 {
        if self.couplings.is_empty() {
            return self.d_diff;
        }
        let reach = ((self.d_diff * t).sqrt().floor() as usize).clamp(1, self.couplings.len());
        let s: f64 = self.couplings[..reach].iter().map(|j| 1.0 / j).sum();
        reach as f64 / s
    }
}

/// The compactly supported wavefront profile `f`. The default is a smooth
/// symmetric bump on `[-1, 1]`; the left-plateau variant saturates to 1 on
/// the causal side and is available because the verbal description of the
/// front shape admits both readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpKind {
    #[default]
    Symmetric,
    LeftPlateau,
}

/// `f(s)`: smooth, compactly supported on `|s| < 1` (symmetric), or
/// saturating to 1 for `s ≤ 0` with a smooth fall-off on `(0, 1)`.
pub fn bump(kind: BumpKind, s: f64) -> f64 {
    match kind {
        BumpKind::Symmetric => {
            if s.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            }
        }
        BumpKind::LeftPlateau => {
            if s <= 0.0 {
                1.0
            } else if s >= 1.0 {
                0.0
            } else {
                // smooth partition-of-unity step from 1 to 0 on (0,1)
                let g = |x: f64| (-1.0 / x).exp();
                g(1.0 - s) / (g(1.0 - s) + g(s))
            }
        }
    }
}

/// OTOC wavefront form `C_OTOC(x,t) ≈ f((x/v_B(x) - t) / (A√t))` with the
/// position-dependent butterfly velocity when per-bond couplings are given.
pub fn otoc_profile(x: usize, t: f64, params: &PhenoParams, kind: BumpKind) -> Result<f64> {
    if t <= 0.0 {
        return Err(CoreError::Parse("otoc_profile needs t > 0".into()));
    }
    let vb = params.v_b_at(x);
    let s = (x as f64 / vb - t) / (params.a_width * t.sqrt());
    Ok(bump(kind, s))
}

/// Auto-correlation profile: diffusive `1/√(D(t)·t)` with a conserved
/// quantity, exponential `e^{-γt}` without one.
pub fn toc_profile(t: f64, params: &PhenoParams, conserved: bool) -> Result<f64> {
    if t <= 0.0 {
        return Err(CoreError::Parse("toc_profile needs t > 0".into()));
    }
    Ok(if conserved {
        1.0 / (params.d_at(t) * t).sqrt()
    } else {
        (-params.gamma * t).exp()
    })
}

/// Gaussian propagator of the conserved quantity,
/// `q(x,t) = (2π D(t) t)^{-1/2} exp(-x²/(2 D(t) t))`.
pub fn diffusion_propagator(x: f64, t: f64, params: &PhenoParams) -> f64 {
    let dt = params.d_at(t) * t;
    (2.0 * std::f64::consts::PI * dt).powf(-0.5) * (-x * x / (2.0 * dt)).exp()
}

/// Global-rotation OTOC, `C ≈ exp(-φ² v_B(t) t)`.
pub fn global_otoc(t: f64, phi: f64, params: &PhenoParams) -> f64 {
    assert!(t >= 0.0);
    (-phi * phi * params.v_b_time(t) * t).exp()
}

/// Weak-link TOC magnitude `(J_ℓ²/J) t e^{-Jt}`: spin polarization crossing
/// the link incoherently under an overall exponential decay.
pub fn weak_link_toc(t: f64, j_link: f64, j: f64) -> f64 {
    (j_link * j_link / j) * t * (-j * t).exp()
}

/// Restricted-access scenario for the scaling table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    TocNoConservation { global_control: bool },
    TocConserved { global_control: bool },
    Otoc { global_control: bool },
}

/// Predicted asymptotic form of the maximum Fisher information in `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingForm {
    /// `FI ~ d^exponent`
    Power { exponent: f64 },
    /// `FI ~ e^{rate·d}` (rate < 0)
    Exponential { rate: f64 },
}

impl ScalingForm {
    pub fn evaluate(&self, d: f64) -> f64 {
        match self {
            ScalingForm::Power { exponent } => d.powf(*exponent),
            ScalingForm::Exponential { rate } => (rate * d).exp(),
        }
    }
}

/// The scaling-table entry for a scenario: exponential decay for TOCs without
/// conservation; `1/d⁴` with a conserved quantity; `1/d` (local control) or
/// `1/d²` (global control) for OTOCs.
pub fn predicted_fi_scaling(scenario: Scenario) -> ScalingForm {
    match scenario {
        Scenario::TocNoConservation { .. } => ScalingForm::Exponential { rate: -1.0 },
        Scenario::TocConserved { .. } => ScalingForm::Power { exponent: -4.0 },
        Scenario::Otoc {
            global_control: false,
        } => ScalingForm::Power { exponent: -1.0 },
        Scenario::Otoc {
            global_control: true,
        } => ScalingForm::Power { exponent: -2.0 },
    }
}

/// Error-effect summary: the Gaussian echo envelope, the distance beyond
/// which TOCs overtake noisy OTOCs, the optimal OTOC time, and the
/// error-limited weak-link FI form.
#[derive(Debug, Clone)]
pub struct ErrorEffects {
    pub a_err: f64,
    pub epsilon: f64,
    pub v_b: f64,
    /// `d ≲ γ v_B / ε`
    pub crossover_d: f64,
    /// `t* = min{ √(1/(εJ)), L/J }`
    pub t_star: f64,
    /// error-limited weak-link FI, `min{ J_ℓ⁴/(εJ³), J_ℓ⁴L²/J⁴ }`
    pub fi_link_limit: f64,
}

/// Decay envelope `exp(-a ε v_B t²)` multiplying the unitary OTOC.
pub fn otoc_error_envelope(t: f64, params: &PhenoParams) -> f64 {
    (-params.a_err * params.epsilon * params.v_b * t * t).exp()
}

pub fn error_decay_and_crossovers(
    params: &PhenoParams,
    j: f64,
    j_link: f64,
    l: usize,
) -> ErrorEffects {
    assert!(params.epsilon > 0.0, "error rate must be positive");
    let eps = params.epsilon;
    let crossover_d = params.gamma * params.v_b / eps;
    let t_star = (1.0 / (eps * j)).sqrt().min(l as f64 / j);
    let jl4 = j_link.powi(4);
    let fi_link_limit = (jl4 / (eps * j.powi(3))).min(jl4 * (l * l) as f64 / j.powi(4));
    ErrorEffects {
        a_err: params.a_err,
        epsilon: eps,
        v_b: params.v_b,
        crossover_d,
        t_star,
        fi_link_limit,
    }
}

/// Model family for [`fit_scaling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `y = c x^p`: fit `ln y` linear in `ln x`
    Power,
    /// `y = c e^{r x}`: fit `ln y` linear in `x`
    Exponential,
}

/// Least-squares fit in log space. Returns the exponent (power) or rate
/// (exponential) plus `r²`. Points at or below `floor` are excluded to avoid
/// taking logs of noise.
pub fn fit_scaling(
    series: &[(f64, f64)],
    model: FitModel,
    floor: f64,
) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(x, y)| *y > floor && *x > 0.0)
        .map(|&(x, y)| {
            let xv = match model {
                FitModel::Power => x.ln(),
                FitModel::Exponential => x,
            };
            (xv, y.ln())
        })
        .collect();
    if pts.len() < 3 {
        return Err(CoreError::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = pts.iter().map(|p| p.1 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let r_num = n * sxy - sx * sy;
    let r_den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    let r2 = if r_den > 0.0 {
        (r_num / r_den).powi(2)
    } else {
        1.0
    };
    Ok((slope, r2))
}

/// Pearson correlation of `(x, ln y)` — the line-quality measure used for the
/// exponential-decay checks.
pub fn log_linear_correlation(series: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(x, y)| (x, y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(CoreError::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = pts.iter().map(|p| p.1 * p.1).sum();
    let num = n * sxy - sx * sy;
    let den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    Ok(num / den)
}

/// Analytic max-FI estimate for the local-control OTOC,
/// `|f'(0) / (A J_d² √(v_B d))|²` — decreases exactly as `1/d` under uniform
/// couplings.
pub fn otoc_fi_estimate(d: usize, j_d: f64, params: &PhenoParams, fp0: f64) -> f64 {
    let vb = params.v_b_at(d);
    (fp0 / (params.a_width * j_d * j_d * (vb * d as f64).sqrt())).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn harmonic_means_reduce_to_constants_for_uniform_couplings() {
        let p = PhenoParams {
            couplings: vec![0.8; 12],
            v_b: 0.8,
            d_diff: 0.8,
            ..Default::default()
        };
        for x in 1..10 {
            assert_abs_diff_eq!(p.v_b_at(x), 0.8, epsilon = 1e-14);
        }
        for &t in &[0.5, 2.0, 9.0] {
            assert_abs_diff_eq!(p.v_b_time(t), 0.8, epsilon = 1e-14);
            assert_abs_diff_eq!(p.d_at(t), 0.8, epsilon = 1e-14);
        }
        // non-uniform: harmonic mean of the first two bonds
        let p = PhenoParams {
            couplings: vec![1.0, 0.5],
            ..Default::default()
        };
        assert_abs_diff_eq!(p.v_b_at(2), 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn bump_support_and_plateau() {
        assert_eq!(bump(BumpKind::Symmetric, 1.0), 0.0);
        assert_eq!(bump(BumpKind::Symmetric, -1.2), 0.0);
        assert!(bump(BumpKind::Symmetric, 0.0) == 1.0);
        assert!(bump(BumpKind::Symmetric, 0.5) > 0.0);
        assert_eq!(bump(BumpKind::LeftPlateau, -3.0), 1.0);
        assert_eq!(bump(BumpKind::LeftPlateau, 2.0), 0.0);
        let mid = bump(BumpKind::LeftPlateau, 0.5);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn otoc_profile_deep_interior_vanishes() {
        let p = PhenoParams::default();
        // x ≪ v_B t: far left of the bump support
        let v = otoc_profile(1, 40.0, &p, BumpKind::Symmetric).unwrap();
        assert_eq!(v, 0.0);
        assert!(otoc_profile(1, 0.0, &p, BumpKind::Symmetric).is_err());
    }

    #[test]
    fn otoc_profile_perturbation_is_causal() {
        // bumping J_d changes the profile only for x >= d
        let base = PhenoParams {
            couplings: vec![1.0; 10],
            ..Default::default()
        };
        let mut bumped = base.clone();
        bumped.couplings[4] *= 1.1; // bond index 4 ~ distance 5
        for x in 1..=4usize {
            let a = otoc_profile(x, x as f64, &base, BumpKind::Symmetric).unwrap();
            let b = otoc_profile(x, x as f64, &bumped, BumpKind::Symmetric).unwrap();
            assert_eq!(a, b, "x={x} should be unaffected");
        }
        let a = otoc_profile(6, 5.0, &base, BumpKind::Symmetric).unwrap();
        let b = otoc_profile(6, 5.0, &bumped, BumpKind::Symmetric).unwrap();
        assert!(a != b, "beyond the bumped bond the profile must shift");
    }

    #[test]
    fn toc_profiles_expected_values() {
        let p = PhenoParams {
            gamma: 1.0,
            d_diff: 1.0,
            ..Default::default()
        };
        assert_abs_diff_eq!(
            toc_profile(3.0, &p, false).unwrap(),
            (-3.0f64).exp(),
            epsilon = 1e-15
        );
        // conserved: exact 1/sqrt(Dt) with log-log slope -1/2
        let y1 = toc_profile(2.0, &p, true).unwrap();
        let y2 = toc_profile(8.0, &p, true).unwrap();
        let slope = (y2.ln() - y1.ln()) / (8.0f64.ln() - 2.0f64.ln());
        assert_abs_diff_eq!(slope, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn global_otoc_values() {
        let p = PhenoParams::default();
        assert_eq!(global_otoc(5.0, 0.0, &p), 1.0);
        // φ² v_B t = 1 ⇒ e^{-1}
        let t = 4.0;
        let phi = (1.0f64 / t).sqrt();
        assert_abs_diff_eq!(global_otoc(t, phi, &p), (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn weak_link_toc_maximum_at_inverse_coupling() {
        // maximize numerically to 1e-6: argmax t = 1/J, value (J_ℓ²/J²) e⁻¹
        let (j, jl) = (1.3, 0.05);
        let mut best_t = 0.0;
        let mut best = f64::NEG_INFINITY;
        let mut t = 0.01;
        while t < 10.0 {
            let v = weak_link_toc(t, jl, j);
            if v > best {
                best = v;
                best_t = t;
            }
            t += 1e-4;
        }
        // golden-section refinement around the grid optimum
        let (mut lo, mut hi) = (best_t - 2e-4, best_t + 2e-4);
        for _ in 0..60 {
            let m1 = lo + 0.382 * (hi - lo);
            let m2 = lo + 0.618 * (hi - lo);
            if weak_link_toc(m1, jl, j) > weak_link_toc(m2, jl, j) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let t_star = 0.5 * (lo + hi);
        assert_abs_diff_eq!(t_star, 1.0 / j, epsilon = 1e-6);
        assert_abs_diff_eq!(
            weak_link_toc(t_star, jl, j),
            (jl * jl) / (j * j) * (-1.0f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn diffusion_term_derivative_peaks_at_dt_of_order_x_squared() {
        // the J-sensitivity of q(x, t/2)² is maximized near D t ~ x² and its
        // peak magnitude scales like 1/d³
        // numeric derivative of q² with respect to ONE bond coupling at
        // distance ~x/2 (inside the diffusive range at the peak); the
        // single-bond sensitivity carries the 1/√(Dt) dilution of the
        // harmonic mean, which is what produces the extra power of 1/d
        fn deriv(params: &PhenoParams, x: f64, t: f64) -> f64 {
            let bond = (x / 2.0) as usize;
            let mut up = params.clone();
            up.couplings[bond] *= 1.0 + 1e-6;
            let q0 = diffusion_propagator(x, t / 2.0, params).powi(2);
            let q1 = diffusion_propagator(x, t / 2.0, &up).powi(2);
            (q1 - q0).abs() / (1e-6 * params.couplings[bond])
        }
        let params = PhenoParams {
            couplings: vec![1.0; 4096],
            ..Default::default()
        };
        let mut peaks = Vec::new();
        for &x in &[8.0, 16.0, 32.0] {
            let mut best = (0.0, 0.0);
            let mut t = 0.2 * x * x;
            while t < 8.0 * x * x {
                let v = deriv(&params, x, t);
                if v > best.1 {
                    best = (t, v);
                }
                t *= 1.02;
            }
            // argmax position: Dt ~ x² within a factor of a few
            let ratio = best.0 / (x * x);
            assert!(
                (0.1..10.0).contains(&ratio),
                "x={x}: argmax Dt/x² = {ratio}"
            );
            peaks.push((x, best.1));
        }
        // magnitude O(1/d³): log-log slope ≈ -3
        let slope = {
            let (x1, y1) = peaks[0];
            let (x2, y2) = peaks[2];
            (y2.ln() - y1.ln()) / (x2.ln() - x1.ln())
        };
        assert!(
            (slope + 3.0).abs() < 0.35,
            "peak-magnitude exponent {slope}, expected ≈ -3"
        );
    }

    #[test]
    fn scaling_table_round_trips_through_fit() {
        for (scenario, d_grid) in [
            (
                Scenario::TocNoConservation {
                    global_control: false,
                },
                vec![1.0, 2.0, 3.0, 4.0, 5.0],
            ),
            (
                Scenario::TocConserved {
                    global_control: true,
                },
                vec![1.0, 2.0, 4.0, 8.0],
            ),
            (
                Scenario::Otoc {
                    global_control: false,
                },
                vec![1.0, 2.0, 4.0, 8.0],
            ),
            (
                Scenario::Otoc {
                    global_control: true,
                },
                vec![1.0, 2.0, 4.0, 8.0],
            ),
        ] {
            let form = predicted_fi_scaling(scenario);
            let series: Vec<(f64, f64)> =
                d_grid.iter().map(|&d| (d, form.evaluate(d))).collect();
            match form {
                ScalingForm::Power { exponent } => {
                    let (fit, r2) = fit_scaling(&series, FitModel::Power, 1e-12).unwrap();
                    assert!((fit - exponent).abs() < 1e-6, "{fit} vs {exponent}");
                    assert!(r2 > 1.0 - 1e-9);
                }
                ScalingForm::Exponential { rate } => {
                    let (fit, r2) = fit_scaling(&series, FitModel::Exponential, 1e-12).unwrap();
                    assert!((fit - rate).abs() < 1e-6);
                    assert!(r2 > 1.0 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn fit_scaling_exact_cases() {
        let pow: Vec<(f64, f64)> = (1..=6).map(|d| (d as f64, 1.0 / d as f64)).collect();
        let (e, _) = fit_scaling(&pow, FitModel::Power, 0.0).unwrap();
        assert!((e + 1.0).abs() < 1e-10);
        let exp: Vec<(f64, f64)> = (1..=6)
            .map(|d| (d as f64, (-2.0 * d as f64).exp()))
            .collect();
        let (r, _) = fit_scaling(&exp, FitModel::Exponential, 0.0).unwrap();
        assert!((r + 2.0).abs() < 1e-10);
        // nonpositive values are rejected once the floor filters them out
        assert!(fit_scaling(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], FitModel::Power, 0.0).is_err());
    }

    #[test]
    fn error_crossovers() {
        let params = PhenoParams {
            epsilon: 0.01,
            v_b: 1.0,
            gamma: 1.0,
            a_err: 1.0,
            ..Default::default()
        };
        // a=1, ε=0.01, v_B=1, t=10 ⇒ envelope e^{-1}
        assert_abs_diff_eq!(
            otoc_error_envelope(10.0, &params),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        let eff = error_decay_and_crossovers(&params, 1.0, 0.1, 10);
        assert_abs_diff_eq!(eff.crossover_d, 100.0, epsilon = 1e-12);
        // the two FI branches cross exactly at √(ε/J) = 1/L
        let l = 10usize;
        let j = 1.0;
        let eps_cross = j / (l * l) as f64;
        let p2 = PhenoParams {
            epsilon: eps_cross,
            ..params.clone()
        };
        let e2 = error_decay_and_crossovers(&p2, j, 0.1, l);
        let branch1 = 0.1f64.powi(4) / (eps_cross * j.powi(3));
        let branch2 = 0.1f64.powi(4) * (l * l) as f64 / j.powi(4);
        assert_abs_diff_eq!(branch1, branch2, epsilon = 1e-12);
        assert_abs_diff_eq!(e2.fi_link_limit, branch1, epsilon = 1e-12);
        // ε → 0 limit: crossover diverges, t* -> L/J
        let p3 = PhenoParams {
            epsilon: 1e-12,
            ..params
        };
        let e3 = error_decay_and_crossovers(&p3, j, 0.1, l);
        assert!(e3.crossover_d > 1e10);
        assert_abs_diff_eq!(e3.t_star, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn analytic_otoc_fi_decreases_as_one_over_d() {
        let p = PhenoParams {
            couplings: vec![1.0; 64],
            ..Default::default()
        };
        let f1 = otoc_fi_estimate(4, 1.0, &p, 0.7);
        let f2 = otoc_fi_estimate(8, 1.0, &p, 0.7);
        assert_abs_diff_eq!(f1 / f2, 2.0, epsilon = 1e-12);
    }
}
