use super::state::{c, DensityMatrix, Matrix, PolarizationState};

fn sigma_y_sigma_y() -> Matrix {
    let mut m = Matrix::zeros();
    m[(0, 3)] = c(-1.0, 0.0);
    m[(1, 2)] = c(1.0, 0.0);
    m[(2, 1)] = c(1.0, 0.0);
    m[(3, 0)] = c(-1.0, 0.0);
    m
}

/// Eigenvalues of ρ below this are treated as round-off and dropped, since
/// the λ's scale with their square roots.
const EIGENVALUE_NOISE: f64 = 64.0 * f64::EPSILON;

/// Wootters concurrence max(0, λ1 − λ2 − λ3 − λ4), λ the decreasing
/// eigenvalues of √(√ρ ρ̃ √ρ) with ρ̃ = (σy⊗σy) ρ* (σy⊗σy).
///
/// Evaluated as the singular values of τ_jk = ⟨x_j|σy⊗σy|x_k*⟩ over the
/// subnormalized eigenvectors x_k = √p_k v_k, which avoids square roots of
/// round-off for pure or low-rank states.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let yy = sigma_y_sigma_y();
    let e = rho.matrix().symmetric_eigen();
    let x = Matrix::from_fn(|r, k| {
        let p = e.eigenvalues[k];
        let w = if p > EIGENVALUE_NOISE { p.sqrt() } else { 0.0 };
        e.eigenvectors[(r, k)] * c(w, 0.0)
    });
    let tau = x.adjoint() * yy * x.conjugate();
    let mut lambdas: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0)
}

/// Pure-target fidelity ⟨ψ|ρ|ψ⟩.
pub fn fidelity(rho: &DensityMatrix, target: &PolarizationState) -> f64 {
    rho.expectation(target.ket()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::state::state_from_efficiencies;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bell_state_is_maximally_entangled() {
        let rho = DensityMatrix::from_pure(&PolarizationState::psi_plus());
        assert_abs_diff_eq!(concurrence(&rho), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&rho, &PolarizationState::psi_plus()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn maximally_mixed_state() {
        let rho = DensityMatrix::maximally_mixed();
        assert_abs_diff_eq!(concurrence(&rho), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&rho, &PolarizationState::psi_plus()), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn werner_state_matches_closed_form() {
        for &p in &[0.2, 1.0 / 3.0, 0.5, 0.8, 0.95] {
            let rho = DensityMatrix::werner(p).unwrap();
            let expected = ((3.0 * p - 1.0) / 2.0).max(0.0);
            assert_abs_diff_eq!(concurrence(&rho), expected, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(concurrence(&DensityMatrix::werner(0.8).unwrap()), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn werner_concurrence_by_direct_nonhermitian_eigenvalues() {
        // cross-check: ρρ̃ for Werner states is diagonal in the Bell basis, with
        // eigenvalues ((1+3p)/4)² and ((1−p)/4)² (three times)
        let p = 0.8;
        let rho = DensityMatrix::werner(p).unwrap();
        let yy = sigma_y_sigma_y();
        let prod = rho.matrix() * yy * rho.matrix().conjugate() * yy;
        let psi = PolarizationState::psi_plus();
        let top = (psi.ket().adjoint() * prod * psi.ket())[(0, 0)].re;
        assert_abs_diff_eq!(top, ((1.0 + 3.0 * p) / 4.0).powi(2), epsilon = 1e-12);
        let tr = prod.trace().re;
        let low = (tr - top) / 3.0;
        assert_abs_diff_eq!(low, ((1.0 - p) / 4.0).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(top.sqrt() - 3.0 * low.sqrt(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn unbalanced_pair_matches_closed_forms() {
        let (r0, r1): (f64, f64) = (1.0, 0.98);
        let rho = DensityMatrix::from_pure(&state_from_efficiencies(r0, r1, 0.0).unwrap());
        let c_closed = 2.0 * (r0 * r1).sqrt() / (r0 + r1);
        let f_closed = (r0.sqrt() + r1.sqrt()).powi(2) / (2.0 * (r0 + r1));
        assert_abs_diff_eq!(concurrence(&rho), c_closed, epsilon = 1e-12);
        assert_abs_diff_eq!(c_closed, 0.99995, epsilon = 1e-5);
        assert_abs_diff_eq!(fidelity(&rho, &PolarizationState::psi_plus()), f_closed, epsilon = 1e-12);
        assert!(f_closed >= 0.99997);
    }

    #[test]
    fn product_state_has_no_concurrence() {
        let rho = DensityMatrix::from_pure(&state_from_efficiencies(1.0, 0.0, 1.3).unwrap());
        assert_abs_diff_eq!(concurrence(&rho), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn metrics_ignore_target_global_phase() {
        let rho = DensityMatrix::werner(0.7).unwrap();
        let t = PolarizationState::psi_plus();
        assert_abs_diff_eq!(fidelity(&rho, &t), fidelity(&rho, &t.with_global_phase(2.1)), epsilon = 1e-15);
        let s = state_from_efficiencies(1.0, 0.6, 0.4).unwrap();
        let a = concurrence(&DensityMatrix::from_pure(&s));
        let b = concurrence(&DensityMatrix::from_pure(&s.with_global_phase(-0.9)));
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}
