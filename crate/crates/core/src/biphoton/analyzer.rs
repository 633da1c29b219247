//! Linear polarization analyzers, coincidence probabilities, correlation
//! functions and CHSH combinations.

use serde::{Deserialize, Serialize};

use super::state::{c, DensityMatrix, Ket, C64};

/// Anything that projects the photon pair onto a product state.
pub trait Projector {
    fn ket(&self) -> Ket;
}

pub(crate) fn product_ket(s: [C64; 2], i: [C64; 2]) -> Ket {
    Ket::new(s[0] * i[0], s[0] * i[1], s[1] * i[0], s[1] * i[1])
}

fn linear(theta_deg: f64) -> [C64; 2] {
    let t = theta_deg.to_radians();
    [c(t.cos(), 0.0), c(t.sin(), 0.0)]
}

/// Linear analyzer angles for signal and idler, reduced to [0°, 180°).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub theta_s_deg: f64,
    pub theta_i_deg: f64,
}

impl AnalyzerSetting {
    pub fn new(theta_s_deg: f64, theta_i_deg: f64) -> Self {
        Self {
            theta_s_deg: theta_s_deg.rem_euclid(180.0),
            theta_i_deg: theta_i_deg.rem_euclid(180.0),
        }
    }

    /// Half-wave-plate angles (θ/2) that rotate H onto the analyzer axes.
    pub fn hwp_angles_deg(&self) -> (f64, f64) {
        (self.theta_s_deg / 2.0, self.theta_i_deg / 2.0)
    }

    pub fn orthogonal_signal(&self) -> Self {
        Self::new(self.theta_s_deg + 90.0, self.theta_i_deg)
    }

    pub fn orthogonal_idler(&self) -> Self {
        Self::new(self.theta_s_deg, self.theta_i_deg + 90.0)
    }
}

impl Projector for AnalyzerSetting {
    fn ket(&self) -> Ket {
        product_ket(linear(self.theta_s_deg), linear(self.theta_i_deg))
    }
}

/// P = ⟨θ_s, θ_i|ρ|θ_s, θ_i⟩.
pub fn coincidence_probability(rho: &DensityMatrix, setting: &impl Projector) -> f64 {
    rho.expectation(&setting.ket()).max(0.0)
}

/// The four settings (a,b), (a⊥,b⊥), (a,b⊥), (a⊥,b) whose counts form E.
pub fn correlation_settings(theta_s_deg: f64, theta_i_deg: f64) -> [AnalyzerSetting; 4] {
    let ab = AnalyzerSetting::new(theta_s_deg, theta_i_deg);
    [
        ab,
        ab.orthogonal_signal().orthogonal_idler(),
        ab.orthogonal_idler(),
        ab.orthogonal_signal(),
    ]
}

/// E = (N₁ + N₂ − N₃ − N₄)/(N₁ + N₂ + N₃ + N₄) for values ordered as in
/// [`correlation_settings`]. Zero when the total is zero.
pub fn correlation_from_values(v: [f64; 4]) -> f64 {
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    ((v[0] + v[1] - v[2] - v[3]) / total).clamp(-1.0, 1.0)
}

pub fn correlation(rho: &DensityMatrix, theta_s_deg: f64, theta_i_deg: f64) -> f64 {
    let s = correlation_settings(theta_s_deg, theta_i_deg);
    correlation_from_values(s.map(|x| coincidence_probability(rho, &x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub signal_deg: f64,
    pub signal_prime_deg: f64,
    pub idler_deg: f64,
    pub idler_prime_deg: f64,
}

impl ChshAngles {
    pub const fn new(signal_deg: f64, signal_prime_deg: f64, idler_deg: f64, idler_prime_deg: f64) -> Self {
        Self {
            signal_deg,
            signal_prime_deg,
            idler_deg,
            idler_prime_deg,
        }
    }

    /// (0°, 45°, 22.5°, 67.5°): saturates 2√2 for Ψ⁺ in both forms.
    pub const CANONICAL: ChshAngles = ChshAngles::new(0.0, 45.0, 22.5, 67.5);

    /// (a,b), (a,b′), (a′,b), (a′,b′).
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.signal_deg, self.idler_deg),
            (self.signal_deg, self.idler_prime_deg),
            (self.signal_prime_deg, self.idler_deg),
            (self.signal_prime_deg, self.idler_prime_deg),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChshForm {
    /// |E(a,b) − E(a,b′)| + |E(a′,b)| + |E(a′,b′)|, as printed with the
    /// experiment. Not a valid local bound for arbitrary settings.
    #[default]
    Printed,
    /// |E(a,b) − E(a,b′)| + |E(a′,b) + E(a′,b′)|, bounded by 2 for every
    /// local (and separable) state.
    Symmetric,
}

/// Combines the four correlations [E(a,b), E(a,b′), E(a′,b), E(a′,b′)].
pub fn chsh_from_correlations(e: [f64; 4], form: ChshForm) -> f64 {
    match form {
        ChshForm::Printed => (e[0] - e[1]).abs() + e[2].abs() + e[3].abs(),
        ChshForm::Symmetric => (e[0] - e[1]).abs() + (e[2] + e[3]).abs(),
    }
}

pub fn chsh_s_with(rho: &DensityMatrix, angles: &ChshAngles, form: ChshForm) -> f64 {
    chsh_from_correlations(angles.pairs().map(|(a, b)| correlation(rho, a, b)), form)
}

/// CHSH S-value in the printed form.
pub fn chsh_s(rho: &DensityMatrix, angles: &ChshAngles) -> f64 {
    chsh_s_with(rho, angles, ChshForm::Printed)
}

/// CHSH S-value in the symmetric form.
pub fn chsh_s_symmetric(rho: &DensityMatrix, angles: &ChshAngles) -> f64 {
    chsh_s_with(rho, angles, ChshForm::Symmetric)
}

/// Coincidence probability while scanning the idler analyzer with the signal
/// analyzer fixed: (θ_i, P).
pub fn fringe(rho: &DensityMatrix, theta_s_deg: f64, idler_angles_deg: &[f64]) -> Vec<(f64, f64)> {
    idler_angles_deg
        .iter()
        .map(|&t| (t, coincidence_probability(rho, &AnalyzerSetting::new(theta_s_deg, t))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::state::{state_from_efficiencies, PolarizationState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn psi() -> DensityMatrix {
        DensityMatrix::from_pure(&PolarizationState::psi_plus())
    }

    #[test]
    fn diagonal_projection_of_bell_state() {
        assert_abs_diff_eq!(coincidence_probability(&psi(), &AnalyzerSetting::new(45.0, 45.0)), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bell_fringe_is_sin_squared() {
        // projector algebra: ⟨θs θi|Ψ⁺⟩ = sin(θs + θi)/√2
        for k in 0..36 {
            let ti = k as f64 * 10.0;
            for ts in [45.0f64, -45.0, 10.0] {
                let p = coincidence_probability(&psi(), &AnalyzerSetting::new(ts, ti));
                let expected = 0.5 * (ts + ti).to_radians().sin().powi(2);
                assert_abs_diff_eq!(p, expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn d_and_a_fringes_are_quarter_period_apart() {
        let rho = psi();
        for k in 0..18 {
            let ti = k as f64 * 10.0;
            let d = coincidence_probability(&rho, &AnalyzerSetting::new(45.0, ti));
            let a = coincidence_probability(&rho, &AnalyzerSetting::new(-45.0, ti + 90.0));
            assert_abs_diff_eq!(d, a, epsilon = 1e-14);
        }
    }

    #[test]
    fn bell_correlation_closed_form() {
        for (a, b) in [(0.0f64, 0.0f64), (10.0, 33.0), (45.0, 22.5), (-20.0, 70.0)] {
            let expected = -(2.0 * (a + b).to_radians()).cos();
            assert_abs_diff_eq!(correlation(&psi(), a, b), expected, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(correlation(&psi(), 0.0, 0.0), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn mixed_state_is_uncorrelated() {
        let rho = DensityMatrix::maximally_mixed();
        for (a, b) in [(0.0, 0.0), (12.0, 81.0)] {
            assert_abs_diff_eq!(correlation(&rho, a, b), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn tsirelson_at_canonical_angles() {
        let s = chsh_s(&psi(), &ChshAngles::CANONICAL);
        assert_abs_diff_eq!(s, 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(chsh_s_symmetric(&psi(), &ChshAngles::CANONICAL), 2.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn product_state_at_canonical_angles() {
        let hv = DensityMatrix::from_pure(&state_from_efficiencies(1.0, 0.0, 0.0).unwrap());
        assert!(chsh_s(&hv, &ChshAngles::CANONICAL) <= 2.0);
        assert!(chsh_s_symmetric(&hv, &ChshAngles::CANONICAL) <= 2.0);
    }

    #[test]
    fn printed_form_exceeds_two_for_some_product_settings() {
        // why the symmetric form carries the separable bound: |HV⟩ at
        // (0°, 0°, 0°, 90°) gives 4 in the printed combination
        let hv = DensityMatrix::from_pure(&state_from_efficiencies(1.0, 0.0, 0.0).unwrap());
        let angles = ChshAngles::new(0.0, 0.0, 0.0, 90.0);
        assert_abs_diff_eq!(chsh_s(&hv, &angles), 4.0, epsilon = 1e-12);
        assert!(chsh_s_symmetric(&hv, &angles) <= 2.0 + 1e-12);
    }

    #[test]
    fn grid_maximum_of_bell_state_is_tsirelson() {
        let rho = psi();
        let step = 7.5;
        let n = (180.0 / step) as usize;
        let mut best: f64 = 0.0;
        for a in 0..n {
            for a2 in 0..n {
                for b in 0..n {
                    for b2 in 0..n {
                        let angles = ChshAngles::new(a as f64 * step, a2 as f64 * step, b as f64 * step, b2 as f64 * step);
                        best = best.max(chsh_s_symmetric(&rho, &angles));
                    }
                }
            }
        }
        assert_abs_diff_eq!(best, 2.0 * 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn bell_fringe_visibility_is_one() {
        let angles: Vec<f64> = (0..360).map(|k| k as f64).collect();
        for ts in [45.0, -45.0] {
            let f = fringe(&psi(), ts, &angles);
            let max = f.iter().map(|p| p.1).fold(f64::MIN, f64::max);
            let min = f.iter().map(|p| p.1).fold(f64::MAX, f64::min);
            assert_abs_diff_eq!((max - min) / (max + min), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn analyzer_angles_reduce_modulo_180() {
        let s = AnalyzerSetting::new(-45.0, 200.0);
        assert_eq!((s.theta_s_deg, s.theta_i_deg), (135.0, 20.0));
        assert_eq!(s.hwp_angles_deg(), (67.5, 10.0));
    }

    fn random_density(seed: [f64; 32]) -> DensityMatrix {
        let a = crate::biphoton::state::Matrix::from_fn(|r, k| c(seed[r * 4 + k], seed[16 + r * 4 + k]));
        DensityMatrix::from_unnormalized(a * a.adjoint()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn correlation_is_bounded(v in proptest::array::uniform32(-1.0f64..1.0), a in -180.0f64..180.0, b in -180.0f64..180.0) {
            prop_assume!(v.iter().map(|x| x.abs()).sum::<f64>() > 1e-3);
            let rho = random_density(v);
            let e = correlation(&rho, a, b);
            prop_assert!(e.abs() <= 1.0);
        }

        #[test]
        fn separable_states_respect_chsh_bound(
            ts in 0.0f64..180.0, ps in 0.0f64..6.3, ti in 0.0f64..180.0, pi in 0.0f64..6.3,
            a in 0.0f64..180.0, a2 in 0.0f64..180.0, b in 0.0f64..180.0, b2 in 0.0f64..180.0,
        ) {
            let rho = DensityMatrix::from_pure(&PolarizationState::product(ts, ps, ti, pi));
            let s = chsh_s_symmetric(&rho, &ChshAngles::new(a, a2, b, b2));
            prop_assert!(s <= 2.0 + 1e-9, "S = {}", s);
        }

        #[test]
        fn separable_states_respect_printed_bound_at_canonical_angles(
            ts in 0.0f64..180.0, ps in 0.0f64..6.3, ti in 0.0f64..180.0, pi in 0.0f64..6.3,
        ) {
            let rho = DensityMatrix::from_pure(&PolarizationState::product(ts, ps, ti, pi));
            let s = chsh_s(&rho, &ChshAngles::CANONICAL);
            prop_assert!(s <= 2.0 + 1e-9, "S = {}", s);
        }
    }
}
