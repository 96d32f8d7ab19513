//! Young interferometer with polarization path marking.
//!
//! The path qubit (`σ_Z` eigenstates `|±⟩`, index 0 = `|+⟩`) is coupled to the
//! photon polarization (index 0 = `|↻⟩`, index 1 = `|↺⟩`, the `Σ_Z`
//! eigenbasis). Phase plates apply
//!
//! ```text
//! |±⟩|↻⟩ → |±⟩|±θ⟩,   |±θ⟩ = cos(θ/2)|↻⟩ ± sin(θ/2)|↺⟩
//! ```
//!
//! completed to a unitary as the path-controlled rotation `V₊ ⊕ V₋` with
//! `V± = [[cos θ/2, ∓sin θ/2], [±sin θ/2, cos θ/2]]`. The screen measures
//! `σ_X` on the path qubit and a linear polarizer measures
//! `Σ_φ = cos φ Σ_X - sin φ Σ_Y`. The resulting statistics are the unsharp
//! model with `γ_X = cos θ`, `γ_Z = cos φ sin θ`, `γ_XZ = sin φ sin θ` and
//! `n = e_Y`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{state_form_report, Verdict, VERDICT_TOLERANCE};
use crate::error::{Error, Result};
use crate::measurement::{joint_statistics, Gammas, JointDistribution, MeasurementModel};
use crate::outcome::{max_abs_difference, Sign, OUTCOMES};
use crate::parallel::{try_map_indexed, Execution};
use crate::qubit::{self, BlochState, Direction};

const ANGLE_TOLERANCE: f64 = 1e-12;

/// Phase-plate marking strength `theta` and polarizer orientation `phi`, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungSetting {
    pub theta: f64,
    pub phi: f64,
}

impl YoungSetting {
    /// Both angles in `[0, π/2]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("phi", phi)] {
            if !(v >= -ANGLE_TOLERANCE && v <= FRAC_PI_2 + ANGLE_TOLERANCE) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[0, pi/2]",
                });
            }
        }
        Ok(Self { theta, phi })
    }

    /// Any finite angles; signs of negative factors are moved into the
    /// measured axes by [`gammas_from_angles`].
    pub fn unrestricted(theta: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("phi", phi)] {
            if !v.is_finite() {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "finite values",
                });
            }
        }
        Ok(Self { theta, phi })
    }

    /// Signed `(cos θ, cos φ sin θ, sin φ sin θ)`.
    pub fn gammas(&self) -> Gammas {
        let (sin_t, cos_t) = self.theta.sin_cos();
        let (sin_p, cos_p) = self.phi.sin_cos();
        Gammas::new(cos_t, cos_p * sin_t, sin_p * sin_t)
    }

    /// `γ_XZ / (γ_X γ_Z) = tan φ / cos θ`, finite even where `γ_Z` vanishes.
    pub fn correlation_ratio(&self) -> f64 {
        self.phi.tan() / self.theta.cos()
    }
}

/// Measurement model realized by the interferometer, with `n = e_Y`.
pub fn gammas_from_angles(y: &YoungSetting) -> MeasurementModel {
    let g = y.gammas();
    let flip = |d: Direction, v: f64| if v < 0.0 { d.negated() } else { d };
    MeasurementModel::with_axes(
        g.x.abs(),
        g.z.abs(),
        g.xz,
        Direction::Y,
        flip(Direction::X, g.x),
        flip(Direction::Z, g.z),
    )
    .expect("trigonometric factors lie in [-1, 1]")
}

/// `γ_X γ_Z / γ_XZ = cos θ / tan φ`.
pub fn nonclassicality_factor(y: &YoungSetting) -> Result<f64> {
    if y.phi == 0.0 {
        return Err(Error::ClosedCorrelationChannel);
    }
    Ok(y.theta.cos() / y.phi.tan())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Path-controlled polarization rotation on path ⊗ polarization.
pub fn path_marking_unitary(theta: f64) -> Matrix4<Complex64> {
    let (s, co) = (0.5 * theta).sin_cos();
    let v_plus = Matrix2::new(c(co), c(-s), c(s), c(co));
    let v_minus = Matrix2::new(c(co), c(s), c(-s), c(co));
    let p_plus = Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0));
    let p_minus = Matrix2::new(c(0.0), c(0.0), c(0.0), c(1.0));
    p_plus.kronecker(&v_plus) + p_minus.kronecker(&v_minus)
}

/// `Σ_φ = cos φ Σ_X - sin φ Σ_Y` on the polarization space.
pub fn polarizer_observable(phi: f64) -> Matrix2<Complex64> {
    qubit::sigma_x() * c(phi.cos()) - qubit::sigma_y() * c(phi.sin())
}

/// Projector on the `Σ_φ` eigenvector with eigenvalue `z`,
/// `|z⟩_φ = (1, z e^{-iφ})/√2`.
pub fn polarizer_projector(phi: f64, z: Sign) -> Matrix2<Complex64> {
    let v = nalgebra::Vector2::new(c(1.0), Complex64::from_polar(z.value(), -phi)) * c(std::f64::consts::FRAC_1_SQRT_2);
    v * v.adjoint()
}

/// Projector on the `σ_X` eigenvector `|x⟩ = (1, x)/√2`.
pub fn screen_projector(x: Sign) -> Matrix2<Complex64> {
    let v = nalgebra::Vector2::new(c(1.0), c(x.value())) * c(std::f64::consts::FRAC_1_SQRT_2);
    v * v.adjoint()
}

/// Outcome statistics from the full path ⊗ polarization evolution.
pub fn full_quantum_joint(s: &BlochState, y: &YoungSetting) -> Result<JointDistribution> {
    let right_circular = Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0));
    let prepared = s.density_matrix().matrix().kronecker(&right_circular);
    let u = path_marking_unitary(y.theta);
    let evolved = u * prepared * u.adjoint();
    let mut table = [0.0; 4];
    for o in OUTCOMES {
        let effect = screen_projector(o.x).kronecker(&polarizer_projector(y.phi, o.z));
        table[o.index()] = (evolved * effect).trace().re;
    }
    JointDistribution::new(table)
}

/// One grid point of an angle sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub phi: f64,
    pub gamma_x: f64,
    pub gamma_z: f64,
    pub gamma_xz: f64,
    /// `cos θ / tan φ`; infinite at `φ = 0`.
    pub factor: f64,
    pub margin_upper: f64,
    pub margin_lower: f64,
    pub verdict: Verdict,
    /// Largest deviation between the full simulation and the closed form.
    pub max_dev: f64,
}

/// Evenly spaced points covering `[0, π/2]`, endpoints exact.
pub fn angle_grid(steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| if i + 1 == steps { FRAC_PI_2 } else { FRAC_PI_2 * i as f64 / (steps - 1) as f64 })
        .collect()
}

/// Sweep `(θ, φ)` over `[0, π/2]²`, θ-major.
///
/// Margins use the state form with `γ_XZ/(γ_X γ_Z) = tan φ / cos θ`, which
/// stays defined on the `θ = 0` edge where `γ_Z` vanishes.
pub fn young_sweep(s: &BlochState, theta_steps: usize, phi_steps: usize, exec: Execution) -> Result<Vec<SweepRow>> {
    if theta_steps < 2 || phi_steps < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 steps per axis, got {theta_steps}x{phi_steps}"
        )));
    }
    let thetas = angle_grid(theta_steps);
    let phis = angle_grid(phi_steps);
    try_map_indexed(theta_steps * phi_steps, exec, |i| {
        let y = YoungSetting::new(thetas[i / phi_steps], phis[i % phi_steps])?;
        sweep_row(s, &y)
    })
}

pub fn sweep_row(s: &BlochState, y: &YoungSetting) -> Result<SweepRow> {
    let g = y.gammas();
    let model = gammas_from_angles(y);
    let closed = joint_statistics(s, &model)?;
    let simulated = full_quantum_joint(s, y)?;
    let (s_x, s_z, s_n) = model.state_components(s);
    let report = state_form_report(s_x, s_z, s_n, y.correlation_ratio(), VERDICT_TOLERANCE);
    Ok(SweepRow {
        theta: y.theta,
        phi: y.phi,
        gamma_x: g.x,
        gamma_z: g.z,
        gamma_xz: g.xz,
        factor: nonclassicality_factor(y).unwrap_or(f64::INFINITY),
        margin_upper: report.margin_upper,
        margin_lower: report.margin_lower,
        verdict: report.verdict,
        max_dev: max_abs_difference(simulated.table(), closed.table()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn max_entry_diff(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn angle_examples() {
        let m = gammas_from_angles(&YoungSetting::new(0.0, 0.7).unwrap());
        assert_eq!((m.gamma_x(), m.gamma_z(), m.gamma_xz()), (1.0, 0.0, 0.0));

        let g = YoungSetting::new(FRAC_PI_2, 0.0).unwrap().gammas();
        assert_abs_diff_eq!(g.x, 0.0, epsilon = 1e-16);
        assert_eq!((g.z, g.xz), (1.0, 0.0));

        let g = YoungSetting::new(FRAC_PI_3, FRAC_PI_4).unwrap().gammas();
        assert_abs_diff_eq!(g.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.z, 6f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.xz, 6f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_eq!(*gammas_from_angles(&YoungSetting::new(FRAC_PI_3, FRAC_PI_4).unwrap()).n(), Direction::Y);
    }

    #[test]
    fn setting_range() {
        assert!(YoungSetting::new(-0.1, 0.0).is_err());
        assert!(YoungSetting::new(0.0, 2.0).is_err());
        assert!(YoungSetting::unrestricted(3.0, -1.0).is_ok());
        assert!(YoungSetting::unrestricted(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn unrestricted_angles_fold_signs_into_axes() {
        let y = YoungSetting::unrestricted(2.5, -0.8).unwrap();
        let s = BlochState::new(0.2, -0.4, 0.5).unwrap();
        let g = y.gammas();
        let d = joint_statistics(&s, &gammas_from_angles(&y)).unwrap();
        let q = full_quantum_joint(&s, &y).unwrap();
        for o in OUTCOMES {
            let want = 0.25
                * (1.0 + o.x_value() * g.x * s.s_x() + o.z_value() * g.z * s.s_z() + o.xz_value() * g.xz * s.s_y());
            assert_abs_diff_eq!(d.get(o), want, epsilon = 1e-15);
            assert_abs_diff_eq!(q.get(o), want, epsilon = 1e-14);
        }
    }

    #[test]
    fn path_readout_examples() {
        let y = YoungSetting::new(FRAC_PI_2, 0.0).unwrap();
        let s = BlochState::new(0.0, 0.0, 1.0).unwrap();
        let d = joint_statistics(&s, &gammas_from_angles(&y)).unwrap();
        let q = full_quantum_joint(&s, &y).unwrap();
        for o in OUTCOMES {
            let want = 0.25 * (1.0 + o.z_value());
            assert_abs_diff_eq!(d.get(o), want, epsilon = 1e-15);
            assert_abs_diff_eq!(q.get(o), want, epsilon = 1e-15);
        }
    }

    #[test]
    fn mixed_state_is_uniform() {
        for (t, p) in [(0.0, 0.0), (0.4, 1.1), (FRAC_PI_2, FRAC_PI_2)] {
            let q = full_quantum_joint(&BlochState::MAXIMALLY_MIXED, &YoungSetting::new(t, p).unwrap()).unwrap();
            for v in q.table() {
                assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn factor_examples() {
        let f = nonclassicality_factor(&YoungSetting::new(FRAC_PI_3, FRAC_PI_4).unwrap()).unwrap();
        assert_abs_diff_eq!(f, 0.5, epsilon = 1e-15);
        let f = nonclassicality_factor(&YoungSetting::new(FRAC_PI_2, FRAC_PI_2).unwrap()).unwrap();
        assert!(f.abs() < 1e-15);
        let f = nonclassicality_factor(&YoungSetting::new(0.0, FRAC_PI_4).unwrap()).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-15);
        assert_eq!(
            nonclassicality_factor(&YoungSetting::new(0.3, 0.0).unwrap()),
            Err(Error::ClosedCorrelationChannel)
        );
    }

    #[test]
    fn factor_matches_gamma_ratio() {
        for &(t, p) in &[(0.3, 0.4), (1.0, 1.2), (FRAC_PI_3, FRAC_PI_4)] {
            let y = YoungSetting::new(t, p).unwrap();
            let g = y.gammas();
            assert_abs_diff_eq!(nonclassicality_factor(&y).unwrap(), g.x * g.z / g.xz, epsilon = 1e-14);
        }
    }

    #[test]
    fn sigma_phi_projectors() {
        for phi in [0.0, 0.3, FRAC_PI_4, 1.3, FRAC_PI_2] {
            let sp = polarizer_projector(phi, Sign::Plus);
            let sm = polarizer_projector(phi, Sign::Minus);
            let eye = qubit::identity();
            let diff = |a: Matrix2<Complex64>, b: Matrix2<Complex64>| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff(sp * sp, sp) < 1e-13);
            assert!(diff(sm * sm, sm) < 1e-13);
            assert!(diff(sp + sm, eye) < 1e-13);
            assert!(diff(sp - sm, polarizer_observable(phi)) < 1e-13);
            // first component real positive
            assert!(sp[(0, 0)].re > 0.0 && sp[(0, 0)].im == 0.0);
        }
        for x in Sign::BOTH {
            let p = screen_projector(x);
            let diff = (p * qubit::sigma_x() - p * Complex64::from(x.value())).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-15);
        }
    }

    #[test]
    fn marking_acts_as_specified_on_right_circular_input() {
        let theta = 0.9;
        let u = path_marking_unitary(theta);
        let (s, co) = (0.5 * theta).sin_cos();
        // column |+⟩|↻⟩ = index 0, column |−⟩|↻⟩ = index 2
        assert_abs_diff_eq!(u[(0, 0)].re, co, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(1, 0)].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(2, 2)].re, co, epsilon = 1e-15);
        assert_abs_diff_eq!(u[(3, 2)].re, -s, epsilon = 1e-15);
    }

    #[test]
    fn sweep_rejects_small_grid() {
        assert!(young_sweep(&BlochState::MAXIMALLY_MIXED, 1, 3, Execution::Sequential).is_err());
    }

    #[test]
    fn sweep_mixed_state() {
        let rows = young_sweep(&BlochState::MAXIMALLY_MIXED, 3, 3, Execution::Sequential).unwrap();
        assert_eq!(rows.len(), 9);
        for r in &rows {
            assert_eq!(r.verdict, Verdict::Satisfied);
            assert!(r.max_dev <= 1e-12);
            assert_eq!((r.margin_upper, r.margin_lower), (1.0, 1.0));
        }
        assert_eq!(rows[0].factor, f64::INFINITY);
        assert_eq!((rows[1].theta, rows[1].phi), (0.0, FRAC_PI_4));
    }

    #[test]
    fn sweep_flags_violation_at_third_quarter() {
        // 7 steps put θ = π/3 at index 4; 5 steps put φ = π/4 at index 2
        let s = BlochState::new(0.0, 0.9, 0.0).unwrap();
        let rows = young_sweep(&s, 7, 5, Execution::Parallel).unwrap();
        let row = rows.iter().find(|r| (r.theta - FRAC_PI_3).abs() < 1e-12 && (r.phi - FRAC_PI_4).abs() < 1e-12).unwrap();
        assert_abs_diff_eq!(row.factor, 0.5, epsilon = 1e-14);
        assert_eq!(row.verdict, Verdict::Violated);
        assert_abs_diff_eq!(row.margin_upper, 1.0 - 0.9 / 0.5, epsilon = 1e-12);
        // θ = 0 row: factor 1/tan φ
        for r in rows.iter().filter(|r| r.theta == 0.0 && r.phi > 0.0) {
            assert_abs_diff_eq!(r.factor, 1.0 / r.phi.tan(), epsilon = 1e-12);
            if r.phi <= FRAC_PI_4 + 1e-12 {
                assert!(r.factor >= 1.0 - 1e-12);
                assert_eq!(r.verdict, Verdict::Satisfied);
            }
        }
        let seq = young_sweep(&s, 7, 5, Execution::Sequential).unwrap();
        assert_eq!(seq, rows);
    }

    proptest! {
        #[test]
        fn unit_sphere(theta in 0.0..=FRAC_PI_2, phi in 0.0..=FRAC_PI_2) {
            let g = YoungSetting::new(theta, phi).unwrap().gammas();
            prop_assert!((g.sum_of_squares() - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn marking_is_unitary(theta in -10.0..10.0f64) {
            let u = path_marking_unitary(theta);
            prop_assert!(max_entry_diff(&(u.adjoint() * u), &Matrix4::identity()) <= 1e-13);
        }

        #[test]
        fn simulation_matches_closed_form(
            v in (-1.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64),
            theta in 0.0..=FRAC_PI_2,
            phi in 0.0..=FRAC_PI_2,
        ) {
            prop_assume!(v.0 * v.0 + v.1 * v.1 + v.2 * v.2 <= 1.0);
            let s = BlochState::new(v.0, v.1, v.2).unwrap();
            let y = YoungSetting::new(theta, phi).unwrap();
            let d = joint_statistics(&s, &gammas_from_angles(&y)).unwrap();
            let q = full_quantum_joint(&s, &y).unwrap();
            prop_assert!(max_abs_difference(d.table(), q.table()) <= 1e-12);
        }
    }
}
