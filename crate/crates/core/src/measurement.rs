//! Noisy joint measurement of `σ_X` and `σ_Z`.
//!
//! A [`MeasurementModel`] scales the sharp expectation values by the noise
//! factors `γ_X`, `γ_Z` and couples the outcome product `xz` to `σ_n`:
//!
//! ```text
//! p̃(x,z) = ¼(1 + x γ_X s_X + z γ_Z s_Z + xz γ_XZ s_n)
//! ```
//!
//! The measured axes default to the lab `X` and `Z` axes. They can be rotated
//! (as [`crate::classical::violation_search`] does) provided they stay
//! orthonormal.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::{table_from_fn, Outcome, Sign, OUTCOMES};
use crate::qubit::{self, BlochState, Direction};

/// Entries above `-PROBABILITY_TOLERANCE` count as nonnegative.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of a table sum from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// POVM elements with eigenvalues above `-POVM_TOLERANCE` are accepted.
pub const POVM_TOLERANCE: f64 = 1e-12;

/// Noise factors `(γ_X, γ_Z, γ_XZ)` without a correlation direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gammas {
    pub x: f64,
    pub z: f64,
    pub xz: f64,
}

impl Gammas {
    pub const fn new(x: f64, z: f64, xz: f64) -> Self {
        Self { x, z, xz }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.x * self.x + self.z * self.z + self.xz * self.xz
    }
}

/// Parameters of an unsharp joint measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct MeasurementModel {
    gamma_x: f64,
    gamma_z: f64,
    gamma_xz: f64,
    n: Direction,
    x_axis: Direction,
    z_axis: Direction,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    gamma_x: f64,
    gamma_z: f64,
    gamma_xz: f64,
    n: Direction,
    #[serde(default = "lab_x", skip_serializing_if = "is_lab_x")]
    x_axis: Direction,
    #[serde(default = "lab_z", skip_serializing_if = "is_lab_z")]
    z_axis: Direction,
}

fn lab_x() -> Direction {
    Direction::X
}

fn lab_z() -> Direction {
    Direction::Z
}

fn is_lab_x(d: &Direction) -> bool {
    *d == Direction::X
}

fn is_lab_z(d: &Direction) -> bool {
    *d == Direction::Z
}

impl TryFrom<ModelRepr> for MeasurementModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        MeasurementModel::with_axes(r.gamma_x, r.gamma_z, r.gamma_xz, r.n, r.x_axis, r.z_axis)
    }
}

impl From<MeasurementModel> for ModelRepr {
    fn from(m: MeasurementModel) -> Self {
        ModelRepr {
            gamma_x: m.gamma_x,
            gamma_z: m.gamma_z,
            gamma_xz: m.gamma_xz,
            n: m.n,
            x_axis: m.x_axis,
            z_axis: m.z_axis,
        }
    }
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

impl MeasurementModel {
    /// Model measuring the lab `X` and `Z` axes.
    ///
    /// A negative `gamma_xz` is folded into `n`, so the stored correlation
    /// factor is always nonnegative.
    pub fn new(gamma_x: f64, gamma_z: f64, gamma_xz: f64, n: Direction) -> Result<Self> {
        Self::with_axes(gamma_x, gamma_z, gamma_xz, n, Direction::X, Direction::Z)
    }

    pub fn with_axes(
        gamma_x: f64,
        gamma_z: f64,
        gamma_xz: f64,
        n: Direction,
        x_axis: Direction,
        z_axis: Direction,
    ) -> Result<Self> {
        check_unit_interval("gamma_x", gamma_x)?;
        check_unit_interval("gamma_z", gamma_z)?;
        check_unit_interval("|gamma_xz|", gamma_xz.abs())?;
        let dot = x_axis.vector().dot(z_axis.vector());
        if dot.abs() > qubit::UNIT_TOLERANCE {
            return Err(Error::NonOrthogonalAxes { dot });
        }
        let (gamma_xz, n) = if gamma_xz < 0.0 {
            (-gamma_xz, n.negated())
        } else {
            (gamma_xz, n)
        };
        Ok(Self {
            gamma_x,
            gamma_z,
            gamma_xz,
            n,
            x_axis,
            z_axis,
        })
    }

    pub fn gamma_x(&self) -> f64 {
        self.gamma_x
    }

    pub fn gamma_z(&self) -> f64 {
        self.gamma_z
    }

    pub fn gamma_xz(&self) -> f64 {
        self.gamma_xz
    }

    pub fn gammas(&self) -> Gammas {
        Gammas::new(self.gamma_x, self.gamma_z, self.gamma_xz)
    }

    pub fn n(&self) -> &Direction {
        &self.n
    }

    pub fn x_axis(&self) -> &Direction {
        &self.x_axis
    }

    pub fn z_axis(&self) -> &Direction {
        &self.z_axis
    }

    /// `(s_X, s_Z, s_n)` of a state in this model's frame.
    pub fn state_components(&self, s: &BlochState) -> (f64, f64, f64) {
        (s.expectation(&self.x_axis), s.expectation(&self.z_axis), s.expectation(&self.n))
    }

    /// The Bloch-space vector `γ_X x e_X + γ_Z z e_Z + γ_XZ xz n` of outcome `o`.
    pub fn outcome_vector(&self, o: Outcome) -> Vector3<f64> {
        self.x_axis.vector() * (self.gamma_x * o.x_value())
            + self.z_axis.vector() * (self.gamma_z * o.z_value())
            + self.n.vector() * (self.gamma_xz * o.xz_value())
    }
}

/// Probability table over `(x, z) ∈ {±1}²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution([f64; 4]);

impl JointDistribution {
    pub const UNIFORM: JointDistribution = JointDistribution([0.25; 4]);

    /// Entries in canonical order `(+,+)`, `(+,-)`, `(-,+)`, `(-,-)`.
    pub fn new(table: [f64; 4]) -> Result<Self> {
        for o in OUTCOMES {
            let value = table[o.index()];
            if !(value >= -PROBABILITY_TOLERANCE) {
                return Err(Error::NegativeProbability { outcome: o, value });
            }
        }
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self(table))
    }

    /// `¼(1 + x x̄ + z z̄ + xz x̄z̄)`; fails when the triple is not realizable.
    pub fn from_moments(t: &MomentTriple) -> Result<Self> {
        Self::new(table_from_fn(|o| {
            0.25 * (1.0 + o.x_value() * t.mean_x + o.z_value() * t.mean_z + o.xz_value() * t.corr_xz)
        }))
    }

    pub fn table(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn get(&self, o: Outcome) -> f64 {
        self.0[o.index()]
    }

    pub fn min_entry(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Mean values `x̄`, `z̄` and correlation `x̄z̄` of a joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTriple {
    pub mean_x: f64,
    pub mean_z: f64,
    pub corr_xz: f64,
}

impl MomentTriple {
    pub const ZERO: MomentTriple = MomentTriple {
        mean_x: 0.0,
        mean_z: 0.0,
        corr_xz: 0.0,
    };

    /// Each component must lie in `[-1, 1]` up to rounding.
    pub fn new(mean_x: f64, mean_z: f64, corr_xz: f64) -> Result<Self> {
        for (name, v) in [("mean_x", mean_x), ("mean_z", mean_z), ("corr_xz", corr_xz)] {
            if !(v.abs() <= 1.0 + PROBABILITY_TOLERANCE) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[-1, 1]",
                });
            }
        }
        Ok(Self {
            mean_x,
            mean_z,
            corr_xz,
        })
    }
}

/// Two-entry table for a single dichotomic variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub plus: f64,
    pub minus: f64,
}

impl Marginal {
    pub fn get(&self, s: Sign) -> f64 {
        match s {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }
}

/// Observed statistics `p̃(x,z)` of state `s` under model `m`.
pub fn joint_statistics(s: &BlochState, m: &MeasurementModel) -> Result<JointDistribution> {
    let (s_x, s_z, s_n) = m.state_components(s);
    let t = MomentTriple {
        mean_x: m.gamma_x * s_x,
        mean_z: m.gamma_z * s_z,
        corr_xz: m.gamma_xz * s_n,
    };
    JointDistribution::from_moments(&t)
}

pub fn moments(d: &JointDistribution) -> MomentTriple {
    let mut t = MomentTriple::ZERO;
    for o in OUTCOMES {
        let p = d.get(o);
        t.mean_x += o.x_value() * p;
        t.mean_z += o.z_value() * p;
        t.corr_xz += o.xz_value() * p;
    }
    t
}

/// Observed marginals `(p̃_X, p̃_Z)`.
pub fn marginals(d: &JointDistribution) -> (Marginal, Marginal) {
    let t = d.table();
    (
        Marginal {
            plus: t[0] + t[1],
            minus: t[2] + t[3],
        },
        Marginal {
            plus: t[0] + t[2],
            minus: t[1] + t[3],
        },
    )
}

/// `Δ̃(x,z) = ¼(σ_0 + γ_X x σ_X + γ_Z z σ_Z + γ_XZ xz σ_n)` in canonical order.
pub fn povm_elements(m: &MeasurementModel) -> [Matrix2<Complex64>; 4] {
    let quarter = Complex64::from(0.25);
    OUTCOMES.map(|o| (qubit::identity() + qubit::pauli_dot(&m.outcome_vector(o))) * quarter)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PovmReport {
    pub admissible: bool,
    pub worst_eigenvalue: f64,
    #[serde(serialize_with = "serialize_outcome")]
    pub worst_outcome: Outcome,
}

fn serialize_outcome<S: serde::Serializer>(o: &Outcome, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(o)
}

/// State-independent admissibility: every POVM element must be positive semidefinite.
pub fn povm_positivity(m: &MeasurementModel) -> PovmReport {
    let elements = povm_elements(m);
    let (worst_outcome, worst_eigenvalue) = OUTCOMES
        .iter()
        .map(|&o| {
            let ev = qubit::min_eigenvalue(&elements[o.index()])
                .expect("POVM elements are Hermitian by construction");
            (o, ev)
        })
        .fold((OUTCOMES[0], f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    PovmReport {
        admissible: worst_eigenvalue >= -POVM_TOLERANCE,
        worst_eigenvalue,
        worst_outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn y_model(gx: f64, gz: f64, gxz: f64) -> MeasurementModel {
        MeasurementModel::new(gx, gz, gxz, Direction::Y).unwrap()
    }

    #[test]
    fn mixed_state_gives_uniform_table() {
        let m = y_model(0.5, 0.5, 0.5);
        let d = joint_statistics(&BlochState::MAXIMALLY_MIXED, &m).unwrap();
        assert_eq!(d, JointDistribution::UNIFORM);
    }

    #[test]
    fn strongly_correlated_example() {
        let gxz = 0.82f64.sqrt();
        let m = y_model(0.3, 0.3, gxz);
        let d = joint_statistics(&BlochState::new(0.0, 0.9, 0.0).unwrap(), &m).unwrap();
        let hi = 0.25 * (1.0 + 0.9 * gxz);
        let lo = 0.25 * (1.0 - 0.9 * gxz);
        assert_abs_diff_eq!(hi, 0.4537, epsilon = 1e-4);
        assert_abs_diff_eq!(lo, 0.0463, epsilon = 1e-4);
        for o in OUTCOMES {
            let expected = if o.xz_value() > 0.0 { hi } else { lo };
            assert_abs_diff_eq!(d.get(o), expected, epsilon = 1e-15);
        }
        let t = moments(&d);
        assert_abs_diff_eq!(t.mean_x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.mean_z, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.corr_xz, 0.9 * gxz, epsilon = 1e-15);
        assert_abs_diff_eq!(t.corr_xz, 0.8150, epsilon = 1e-4);
    }

    #[test]
    fn moments_of_simple_tables() {
        assert_eq!(moments(&JointDistribution::UNIFORM), MomentTriple::ZERO);
        let d = JointDistribution::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(moments(&d), MomentTriple::new(1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn marginal_examples() {
        let (mx, mz) = marginals(&JointDistribution::UNIFORM);
        assert_eq!((mx.plus, mx.minus, mz.plus, mz.minus), (0.5, 0.5, 0.5, 0.5));

        let sharp_x = y_model(1.0, 0.0, 0.0);
        let d = joint_statistics(&BlochState::new(1.0, 0.0, 0.0).unwrap(), &sharp_x).unwrap();
        assert_eq!(marginals(&d).0.get(Sign::Plus), 1.0);

        for gz in [0.0, 0.3, 0.6] {
            let d = joint_statistics(&BlochState::new(0.5, 0.0, 0.0).unwrap(), &y_model(0.8, gz, 0.0)).unwrap();
            assert_abs_diff_eq!(marginals(&d).0.plus, 0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(matches!(
            JointDistribution::new([0.5, 0.5, 0.1, -0.1]),
            Err(Error::NegativeProbability { .. })
        ));
        assert!(matches!(
            JointDistribution::new([0.5, 0.5, 0.1, 0.0]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(JointDistribution::new([0.5, 0.5, 1e-13, -1e-13]).is_ok());
    }

    #[test]
    fn inadmissible_model_yields_negative_probability() {
        // |v|² = 1.08: some pure state sees a negative entry
        let m = y_model(0.6, 0.6, 0.6);
        let v = m.outcome_vector(OUTCOMES[0]);
        let s = BlochState::from_vector(-v / v.norm()).unwrap();
        assert!(matches!(
            joint_statistics(&s, &m),
            Err(Error::NegativeProbability { .. })
        ));
    }

    #[test]
    fn model_validation_and_sign_folding() {
        assert!(MeasurementModel::new(1.2, 0.0, 0.0, Direction::Y).is_err());
        assert!(MeasurementModel::new(-0.1, 0.0, 0.0, Direction::Y).is_err());
        assert!(MeasurementModel::with_axes(0.1, 0.1, 0.1, Direction::Y, Direction::X, Direction::X).is_err());
        let m = MeasurementModel::new(0.3, 0.3, -0.4, Direction::Y).unwrap();
        assert_eq!(m.gamma_xz(), 0.4);
        assert_eq!(*m.n(), Direction::Y.negated());
        let s = BlochState::new(0.0, 0.5, 0.0).unwrap();
        assert_abs_diff_eq!(moments(&joint_statistics(&s, &m).unwrap()).corr_xz, -0.2, epsilon = 1e-15);
    }

    #[test]
    fn model_json_shape() {
        let m = y_model(0.3, 0.4, 0.5);
        let v: serde_json::Value = serde_json::to_value(m).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"gamma_x": 0.3, "gamma_z": 0.4, "gamma_xz": 0.5, "n": [0.0, 1.0, 0.0]})
        );
        let back: MeasurementModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
        let bad = serde_json::json!({"gamma_x": 1.3, "gamma_z": 0.4, "gamma_xz": 0.5, "n": [0.0, 1.0, 0.0]});
        assert!(serde_json::from_value::<MeasurementModel>(bad).is_err());
    }

    #[test]
    fn povm_trivial_and_sharp_limits() {
        let quarter = qubit::identity() * Complex64::from(0.25);
        for e in povm_elements(&y_model(0.0, 0.0, 0.0)) {
            assert_eq!(e, quarter);
        }
        // ¼(σ_0 ± σ_X) has eigenvalues {½, 0}: rank one
        let els = povm_elements(&y_model(1.0, 0.0, 0.0));
        for o in OUTCOMES {
            let e = &els[o.index()];
            assert_abs_diff_eq!(qubit::min_eigenvalue(e).unwrap(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(e.trace().re, 0.5, epsilon = 1e-15);
            let expected = (qubit::identity() + qubit::sigma_x() * Complex64::from(o.x_value())) * Complex64::from(0.25);
            assert_eq!(*e, expected);
        }
    }

    #[test]
    fn povm_positivity_examples() {
        let r = povm_positivity(&y_model(0.6, 0.6, 0.6));
        assert!(!r.admissible);
        assert_abs_diff_eq!(r.worst_eigenvalue, 0.25 * (1.0 - 1.08f64.sqrt()), epsilon = 1e-15);

        let r = povm_positivity(&y_model(0.6, 0.6, 0.28f64.sqrt()));
        assert!(r.admissible);
        assert_abs_diff_eq!(r.worst_eigenvalue, 0.0, epsilon = 1e-15);

        let r = povm_positivity(&MeasurementModel::new(0.6, 0.6, 0.3, Direction::X).unwrap());
        assert!(!r.admissible);
        assert_abs_diff_eq!(r.worst_eigenvalue, 0.25 * (1.0 - 1.17f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn povm_special_cases_match_parameter_constraints() {
        // n = e_Y: γ_X² + γ_Z² + γ_XZ² ≤ 1; n = e_X: (γ_X + γ_XZ)² + γ_Z² ≤ 1
        let steps = 21;
        let grid = |i: usize| i as f64 / (steps - 1) as f64;
        for i in 0..steps {
            for j in 0..steps {
                for k in 0..steps {
                    let (gx, gz, gxz) = (grid(i), grid(j), grid(k));
                    let y = povm_positivity(&y_model(gx, gz, gxz)).admissible;
                    let sq = gx * gx + gz * gz + gxz * gxz;
                    if (sq - 1.0).abs() > 1e-9 {
                        assert_eq!(y, sq <= 1.0, "n=e_Y at {gx},{gz},{gxz}");
                    }
                    let x = povm_positivity(&MeasurementModel::new(gx, gz, gxz, Direction::X).unwrap()).admissible;
                    let sq = (gx + gxz).powi(2) + gz * gz;
                    if (sq - 1.0).abs() > 1e-9 {
                        assert_eq!(x, sq <= 1.0, "n=e_X at {gx},{gz},{gxz}");
                    }
                }
            }
        }
    }

    fn admissible_model() -> impl Strategy<Value = MeasurementModel> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64)
            .prop_filter("nonzero n", |t| t.3 * t.3 + t.4 * t.4 + t.5 * t.5 > 1e-6)
            .prop_filter_map("admissible", |(a, b, c, nx, ny, nz)| {
                let n = Direction::normalized(Vector3::new(nx, ny, nz)).unwrap();
                let m = MeasurementModel::new(a, b, c, n).unwrap();
                povm_positivity(&m).admissible.then_some(m)
            })
    }

    fn state() -> impl Strategy<Value = BlochState> {
        (-1.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64)
            .prop_filter_map("inside ball", |(x, y, z)| BlochState::new(x, y, z).ok())
    }

    proptest! {
        #[test]
        fn povm_sums_to_identity(m in admissible_model()) {
            let sum = povm_elements(&m).iter().fold(Matrix2::zeros(), |acc, e| acc + e);
            prop_assert!((sum - qubit::identity()).norm() <= 1e-15);
        }

        #[test]
        fn worst_eigenvalue_closed_form(m in admissible_model()) {
            let closed = OUTCOMES
                .iter()
                .map(|&o| 0.25 * (1.0 - m.outcome_vector(o).norm()))
                .fold(f64::INFINITY, f64::min);
            prop_assert!((povm_positivity(&m).worst_eigenvalue - closed).abs() <= 1e-15);
        }

        #[test]
        fn admissible_models_give_probabilities(s in state(), m in admissible_model()) {
            let d = joint_statistics(&s, &m).unwrap();
            prop_assert!(d.min_entry() >= -PROBABILITY_TOLERANCE);
        }

        #[test]
        fn moments_recover_scaled_expectations(s in state(), m in admissible_model()) {
            let t = moments(&joint_statistics(&s, &m).unwrap());
            let (s_x, s_z, s_n) = m.state_components(&s);
            prop_assert!((t.mean_x - m.gamma_x() * s_x).abs() <= 1e-14);
            prop_assert!((t.mean_z - m.gamma_z() * s_z).abs() <= 1e-14);
            prop_assert!((t.corr_xz - m.gamma_xz() * s_n).abs() <= 1e-14);
        }

        #[test]
        fn trace_route_matches_closed_form(s in state(), m in admissible_model()) {
            let d = joint_statistics(&s, &m).unwrap();
            let rho = s.density_matrix();
            for (o, e) in OUTCOMES.iter().zip(povm_elements(&m)) {
                prop_assert!((rho.expectation_of(&e) - d.get(*o)).abs() <= 1e-13);
            }
        }
    }
}
