//! Separable hidden-variable model for the noisy joint measurement.
//!
//! The hidden variable is the pair `(x', z')` of sharp `σ_X`, `σ_Z` values.
//! Observed statistics are modelled as
//!
//! ```text
//! p̃(x,z) = Σ p_X(x|x') p_Z(z|z') p_Λ(x',z'),   p_W(w|w') = ½(1 + γ_W w w')
//! ```
//!
//! which fixes `p_Λ` uniquely from the observed moments. The data are
//! compatible with the model iff every entry of `p_Λ` is nonnegative, which is
//! what the complementarity inequalities express. Applying the inverse noise
//! kernels `μ_W(w,w') = ½(1 + w w'/γ_W)` to `p̃` produces the same table.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{moments, JointDistribution, MeasurementModel, MomentTriple};
use crate::outcome::{max_abs_difference, table_from_fn, Outcome, Sign, OUTCOMES};
use crate::qubit::{BlochState, Direction};

/// Half-width of the band around zero reported as [`Verdict::Boundary`].
pub const VERDICT_TOLERANCE: f64 = 1e-9;

fn check_gamma(name: &'static str, gamma: f64) -> Result<()> {
    if gamma == 0.0 {
        return Err(Error::ZeroGamma { name });
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::OutOfRange {
            name,
            value: gamma,
            range: "(0, 1]",
        });
    }
    Ok(())
}

/// Noise channel `p_W(w|w') = ½(1 + γ w w')` shared by both observables.
pub fn conditional(w: Sign, w_prime: Sign, gamma: f64) -> Result<f64> {
    check_gamma("gamma", gamma)?;
    Ok(0.5 * (1.0 + gamma * w.value() * w_prime.value()))
}

/// Inverse noise kernel `μ_W(w,w') = ½(1 + w w'/γ)`. Negative whenever `γ < 1`.
pub fn mu_kernel(w: Sign, w_prime: Sign, gamma: f64) -> Result<f64> {
    check_gamma("gamma", gamma)?;
    Ok(0.5 * (1.0 + w.value() * w_prime.value() / gamma))
}

/// Quasi-probability table over hidden pairs `(x', z')`. Entries sum to one
/// but may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedDistribution([f64; 4]);

impl ReconstructedDistribution {
    pub fn new(table: [f64; 4]) -> Result<Self> {
        let sum: f64 = table.iter().sum();
        // large negative entries cancel, so the slack scales with their size
        let slack = crate::measurement::NORMALIZATION_TOLERANCE * (1.0 + max_magnitude(&table));
        if !((sum - 1.0).abs() <= slack) {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self(table))
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

    pub fn is_nonnegative(&self) -> bool {
        self.min_entry() >= -crate::measurement::PROBABILITY_TOLERANCE
    }

    /// `(p_X, p_Z)` marginals as `[p(+), p(-)]`.
    pub fn marginals(&self) -> ([f64; 2], [f64; 2]) {
        let t = &self.0;
        ([t[0] + t[1], t[2] + t[3]], [t[0] + t[2], t[1] + t[3]])
    }
}

fn max_magnitude(t: &[f64; 4]) -> f64 {
    t.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// The unique `p_Λ` consistent with the observed moments:
/// `¼(1 + x' x̄/γ_X + z' z̄/γ_Z + x'z' x̄z̄/(γ_X γ_Z))`.
pub fn reconstruct_p_lambda(t: &MomentTriple, gamma_x: f64, gamma_z: f64) -> Result<ReconstructedDistribution> {
    check_gamma("gamma_x", gamma_x)?;
    check_gamma("gamma_z", gamma_z)?;
    let a = t.mean_x / gamma_x;
    let b = t.mean_z / gamma_z;
    let c = t.corr_xz / (gamma_x * gamma_z);
    Ok(ReconstructedDistribution(table_from_fn(|o| {
        0.25 * (1.0 + o.x_value() * a + o.z_value() * b + o.xz_value() * c)
    })))
}

/// Push a hidden-variable table through the two independent noise channels.
pub fn forward_model(p_lambda: &ReconstructedDistribution, gamma_x: f64, gamma_z: f64) -> Result<JointDistribution> {
    check_gamma("gamma_x", gamma_x)?;
    check_gamma("gamma_z", gamma_z)?;
    let mut table = [0.0; 4];
    for o in OUTCOMES {
        for h in OUTCOMES {
            table[o.index()] +=
                conditional(o.x, h.x, gamma_x)? * conditional(o.z, h.z, gamma_z)? * p_lambda.get(h);
        }
    }
    JointDistribution::new(table)
}

/// The four left-hand sides `1 ± x̄/γ_X ± z̄/γ_Z ± x̄z̄/(γ_X γ_Z)`, in the order
///
/// ```text
/// 1 + a + b + c,   1 - a - b + c,   1 - a + b - c,   1 + a - b - c
/// ```
///
/// i.e. `4 p_Λ` at `(+,+)`, `(-,-)`, `(-,+)`, `(+,-)`.
pub fn inequality_family(t: &MomentTriple, gamma_x: f64, gamma_z: f64) -> Result<[f64; 4]> {
    check_gamma("gamma_x", gamma_x)?;
    check_gamma("gamma_z", gamma_z)?;
    let a = t.mean_x / gamma_x;
    let b = t.mean_z / gamma_z;
    let c = t.corr_xz / (gamma_x * gamma_z);
    Ok(family_values(a, b, c))
}

fn family_values(a: f64, b: f64, c: f64) -> [f64; 4] {
    [1.0 + a + b + c, 1.0 - a - b + c, 1.0 - a + b - c, 1.0 + a - b - c]
}

/// `min(a, b) = (a + b - |a - b|) / 2`.
#[inline]
pub fn min_via_abs(a: f64, b: f64) -> f64 {
    0.5 * (a + b - (a - b).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Boundary,
    Violated,
}

impl Verdict {
    /// Classify the smallest margin: below `-tolerance` is a violation,
    /// within `±tolerance` a boundary case.
    pub fn classify(min_margin: f64, tolerance: f64) -> Verdict {
        if !(min_margin >= -tolerance) {
            Verdict::Violated
        } else if min_margin <= tolerance {
            Verdict::Boundary
        } else {
            Verdict::Satisfied
        }
    }

    pub fn is_violated(self) -> bool {
        self == Verdict::Violated
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Boundary => "boundary",
            Verdict::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub four_values: [f64; 4],
    /// `1 - |a - b| - c`
    pub margin_upper: f64,
    /// `c - (|a + b| - 1)`
    pub margin_lower: f64,
    pub verdict: Verdict,
}

impl InequalityReport {
    fn from_scaled(a: f64, b: f64, c: f64, tolerance: f64) -> Self {
        let margin_upper = 1.0 - (a - b).abs() - c;
        let margin_lower = c - ((a + b).abs() - 1.0);
        Self {
            four_values: family_values(a, b, c),
            margin_upper,
            margin_lower,
            verdict: Verdict::classify(min_via_abs(margin_upper, margin_lower), tolerance),
        }
    }

    pub fn min_margin(&self) -> f64 {
        min_via_abs(self.margin_upper, self.margin_lower)
    }

    pub fn min_family_value(&self) -> f64 {
        self.four_values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Compact two-sided form `1 - |a - b| ≥ c ≥ |a + b| - 1` with
/// `a = x̄/γ_X`, `b = z̄/γ_Z`, `c = x̄z̄/(γ_X γ_Z)`.
pub fn compact_inequality(t: &MomentTriple, gamma_x: f64, gamma_z: f64) -> Result<InequalityReport> {
    compact_inequality_with_tolerance(t, gamma_x, gamma_z, VERDICT_TOLERANCE)
}

pub fn compact_inequality_with_tolerance(
    t: &MomentTriple,
    gamma_x: f64,
    gamma_z: f64,
    tolerance: f64,
) -> Result<InequalityReport> {
    check_gamma("gamma_x", gamma_x)?;
    check_gamma("gamma_z", gamma_z)?;
    Ok(InequalityReport::from_scaled(
        t.mean_x / gamma_x,
        t.mean_z / gamma_z,
        t.corr_xz / (gamma_x * gamma_z),
        tolerance,
    ))
}

/// Inequalities written in the state's own components:
/// `1 - |s_X - s_Z| ≥ r s_n ≥ |s_X + s_Z| - 1` with `r = γ_XZ/(γ_X γ_Z)`.
///
/// `r` may be infinite in limiting settings; `s_n = 0` then contributes zero.
pub fn state_form_report(s_x: f64, s_z: f64, s_n: f64, ratio: f64, tolerance: f64) -> InequalityReport {
    let c = if s_n == 0.0 { 0.0 } else { ratio * s_n };
    InequalityReport::from_scaled(s_x, s_z, c, tolerance)
}

pub fn state_form_inequality(s: &BlochState, m: &MeasurementModel) -> Result<InequalityReport> {
    state_form_inequality_with_tolerance(s, m, VERDICT_TOLERANCE)
}

pub fn state_form_inequality_with_tolerance(
    s: &BlochState,
    m: &MeasurementModel,
    tolerance: f64,
) -> Result<InequalityReport> {
    check_gamma("gamma_x", m.gamma_x())?;
    check_gamma("gamma_z", m.gamma_z())?;
    let (s_x, s_z, s_n) = m.state_components(s);
    let ratio = m.gamma_xz() / (m.gamma_x() * m.gamma_z());
    Ok(state_form_report(s_x, s_z, s_n, ratio, tolerance))
}

/// Apply `μ_X ⊗ μ_Z` to the observed table:
/// `p(x,z) = Σ μ_X(x,x') μ_Z(z,z') p̃(x',z')`.
pub fn invert_joint(d: &JointDistribution, gamma_x: f64, gamma_z: f64) -> Result<ReconstructedDistribution> {
    check_gamma("gamma_x", gamma_x)?;
    check_gamma("gamma_z", gamma_z)?;
    let mut table = [0.0; 4];
    for o in OUTCOMES {
        for src in OUTCOMES {
            table[o.index()] += mu_kernel(o.x, src.x, gamma_x)? * mu_kernel(o.z, src.z, gamma_z)? * d.get(src);
        }
    }
    Ok(ReconstructedDistribution(table))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub max_abs_difference: f64,
}

/// Compare the μ-inverted table with `p_Λ` reconstructed from the moments.
pub fn equivalence_check(d: &JointDistribution, gamma_x: f64, gamma_z: f64) -> Result<EquivalenceReport> {
    let inverted = invert_joint(d, gamma_x, gamma_z)?;
    let reconstructed = reconstruct_p_lambda(&moments(d), gamma_x, gamma_z)?;
    Ok(EquivalenceReport {
        max_abs_difference: max_abs_difference(inverted.table(), reconstructed.table()),
    })
}

/// Complete `n` to a right-handed frame `(e_X, n, e_Z)`.
///
/// `e_X` is the lab axis on which `n` has its smallest component (lowest index
/// on ties), orthogonalized against `n`; `e_Z = e_X × n`.
pub fn complete_triad(n: &Direction) -> (Direction, Direction) {
    let v = n.vector();
    let k = (0..3).fold(0, |best, i| if v[i].abs() < v[best].abs() { i } else { best });
    let mut axis = Vector3::zeros();
    axis[k] = 1.0;
    let e_x = (axis - v * v[k]).normalize();
    let e_z = e_x.cross(v);
    (
        Direction::normalized(e_x).expect("cross product of independent vectors"),
        Direction::normalized(e_z).expect("cross product of orthonormal vectors"),
    )
}

/// Symmetric noise level `γ` with `γ² / sqrt(1 - 2γ²) = target`.
///
/// Solves `u² + 2 target² u - target² = 0` for `u = γ²` in the cancellation-free
/// form `u = target / (target + sqrt(1 + target²))`.
pub fn symmetric_gamma_for_factor(target: f64) -> f64 {
    (target / (target + (1.0 + target * target).sqrt())).sqrt()
}

/// Build a POVM-admissible measurement that the state `s` violates.
///
/// The correlation axis is `n = s/|s|`, the measured axes complete an
/// orthonormal frame (so `s_X = s_Z = 0`, `s_n = |s|`), and
/// `γ_X = γ_Z = γ`, `γ_XZ = sqrt(1 - 2γ²)` with the nonclassicality factor
/// `γ_X γ_Z / γ_XZ` set to `|s|/2`.
pub fn violation_search(s: &BlochState) -> Result<MeasurementModel> {
    // rescale first so that tiny states do not underflow to the identity
    let scale = s.vector().amax();
    if scale == 0.0 {
        return Err(Error::IdentityState);
    }
    let unit = s.vector() / scale;
    let norm = scale * unit.norm();
    let n = Direction::normalized(unit)?;
    let (e_x, e_z) = complete_triad(&n);
    let gamma = symmetric_gamma_for_factor(0.5 * norm);
    let gamma_xz = (1.0 - 2.0 * gamma * gamma).sqrt();
    MeasurementModel::with_axes(gamma, gamma, gamma_xz, n, e_x, e_z)
}

/// `γ_X γ_Z / γ_XZ`; states whose `s_n` exceeds it (with `s_X = s_Z = 0`) violate.
pub fn nonclassicality_factor(m: &MeasurementModel) -> f64 {
    m.gamma_x() * m.gamma_z() / m.gamma_xz()
}
