//! Two-level state algebra: Bloch vectors, density matrices and Pauli operators.
//!
//! Pauli convention used throughout the crate, in the computational basis
//! where `σ_Z = diag(1, -1)`:
//!
//! ```text
//! σ_X = [[0, 1], [1, 0]]   σ_Y = [[0, -i], [i, 0]]   σ_Z = [[1, 0], [0, -1]]
//! ```
//!
//! Lower-case and upper-case axis labels (`σ_x` / `σ_X`) denote the same
//! operator; only the upper-case names are used here.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `|s| ≤ 1`.
pub const STATE_TOLERANCE: f64 = 1e-9;
/// Slack allowed on `|n| = 1`.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Largest entry deviation from Hermiticity accepted by [`min_eigenvalue`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity() -> Matrix2<Complex64> {
    Matrix2::new(ONE, ZERO, ZERO, ONE)
}

pub fn sigma_x() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Matrix2<Complex64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// `v · σ` for an arbitrary real 3-vector.
pub fn pauli_dot(v: &Vector3<f64>) -> Matrix2<Complex64> {
    sigma_x() * Complex64::from(v.x) + sigma_y() * Complex64::from(v.y) + sigma_z() * Complex64::from(v.z)
}

/// Real unit 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction(Vector3<f64>);

impl Direction {
    pub const X: Direction = Direction(Vector3::new(1.0, 0.0, 0.0));
    pub const Y: Direction = Direction(Vector3::new(0.0, 1.0, 0.0));
    pub const Z: Direction = Direction(Vector3::new(0.0, 0.0, 1.0));

    /// Accepts a vector whose length is 1 within [`UNIT_TOLERANCE`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnitVector { norm });
        }
        Ok(Self(v))
    }

    /// Rescales any nonzero finite vector to unit length.
    pub fn normalized(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotUnitVector { norm });
        }
        Ok(Self(v / norm))
    }

    #[inline]
    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Self(-self.0)
    }

    /// `σ_n = n · σ`.
    pub fn pauli(&self) -> Matrix2<Complex64> {
        pauli_dot(&self.0)
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Direction::new(v[0], v[1], v[2])
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> Self {
        [d.0.x, d.0.y, d.0.z]
    }
}

/// Qubit state `ρ = ½(σ_0 + s·σ)` given by its Bloch vector `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochState(Vector3<f64>);

impl BlochState {
    pub const MAXIMALLY_MIXED: BlochState = BlochState(Vector3::new(0.0, 0.0, 0.0));

    pub fn new(s_x: f64, s_y: f64, s_z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(s_x, s_y, s_z))
    }

    pub fn from_vector(s: Vector3<f64>) -> Result<Self> {
        let norm = s.norm();
        if !norm.is_finite() || norm > 1.0 + STATE_TOLERANCE {
            return Err(Error::UnphysicalState { norm });
        }
        Ok(Self(s))
    }

    #[inline]
    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn s_x(&self) -> f64 {
        self.0.x
    }

    pub fn s_y(&self) -> f64 {
        self.0.y
    }

    pub fn s_z(&self) -> f64 {
        self.0.z
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_pure(&self) -> bool {
        (self.norm() - 1.0).abs() <= STATE_TOLERANCE
    }

    /// `tr(ρ σ_n) = s · n`.
    pub fn expectation(&self, n: &Direction) -> f64 {
        self.0.dot(n.vector())
    }

    /// Component along an arbitrary (not necessarily unit) axis.
    pub fn component(&self, axis: &Vector3<f64>) -> f64 {
        self.0.dot(axis)
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        bloch_to_density(self)
    }
}

impl TryFrom<[f64; 3]> for BlochState {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        BlochState::new(v[0], v[1], v[2])
    }
}

impl From<BlochState> for [f64; 3] {
    fn from(s: BlochState) -> Self {
        [s.0.x, s.0.y, s.0.z]
    }
}

/// Hermitian, unit-trace, positive semidefinite 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    #[inline]
    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// `tr(ρ A)`; real part only, since callers pass Hermitian `A`.
    pub fn expectation_of(&self, a: &Matrix2<Complex64>) -> f64 {
        (self.0 * a).trace().re
    }

    /// Recover the Bloch vector via `s_k = tr(ρ σ_k)`.
    pub fn bloch_vector(&self) -> Vector3<f64> {
        Vector3::new(
            self.expectation_of(&sigma_x()),
            self.expectation_of(&sigma_y()),
            self.expectation_of(&sigma_z()),
        )
    }
}

pub fn bloch_to_density(s: &BlochState) -> DensityMatrix {
    DensityMatrix((identity() + pauli_dot(s.vector())) * Complex64::from(0.5))
}

pub fn expectation(s: &BlochState, n: &Direction) -> f64 {
    s.expectation(n)
}

/// Smaller eigenvalue of a Hermitian 2×2 matrix, in closed form.
pub fn min_eigenvalue(m: &Matrix2<Complex64>) -> Result<f64> {
    let deviation = [
        m[(0, 0)].im.abs(),
        m[(1, 1)].im.abs(),
        (m[(0, 1)] - m[(1, 0)].conj()).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if !(deviation <= HERMITIAN_TOLERANCE) {
        return Err(Error::NotHermitian { deviation });
    }
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    Ok(0.5 * (a + d) - half_gap)
}
