//! Detector-centric description of the joint measurement.
//!
//! The state is represented by its projections on the four coherent states
//! along `n(x',z') = (x', z', x'z')/√3`, where the components pair with
//! `(s_X, s_Z, s_Y)`. Those four projections `½(1 + s·n)` sum to 2, so the
//! normalized Q-like distribution carries an extra factor ½:
//!
//! ```text
//! p_Q(x',z') = ¼[1 + (s_X x' + s_Z z' + s_Y x'z')/√3]
//! ```
//!
//! With that normalization the general detector kernel
//!
//! ```text
//! q̃(x,z|x',z') = ¼[1 + √3(γ_X x x' + γ_Z z z' + γ_XZ xz x'z')]
//! ```
//!
//! reproduces the unsharp statistics with `n = e_Y` exactly.

use serde::Serialize;

use crate::classical::mu_kernel;
use crate::error::{Error, Result};
use crate::measurement::{Gammas, PROBABILITY_TOLERANCE};
use crate::outcome::{table_from_fn, Outcome, OUTCOMES};
use crate::parallel::{map_indexed, Execution};
use crate::qubit::BlochState;

const SQRT_3: f64 = 1.732_050_807_568_877_2;
/// `1/√3`, the edge of the factorized positive square.
pub const INV_SQRT_3: f64 = 0.577_350_269_189_625_8;
/// Tolerance for the factorization defect `|γ_XZ - √3 γ_X γ_Z|`.
pub const FACTORIZATION_TOLERANCE: f64 = 1e-12;

/// Coherent-state direction for hidden pair `h`, as `(n_X, n_Z, n_Y)`.
fn coherent_direction(h: Outcome) -> [f64; 3] {
    [h.x_value() / SQRT_3, h.z_value() / SQRT_3, h.xz_value() / SQRT_3]
}

fn s_dot_n(s: &BlochState, h: Outcome) -> f64 {
    let n = coherent_direction(h);
    s.s_x() * n[0] + s.s_z() * n[1] + s.s_y() * n[2]
}

/// Overlaps `tr(ρ |n⟩⟨n|) = ½(1 + s·n(x',z'))` with the four coherent states.
pub fn coherent_projections(s: &BlochState) -> [f64; 4] {
    table_from_fn(|h| 0.5 * (1.0 + s_dot_n(s, h)))
}

/// Nonnegative, normalized distribution over hidden pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QLikeDistribution([f64; 4]);

impl QLikeDistribution {
    pub fn table(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn get(&self, h: Outcome) -> f64 {
        self.0[h.index()]
    }
}

pub fn q_like_distribution(s: &BlochState) -> QLikeDistribution {
    QLikeDistribution(table_from_fn(|h| 0.25 * (1.0 + s_dot_n(s, h))))
}

/// `q̃(x,z|x',z')` indexed `[outcome][hidden]`, both in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorKernel {
    pub table: [[f64; 4]; 4],
    pub gammas: Gammas,
}

impl DetectorKernel {
    pub fn get(&self, o: Outcome, h: Outcome) -> f64 {
        self.table[o.index()][h.index()]
    }

    pub fn min_entry(&self) -> f64 {
        self.table.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ_{x,z} q̃(x,z|h)` for each hidden pair.
    pub fn column_sums(&self) -> [f64; 4] {
        table_from_fn(|h| OUTCOMES.iter().map(|&o| self.get(o, h)).sum())
    }

    /// Observed table `Σ_h q̃(x,z|h) p(h)`.
    pub fn observe(&self, p: &QLikeDistribution) -> [f64; 4] {
        table_from_fn(|o| OUTCOMES.iter().map(|&h| self.get(o, h) * p.get(h)).sum())
    }

    /// Apply `μ_X ⊗ μ_Z` to the outcome index:
    /// `Σ_{x',z'} μ_X(x,x') μ_Z(z,z') q̃(x',z'|h)`.
    pub fn inverted_by_mu(&self) -> Result<[[f64; 4]; 4]> {
        let mut out = [[0.0; 4]; 4];
        for o in OUTCOMES {
            for h in OUTCOMES {
                let mut acc = 0.0;
                for src in OUTCOMES {
                    acc += mu_kernel(o.x, src.x, self.gammas.x)?
                        * mu_kernel(o.z, src.z, self.gammas.z)?
                        * self.get(src, h);
                }
                out[o.index()][h.index()] = acc;
            }
        }
        Ok(out)
    }
}

fn check_gammas(g: &Gammas) -> Result<()> {
    for (name, v) in [("gamma_x", g.x), ("gamma_z", g.z), ("gamma_xz", g.xz)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                range: "[0, 1]",
            });
        }
    }
    Ok(())
}

fn kernel_entry(g: &Gammas, o: Outcome, h: Outcome) -> f64 {
    let a = o.x_value() * h.x_value();
    let b = o.z_value() * h.z_value();
    0.25 * (1.0 + SQRT_3 * (g.x * a + g.z * b + g.xz * a * b))
}

pub fn detector_kernel(g: Gammas) -> Result<DetectorKernel> {
    check_gammas(&g)?;
    let mut table = [[0.0; 4]; 4];
    for o in OUTCOMES {
        for h in OUTCOMES {
            table[o.index()][h.index()] = kernel_entry(&g, o, h);
        }
    }
    Ok(DetectorKernel { table, gammas: g })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelPositivity {
    /// `1 - √3|γ_X - γ_Z| - √3 γ_XZ`
    pub upper_slack: f64,
    /// `√3 γ_XZ - (√3|γ_X + γ_Z| - 1)`
    pub lower_slack: f64,
    /// Both closed-form inequalities hold.
    pub positive: bool,
    /// Smallest of the 16 kernel entries.
    pub min_entry: f64,
    /// `min_entry ≥ -1e-12`.
    pub brute_force_positive: bool,
}

/// Nonnegativity of `q̃` from the closed-form inequalities
/// `1 - √3|γ_X - γ_Z| ≥ √3 γ_XZ ≥ √3|γ_X + γ_Z| - 1`, alongside the
/// direct minimum over the table.
pub fn kernel_positivity(g: Gammas) -> Result<KernelPositivity> {
    let kernel = detector_kernel(g)?;
    let upper_slack = 1.0 - SQRT_3 * (g.x - g.z).abs() - SQRT_3 * g.xz;
    let lower_slack = SQRT_3 * g.xz - (SQRT_3 * (g.x + g.z).abs() - 1.0);
    // every entry is ¼ of one slack, so the entry tolerance scales by 4
    let positive = upper_slack.min(lower_slack) >= -4.0 * PROBABILITY_TOLERANCE;
    let min_entry = kernel.min_entry();
    Ok(KernelPositivity {
        upper_slack,
        lower_slack,
        positive,
        min_entry,
        brute_force_positive: min_entry >= -PROBABILITY_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Factorization {
    pub factorizes: bool,
    /// `|γ_XZ - √3 γ_X γ_Z|`
    pub defect: f64,
    /// Single-variable kernels `½(1 + √3 γ w w')` as `[same sign, opposite sign]`.
    pub x_kernel: [f64; 2],
    pub z_kernel: [f64; 2],
    /// Largest deviation of `q̃(x|x') q̃(z|z')` from the full table.
    pub max_product_error: f64,
}

fn single_kernel(gamma: f64) -> [f64; 2] {
    [0.5 * (1.0 + SQRT_3 * gamma), 0.5 * (1.0 - SQRT_3 * gamma)]
}

/// `q̃` factorizes into independent `x` and `z` channels iff `γ_XZ = √3 γ_X γ_Z`.
pub fn kernel_factorization(g: Gammas) -> Result<Factorization> {
    let kernel = detector_kernel(g)?;
    let defect = (g.xz - SQRT_3 * g.x * g.z).abs();
    let x_kernel = single_kernel(g.x);
    let z_kernel = single_kernel(g.z);
    let pick = |k: &[f64; 2], same: bool| if same { k[0] } else { k[1] };
    let mut max_product_error: f64 = 0.0;
    for o in OUTCOMES {
        for h in OUTCOMES {
            let product = pick(&x_kernel, o.x == h.x) * pick(&z_kernel, o.z == h.z);
            max_product_error = max_product_error.max((product - kernel.get(o, h)).abs());
        }
    }
    Ok(Factorization {
        factorizes: defect <= FACTORIZATION_TOLERANCE,
        defect,
        x_kernel,
        z_kernel,
        max_product_error,
    })
}

/// For a factorizing kernel: both single-variable channels nonnegative,
/// i.e. `γ_X ≤ 1/√3` and `γ_Z ≤ 1/√3`.
pub fn factorized_positivity(g: Gammas) -> Result<bool> {
    let f = kernel_factorization(g)?;
    if !f.factorizes {
        return Err(Error::NotFactorized { defect: f.defect });
    }
    let min = f.x_kernel[1].min(f.z_kernel[1]);
    Ok(min >= -PROBABILITY_TOLERANCE)
}

/// `γ_X² + γ_Z² + 3 γ_X² γ_Z²`: the POVM bound once `γ_XZ = √3 γ_X γ_Z`.
pub fn factorized_povm_bound(gamma_x: f64, gamma_z: f64) -> f64 {
    let (x2, z2) = (gamma_x * gamma_x, gamma_z * gamma_z);
    x2 + z2 + 3.0 * x2 * z2
}

/// Edge of the factorized POVM region, `γ_Z = sqrt((1 - γ_X²)/(1 + 3γ_X²))`.
pub fn region_boundary(gamma_x: f64) -> f64 {
    let x2 = gamma_x * gamma_x;
    ((1.0 - x2) / (1.0 + 3.0 * x2)).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPoint {
    pub gamma_x: f64,
    pub gamma_z: f64,
    pub in_povm_region: bool,
    pub in_positive_square: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub gamma_x: f64,
    pub gamma_z_boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionScan {
    /// Row-major over `γ_X`, then `γ_Z`.
    pub grid: Vec<RegionPoint>,
    pub boundary: Vec<BoundaryPoint>,
}

pub fn region_point(gamma_x: f64, gamma_z: f64) -> RegionPoint {
    RegionPoint {
        gamma_x,
        gamma_z,
        in_povm_region: factorized_povm_bound(gamma_x, gamma_z) <= 1.0 + PROBABILITY_TOLERANCE,
        in_positive_square: gamma_x <= INV_SQRT_3 + PROBABILITY_TOLERANCE
            && gamma_z <= INV_SQRT_3 + PROBABILITY_TOLERANCE,
    }
}

fn unit_grid(resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|i| if i + 1 == resolution { 1.0 } else { i as f64 / (resolution - 1) as f64 })
        .collect()
}

/// Scan `[0, 1]²` for the factorized POVM region and the positive square,
/// plus `resolution` samples of the analytic region boundary.
pub fn povm_factorized_region(resolution: usize, exec: Execution) -> Result<RegionScan> {
    if resolution < 2 {
        return Err(Error::InvalidGrid(format!("resolution must be at least 2, got {resolution}")));
    }
    let axis = unit_grid(resolution);
    let grid = map_indexed(resolution * resolution, exec, |i| {
        region_point(axis[i / resolution], axis[i % resolution])
    });
    let boundary = axis
        .iter()
        .map(|&gamma_x| BoundaryPoint {
            gamma_x,
            gamma_z_boundary: region_boundary(gamma_x),
        })
        .collect();
    Ok(RegionScan { grid, boundary })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvertedKernel {
    /// `q(x,z|x'',z'')` indexed `[outcome][hidden]`.
    pub table: [[f64; 4]; 4],
    /// `γ_XZ / (γ_X γ_Z)`
    pub ratio: f64,
    /// `√3 γ_XZ / (γ_X γ_Z)`, which nonnegativity would need in `[lower_bound, upper_bound]`.
    pub scaled_ratio: f64,
    pub upper_bound: f64,
    /// `2√3 - 1`
    pub lower_bound: f64,
    /// Whether the interval `[lower_bound, upper_bound]` is nonempty and contains `scaled_ratio`.
    pub feasible: bool,
    pub min_entry: f64,
}

/// Closed form of the μ-inverted detector kernel,
/// `q = ¼[1 + √3(x x'' + z z'' + (γ_XZ/(γ_X γ_Z)) xz x''z'')]`.
///
/// Nonnegativity needs `1 ≥ √3 γ_XZ/(γ_X γ_Z) ≥ 2√3 - 1`, an empty interval.
pub fn inverted_kernel(g: Gammas) -> Result<InvertedKernel> {
    check_gammas(&g)?;
    if g.x == 0.0 {
        return Err(Error::ZeroGamma { name: "gamma_x" });
    }
    if g.z == 0.0 {
        return Err(Error::ZeroGamma { name: "gamma_z" });
    }
    let ratio = g.xz / (g.x * g.z);
    let mut table = [[0.0; 4]; 4];
    for o in OUTCOMES {
        for h in OUTCOMES {
            let a = o.x_value() * h.x_value();
            let b = o.z_value() * h.z_value();
            table[o.index()][h.index()] = 0.25 * (1.0 + SQRT_3 * (a + b + ratio * a * b));
        }
    }
    let scaled_ratio = SQRT_3 * ratio;
    let (lower_bound, upper_bound) = (2.0 * SQRT_3 - 1.0, 1.0);
    let min_entry = table.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok(InvertedKernel {
        table,
        ratio,
        scaled_ratio,
        upper_bound,
        lower_bound,
        feasible: lower_bound <= upper_bound && (lower_bound..=upper_bound).contains(&scaled_ratio),
        min_entry,
    })
}

/// `Σ_h q̃(x,z|h) p_Q(h)` for state `s`: the observed table `detector_kernel`
/// predicts.
pub fn detector_statistics(s: &BlochState, g: Gammas) -> Result<[f64; 4]> {
    Ok(detector_kernel(g)?.observe(&q_like_distribution(s)))
}
