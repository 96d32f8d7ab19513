//! Finite-statistics simulation of a joint measurement run.
//!
//! Draws use `Pcg64` (PCG XSL RR 128/64) from `rand_pcg`. A run of `N` draws is
//! cut into shards of [`SHARD_SIZE`]; shard `k` is generated by
//! `Pcg64::new(seed, k)`, i.e. state `seed` on stream `k`. Counts therefore do
//! not depend on how many workers process the shards.

use rand::Rng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::classical::{min_via_abs, Verdict, VERDICT_TOLERANCE};
use crate::error::{Error, Result};
use crate::measurement::{JointDistribution, PROBABILITY_TOLERANCE};
use crate::outcome::{Outcome, OUTCOMES};
use crate::parallel::{map_indexed, Execution};

pub const SHARD_SIZE: u64 = 1 << 16;
/// Default z-score threshold for a confident verdict.
pub const DEFAULT_CONFIDENCE_SIGMA: f64 = 5.0;
/// Below this many draws no verdict is reported as confident.
pub const MIN_CONFIDENT_SAMPLES: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CountsRepr", into = "CountsRepr")]
pub struct EmpiricalCounts {
    counts: [u64; 4],
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct CountsRepr {
    n_pp: u64,
    n_pm: u64,
    n_mp: u64,
    n_mm: u64,
    #[serde(rename = "N")]
    n: u64,
    seed: u64,
}

impl TryFrom<CountsRepr> for EmpiricalCounts {
    type Error = Error;

    fn try_from(r: CountsRepr) -> Result<Self> {
        let c = Self::new([r.n_pp, r.n_pm, r.n_mp, r.n_mm], r.seed)?;
        if c.total() != r.n {
            return Err(Error::OutOfRange {
                name: "N",
                value: r.n as f64,
                range: "sum of the four counts",
            });
        }
        Ok(c)
    }
}

impl From<EmpiricalCounts> for CountsRepr {
    fn from(c: EmpiricalCounts) -> Self {
        let [n_pp, n_pm, n_mp, n_mm] = c.counts;
        Self {
            n_pp,
            n_pm,
            n_mp,
            n_mm,
            n: c.total(),
            seed: c.seed,
        }
    }
}

impl EmpiricalCounts {
    pub fn new(counts: [u64; 4], seed: u64) -> Result<Self> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::TooFewSamples { required: 1, got: 0 });
        }
        Ok(Self { counts, seed })
    }

    pub fn counts(&self) -> &[u64; 4] {
        &self.counts
    }

    pub fn get(&self, o: Outcome) -> u64 {
        self.counts[o.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frequencies(&self) -> [f64; 4] {
        let n = self.total() as f64;
        self.counts.map(|c| c as f64 / n)
    }
}

fn cumulative(d: &JointDistribution) -> Result<[f64; 3]> {
    let mut acc = 0.0;
    let mut cdf = [0.0; 3];
    for o in OUTCOMES {
        let p = d.get(o);
        if p < -PROBABILITY_TOLERANCE {
            return Err(Error::NegativeProbability { outcome: o, value: p });
        }
        acc += p.max(0.0);
        if o.index() < 3 {
            cdf[o.index()] = acc;
        }
    }
    Ok(cdf.map(|c| c / acc))
}

fn draw_shard(cdf: &[f64; 3], seed: u64, shard: u64, draws: u64) -> [u64; 4] {
    let mut rng = Pcg64::new(seed as u128, shard as u128);
    let mut counts = [0u64; 4];
    for _ in 0..draws {
        let u: f64 = rng.random();
        let k = cdf.iter().position(|&c| u < c).unwrap_or(3);
        counts[k] += 1;
    }
    counts
}

/// `n` independent draws from `d` by inverse CDF in canonical outcome order.
pub fn sample(d: &JointDistribution, n: u64, seed: u64, exec: Execution) -> Result<EmpiricalCounts> {
    if n == 0 {
        return Err(Error::TooFewSamples { required: 1, got: 0 });
    }
    let cdf = cumulative(d)?;
    let shards = n.div_ceil(SHARD_SIZE);
    let parts = map_indexed(shards as usize, exec, |k| {
        let k = k as u64;
        let draws = SHARD_SIZE.min(n - k * SHARD_SIZE);
        draw_shard(&cdf, seed, k, draws)
    });
    let mut counts = [0u64; 4];
    for part in parts {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    EmpiricalCounts::new(counts, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub seed: u64,
    pub gamma_x: f64,
    pub gamma_z: f64,
    pub mean_x: MomentEstimate,
    pub mean_z: MomentEstimate,
    pub corr_xz: MomentEstimate,
    pub margin_upper: MarginEstimate,
    pub margin_lower: MarginEstimate,
    /// Verdict of the plug-in margins, ignoring their uncertainty.
    pub verdict: Verdict,
    pub confidence_sigma: f64,
    /// Either some margin sits at least `confidence_sigma` errors below zero
    /// or both sit that far above it.
    pub verdict_confident: bool,
}

impl EstimatedReport {
    pub fn moments(&self) -> [MomentEstimate; 3] {
        [self.mean_x, self.mean_z, self.corr_xz]
    }
}

fn check_gamma(name: &'static str, g: f64) -> Result<()> {
    if g == 0.0 {
        return Err(Error::ZeroGamma { name });
    }
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::OutOfRange {
            name,
            value: g,
            range: "(0, 1]",
        });
    }
    Ok(())
}

fn moment(p: &[f64; 4], w: impl Fn(Outcome) -> f64) -> f64 {
    OUTCOMES.iter().map(|&o| w(o) * p[o.index()]).sum()
}

fn moment_estimate(p: &[f64; 4], n: f64, w: impl Fn(Outcome) -> f64) -> MomentEstimate {
    let m = moment(p, w).clamp(-1.0, 1.0);
    // the 1/N floor keeps the error finite when every draw agrees
    MomentEstimate {
        estimate: m,
        std_error: ((1.0 - m * m).max(1.0 / n) / n).sqrt(),
    }
}

/// Standard error of `Σ w_o p̂_o` under multinomial sampling,
/// floored at the shift produced by a single count.
fn linear_std_error(p: &[f64; 4], n: f64, w: impl Fn(Outcome) -> f64) -> f64 {
    let mean = moment(p, &w);
    let second = moment(p, |o| w(o) * w(o));
    let floor = OUTCOMES.iter().map(|&o| w(o).abs()).fold(0.0, f64::max) / n;
    ((second - mean * mean).max(0.0) / n).sqrt().max(floor)
}

/// Error of `1 - |u| - c` or `c - |u| + 1` where `u = a ∓ b` crosses zero at a kink:
/// within one standard error of it both branch signs are tried and the
/// larger error kept.
fn margin_std_error(p: &[f64; 4], n: f64, u: impl Fn(Outcome) -> f64, c: impl Fn(Outcome) -> f64) -> f64 {
    let u_hat = moment(p, &u);
    let branch = |sign: f64| linear_std_error(p, n, |o| -sign * u(o) - c(o));
    if u_hat.abs() <= linear_std_error(p, n, &u) {
        branch(1.0).max(branch(-1.0))
    } else {
        branch(u_hat.signum())
    }
}

pub fn estimate(c: &EmpiricalCounts, gamma_x: f64, gamma_z: f64) -> Result<EstimatedReport> {
    estimate_with_confidence(c, gamma_x, gamma_z, DEFAULT_CONFIDENCE_SIGMA)
}

/// Plug-in moments and margins with first-order (delta method) errors.
pub fn estimate_with_confidence(
    c: &EmpiricalCounts,
    gamma_x: f64,
    gamma_z: f64,
    confidence_sigma: f64,
) -> Result<EstimatedReport> {
    check_gamma("gamma_x", gamma_x)?;
    check_gamma("gamma_z", gamma_z)?;
    let total = c.total();
    if total < 2 {
        return Err(Error::TooFewSamples { required: 2, got: total });
    }
    let n = total as f64;
    let p = c.frequencies();

    let mean_x = moment_estimate(&p, n, Outcome::x_value);
    let mean_z = moment_estimate(&p, n, Outcome::z_value);
    let corr_xz = moment_estimate(&p, n, Outcome::xz_value);

    let a = mean_x.estimate / gamma_x;
    let b = mean_z.estimate / gamma_z;
    let cc = corr_xz.estimate / (gamma_x * gamma_z);
    let upper = 1.0 - (a - b).abs() - cc;
    let lower = cc - ((a + b).abs() - 1.0);

    let wa = |o: Outcome| o.x_value() / gamma_x;
    let wb = |o: Outcome| o.z_value() / gamma_z;
    let wc = |o: Outcome| o.xz_value() / (gamma_x * gamma_z);
    let upper_se = margin_std_error(&p, n, |o| wa(o) - wb(o), wc);
    let lower_se = margin_std_error(&p, n, |o| wa(o) + wb(o), |o| -wc(o));

    let margin_upper = MarginEstimate {
        estimate: upper,
        std_error: upper_se,
        z_score: upper / upper_se,
    };
    let margin_lower = MarginEstimate {
        estimate: lower,
        std_error: lower_se,
        z_score: lower / lower_se,
    };
    let z_min = margin_upper.z_score.min(margin_lower.z_score);
    let verdict_confident =
        total >= MIN_CONFIDENT_SAMPLES && (z_min <= -confidence_sigma || z_min >= confidence_sigma);

    Ok(EstimatedReport {
        n: total,
        seed: c.seed,
        gamma_x,
        gamma_z,
        mean_x,
        mean_z,
        corr_xz,
        margin_upper,
        margin_lower,
        verdict: Verdict::classify(min_via_abs(upper, lower), VERDICT_TOLERANCE),
        confidence_sigma,
        verdict_confident,
    })
}
