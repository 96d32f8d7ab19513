use std::io::Write;
use std::path::{Path, PathBuf};

use complab::classical::{
    compact_inequality, compact_inequality_with_tolerance, invert_joint, nonclassicality_factor,
    reconstruct_p_lambda, state_form_inequality, state_form_inequality_with_tolerance, violation_search,
};
use complab::detector::povm_factorized_region;
use complab::measurement::{joint_statistics, moments, povm_positivity, JointDistribution};
use complab::outcome::max_abs_difference;
use complab::sampling::{estimate_with_confidence, sample};
use complab::young::{full_quantum_joint, young_sweep};
use complab::{BlochState, Execution, MeasurementModel};
use serde_json::{json, Value};

use crate::config::Scenario;
use crate::error::{exit, CliError};

/// Largest tolerated gap between the moment form and the state form,
/// relative to `max(1, |margin|)`.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-10;

pub struct Output {
    pub json: Value,
    pub code: i32,
}

fn admissible_statistics(state: &BlochState, model: &MeasurementModel) -> Result<JointDistribution, CliError> {
    let povm = povm_positivity(model);
    if !povm.admissible {
        return Err(CliError::Inadmissible(povm));
    }
    Ok(joint_statistics(state, model)?)
}

fn vector(s: &BlochState) -> [f64; 3] {
    (*s).into()
}

pub fn check(sc: &Scenario) -> Result<Output, CliError> {
    let d = admissible_statistics(&sc.state, &sc.model)?;
    let t = moments(&d);
    let tol = sc.options.verdict_tolerance;
    let moment_form = compact_inequality_with_tolerance(&t, sc.model.gamma_x(), sc.model.gamma_z(), tol)?;
    let state_form = state_form_inequality_with_tolerance(&sc.state, &sc.model, tol)?;

    let gap = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let disagreement = gap(moment_form.margin_upper, state_form.margin_upper)
        .max(gap(moment_form.margin_lower, state_form.margin_lower));
    if !(disagreement <= CONSISTENCY_TOLERANCE) {
        return Err(CliError::Internal(format!(
            "moment form {moment_form:?} and state form {state_form:?} disagree by {disagreement:e}"
        )));
    }

    let young = match &sc.young {
        Some(y) => {
            let simulated = full_quantum_joint(&sc.state, y)?;
            let max_dev = max_abs_difference(simulated.table(), d.table());
            if !(max_dev <= 1e-12) {
                return Err(CliError::Internal(format!(
                    "interferometer simulation deviates from the closed form by {max_dev:e}"
                )));
            }
            json!({ "theta": y.theta, "phi": y.phi, "max_dev": max_dev })
        }
        None => Value::Null,
    };

    let code = if moment_form.verdict.is_violated() { exit::VIOLATED } else { exit::OK };
    let factor = nonclassicality_factor(&sc.model);
    Ok(Output {
        json: json!({
            "state": vector(&sc.state),
            "model": sc.model,
            "povm": povm_positivity(&sc.model),
            "distribution": d.table(),
            "moments": t,
            "nonclassicality_factor": factor.is_finite().then_some(factor),
            "report": moment_form,
            "state_form": state_form,
            "relative_disagreement": disagreement,
            "young": young,
            "verdict": moment_form.verdict,
        }),
        code,
    })
}

pub fn invert(sc: &Scenario) -> Result<Output, CliError> {
    let d = admissible_statistics(&sc.state, &sc.model)?;
    let (gx, gz) = (sc.model.gamma_x(), sc.model.gamma_z());
    let inverted = invert_joint(&d, gx, gz)?;
    let reconstructed = reconstruct_p_lambda(&moments(&d), gx, gz)?;
    Ok(Output {
        json: json!({
            "observed": d.table(),
            "inverted": inverted.table(),
            "reconstructed": reconstructed.table(),
            "max_abs_difference": max_abs_difference(inverted.table(), reconstructed.table()),
            "min_entry": inverted.min_entry(),
            "nonnegative": inverted.is_nonnegative(),
        }),
        code: exit::OK,
    })
}

pub fn search(state: &BlochState) -> Result<Output, CliError> {
    let model = violation_search(state)?;
    let povm = povm_positivity(&model);
    let report = state_form_inequality(state, &model)?;
    let d = joint_statistics(state, &model)?;
    let moment_form = compact_inequality(&moments(&d), model.gamma_x(), model.gamma_z())?;
    if !povm.admissible || !report.verdict.is_violated() || !moment_form.verdict.is_violated() {
        return Err(CliError::Internal(format!(
            "search result failed re-verification: povm {povm:?}, report {report:?}"
        )));
    }
    Ok(Output {
        json: json!({
            "state": vector(state),
            "model": model,
            "nonclassicality_factor": nonclassicality_factor(&model),
            "povm": povm,
            "distribution": d.table(),
            "report": report,
            "verdict": report.verdict,
        }),
        code: exit::OK,
    })
}

pub fn simulate(sc: &Scenario, n: u64, seed: u64, exec: Execution) -> Result<Output, CliError> {
    let d = admissible_statistics(&sc.state, &sc.model)?;
    let (gx, gz) = (sc.model.gamma_x(), sc.model.gamma_z());
    let exact = compact_inequality(&moments(&d), gx, gz)?;
    let counts = sample(&d, n, seed, exec)?;
    let est = estimate_with_confidence(&counts, gx, gz, sc.options.confidence_sigma)?;
    let code = if est.verdict.is_violated() && est.verdict_confident {
        exit::VIOLATED
    } else {
        exit::OK
    };
    Ok(Output {
        json: json!({
            "counts": counts,
            "estimate": est,
            "exact": {
                "moments": moments(&d),
                "margin_upper": exact.margin_upper,
                "margin_lower": exact.margin_lower,
                "verdict": exact.verdict,
            },
        }),
        code,
    })
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn young_sweep_csv<W: Write>(
    state: &BlochState,
    theta_steps: usize,
    phi_steps: usize,
    exec: Execution,
    out: W,
) -> Result<usize, CliError> {
    let rows = young_sweep(state, theta_steps, phi_steps, exec)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "theta",
        "phi",
        "gamma_x",
        "gamma_z",
        "gamma_xz",
        "factor",
        "margin_upper",
        "margin_lower",
        "verdict",
        "max_dev",
    ])?;
    for r in &rows {
        let mut record: Vec<String> = [r.theta, r.phi, r.gamma_x, r.gamma_z, r.gamma_xz, r.factor, r.margin_upper, r.margin_lower]
            .into_iter()
            .map(fmt_f64)
            .collect();
        record.push(r.verdict.to_string());
        record.push(fmt_f64(r.max_dev));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(rows.len())
}

pub const GRID_FILE: &str = "regions_grid.csv";
pub const BOUNDARY_FILE: &str = "regions_boundary.csv";

pub fn regions(resolution: usize, exec: Execution, dir: &Path) -> Result<Output, CliError> {
    let scan = povm_factorized_region(resolution, exec)?;
    std::fs::create_dir_all(dir)?;
    let grid_path: PathBuf = dir.join(GRID_FILE);
    let boundary_path: PathBuf = dir.join(BOUNDARY_FILE);

    let mut w = csv::Writer::from_path(&grid_path)?;
    w.write_record(["gamma_x", "gamma_z", "in_povm_region", "in_positive_square"])?;
    for p in &scan.grid {
        w.write_record([
            fmt_f64(p.gamma_x),
            fmt_f64(p.gamma_z),
            p.in_povm_region.to_string(),
            p.in_positive_square.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&boundary_path)?;
    w.write_record(["gamma_x", "gamma_z_boundary"])?;
    for b in &scan.boundary {
        w.write_record([fmt_f64(b.gamma_x), fmt_f64(b.gamma_z_boundary)])?;
    }
    w.flush()?;

    let count = |f: fn(&complab::detector::RegionPoint) -> bool| scan.grid.iter().filter(|p| f(p)).count();
    Ok(Output {
        json: json!({
            "resolution": resolution,
            "grid_file": grid_path.display().to_string(),
            "boundary_file": boundary_path.display().to_string(),
            "grid_points": scan.grid.len(),
            "in_povm_region": count(|p| p.in_povm_region),
            "in_positive_square": count(|p| p.in_positive_square),
            "square_outside_region": count(|p| p.in_positive_square && !p.in_povm_region),
        }),
        code: exit::OK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        let s = fmt_f64(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        let third = 1.0 / 3.0;
        assert_eq!(fmt_f64(third).parse::<f64>().unwrap(), third);
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
