use std::fmt::Write as _;
use std::path::Path;

use rmvqe::oracle::fix_column_signs;
use rmvqe::rmatrix::{sweep, ScatteringSolution};
use rmvqe::solver::CostKind;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Overrides, RunConfig};
use crate::error::{CliError, CliResult};
use crate::pipeline::{
    build_model, checked_sector, prepare, rows, sig12, sig12_all, solve_target, target_for,
    write_json, write_text, Prepared,
};

fn load(config: &Path, overrides: &Overrides) -> CliResult<Prepared> {
    let mut cfg = RunConfig::load(config)?;
    cfg.apply(overrides);
    prepare(cfg)
}

/// `solve-target`: writes `target.json` and one trace per block.
pub fn solve_target_cmd(config: &Path, overrides: &Overrides) -> CliResult<serde_json::Value> {
    let prep = load(config, overrides)?;
    let out = prep.config.output_dir();
    let (report, traces) = solve_target(&prep, &prep.config.optimiser()?);
    for (name, trace) in &traces {
        write_text(&out.join(format!("trace_target_{name}.csv")), &trace.to_csv())?;
    }
    let report = report?;
    write_json(&out.join("target.json"), &report)?;
    Ok(json!({
        "target": out.join("target.json"),
        "blocks": report.blocks.iter().map(|b| json!({
            "name": b.name,
            "energies": b.energies,
            "ground_ci": b.ground_ci,
        })).collect::<Vec<_>>(),
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub kind: String,
    pub seed: u64,
    /// Ascending, Hartree.
    pub energies: Vec<f64>,
    /// Rows are layout trials in branch order, columns follow `energies`;
    /// each column has its largest entry positive.
    pub rotation: Vec<Vec<f64>>,
    pub branches: Vec<String>,
    pub order: Vec<usize>,
    pub params: Vec<Vec<f64>>,
    pub channels: Vec<String>,
    /// `a_ijk`, one row per channel.
    pub channel_coeffs: Vec<Vec<f64>>,
    pub evaluations: usize,
    pub measurement_budget: usize,
    pub warnings: Vec<String>,
}

impl SolutionDoc {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Document {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn rotation_matrix(&self) -> nalgebra::DMatrix<f64> {
        let k = self.rotation.len();
        nalgebra::DMatrix::from_fn(k, self.energies.len(), |i, j| self.rotation[i][j])
    }
}

/// `solve-scattering`: solution, trace and summary for the chosen cost.
pub fn solve_scattering_cmd(config: &Path, overrides: &Overrides) -> CliResult<serde_json::Value> {
    let prep = load(config, overrides)?;
    let out = prep.config.output_dir();
    let opt = prep.config.optimiser()?;
    let kind = prep.config.cost_kind()?;
    let target = target_for(&prep, &opt, &out)?;
    let model = build_model(&prep, &target)?;
    checked_sector(&prep, &model)?;
    let trace_path = out.join(format!("trace_{}.csv", kind.label()));
    let solution = match model.solve(kind, &opt) {
        Ok(s) => s,
        Err(e) => {
            if let rmvqe::Error::Convergence { trace, .. } = &e {
                write_text(&trace_path, &trace.to_csv())?;
            }
            return Err(e.into());
        }
    };
    write_text(&trace_path, &solution.trace.to_csv())?;
    let rotation = fix_column_signs(&solution.rotation);
    let coeffs = rmvqe::rmatrix::extract_channel_coeffs(&rotation, &model.layout)?;
    let doc = SolutionDoc {
        kind: kind.label().into(),
        seed: prep.config.seed,
        energies: sig12_all(&solution.energies),
        rotation: rows(&rotation),
        branches: model.layout.branch_names().to_vec(),
        order: solution.order.clone(),
        params: solution.params.clone(),
        channels: coeffs.channels.clone(),
        channel_coeffs: rows(&coeffs.a),
        evaluations: solution.evaluations,
        measurement_budget: model.measurement_budget(kind),
        warnings: solution.warnings.clone(),
    };
    write_json(&out.join("solution.json"), &doc)?;
    let exact = model.oracle()?;
    let max_error = solution
        .energies
        .iter()
        .zip(&exact.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let summary = json!({
        "kind": kind.label(),
        "energies": doc.energies,
        "oracle_energies": sig12_all(&exact.values),
        "max_abs_error": max_error,
        "evaluations": solution.evaluations,
        "measurement_budget": {
            "subspace": model.measurement_budget(CostKind::Subspace),
            "variance": model.measurement_budget(CostKind::Variance),
            "selected": doc.measurement_budget,
        },
        "n_qubits": model.layout.n_qubits(),
        "n_params": rmvqe::ansatz::build_cascade(model.layout.k()).map(|c| c.n_params()).unwrap_or(0),
        "warnings": doc.warnings,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// `rmatrix`: R(E) over the configured grid from `<out>/solution.json`.
pub fn rmatrix_cmd(config: &Path, overrides: &Overrides) -> CliResult<serde_json::Value> {
    let prep = load(config, overrides)?;
    let out = prep.config.output_dir();
    let grid = prep.config.grid()?;
    let doc = SolutionDoc::read(&out.join("solution.json"))?;
    let target = target_for(&prep, &prep.config.optimiser()?, &out)?;
    let model = build_model(&prep, &target)?;
    if doc.branches != model.layout.branch_names() {
        return Err(CliError::Document {
            path: out.join("solution.json"),
            message: "branches differ from the current layout".into(),
        });
    }
    let solution = ScatteringSolution::new(
        doc.energies.clone(),
        &doc.rotation_matrix(),
        &model.layout,
        &prep.config.boundary_values(),
    )?;
    let swept = sweep(&solution, &grid)?;
    let n = solution.channel_coeffs.channels.len();
    let mut csv = String::from("E");
    for i in 0..n {
        for j in 0..n {
            write!(csv, ",R_{i}{j}").unwrap();
        }
    }
    csv.push('\n');
    for (e, r) in &swept.rows {
        write!(csv, "{e:.11e}").unwrap();
        for i in 0..n {
            for j in 0..n {
                write!(csv, ",{:.12e}", r[(i, j)]).unwrap();
            }
        }
        csv.push('\n');
    }
    write_text(&out.join("rmatrix.csv"), &csv)?;
    for (e, pole) in &swept.skipped {
        eprintln!(
            "{}",
            json!({"warning": "grid point inside pole guard skipped", "energy": sig12(*e), "pole": sig12(*pole)})
        );
    }
    let poles = json!({
        "channels": solution.channel_coeffs.channels,
        "poles": doc.energies,
        "residues": (0..solution.energies.len()).map(|k| {
            (0..n).map(|i| -0.5 * solution.boundary[(i, k)].powi(2)).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
        "pole_guard": grid.pole_guard,
        "skipped": swept.skipped.iter().map(|(e, p)| json!({"energy": sig12(*e), "pole": sig12(*p)})).collect::<Vec<_>>(),
    });
    write_json(&out.join("poles.json"), &poles)?;
    Ok(json!({
        "rmatrix": out.join("rmatrix.csv"),
        "rows": swept.rows.len(),
        "skipped": swept.skipped.len(),
    }))
}

/// `oracle-spectrum`: exact projected-sector spectrum in the trial basis.
pub fn oracle_cmd(config: &Path, overrides: &Overrides) -> CliResult<serde_json::Value> {
    let prep = load(config, overrides)?;
    let out = prep.config.output_dir();
    let target = target_for(&prep, &prep.config.optimiser()?, &out)?;
    let model = build_model(&prep, &target)?;
    let (basis, leakage) = checked_sector(&prep, &model)?;
    let n = model.layout.n_system_qubits();
    let exact = model.oracle()?;
    let doc = json!({
        "sector": basis.bitstrings.iter().map(|b| format!("{:0n$b}", b)).collect::<Vec<_>>(),
        "branches": model.layout.branch_names(),
        "leakage": leakage,
        "energies": sig12_all(&exact.values),
        "eigenvectors": rows(&fix_column_signs(&exact.vectors)),
    });
    write_json(&out.join("oracle.json"), &doc)?;
    Ok(doc)
}

/// `validate-config`: builds everything short of the scattering solve.
pub fn validate_cmd(config: &Path, overrides: &Overrides) -> CliResult<serde_json::Value> {
    let prep = load(config, overrides)?;
    let (report, _) = solve_target(&prep, &prep.config.optimiser()?);
    let model = build_model(&prep, &report?)?;
    let (basis, leakage) = checked_sector(&prep, &model)?;
    model.layout.check_close_coupling()?;
    let l = &model.layout;
    let names = l.branch_names();
    Ok(json!({
        "valid": true,
        "n_qubits": l.n_qubits(),
        "trials": l.k(),
        "n_params": rmvqe::ansatz::build_cascade(l.k()).map(|c| c.n_params()).unwrap_or(0),
        "seeds": names.iter().zip(l.seeds()).map(|(n, s)| json!({"branch": n, "seed": s})).collect::<Vec<_>>(),
        "imprint_order": l.imprint_order().iter().map(|i| &names[*i]).collect::<Vec<_>>(),
        "eigenstate_qubits": l.eigenstate_qubits(),
        "sector_size": basis.len(),
        "sector_leakage": leakage,
        "hamiltonian_terms": model.hamiltonian.count_distinct_terms(),
        "measurement_budget": {
            "subspace": model.measurement_budget(CostKind::Subspace),
            "variance": model.measurement_budget(CostKind::Variance),
        },
    }))
}
