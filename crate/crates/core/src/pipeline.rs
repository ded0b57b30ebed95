//! Executes a [`RunSpec`] and collects its output files in memory.

use std::path::Path;

use serde::Serialize;

use crate::assembly::ScalarField;
use crate::config::{Command, RunSpec};
use crate::error::{Error, Result};
use crate::mesh::build_reservoir_mesh;
use crate::output::{field_vtk, fmt_g, reports_csv, sweep_csv};
use crate::setpoint::{baseline_pdd, SetpointSolver};
use crate::solver::ReservoirSolver;
use crate::sweep::{run_sweep, trend_check, SweepOptions};
use crate::validator::{divergence_study, isotropic_report, linear_taper, ReductionReport, SlabCase};

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub artifacts: Vec<Artifact>,
    /// One-line human summary.
    pub summary: String,
    /// A trend or bound check failed (the run itself completed).
    pub check_failed: bool,
}

impl RunOutcome {
    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| a.contents.as_str())
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.contents).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn artifact(name: &str, contents: String) -> Artifact {
    Artifact {
        name: name.into(),
        contents,
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Runs the command of `spec`. `threads` bounds sweep/validate parallelism
/// (`0` for the default pool).
pub fn execute(spec: &RunSpec, threads: usize) -> Result<RunOutcome> {
    spec.validate()?;
    match spec.command {
        Command::Solve => run_solve(spec),
        Command::Inverse => run_inverse(spec),
        Command::Sweep => run_sweep_command(spec, threads),
        Command::Validate => run_validate(spec, threads),
    }
}

#[derive(Serialize)]
struct SolveSummary {
    rate: f64,
    pdd: f64,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    damping_used: f64,
    nodes: usize,
    triangles: usize,
}

fn run_solve(spec: &RunSpec) -> Result<RunOutcome> {
    let mesh = build_reservoir_mesh(spec.domain()?)?;
    let solver = ReservoirSolver::new(&mesh, spec.flow_params()?)?;
    let (z, report) = solver.solve(spec.solve.rate, &spec.solver.picard(), None)?;
    let pdd = solver.output(&z);
    let summary = SolveSummary {
        rate: spec.solve.rate,
        pdd,
        iterations: report.iterations,
        converged: report.converged,
        final_residual: report.final_residual,
        damping_used: report.damping_used,
        nodes: mesh.num_nodes(),
        triangles: mesh.triangles.len(),
    };
    let mut artifacts = vec![artifact("solve.json", json(&summary))];
    if spec.solve.write_vtk {
        artifacts.push(artifact("pressure.vtk", field_vtk(&mesh, &ScalarField { values: z })?));
    }
    Ok(RunOutcome {
        artifacts,
        summary: format!("rate {} -> PDD {} ({} Picard iterations)", fmt_g(spec.solve.rate), fmt_g(pdd), report.iterations),
        check_failed: false,
    })
}

#[derive(Serialize)]
struct InverseSummary {
    target_pdd: f64,
    q: f64,
    pdd: f64,
    j_p: f64,
    outer_iterations: usize,
    picard_iterations: usize,
    g: f64,
    /// Unfractured capacity at the same drawdown, when the target came from
    /// the baseline.
    j_star: Option<f64>,
}

fn run_inverse(spec: &RunSpec) -> Result<RunOutcome> {
    let mesh = build_reservoir_mesh(spec.domain()?)?;
    let p = spec.flow_params()?;
    let (target, j_star) = match spec.inverse.target_pdd {
        Some(t) => (t, None),
        None => {
            let pdd = baseline_pdd(&mesh, &p, spec.inverse.q_baseline)?;
            (pdd, Some(spec.inverse.q_baseline / pdd))
        }
    };
    let s = SetpointSolver::new(&mesh, p)?;
    let r = s.solve(target, &spec.solver.setpoint())?;
    let mut history = String::from("k,Q,PDD\n");
    for (k, (q, pdd)) in r.history.iter().enumerate() {
        history.push_str(&format!("{},{},{}\n", k + 1, fmt_g(*q), fmt_g(*pdd)));
    }
    let summary = InverseSummary {
        target_pdd: target,
        q: r.q,
        pdd: r.pdd,
        j_p: r.j_p,
        outer_iterations: r.outer_iterations,
        picard_iterations: r.picard_iterations,
        g: s.g(),
        j_star,
    };
    Ok(RunOutcome {
        artifacts: vec![
            artifact("inverse.json", json(&summary)),
            artifact("inverse_history.csv", history),
        ],
        summary: format!(
            "target PDD {} -> Q {} J_p {} in {} outer iterations",
            fmt_g(target),
            fmt_g(r.q),
            fmt_g(r.j_p),
            r.outer_iterations
        ),
        check_failed: false,
    })
}

fn run_sweep_command(spec: &RunSpec, threads: usize) -> Result<RunOutcome> {
    let p = spec.flow_params()?;
    let w = &spec.sweep;
    let opts = SweepOptions {
        threads,
        setpoint: spec.solver.setpoint(),
    };
    let table = run_sweep(spec.domain()?, &w.l_values, &w.beta_values, w.q_baseline, &p, &opts)?;
    let mut artifacts = vec![artifact("sweep.csv", sweep_csv(&table))];
    let (check_failed, summary) = if !table.failures.is_empty() {
        (true, format!("{} of {} cells failed", table.failures.len(), table.j.iter().flatten().count()))
    } else if w.l_values.len() >= 3 && w.beta_values.len() >= 2 {
        let d = trend_check(&table)?;
        artifacts.push(artifact("trend.json", json(&d)));
        let ok = d.passed();
        (
            !ok,
            format!(
                "trend check {}{}",
                if ok { "passed" } else { "FAILED" },
                if d.above_baseline { "" } else { "; some cells below the unfractured capacity" }
            ),
        )
    } else {
        (false, "table written; too small for the trend check".into())
    };
    Ok(RunOutcome {
        artifacts,
        summary,
        check_failed,
    })
}

/// Both report groups of a `validate` run.
pub struct Validation {
    pub isotropic: Vec<ReductionReport>,
    /// Same cases on a mesh refined by two (empty when refinement is off).
    pub isotropic_refined: Vec<ReductionReport>,
    pub anisotropic: Vec<ReductionReport>,
}

impl Validation {
    /// Largest over smallest isotropic constant across scalings.
    pub fn scaling_spread(&self) -> f64 {
        spread(self.isotropic.iter().map(|r| r.empirical_c))
    }

    /// Largest ratio of the isotropic constant between refinement levels.
    pub fn refinement_spread(&self) -> f64 {
        self.isotropic
            .iter()
            .zip(&self.isotropic_refined)
            .map(|(a, b)| spread([a.empirical_c, b.empirical_c].into_iter()))
            .fold(1.0, f64::max)
    }

    /// Anisotropic bound holds at every thickness.
    pub fn bound_holds(&self) -> bool {
        self.anisotropic.iter().all(ReductionReport::passes)
    }
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, 0.0_f64), |(lo, hi), c| (lo.min(c), hi.max(c)));
    if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

pub fn run_validation(spec: &RunSpec, threads: usize) -> Result<Validation> {
    use rayon::prelude::*;
    let v = &spec.validate;
    let p = spec.flow_params()?;
    let iso_p = match &v.isotropic_params {
        Some(c) => c.resolve()?,
        None => p,
    };
    let mut iso_cases: Vec<(f64, f64)> = v.scalings.iter().map(|&s| (s, v.resolution)).collect();
    if v.refine {
        iso_cases.extend(v.scalings.iter().map(|&s| (s, 0.5 * v.resolution)));
    }
    let work = || -> Result<Validation> {
        let iso: Vec<ReductionReport> = iso_cases
            .par_iter()
            .map(|&(s, res)| {
                let q = linear_taper(s * v.q0, v.length);
                let case = SlabCase {
                    length: v.length,
                    h: v.isotropic_h,
                    resolution: res,
                    q_plus: &q,
                    q_minus: &q,
                    q_over_v: v.q_over_v,
                    q0: s * v.q0,
                };
                isotropic_report(&case, &iso_p)
            })
            .collect::<Result<_>>()?;
        let q = linear_taper(v.q0, v.length);
        let aniso = divergence_study(v.length, v.resolution, &p, &q, &q, &v.anisotropic_h)?;
        let n = v.scalings.len();
        Ok(Validation {
            isotropic: iso[..n].to_vec(),
            isotropic_refined: iso[n..].to_vec(),
            anisotropic: aniso,
        })
    };
    if threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(work)
    }
}

#[derive(Serialize)]
struct ValidateSummary {
    anisotropic_bound_holds: bool,
    isotropic_scaling_spread: f64,
    isotropic_refinement_spread: f64,
}

fn run_validate(spec: &RunSpec, threads: usize) -> Result<RunOutcome> {
    let v = run_validation(spec, threads)?;
    let mut all = v.isotropic.clone();
    all.extend(v.isotropic_refined.iter().cloned());
    all.extend(v.anisotropic.iter().cloned());
    let meta = [
        ("length", fmt_g(spec.validate.length)),
        ("resolution", fmt_g(spec.validate.resolution)),
        ("q_profile", "q0*(1-x/L) on both faces".to_string()),
    ];
    let summary = ValidateSummary {
        anisotropic_bound_holds: v.bound_holds(),
        isotropic_scaling_spread: v.scaling_spread(),
        isotropic_refinement_spread: v.refinement_spread(),
    };
    let ok = summary.anisotropic_bound_holds;
    Ok(RunOutcome {
        artifacts: vec![
            artifact("validate.csv", reports_csv(&all, &meta)),
            artifact("validate.json", json(&summary)),
        ],
        summary: format!(
            "anisotropic bound {}; isotropic constant spread {} (scalings), {} (refinement)",
            if ok { "holds" } else { "VIOLATED" },
            fmt_g(summary.isotropic_scaling_spread),
            fmt_g(summary.isotropic_refinement_spread)
        ),
        check_failed: !ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::example;

    #[test]
    fn solve_emits_json_and_vtk() {
        let mut spec = example(Command::Solve);
        spec.domain.as_mut().unwrap().resolution = 10.0;
        let out = execute(&spec, 0).unwrap();
        assert!(out.artifact("solve.json").unwrap().contains("\"pdd\""));
        assert!(out.artifact("pressure.vtk").unwrap().starts_with("# vtk DataFile"));
        assert!(!out.check_failed);
    }

    #[test]
    fn inverse_hits_baseline_drawdown() {
        let mut spec = example(Command::Inverse);
        spec.domain.as_mut().unwrap().resolution = 10.0;
        let out = execute(&spec, 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(out.artifact("inverse.json").unwrap()).unwrap();
        let (t, pdd) = (v["target_pdd"].as_f64().unwrap(), v["pdd"].as_f64().unwrap());
        assert!((t - pdd).abs() <= 1e-6 * t);
        assert!(v["j_p"].as_f64().unwrap() > v["j_star"].as_f64().unwrap());
    }
}
