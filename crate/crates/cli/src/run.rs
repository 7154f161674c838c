//! Command execution and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use specext::dual::dual_gradient;
use specext::realization::{entropy_curve, grid_convergence, lambda_sweep, ConvergenceTable, EntropyCurve, ExperimentResult};
use specext::solver::{solve_from, verify, SolveReport, Verification};
use specext::{Grid64, MomentData64};

use crate::config::{Command, Job, JobConfig, MomentsFile, Source};
use crate::CliError;

const ENTROPY_CAVEAT: &str = "the entropy is only guaranteed to increase with λ when the data \
admit a rational solution of the prescribed degree; the curve is reported, not asserted";

#[derive(Serialize)]
struct SolutionFile<'a> {
    config: &'a JobConfig,
    converged: bool,
    p: &'a [f64],
    q: &'a [f64],
    /// Distance to the model's coefficients when the data come from a model.
    error: Option<f64>,
    report: &'a SolveReport<f64>,
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    config: &'a JobConfig,
    p: &'a [f64],
    q: &'a [f64],
    gradient_norm: f64,
    verification: &'a Verification<f64>,
}

#[derive(Serialize)]
struct ResultFile<'a, R> {
    config: &'a JobConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
    result: &'a R,
}

/// Files are rendered in memory and written only once every computation
/// has succeeded.
struct Outputs(Vec<(&'static str, String)>);

impl Outputs {
    fn json(&mut self, name: &'static str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.0.push((name, text));
        Ok(())
    }

    fn csv(
        &mut self,
        name: &'static str,
        config: &JobConfig,
        notes: &[&str],
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let mut text = String::new();
        let cfg = serde_json::to_string(config).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(text, "# config: {cfg}").unwrap();
        for n in notes {
            writeln!(text, "# {n}").unwrap();
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        text.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        self.0.push((name, text));
        Ok(())
    }

    fn write(self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for (name, text) in self.0 {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs the job and writes its outputs. Returns whether every solve
/// converged.
pub fn execute(job: Job) -> Result<bool, CliError> {
    let cfg = &job.config;
    let mut out = Outputs(Vec::new());
    let converged = match job.command {
        Command::Moments => {
            let file = MomentsFile {
                config: serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?,
                grid: job.spec.as_ref().unwrap().dims().to_vec(),
                data: job.data.clone().unwrap(),
            };
            out.json("moments.json", &file)?;
            true
        }
        Command::Solve => {
            let data = job.data.as_ref().unwrap();
            let grid = Grid64::new(job.spec.clone().unwrap());
            let (x, report) = solve_from(data, &grid, &cfg.solver, job.start.clone().unwrap())
                .map_err(CliError::from_core)?;
            let error = match &job.source {
                Source::Model(m) => Some(x.distance(&m.true_point().map_err(CliError::from_core)?)),
                Source::Data(_) => None,
            };
            out.json(
                "solution.json",
                &SolutionFile {
                    config: cfg,
                    converged: report.converged,
                    p: &x.p,
                    q: &x.q,
                    error,
                    report: &report,
                },
            )?;
            report.converged
        }
        Command::Verify => {
            let data = job.data.as_ref().unwrap();
            let grid = Grid64::new(job.spec.clone().unwrap());
            let x = job.start.as_ref().unwrap();
            let v = verify(x, data, &grid).map_err(CliError::from_core)?;
            let g = dual_gradient(x, data, &grid).map_err(CliError::from_core)?;
            out.json(
                "verification.json",
                &VerifyFile {
                    config: cfg,
                    p: &x.p,
                    q: &x.q,
                    gradient_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
                    verification: &v,
                },
            )?;
            true
        }
        Command::SweepLambda => {
            let Source::Model(model) = &job.source else { unreachable!() };
            let res = lambda_sweep(
                model,
                job.spec.as_ref().unwrap(),
                cfg.lambdas.as_ref().unwrap(),
                &cfg.solver,
                cfg.section_through.as_deref(),
            )
            .map_err(CliError::from_core)?;
            sweep_outputs(&mut out, cfg, &res)?;
            res.all_converged()
        }
        Command::ConvergeGrid => {
            let Source::Model(model) = &job.source else { unreachable!() };
            let table = grid_convergence(
                model,
                cfg.grid_sizes.as_ref().unwrap(),
                cfg.lambda.unwrap(),
                &cfg.solver,
            )
            .map_err(CliError::from_core)?;
            convergence_outputs(&mut out, cfg, &table)?;
            table.reports.iter().all(|r| r.converged)
        }
        Command::EntropyCurve => {
            log::warn!("{ENTROPY_CAVEAT}");
            let data: &MomentData64 = job.data.as_ref().unwrap();
            let grid = Grid64::new(job.spec.clone().unwrap());
            let curve = entropy_curve(data, &grid, cfg.lambdas.as_ref().unwrap(), &cfg.solver)
                .map_err(CliError::from_core)?;
            entropy_outputs(&mut out, cfg, &curve)?;
            curve.reports.iter().all(|r| r.converged)
        }
    };
    out.write(&job.out_dir)?;
    Ok(converged)
}

fn sweep_outputs(out: &mut Outputs, cfg: &JobConfig, res: &ExperimentResult<f64>) -> Result<(), CliError> {
    let header: Vec<String> = ["lambda", "error", "entropy", "cov_residual", "max_abs_eps", "converged"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = (0..res.lambdas.len())
        .map(|i| {
            vec![
                num(res.lambdas[i]),
                num(res.errors[i]),
                num(res.entropies[i]),
                num(res.cov_residuals[i]),
                num(res.max_eps[i]),
                res.reports[i].converged.to_string(),
            ]
        })
        .collect();
    out.csv("sweep.csv", cfg, &[], &header, &rows)?;

    let mut header: Vec<String> = ["axis", "index", "true"].map(String::from).to_vec();
    header.extend(res.lambdas.iter().map(|l| format!("lambda={l:e}")));
    let mut rows = Vec::new();
    for s in &res.cross_sections {
        for (i, t) in s.truth.iter().enumerate() {
            let mut row = vec![s.axis.to_string(), i.to_string(), num(*t)];
            row.extend(s.reconstructed.iter().map(|line| num(line[i])));
            rows.push(row);
        }
    }
    let through = format!(
        "index is zero-based along `axis`; the other coordinates are fixed at {:?}",
        cfg.section_through.as_deref().unwrap_or_default()
    );
    out.csv("section.csv", cfg, &[&through], &header, &rows)?;
    out.json("sweep.json", &ResultFile { config: cfg, note: None, result: res })
}

fn convergence_outputs(out: &mut Outputs, cfg: &JobConfig, t: &ConvergenceTable<f64>) -> Result<(), CliError> {
    let header: Vec<String> = ["size", "distance_to_next", "converged"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = t
        .sizes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            vec![
                n.to_string(),
                t.distances.get(i).map_or(String::new(), |&d| num(d)),
                t.reports[i].converged.to_string(),
            ]
        })
        .collect();
    out.csv("convergence.csv", cfg, &[], &header, &rows)?;
    out.json("convergence.json", &ResultFile { config: cfg, note: None, result: t })
}

fn entropy_outputs(out: &mut Outputs, cfg: &JobConfig, c: &EntropyCurve<f64>) -> Result<(), CliError> {
    let header: Vec<String> = ["lambda", "entropy", "p_norm", "converged"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = (0..c.lambdas.len())
        .map(|i| {
            vec![
                num(c.lambdas[i]),
                num(c.entropies[i]),
                num(c.p_norms[i]),
                c.reports[i].converged.to_string(),
            ]
        })
        .collect();
    out.csv("entropy.csv", cfg, &[ENTROPY_CAVEAT], &header, &rows)?;
    out.json(
        "entropy.json",
        &ResultFile {
            config: cfg,
            note: Some(ENTROPY_CAVEAT),
            result: c,
        },
    )
}
