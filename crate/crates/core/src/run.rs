//! Drivers behind the command line: single solves, refinement studies and
//! method comparisons on the registered benchmarks, with their JSON/CSV
//! outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{control_error, ConvergenceStudy, Norm, StudyRow};
use crate::benchmarks::{self, Benchmark};
use crate::collocation::{ringing_score, solve_collocation, CollocationScheme, SchemeKind};
use crate::error::{Error, Result};
use crate::fem::{FESpace, Trajectory};
use crate::mesh::Mesh;
use crate::solver::{solve_fem, SolveReport, SolveStatus, SolverConfig};
use crate::transcription::PenaltyBarrierParams;

/// Environment variable that overrides the output directory.
pub const OUTPUT_DIR_ENV: &str = "PBF_OUTPUT_DIR";

/// Exit codes of the command line driver.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Samples used for ringing scores.
pub const RINGING_SAMPLES: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pbf,
    Tr,
    Hs,
    Lgr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pbf, Method::Tr, Method::Hs, Method::Lgr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pbf => "pbf",
            Method::Tr => "tr",
            Method::Hs => "hs",
            Method::Lgr => "lgr",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}' (expected pbf, tr, hs or lgr)")))
    }
}

/// Everything needed for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub method: Method,
    pub n_elements: usize,
    /// Polynomial degree (PBF) or number of Radau points (LGR).
    pub p: usize,
    pub omega: f64,
    pub tau: f64,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    /// Seed for randomized checks; solves themselves are deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "vanderpol".into(),
            method: Method::Pbf,
            n_elements: 100,
            p: 5,
            omega: 1e-10,
            tau: 1e-10,
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("pbf-output"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Solver settings with the targets taken from `omega` and `tau`.
    pub fn solver_config(&self) -> SolverConfig {
        let mut s = self.solver.clone();
        s.omega_target = self.omega;
        s.tau_target = self.tau;
        s.continuation_start = s.continuation_start.max(self.omega);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !benchmarks::NAMES.contains(&self.problem.as_str()) {
            return Err(Error::UnknownProblem { name: self.problem.clone(), registered: benchmarks::NAMES.join(", ") });
        }
        if self.n_elements == 0 {
            return Err(Error::Config("n_elements must be positive".into()));
        }
        if self.p == 0 || self.p > 30 {
            return Err(Error::Config(format!("p = {} must lie in 1..=30", self.p)));
        }
        PenaltyBarrierParams::new(self.omega, self.tau).map_err(|e| Error::Config(e.to_string()))?;
        self.solver_config().validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// `PBF_OUTPUT_DIR` if set, otherwise `output_dir`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output_dir.clone(),
        }
    }
}

/// Exit code for an error: configuration problems give 2, everything else 1.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::Config(_) | Error::UnknownProblem { .. } | Error::Dimension { .. } | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_NOT_CONVERGED,
    }
}

/// Solves a benchmark with the given method on a uniform mesh.
pub fn solve_benchmark(bench: &Benchmark, method: Method, n_elements: usize, p: usize, solver: &SolverConfig) -> Result<SolveReport> {
    let problem = &bench.problem;
    let mesh = Mesh::uniform(problem.t0, problem.t_end, n_elements)?;
    let mut report = match method {
        Method::Pbf => {
            let space = FESpace::new(mesh, p, problem.n_y, problem.n_z, false)?;
            solve_fem(problem, &space, solver)?
        }
        Method::Tr => solve_collocation(problem, &mesh, CollocationScheme::new(SchemeKind::Tr, p)?, solver)?.report,
        Method::Hs => solve_collocation(problem, &mesh, CollocationScheme::new(SchemeKind::Hs, p)?, solver)?.report,
        Method::Lgr => solve_collocation(problem, &mesh, CollocationScheme::new(SchemeKind::Lgr, p)?, solver)?.report,
    };
    if let Some(r) = &bench.reference_objective {
        report = report.with_reference(r.value);
    }
    Ok(report)
}

/// `L²` control error of a solution on the benchmark's error interval.
pub fn benchmark_control_error(bench: &Benchmark, trajectory: &Trajectory, interval: (f64, f64)) -> Result<Option<f64>> {
    match &bench.reference {
        Some(r) => control_error(trajectory, bench.control, |t| r.control(t), interval, Norm::L2, &r.breakpoints).map(Some),
        None => Ok(None),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub omega: f64,
    pub tau: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub merit: f64,
    pub grad_inf: f64,
    pub min_z: Option<f64>,
}

/// Contents of a solve report file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub method: Method,
    pub n_elements: usize,
    pub p: usize,
    pub omega: f64,
    pub tau: f64,
    pub status: SolveStatus,
    pub converged: bool,
    #[serde(rename = "F_h")]
    pub f_h: f64,
    pub r_feas: f64,
    pub g_opt: Option<f64>,
    #[serde(rename = "F_ref")]
    pub f_ref: Option<f64>,
    pub error_interval: (f64, f64),
    pub err_l2: Option<f64>,
    pub ringing_interval: (f64, f64),
    pub ringing_score: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub stages: Vec<StageSummary>,
}

impl RunSummary {
    pub fn new(bench: &Benchmark, method: Method, n_elements: usize, p: usize, report: &SolveReport) -> Result<Self> {
        let err_l2 = benchmark_control_error(bench, &report.trajectory, bench.error_interval)?;
        let ringing = ringing_score(&report.trajectory, bench.control, bench.ringing_interval, RINGING_SAMPLES)?;
        let last = report.stages.last();
        Ok(Self {
            problem: bench.name.to_string(),
            method,
            n_elements,
            p,
            omega: last.map_or(f64::NAN, |s| s.omega),
            tau: last.map_or(f64::NAN, |s| s.tau),
            status: report.status,
            converged: report.status.is_converged(),
            f_h: report.objective,
            r_feas: report.r_feas,
            g_opt: report.g_opt,
            f_ref: bench.reference_objective.as_ref().map(|r| r.value),
            error_interval: bench.error_interval,
            err_l2,
            ringing_interval: bench.ringing_interval,
            ringing_score: ringing,
            iterations: report.iterations(),
            wall_time_s: report.wall_time_s,
            stages: report
                .stages
                .iter()
                .map(|s| StageSummary {
                    omega: s.omega,
                    tau: s.tau,
                    iterations: s.iterations,
                    status: s.status,
                    merit: s.merit,
                    grad_inf: s.grad_inf,
                    min_z: s.min_z.is_finite().then_some(s.min_z),
                })
                .collect(),
        })
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::from)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes `t, y…, z…, u` at `per_element` uniform samples per element
/// (midpoints of equal sub-intervals).
pub fn write_samples_csv<W: Write>(w: W, trajectory: &Trajectory, control: fn(&[f64], &[f64]) -> f64, per_element: usize) -> Result<()> {
    let space = trajectory.space();
    let (n_y, n_z) = (space.n_y, space.n_z);
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n_y).map(|k| format!("y{k}")));
    header.extend((1..=n_z).map(|k| format!("z{k}")));
    header.push("u".into());
    wr.write_record(&header)?;
    let mut vals = trajectory.scratch();
    for (i, (a, b)) in space.mesh().intervals().enumerate() {
        for k in 0..per_element {
            let t = a + (b - a) * (k as f64 + 0.5) / per_element as f64;
            trajectory.evaluate_in(i, t, &mut vals);
            let mut rec = vec![t.to_string()];
            rec.extend(vals.y.iter().chain(&vals.z).map(|v| v.to_string()));
            rec.push(control(&vals.y, &vals.z).to_string());
            wr.write_record(&rec)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Paths written by [`cmd_solve`].
#[derive(Clone, Debug)]
pub struct SolveOutputs {
    pub trajectory: PathBuf,
    pub report: PathBuf,
    pub samples: PathBuf,
    pub summary: RunSummary,
}

/// Solves one problem and writes `<problem>_<method>_{trajectory.json,report.json,samples.csv}`.
pub fn cmd_solve(config: &RunConfig) -> Result<SolveOutputs> {
    config.validate()?;
    let bench = benchmarks::build(&config.problem)?;
    let report = solve_benchmark(&bench, config.method, config.n_elements, config.p, &config.solver_config())?;
    let summary = RunSummary::new(&bench, config.method, config.n_elements, config.p, &report)?;
    let dir = config.resolved_output_dir();
    create_dir(&dir)?;
    let stem = format!("{}_{}", config.problem, config.method);
    let out = SolveOutputs {
        trajectory: dir.join(format!("{stem}_trajectory.json")),
        report: dir.join(format!("{stem}_report.json")),
        samples: dir.join(format!("{stem}_samples.csv")),
        summary,
    };
    write_json(&out.trajectory, &report.trajectory)?;
    write_json(&out.report, &out.summary)?;
    let per_element = 10 * report.trajectory.space().p.max(1);
    write_samples_csv(BufWriter::new(File::create(&out.samples)?), &report.trajectory, bench.control, per_element)?;
    Ok(out)
}

/// Status of one study row, kept next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRowStatus {
    pub n_elements: usize,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
}

/// Paths and data written by [`cmd_study`].
#[derive(Clone, Debug)]
pub struct StudyOutputs {
    pub csv: PathBuf,
    pub plot: PathBuf,
    pub status: PathBuf,
    pub study: ConvergenceStudy,
    pub statuses: Vec<StudyRowStatus>,
}

impl StudyOutputs {
    pub fn all_converged(&self) -> bool {
        self.statuses.iter().all(|s| s.status.is_some_and(|s| s.is_converged()))
    }
}

/// Runs one study row; failures become a row of NaNs plus an error message.
pub fn study_row(bench: &Benchmark, config: &RunConfig, n: usize) -> (StudyRow, StudyRowStatus) {
    let solver = config.solver_config();
    let h = (bench.problem.t_end - bench.problem.t0) / n as f64;
    let mut row = StudyRow {
        h,
        n_elements: n,
        p: config.p,
        omega: config.omega,
        tau: config.tau,
        f_h: f64::NAN,
        r_feas: f64::NAN,
        g_opt: None,
        err_l2: None,
        iters: 0,
        wall_time_s: 0.0,
    };
    let outcome = solve_benchmark(bench, config.method, n, config.p, &solver).and_then(|r| {
        let e = benchmark_control_error(bench, &r.trajectory, bench.error_interval)?;
        Ok((r, e))
    });
    match outcome {
        Ok((r, e)) => {
            row.f_h = r.objective;
            row.r_feas = r.r_feas;
            row.g_opt = r.g_opt;
            row.err_l2 = e;
            row.iters = r.iterations();
            row.wall_time_s = r.wall_time_s;
            (row, StudyRowStatus { n_elements: n, status: Some(r.status), error: None })
        }
        Err(e) => (row, StudyRowStatus { n_elements: n, status: None, error: Some(e.to_string()) }),
    }
}

/// Writes `(h, value)` series as blank-line separated blocks, each headed
/// by a `# name` comment.
pub fn write_plot_data<W: Write>(mut w: W, study: &ConvergenceStudy) -> Result<()> {
    let series: [(&str, fn(&StudyRow) -> Option<f64>); 3] =
        [("r_feas", |r| Some(r.r_feas)), ("g_opt", |r| r.g_opt), ("err_l2", |r| r.err_l2)];
    for (k, (name, col)) in series.iter().enumerate() {
        if k > 0 {
            writeln!(w, "\n")?;
        }
        writeln!(w, "# h {name}")?;
        for (h, v) in study.series(col) {
            writeln!(w, "{h:e} {v:e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mesh refinement study over `element_counts`; writes
/// `<problem>_<method>_study.csv`, `_study_plot.dat` and `_study_status.json`.
pub fn cmd_study(config: &RunConfig, element_counts: &[usize]) -> Result<StudyOutputs> {
    config.validate()?;
    if element_counts.len() < 2 {
        return Err(Error::Config("a study needs at least two element counts".into()));
    }
    if element_counts.contains(&0) {
        return Err(Error::Config("element counts must be positive".into()));
    }
    let bench = benchmarks::build(&config.problem)?;
    let (rows, statuses): (Vec<_>, Vec<_>) = element_counts.iter().map(|&n| study_row(&bench, config, n)).unzip();
    let study = ConvergenceStudy::new(rows);
    let mut statuses = statuses;
    statuses.sort_by_key(|s| s.n_elements);
    let dir = config.resolved_output_dir();
    create_dir(&dir)?;
    let stem = format!("{}_{}_study", config.problem, config.method);
    let out = StudyOutputs {
        csv: dir.join(format!("{stem}.csv")),
        plot: dir.join(format!("{stem}_plot.dat")),
        status: dir.join(format!("{stem}_status.json")),
        study,
        statuses,
    };
    out.study.write_csv(BufWriter::new(File::create(&out.csv)?))?;
    write_plot_data(BufWriter::new(File::create(&out.plot)?), &out.study)?;
    write_json(&out.status, &out.statuses)?;
    Ok(out)
}

/// Contents of a comparison report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub problem: String,
    pub n_elements: usize,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug)]
pub struct CompareOutputs {
    pub csv: PathBuf,
    pub report: PathBuf,
    pub summary: CompareSummary,
}

impl CompareOutputs {
    pub fn all_converged(&self) -> bool {
        self.summary.runs.iter().all(|r| r.converged)
    }
}

/// Solves with each method and writes `<problem>_compare.csv` (t, one control
/// column per method, reference) and `<problem>_compare_report.json`.
pub fn cmd_compare(config: &RunConfig, methods: &[Method], n_samples: usize) -> Result<CompareOutputs> {
    config.validate()?;
    if methods.len() < 2 {
        return Err(Error::Config("compare needs at least two methods".into()));
    }
    if n_samples < 5 {
        return Err(Error::Config("compare needs at least five samples".into()));
    }
    let bench = benchmarks::build(&config.problem)?;
    let solver = config.solver_config();
    let mut runs = Vec::new();
    let mut trajectories = Vec::new();
    for &m in methods {
        let report = solve_benchmark(&bench, m, config.n_elements, config.p, &solver)?;
        runs.push(RunSummary::new(&bench, m, config.n_elements, config.p, &report)?);
        trajectories.push(report.trajectory);
    }
    let dir = config.resolved_output_dir();
    create_dir(&dir)?;
    let out = CompareOutputs {
        csv: dir.join(format!("{}_compare.csv", config.problem)),
        report: dir.join(format!("{}_compare_report.json", config.problem)),
        summary: CompareSummary { problem: config.problem.clone(), n_elements: config.n_elements, runs },
    };
    let mut wr = csv::Writer::from_writer(BufWriter::new(File::create(&out.csv)?));
    let mut header = vec!["t".to_string()];
    header.extend(methods.iter().map(|m| m.to_string()));
    header.push("reference".into());
    wr.write_record(&header)?;
    let (t0, te) = (bench.problem.t0, bench.problem.t_end);
    for k in 0..n_samples {
        let t = t0 + (te - t0) * (k as f64 + 0.5) / n_samples as f64;
        let mut rec = vec![t.to_string()];
        for tr in &trajectories {
            let v = tr.evaluate(t, 0)?;
            let n_y = tr.space().n_y;
            rec.push((bench.control)(&v[..n_y], &v[n_y..]).to_string());
        }
        rec.push(bench.reference.as_ref().map_or(f64::NAN, |r| r.control(t)).to_string());
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    write_json(&out.report, &out.summary)?;
    Ok(out)
}

/// One line per registered benchmark: name, dimensions and description.
pub fn list_problems() -> Result<Vec<String>> {
    benchmarks::NAMES
        .iter()
        .map(|n| {
            let b = benchmarks::build(n)?;
            let p = &b.problem;
            Ok(format!(
                "{:<11} n_y={} n_z={} n_c={} n_b={} horizon=({}, {})  {}",
                n, p.n_y, p.n_z, p.n_c, p.n_b, p.t0, p.t_end, b.description
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_validation() {
        let c = RunConfig::from_json(r#"{"problem": "regulator", "method": "lgr", "p": 4}"#).unwrap();
        assert_eq!((c.method, c.p, c.n_elements), (Method::Lgr, 4, 100));
        assert!(c.validate().is_ok());
        assert!(RunConfig::from_json(r#"{"problem": "regulator", "colour": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"p": -1}"#).is_err());
        let bad = RunConfig { p: 0, ..Default::default() };
        assert_eq!(exit_code_for(&bad.validate().unwrap_err()), EXIT_CONFIG);
        let bad = RunConfig { problem: "nope".into(), ..Default::default() };
        assert_eq!(exit_code_for(&bad.validate().unwrap_err()), EXIT_CONFIG);
        let bad = RunConfig { tau: 1e-3, omega: 1e-4, ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!("hs".parse::<Method>().unwrap(), Method::Hs);
        assert!("rk4".parse::<Method>().is_err());
    }

    #[test]
    fn list_has_every_benchmark() {
        let l = list_problems().unwrap();
        assert_eq!(l.len(), benchmarks::NAMES.len());
        assert!(l[0].starts_with("vanderpol"));
    }
}
