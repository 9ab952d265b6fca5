use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pbf::run::{self, Method, RunConfig, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK};

#[derive(Parser)]
#[command(name = "pbf", version, about = "Penalty-barrier finite element solver for dynamic optimization benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one benchmark and write trajectory, report and samples.
    Solve(Common),
    /// Mesh refinement study over several element counts.
    Study {
        #[command(flatten)]
        common: Common,
        /// Element counts, e.g. 10,20,40,80.
        #[arg(long = "element-counts", value_delimiter = ',', required = true)]
        element_counts: Vec<usize>,
    },
    /// Solve with several methods and write their controls side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        /// At least two of pbf, tr, hs, lgr.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// List the registered benchmarks.
    ListProblems,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct Common {
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// pbf, tr, hs or lgr.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    elements: Option<usize>,
    /// Polynomial degree (pbf) or number of Radau points (lgr).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Overridden by PBF_OUTPUT_DIR.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> pbf::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json(&std::fs::read_to_string(path).map_err(|e| pbf::Error::Config(format!("{}: {e}", path.display())))?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.problem {
            c.problem = v.clone();
        }
        if let Some(v) = &self.method {
            c.method = v.parse()?;
        }
        if let Some(v) = self.elements {
            c.n_elements = v;
        }
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.omega {
            c.omega = v;
        }
        if let Some(v) = self.tau {
            c.tau = v;
        }
        if let Some(v) = self.max_iters {
            c.solver.max_iters = v;
        }
        if let Some(v) = &self.output_dir {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn status_code(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn execute(command: Command) -> pbf::Result<i32> {
    match command {
        Command::Solve(common) => {
            let c = common.resolve()?;
            let out = run::cmd_solve(&c)?;
            let s = &out.summary;
            println!("status: {:?}", s.status);
            println!("F_h = {:.10}  r_feas = {:.3e}  iterations = {}", s.f_h, s.r_feas, s.iterations);
            if let Some(g) = s.g_opt {
                println!("g_opt = {g:.3e}");
            }
            if let Some(e) = s.err_l2 {
                println!("control error on [{}, {}] = {e:.3e}", s.error_interval.0, s.error_interval.1);
            }
            println!("report: {}", out.report.display());
            Ok(status_code(s.converged))
        }
        Command::Study { common, element_counts } => {
            let c = common.resolve()?;
            let out = run::cmd_study(&c, &element_counts)?;
            for (row, st) in out.study.rows.iter().zip(&out.statuses) {
                println!("n = {:4}  r_feas = {:.3e}  F_h = {:.10}  {:?}", row.n_elements, row.r_feas, row.f_h, st.status);
            }
            println!("study: {}", out.csv.display());
            Ok(status_code(out.all_converged()))
        }
        Command::Compare { common, methods, samples } => {
            let c = common.resolve()?;
            let methods = methods.iter().map(|m| m.parse()).collect::<pbf::Result<Vec<Method>>>()?;
            let out = run::cmd_compare(&c, &methods, samples)?;
            for r in &out.summary.runs {
                let err = r.err_l2.map_or("-".to_string(), |e| format!("{e:.3e}"));
                println!("{:>4}: {:?}  F_h = {:.10}  r_feas = {:.3e}  error = {err}  ringing = {:.3}", r.method, r.status, r.f_h, r.r_feas, r.ringing_score);
            }
            println!("samples: {}", out.csv.display());
            Ok(status_code(out.all_converged()))
        }
        Command::ListProblems => {
            for line in run::list_problems()? {
                println!("{line}");
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            run::exit_code_for(&e)
        }
    };
    debug_assert!(code == EXIT_OK || code == EXIT_NOT_CONVERGED || code == EXIT_CONFIG);
    ExitCode::from(code as u8)
}
