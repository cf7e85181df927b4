use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use dispersive_flow::config::{parse_config_with, parse_float_list, ExperimentConfig};
use dispersive_flow::experiment::{self, exit, Outcome};
use dispersive_flow::Error;

#[derive(Parser)]
#[command(name = "dflow", version, about = "Simulate third-order dispersive curve flows into Kähler and almost Hermitian targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write snapshots, diagnostics and a summary.
    Run(Common),
    /// Run one experiment per value of a config key and merge the summaries.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Config key to vary (e.g. `a`, `epsilon`, `n`, `seed`).
        #[arg(long)]
        over: String,
        /// Comma-separated values for the key.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Evaluate the invariant checks on the initial data only.
    Check(Common),
    /// Print the resolved configuration.
    Describe(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML config file.
    config: Option<PathBuf>,
    /// conservation-s2, gauge-s6, epsilon-continuation or fukumoto-miyazaki.
    #[arg(long)]
    preset: Option<String>,
    /// s2, t2-clifford or s6.
    #[arg(long)]
    target: Option<String>,
    /// dispersive, darios or fukumoto-miyazaki.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    n: Option<usize>,
    /// Period length L.
    #[arg(long = "length")]
    length: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Step length, or `auto`.
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    cfl: Option<f64>,
    /// every_step, every_k_steps(k) or none.
    #[arg(long)]
    projection: Option<String>,
    /// Decreasing list such as "1e-2,1e-3,1e-4".
    #[arg(long)]
    epsilon_schedule: Option<String>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// Blowup ceiling as a multiple of the initial H¹ proxy.
    #[arg(long)]
    blowup_ceiling: Option<f64>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Force sequential reductions and worker scheduling.
    #[arg(long)]
    strict: bool,
}

fn scalar(s: &str) -> toml::Value {
    if let Ok(i) = s.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(x) = s.parse::<f64>() {
        toml::Value::Float(x)
    } else if let Ok(b) = s.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(s.to_string())
    }
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, toml::Value)>, Error> {
        use toml::Value::{Float, Integer, String as Str};
        let mut o: Vec<(String, toml::Value)> = Vec::new();
        let mut put = |k: &str, v: toml::Value| o.push((k.to_string(), v));
        if let Some(v) = &self.preset {
            put("preset", Str(v.clone()));
        }
        if let Some(v) = &self.target {
            put("target", Str(v.clone()));
        }
        if let Some(v) = &self.model {
            put("model", Str(v.clone()));
        }
        for (k, v) in [("a", self.a), ("b", self.b), ("epsilon", self.epsilon), ("L", self.length), ("t_end", self.t_end)] {
            if let Some(v) = v {
                put(k, Float(v));
            }
        }
        if let Some(v) = self.cfl {
            put("cfl", Float(v));
        }
        if let Some(v) = self.blowup_ceiling {
            put("blowup_ceiling", Float(v));
        }
        if let Some(v) = self.n {
            put("n", Integer(v as i64));
        }
        if let Some(v) = self.snapshot_stride {
            put("snapshot_stride", Integer(v as i64));
        }
        if let Some(v) = &self.dt {
            put("dt", if v == "auto" { Str(v.clone()) } else { scalar(v) });
        }
        if let Some(v) = &self.projection {
            put("projection", Str(v.clone()));
        }
        if let Some(v) = &self.epsilon_schedule {
            put("epsilon_schedule", toml::Value::Array(parse_float_list(v)?.into_iter().map(Float).collect()));
        }
        if let Some(v) = &self.output {
            put("output_dir", Str(v.display().to_string()));
        }
        Ok(o)
    }

    fn text(&self) -> Result<String, Error> {
        match &self.config {
            Some(path) => Ok(std::fs::read_to_string(path)?),
            None => Ok(String::new()),
        }
    }

    fn resolve(&self, extra: &[(String, toml::Value)]) -> Result<ExperimentConfig, Error> {
        let mut o = self.overrides()?;
        o.extend_from_slice(extra);
        parse_config_with(&self.text()?, &o)
    }
}

fn print_outcome(cfg: &ExperimentConfig, out: &Outcome) {
    let s = &out.summary;
    println!(
        "run {} at t = {} (max constraint {:.2e}, ‖uₓ‖² drift {:.2e})",
        out.termination.name(),
        s.t_final,
        s.max_constraint,
        s.max_drift_l2
    );
    if let Some(gaps) = &out.gaps {
        let g: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
        println!("epsilon-continuation L² gaps: {}", g.join(", "));
    }
    for v in &out.verdicts {
        println!("{v}");
    }
    println!("artifacts in {}", cfg.output_dir.display());
}

fn execute(command: &Command, abort: &AtomicBool) -> Result<i32, Error> {
    match command {
        Command::Describe(common) => {
            print!("{}", common.resolve(&[])?.to_document());
            Ok(exit::COMPLETED)
        }
        Command::Check(common) => {
            let cfg = common.resolve(&[])?;
            let verdicts = experiment::check_initial(&cfg)?;
            for v in &verdicts {
                println!("{v}");
            }
            Ok(if verdicts.iter().all(|v| v.pass) { exit::COMPLETED } else { exit::CHECK_FAILED })
        }
        Command::Run(common) => {
            let cfg = common.resolve(&[])?;
            let out = experiment::run_experiment(&cfg, abort)?;
            print_outcome(&cfg, &out);
            Ok(out.exit_code())
        }
        Command::Sweep { common, over, values } => {
            let base = common.resolve(&[])?.output_dir;
            let mut runs = Vec::new();
            for raw in values.split(',').map(str::trim) {
                let label = format!("{over}={raw}");
                let extra = [
                    (over.clone(), scalar(raw)),
                    ("output_dir".to_string(), toml::Value::String(base.join(&label).display().to_string())),
                ];
                runs.push((label, common.resolve(&extra)?));
            }
            let entries = experiment::run_sweep(&runs, &base.join("sweep.json"), abort)?;
            let mut code = exit::COMPLETED;
            for e in &entries {
                println!("{}: {} at t = {}", e.label, e.termination, e.summary.t_final);
                for v in &e.verdicts {
                    println!("  {v}");
                }
                if code == exit::COMPLETED {
                    code = e.exit_code;
                }
            }
            println!("merged summaries in {}", base.join("sweep.json").display());
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let strict = match &cli.command {
        Command::Run(c) | Command::Check(c) | Command::Describe(c) => c.strict,
        Command::Sweep { common, .. } => common.strict,
    };
    let abort = Arc::new(AtomicBool::new(false));
    {
        let abort = Arc::clone(&abort);
        // A second handler registration fails only in embedded use; ignore it.
        let _ = ctrlc::set_handler(move || abort.store(true, Ordering::Relaxed));
    }
    let result = if strict {
        experiment::sequential(|| execute(&cli.command, &abort))
    } else {
        execute(&cli.command, &abort)
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::CONFIG_OR_IO as u8)
        }
    }
}
