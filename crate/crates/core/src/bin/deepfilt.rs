// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deepfilt::harness::{
    emit_figure_data, run_experiment, run_table_suite, ExperimentConfig, Profile, Seeds, SuiteId,
};
use deepfilt::kv::KvMap;
use deepfilt::models::{generate_ensemble, write_ensemble_dir, ModelKind, ModelSpec};
use deepfilt::{Error, Exec, Result};

#[derive(Parser)]
#[command(
    name = "deepfilt",
    version,
    about = "Deep filter experiments with KF/EKF baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config or one of the table suites.
    Run(RunArgs),
    /// Simulate an ensemble of paths into a directory.
    Simulate(SimulateArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Key-value config file (`section.key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Table suite: T1, T3..T12 or `all`.
    #[arg(long)]
    table: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially, 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Base seed; train/test/init/shuffle seeds become s..s+3.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sample paths to write as figure data.
    #[arg(long, default_value_t = 0)]
    figures: usize,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, default_value = "linear")]
    model: String,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, default_value_t = 10)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

struct Overrides {
    profile: Profile,
    file: Option<KvMap>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        self.profile.apply(cfg);
        if let Some(kv) = &self.file {
            cfg.apply_kv(kv)?;
        }
        if let Some(s) = self.seed {
            cfg.seeds = Seeds::from_base(s);
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(())
    }
}

fn slug(title: &str) -> String {
    let s: String = title
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    let s = s.trim_matches('_').to_string();
    if s.is_empty() {
        "experiment".into()
    } else {
        s
    }
}

fn run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(KvMap::parse(&text, p)?)
        }
        None => None,
    };
    let overrides = Overrides {
        profile: args.profile.parse()?,
        file,
        seed: args.seed,
        out: args.out.clone(),
    };
    let suites: Vec<SuiteId> = match args.table.as_deref() {
        None => Vec::new(),
        Some(t) if t.eq_ignore_ascii_case("all") => SuiteId::ALL.to_vec(),
        Some(t) => vec![t.parse()?],
    };
    if suites.is_empty() && args.config.is_none() {
        return Err(Error::validation("give --config, --table or both"));
    }

    Exec::with_workers(args.workers, |exec| -> Result<()> {
        if suites.is_empty() {
            let mut cfg = ExperimentConfig::linear_default();
            overrides.apply(&mut cfg)?;
            let exp = run_experiment(exec, &cfg)?;
            let name = slug(&cfg.title);
            exp.table.write(&cfg.output_dir, &name)?;
            print!("{}", exp.table.to_csv());
            report(&cfg.output_dir, &name);
            if args.figures > 0 {
                let cell = &exp.cells[0];
                emit(exec, &cell.config, Some(&cell.filter), args.figures)?;
            }
            return Ok(());
        }
        for id in suites {
            let run = run_table_suite(exec, id, |c| overrides.apply(c))?;
            let mut cfg = deepfilt::harness::suite_config(id);
            overrides.apply(&mut cfg)?;
            run.table.write(&cfg.output_dir, id.name())?;
            println!("# {id}");
            print!("{}", run.table.to_csv());
            report(&cfg.output_dir, id.name());
            if args.figures > 0 && id != SuiteId::T1 {
                let cell = &run.experiments[0].cells[0];
                emit(exec, &cell.config, Some(&cell.filter), args.figures)?;
            }
        }
        Ok(())
    })
}

fn emit(
    exec: Exec,
    cfg: &ExperimentConfig,
    filter: Option<&deepfilt::deepfilter::TrainedFilter>,
    n: usize,
) -> Result<()> {
    for f in emit_figure_data(exec, cfg, filter, n, &cfg.output_dir)? {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn report(dir: &Path, name: &str) {
    eprintln!("wrote {}", dir.join(format!("{name}.csv")).display());
    eprintln!("wrote {}", dir.join(format!("{name}.meta")).display());
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let kind: ModelKind = args.model.parse()?;
    let spec = ModelSpec::default_for(kind, args.sigma0.unwrap_or(default_sigma0(kind)));
    let paths = generate_ensemble(&spec, args.paths, args.seed)?;
    write_ensemble_dir(&args.out, &spec, args.seed, &paths)?;
    eprintln!("wrote {} paths to {}", args.paths, args.out.display());
    Ok(())
}

fn default_sigma0(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::SwitchingSin => deepfilt::models::SWITCHING_SIGMA0,
        _ => deepfilt::models::DEFAULT_SIGMA0,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
