use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lhrm::pipeline::{self, Artifacts, ModelKind, RunConfig};

#[derive(Parser)]
#[command(name = "lhrm", version, about = "Cold-start recommendation from cross-domain behavior and location traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or ingest) the dataset into the output directory.
    GenData(Common),
    /// Train skip-gram embeddings and pool source-domain user vectors.
    Pretrain(Common),
    /// Cluster warm users.
    Cluster(Common),
    /// Build user and item groups.
    BuildGroups(Common),
    /// Train one scorer per configured latent dim.
    Train(Common),
    /// Write recommendation lists for the test users.
    Recommend(WithModels),
    /// Score recommendation lists and write the reports.
    Eval(WithModels),
    /// Every stage in order.
    RunAll(Common),
}

#[derive(Args)]
struct Common {
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for every artifact.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cutoffs for evaluation, e.g. `--k 30,50`.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
}

#[derive(Args)]
struct WithModels {
    #[command(flatten)]
    common: Common,
    /// Models to run; all of them when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    model: Vec<ModelArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lhrm,
    Hot,
    Maxcov,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Lhrm => ModelKind::Lhrm,
            ModelArg::Hot => ModelKind::Hot,
            ModelArg::Maxcov => ModelKind::MaxCov,
        }
    }
}

fn resolve(c: &Common) -> lhrm::Result<(RunConfig, Artifacts)> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            // later stages reuse the config written by gen-data
            let saved = Artifacts::new(&c.out).config();
            if saved.exists() {
                RunConfig::load(&saved)?
            } else {
                RunConfig::default()
            }
        }
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if !c.k.is_empty() {
        cfg.eval_ks = c.k.clone();
    }
    cfg.validate()?;
    Ok((cfg, Artifacts::new(&c.out)))
}

fn run(cli: Cli) -> lhrm::Result<()> {
    let models = |m: &[ModelArg]| m.iter().copied().map(ModelKind::from).collect::<Vec<_>>();
    match cli.command {
        Command::GenData(c) => {
            let (cfg, a) = resolve(&c)?;
            pipeline::gen_data(&cfg, &a)
        }
        Command::Pretrain(c) => {
            let (cfg, a) = resolve(&c)?;
            pipeline::pretrain(&cfg, &a)
        }
        Command::Cluster(c) => {
            let (cfg, a) = resolve(&c)?;
            pipeline::cluster(&cfg, &a)
        }
        Command::BuildGroups(c) => {
            let (cfg, a) = resolve(&c)?;
            pipeline::build_groups(&cfg, &a)
        }
        Command::Train(c) => {
            let (cfg, a) = resolve(&c)?;
            pipeline::train_models(&cfg, &a)
        }
        Command::Recommend(w) => {
            let (cfg, a) = resolve(&w.common)?;
            pipeline::recommend(&cfg, &a, &models(&w.model))
        }
        Command::Eval(w) => {
            let (cfg, a) = resolve(&w.common)?;
            let report = pipeline::evaluate(&cfg, &a, &models(&w.model))?;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::RunAll(c) => {
            let (cfg, a) = resolve(&c)?;
            let report = pipeline::run_end_to_end(&cfg, &a.dir)?;
            print!("{}", report.to_table());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Info).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
