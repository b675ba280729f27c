use std::path::{Path, PathBuf};

use anyhow::Context as _;
use autotrain_cli::{commands, line, server};
use autotrain_core::eval::{EvalConfig, ScenarioSuite, SuiteConfig, TableFormat};
use autotrain_core::nets::{AssociatorConfig, Backend};
use autotrain_core::session::{Engine, SessionConfig, SessionOverrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "autotrain", version, about = "Autogenic-training dialogue engine")]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a pronunciation lexicon and print it in canonical form.
    BuildLexicon {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an n-gram phoneme model.
    TrainLm {
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
        /// Treat corpus lines as text and convert them through this lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        corpus: PathBuf,
    },
    /// Drop n-gram entries below a probability threshold.
    PruneLm {
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        model: PathBuf,
    },
    /// Train one associative backend on a suite's case base.
    TrainNet {
        #[arg(long)]
        backend: Backend,
        #[arg(long)]
        out: Option<PathBuf>,
        suite: PathBuf,
    },
    /// Per-backend precision table for a scenario suite.
    Eval {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value = "table")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic scenario suite.
    GenSuite {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interactive line mode: one utterance per line in, one JSON object out.
    Session {
        #[arg(long, env = "AUTOTRAIN_CONFIG")]
        config: PathBuf,
        #[arg(long)]
        backend: Option<Backend>,
    },
    /// HTTP/JSON session service.
    Serve {
        #[arg(long, env = "AUTOTRAIN_CONFIG")]
        config: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

fn load_suite(path: &Path) -> anyhow::Result<ScenarioSuite> {
    ScenarioSuite::from_json(&commands::read(path)?).with_context(|| format!("invalid suite {}", path.display()))
}

fn load_engine(path: &Path) -> anyhow::Result<Engine> {
    let config = SessionConfig::load(path)?;
    Ok(Engine::start(config)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::BuildLexicon { file, out } => {
            let (lexicon, text) = commands::build_lexicon(&commands::read(&file)?)?;
            tracing::info!(words = lexicon.len(), pronunciations = lexicon.pronunciation_count(), "lexicon ok");
            commands::emit(out.as_deref(), &text)
        }
        Command::TrainLm {
            order,
            smoothing,
            lexicon,
            out,
            corpus,
        } => {
            let lex = match &lexicon {
                Some(p) => Some(commands::build_lexicon(&commands::read(p)?)?.0),
                None => None,
            };
            let model = commands::train_lm(&commands::read(&corpus)?, lex.as_ref(), order, smoothing)?;
            tracing::info!(entries = model.entry_count(), "model trained");
            commands::emit(out.as_deref(), &model.to_json())
        }
        Command::PruneLm { threshold, out, model } => {
            let pruned = commands::prune_lm(&commands::read(&model)?, threshold)?;
            tracing::info!(entries = pruned.entry_count(), "model pruned");
            commands::emit(out.as_deref(), &pruned.to_json())
        }
        Command::TrainNet { backend, out, suite } => {
            let suite = load_suite(&suite)?;
            let config = AssociatorConfig {
                rng_seed: cli.seed.unwrap_or(0),
                ..AssociatorConfig::default()
            };
            commands::emit(out.as_deref(), &commands::train_net(&suite, backend, config)?)
        }
        Command::Eval { suite, format, out } => {
            let suite = load_suite(&suite)?;
            let mut config = EvalConfig::default();
            if let Some(seed) = cli.seed {
                config.assoc.rng_seed = seed;
                config.infer.rng_seed = seed;
            }
            commands::emit(out.as_deref(), &commands::eval(&suite, &config, format)?)
        }
        Command::GenSuite { out } => {
            let mut config = SuiteConfig::default();
            if let Some(seed) = cli.seed {
                config.rng_seed = seed;
                config.noise.rng_seed = seed;
            }
            commands::emit(out.as_deref(), &commands::gen_suite(&config)?)
        }
        Command::Session { config, backend } => {
            let engine = load_engine(&config)?;
            let overrides = SessionOverrides {
                seed: cli.seed,
                backend,
                ..SessionOverrides::default()
            };
            let mut state = engine.open_session(&overrides)?;
            tracing::info!(session = %state.session_id, "session opened");
            let stdin = std::io::stdin();
            line::run(&engine, &mut state, stdin.lock(), std::io::stdout().lock())?;
            Ok(())
        }
        Command::Serve { config, bind } => {
            let engine = load_engine(&config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(server::serve(server::AppState::new(engine), &bind))
        }
    }
}

fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
