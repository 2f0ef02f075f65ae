use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use guandan::training::{ActorConfig, Optimizer};
use guandan_cli::commands::{self, EvalArgs};
use guandan_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "guandan", version, about = "Train, evaluate and play GuanDan agents")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a learner and actor processes.
    Train(TrainArgs),
    /// Play two policies against each other, or a checkpoint directory against one policy.
    Eval {
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "random")]
        b: String,
        #[arg(long, default_value_t = 1000)]
        games: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replay every deal with the seats swapped.
        #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true")]
        mirror: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Self-play episodes without learning and write JSONL logs.
    Simulate {
        #[arg(long, default_value_t = 100)]
        games: u64,
        #[arg(long, default_value = "random")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "logs")]
        out: PathBuf,
    },
    /// Serve live games over WebSocket.
    Serve {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    #[command(hide = true)]
    Actor {
        #[arg(long)]
        connect: String,
        #[arg(long)]
        id: u32,
        #[arg(long)]
        config_json: String,
        #[arg(long)]
        episodes: Option<u64>,
    },
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    actors: Option<u32>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long)]
    init: Option<PathBuf>,
    /// Overwrite an existing run directory.
    #[arg(long)]
    force: bool,
}

impl TrainArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.set_seed(v);
        }
        if let Some(v) = self.actors {
            c.actor.actors = v;
        }
        if let Some(v) = self.steps {
            c.server.steps = v;
        }
        if let Some(v) = &self.out {
            c.out_dir = v.clone();
        }
        if let Some(v) = self.port {
            c.port = v;
        }
        if let Some(v) = self.lambda {
            c.learner.lambda = v;
        }
        if let Some(v) = self.lr {
            c.learner.learning_rate = v;
        }
        if let Some(v) = &self.optimizer {
            c.learner.optimizer = match v.as_str() {
                "sgd" => Optimizer::Sgd,
                "adam" => Optimizer::Adam,
                other => return Err(CliError::Config(format!("unknown optimizer {other}"))),
            };
        }
        if let Some(v) = self.epsilon {
            c.actor.epsilon = v;
        }
        if let Some(v) = self.batch_size {
            c.learner.batch_size = v;
        }
        if let Some(v) = &self.hidden {
            c.learner.hidden = v.clone();
        }
        if let Some(v) = self.checkpoint_every {
            c.server.checkpoint_every = v;
        }
        if let Some(v) = &self.init {
            c.init = Some(v.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Train(args) => {
            let config = args.resolve()?;
            let stop = Arc::new(AtomicBool::new(false));
            commands::watch_interrupt(stop.clone());
            let report = commands::train(&config, args.force, stop)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
        Cmd::Eval { a, b, games, seed, mirror, out } => {
            commands::eval(&EvalArgs { a: &a, b: &b, games, seed, mirror, out: out.as_deref() })?;
            Ok(())
        }
        Cmd::Simulate { games, policy, seed, out } => {
            let written = commands::simulate(&policy, games, seed, &out)?;
            println!("wrote {} episode logs to {}", written.len(), out.display());
            Ok(())
        }
        Cmd::Serve { checkpoint, port, host } => commands::serve(checkpoint.as_deref(), &host, port),
        Cmd::Actor { connect, id, config_json, episodes } => {
            let config: ActorConfig = serde_json::from_str(&config_json).map_err(|e| CliError::Config(e.to_string()))?;
            commands::actor(&connect, id, &config, episodes)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
