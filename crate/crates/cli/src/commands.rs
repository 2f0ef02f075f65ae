use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use guandan::engine::{EpisodeState, LogRecorder};
use guandan::evalharness::{
    evaluate_checkpoints, run_match, write_csv, CheckpointRow, GreedyPolicy, HeuristicPolicy, Policy, RandomPolicy,
};
use guandan::training::dist::{load_checkpoint, run_actor, IntegrityReport, LearnerServer, RunPaths};
use guandan::training::{ActorConfig, Learner};
use guandan::{CardMultiset, QNet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{CliError, RunConfig};

/// `random`, `heuristic`, or the path of a checkpoint file.
pub fn load_policy(name: &str) -> Result<Box<dyn Policy>, CliError> {
    match name {
        "random" => Ok(Box::new(RandomPolicy)),
        "heuristic" => Ok(Box::new(HeuristicPolicy)),
        path => {
            let net = load_checkpoint(Path::new(path)).map_err(|e| CliError::Config(format!("policy {path}: {e}")))?;
            Ok(Box::new(GreedyPolicy::new(net, path)))
        }
    }
}

fn spawn_actor(exe: &Path, addr: &str, id: u32, config: &ActorConfig) -> Result<Child, CliError> {
    let json = serde_json::to_string(config).expect("actor config serializes");
    Command::new(exe)
        .args(["actor", "--connect", addr, "--id", &id.to_string(), "--config-json", &json])
        .stdin(Stdio::null())
        .spawn()
        .map_err(|e| CliError::Runtime(format!("spawning actor {id}: {e}")))
}

/// Raise `stop` on ctrl-c.
pub fn watch_interrupt(stop: Arc<AtomicBool>) {
    thread::spawn(move || {
        let Ok(rt) = tokio::runtime::Builder::new_current_thread().enable_all().build() else { return };
        if rt.block_on(tokio::signal::ctrl_c()).is_ok() {
            log::warn!("interrupt received, writing a final checkpoint");
            stop.store(true, Ordering::SeqCst);
        }
    });
}

/// Run a learner with `config.actor.actors` actor processes until the step
/// budget is spent or `stop` is raised.
pub fn train(config: &RunConfig, force: bool, stop: Arc<AtomicBool>) -> Result<IntegrityReport, CliError> {
    config.validate()?;
    let paths = RunPaths::new(&config.out_dir);
    if paths.metrics().exists() && !force {
        return Err(CliError::Config(format!("{} already holds a run; pass --force to overwrite", config.out_dir.display())));
    }
    if force && paths.checkpoints().exists() {
        // Stale checkpoints would otherwise mix into the new series.
        fs::remove_dir_all(paths.checkpoints()).map_err(|e| CliError::Runtime(format!("{}: {e}", paths.checkpoints().display())))?;
    }
    fs::create_dir_all(&config.out_dir).map_err(|e| CliError::Runtime(format!("{}: {e}", config.out_dir.display())))?;
    fs::write(config.out_dir.join("config.toml"), config.to_toml()).map_err(CliError::runtime)?;

    let net = match &config.init {
        Some(path) => {
            let net = load_checkpoint(path).map_err(|e| CliError::Config(format!("init {}: {e}", path.display())))?;
            if net.sizes() != QNet::layout_for(&config.learner.hidden) {
                return Err(CliError::Config(format!("init {} does not match hidden {:?}", path.display(), config.learner.hidden)));
            }
            net
        }
        None => QNet::q_network(&config.learner.hidden, &mut ChaCha8Rng::seed_from_u64(config.learner.seed)),
    };
    log::info!("network {:?}, {} parameters", net.sizes(), net.num_params());
    let learner = Learner::new(config.learner.clone(), net);
    let server = LearnerServer::bind(("127.0.0.1", config.port))
        .map_err(|e| CliError::Runtime(format!("binding 127.0.0.1:{}: {e}", config.port)))?;
    let addr = server.local_addr().to_string();
    log::info!("learner listening on {addr}");

    let exe = std::env::current_exe().map_err(CliError::runtime)?;
    let mut children = Vec::new();
    for id in 0..config.actor.actors {
        children.push(spawn_actor(&exe, &addr, id, &config.actor)?);
    }
    let result = server.run(learner, &config.server, &paths, stop);
    let deadline = Instant::now() + Duration::from_secs(20);
    for mut child in children {
        while child.try_wait().ok().flatten().is_none() && Instant::now() < deadline {
            thread::sleep(Duration::from_millis(50));
        }
        if child.try_wait().ok().flatten().is_none() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
    let report = result.map_err(CliError::runtime)?;
    if !report.clean() {
        log::warn!("integrity problems: {report:?}");
    }
    Ok(report)
}

pub fn actor(connect: &str, id: u32, config: &ActorConfig, episodes: Option<u64>) -> Result<(), CliError> {
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let stats = run_actor(connect, id, config, episodes).map_err(CliError::runtime)?;
    log::info!("actor {id} done: {} episodes, {} transitions", stats.episodes, stats.transitions);
    Ok(())
}

pub struct EvalArgs<'a> {
    pub a: &'a str,
    pub b: &'a str,
    pub games: u64,
    pub seed: u64,
    pub mirror: bool,
    pub out: Option<&'a Path>,
}

/// A checkpoint directory as `a` evaluates the whole series.
pub fn eval(args: &EvalArgs<'_>) -> Result<Vec<CheckpointRow>, CliError> {
    if args.games == 0 {
        return Err(CliError::Config("--games must be at least 1".into()));
    }
    let b = load_policy(args.b)?;
    let a_path = Path::new(args.a);
    let rows = if a_path.is_dir() {
        evaluate_checkpoints(a_path, b.as_ref(), args.games, args.seed, args.mirror)
            .map_err(|e| CliError::Config(e.to_string()))?
            .into_iter()
            .map(|(_, r)| r)
            .collect()
    } else {
        let a = load_policy(args.a)?;
        let stats = run_match(a.as_ref(), b.as_ref(), args.games, args.seed, args.mirror).map_err(CliError::runtime)?;
        log::info!("{} vs {}: {stats}", a.name(), b.name());
        vec![CheckpointRow::from_stats(args.a, &stats)]
    };
    match args.out {
        Some(path) => write_csv(File::create(path).map_err(CliError::runtime)?, &rows),
        None => write_csv(std::io::stdout().lock(), &rows),
    }
    .map_err(CliError::runtime)?;
    Ok(rows)
}

fn conserved(state: &EpisodeState) -> bool {
    let r = &state.round;
    let total = r.hands.iter().chain(r.played.iter()).try_fold(CardMultiset::new(), |acc, m| acc.checked_add(m));
    total == Some(CardMultiset::full_deck())
}

/// Play one episode with `policy` in every seat, checking card conservation
/// after each step, and return its log.
pub fn simulate_episode(policy: &dyn Policy, seed: u64) -> Result<LogRecorder, CliError> {
    let mut state = EpisodeState::new_episode(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = LogRecorder::new();
    while !state.is_terminal() {
        let obs = state.observe(state.current_player());
        let legal = obs.legal_actions();
        let action = policy.act(&obs, &legal, &mut rng);
        log.step(&mut state, &action).map_err(|e| CliError::Runtime(format!("episode {seed}: {e}")))?;
        if !conserved(&state) {
            return Err(CliError::Runtime(format!("episode {seed}: card conservation violated at step {}", log.entries().len())));
        }
    }
    Ok(log)
}

/// Write `games` episode logs named by seed into `out`.
pub fn simulate(policy: &str, games: u64, seed: u64, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let policy = load_policy(policy)?;
    fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    (0..games)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            let log = simulate_episode(policy.as_ref(), s)?;
            let path = out.join(format!("episode_{s:020}.jsonl"));
            let mut w = BufWriter::new(File::create(&path).map_err(CliError::runtime)?);
            log.write_jsonl(&mut w).map_err(CliError::runtime)?;
            w.flush().map_err(CliError::runtime)?;
            Ok(path)
        })
        .collect()
}

/// Serve live sessions; bot seats use the checkpoint when given.
pub fn serve(checkpoint: Option<&Path>, host: &str, port: u16) -> Result<(), CliError> {
    let bot: Option<Arc<dyn Policy>> = match checkpoint {
        Some(path) => {
            let net = load_checkpoint(path).map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))?;
            Some(Arc::new(GreedyPolicy::new(net, path.display().to_string())))
        }
        None => None,
    };
    let addr: std::net::SocketAddr =
        format!("{host}:{port}").parse().map_err(|e| CliError::Config(format!("address {host}:{port}: {e}")))?;
    let rt = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
    let app = guandan_server::AppState::new(bot, guandan_server::DEFAULT_BOT_BUDGET);
    rt.block_on(guandan_server::serve(addr, app)).map_err(|e| CliError::Runtime(format!("serving on {addr}: {e}")))
}
