//! Actor and learner processes talking over local TCP sockets.
//!
//! The learner accepts any number of actors. Each connection gets a reader
//! thread that feeds a bounded queue (so a slow learner stalls the actors)
//! and a writer thread that pushes every newly published parameter snapshot.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qnet::{Mlp, QNetError};

use super::protocol::{read_frame, write_frame, ActorStats, FrameKind, Hello, ProtocolError, TrajectoryBatch};
use super::{run_actor_episode_with, ActorConfig, Learner, Transition};

#[derive(Debug, Error)]
pub enum DistError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Net(#[from] QNetError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("actor failed: {0}")]
    Actor(String),
}

/// Learner-side run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerConfig {
    /// Stop after this many optimizer steps.
    pub steps: u64,
    pub checkpoint_every: u64,
    pub metrics_every: u64,
    pub publish_every: u64,
    /// Upper bound on sampled transitions per received transition.
    pub replay_ratio: f64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { steps: 10_000, checkpoint_every: 1_000, metrics_every: 50, publish_every: 10, replay_ratio: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLine {
    pub step: u64,
    pub loss: f64,
    pub buffer_size: usize,
    pub episodes: u64,
    pub version: u64,
    pub transitions: u64,
    pub clipped: f64,
    pub elapsed_s: f64,
}

/// One received trajectory frame, as logged for later auditing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub actor: u32,
    pub seq: u64,
    pub transitions: usize,
    /// Distinct parameter versions in the frame, in order of appearance.
    pub versions: Vec<u64>,
}

/// Checks performed on every received frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub actors: usize,
    pub frames: u64,
    pub transitions: u64,
    pub corrupt_frames: u64,
    pub sequence_gaps: u64,
    pub unknown_versions: u64,
    pub non_monotone_versions: u64,
    pub final_version: u64,
    pub steps: u64,
    pub episodes: u64,
}

impl IntegrityReport {
    pub fn clean(&self) -> bool {
        self.corrupt_frames == 0 && self.sequence_gaps == 0 && self.unknown_versions == 0 && self.non_monotone_versions == 0
    }
}

/// Where a run writes its artifacts.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunPaths { root: root.into() }
    }
    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }
    pub fn checkpoint(&self, step: u64) -> PathBuf {
        self.checkpoints().join(format!("step_{step:08}.gdqn"))
    }
    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.jsonl")
    }
    pub fn frames(&self) -> PathBuf {
        self.root.join("frames.jsonl")
    }
    pub fn integrity(&self) -> PathBuf {
        self.root.join("integrity.json")
    }
    pub fn versions(&self) -> PathBuf {
        self.root.join("version_history.json")
    }
}

/// Checkpoint files of a run directory, ordered by step.
pub fn list_checkpoints(dir: &Path) -> std::io::Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let step = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("step_"))
            .and_then(|n| n.strip_suffix(".gdqn"))
            .and_then(|n| n.parse::<u64>().ok());
        if let Some(step) = step {
            out.push((step, path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn save_checkpoint(net: &Mlp<f32>, path: &Path) -> Result<(), DistError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    // Write then rename so readers never see a partial file.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, net.to_bytes())?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Mlp<f32>, DistError> {
    Ok(Mlp::from_bytes(&fs::read(path)?)?)
}

struct ParamSlot {
    version: u64,
    bytes: Arc<Vec<u8>>,
    closed: bool,
}

type Shared = Arc<(Mutex<ParamSlot>, Condvar)>;

enum Inbound {
    Batch(TrajectoryBatch),
    Stats(ActorStats),
    Corrupt,
}

fn serve_connection(stream: TcpStream, inbox: SyncSender<Inbound>, params: Shared) {
    let Ok(write_half) = stream.try_clone() else { return };
    let writer_params = params.clone();
    let writer = thread::spawn(move || {
        let mut out = BufWriter::new(write_half);
        let mut sent = None;
        loop {
            let (version, bytes) = {
                let (lock, cv) = &*writer_params;
                let mut slot = lock.lock().expect("param slot");
                while !slot.closed && sent == Some(slot.version) {
                    slot = cv.wait(slot).expect("param slot");
                }
                if slot.closed {
                    return;
                }
                (slot.version, slot.bytes.clone())
            };
            if write_frame(&mut out, FrameKind::Params, &bytes).is_err() {
                return;
            }
            sent = Some(version);
        }
    });
    let mut input = BufReader::new(stream);
    loop {
        let msg = match read_frame(&mut input) {
            Ok(Some(frame)) => match frame.kind {
                FrameKind::Trajectory => match TrajectoryBatch::decode(&frame.payload) {
                    Ok(b) => Inbound::Batch(b),
                    Err(_) => Inbound::Corrupt,
                },
                FrameKind::Stats => match serde_json::from_slice(&frame.payload) {
                    Ok(s) => Inbound::Stats(s),
                    Err(_) => Inbound::Corrupt,
                },
                FrameKind::Hello => {
                    if serde_json::from_slice::<Hello>(&frame.payload).is_err() {
                        Inbound::Corrupt
                    } else {
                        continue;
                    }
                }
                FrameKind::Params => Inbound::Corrupt,
            },
            Ok(None) => break,
            Err(ProtocolError::Io(_)) => break,
            Err(_) => Inbound::Corrupt,
        };
        if inbox.send(msg).is_err() {
            break;
        }
    }
    drop(writer);
}

/// Audit state for incoming frames.
#[derive(Default)]
struct Auditor {
    next_seq: HashMap<u32, u64>,
    last_version: HashMap<u32, u64>,
    report: IntegrityReport,
}

impl Auditor {
    fn check(&mut self, batch: &TrajectoryBatch, published: &[u64]) -> FrameRecord {
        let expected = self.next_seq.entry(batch.actor_id).or_insert(0);
        if batch.seq != *expected {
            self.report.sequence_gaps += 1;
        }
        *expected = batch.seq + 1;
        let mut versions: Vec<u64> = Vec::new();
        for t in &batch.transitions {
            if published.binary_search(&t.param_version).is_err() {
                self.report.unknown_versions += 1;
            }
            let last = self.last_version.entry(batch.actor_id).or_insert(0);
            if t.param_version < *last {
                self.report.non_monotone_versions += 1;
            }
            *last = t.param_version;
            if versions.last() != Some(&t.param_version) {
                versions.push(t.param_version);
            }
        }
        self.report.frames += 1;
        self.report.transitions += batch.transitions.len() as u64;
        self.report.actors = self.next_seq.len();
        FrameRecord { actor: batch.actor_id, seq: batch.seq, transitions: batch.transitions.len(), versions }
    }
}

/// Handle to a learner accepting actors on a local socket.
pub struct LearnerServer {
    listener: TcpListener,
}

impl LearnerServer {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self, DistError> {
        Ok(LearnerServer { listener: TcpListener::bind(addr)? })
    }

    pub fn local_addr(&self) -> std::net::SocketAddr {
        self.listener.local_addr().expect("bound listener")
    }

    /// Train until `config.steps` or until `stop` is raised, then write the
    /// final checkpoint, the integrity report and the version history.
    pub fn run(
        self,
        mut learner: Learner<f32>,
        config: &ServerConfig,
        paths: &RunPaths,
        stop: Arc<AtomicBool>,
    ) -> Result<IntegrityReport, DistError> {
        fs::create_dir_all(paths.checkpoints())?;
        let mut metrics = BufWriter::new(File::create(paths.metrics())?);
        let mut frames = BufWriter::new(File::create(paths.frames())?);
        let params: Shared = Arc::new((
            Mutex::new(ParamSlot { version: learner.net.version, bytes: Arc::new(learner.net.to_bytes()), closed: false }),
            Condvar::new(),
        ));
        let mut published = vec![learner.net.version];
        let (tx, rx): (SyncSender<Inbound>, Receiver<Inbound>) = mpsc::sync_channel(256);

        let listener = self.listener.try_clone()?;
        let accept_params = params.clone();
        let streams: Arc<Mutex<Vec<TcpStream>>> = Arc::default();
        let accept_streams = streams.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let _ = stream.set_nodelay(true);
                if let Ok(s) = stream.try_clone() {
                    accept_streams.lock().expect("streams").push(s);
                }
                let (tx, p) = (tx.clone(), accept_params.clone());
                thread::spawn(move || serve_connection(stream, tx, p));
            }
        });

        // The untrained starting point anchors the checkpoint series.
        save_checkpoint(&learner.net, &paths.checkpoint(learner.steps()))?;
        let started = Instant::now();
        let mut audit = Auditor::default();
        let mut episodes: BTreeMap<u32, u64> = BTreeMap::new();
        let (mut loss_sum, mut clip_sum, mut loss_n) = (0.0, 0.0, 0u64);
        let mut last_checkpoint = Some(learner.steps());
        while learner.steps() < config.steps && !stop.load(Ordering::SeqCst) {
            // Ingest whatever has arrived; block briefly when there is no work.
            let can_train = learner.ready()
                && (learner.steps() + 1) as f64 * learner.config.batch_size as f64 <= config.replay_ratio * audit.report.transitions as f64;
            let first = if can_train {
                rx.try_recv().ok()
            } else {
                match rx.recv_timeout(Duration::from_millis(50)) {
                    Ok(m) => Some(m),
                    Err(RecvTimeoutError::Timeout) => None,
                    Err(RecvTimeoutError::Disconnected) => break,
                }
            };
            for msg in first.into_iter().chain(std::iter::from_fn(|| rx.try_recv().ok())) {
                match msg {
                    Inbound::Batch(b) => {
                        let rec = audit.check(&b, &published);
                        serde_json::to_writer(&mut frames, &rec)?;
                        frames.write_all(b"\n")?;
                        for t in b.transitions {
                            learner.push(t);
                        }
                    }
                    Inbound::Stats(s) => {
                        episodes.insert(s.actor_id, s.episodes);
                    }
                    Inbound::Corrupt => audit.report.corrupt_frames += 1,
                }
            }
            if !can_train {
                continue;
            }
            let r = learner.step().expect("ready");
            loss_sum += r.loss;
            clip_sum += r.clipped;
            loss_n += 1;
            let step = r.step;
            if step.is_multiple_of(config.publish_every.max(1)) {
                publish(&params, &learner.net);
                published.push(learner.net.version);
            }
            if step.is_multiple_of(config.metrics_every.max(1)) || step == config.steps {
                let line = MetricsLine {
                    step,
                    loss: loss_sum / loss_n as f64,
                    buffer_size: learner.buffer.len(),
                    episodes: episodes.values().sum(),
                    version: learner.net.version,
                    transitions: audit.report.transitions,
                    clipped: clip_sum / loss_n as f64,
                    elapsed_s: started.elapsed().as_secs_f64(),
                };
                serde_json::to_writer(&mut metrics, &line)?;
                metrics.write_all(b"\n")?;
                metrics.flush()?;
                frames.flush()?;
                log::info!("step {step} loss {:.4} buffer {} version {}", line.loss, line.buffer_size, line.version);
                (loss_sum, clip_sum, loss_n) = (0.0, 0.0, 0);
            }
            if step.is_multiple_of(config.checkpoint_every.max(1)) {
                save_checkpoint(&learner.net, &paths.checkpoint(step))?;
                last_checkpoint = Some(step);
            }
        }

        if last_checkpoint != Some(learner.steps()) {
            save_checkpoint(&learner.net, &paths.checkpoint(learner.steps()))?;
        }
        {
            let (lock, cv) = &*params;
            lock.lock().expect("param slot").closed = true;
            cv.notify_all();
        }
        for s in streams.lock().expect("streams").iter() {
            let _ = s.shutdown(Shutdown::Both);
        }
        // Frames already queued still count towards the audit.
        while let Ok(msg) = rx.try_recv() {
            match msg {
                Inbound::Batch(b) => {
                    let rec = audit.check(&b, &published);
                    serde_json::to_writer(&mut frames, &rec)?;
                    frames.write_all(b"\n")?;
                }
                Inbound::Stats(s) => {
                    episodes.insert(s.actor_id, s.episodes);
                }
                Inbound::Corrupt => audit.report.corrupt_frames += 1,
            }
        }
        frames.flush()?;
        metrics.flush()?;
        let mut report = audit.report;
        report.final_version = learner.net.version;
        report.steps = learner.steps();
        report.episodes = episodes.values().sum();
        fs::write(paths.integrity(), serde_json::to_vec_pretty(&report)?)?;
        fs::write(paths.versions(), serde_json::to_vec(learner.version_history())?)?;
        Ok(report)
    }
}

fn publish(params: &Shared, net: &Mlp<f32>) {
    let (lock, cv) = &**params;
    let mut slot = lock.lock().expect("param slot");
    slot.version = net.version;
    slot.bytes = Arc::new(net.to_bytes());
    cv.notify_all();
}

#[derive(Default)]
struct Latest {
    net: Option<Mlp<f32>>,
    closed: bool,
}

/// Run one actor against the learner at `addr` until the learner goes away
/// or `max_episodes` is reached. Returns the episodes played.
pub fn run_actor(addr: &str, actor_id: u32, config: &ActorConfig, max_episodes: Option<u64>) -> Result<ActorStats, DistError> {
    let stream = TcpStream::connect(addr)?;
    stream.set_nodelay(true)?;
    let mut out = BufWriter::new(stream.try_clone()?);
    let hello = Hello { actor_id, pid: std::process::id() };
    write_frame(&mut out, FrameKind::Hello, &serde_json::to_vec(&hello)?)?;

    let latest: Arc<(Mutex<Latest>, Condvar)> = Arc::default();
    let reader_slot = latest.clone();
    let reader_stream = stream.try_clone()?;
    thread::spawn(move || {
        let mut input = BufReader::new(reader_stream);
        let (lock, cv) = &*reader_slot;
        while let Ok(Some(frame)) = read_frame(&mut input) {
            if frame.kind != FrameKind::Params {
                continue;
            }
            match Mlp::<f32>::from_bytes(&frame.payload) {
                Ok(net) => {
                    let mut slot = lock.lock().expect("latest params");
                    if slot.net.as_ref().is_none_or(|old| net.version > old.version) {
                        slot.net = Some(net);
                    }
                    cv.notify_all();
                }
                Err(e) => log::warn!("actor {actor_id}: bad parameter frame: {e}"),
            }
        }
        lock.lock().expect("latest params").closed = true;
        cv.notify_all();
    });

    let mut net = {
        let (lock, cv) = &*latest;
        let mut slot = lock.lock().expect("latest params");
        while slot.net.is_none() && !slot.closed {
            slot = cv.wait(slot).expect("latest params");
        }
        slot.net.take().ok_or_else(|| DistError::Actor("learner closed before sending parameters".into()))?
    };

    let mut stats = ActorStats { actor_id, episodes: 0, transitions: 0, versions_used: vec![net.version] };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((actor_id as u64) << 40));
    let mut seq = 0u64;
    loop {
        if max_episodes.is_some_and(|m| stats.episodes >= m) {
            break;
        }
        if stats.episodes > 0 && stats.episodes.is_multiple_of(config.sync_period as u64) {
            let (lock, _) = &*latest;
            if let Some(newer) = lock.lock().expect("latest params").net.take() {
                if newer.version > net.version && newer.input_dim() == net.input_dim() {
                    net = newer;
                    stats.versions_used.push(net.version);
                }
            }
        }
        let seed = config.seed.wrapping_mul(1_000_003) ^ ((actor_id as u64) << 32) ^ stats.episodes;
        let mut send_err = None;
        let played = run_actor_episode_with(seed, &net, config.epsilon, &mut rng, |_, batch| {
            if send_err.is_some() {
                return;
            }
            let transitions: Vec<Transition> = batch.into_iter().flatten().collect();
            let n = transitions.len() as u64;
            let frame = TrajectoryBatch { actor_id, seq, transitions };
            match write_frame(&mut out, FrameKind::Trajectory, &frame.encode()) {
                Ok(()) => {
                    seq += 1;
                    stats.transitions += n;
                }
                Err(e) => send_err = Some(e),
            }
        });
        if let Err(e) = played {
            return Err(DistError::Actor(e.to_string()));
        }
        if send_err.is_some() {
            break;
        }
        stats.episodes += 1;
        if write_frame(&mut out, FrameKind::Stats, &serde_json::to_vec(&stats)?).is_err() {
            break;
        }
    }
    let _ = stream.shutdown(Shutdown::Both);
    Ok(stats)
}
