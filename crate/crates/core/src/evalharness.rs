//! Team-versus-team matches between policies and checkpoint evaluation.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::{rank_at_sequence_position, Card, CardMultiset, Rank, Suit};
use crate::engine::{promotion_steps, EpisodeState, Event, Observation, PlayerId};
use crate::features::{encode_action, encode_state_compact, ACTION_DIM};
use crate::qnet::Mlp;
use crate::rules::{beats, CardGroup};
use crate::training::dist::{list_checkpoints, load_checkpoint};

/// A decision rule. Implementations must return a member of `legal`; the
/// harness treats anything else as a fault.
pub trait Policy: Send + Sync {
    fn name(&self) -> String;
    fn act(&self, obs: &Observation, legal: &[CardGroup], rng: &mut dyn RngCore) -> CardGroup;
}

/// Uniform over the legal actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }
    fn act(&self, _obs: &Observation, legal: &[CardGroup], rng: &mut dyn RngCore) -> CardGroup {
        legal[rng.gen_range(0..legal.len())]
    }
}

/// Arg-max of the Q network, ties to the first action.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub net: Arc<Mlp<f32>>,
    pub label: String,
}

impl GreedyPolicy {
    pub fn new(net: Mlp<f32>, label: impl Into<String>) -> Self {
        GreedyPolicy { net: Arc::new(net), label: label.into() }
    }
}

impl Policy for GreedyPolicy {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn act(&self, obs: &Observation, legal: &[CardGroup], _rng: &mut dyn RngCore) -> CardGroup {
        let Ok(state) = encode_state_compact(obs) else { return legal[0] };
        let s: Vec<f32> = state.iter().map(|&v| v as f32).collect();
        let actions: Vec<[i8; ACTION_DIM]> = legal.iter().map(encode_action).collect();
        match self.net.evaluate_actions(&s, &actions) {
            Ok(q) => {
                let mut best = 0;
                for (i, v) in q.iter().enumerate() {
                    if *v > q[best] {
                        best = i;
                    }
                }
                legal[best]
            }
            Err(_) => legal[0],
        }
    }
}

/// Opponents holding this many cards or fewer justify spending a bomb.
pub const BOMB_THRESHOLD: u8 = 10;

/// Rule-of-thumb player: lead small cards that break no bombs, follow with the
/// cheapest cover of the same type, bomb only when an opponent is close to
/// going out, and never overtake the partner.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicPolicy;

/// Natural bombs, the joker bomb and natural straight flushes in a hand.
fn structures(hand: &CardMultiset) -> u32 {
    let mut n = Rank::ALL.iter().filter(|r| !r.is_joker() && hand.rank_count(**r) >= 4).count() as u32;
    if hand.count(Card::BLACK_JOKER) == 2 && hand.count(Card::RED_JOKER) == 2 {
        n += 1;
    }
    for suit in Suit::ALL {
        for start in 1..=10u8 {
            if (start..start + 5).all(|p| hand.count(Card::plain(rank_at_sequence_position(p), suit)) > 0) {
                n += 1;
            }
        }
    }
    n
}

fn broken(hand: &CardMultiset, g: &CardGroup) -> u32 {
    let after = hand.checked_sub(g.cards()).unwrap_or_default();
    structures(hand).saturating_sub(structures(&after))
}

fn bomb_order(a: &CardGroup, b: &CardGroup) -> Ordering {
    if beats(a, b, crate::cards::Level::TWO) {
        Ordering::Greater
    } else if beats(b, a, crate::cards::Level::TWO) {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl HeuristicPolicy {
    fn cheapest<'a>(hand: &CardMultiset, groups: impl Iterator<Item = &'a CardGroup>) -> Option<CardGroup> {
        groups.min_by_key(|g| (broken(hand, g), g.wilds_used(), g.key(), std::cmp::Reverse(g.cards().len()))).copied()
    }
}

impl Policy for HeuristicPolicy {
    fn name(&self) -> String {
        "heuristic".into()
    }

    fn act(&self, obs: &Observation, legal: &[CardGroup], _rng: &mut dyn RngCore) -> CardGroup {
        let hand = &obs.hand;
        let Some((to_beat, owner)) = obs.to_beat else {
            let plain = legal.iter().filter(|g| !g.is_pass() && !g.kind().is_bomb_class());
            if let Some(g) = Self::cheapest(hand, plain) {
                return g;
            }
            return legal.iter().filter(|g| !g.is_pass()).copied().min_by(bomb_order).unwrap_or(legal[0]);
        };
        if owner == obs.viewer.partner() {
            return CardGroup::PASS;
        }
        let same = legal.iter().filter(|g| !g.is_pass() && !g.kind().is_bomb_class() && g.kind() == to_beat.kind());
        if let Some(g) = Self::cheapest(hand, same) {
            return g;
        }
        let danger = PlayerId::ALL
            .iter()
            .filter(|p| p.team() != obs.viewer.team() && obs.hand_sizes[p.index()] > 0)
            .any(|p| obs.hand_sizes[p.index()] <= BOMB_THRESHOLD);
        if danger {
            if let Some(b) = legal.iter().filter(|g| g.kind().is_bomb_class()).copied().min_by(bomb_order) {
                return b;
            }
        }
        CardGroup::PASS
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("at least one game is required")]
    NoGames,
    #[error("no checkpoints found in {0}")]
    NoCheckpoints(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Aggregated match outcome. Side A is the first policy of `run_match`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinStats {
    pub games: u64,
    pub wins_a: u64,
    pub wins_b: u64,
    pub faults_a: u64,
    pub faults_b: u64,
    /// Rounds won with a promotion of 1, 2 and 3 levels.
    pub promotions_a: [u64; 3],
    pub promotions_b: [u64; 3],
    pub rounds: u64,
    pub base_seed: u64,
    pub mirrored: bool,
}

impl WinStats {
    pub fn winrate_a(&self) -> f64 {
        if self.games == 0 {
            f64::NAN
        } else {
            self.wins_a as f64 / self.games as f64
        }
    }

    pub fn faults(&self) -> u64 {
        self.faults_a + self.faults_b
    }

    /// Combine two disjoint sets of games.
    pub fn merge(mut self, other: &WinStats) -> WinStats {
        self.games += other.games;
        self.wins_a += other.wins_a;
        self.wins_b += other.wins_b;
        self.faults_a += other.faults_a;
        self.faults_b += other.faults_b;
        for i in 0..3 {
            self.promotions_a[i] += other.promotions_a[i];
            self.promotions_b[i] += other.promotions_b[i];
        }
        self.rounds += other.rounds;
        self
    }
}

impl fmt::Display for WinStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} games, A won {} ({:.3}), faults {}", self.games, self.wins_a, self.winrate_a(), self.faults())
    }
}

/// Play one episode with side A on team `a_team` (0: seats 0 and 2).
pub fn play_game(a: &dyn Policy, b: &dyn Policy, seed: u64, a_team: usize) -> WinStats {
    let mut state = EpisodeState::new_episode(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ a_team as u64);
    let mut out = WinStats { games: 1, ..Default::default() };
    let winner = loop {
        if let Some(w) = state.winner {
            break w;
        }
        let player = state.current_player();
        let obs = state.observe(player);
        let legal = obs.legal_actions();
        let side_a = player.team() == a_team;
        let policy = if side_a { a } else { b };
        let action = policy.act(&obs, &legal, &mut rng);
        let events = if legal.contains(&action) { state.step(&action).ok() } else { None };
        let Some(events) = events else {
            // Forfeit: the faulting side loses the episode.
            if side_a {
                out.faults_a += 1;
            } else {
                out.faults_b += 1;
            }
            break 1 - player.team();
        };
        for e in events {
            if let Event::RoundOver { order, promotion, .. } = e {
                out.rounds += 1;
                let steps = promotion_steps(&order) as usize;
                let hist = if promotion.team == a_team { &mut out.promotions_a } else { &mut out.promotions_b };
                hist[steps - 1] += 1;
            }
        }
    };
    if winner == a_team {
        out.wins_a = 1;
    } else {
        out.wins_b = 1;
    }
    out
}

/// `n_games` episodes with seeds `base_seed + i`, A on seats 0 and 2. With
/// `mirror` every seed is replayed with the seats swapped, doubling the games.
pub fn run_match(a: &dyn Policy, b: &dyn Policy, n_games: u64, base_seed: u64, mirror: bool) -> Result<WinStats, EvalError> {
    if n_games == 0 {
        return Err(EvalError::NoGames);
    }
    let sides: &[usize] = if mirror { &[0, 1] } else { &[0] };
    let jobs: Vec<(u64, usize)> = (0..n_games).flat_map(|i| sides.iter().map(move |&t| (base_seed.wrapping_add(i), t))).collect();
    let total = jobs.par_iter().map(|&(seed, team)| play_game(a, b, seed, team)).reduce(WinStats::default, |x, y| x.merge(&y));
    Ok(WinStats { base_seed, mirrored: mirror, ..total })
}

/// One CSV row of a checkpoint series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub checkpoint: String,
    pub games: u64,
    pub wins_a: u64,
    /// Empty for a checkpoint that could not be read.
    pub winrate_a: Option<f64>,
    pub faults: u64,
}

impl CheckpointRow {
    pub fn from_stats(name: impl Into<String>, s: &WinStats) -> Self {
        CheckpointRow { checkpoint: name.into(), games: s.games, wins_a: s.wins_a, winrate_a: Some(s.winrate_a()), faults: s.faults() }
    }
}

/// Evaluate every checkpoint in `dir` against `opponent`, in step order.
/// Unreadable checkpoints produce a row with no games and no win rate.
pub fn evaluate_checkpoints(
    dir: &Path,
    opponent: &dyn Policy,
    n_games: u64,
    base_seed: u64,
    mirror: bool,
) -> Result<Vec<(u64, CheckpointRow)>, EvalError> {
    let found = list_checkpoints(dir)?;
    if found.is_empty() {
        return Err(EvalError::NoCheckpoints(dir.display().to_string()));
    }
    let mut rows = Vec::with_capacity(found.len());
    for (step, path) in found {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let row = match load_checkpoint(&path) {
            Ok(net) => {
                let policy = GreedyPolicy::new(net, name.clone());
                let stats = run_match(&policy, opponent, n_games, base_seed, mirror)?;
                CheckpointRow::from_stats(name, &stats)
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                CheckpointRow { checkpoint: name, games: 0, wins_a: 0, winrate_a: None, faults: 0 }
            }
        };
        rows.push((step, row));
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(out: W, rows: &[CheckpointRow]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::Level;
    use crate::engine::PartnerMove;
    use crate::rules::legal_actions;

    fn obs_with(hand: &str, to_beat: Option<(&str, PlayerId)>, level: Level) -> Observation {
        let mut state = EpisodeState::new_episode(1);
        state.round.level = level;
        let mut obs = state.observe(PlayerId::new(0));
        obs.hand = hand.parse().unwrap();
        obs.round_level = level;
        obs.to_beat = to_beat.map(|(g, p)| (CardGroup::parse(g, level).unwrap(), p));
        obs.partner_move = PartnerMove::None;
        obs
    }

    fn heuristic(obs: &Observation) -> CardGroup {
        let legal = legal_actions(&obs.hand, obs.to_beat_group(), obs.round_level);
        let g = HeuristicPolicy.act(obs, &legal, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(legal.contains(&g));
        g
    }

    #[test]
    fn heuristic_leads_small_instead_of_bombing() {
        let obs = obs_with("S3 S7 H7 D7 C7", None, Level::TWO);
        assert_eq!(heuristic(&obs).to_text(), "SINGLE[3]: S3");
    }

    #[test]
    fn heuristic_covers_pair_with_pair() {
        let obs = obs_with("S9 H9 S5 H5 D5 C5", Some(("PAIR[4]: S4 H4", PlayerId::new(1))), Level::TWO);
        let g = heuristic(&obs);
        assert_eq!(g.kind(), crate::rules::GroupType::Pair);
        assert_eq!(g.rank(), Rank::Nine);
    }

    #[test]
    fn heuristic_passes_without_cover() {
        let obs = obs_with("S3 S4", Some(("PAIR[K]: SK HK", PlayerId::new(1))), Level::TWO);
        assert!(heuristic(&obs).is_pass());
        // Not overtaking the partner even with a cover.
        let obs = obs_with("SA HA", Some(("PAIR[K]: SK HK", PlayerId::new(2))), Level::TWO);
        assert!(heuristic(&obs).is_pass());
    }

    #[test]
    fn heuristic_bombs_only_under_pressure() {
        let mut obs = obs_with("S5 H5 D5 C5 S3", Some(("PAIR[K]: SK HK", PlayerId::new(1))), Level::TWO);
        obs.hand_sizes = [5, 20, 20, 20];
        assert!(heuristic(&obs).is_pass());
        obs.hand_sizes = [5, 3, 20, 20];
        assert!(heuristic(&obs).kind().is_bomb_class());
    }

    #[test]
    fn match_is_reproducible_and_consistent() {
        let a = run_match(&RandomPolicy, &HeuristicPolicy, 6, 100, true).unwrap();
        let b = run_match(&RandomPolicy, &HeuristicPolicy, 6, 100, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.games, 12);
        assert_eq!(a.wins_a + a.wins_b, a.games);
        assert_eq!(a.faults(), 0);
        assert!(run_match(&RandomPolicy, &RandomPolicy, 0, 0, false).is_err());
    }

    #[test]
    fn mirrored_identical_greedy_policies_split_evenly() {
        // The same deterministic policy on both sides: each mirrored pair is
        // the same game with the labels swapped.
        let net = Mlp::<f32>::q_network(&[8], &mut ChaCha8Rng::seed_from_u64(4));
        let p = GreedyPolicy::new(net, "g");
        let s = run_match(&p, &p, 5, 7, true).unwrap();
        assert_eq!(s.wins_a, 5);
        assert_eq!(s.wins_b, 5);
    }

    struct Cheater;
    impl Policy for Cheater {
        fn name(&self) -> String {
            "cheater".into()
        }
        fn act(&self, _: &Observation, _: &[CardGroup], _: &mut dyn RngCore) -> CardGroup {
            CardGroup::parse("SINGLE[RJ]: RJ", Level::TWO).unwrap()
        }
    }

    #[test]
    fn illegal_action_forfeits() {
        let s = run_match(&Cheater, &RandomPolicy, 3, 0, false).unwrap();
        assert_eq!(s.wins_b, 3);
        assert!(s.faults_a >= 1);
        assert_eq!(s.faults_b, 0);
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 2.0]);
        assert!(r > 0.0 && r < 1.0);
    }

    #[test]
    fn checkpoint_series_rows() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(evaluate_checkpoints(dir.path(), &RandomPolicy, 1, 0, false), Err(EvalError::NoCheckpoints(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for step in [10, 20] {
            let net = Mlp::<f32>::q_network(&[8], &mut rng);
            crate::training::dist::save_checkpoint(&net, &dir.path().join(format!("step_{step:08}.gdqn"))).unwrap();
        }
        std::fs::write(dir.path().join("step_00000030.gdqn"), b"garbage").unwrap();
        let rows = evaluate_checkpoints(dir.path(), &RandomPolicy, 2, 0, false).unwrap();
        assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![10, 20, 30]);
        assert_eq!(rows[2].1.games, 0);
        assert_eq!(rows[2].1.winrate_a, None);
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows.into_iter().map(|r| r.1).collect::<Vec<_>>()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("checkpoint,games,wins_a,winrate_a,faults\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
