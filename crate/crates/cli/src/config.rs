use std::fs;
use std::path::{Path, PathBuf};

use guandan::training::dist::ServerConfig;
use guandan::training::{ActorConfig, LearnerConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a training run needs, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Where checkpoints, metrics and the audit logs are written.
    pub out_dir: PathBuf,
    /// Learner port on 127.0.0.1; 0 picks a free one.
    pub port: u16,
    /// Checkpoint to start from instead of fresh weights.
    pub init: Option<PathBuf>,
    pub actor: ActorConfig,
    pub learner: LearnerConfig,
    pub server: ServerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("runs/default"),
            port: 0,
            init: None,
            actor: ActorConfig::default(),
            learner: LearnerConfig::default(),
            server: ServerConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Apply one seed to every component.
    pub fn set_seed(&mut self, seed: u64) {
        self.actor.seed = seed;
        self.learner.seed = seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.actor.validate().map_err(|e| CliError::Config(format!("actor: {e}")))?;
        self.learner.validate().map_err(|e| CliError::Config(format!("learner: {e}")))?;
        let s = &self.server;
        if s.steps == 0 || s.checkpoint_every == 0 || s.metrics_every == 0 || s.publish_every == 0 {
            return Err(CliError::Config("server: steps and intervals must be at least 1".into()));
        }
        if !(s.replay_ratio > 0.0 && s.replay_ratio.is_finite()) {
            return Err(CliError::Config(format!("server: replay_ratio must be positive, got {}", s.replay_ratio)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.learner.hidden = vec![256, 128];
        c.learner.lambda = 0.35;
        c.actor.actors = 3;
        c.init = Some("a/b.gdqn".into());
        c.set_seed(42);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn partial_files_take_defaults() {
        let c = RunConfig::from_toml("[learner]\nlambda = 0.1\n").unwrap();
        assert_eq!(c.learner.lambda, 0.1);
        assert_eq!(c.learner.batch_size, 512);
        assert_eq!(c.actor, ActorConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
        assert!(RunConfig::from_toml("[learner]\nlamda = 0.1\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let c = RunConfig::from_toml("[learner]\nlambda = 0.0\n").unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let c = RunConfig::from_toml("[server]\nreplay_ratio = -1.0\n").unwrap();
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
