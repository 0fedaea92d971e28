//! Service configuration: a TOML file with `CREDCHAIN_*` environment
//! overrides. Chain parameters are read only when a node is initialised;
//! afterwards they are frozen in the node's `node.json`.

use std::path::{Path, PathBuf};

use credchain_core::chain::{
    DEFAULT_BLOCK_GAS_LIMIT, DEFAULT_BLOCK_REWARD, DEFAULT_DIFFICULTY, DEFAULT_NODE_COUNT,
    DEFAULT_TICK_PER_HASH,
};
use credchain_core::{ChainConfig, SimTime, WeiAmount};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "CREDCHAIN_";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainParams {
    pub difficulty: u32,
    pub block_gas_limit: u64,
    pub node_count: usize,
    pub clock_tick_ms: u64,
    /// Decimal ether, e.g. "2".
    pub block_reward_ether: String,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            difficulty: DEFAULT_DIFFICULTY,
            block_gas_limit: DEFAULT_BLOCK_GAS_LIMIT,
            node_count: DEFAULT_NODE_COUNT,
            clock_tick_ms: DEFAULT_TICK_PER_HASH.as_millis(),
            block_reward_ether: DEFAULT_BLOCK_REWARD.to_ether_string(),
        }
    }
}

impl ChainParams {
    pub fn to_chain_config(&self) -> Result<ChainConfig, ConfigError> {
        let block_reward = WeiAmount::parse_ether(&self.block_reward_ether)
            .ok_or_else(|| ConfigError::Invalid(format!("block_reward_ether `{}`", self.block_reward_ether)))?;
        let config = ChainConfig {
            difficulty: self.difficulty,
            block_gas_limit: self.block_gas_limit,
            node_count: self.node_count,
            genesis_allocations: Default::default(),
            clock_tick_per_hash: SimTime::from_millis(self.clock_tick_ms),
            block_reward,
        };
        config.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub port: u16,
    pub bind: String,
    pub data_dir: PathBuf,
    /// Drives every random choice when set; `None` uses OS entropy.
    pub seed: Option<u64>,
    /// Mining driver period; 0 disables the driver.
    pub mining_interval_ms: u64,
    pub session_ttl_secs: u64,
    pub admin_email: String,
    pub chain: ChainParams,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            port: 8080,
            bind: "127.0.0.1".into(),
            data_dir: PathBuf::from("credchain-data"),
            seed: None,
            mining_interval_ms: 2000,
            session_ttl_secs: 8 * 3600,
            admin_email: "admin@credchain.local".into(),
            chain: ChainParams::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable {name}: invalid value `{value}`")]
    Env { name: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    /// Defaults, then the file (if any), then the environment.
    pub fn load(path: Option<&Path>) -> Result<ServiceConfig, ConfigError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ConfigError::Read { path: path.into(), source })?;
                toml::from_str(&text)
                    .map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?
            }
            None => ServiceConfig::default(),
        };
        config.apply_env(|name| std::env::var(name).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(name: &str, value: String) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::Env { name: name.into(), value })
        }
        let get = |key: &str| {
            let name = format!("{ENV_PREFIX}{key}");
            var(&name).map(|v| (name, v))
        };
        if let Some((n, v)) = get("PORT") {
            self.port = parse(&n, v)?;
        }
        if let Some((_, v)) = get("BIND") {
            self.bind = v;
        }
        if let Some((_, v)) = get("DATA_DIR") {
            self.data_dir = PathBuf::from(v);
        }
        if let Some((n, v)) = get("SEED") {
            self.seed = Some(parse(&n, v)?);
        }
        if let Some((n, v)) = get("MINING_INTERVAL_MS") {
            self.mining_interval_ms = parse(&n, v)?;
        }
        if let Some((n, v)) = get("SESSION_TTL_SECS") {
            self.session_ttl_secs = parse(&n, v)?;
        }
        if let Some((_, v)) = get("ADMIN_EMAIL") {
            self.admin_email = v;
        }
        if let Some((n, v)) = get("DIFFICULTY") {
            self.chain.difficulty = parse(&n, v)?;
        }
        if let Some((n, v)) = get("BLOCK_GAS_LIMIT") {
            self.chain.block_gas_limit = parse(&n, v)?;
        }
        if let Some((n, v)) = get("NODE_COUNT") {
            self.chain.node_count = parse(&n, v)?;
        }
        if let Some((n, v)) = get("CLOCK_TICK_MS") {
            self.chain.clock_tick_ms = parse(&n, v)?;
        }
        Ok(())
    }
}
