use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::Address;
use crate::units::{Gas, SimTime, WeiAmount};

pub const DEFAULT_DIFFICULTY: u32 = 12;
pub const DEFAULT_BLOCK_GAS_LIMIT: Gas = 120_000;
pub const DEFAULT_NODE_COUNT: usize = 5;
pub const DEFAULT_TICK_PER_HASH: SimTime = SimTime::from_millis(1);
pub const DEFAULT_BLOCK_REWARD: WeiAmount = WeiAmount::from_ether(2);
pub const ADMIN_GRANT: WeiAmount = WeiAmount::from_ether(100);
pub const FAUCET_GRANT: WeiAmount = WeiAmount::from_ether(10);

/// Highest accepted difficulty; anything above is not minable in practice.
pub const MAX_DIFFICULTY: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("node_count must be odd and at least 1, got {0}")]
    NodeCount(usize),
    #[error("difficulty must be within 1..={MAX_DIFFICULTY}, got {0}")]
    Difficulty(u32),
    #[error("block_gas_limit must be positive")]
    BlockGasLimit,
    #[error("clock_tick_per_hash must be positive")]
    ClockTick,
    #[error("genesis allocations overflow")]
    AllocationOverflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub difficulty: u32,
    pub block_gas_limit: Gas,
    pub node_count: usize,
    pub genesis_allocations: BTreeMap<Address, WeiAmount>,
    pub clock_tick_per_hash: SimTime,
    pub block_reward: WeiAmount,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            difficulty: DEFAULT_DIFFICULTY,
            block_gas_limit: DEFAULT_BLOCK_GAS_LIMIT,
            node_count: DEFAULT_NODE_COUNT,
            genesis_allocations: BTreeMap::new(),
            clock_tick_per_hash: DEFAULT_TICK_PER_HASH,
            block_reward: DEFAULT_BLOCK_REWARD,
        }
    }
}

impl ChainConfig {
    pub fn with_allocation(mut self, addr: Address, amount: WeiAmount) -> Self {
        self.genesis_allocations.insert(addr, amount);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_count == 0 || self.node_count.is_multiple_of(2) {
            return Err(ConfigError::NodeCount(self.node_count));
        }
        if !(1..=MAX_DIFFICULTY).contains(&self.difficulty) {
            return Err(ConfigError::Difficulty(self.difficulty));
        }
        if self.block_gas_limit == 0 {
            return Err(ConfigError::BlockGasLimit);
        }
        if self.clock_tick_per_hash == SimTime::ZERO {
            return Err(ConfigError::ClockTick);
        }
        self.genesis_supply().ok_or(ConfigError::AllocationOverflow)?;
        Ok(())
    }

    pub fn genesis_supply(&self) -> Option<WeiAmount> {
        self.genesis_allocations
            .values()
            .try_fold(WeiAmount::ZERO, |acc, v| acc.checked_add(*v))
    }
}
