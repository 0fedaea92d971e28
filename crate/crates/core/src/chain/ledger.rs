use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use super::block::{pow_timestamp, seal, tx_root, Block, HeaderFields};
use super::config::{ConfigError, ChainConfig};
use super::mempool::Mempool;
use super::receipt::{Receipt, TxLookup};
use super::state::{AccountState, TxOutcome, TxRejection, WorldState};
use crate::contract::{CertificateRecord, ContractState};
use crate::payload::{intrinsic_gas, CallPayload};
use crate::primitives::{Address, Hash256};
use crate::tx::SignedTransaction;
use crate::units::{SimTime, WeiAmount};
use crate::wallet::verify_signature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubmitError {
    #[error("signature does not verify for the sender")]
    InvalidSignature,
    #[error("nonce {got} does not follow the sender's pending nonce {expected}")]
    NonceGap { expected: u64, got: u64 },
    #[error("balance cannot cover gas_limit * gas_price")]
    InsufficientBalance,
    #[error("transaction already known")]
    DuplicateTransaction,
    #[error("gas limit must be positive")]
    ZeroGasLimit,
    #[error("gas limit {0} exceeds the block gas limit")]
    GasLimitAboveBlockLimit(u64),
    #[error("submission time is ahead of the chain clock")]
    FutureTimestamp,
    #[error("fee arithmetic overflowed")]
    FeeOverflow,
}

/// Why a validator refused a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BlockRejection {
    #[error("parent is not the validator's tip")]
    UnknownParent,
    #[error("block number is not tip + 1")]
    BadNumber,
    #[error("difficulty differs from the chain's")]
    BadDifficulty,
    #[error("timestamp does not match the proof-of-work attempts")]
    BadTimestamp,
    #[error("block_hash does not match the header")]
    BadHash,
    #[error("block hash lacks the required leading zero bits")]
    InsufficientWork,
    #[error("transaction {0} has an invalid signature")]
    InvalidSignature(usize),
    #[error("transaction {0} cannot be applied")]
    InvalidTransaction(usize),
    #[error("transaction {0} was submitted after the block time")]
    FutureTransaction(usize),
    #[error("gas used exceeds the block gas limit")]
    GasLimitExceeded,
    #[error("state root mismatch")]
    StateRootMismatch,
    #[error("balance overflow")]
    Overflow,
    #[error("validator is configured to reject")]
    FaultyValidator,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MineError {
    #[error("produced block was rejected by the validator majority: {0:?}")]
    Rejected(Option<BlockRejection>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("genesis block does not match the configuration")]
    GenesisMismatch,
    #[error("block at position {index} was rejected: {reason:?}")]
    Rejected { index: usize, reason: Option<BlockRejection> },
}

/// Behaviour of a simulated validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFault {
    Honest,
    /// Votes against every block.
    RejectAll,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub approvals: usize,
    pub node_count: usize,
    pub accepted: bool,
    pub first_rejection: Option<BlockRejection>,
}

#[derive(Debug, Clone)]
struct ValidatorNode {
    state: Arc<WorldState>,
    chain: Vec<Arc<Block>>,
    fault: NodeFault,
}

struct Executed {
    state: WorldState,
    outcomes: Vec<TxOutcome>,
}

/// The in-process chain: mempool, canonical blocks and state, receipts, and
/// the set of validators that must approve every block by majority.
#[derive(Debug, Clone)]
pub struct Ledger {
    config: ChainConfig,
    blocks: Vec<Arc<Block>>,
    state: Arc<WorldState>,
    nodes: Vec<ValidatorNode>,
    mempool: Mempool,
    receipts: HashMap<Hash256, Receipt>,
    receipt_order: Vec<Hash256>,
}

fn worst_case_cost(tx: &SignedTransaction) -> Option<WeiAmount> {
    let value = CallPayload::decode(&tx.payload).map_or(WeiAmount::ZERO, |p| p.value());
    tx.max_fee()?.checked_add(value)
}

fn signature_ok(tx: &SignedTransaction) -> bool {
    Address::from_public_key(&tx.public_key) == tx.from && verify_signature(tx, &tx.public_key)
}

impl Ledger {
    pub fn new(config: ChainConfig) -> Result<Ledger, ConfigError> {
        config.validate()?;
        let state = WorldState::genesis(&config.genesis_allocations);
        let header = HeaderFields {
            number: 0,
            parent_hash: Hash256::ZERO,
            difficulty: config.difficulty,
            miner: Address::ZERO,
            tx_root: tx_root(&[]),
            state_root: state.state_root(),
        };
        let (pow_nonce, timestamp, block_hash) =
            seal(&header, SimTime::ZERO, config.clock_tick_per_hash, false);
        let genesis = Arc::new(Block {
            number: 0,
            parent_hash: Hash256::ZERO,
            timestamp,
            difficulty: config.difficulty,
            pow_nonce,
            miner: Address::ZERO,
            transactions: Vec::new(),
            state_root: header.state_root,
            block_hash,
        });
        let state = Arc::new(state);
        let node = ValidatorNode {
            state: Arc::clone(&state),
            chain: vec![Arc::clone(&genesis)],
            fault: NodeFault::Honest,
        };
        Ok(Ledger {
            nodes: vec![node; config.node_count],
            config,
            blocks: vec![genesis],
            state,
            mempool: Mempool::default(),
            receipts: HashMap::new(),
            receipt_order: Vec::new(),
        })
    }

    /// Rebuilds a ledger by feeding every non-genesis block through validation.
    pub fn replay(config: ChainConfig, blocks: &[Block]) -> Result<Ledger, ReplayError> {
        let mut ledger = Ledger::new(config)?;
        let mut iter = blocks.iter();
        if let Some(first) = iter.next() {
            if first != ledger.genesis() {
                return Err(ReplayError::GenesisMismatch);
            }
        }
        for (i, block) in iter.enumerate() {
            let tally = ledger.validate_and_accept_with_tally(block);
            if !tally.accepted {
                return Err(ReplayError::Rejected { index: i + 1, reason: tally.first_rejection });
            }
        }
        Ok(ledger)
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn genesis(&self) -> &Block {
        &self.blocks[0]
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    /// Number of blocks after genesis.
    pub fn height(&self) -> u64 {
        self.tip().number
    }

    pub fn blocks(&self) -> impl ExactSizeIterator<Item = &Block> {
        self.blocks.iter().map(|b| b.as_ref())
    }

    pub fn block(&self, number: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(number).ok()?).map(|b| b.as_ref())
    }

    /// The simulated clock: the tip's timestamp.
    pub fn now(&self) -> SimTime {
        self.tip().timestamp
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    /// Immutable view of the current state, safe to hand to other threads.
    pub fn snapshot(&self) -> Arc<WorldState> {
        Arc::clone(&self.state)
    }

    pub fn state_root(&self) -> Hash256 {
        self.state.state_root()
    }

    pub fn account(&self, addr: &Address) -> AccountState {
        self.state.account(addr)
    }

    /// Next nonce the sender should sign with, counting pending transactions.
    pub fn pending_nonce(&self, addr: &Address) -> u64 {
        self.state.account(addr).nonce + self.mempool.pending_count(addr)
    }

    pub fn pending_len(&self) -> usize {
        self.mempool.len()
    }

    /// Pending transactions in mempool priority order.
    pub fn pending(&self) -> Vec<SignedTransaction> {
        self.mempool.iter().map(|(_, tx)| tx.clone()).collect()
    }

    pub fn contract(&self, addr: &Address) -> Option<&ContractState> {
        self.state.contract(addr)
    }

    /// Read-only registry lookup; no transaction, no gas.
    pub fn get_hash(&self, contract: &Address, cert_hash: &Hash256) -> Option<CertificateRecord> {
        let rec = self.state.contract(contract)?.get_hash(cert_hash)?;
        let block_timestamp = self.block(rec.stored_at).map_or(SimTime::ZERO, |b| b.timestamp);
        Some(CertificateRecord {
            issuer: rec.issuer,
            stored_at: rec.stored_at,
            block_timestamp,
            doc_type_code: rec.doc_type_code,
        })
    }

    pub fn set_node_fault(&mut self, index: usize, fault: NodeFault) {
        self.nodes[index].fault = fault;
    }

    pub fn node_state_root(&self, index: usize) -> Hash256 {
        self.nodes[index].state.state_root()
    }

    pub fn node_height(&self, index: usize) -> u64 {
        self.nodes[index].chain.last().map_or(0, |b| b.number)
    }

    pub fn submit_transaction(&mut self, tx: SignedTransaction) -> Result<Hash256, SubmitError> {
        let hash = tx.hash();
        if self.mempool.contains(&hash) || self.receipts.contains_key(&hash) {
            return Err(SubmitError::DuplicateTransaction);
        }
        if tx.gas_limit == 0 {
            return Err(SubmitError::ZeroGasLimit);
        }
        if tx.gas_limit > self.config.block_gas_limit {
            return Err(SubmitError::GasLimitAboveBlockLimit(tx.gas_limit));
        }
        if !signature_ok(&tx) {
            return Err(SubmitError::InvalidSignature);
        }
        let expected = self.pending_nonce(&tx.from);
        if tx.nonce != expected {
            return Err(SubmitError::NonceGap { expected, got: tx.nonce });
        }
        if tx.submitted_at > self.now() {
            return Err(SubmitError::FutureTimestamp);
        }
        let cost = worst_case_cost(&tx).ok_or(SubmitError::FeeOverflow)?;
        let available = self
            .state
            .account(&tx.from)
            .balance
            .checked_sub(self.mempool.reserved(&tx.from))
            .unwrap_or(WeiAmount::ZERO);
        if available < cost {
            return Err(SubmitError::InsufficientBalance);
        }
        self.mempool.insert(hash, tx, cost);
        Ok(hash)
    }

    pub fn get_receipt(&self, tx_hash: &Hash256) -> TxLookup {
        if let Some(r) = self.receipts.get(tx_hash) {
            TxLookup::Mined(r.clone())
        } else if self.mempool.contains(tx_hash) {
            TxLookup::Pending
        } else {
            TxLookup::Unknown
        }
    }

    /// Receipts in mining order.
    pub fn receipts(&self) -> impl Iterator<Item = &Receipt> {
        self.receipt_order.iter().map(|h| &self.receipts[h])
    }

    /// Builds and seals the next block without committing it.
    ///
    /// Pending transactions are taken in priority order, skipping any whose
    /// nonce is not yet due, and selection stops at the first one that would
    /// push the block past its gas limit.
    pub fn produce_block(&self, miner: Address) -> Block {
        let parent = self.tip();
        let number = parent.number + 1;
        let mut state = WorldState::clone(&self.state);
        let mut candidates: Vec<&SignedTransaction> = self.mempool.iter().map(|(_, tx)| tx).collect();
        let mut selected = Vec::new();
        let mut gas_total: u64 = 0;
        let mut fees = WeiAmount::ZERO;

        while let Some(pos) =
            candidates.iter().position(|tx| tx.nonce == state.account(&tx.from).nonce)
        {
            let tx = candidates[pos];
            let gas = intrinsic_gas(&tx.payload).min(tx.gas_limit);
            if gas_total + gas > self.config.block_gas_limit {
                break;
            }
            candidates.remove(pos);
            let mut scratch = state.clone();
            match scratch.apply_transaction(tx, number) {
                Ok(outcome) => {
                    state = scratch;
                    gas_total += outcome.gas_used;
                    fees = fees.checked_add(outcome.fee).expect("fee total overflow");
                    selected.push(tx.clone());
                }
                Err(_) => continue,
            }
        }
        let reward = fees.checked_add(self.config.block_reward).expect("reward overflow");
        state.credit(miner, reward).expect("miner balance overflow");

        let header = HeaderFields {
            number,
            parent_hash: parent.block_hash,
            difficulty: self.config.difficulty,
            miner,
            tx_root: tx_root(&selected),
            state_root: state.state_root(),
        };
        let (pow_nonce, timestamp, block_hash) =
            seal(&header, parent.timestamp, self.config.clock_tick_per_hash, true);
        Block {
            number,
            parent_hash: parent.block_hash,
            timestamp,
            difficulty: self.config.difficulty,
            pow_nonce,
            miner,
            transactions: selected,
            state_root: header.state_root,
            block_hash,
        }
    }

    /// Produces the next block and runs it through majority validation.
    pub fn mine_next_block(&mut self, miner: Address) -> Result<Block, MineError> {
        let block = self.produce_block(miner);
        let tally = self.validate_and_accept_with_tally(&block);
        if tally.accepted {
            Ok(block)
        } else {
            Err(MineError::Rejected(tally.first_rejection))
        }
    }

    pub fn validate_and_accept(&mut self, block: &Block) -> bool {
        self.validate_and_accept_with_tally(block).accepted
    }

    /// Every validator re-executes the block against its own copy of the
    /// chain; the block is appended everywhere iff a strict majority approves.
    pub fn validate_and_accept_with_tally(&mut self, block: &Block) -> Tally {
        let verdicts: Vec<Result<Executed, BlockRejection>> = self
            .nodes
            .iter()
            .map(|node| match node.fault {
                NodeFault::RejectAll => Err(BlockRejection::FaultyValidator),
                NodeFault::Honest => validate_on(&self.config, node, block),
            })
            .collect();
        let approvals = verdicts.iter().filter(|v| v.is_ok()).count();
        let first_rejection = verdicts.iter().find_map(|v| v.as_ref().err().copied());
        let accepted = approvals * 2 > self.nodes.len();
        let tally = Tally { approvals, node_count: self.nodes.len(), accepted, first_rejection };
        if !accepted {
            return tally;
        }

        let mut majority: Option<(Arc<WorldState>, Vec<TxOutcome>)> = None;
        let mut node_states = Vec::with_capacity(self.nodes.len());
        for verdict in verdicts {
            match verdict {
                Ok(exec) => {
                    let state = Arc::new(exec.state);
                    if majority.is_none() {
                        majority = Some((Arc::clone(&state), exec.outcomes));
                    }
                    node_states.push(Some(state));
                }
                Err(_) => node_states.push(None),
            }
        }
        let (state, outcomes) = majority.expect("accepted implies an approval");
        let block = Arc::new(block.clone());
        for (node, own) in self.nodes.iter_mut().zip(node_states) {
            // Dissenting validators sync to the majority result.
            node.state = own.unwrap_or_else(|| Arc::clone(&state));
            node.chain.push(Arc::clone(&block));
        }
        self.commit(block, state, outcomes);
        tally
    }

    fn commit(&mut self, block: Arc<Block>, state: Arc<WorldState>, outcomes: Vec<TxOutcome>) {
        for (tx, outcome) in block.transactions.iter().zip(outcomes) {
            let hash = tx.hash();
            let receipt = Receipt {
                tx_hash: hash,
                block_number: block.number,
                from: tx.from,
                gas_used: outcome.gas_used,
                gas_price: tx.gas_price,
                fee: outcome.fee,
                status: outcome.status,
                submitted_at: tx.submitted_at,
                confirmed_at: block.timestamp,
                confirmation_delay: block.timestamp - tx.submitted_at,
            };
            if let Some(cost) = worst_case_cost(tx) {
                self.mempool.remove(&hash, cost);
            }
            self.receipts.insert(hash, receipt);
            self.receipt_order.push(hash);
        }
        self.blocks.push(block);
        self.state = state;

        // Drop pending transactions whose nonce has been consumed.
        let stale: Vec<(Hash256, WeiAmount)> = self
            .mempool
            .iter()
            .filter(|(_, tx)| tx.nonce < self.state.account(&tx.from).nonce)
            .map(|(h, tx)| (*h, worst_case_cost(tx).unwrap_or(WeiAmount::ZERO)))
            .collect();
        for (hash, cost) in stale {
            self.mempool.remove(&hash, cost);
        }
    }
}

fn validate_on(config: &ChainConfig, node: &ValidatorNode, block: &Block) -> Result<Executed, BlockRejection> {
    let tip = node.chain.last().ok_or(BlockRejection::UnknownParent)?;
    if block.parent_hash != tip.block_hash {
        return Err(BlockRejection::UnknownParent);
    }
    if block.number != tip.number + 1 {
        return Err(BlockRejection::BadNumber);
    }
    if block.difficulty != config.difficulty {
        return Err(BlockRejection::BadDifficulty);
    }
    if pow_timestamp(tip.timestamp, config.clock_tick_per_hash, block.pow_nonce) != Some(block.timestamp) {
        return Err(BlockRejection::BadTimestamp);
    }
    if block.compute_hash() != block.block_hash {
        return Err(BlockRejection::BadHash);
    }
    if !block.meets_difficulty() {
        return Err(BlockRejection::InsufficientWork);
    }
    let mut seen = HashSet::new();
    for (i, tx) in block.transactions.iter().enumerate() {
        if !signature_ok(tx) {
            return Err(BlockRejection::InvalidSignature(i));
        }
        if tx.submitted_at > block.timestamp {
            return Err(BlockRejection::FutureTransaction(i));
        }
        if !seen.insert(tx.hash()) {
            return Err(BlockRejection::InvalidTransaction(i));
        }
    }
    let exec = execute_body(config, &node.state, block)?;
    if exec.state.state_root() != block.state_root {
        return Err(BlockRejection::StateRootMismatch);
    }
    Ok(exec)
}

fn execute_body(config: &ChainConfig, parent: &WorldState, block: &Block) -> Result<Executed, BlockRejection> {
    let mut state = parent.clone();
    let mut outcomes = Vec::with_capacity(block.transactions.len());
    let mut gas_total: u64 = 0;
    let mut fees = WeiAmount::ZERO;
    for (i, tx) in block.transactions.iter().enumerate() {
        let outcome = state
            .apply_transaction(tx, block.number)
            .map_err(|e| match e {
                TxRejection::Overflow => BlockRejection::Overflow,
                _ => BlockRejection::InvalidTransaction(i),
            })?;
        gas_total = gas_total.checked_add(outcome.gas_used).ok_or(BlockRejection::GasLimitExceeded)?;
        if gas_total > config.block_gas_limit {
            return Err(BlockRejection::GasLimitExceeded);
        }
        fees = fees.checked_add(outcome.fee).ok_or(BlockRejection::Overflow)?;
        outcomes.push(outcome);
    }
    let reward = fees.checked_add(config.block_reward).ok_or(BlockRejection::Overflow)?;
    state.credit(block.miner, reward).map_err(|_| BlockRejection::Overflow)?;
    Ok(Executed { state, outcomes })
}
