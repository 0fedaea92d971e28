//! Account and contract state, and the per-transaction state transition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::contract::{contract_address, ContractState, RevertReason, UniversityMeta};
use crate::encoding::Encoder;
use crate::payload::{CallPayload, TRANSFER_GAS};
use crate::primitives::{sha256, Address, Hash256};
use crate::tx::SignedTransaction;
use crate::units::{compute_fee, Gas, WeiAmount};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountState {
    pub balance: WeiAmount,
    pub nonce: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxStatus {
    Success,
    Reverted(RevertReason),
}

impl TxStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, TxStatus::Success)
    }

    pub fn label(&self) -> String {
        match self {
            TxStatus::Success => "success".to_owned(),
            TxStatus::Reverted(r) => format!("reverted:{}", r.name()),
        }
    }

    pub fn parse_label(s: &str) -> Option<TxStatus> {
        if s == "success" {
            return Some(TxStatus::Success);
        }
        s.strip_prefix("reverted:")
            .and_then(RevertReason::from_name)
            .map(TxStatus::Reverted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TxOutcome {
    pub gas_used: Gas,
    pub fee: WeiAmount,
    pub status: TxStatus,
}

/// Conditions that make a transaction unincludable (the block is invalid).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TxRejection {
    ZeroGasLimit,
    NonceMismatch,
    CannotAffordFee,
    Overflow,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    accounts: BTreeMap<Address, AccountState>,
    contracts: BTreeMap<Address, ContractState>,
}

impl WorldState {
    pub fn genesis(allocations: &BTreeMap<Address, WeiAmount>) -> Self {
        let accounts = allocations
            .iter()
            .map(|(a, b)| (*a, AccountState { balance: *b, nonce: 0 }))
            .collect();
        WorldState { accounts, contracts: BTreeMap::new() }
    }

    pub fn account(&self, addr: &Address) -> AccountState {
        self.accounts.get(addr).copied().unwrap_or_default()
    }

    pub fn accounts(&self) -> &BTreeMap<Address, AccountState> {
        &self.accounts
    }

    pub fn contract(&self, addr: &Address) -> Option<&ContractState> {
        self.contracts.get(addr)
    }

    pub fn contracts(&self) -> &BTreeMap<Address, ContractState> {
        &self.contracts
    }

    pub fn total_balance(&self) -> Option<WeiAmount> {
        self.accounts
            .values()
            .try_fold(WeiAmount::ZERO, |acc, a| acc.checked_add(a.balance))
    }

    /// SHA-256 over the canonical encoding of every account and contract.
    pub fn state_root(&self) -> Hash256 {
        let mut enc = Encoder::new();
        enc.u64(self.accounts.len() as u64);
        for (addr, acct) in &self.accounts {
            enc.bytes(addr.as_bytes()).u128(acct.balance.wei()).u64(acct.nonce);
        }
        enc.u64(self.contracts.len() as u64);
        for (addr, contract) in &self.contracts {
            enc.bytes(addr.as_bytes());
            contract.encode_into(&mut enc);
        }
        sha256(&enc.finish())
    }

    pub(crate) fn credit(&mut self, addr: Address, amount: WeiAmount) -> Result<(), TxRejection> {
        let acct = self.accounts.entry(addr).or_default();
        acct.balance = acct.balance.checked_add(amount).ok_or(TxRejection::Overflow)?;
        Ok(())
    }

    /// Applies one transaction. Signature checks happen before this is called.
    ///
    /// The sender is charged `min(flat cost, gas_limit) * gas_price` whether the
    /// call succeeds or reverts; the fee is returned for the miner's credit.
    pub(crate) fn apply_transaction(
        &mut self,
        tx: &SignedTransaction,
        block_number: u64,
    ) -> Result<TxOutcome, TxRejection> {
        if tx.gas_limit == 0 {
            return Err(TxRejection::ZeroGasLimit);
        }
        let sender = self.account(&tx.from);
        if sender.nonce != tx.nonce {
            return Err(TxRejection::NonceMismatch);
        }
        let decoded = CallPayload::decode(&tx.payload);
        let cost = decoded.as_ref().map_or(TRANSFER_GAS, CallPayload::gas_cost);
        let gas_used = cost.min(tx.gas_limit);
        let fee = compute_fee(gas_used, tx.gas_price).map_err(|_| TxRejection::Overflow)?;
        let balance = sender.balance.checked_sub(fee).ok_or(TxRejection::CannotAffordFee)?;
        self.accounts.insert(tx.from, AccountState { balance, nonce: sender.nonce + 1 });

        let status = match decoded {
            Err(_) => TxStatus::Reverted(RevertReason::MalformedPayload),
            Ok(_) if cost > tx.gas_limit => TxStatus::Reverted(RevertReason::OutOfGas),
            Ok(call) => match self.execute_call(tx, call, block_number) {
                Ok(()) => TxStatus::Success,
                Err(reason) => TxStatus::Reverted(reason),
            },
        };
        Ok(TxOutcome { gas_used, fee, status })
    }

    fn execute_call(
        &mut self,
        tx: &SignedTransaction,
        call: CallPayload,
        block_number: u64,
    ) -> Result<(), RevertReason> {
        match call {
            CallPayload::Deploy => {
                if !tx.to.is_zero() {
                    return Err(RevertReason::InvalidArgument);
                }
                let addr = contract_address(tx.from, tx.nonce);
                if self.contracts.contains_key(&addr) {
                    return Err(RevertReason::InvalidArgument);
                }
                self.contracts.insert(addr, ContractState::deploy(tx.from));
                Ok(())
            }
            CallPayload::AddUni { university, name, country } => {
                let contract = self.contracts.get_mut(&tx.to).ok_or(RevertReason::UnknownContract)?;
                let meta = UniversityMeta { name, country, registered_at: block_number };
                contract.add_uni(tx.from, university, meta)
            }
            CallPayload::StoreHash { cert_hash, doc_type_code } => {
                let contract = self.contracts.get_mut(&tx.to).ok_or(RevertReason::UnknownContract)?;
                contract.store_hash(tx.from, cert_hash, doc_type_code, block_number)
            }
            CallPayload::Transfer { amount } => {
                let sender = self.account(&tx.from);
                let remaining = sender
                    .balance
                    .checked_sub(amount)
                    .ok_or(RevertReason::InsufficientFunds)?;
                let recipient = self.account(&tx.to);
                if tx.to != tx.from && recipient.balance.checked_add(amount).is_none() {
                    return Err(RevertReason::InvalidArgument);
                }
                self.accounts.insert(tx.from, AccountState { balance: remaining, ..sender });
                self.credit(tx.to, amount).map_err(|_| RevertReason::InvalidArgument)
            }
        }
    }
}
