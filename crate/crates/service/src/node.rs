//! A running node: ledger, off-chain store, custodial wallets and sessions
//! bound to one data directory.
//!
//! Data directory layout:
//!
//! ```text
//! node.json        chain parameters, contract address, seed
//! chain.ndjson     accepted blocks, one JSON object per line (genesis first)
//! mempool.ndjson   pending transactions, rewritten on every change
//! store.json       off-chain store image
//! files/           uploaded documents, named by SHA-256 digest
//! outbox.jsonl     share-link notifications
//! wallets/         one key file per custodial wallet
//! ```

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use credchain_analytics::TxLogEntry;
use credchain_core::chain::export::{export_blocks, export_receipts_csv, read_blocks, write_block_line};
use credchain_core::chain::{ADMIN_GRANT, FAUCET_GRANT};
use credchain_core::contract::contract_address;
use credchain_core::{
    sha256, Address, Block, CallPayload, ChainConfig, ChainHandle, Hash256, Ledger, SignedTransaction,
    SimTime, TxLookup, TxRequest, TxStatus, WalletEntry,
};
use credchain_store::{
    Clock, DocType, DocumentRecord, NewStudent, NewUser, OsEntropy, Principal, Role, SeededEntropy,
    ShareToken, Store, StoreOptions, StudentProfile, SystemClock, TxRef, UserAccount,
};
use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::sessions::{SessionPrincipal, Sessions};

const MANIFEST_FILE: &str = "node.json";
const CHAIN_FILE: &str = "chain.ndjson";
const MEMPOOL_FILE: &str = "mempool.ndjson";
const WALLETS_DIR: &str = "wallets";
const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    chain: ChainConfig,
    contract: Address,
    admin_address: Address,
    seed: Option<u64>,
}

pub struct NodeOptions {
    pub clock: Arc<dyn Clock>,
    pub session_ttl_secs: u64,
}

impl Default for NodeOptions {
    fn default() -> Self {
        NodeOptions { clock: Arc::new(SystemClock), session_ttl_secs: 8 * 3600 }
    }
}

pub struct InitParams {
    /// Genesis allocations are added by `init`; any given here are kept.
    pub chain: ChainConfig,
    pub seed: Option<u64>,
    pub admin_email: String,
    pub admin_password: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniversitySummary {
    pub university_id: String,
    pub name: String,
    pub country: Option<String>,
    pub email: String,
    pub address: Address,
    /// Registered in the on-chain contract.
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AddUniversityResponse {
    pub university_id: String,
    pub address: Address,
    pub tx_hash: Hash256,
    pub funding_tx_hash: Hash256,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UploadResponse {
    pub doc_id: String,
    pub file_digest: Hash256,
    pub tx_hash: Hash256,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainStatus {
    Unsubmitted,
    Pending,
    Confirmed,
    Reverted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocumentView {
    #[serde(flatten)]
    pub record: DocumentRecord,
    pub chain_status: ChainStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_number: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revert_reason: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShareResponse {
    pub token: String,
    pub url: String,
    pub expires_at: u64,
}

/// Outcome of looking a digest up in the registry. Optional fields are
/// present exactly when `verified` is true.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationResult {
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issuer_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub university_address: Option<Address>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doc_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stored_at_block: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_timestamp: Option<SimTime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_hash: Option<Hash256>,
}

impl VerificationResult {
    pub fn unverified() -> Self {
        VerificationResult {
            verified: false,
            issuer_name: None,
            university_address: None,
            doc_type: None,
            stored_at_block: None,
            block_timestamp: None,
            tx_hash: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxStatusView {
    pub tx_hash: Hash256,
    /// `pending`, `success` or `reverted`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revert_reason: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_number: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gas_used: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fee_wei: Option<credchain_core::WeiAmount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confirmation_delay: Option<SimTime>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSummary {
    pub height: u64,
    pub tip_hash: Hash256,
    pub now: SimTime,
    pub pending: usize,
    pub contract: Address,
    pub difficulty: u32,
}

pub struct Node {
    dir: PathBuf,
    manifest: Manifest,
    chain: ChainHandle,
    store: Arc<Store>,
    /// Custodial wallets by user id. Held while signing and submitting so each
    /// wallet's nonces reach the mempool in order.
    wallets: Mutex<HashMap<String, WalletEntry>>,
    sessions: Sessions,
    /// Serializes writes to `chain.ndjson` and `mempool.ndjson`.
    files: Mutex<()>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node").field("dir", &self.dir).finish_non_exhaustive()
    }
}

fn store_options(seed: Option<u64>, clock: Arc<dyn Clock>) -> StoreOptions {
    StoreOptions {
        clock,
        entropy: match seed {
            Some(seed) => Box::new(SeededEntropy::new(seed)),
            None => Box::new(OsEntropy),
        },
        notifier: None,
    }
}

fn session_rng(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(seed) => {
            let mut material = b"sessions".to_vec();
            material.extend_from_slice(&seed.to_be_bytes());
            ChaCha20Rng::from_seed(*sha256(&material).as_bytes())
        }
        None => ChaCha20Rng::from_os_rng(),
    }
}

/// True when `dir` is missing or has no entries.
pub fn is_fresh_dir(dir: &Path) -> bool {
    match fs::read_dir(dir) {
        Ok(mut entries) => entries.next().is_none(),
        Err(_) => !dir.exists(),
    }
}

impl Node {
    /// Creates a node in an empty directory: admin account and wallet,
    /// genesis, and the registry contract deployed in block 1.
    pub fn init(dir: impl AsRef<Path>, params: InitParams, options: NodeOptions) -> Result<Node, ServiceError> {
        let dir = dir.as_ref().to_path_buf();
        if !is_fresh_dir(&dir) {
            return Err(ServiceError::DataDirNotEmpty(dir.display().to_string()));
        }
        fs::create_dir_all(dir.join(WALLETS_DIR))?;
        let store = Store::open(&dir, store_options(params.seed, options.clock.clone()))?;
        let admin_seed: [u8; 32] = store.random_bytes()?;
        let admin = WalletEntry::from_seed("admin", &admin_seed).map_err(ServiceError::internal)?;
        let config = params.chain.with_allocation(admin.address(), ADMIN_GRANT);
        config.validate().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let manifest = Manifest {
            format: MANIFEST_FORMAT,
            chain: config.clone(),
            contract: contract_address(admin.address(), 0),
            admin_address: admin.address(),
            seed: params.seed,
        };
        let account = store.create_user(NewUser {
            role: Role::Admin,
            email: params.admin_email,
            password: params.admin_password,
            name: "Administrator".into(),
            country: None,
            linked_address: Some(admin.address()),
        })?;
        admin.save(&dir.join(WALLETS_DIR).join(format!("{}.json", account.user_id))).map_err(ServiceError::internal)?;
        credchain_store::write_atomic(
            &dir.join(MANIFEST_FILE),
            &serde_json::to_vec_pretty(&manifest).map_err(ServiceError::internal)?,
        )?;
        let ledger = Ledger::new(config).map_err(ServiceError::internal)?;
        let mut genesis = Vec::new();
        export_blocks(&ledger, &mut genesis)?;
        credchain_store::write_atomic(&dir.join(CHAIN_FILE), &genesis)?;

        let node = Node {
            wallets: Mutex::new(HashMap::from([(account.user_id, admin)])),
            sessions: Sessions::new(options.session_ttl_secs, session_rng(params.seed)),
            chain: ChainHandle::new(ledger),
            store: Arc::new(store),
            files: Mutex::new(()),
            clock: options.clock,
            dir,
            manifest,
        };
        node.submit_as_admin(Address::ZERO, CallPayload::Deploy)?;
        node.mine_once()?;
        Ok(node)
    }

    /// Reopens an initialised node, replaying the chain from genesis.
    pub fn open(dir: impl AsRef<Path>, options: NodeOptions) -> Result<Node, ServiceError> {
        let dir = dir.as_ref().to_path_buf();
        let manifest: Manifest = {
            let bytes = fs::read(dir.join(MANIFEST_FILE))
                .map_err(|e| ServiceError::internal(format!("{}: {e}", dir.join(MANIFEST_FILE).display())))?;
            serde_json::from_slice(&bytes).map_err(ServiceError::internal)?
        };
        if manifest.format != MANIFEST_FORMAT {
            return Err(ServiceError::internal(format!("unsupported node format {}", manifest.format)));
        }
        let blocks = read_blocks(BufReader::new(fs::File::open(dir.join(CHAIN_FILE))?))
            .map_err(ServiceError::internal)?;
        let mut ledger = Ledger::replay(manifest.chain.clone(), &blocks).map_err(ServiceError::internal)?;
        for tx in read_mempool(&dir.join(MEMPOOL_FILE))? {
            if let Err(e) = ledger.submit_transaction(tx) {
                tracing::warn!(error = %e, "dropping persisted mempool transaction");
            }
        }
        let store = Store::open(&dir, store_options(manifest.seed, options.clock.clone()))?;
        let wallets = load_wallets(&dir.join(WALLETS_DIR))?;
        Ok(Node {
            sessions: Sessions::new(options.session_ttl_secs, session_rng(manifest.seed)),
            chain: ChainHandle::new(ledger),
            store: Arc::new(store),
            wallets: Mutex::new(wallets),
            files: Mutex::new(()),
            clock: options.clock,
            dir,
            manifest,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn chain(&self) -> &ChainHandle {
        &self.chain
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn contract(&self) -> Address {
        self.manifest.contract
    }

    pub fn admin_address(&self) -> Address {
        self.manifest.admin_address
    }

    pub fn seed(&self) -> Option<u64> {
        self.manifest.seed
    }

    pub fn chain_summary(&self) -> ChainSummary {
        self.chain.read(|l| ChainSummary {
            height: l.height(),
            tip_hash: l.tip().block_hash,
            now: l.now(),
            pending: l.pending_len(),
            contract: self.manifest.contract,
            difficulty: l.config().difficulty,
        })
    }

    // ---- persistence ----

    fn persist_mempool_locked(&self) -> Result<(), ServiceError> {
        let pending = self.chain.read(|l| l.pending());
        let mut out = Vec::new();
        for tx in &pending {
            serde_json::to_writer(&mut out, tx).map_err(ServiceError::internal)?;
            out.push(b'\n');
        }
        credchain_store::write_atomic(&self.dir.join(MEMPOOL_FILE), &out)?;
        Ok(())
    }

    fn persist_mempool(&self) -> Result<(), ServiceError> {
        let _files = self.files.lock();
        self.persist_mempool_locked()
    }

    /// Mines one block (empty if nothing is pending) with the admin as miner
    /// and appends it to `chain.ndjson`.
    pub fn mine_once(&self) -> Result<Block, ServiceError> {
        let _files = self.files.lock();
        let block = self.chain.mine(self.manifest.admin_address)?;
        let mut file = OpenOptions::new().append(true).open(self.dir.join(CHAIN_FILE))?;
        let mut line = Vec::new();
        write_block_line(&block, &mut line)?;
        file.write_all(&line)?;
        file.sync_data()?;
        self.persist_mempool_locked()?;
        Ok(block)
    }

    pub fn mine(&self, count: usize) -> Result<Vec<Block>, ServiceError> {
        (0..count).map(|_| self.mine_once()).collect()
    }

    /// Mines until the mempool is empty.
    pub fn mine_until_idle(&self) -> Result<Vec<Block>, ServiceError> {
        let mut blocks = Vec::new();
        while self.chain.read(|l| l.pending_len()) > 0 {
            blocks.push(self.mine_once()?);
        }
        Ok(blocks)
    }

    pub fn export_chain(&self, out: impl Write) -> Result<(), ServiceError> {
        self.chain.read(|l| export_blocks(l, out))?;
        Ok(())
    }

    pub fn export_receipts(&self, out: impl Write) -> Result<(), ServiceError> {
        self.chain.read(|l| export_receipts_csv(l, out))?;
        Ok(())
    }

    /// Transaction log of mined university transactions, labelled by
    /// university id.
    pub fn txlog(&self) -> Result<Vec<TxLogEntry>, ServiceError> {
        let issuers: HashMap<Address, String> = self
            .store
            .users(Role::University)
            .into_iter()
            .filter_map(|u| Some((u.linked_address?, u.user_id)))
            .collect();
        self.chain.read(|l| {
            l.receipts()
                .filter_map(|r| issuers.get(&r.from).map(|id| (r, id)))
                .map(|(r, id)| {
                    TxLogEntry::new(r.tx_hash, id.clone(), r.submitted_at, r.confirmed_at, r.gas_used, r.gas_price, r.fee)
                        .map_err(ServiceError::internal)
                })
                .collect()
        })
    }

    // ---- signing ----

    fn submit_locked(
        &self,
        wallet: &mut WalletEntry,
        to: Address,
        call: &CallPayload,
    ) -> Result<Hash256, ServiceError> {
        let (nonce, now) = self.chain.read(|l| (l.pending_nonce(&wallet.address()), l.now()));
        wallet.sync_nonce(nonce);
        let tx = wallet
            .sign_transaction(TxRequest {
                from: wallet.address(),
                to,
                payload: call.encode(),
                gas_limit: None,
                gas_price: None,
                submitted_at: now,
            })
            .map_err(ServiceError::internal)?;
        Ok(self.chain.submit(tx)?)
    }

    fn admin_user_id(&self) -> Result<String, ServiceError> {
        self.store
            .users(Role::Admin)
            .into_iter()
            .find(|u| u.linked_address == Some(self.manifest.admin_address))
            .map(|u| u.user_id)
            .ok_or_else(|| ServiceError::internal("admin account missing"))
    }

    fn submit_as_admin(&self, to: Address, call: CallPayload) -> Result<Hash256, ServiceError> {
        let admin_id = self.admin_user_id()?;
        let hash = {
            let mut wallets = self.wallets.lock();
            let wallet = wallets.get_mut(&admin_id).ok_or_else(|| ServiceError::internal("admin wallet missing"))?;
            self.submit_locked(wallet, to, &call)?
        };
        self.persist_mempool()?;
        Ok(hash)
    }

    // ---- sessions ----

    pub fn login(&self, email: &str, password: &str) -> Result<SessionPrincipal, ServiceError> {
        let principal = self.store.authenticate(email, password).ok_or(ServiceError::Unauthorized)?;
        Ok(self.sessions.issue(principal, self.clock.now()))
    }

    /// Resolves a bearer token; disabled accounts lose their sessions.
    pub fn authenticate(&self, token: &str) -> Result<SessionPrincipal, ServiceError> {
        let session = self.sessions.lookup(token, self.clock.now()).ok_or(ServiceError::Unauthorized)?;
        match self.store.user(&session.user_id) {
            Some(user) if !user.disabled => Ok(session),
            _ => {
                self.sessions.revoke(token);
                Err(ServiceError::Unauthorized)
            }
        }
    }

    pub fn logout(&self, token: &str) {
        self.sessions.revoke(token);
    }

    pub fn account(&self, user_id: &str) -> Option<UserAccount> {
        self.store.user(user_id)
    }

    // ---- admin ----

    /// Creates the university account and wallet, then submits a funding
    /// transfer and `add_uni` from the admin wallet. The university can upload
    /// once `add_uni` is mined.
    pub fn add_university(
        &self,
        name: &str,
        country: &str,
        email: &str,
        password: &str,
    ) -> Result<AddUniversityResponse, ServiceError> {
        if country.trim().is_empty() {
            return Err(ServiceError::BadRequest("country must not be empty".into()));
        }
        let seed: [u8; 32] = self.store.random_bytes()?;
        let wallet = WalletEntry::from_seed("university", &seed).map_err(ServiceError::internal)?;
        let account = self.store.create_user(NewUser {
            role: Role::University,
            email: email.into(),
            password: password.into(),
            name: name.into(),
            country: Some(country.into()),
            linked_address: Some(wallet.address()),
        })?;
        let wallet = WalletEntry::from_seed(account.user_id.clone(), &seed).map_err(ServiceError::internal)?;
        wallet
            .save(&self.dir.join(WALLETS_DIR).join(format!("{}.json", account.user_id)))
            .map_err(ServiceError::internal)?;
        let address = wallet.address();
        let admin_id = self.admin_user_id()?;
        let (funding_tx_hash, tx_hash) = {
            let mut wallets = self.wallets.lock();
            wallets.insert(account.user_id.clone(), wallet);
            let admin = wallets.get_mut(&admin_id).ok_or_else(|| ServiceError::internal("admin wallet missing"))?;
            let funding = self.submit_locked(admin, address, &CallPayload::Transfer { amount: FAUCET_GRANT })?;
            let register = self.submit_locked(
                admin,
                self.manifest.contract,
                &CallPayload::AddUni { university: address, name: account.name.clone(), country: country.trim().into() },
            )?;
            (funding, register)
        };
        self.persist_mempool()?;
        Ok(AddUniversityResponse { university_id: account.user_id, address, tx_hash, funding_tx_hash })
    }

    fn is_confirmed(&self, address: &Address) -> bool {
        self.chain.read(|l| l.contract(&self.manifest.contract).is_some_and(|c| c.is_university(address)))
    }

    fn summarize_university(&self, u: UserAccount) -> Option<UniversitySummary> {
        let address = u.linked_address?;
        Some(UniversitySummary {
            confirmed: self.is_confirmed(&address),
            university_id: u.user_id,
            name: u.name,
            country: u.country,
            email: u.email,
            address,
        })
    }

    pub fn universities(&self) -> Vec<UniversitySummary> {
        self.store.universities().into_iter().filter_map(|u| self.summarize_university(u)).collect()
    }

    pub fn university(&self, university_id: &str) -> Option<UniversitySummary> {
        self.store.university(university_id).filter(|u| !u.disabled).and_then(|u| self.summarize_university(u))
    }

    /// Disables the login and hides the university. On-chain registration
    /// and anchored digests are untouched.
    pub fn delete_university(&self, university_id: &str) -> Result<(), ServiceError> {
        if self.store.university(university_id).is_none() {
            return Err(ServiceError::NotFound("UnknownUniversity"));
        }
        self.store.disable_user(university_id)?;
        self.sessions.revoke_user(university_id);
        Ok(())
    }

    pub fn students(&self) -> Vec<StudentProfile> {
        self.store.students()
    }

    // ---- university ----

    pub fn add_doc_type(&self, name: &str) -> Result<DocType, ServiceError> {
        Ok(self.store.add_doc_type(name)?)
    }

    pub fn doc_types(&self) -> Vec<DocType> {
        self.store.doc_types()
    }

    pub fn students_of(&self, university_id: &str) -> Vec<StudentProfile> {
        self.store.students_of(university_id)
    }

    pub fn register_student(&self, new: NewStudent) -> Result<StudentProfile, ServiceError> {
        Ok(self.store.register_student(new)?)
    }

    /// Records the file off-chain and anchors its digest with `store_hash`
    /// signed by the university's wallet.
    pub fn upload_document(
        &self,
        university: &Principal,
        student_id: &str,
        doc_type: &str,
        bytes: &[u8],
    ) -> Result<UploadResponse, ServiceError> {
        let account = self.store.university(&university.user_id).ok_or(ServiceError::Forbidden)?;
        let address = account.linked_address.ok_or_else(|| ServiceError::internal("university without address"))?;
        if !self.is_confirmed(&address) {
            return Err(ServiceError::Conflict("UniversityNotYetConfirmed"));
        }
        if self.store.student(student_id).is_none() {
            return Err(ServiceError::NotFound("UnknownStudent"));
        }
        let doc_type = self.store.doc_type(doc_type).ok_or(ServiceError::AddDocumentTypeFirst)?;
        let digest = sha256(bytes);
        if self.digest_taken(&digest) {
            return Err(ServiceError::Conflict("DuplicateHash"));
        }
        let record = self.store.record_document(&university.user_id, student_id, &doc_type.name, bytes)?;
        let call = CallPayload::StoreHash { cert_hash: digest, doc_type_code: doc_type.code };
        let tx_hash = {
            let mut wallets = self.wallets.lock();
            let wallet = wallets
                .get_mut(&university.user_id)
                .ok_or_else(|| ServiceError::internal("university wallet missing"))?;
            self.submit_locked(wallet, self.manifest.contract, &call)?
        };
        self.persist_mempool()?;
        self.store.set_document_tx(&record.doc_id, tx_hash)?;
        Ok(UploadResponse { doc_id: record.doc_id, file_digest: digest, tx_hash })
    }

    /// Anchored on-chain, or claimed by a transaction still in the mempool.
    fn digest_taken(&self, digest: &Hash256) -> bool {
        let contract = self.manifest.contract;
        self.chain.read(|l| {
            l.get_hash(&contract, digest).is_some()
                || l.pending().iter().any(|tx| {
                    tx.to == contract
                        && matches!(CallPayload::decode(&tx.payload), Ok(CallPayload::StoreHash { cert_hash, .. }) if cert_hash == *digest)
                })
        })
    }

    fn document_view(&self, record: DocumentRecord) -> DocumentView {
        let (chain_status, block_number, revert_reason) = match record.tx_hash {
            TxRef::Pending => (ChainStatus::Unsubmitted, None, None),
            TxRef::Submitted(h) => match self.chain.lookup(&h) {
                TxLookup::Mined(r) => match r.status {
                    TxStatus::Success => (ChainStatus::Confirmed, Some(r.block_number), None),
                    TxStatus::Reverted(reason) => (ChainStatus::Reverted, Some(r.block_number), Some(reason.name())),
                },
                TxLookup::Pending | TxLookup::Unknown => (ChainStatus::Pending, None, None),
            },
        };
        DocumentView { record, chain_status, block_number, revert_reason }
    }

    pub fn university_documents(&self, university_id: &str) -> Vec<DocumentView> {
        self.store.documents_of_university(university_id).into_iter().map(|d| self.document_view(d)).collect()
    }

    // ---- student ----

    pub fn student_documents(&self, student_id: &str) -> Vec<DocumentView> {
        self.store.documents_of_student(student_id).into_iter().map(|d| self.document_view(d)).collect()
    }

    pub fn share_document(
        &self,
        student: &Principal,
        doc_id: &str,
        employer_email: &str,
        ttl_secs: Option<u64>,
    ) -> Result<ShareResponse, ServiceError> {
        let token: ShareToken = self.store.create_share_token(&student.user_id, doc_id, ttl_secs, employer_email)?;
        Ok(ShareResponse { url: token.url(), token: token.token, expires_at: token.expires_at })
    }

    // ---- public ----

    pub fn verify(&self, digest: &Hash256) -> VerificationResult {
        let contract = self.manifest.contract;
        let found = self.chain.read(|l| {
            let record = l.get_hash(&contract, digest)?;
            let onchain_name = l
                .contract(&contract)
                .and_then(|c| c.universities().get(&record.issuer))
                .map(|m| m.name.clone());
            let tx_hash = l.block(record.stored_at).and_then(|b| {
                b.transactions.iter().find(|tx| {
                    tx.from == record.issuer
                        && matches!(CallPayload::decode(&tx.payload), Ok(CallPayload::StoreHash { cert_hash, .. }) if cert_hash == *digest)
                })
            });
            Some((record, onchain_name, tx_hash.map(SignedTransaction::hash)))
        });
        let Some((record, onchain_name, tx_hash)) = found else {
            return VerificationResult::unverified();
        };
        let issuer_name = self
            .store
            .university_by_address(&record.issuer)
            .map(|u| u.name)
            .or(onchain_name)
            .unwrap_or_else(|| record.issuer.to_string());
        let doc_type = self
            .store
            .doc_type_by_code(record.doc_type_code)
            .map_or_else(|| format!("code {}", record.doc_type_code), |t| t.name);
        VerificationResult {
            verified: true,
            issuer_name: Some(issuer_name),
            university_address: Some(record.issuer),
            doc_type: Some(doc_type),
            stored_at_block: Some(record.stored_at),
            block_timestamp: Some(record.block_timestamp),
            tx_hash,
        }
    }

    pub fn resolve_share(&self, token: &str) -> Result<VerificationResult, ServiceError> {
        let (_, doc) = self.store.resolve_share_token(token)?;
        Ok(self.verify(&doc.file_digest))
    }

    pub fn tx_status(&self, hash: &Hash256) -> Result<TxStatusView, ServiceError> {
        let view = match self.chain.lookup(hash) {
            TxLookup::Unknown => return Err(ServiceError::NotFound("UnknownTransaction")),
            TxLookup::Pending => TxStatusView {
                tx_hash: *hash,
                status: "pending",
                revert_reason: None,
                block_number: None,
                gas_used: None,
                fee_wei: None,
                confirmation_delay: None,
            },
            TxLookup::Mined(r) => TxStatusView {
                tx_hash: *hash,
                status: match r.status {
                    TxStatus::Success => "success",
                    TxStatus::Reverted(_) => "reverted",
                },
                revert_reason: match r.status {
                    TxStatus::Success => None,
                    TxStatus::Reverted(reason) => Some(reason.name()),
                },
                block_number: Some(r.block_number),
                gas_used: Some(r.gas_used),
                fee_wei: Some(r.fee),
                confirmation_delay: Some(r.confirmation_delay),
            },
        };
        Ok(view)
    }
}

fn read_mempool(path: &Path) -> Result<Vec<SignedTransaction>, ServiceError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut txs: Vec<SignedTransaction> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(ServiceError::internal)?;
    // Per-sender nonce order is what resubmission requires.
    txs.sort_by_key(|tx| (tx.from, tx.nonce));
    Ok(txs)
}

fn load_wallets(dir: &Path) -> Result<HashMap<String, WalletEntry>, ServiceError> {
    let mut wallets = HashMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let Some(user_id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else { continue };
        let wallet = WalletEntry::load(&path).map_err(|e| ServiceError::internal(format!("{}: {e}", path.display())))?;
        wallets.insert(user_id, wallet);
    }
    Ok(wallets)
}
