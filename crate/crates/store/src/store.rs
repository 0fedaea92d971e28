use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use credchain_core::{sha256, Address, Hash256};
use parking_lot::{Mutex, RwLock};

use crate::env::{Clock, Entropy, OsEntropy, SystemClock};
use crate::image::{self, StoreImage, StoredUser};
use crate::model::{
    DocType, DocumentRecord, NewUser, Principal, Role, ShareToken, StudentProfile, TxRef,
    UserAccount,
};
use crate::notifier::{Notification, Notifier, OutboxNotifier};
use crate::password::{self, PasswordDigest, MIN_PASSWORD_LEN, SALT_LEN};
use crate::StoreError;

pub const DEFAULT_SHARE_TTL_SECS: u64 = 30 * 24 * 60 * 60;

const IMAGE_FILE: &str = "store.json";
const FILES_DIR: &str = "files";
const OUTBOX_FILE: &str = "outbox.jsonl";

pub struct StoreOptions {
    pub clock: Arc<dyn Clock>,
    pub entropy: Box<dyn Entropy>,
    /// Defaults to `outbox.jsonl` inside the store directory.
    pub notifier: Option<Arc<dyn Notifier>>,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { clock: Arc::new(SystemClock), entropy: Box::new(OsEntropy), notifier: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewStudent {
    pub name: String,
    pub email: String,
    pub password: String,
    pub university_id: String,
}

enum Files {
    Dir(PathBuf),
    Memory(RwLock<HashMap<Hash256, Vec<u8>>>),
}

/// Concurrent readers, one writer. Every mutation is applied to a draft,
/// persisted, then published, so a failed write leaves memory unchanged.
pub struct Store {
    root: Option<PathBuf>,
    state: RwLock<StoreImage>,
    entropy: Mutex<Box<dyn Entropy>>,
    clock: Arc<dyn Clock>,
    notifier: Arc<dyn Notifier>,
    files: Files,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish_non_exhaustive()
    }
}

impl Store {
    /// Opens (or creates) a store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>, options: StoreOptions) -> Result<Store, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(dir.join(FILES_DIR))?;
        let loaded = image::load(&dir.join(IMAGE_FILE))?.unwrap_or_default();
        let mut entropy = options.entropy;
        if let Some(pos) = &loaded.entropy_position {
            let pos = pos.parse().map_err(|_| StoreError::CorruptStore("entropy position".into()))?;
            entropy.resume(pos);
        }
        let notifier = options
            .notifier
            .unwrap_or_else(|| Arc::new(OutboxNotifier::new(dir.join(OUTBOX_FILE))));
        Ok(Store {
            files: Files::Dir(dir.join(FILES_DIR)),
            root: Some(dir),
            state: RwLock::new(loaded),
            entropy: Mutex::new(entropy),
            clock: options.clock,
            notifier,
        })
    }

    pub fn in_memory(options: StoreOptions) -> Store {
        let notifier = options
            .notifier
            .unwrap_or_else(|| Arc::new(crate::notifier::MemoryNotifier::default()));
        Store {
            root: None,
            state: RwLock::new(StoreImage::default()),
            entropy: Mutex::new(options.entropy),
            clock: options.clock,
            notifier,
            files: Files::Memory(RwLock::new(HashMap::new())),
        }
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    /// Bytes of the current on-disk image format for this state.
    pub fn export_image(&self) -> Vec<u8> {
        image::encode(&self.state.read())
    }

    /// Rewrites the image from memory. Mutations already persist; this is for
    /// explicit checkpoints.
    pub fn persist(&self) -> Result<(), StoreError> {
        let state = self.state.read();
        if let Some(root) = &self.root {
            image::write_atomic(&root.join(IMAGE_FILE), &image::encode(&state))?;
        }
        Ok(())
    }

    fn mutate<T>(
        &self,
        f: impl FnOnce(&mut StoreImage, &mut dyn Entropy, u64) -> Result<T, StoreError>,
    ) -> Result<T, StoreError> {
        let mut state = self.state.write();
        let mut entropy = self.entropy.lock();
        let mut draft = state.clone();
        let out = f(&mut draft, entropy.as_mut(), self.clock.now())?;
        draft.entropy_position = entropy.checkpoint().map(|p| p.to_string());
        if let Some(root) = &self.root {
            image::write_atomic(&root.join(IMAGE_FILE), &image::encode(&draft))?;
        }
        *state = draft;
        Ok(out)
    }

    // ---- accounts ----

    pub fn create_user(&self, new: NewUser) -> Result<UserAccount, StoreError> {
        if new.role == Role::Employer {
            return Err(StoreError::UnsupportedRole(Role::Employer));
        }
        let email = normalize_email(&new.email)?;
        if new.password.chars().count() < MIN_PASSWORD_LEN {
            return Err(StoreError::WeakPassword);
        }
        let name = new.name.trim().to_owned();
        if name.is_empty() {
            return Err(StoreError::InvalidArgument("name must not be empty".into()));
        }
        match (new.role, new.linked_address) {
            (Role::Admin | Role::University, None) => {
                return Err(StoreError::InvalidArgument(format!("{} requires an address", new.role)))
            }
            (Role::Student, Some(_)) => {
                return Err(StoreError::InvalidArgument("students have no chain address".into()))
            }
            _ => {}
        }
        self.mutate(|state, entropy, now| {
            insert_user(state, entropy, now, new.role, email, &new.password, name, new.country, new.linked_address)
        })
    }

    /// Returns `None` for every failure: unknown email, wrong password and
    /// disabled account are indistinguishable.
    pub fn authenticate(&self, email: &str, password: &str) -> Option<Principal> {
        let email = normalize_email(email).ok();
        let state = self.state.read();
        let mut found = None;
        let mut checked = false;
        for user in state.users.iter().filter(|u| Some(&u.email) == email.as_ref()) {
            checked = true;
            if user.password.matches(password) && !user.disabled && found.is_none() {
                found = Some(Principal { user_id: user.user_id.clone(), role: user.role });
            }
        }
        if !checked {
            password::dummy_check(password);
        }
        found
    }

    pub fn user(&self, user_id: &str) -> Option<UserAccount> {
        self.state.read().users.iter().find(|u| u.user_id == user_id).map(public_view)
    }

    pub fn users(&self, role: Role) -> Vec<UserAccount> {
        self.state.read().users.iter().filter(|u| u.role == role).map(public_view).collect()
    }

    /// Enabled university accounts.
    pub fn universities(&self) -> Vec<UserAccount> {
        self.users(Role::University).into_iter().filter(|u| !u.disabled).collect()
    }

    pub fn university(&self, university_id: &str) -> Option<UserAccount> {
        self.user(university_id).filter(|u| u.role == Role::University)
    }

    /// Includes disabled accounts so already anchored digests keep their issuer.
    pub fn university_by_address(&self, address: &Address) -> Option<UserAccount> {
        self.state
            .read()
            .users
            .iter()
            .find(|u| u.role == Role::University && u.linked_address.as_ref() == Some(address))
            .map(public_view)
    }

    /// Disables login and hides the account from listings; nothing is deleted.
    pub fn disable_user(&self, user_id: &str) -> Result<UserAccount, StoreError> {
        self.mutate(|state, _, _| {
            let user = state
                .users
                .iter_mut()
                .find(|u| u.user_id == user_id)
                .ok_or(StoreError::UnknownUser)?;
            user.disabled = true;
            Ok(public_view(user))
        })
    }

    // ---- students ----

    /// Used both for self-registration and for universities adding students.
    pub fn register_student(&self, new: NewStudent) -> Result<StudentProfile, StoreError> {
        let email = normalize_email(&new.email)?;
        if new.password.chars().count() < MIN_PASSWORD_LEN {
            return Err(StoreError::WeakPassword);
        }
        let name = new.name.trim().to_owned();
        if name.is_empty() {
            return Err(StoreError::InvalidArgument("name must not be empty".into()));
        }
        self.mutate(|state, entropy, now| {
            let uni_ok = state.users.iter().any(|u| {
                u.user_id == new.university_id && u.role == Role::University && !u.disabled
            });
            if !uni_ok {
                return Err(StoreError::UnknownUniversity);
            }
            let account =
                insert_user(state, entropy, now, Role::Student, email, &new.password, name, None, None)?;
            let profile = StudentProfile {
                student_id: account.user_id,
                name: account.name,
                university_id: new.university_id.clone(),
                email: account.email,
            };
            state.students.push(profile.clone());
            Ok(profile)
        })
    }

    pub fn student(&self, student_id: &str) -> Option<StudentProfile> {
        self.state.read().students.iter().find(|s| s.student_id == student_id).cloned()
    }

    pub fn students(&self) -> Vec<StudentProfile> {
        self.state.read().students.clone()
    }

    pub fn students_of(&self, university_id: &str) -> Vec<StudentProfile> {
        self.state.read().students.iter().filter(|s| s.university_id == university_id).cloned().collect()
    }

    // ---- document types ----

    /// Adding an existing name returns the existing entry.
    pub fn add_doc_type(&self, name: &str) -> Result<DocType, StoreError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(StoreError::InvalidArgument("document type name must not be empty".into()));
        }
        if let Some(existing) = self.doc_type(name) {
            return Ok(existing);
        }
        self.mutate(|state, _, _| {
            if let Some(existing) = state.doc_types.iter().find(|t| t.name == name) {
                return Ok(existing.clone());
            }
            let code = u16::try_from(state.doc_types.len() + 1)
                .map_err(|_| StoreError::InvalidArgument("document type catalog is full".into()))?;
            let entry = DocType { code, name: name.to_owned() };
            state.doc_types.push(entry.clone());
            Ok(entry)
        })
    }

    pub fn doc_types(&self) -> Vec<DocType> {
        self.state.read().doc_types.clone()
    }

    pub fn doc_type(&self, name: &str) -> Option<DocType> {
        self.state.read().doc_types.iter().find(|t| t.name == name.trim()).cloned()
    }

    pub fn doc_type_by_code(&self, code: u16) -> Option<DocType> {
        self.state.read().doc_types.iter().find(|t| t.code == code).cloned()
    }

    // ---- documents ----

    /// Stores the file content-addressed and records it with `tx_hash` pending.
    pub fn record_document(
        &self,
        issuer_university_id: &str,
        student_id: &str,
        doc_type: &str,
        bytes: &[u8],
    ) -> Result<DocumentRecord, StoreError> {
        let digest = sha256(bytes);
        {
            let state = self.state.read();
            if !state.users.iter().any(|u| u.user_id == issuer_university_id && u.role == Role::University) {
                return Err(StoreError::UnknownUniversity);
            }
            if !state.students.iter().any(|s| s.student_id == student_id) {
                return Err(StoreError::UnknownStudent);
            }
            if !state.doc_types.iter().any(|t| t.name == doc_type) {
                return Err(StoreError::AddDocumentTypeFirst);
            }
        }
        self.write_file(&digest, bytes)?;
        self.mutate(|state, _, now| {
            let record = DocumentRecord {
                doc_id: format!("DOC-{:06}", state.documents.len() + 1),
                student_id: student_id.to_owned(),
                issuer_university_id: issuer_university_id.to_owned(),
                doc_type: doc_type.to_owned(),
                file_digest: digest,
                tx_hash: TxRef::Pending,
                uploaded_at: now,
            };
            state.documents.push(record.clone());
            Ok(record)
        })
    }

    /// Sets the anchoring transaction. Once set it never changes.
    pub fn set_document_tx(&self, doc_id: &str, tx_hash: Hash256) -> Result<DocumentRecord, StoreError> {
        self.mutate(|state, _, _| {
            let doc = state
                .documents
                .iter_mut()
                .find(|d| d.doc_id == doc_id)
                .ok_or(StoreError::UnknownDocument)?;
            match doc.tx_hash {
                TxRef::Pending => doc.tx_hash = TxRef::Submitted(tx_hash),
                TxRef::Submitted(h) if h == tx_hash => {}
                TxRef::Submitted(_) => return Err(StoreError::TxHashAlreadySet),
            }
            Ok(doc.clone())
        })
    }

    pub fn document(&self, doc_id: &str) -> Option<DocumentRecord> {
        self.state.read().documents.iter().find(|d| d.doc_id == doc_id).cloned()
    }

    pub fn documents(&self) -> Vec<DocumentRecord> {
        self.state.read().documents.clone()
    }

    pub fn documents_of_student(&self, student_id: &str) -> Vec<DocumentRecord> {
        self.filter_documents(|d| d.student_id == student_id)
    }

    pub fn documents_of_university(&self, university_id: &str) -> Vec<DocumentRecord> {
        self.filter_documents(|d| d.issuer_university_id == university_id)
    }

    pub fn documents_with_digest(&self, digest: &Hash256) -> Vec<DocumentRecord> {
        self.filter_documents(|d| d.file_digest == *digest)
    }

    fn filter_documents(&self, keep: impl Fn(&DocumentRecord) -> bool) -> Vec<DocumentRecord> {
        self.state.read().documents.iter().filter(|d| keep(d)).cloned().collect()
    }

    /// Reads stored bytes back, checking they still hash to `digest`.
    pub fn read_file(&self, digest: &Hash256) -> Result<Vec<u8>, StoreError> {
        let bytes = match &self.files {
            Files::Dir(dir) => match fs::read(dir.join(digest.to_hex())) {
                Ok(b) => b,
                Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::UnknownDocument),
                Err(e) => return Err(e.into()),
            },
            Files::Memory(map) => map.read().get(digest).cloned().ok_or(StoreError::UnknownDocument)?,
        };
        if sha256(&bytes) != *digest {
            return Err(StoreError::CorruptStore(format!("file {digest} does not match its digest")));
        }
        Ok(bytes)
    }

    fn write_file(&self, digest: &Hash256, bytes: &[u8]) -> Result<(), StoreError> {
        match &self.files {
            Files::Dir(dir) => {
                let path = dir.join(digest.to_hex());
                if !path.exists() {
                    image::write_atomic(&path, bytes)?;
                }
            }
            Files::Memory(map) => {
                map.write().entry(*digest).or_insert_with(|| bytes.to_vec());
            }
        }
        Ok(())
    }

    // ---- share tokens ----

    /// Issues a token for `doc_id` and sends the link to `recipient`.
    pub fn create_share_token(
        &self,
        student_id: &str,
        doc_id: &str,
        ttl_secs: Option<u64>,
        recipient: &str,
    ) -> Result<ShareToken, StoreError> {
        let recipient = normalize_email(recipient)?;
        let ttl = ttl_secs.unwrap_or(DEFAULT_SHARE_TTL_SECS);
        if ttl == 0 {
            return Err(StoreError::InvalidArgument("ttl must be positive".into()));
        }
        let token = self.mutate(|state, entropy, now| {
            let doc = state
                .documents
                .iter()
                .find(|d| d.doc_id == doc_id)
                .ok_or(StoreError::UnknownDocument)?;
            if doc.student_id != student_id {
                return Err(StoreError::NotDocumentOwner);
            }
            let mut raw = [0u8; 32];
            entropy.fill(&mut raw);
            let token = ShareToken {
                token: hex::encode(raw),
                doc_id: doc_id.to_owned(),
                created_at: now,
                expires_at: now.saturating_add(ttl),
                revoked: false,
            };
            state.share_tokens.push(token.clone());
            Ok(token)
        })?;
        self.notifier.send(&Notification {
            to: recipient,
            subject: format!("Shared document {doc_id}"),
            share_url: token.url(),
        })?;
        Ok(token)
    }

    /// Valid while `now <= expires_at` and not revoked.
    pub fn resolve_share_token(&self, token: &str) -> Result<(ShareToken, DocumentRecord), StoreError> {
        let state = self.state.read();
        let entry = state
            .share_tokens
            .iter()
            .find(|t| t.token == token)
            .ok_or(StoreError::UnknownToken)?;
        if entry.revoked {
            return Err(StoreError::Revoked);
        }
        if self.clock.now() > entry.expires_at {
            return Err(StoreError::Expired);
        }
        let doc = state
            .documents
            .iter()
            .find(|d| d.doc_id == entry.doc_id)
            .ok_or(StoreError::UnknownDocument)?;
        Ok((entry.clone(), doc.clone()))
    }

    pub fn revoke_share_token(&self, student_id: &str, token: &str) -> Result<ShareToken, StoreError> {
        self.mutate(|state, _, _| {
            let idx = state
                .share_tokens
                .iter()
                .position(|t| t.token == token)
                .ok_or(StoreError::UnknownToken)?;
            let doc_id = &state.share_tokens[idx].doc_id;
            let owner = state.documents.iter().find(|d| &d.doc_id == doc_id).map(|d| d.student_id.as_str());
            if owner != Some(student_id) {
                return Err(StoreError::NotDocumentOwner);
            }
            state.share_tokens[idx].revoked = true;
            Ok(state.share_tokens[idx].clone())
        })
    }

    pub fn share_tokens(&self) -> Vec<ShareToken> {
        self.state.read().share_tokens.clone()
    }

    /// Draws fresh random bytes from the store's entropy source, advancing the
    /// persisted stream position.
    pub fn random_bytes<const N: usize>(&self) -> Result<[u8; N], StoreError> {
        self.mutate(|_, entropy, _| {
            let mut out = [0u8; N];
            entropy.fill(&mut out);
            Ok(out)
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn insert_user(
    state: &mut StoreImage,
    entropy: &mut dyn Entropy,
    now: u64,
    role: Role,
    email: String,
    password: &str,
    name: String,
    country: Option<String>,
    linked_address: Option<Address>,
) -> Result<UserAccount, StoreError> {
    if state.users.iter().any(|u| u.role == role && u.email == email) {
        return Err(StoreError::DuplicateEmail);
    }
    let mut salt = [0u8; SALT_LEN];
    entropy.fill(&mut salt);
    let ordinal = state.users.iter().filter(|u| u.role == role).count() + 1;
    let user = StoredUser {
        user_id: role.user_id(ordinal),
        role,
        email,
        name,
        country: country.map(|c| c.trim().to_owned()).filter(|c| !c.is_empty()),
        linked_address,
        disabled: false,
        created_at: now,
        password: PasswordDigest::new(salt, password),
    };
    let view = public_view(&user);
    state.users.push(user);
    Ok(view)
}

fn public_view(user: &StoredUser) -> UserAccount {
    UserAccount {
        user_id: user.user_id.clone(),
        role: user.role,
        email: user.email.clone(),
        name: user.name.clone(),
        country: user.country.clone(),
        linked_address: user.linked_address,
        disabled: user.disabled,
        created_at: user.created_at,
    }
}

fn normalize_email(email: &str) -> Result<String, StoreError> {
    let email = email.trim().to_ascii_lowercase();
    let valid = email.split_once('@').is_some_and(|(local, domain)| !local.is_empty() && !domain.is_empty())
        && !email.chars().any(char::is_whitespace);
    if valid {
        Ok(email)
    } else {
        Err(StoreError::InvalidArgument(format!("invalid email `{email}`")))
    }
}
