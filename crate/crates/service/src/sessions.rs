use std::collections::HashMap;

use credchain_store::{Principal, Role, UnixSeconds};
use parking_lot::{Mutex, RwLock};
use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

/// A bearer session. The role is fixed when the token is issued.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionPrincipal {
    pub token: String,
    pub user_id: String,
    pub role: Role,
    pub expires_at: UnixSeconds,
}

impl SessionPrincipal {
    pub fn principal(&self) -> Principal {
        Principal { user_id: self.user_id.clone(), role: self.role }
    }
}

/// In-memory session table; sessions do not survive a restart.
pub(crate) struct Sessions {
    ttl_secs: u64,
    rng: Mutex<ChaCha20Rng>,
    live: RwLock<HashMap<String, SessionPrincipal>>,
}

impl Sessions {
    pub fn new(ttl_secs: u64, rng: ChaCha20Rng) -> Self {
        Sessions { ttl_secs, rng: Mutex::new(rng), live: RwLock::default() }
    }

    pub fn issue(&self, principal: Principal, now: UnixSeconds) -> SessionPrincipal {
        let mut raw = [0u8; 32];
        self.rng.lock().fill_bytes(&mut raw);
        let session = SessionPrincipal {
            token: hex::encode(raw),
            user_id: principal.user_id,
            role: principal.role,
            expires_at: now.saturating_add(self.ttl_secs),
        };
        let mut live = self.live.write();
        live.retain(|_, s| s.expires_at > now);
        live.insert(session.token.clone(), session.clone());
        session
    }

    /// Valid while `now < expires_at`.
    pub fn lookup(&self, token: &str, now: UnixSeconds) -> Option<SessionPrincipal> {
        self.live.read().get(token).filter(|s| now < s.expires_at).cloned()
    }

    pub fn revoke(&self, token: &str) {
        self.live.write().remove(token);
    }

    pub fn revoke_user(&self, user_id: &str) {
        self.live.write().retain(|_, s| s.user_id != user_id);
    }
}
