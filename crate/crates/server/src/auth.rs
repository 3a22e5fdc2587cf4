//! Password hashing, seeded accounts and session tokens.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use dashmap::DashMap;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use subtle::ConstantTimeEq;
use tsvis_core::Clock;

pub const DEFAULT_ITERATIONS: u32 = 600_000;
const SALT_LEN: usize = 16;
const HASH_LEN: usize = 32;
const TOKEN_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ordinary,
    Admin,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AuthError {
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error("missing or expired token")]
    Unauthorized,
    #[error("admin role required")]
    Forbidden,
    #[error("malformed password hash")]
    MalformedHash,
    #[error("duplicate user {0}")]
    DuplicateUser(String),
}

/// A PBKDF2-SHA256 hash in the form `pbkdf2-sha256$iterations$salt$hash`,
/// salt and hash hex encoded.
#[derive(Clone, PartialEq, Eq)]
pub struct PasswordHash {
    iterations: u32,
    salt: Vec<u8>,
    hash: Vec<u8>,
}

impl fmt::Debug for PasswordHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PasswordHash").field("iterations", &self.iterations).finish_non_exhaustive()
    }
}

fn derive(password: &str, salt: &[u8], iterations: u32) -> Vec<u8> {
    let mut out = vec![0u8; HASH_LEN];
    pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, iterations, &mut out);
    out
}

impl PasswordHash {
    pub fn new(password: &str, iterations: u32) -> Self {
        let mut salt = vec![0u8; SALT_LEN];
        rand::rng().fill_bytes(&mut salt);
        Self::with_salt(password, salt, iterations)
    }

    pub fn with_salt(password: &str, salt: Vec<u8>, iterations: u32) -> Self {
        let hash = derive(password, &salt, iterations);
        PasswordHash { iterations, salt, hash }
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Always runs the full derivation; the final comparison is constant time.
    pub fn verify(&self, password: &str) -> bool {
        let candidate = derive(password, &self.salt, self.iterations);
        candidate.ct_eq(&self.hash).into()
    }
}

impl fmt::Display for PasswordHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pbkdf2-sha256${}${}${}", self.iterations, hex::encode(&self.salt), hex::encode(&self.hash))
    }
}

impl FromStr for PasswordHash {
    type Err = AuthError;

    fn from_str(s: &str) -> Result<Self, AuthError> {
        let parts: Vec<&str> = s.split('$').collect();
        let ["pbkdf2-sha256", iterations, salt, hash] = parts[..] else {
            return Err(AuthError::MalformedHash);
        };
        let iterations: u32 = iterations.parse().map_err(|_| AuthError::MalformedHash)?;
        let salt = hex::decode(salt).map_err(|_| AuthError::MalformedHash)?;
        let hash = hex::decode(hash).map_err(|_| AuthError::MalformedHash)?;
        if iterations == 0 || salt.is_empty() || hash.len() != HASH_LEN {
            return Err(AuthError::MalformedHash);
        }
        Ok(PasswordHash { iterations, salt, hash })
    }
}

impl Serialize for PasswordHash {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PasswordHash {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserAccount {
    pub username: String,
    pub password_hash: PasswordHash,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Session {
    pub username: String,
    pub role: Role,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionToken {
    pub token: String,
    pub username: String,
    pub role: Role,
    pub expires_at: DateTime<Utc>,
}

/// Accounts are fixed at startup; sessions live in a sharded map so token
/// checks never wait on a global lock.
pub struct Auth {
    users: HashMap<String, UserAccount>,
    /// Verified in place of a missing account, so unknown users cost the
    /// same derivation as a wrong password.
    dummy: PasswordHash,
    sessions: DashMap<String, Session>,
    ttl: Duration,
    clock: Arc<dyn Clock>,
}

impl Auth {
    pub fn new(users: Vec<UserAccount>, ttl: Duration, clock: Arc<dyn Clock>) -> Result<Self, AuthError> {
        let mut by_name = HashMap::new();
        for user in users {
            if by_name.contains_key(&user.username) {
                return Err(AuthError::DuplicateUser(user.username));
            }
            by_name.insert(user.username.clone(), user);
        }
        let iterations = by_name
            .values()
            .map(|u| u.password_hash.iterations())
            .max()
            .unwrap_or(DEFAULT_ITERATIONS);
        Ok(Auth {
            users: by_name,
            dummy: PasswordHash::new("", iterations),
            sessions: DashMap::new(),
            ttl,
            clock,
        })
    }

    pub fn login(&self, username: &str, password: &str) -> Result<SessionToken, AuthError> {
        let user = self.users.get(username);
        let hash = user.map_or(&self.dummy, |u| &u.password_hash);
        let ok = hash.verify(password);
        let user = match (user, ok) {
            (Some(user), true) => user,
            _ => return Err(AuthError::InvalidCredentials),
        };
        let mut bytes = [0u8; TOKEN_LEN];
        rand::rng().fill_bytes(&mut bytes);
        let token = hex::encode(bytes);
        let expires_at = self.clock.now() + self.ttl;
        self.sessions.insert(
            token.clone(),
            Session {
                username: user.username.clone(),
                role: user.role,
                expires_at,
            },
        );
        tracing::info!(user = %user.username, "login");
        Ok(SessionToken {
            token,
            username: user.username.clone(),
            role: user.role,
            expires_at,
        })
    }

    /// The live session behind `token`. Expired sessions are dropped.
    pub fn session(&self, token: &str) -> Result<Session, AuthError> {
        let now = self.clock.now();
        let session = self.sessions.get(token).map(|s| s.clone()).ok_or(AuthError::Unauthorized)?;
        if session.expires_at <= now {
            self.sessions.remove(token);
            return Err(AuthError::Unauthorized);
        }
        Ok(session)
    }

    pub fn require_admin(&self, token: &str) -> Result<Session, AuthError> {
        let session = self.session(token)?;
        if session.role != Role::Admin {
            return Err(AuthError::Forbidden);
        }
        Ok(session)
    }

    pub fn logout(&self, token: &str) {
        self.sessions.remove(token);
    }

    /// Drops every expired session; returns how many were removed.
    pub fn purge_expired(&self) -> usize {
        let now = self.clock.now();
        let before = self.sessions.len();
        self.sessions.retain(|_, s| s.expires_at > now);
        before - self.sessions.len()
    }
}
