//! Static credentials file plus in-memory bearer sessions.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, SystemTime};

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(12 * 60 * 60);

/// `user:password` per line; blank lines and `#` comments ignored.
#[derive(Debug, Clone, Default)]
pub struct Credentials {
    users: HashMap<String, String>,
}

impl Credentials {
    pub fn parse(text: &str) -> Result<Self> {
        let mut users = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (user, password) = line.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!("credentials line {}: expected user:password", i + 1))
            })?;
            if user.is_empty() {
                return Err(Error::InvalidParameter(format!("credentials line {}: empty user", i + 1)));
            }
            users.insert(user.to_owned(), password.to_owned());
        }
        Ok(Credentials { users })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn check(&self, user: &str, password: &str) -> bool {
        self.users.get(user).is_some_and(|p| p == password)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Session {
    pub token: String,
    pub user: String,
    #[serde(serialize_with = "unix_seconds")]
    pub expiry: SystemTime,
}

fn unix_seconds<S: serde::Serializer>(t: &SystemTime, s: S) -> std::result::Result<S::Ok, S::Error> {
    let secs = t.duration_since(SystemTime::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    s.serialize_u64(secs)
}

#[derive(Debug)]
pub struct Auth {
    credentials: Credentials,
    sessions: Mutex<HashMap<String, Session>>,
    ttl: Duration,
}

impl Auth {
    pub fn new(credentials: Credentials, ttl: Duration) -> Self {
        Auth {
            credentials,
            sessions: Mutex::new(HashMap::new()),
            ttl,
        }
    }

    pub fn login(&self, user: &str, password: &str) -> Option<Session> {
        if !self.credentials.check(user, password) {
            return None;
        }
        let session = Session {
            token: uuid::Uuid::new_v4().simple().to_string(),
            user: user.to_owned(),
            expiry: SystemTime::now() + self.ttl,
        };
        self.sessions.lock().unwrap().insert(session.token.clone(), session.clone());
        Some(session)
    }

    /// The session's user if the token is known and not expired. Expired
    /// tokens are dropped.
    pub fn verify(&self, token: &str) -> Option<String> {
        let mut sessions = self.sessions.lock().unwrap();
        let session = sessions.get(token)?;
        if session.expiry <= SystemTime::now() {
            sessions.remove(token);
            return None;
        }
        Some(session.user.clone())
    }
}
