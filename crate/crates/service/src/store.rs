//! In-memory session table with an optional append-only JSONL journal.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use decisive_core::{ChaCha8Rng, ElicitationConfig, Question, Response, Scenario, SessionState};

use crate::error::ApiError;

pub struct SessionRecord {
    pub id: Uuid,
    pub scenario: Scenario,
    pub seed: u64,
    pub state: SessionState,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

pub type SharedRecord = Arc<Mutex<SessionRecord>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum JournalEntry {
    Created {
        id: Uuid,
        at: DateTime<Utc>,
        scenario: Scenario,
        config: ElicitationConfig,
        seed: u64,
    },
    Answered {
        id: Uuid,
        at: DateTime<Utc>,
        question: Question,
        response: Response,
    },
    Expired {
        id: Uuid,
        at: DateTime<Utc>,
    },
}

pub struct SessionStore {
    sessions: RwLock<HashMap<Uuid, SharedRecord>>,
    journal: Option<Mutex<File>>,
    idle_timeout: chrono::Duration,
}

fn build_record(
    id: Uuid,
    scenario: Scenario,
    config: ElicitationConfig,
    seed: u64,
    at: DateTime<Utc>,
) -> Result<SessionRecord, decisive_core::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = SessionState::new(scenario.matrix.clone(), config, &mut rng)?;
    Ok(SessionRecord { id, scenario, seed, state, created_at: at, updated_at: at })
}

fn corrupt(line: usize, message: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("journal line {line}: {message}"))
}

impl SessionStore {
    pub fn in_memory(idle_timeout: chrono::Duration) -> Self {
        Self { sessions: RwLock::default(), journal: None, idle_timeout }
    }

    /// Replays `path` if it exists, then appends new transitions to it.
    pub fn with_journal(path: impl AsRef<Path>, idle_timeout: chrono::Duration) -> io::Result<Self> {
        let path = path.as_ref();
        let mut sessions = HashMap::new();
        if path.exists() {
            for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: JournalEntry = serde_json::from_str(&line).map_err(|e| corrupt(n + 1, e))?;
                match entry {
                    JournalEntry::Created { id, at, scenario, config, seed } => {
                        let record = build_record(id, scenario, config, seed, at).map_err(|e| corrupt(n + 1, e))?;
                        sessions.insert(id, record);
                    }
                    JournalEntry::Answered { id, at, question, response } => {
                        let record = sessions
                            .get_mut(&id)
                            .ok_or_else(|| corrupt(n + 1, format!("answer for unknown session {id}")))?;
                        record.state.answer(question, response).map_err(|e| corrupt(n + 1, e))?;
                        record.updated_at = at;
                    }
                    JournalEntry::Expired { id, .. } => {
                        sessions.remove(&id);
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            sessions: RwLock::new(sessions.into_iter().map(|(id, r)| (id, Arc::new(Mutex::new(r)))).collect()),
            journal: Some(Mutex::new(file)),
            idle_timeout,
        })
    }

    fn append(&self, entry: &JournalEntry) -> Result<(), ApiError> {
        if let Some(journal) = &self.journal {
            let mut line = serde_json::to_string(entry).map_err(|e| ApiError::internal(e.to_string()))?;
            line.push('\n');
            let mut file = journal.lock().unwrap();
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| ApiError::internal(format!("journal write failed: {e}")))?;
        }
        Ok(())
    }

    pub fn create(
        &self,
        scenario: Scenario,
        config: ElicitationConfig,
        seed: u64,
        now: DateTime<Utc>,
    ) -> Result<SharedRecord, ApiError> {
        let id = Uuid::new_v4();
        let record = build_record(id, scenario, config, seed, now)?;
        self.append(&JournalEntry::Created {
            id,
            at: now,
            scenario: record.scenario.clone(),
            config: record.state.config().clone(),
            seed,
        })?;
        let shared = Arc::new(Mutex::new(record));
        self.sessions.write().unwrap().insert(id, shared.clone());
        Ok(shared)
    }

    pub fn get(&self, id: &str) -> Result<SharedRecord, ApiError> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        self.sessions
            .read()
            .unwrap()
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    /// Applies a real answer and journals it. The caller holds the session lock, so
    /// journal order matches application order for each session.
    pub fn answer(
        &self,
        record: &mut SessionRecord,
        question: Question,
        response: Response,
        now: DateTime<Utc>,
    ) -> Result<(), ApiError> {
        record.state.answer(question, response)?;
        record.updated_at = now;
        self.append(&JournalEntry::Answered { id: record.id, at: now, question, response })
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    pub fn purge_idle(&self, now: DateTime<Utc>) -> usize {
        let mut sessions = self.sessions.write().unwrap();
        let expired: Vec<Uuid> = sessions
            .iter()
            .filter(|(_, r)| now - r.lock().unwrap().updated_at > self.idle_timeout)
            .map(|(id, _)| *id)
            .collect();
        for id in &expired {
            sessions.remove(id);
            // Best effort: a failed write only means the session reappears after replay.
            let _ = self.append(&JournalEntry::Expired { id: *id, at: now });
        }
        expired.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
