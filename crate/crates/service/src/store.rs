//! JSON-file persistence. Sessions live in `<root>/sessions/<id>.json` and
//! lexicons in `<root>/lexicons/<owner>.json`. Files are replaced by
//! writing a sibling temp file and renaming it over the target.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;
use verbum_core::lexicon::Lexicon;

use crate::error::ServiceError;
use crate::session::{CreateSession, Session};

pub const DEFAULT_OWNER: &str = "default";

type Slot = Arc<Mutex<Session>>;

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    sessions: RwLock<HashMap<String, Slot>>,
    next_id: Mutex<u64>,
    lexicons: Mutex<()>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, ServiceError> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
        && !name.starts_with('.')
}

impl Store {
    /// Opens (creating if needed) a data directory and loads every session.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        fs::create_dir_all(root.join("sessions"))?;
        fs::create_dir_all(root.join("lexicons"))?;
        let mut sessions = HashMap::new();
        let mut max_id = 0;
        for entry in fs::read_dir(root.join("sessions"))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let session: Session = serde_json::from_slice(&fs::read(&path)?)
                .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
            if let Some(n) = session.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
            sessions.insert(session.id.clone(), Arc::new(Mutex::new(session)));
        }
        Ok(Self {
            root,
            sessions: RwLock::new(sessions),
            next_id: Mutex::new(max_id + 1),
            lexicons: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    fn lexicon_path(&self, owner: &str) -> PathBuf {
        self.root.join("lexicons").join(format!("{owner}.json"))
    }

    fn persist(&self, session: &Session) -> Result<(), ServiceError> {
        write_atomic(&self.session_path(&session.id), &to_json(session)?)
    }

    fn slot(&self, id: &str) -> Result<Slot, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id:?}")))
    }

    pub fn create(&self, req: CreateSession) -> Result<Session, ServiceError> {
        let mut next = self.next_id.lock().expect("id counter poisoned");
        let id = format!("s{}", *next);
        let session = Session::create(id.clone(), req)?;
        self.persist(&session)?;
        *next += 1;
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Session, ServiceError> {
        Ok(self.slot(id)?.lock().expect("session poisoned").clone())
    }

    /// Runs `f` on a copy of the session under its lock. The copy is kept,
    /// and persisted, only if `f` succeeds and changed something.
    pub fn update<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<T, ServiceError>,
    ) -> Result<(T, Session), ServiceError> {
        let slot = self.slot(id)?;
        let mut guard = slot.lock().expect("session poisoned");
        let mut draft = guard.clone();
        let out = f(&mut draft)?;
        if draft != *guard {
            self.persist(&draft)?;
            if let Some(lex) = draft.lexicon() {
                if guard.lexicon().is_none() {
                    self.put_lexicon(lex.owner(), lex.clone())?;
                }
            }
            *guard = draft;
        }
        Ok((out, guard.clone()))
    }

    pub fn get_lexicon(&self, owner: &str) -> Result<Lexicon, ServiceError> {
        if !valid_name(owner) {
            return Err(ServiceError::Validation(vec![format!("invalid owner {owner:?}")]));
        }
        let _guard = self.lexicons.lock().expect("lexicon lock poisoned");
        let path = self.lexicon_path(owner);
        if !path.exists() {
            if owner == DEFAULT_OWNER {
                return Ok(Lexicon::default_lexicon(5)?);
            }
            return Err(ServiceError::NotFound(format!("lexicon {owner:?}")));
        }
        serde_json::from_slice(&fs::read(&path)?)
            .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))
    }

    /// Stores a lexicon under `owner`, rewriting its owner field to match.
    pub fn put_lexicon(&self, owner: &str, lexicon: Lexicon) -> Result<Lexicon, ServiceError> {
        if !valid_name(owner) {
            return Err(ServiceError::Validation(vec![format!("invalid owner {owner:?}")]));
        }
        let lexicon = lexicon.with_owner(owner);
        let _guard = self.lexicons.lock().expect("lexicon lock poisoned");
        write_atomic(&self.lexicon_path(owner), &to_json(&lexicon)?)?;
        Ok(lexicon)
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .expect("session map poisoned")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }
}
