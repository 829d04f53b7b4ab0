//! A graph kept in memory and mirrored to a Turtle file.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{RwLock, RwLockReadGuard};

use knowhow_core::query::{evaluate, BindingSet, Query};
use knowhow_core::rdf::{parse_turtle, serialize_turtle, Graph, Triple, TurtleError};
use knowhow_core::vocab;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: TurtleError },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

/// Single writer, many readers. Every mutation is flushed before it is
/// acknowledged; a failed flush leaves memory as it was.
#[derive(Debug)]
pub struct Store {
    graph: RwLock<Graph>,
    path: Option<PathBuf>,
}

impl Store {
    pub fn in_memory(graph: Graph) -> Self {
        Store {
            graph: RwLock::new(graph),
            path: None,
        }
    }

    /// Loads `path` if it exists; a missing file is an empty store that
    /// will be created on the first write.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let graph = match std::fs::read_to_string(&path) {
            Ok(text) => load(&path, &text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Graph::new(),
            Err(source) => return Err(StoreError::Read { path, source }),
        };
        Ok(Store {
            graph: RwLock::new(graph),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Graph> {
        self.graph.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn len(&self) -> usize {
        self.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn query(&self, query: &Query) -> BindingSet {
        evaluate(query, &self.read())
    }

    /// Adds the triples of `incoming` (legacy outcome spelling normalized)
    /// and returns how many were new.
    pub fn publish(&self, mut incoming: Graph) -> Result<usize, StoreError> {
        vocab::normalize(&mut incoming);
        let mut graph = self.graph.write().unwrap_or_else(|p| p.into_inner());
        let added: Vec<Triple> = incoming.iter().filter(|t| graph.insert(t.clone())).collect();
        if added.is_empty() {
            return Ok(0);
        }
        if let Some(path) = &self.path {
            if let Err(source) = write_atomically(path, &serialize_turtle(&graph)) {
                for t in &added {
                    graph.remove(t);
                }
                return Err(StoreError::Write {
                    path: path.clone(),
                    source,
                });
            }
        }
        Ok(added.len())
    }
}

fn load(path: &Path, text: &str) -> Result<Graph, StoreError> {
    let mut graph = parse_turtle(text, None).map_err(|source| StoreError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    vocab::normalize(&mut graph);
    Ok(graph)
}

/// Writes to a temporary sibling, syncs it, and renames it over `path`.
pub fn write_atomically(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    // make the rename itself durable
    std::fs::File::open(dir)?.sync_all()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIVE: &str = ":organise_conference prohow:has_step :choose_conference_venue .\n\
        :organise_catering prohow:requires :preliminary_budget .\n\
        :choose_conference_venue prohow:has_method :choose_venue_method .\n\
        :execution1 proex:has_goal :organise_conference .\n\
        :organise_catering proex:succeeded_in :execution1 .\n";

    #[test]
    fn publish_counts_new_triples_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.ttl");
        let store = Store::open(&path).unwrap();
        assert!(store.is_empty());
        assert_eq!(store.publish(parse_turtle(FIVE, None).unwrap()).unwrap(), 5);
        assert_eq!(store.publish(parse_turtle(FIVE, None).unwrap()).unwrap(), 0);
        let on_disk = std::fs::read_to_string(&path).unwrap();
        assert_eq!(on_disk, serialize_turtle(&store.read()));
        assert_eq!(Store::open(&path).unwrap().read().clone(), store.read().clone());
    }

    #[test]
    fn legacy_spelling_is_normalized() {
        let store = Store::in_memory(Graph::new());
        let n = store
            .publish(parse_turtle(":t proex:succeed_in :e . :t proex:succeeded_in :e .", None).unwrap())
            .unwrap();
        assert_eq!(n, 1);
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn failed_flush_rolls_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing-dir").join("kb.ttl");
        let store = Store::open(&path).unwrap();
        assert!(store.publish(parse_turtle(FIVE, None).unwrap()).is_err());
        assert!(store.is_empty());
    }

    #[test]
    fn unreadable_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ttl");
        std::fs::write(&path, ":a :b").unwrap();
        assert!(matches!(Store::open(&path), Err(StoreError::Parse { .. })));
        assert!(matches!(Store::open(dir.path()), Err(StoreError::Read { .. })));
    }
}
