//! Shared data layer: namespaced key-value store with ordered change feeds.
//!
//! Namespaces: `rnib` and `uenib` (platform writes only), `xapp:<name>`
//! (private to one xApp), `topic:<name>` (written through publish only).

use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SdlError {
    #[error("`{actor}` may not write namespace `{namespace}`")]
    Forbidden { actor: String, namespace: String },
    #[error("not found: {0}")]
    NotFound(String),
}

/// Who is performing an SDL operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Actor {
    Platform,
    Xapp(String),
}

impl Actor {
    fn label(&self) -> String {
        match self {
            Actor::Platform => "platform".into(),
            Actor::Xapp(n) => format!("xapp:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Change {
    pub seq: u64,
    pub namespace: String,
    pub key: String,
    /// `None` for deletions.
    pub value: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WatchId(u64);

#[derive(Debug, Default)]
pub struct Sdl {
    namespaces: BTreeSet<String>,
    data: BTreeMap<(String, String), Value>,
    log: Vec<Change>,
    seq: u64,
    watches: BTreeMap<WatchId, (String, u64)>,
    next_watch: u64,
}

impl Sdl {
    pub fn new() -> Self {
        let mut s = Sdl::default();
        s.create_namespace("rnib");
        s.create_namespace("uenib");
        s
    }

    pub fn create_namespace(&mut self, ns: &str) {
        self.namespaces.insert(ns.to_owned());
    }

    pub fn drop_namespace(&mut self, ns: &str) {
        self.namespaces.remove(ns);
        self.data.retain(|(n, _), _| n != ns);
    }

    pub fn has_namespace(&self, ns: &str) -> bool {
        self.namespaces.contains(ns)
    }

    fn check_write(&self, actor: &Actor, ns: &str) -> Result<(), SdlError> {
        if !self.namespaces.contains(ns) {
            return Err(SdlError::NotFound(format!("namespace {ns}")));
        }
        let allowed = match actor {
            Actor::Platform => true,
            Actor::Xapp(name) => ns.strip_prefix("xapp:") == Some(name.as_str()),
        };
        if allowed {
            Ok(())
        } else {
            Err(SdlError::Forbidden {
                actor: actor.label(),
                namespace: ns.to_owned(),
            })
        }
    }

    pub fn get(&self, ns: &str, key: &str) -> Result<&Value, SdlError> {
        if !self.namespaces.contains(ns) {
            return Err(SdlError::NotFound(format!("namespace {ns}")));
        }
        self.data
            .get(&(ns.to_owned(), key.to_owned()))
            .ok_or_else(|| SdlError::NotFound(format!("{ns}/{key}")))
    }

    pub fn keys(&self, ns: &str) -> Vec<String> {
        self.data
            .keys()
            .filter(|(n, _)| n == ns)
            .map(|(_, k)| k.clone())
            .collect()
    }

    pub fn put(&mut self, actor: &Actor, ns: &str, key: &str, value: Value) -> Result<(), SdlError> {
        self.check_write(actor, ns)?;
        self.data
            .insert((ns.to_owned(), key.to_owned()), value.clone());
        self.record(ns, key, Some(value));
        Ok(())
    }

    pub fn delete(&mut self, actor: &Actor, ns: &str, key: &str) -> Result<(), SdlError> {
        self.check_write(actor, ns)?;
        if self
            .data
            .remove(&(ns.to_owned(), key.to_owned()))
            .is_none()
        {
            return Err(SdlError::NotFound(format!("{ns}/{key}")));
        }
        self.record(ns, key, None);
        Ok(())
    }

    fn record(&mut self, ns: &str, key: &str, value: Option<Value>) {
        self.seq += 1;
        if self.watches.values().any(|(w, _)| w == ns) {
            self.log.push(Change {
                seq: self.seq,
                namespace: ns.to_owned(),
                key: key.to_owned(),
                value,
            });
        }
    }

    /// Starts a change feed on a namespace; only later commits are delivered.
    pub fn watch(&mut self, ns: &str) -> Result<WatchId, SdlError> {
        if !self.namespaces.contains(ns) {
            return Err(SdlError::NotFound(format!("namespace {ns}")));
        }
        self.next_watch += 1;
        let id = WatchId(self.next_watch);
        self.watches.insert(id, (ns.to_owned(), self.seq));
        Ok(id)
    }

    pub fn unwatch(&mut self, id: WatchId) {
        self.watches.remove(&id);
        self.compact();
    }

    /// Changes committed since the last poll, in commit order.
    pub fn poll(&mut self, id: WatchId) -> Vec<Change> {
        let Some((ns, cursor)) = self.watches.get(&id).cloned() else {
            return Vec::new();
        };
        let out: Vec<Change> = self
            .log
            .iter()
            .filter(|c| c.seq > cursor && c.namespace == ns)
            .cloned()
            .collect();
        self.watches.get_mut(&id).unwrap().1 = self.seq;
        self.compact();
        out
    }

    fn compact(&mut self) {
        let floor = self.watches.values().map(|(_, c)| *c).min();
        match floor {
            Some(f) => self.log.retain(|c| c.seq > f),
            None => self.log.clear(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn put_get_and_access_control() {
        let mut sdl = Sdl::new();
        sdl.create_namespace("xapp:mon");
        let me = Actor::Xapp("mon".into());
        sdl.put(&me, "xapp:mon", "k", json!(1)).unwrap();
        assert_eq!(sdl.get("xapp:mon", "k").unwrap(), &json!(1));
        assert!(matches!(
            sdl.put(&me, "rnib", "du-0", json!({})),
            Err(SdlError::Forbidden { .. })
        ));
        sdl.create_namespace("xapp:other");
        assert!(matches!(
            sdl.put(&me, "xapp:other", "k", json!(1)),
            Err(SdlError::Forbidden { .. })
        ));
        assert!(matches!(sdl.get("nope", "k"), Err(SdlError::NotFound(_))));
    }

    #[test]
    fn watch_sees_each_commit_once_in_order() {
        let mut sdl = Sdl::new();
        sdl.create_namespace("topic:forecast");
        sdl.put(&Actor::Platform, "topic:forecast", "latest", json!(0)).unwrap();
        let w = sdl.watch("topic:forecast").unwrap();
        for i in 1..=5 {
            sdl.put(&Actor::Platform, "topic:forecast", "latest", json!(i)).unwrap();
        }
        let got: Vec<_> = sdl.poll(w).into_iter().map(|c| c.value.unwrap()).collect();
        assert_eq!(got, (1..=5).map(|i| json!(i)).collect::<Vec<_>>());
        assert!(sdl.poll(w).is_empty());
        sdl.delete(&Actor::Platform, "topic:forecast", "latest").unwrap();
        assert_eq!(sdl.poll(w)[0].value, None);
    }
}
