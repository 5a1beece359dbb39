//! Name-keyed registries for the interchangeable strategy families
//! (initializers, estimators, simulation scenarios).

use crate::error::{Error, Result};

pub trait Named {
    fn name(&self) -> &'static str;
}

/// Ordered collection of trait objects looked up by [`Named::name`].
pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Adds `item`, replacing any entry already registered under its name.
    pub fn register(&mut self, item: Box<T>) -> &mut Self {
        let name = item.name();
        self.entries.retain(|e| e.name() != name);
        self.entries.push(item);
        self
    }

    pub fn with(mut self, item: Box<T>) -> Self {
        self.register(item);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|e| e.as_ref())
    }
}
