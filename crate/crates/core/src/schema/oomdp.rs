//! Object-oriented states: objects with integer attributes, updated by
//! attribute-level effects.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Object name → attribute name → value. Ordered maps keep equality and
/// hashing canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectState {
    objects: BTreeMap<String, BTreeMap<String, i64>>,
}

impl ObjectState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_object(mut self, name: &str, attrs: &[(&str, i64)]) -> Self {
        self.objects.insert(
            name.to_string(),
            attrs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        );
        self
    }

    pub fn get(&self, object: &str, attr: &str) -> Option<i64> {
        self.objects.get(object)?.get(attr).copied()
    }

    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.objects.keys().map(String::as_str)
    }
}

impl fmt::Display for ObjectState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (obj, attrs) in &self.objects {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let body: Vec<String> = attrs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "{obj}{{{}}}", body.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOp {
    Set(i64),
    Add(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrUpdate {
    pub object: String,
    pub attr: String,
    pub op: UpdateOp,
}

impl AttrUpdate {
    pub fn add(object: &str, attr: &str, delta: i64) -> Self {
        AttrUpdate {
            object: object.into(),
            attr: attr.into(),
            op: UpdateOp::Add(delta),
        }
    }

    pub fn set(object: &str, attr: &str, value: i64) -> Self {
        AttrUpdate {
            object: object.into(),
            attr: attr.into(),
            op: UpdateOp::Set(value),
        }
    }
}

/// Applies every update in order to a copy of `state`.
pub fn apply_updates(state: &ObjectState, updates: &[AttrUpdate]) -> Result<ObjectState> {
    let mut next = state.clone();
    for u in updates {
        let attrs = next
            .objects
            .get_mut(&u.object)
            .ok_or_else(|| Error::invalid(format!("effect references missing object `{}`", u.object)))?;
        let slot = attrs.get_mut(&u.attr).ok_or_else(|| {
            Error::invalid(format!("object `{}` has no attribute `{}`", u.object, u.attr))
        })?;
        *slot = match u.op {
            UpdateOp::Set(v) => v,
            UpdateOp::Add(d) => *slot + d,
        };
    }
    Ok(next)
}
