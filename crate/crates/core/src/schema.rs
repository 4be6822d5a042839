//! Versioning for the JSON documents read and written by this crate.

use crate::error::{Error, Result};

/// Current `schema_version` of every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn current() -> u32 {
    SCHEMA_VERSION
}

pub fn check(version: u32, what: &str) -> Result<()> {
    if version == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{what}: unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )))
    }
}
