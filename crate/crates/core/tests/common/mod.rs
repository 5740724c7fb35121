//! Shared checks for the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod fields;
pub mod mech;
pub mod mission;
pub mod nav;
pub mod orbit;
pub mod sysid;
pub mod topology;

use std::path::PathBuf;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}
