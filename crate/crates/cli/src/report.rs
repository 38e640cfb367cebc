//! The JSON envelope every command can write.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunReport<T: Serialize> {
    pub schema: u32,
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub results: T,
    pub wall_time_s: f64,
    pub seed: Option<u64>,
}

pub fn digest(path: &Path, bytes: &[u8]) -> InputDigest {
    InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

impl<T: Serialize> RunReport<T> {
    pub fn new(inputs: Vec<InputDigest>, results: T, started: Instant, seed: Option<u64>) -> Self {
        Self {
            schema: SCHEMA,
            command: std::env::args().collect(),
            inputs,
            results,
            wall_time_s: started.elapsed().as_secs_f64(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
