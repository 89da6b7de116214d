use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{Cli, Failure};

/// Record of one run. Two runs with equal [`RunManifest::hash`] produce
/// byte-identical CSV bodies.
#[derive(Clone, Debug)]
pub struct RunManifest {
    /// `(path, sha256 of the file content)`.
    pub instance: Option<(String, String)>,
    pub subcommand: String,
    /// Every flag that influences the output.
    pub flags: String,
    pub seed: u64,
    pub version: String,
    pub started: u64,
    pub finished: Option<u64>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(cli: &Cli) -> Result<Self, Failure> {
        let instance = match cli.command.instance() {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
                Some((p.display().to_string(), sha256_hex(&bytes)))
            }
            None => None,
        };
        Ok(RunManifest {
            instance,
            subcommand: cli.command.name().to_string(),
            flags: format!("{:?} n={} gamma_res={}", cli.command, cli.global.n, cli.global.gamma_res),
            seed: cli.global.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: now(),
            finished: None,
        })
    }

    fn identity(&self) -> Value {
        json!({
            "instance": self.instance.as_ref().map(|(p, h)| json!({"path": p, "sha256": h})),
            "subcommand": self.subcommand,
            "flags": self.flags,
            "seed": self.seed,
            "version": self.version,
        })
    }

    /// SHA-256 over everything except the timestamps.
    pub fn hash(&self) -> String {
        sha256_hex(self.identity().to_string().as_bytes())
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.identity();
        v["hash"] = json!(self.hash());
        v["started"] = json!(self.started);
        v["finished"] = json!(self.finished);
        v
    }

    pub fn finish(&mut self) {
        self.finished = Some(now());
    }

    pub fn write_beside(&self, out: &Path) -> Result<(), Failure> {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        let text = serde_json::to_string_pretty(&self.to_json()).expect("manifest serializes");
        std::fs::write(&name, text + "\n")?;
        Ok(())
    }
}
