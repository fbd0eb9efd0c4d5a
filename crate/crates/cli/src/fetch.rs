//! MNIST download with digest verification.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const DEFAULT_BASE_URL: &str = "https://ossci-datasets.s3.amazonaws.com/mnist/";

/// `(file name, SHA-256 of the uncompressed file)`.
pub const FILES: [(&str, &str); 4] = [
    (
        "train-images-idx3-ubyte",
        "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    ),
    (
        "train-labels-idx1-ubyte",
        "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    ),
    (
        "t10k-images-idx3-ubyte",
        "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    ),
    (
        "t10k-labels-idx1-ubyte",
        "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
    ),
];

const MAX_DOWNLOAD: u64 = 64 << 20;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn verify(name: &str, bytes: &[u8], expected: &str) -> Result<(), CliError> {
    let got = sha256_hex(bytes);
    if got != expected {
        return Err(CliError::Fetch(format!(
            "{name}: digest {got} does not match {expected}"
        )));
    }
    Ok(())
}

/// Skips files already present with the right digest.
pub fn fetch_mnist(dir: &Path, base_url: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (name, digest) in FILES {
        let target = dir.join(name);
        if target.is_file() && verify(name, &fs::read(&target)?, digest).is_ok() {
            eprintln!("{name}: present");
            continue;
        }
        let url = format!("{}/{name}.gz", base_url.trim_end_matches('/'));
        eprintln!("{name}: downloading {url}");
        let mut resp = ureq::get(&url)
            .call()
            .map_err(|e| CliError::Fetch(format!("{url}: {e}")))?;
        let gz = resp
            .body_mut()
            .with_config()
            .limit(MAX_DOWNLOAD)
            .read_to_vec()
            .map_err(|e| CliError::Fetch(format!("{url}: {e}")))?;
        let mut raw = Vec::new();
        GzDecoder::new(gz.as_slice()).read_to_end(&mut raw)?;
        verify(name, &raw, digest)?;
        fs::write(&target, raw)?;
    }
    Ok(())
}
