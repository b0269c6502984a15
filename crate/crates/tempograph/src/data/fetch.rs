use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::{Error, Result};

/// Environment variable overriding the dataset cache directory.
pub const CACHE_DIR_ENV: &str = "TEMPOGRAPH_CACHE_DIR";

/// Cache directory: `$TEMPOGRAPH_CACHE_DIR` or `.tempograph-cache` in the
/// working directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".tempograph-cache"))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Fetches a dataset over HTTP into `<cache_dir>/<sha256(url)>.json` with a
/// content-digest sidecar. A repeated fetch of the same URL is served from
/// the cache with zero network calls. A corrupted cache entry surfaces as
/// [`Error::HashMismatch`] and is evicted, so the next call refetches.
pub fn fetch_dataset(url: &str, cache_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(cache_dir)?;
    let key = hex_digest(url.as_bytes());
    let data_path = cache_dir.join(format!("{key}.json"));
    let digest_path = cache_dir.join(format!("{key}.sha256"));

    if data_path.exists() {
        let content = std::fs::read(&data_path)?;
        let expected = std::fs::read_to_string(&digest_path).unwrap_or_default();
        if hex_digest(&content) == expected.trim() {
            return Ok(data_path);
        }
        let _ = std::fs::remove_file(&data_path);
        let _ = std::fs::remove_file(&digest_path);
        return Err(Error::HashMismatch {
            path: data_path.display().to_string(),
        });
    }

    let body = download(url)?;
    let digest = hex_digest(&body);
    let tmp = cache_dir.join(format!("{key}.json.part"));
    std::fs::write(&tmp, &body)?;
    std::fs::rename(&tmp, &data_path)?;
    std::fs::write(&digest_path, &digest)?;
    Ok(data_path)
}

/// HTTP GET with up to 3 attempts and exponential backoff. A 404 is reported
/// immediately as [`Error::NotFound`]; other failures retry.
fn download(url: &str) -> Result<Vec<u8>> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(60))
        .build()
        .map_err(|e| Error::Fetch {
            url: url.to_string(),
            message: e.to_string(),
        })?;
    let mut last_error = String::new();
    for attempt in 0..3 {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(100 << attempt));
        }
        match client.get(url).send() {
            Ok(response) => {
                let status = response.status();
                if status.as_u16() == 404 {
                    return Err(Error::NotFound {
                        url: url.to_string(),
                        status: 404,
                    });
                }
                if !status.is_success() {
                    last_error = format!("HTTP {status}");
                    continue;
                }
                match response.bytes() {
                    Ok(bytes) => return Ok(bytes.to_vec()),
                    Err(e) => last_error = e.to_string(),
                }
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(Error::Fetch {
        url: url.to_string(),
        message: format!("gave up after 3 attempts: {last_error}"),
    })
}
