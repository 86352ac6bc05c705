use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{parse_fasta, NucleotideSequence, SequenceError};

/// Location of the cached body for `url` inside `cache_dir`.
pub fn cache_path_for(url: &str, cache_dir: impl AsRef<Path>) -> PathBuf {
    let digest = Sha256::digest(url.as_bytes());
    cache_dir
        .as_ref()
        .join(format!("{}.fa", hex::encode(digest)))
}

/// Downloads FASTA from `url`, caching the raw body under `cache_dir`.
///
/// A cached copy is always preferred; the network is only touched on a
/// cache miss. The body is written to the cache before parsing, so a
/// malformed download still lands on disk for inspection.
pub fn fetch_remote_fasta(
    url: &str,
    cache_dir: impl AsRef<Path>,
) -> Result<Vec<NucleotideSequence>, SequenceError> {
    let path = cache_path_for(url, &cache_dir);
    if path.is_file() {
        log::debug!("fetch cache hit for {url} at {}", path.display());
        return parse_fasta(std::fs::File::open(&path)?);
    }

    log::info!("fetching {url}");
    let body = download(url)?;
    std::fs::create_dir_all(cache_dir.as_ref())?;
    let tmp = path.with_extension("fa.part");
    std::fs::write(&tmp, &body)?;
    std::fs::rename(&tmp, &path)?;
    parse_fasta(body.as_slice())
}

fn download(url: &str) -> Result<Vec<u8>, SequenceError> {
    let mut response = ureq::get(url)
        .call()
        .map_err(|e| SequenceError::Fetch(e.to_string()))?;
    response
        .body_mut()
        .with_config()
        .limit(u64::MAX)
        .read_to_vec()
        .map_err(|e| SequenceError::Fetch(e.to_string()))
}
