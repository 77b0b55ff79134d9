//! Remote dataset fetch with an on-disk cache.
//!
//! A dataset id `ID` is served as two files under a base URL:
//! `{base}/ID/data.csv` and `{base}/ID/manifest.json`. They are cached as
//! `{cache}/ID/data.csv` and `{cache}/ID/manifest.json`. A cache hit never
//! touches the network. When an expected SHA-256 of `data.csv` is given it is
//! checked on every fetch; entries that fail the check are moved under
//! `{cache}/.quarantine/`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct FetchRequest {
    pub id: String,
    pub cache_dir: PathBuf,
    pub base_url: String,
    pub expected_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedDataset {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub sha256: String,
    pub from_cache: bool,
}

const DATA_FILE: &str = "data.csv";
const MANIFEST_FILE: &str = "manifest.json";

pub fn fetch(req: &FetchRequest) -> Result<FetchedDataset> {
    if req.id.is_empty()
        || !req
            .id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        return Err(Error::InvalidArgument(format!("invalid dataset id {:?}", req.id)));
    }
    let entry = req.cache_dir.join(&req.id);
    let csv = entry.join(DATA_FILE);
    let manifest = entry.join(MANIFEST_FILE);

    if csv.is_file() && manifest.is_file() {
        let bytes = fs::read(&csv).map_err(|e| Error::io(&csv, e))?;
        let digest = sha256_hex(&bytes);
        check_hash(req, &entry, &digest)?;
        log::debug!("dataset {} served from cache", req.id);
        return Ok(FetchedDataset {
            csv,
            manifest,
            sha256: digest,
            from_cache: true,
        });
    }

    let base = req.base_url.trim_end_matches('/');
    let data = download(&format!("{base}/{}/{DATA_FILE}", req.id))?;
    let man = download(&format!("{base}/{}/{MANIFEST_FILE}", req.id))?;

    let staging = req.cache_dir.join(format!(".{}.partial", req.id));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    write_file(&staging.join(DATA_FILE), &data)?;
    write_file(&staging.join(MANIFEST_FILE), &man)?;

    let digest = sha256_hex(&data);
    check_hash(req, &staging, &digest)?;
    if entry.exists() {
        fs::remove_dir_all(&entry).map_err(|e| Error::io(&entry, e))?;
    }
    fs::rename(&staging, &entry).map_err(|e| Error::io(&entry, e))?;
    Ok(FetchedDataset {
        csv,
        manifest,
        sha256: digest,
        from_cache: false,
    })
}

fn check_hash(req: &FetchRequest, dir: &Path, found: &str) -> Result<()> {
    let Some(expected) = &req.expected_sha256 else {
        return Ok(());
    };
    if expected.eq_ignore_ascii_case(found) {
        return Ok(());
    }
    let qroot = req.cache_dir.join(".quarantine");
    fs::create_dir_all(&qroot).map_err(|e| Error::io(&qroot, e))?;
    let mut n = 0;
    let target = loop {
        let t = qroot.join(format!("{}-{n}", req.id));
        if !t.exists() {
            break t;
        }
        n += 1;
    };
    fs::rename(dir, &target).map_err(|e| Error::io(&target, e))?;
    log::warn!("dataset {} failed hash check; quarantined at {}", req.id, target.display());
    Err(Error::HashMismatch {
        id: req.id.clone(),
        expected: expected.clone(),
        found: found.to_string(),
    })
}

fn download(url: &str) -> Result<Vec<u8>> {
    let mut resp = ureq::get(url)
        .call()
        .map_err(|e| Error::Network(format!("GET {url}: {e}")))?;
    resp.body_mut()
        .with_config()
        .limit(1 << 30)
        .read_to_vec()
        .map_err(|e| Error::Network(format!("GET {url}: {e}")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
