//! Binary index snapshots: magic, format version, scalar tag, payload length
//! and SHA-256, then the bincode-encoded index.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::index::UnifiedIndex;
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"SPADASIX";
pub const FORMAT_VERSION: u32 = 1;
const TAG_LEN: usize = 8;
const HEADER_LEN: usize = MAGIC.len() + 4 + TAG_LEN + 8 + 32;

fn tag_bytes(tag: &str) -> [u8; TAG_LEN] {
    let mut out = [0u8; TAG_LEN];
    out[..tag.len()].copy_from_slice(tag.as_bytes());
    out
}

pub fn write_index<T: Scalar, W: Write>(index: &UnifiedIndex<T>, mut out: W) -> Result<()> {
    let payload = bincode::serialize(index).map_err(|e| Error::Snapshot(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&tag_bytes(T::TAG))?;
    out.write_all(&(payload.len() as u64).to_le_bytes())?;
    out.write_all(&Sha256::digest(&payload))?;
    out.write_all(&payload)?;
    out.flush()?;
    Ok(())
}

pub fn read_index<T: Scalar, R: Read>(mut input: R) -> Result<UnifiedIndex<T>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Snapshot("not an index snapshot".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checksum);
    }
    let (header, payload) = bytes.split_at(HEADER_LEN);
    let version = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    if header[12..20] != tag_bytes(T::TAG) {
        let found = String::from_utf8_lossy(&header[12..20]).trim_end_matches('\0').to_string();
        return Err(Error::Snapshot(format!(
            "snapshot holds {found} coordinates, expected {}",
            T::TAG
        )));
    }
    let len = u64::from_le_bytes(header[20..28].try_into().expect("8 bytes"));
    if payload.len() as u64 != len || Sha256::digest(payload).as_slice() != &header[28..60] {
        return Err(Error::Checksum);
    }
    bincode::deserialize(payload).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn save_index<T: Scalar>(index: &UnifiedIndex<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_index(index, std::io::BufWriter::new(file))
}

pub fn load_index<T: Scalar>(path: &Path) -> Result<UnifiedIndex<T>> {
    let file = std::fs::File::open(path)?;
    read_index(std::io::BufReader::new(file))
}
