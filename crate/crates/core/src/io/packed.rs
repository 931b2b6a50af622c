//! Packed dataset container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "FXGPACK\0" | version u32 | count u32
//! index:   count x { id_len u16, id, offset u64, length u64, sha256 [32] }
//! records: { yaml_len u32, yaml, graph_len u32, graph,
//!            blob_count u32, blob_count x { name_len u16, name,
//!            channels u16, sample_rate u32, frames u64, f32 planar data } }
//! ```
//!
//! Readers load the header and index only; records are read on demand and
//! checked against their digest.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::IoError;
use crate::dsp::AudioBuffer;

pub const PACKED_MAGIC: &[u8; 8] = b"FXGPACK\0";
pub const PACKED_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PackedRecord {
    pub id: String,
    pub project_yaml: String,
    pub graph_json: String,
    pub blobs: Vec<(String, AudioBuffer)>,
}

fn put_str16(out: &mut Vec<u8>, s: &str) -> Result<(), IoError> {
    let n =
        u16::try_from(s.len()).map_err(|_| IoError::Container(format!("name too long: {s}")))?;
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_str32(out: &mut Vec<u8>, s: &str) -> Result<(), IoError> {
    let n = u32::try_from(s.len()).map_err(|_| IoError::Container("text too long".into()))?;
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn encode(r: &PackedRecord) -> Result<Vec<u8>, IoError> {
    let mut out = Vec::new();
    put_str32(&mut out, &r.project_yaml)?;
    put_str32(&mut out, &r.graph_json)?;
    out.extend_from_slice(&(r.blobs.len() as u32).to_le_bytes());
    for (name, buf) in &r.blobs {
        put_str16(&mut out, name)?;
        let ch = u16::try_from(buf.channels())
            .map_err(|_| IoError::Container("too many channels".into()))?;
        out.extend_from_slice(&ch.to_le_bytes());
        out.extend_from_slice(&buf.sample_rate().to_le_bytes());
        out.extend_from_slice(&(buf.frames() as u64).to_le_bytes());
        out.extend_from_slice(&buf.to_le_bytes());
    }
    Ok(out)
}

/// Write `records` to `path`. Ids must be unique.
pub fn write_packed(path: &Path, records: &[PackedRecord]) -> Result<(), IoError> {
    let mut seen = std::collections::HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(IoError::Container(format!(
                "duplicate record id `{}`",
                r.id
            )));
        }
    }
    let payloads = records.iter().map(encode).collect::<Result<Vec<_>, _>>()?;
    let index_len: usize = records.iter().map(|r| 2 + r.id.len() + 8 + 8 + 32).sum();
    let mut offset = (8 + 4 + 4 + index_len) as u64;

    let mut head = Vec::with_capacity(16 + index_len);
    head.extend_from_slice(PACKED_MAGIC);
    head.extend_from_slice(&PACKED_VERSION.to_le_bytes());
    head.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for (r, p) in records.iter().zip(&payloads) {
        put_str16(&mut head, &r.id)?;
        head.extend_from_slice(&offset.to_le_bytes());
        head.extend_from_slice(&(p.len() as u64).to_le_bytes());
        head.extend_from_slice(&Sha256::digest(p));
        offset += p.len() as u64;
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&head)?;
    for p in &payloads {
        w.write_all(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
struct IndexEntry {
    id: String,
    offset: u64,
    length: u64,
    digest: [u8; 32],
}

/// Random-access reader over a packed container.
#[derive(Debug)]
pub struct PackedReader {
    file: File,
    index: Vec<IndexEntry>,
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N], IoError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => IoError::Container("truncated container".into()),
        _ => IoError::Io(e),
    })?;
    Ok(b)
}

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| IoError::Container("record ends early".into()))?;
        let s = &self.data[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, IoError> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn text(&mut self, n: usize) -> Result<String, IoError> {
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| IoError::Container("text is not UTF-8".into()))
    }
}

impl PackedReader {
    pub fn open(path: &Path) -> Result<Self, IoError> {
        let mut file = File::open(path)?;
        if &read_exact::<8>(&mut file)? != PACKED_MAGIC {
            return Err(IoError::Container("bad magic".into()));
        }
        let version = u32::from_le_bytes(read_exact(&mut file)?);
        if version != PACKED_VERSION {
            return Err(IoError::Container(format!("unsupported version {version}")));
        }
        let count = u32::from_le_bytes(read_exact(&mut file)?);
        let mut index = Vec::with_capacity(count.min(1 << 16) as usize);
        for _ in 0..count {
            let n = u16::from_le_bytes(read_exact(&mut file)?) as usize;
            let mut id = vec![0u8; n];
            file.read_exact(&mut id)?;
            index.push(IndexEntry {
                id: String::from_utf8(id)
                    .map_err(|_| IoError::Container("id is not UTF-8".into()))?,
                offset: u64::from_le_bytes(read_exact(&mut file)?),
                length: u64::from_le_bytes(read_exact(&mut file)?),
                digest: read_exact(&mut file)?,
            });
        }
        Ok(PackedReader { file, index })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.index.iter().map(|e| e.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Read and verify one record.
    pub fn read(&mut self, id: &str) -> Result<PackedRecord, IoError> {
        let entry = self
            .index
            .iter()
            .find(|e| e.id == id)
            .cloned()
            .ok_or_else(|| IoError::MissingRecord(id.into()))?;
        self.file.seek(SeekFrom::Start(entry.offset))?;
        let mut data = Vec::new();
        (&mut self.file).take(entry.length).read_to_end(&mut data)?;
        if data.len() as u64 != entry.length || Sha256::digest(&data).as_slice() != entry.digest {
            return Err(IoError::ChecksumMismatch(id.into()));
        }
        let mut c = Cursor { data: &data, at: 0 };
        let n = c.u32()? as usize;
        let project_yaml = c.text(n)?;
        let n = c.u32()? as usize;
        let graph_json = c.text(n)?;
        let count = c.u32()?;
        let mut blobs = Vec::new();
        for _ in 0..count {
            let n = c.u16()? as usize;
            let name = c.text(n)?;
            let channels = c.u16()? as usize;
            let sr = c.u32()?;
            let frames = usize::try_from(c.u64()?)
                .map_err(|_| IoError::Container("blob too large".into()))?;
            let len = channels.checked_mul(frames).and_then(|n| n.checked_mul(4));
            let bytes = c.take(len.ok_or_else(|| IoError::Container("blob too large".into()))?)?;
            let samples = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                .collect();
            let buf = AudioBuffer::from_planar(channels, sr, samples)
                .map_err(|e| IoError::Container(e.to_string()))?;
            blobs.push((name, buf));
        }
        Ok(PackedRecord {
            id: entry.id,
            project_yaml,
            graph_json,
            blobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, v: f32) -> PackedRecord {
        PackedRecord {
            id: id.into(),
            project_yaml: format!("output_audio: \"{id}.wav\"\n"),
            graph_json: "{\"nodes\": [], \"edges\": []}\n".into(),
            blobs: vec![
                (
                    "stem0".into(),
                    AudioBuffer::from_channels(vec![vec![v, -v], vec![0.25, 0.5]], 44_100).unwrap(),
                ),
                ("mix".into(), AudioBuffer::mono(vec![v; 5], 22_050)),
            ],
        }
    }

    #[test]
    fn random_access_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pack");
        let recs: Vec<_> = (0..5)
            .map(|i| record(&format!("project_{i}"), i as f32 * 0.1))
            .collect();
        write_packed(&p, &recs).unwrap();
        let mut r = PackedReader::open(&p).unwrap();
        assert_eq!(r.len(), 5);
        assert_eq!(r.read("project_3").unwrap(), recs[3]);
        assert_eq!(r.read("project_0").unwrap(), recs[0]);
        assert!(matches!(r.read("nope"), Err(IoError::MissingRecord(_))));
    }

    #[test]
    fn corrupted_record_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pack");
        write_packed(&p, &[record("a", 0.5), record("b", 0.7)]).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        let last = bytes.len() - 3;
        bytes[last] ^= 0x40;
        std::fs::write(&p, &bytes).unwrap();
        let mut r = PackedReader::open(&p).unwrap();
        assert!(r.read("a").is_ok());
        assert!(matches!(r.read("b"), Err(IoError::ChecksumMismatch(id)) if id == "b"));
    }

    #[test]
    fn duplicate_ids_and_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pack");
        assert!(write_packed(&p, &[record("a", 0.1), record("a", 0.2)]).is_err());
        std::fs::write(&p, b"RIFF0000WAVE").unwrap();
        assert!(matches!(PackedReader::open(&p), Err(IoError::Container(_))));
    }
}
