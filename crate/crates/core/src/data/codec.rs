//! Binary store format (all integers little-endian):
//!
//! ```text
//! "EMBS" | u16 version=1 | u32 space_count
//! per space: u16 name_len | name (UTF-8) | u32 dim | u8 normalized | u64 entry_count
//! per entry: u8 kind (0=text, 1=image) | u16 key_len | key (UTF-8) | dim x f32
//! ```

use super::store::{EmbeddingSpace, EmbeddingStore, Kind};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMBS";
pub const VERSION: u16 = 1;

fn too_long(what: &str, len: usize) -> Error {
    Error::Store(format!("{what} of {len} bytes exceeds the u16 length prefix"))
}

pub fn encode(store: &EmbeddingStore) -> Result<Vec<u8>> {
    let payload: usize = store
        .space_data()
        .iter()
        .map(|s| s.entries.len() * (3 + 4 * s.space.dim))
        .sum();
    let mut out = Vec::with_capacity(10 + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.space_data().len() as u32).to_le_bytes());
    for data in store.space_data() {
        let name = data.space.name.as_bytes();
        let name_len = u16::try_from(name.len()).map_err(|_| too_long("space name", name.len()))?;
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(data.space.dim as u32).to_le_bytes());
        out.push(u8::from(data.space.normalized));
        out.extend_from_slice(&(data.entries.len() as u64).to_le_bytes());
        for e in &data.entries {
            out.push(match e.kind {
                Kind::Text => 0,
                Kind::Image => 1,
            });
            let key = e.key.as_bytes();
            let key_len = u16::try_from(key.len()).map_err(|_| too_long("key", key.len()))?;
            out.extend_from_slice(&key_len.to_le_bytes());
            out.extend_from_slice(key);
            for x in &e.vector {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Codec {
                offset: self.pos,
                message: format!(
                    "truncated {what}: need {n} bytes, {} remain",
                    self.buf.len() - self.pos
                ),
            }),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.array::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let at = self.pos;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Codec {
            offset: at,
            message: format!("{what} is not valid UTF-8"),
        })
    }

    fn invalid(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Codec {
            offset,
            message: message.into(),
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingStore> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.invalid(0, "bad magic, expected \"EMBS\""));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(r.invalid(4, format!("unsupported version {version}")));
    }
    let spaces = r.u32("space count")?;
    let mut store = EmbeddingStore::new();
    for _ in 0..spaces {
        let at = r.pos;
        let name = r.string("space name")?;
        let dim = r.u32("dim")? as usize;
        let normalized = match r.u8("normalized flag")? {
            0 => false,
            1 => true,
            other => return Err(r.invalid(r.pos - 1, format!("normalized flag {other}"))),
        };
        if store.space(&name).is_some() {
            return Err(r.invalid(at, format!("space {name:?} appears twice")));
        }
        let space = EmbeddingSpace::new(name.clone(), dim, normalized)
            .map_err(|e| r.invalid(at, e.to_string()))?;
        store.add_space(space)?;
        let count = r.u64("entry count")?;
        for _ in 0..count {
            let at = r.pos;
            let kind = match r.u8("kind")? {
                0 => Kind::Text,
                1 => Kind::Image,
                other => return Err(r.invalid(at, format!("unknown kind tag {other}"))),
            };
            let key = r.string("key")?;
            let raw = r.take(4 * dim, "vector")?;
            let vector: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
                .collect();
            store
                .insert(&name, kind, &key, vector)
                .map_err(|e| r.invalid(at, e.to_string()))?;
        }
    }
    if r.pos != bytes.len() {
        return Err(r.invalid(r.pos, "trailing bytes after last space"));
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingStore {
        let mut s = EmbeddingStore::new();
        s.add_space(EmbeddingSpace::new("clip-en", 2, true).unwrap()).unwrap();
        s.insert("clip-en", Kind::Text, "angora city", vec![0.6, 0.8]).unwrap();
        s
    }

    #[test]
    fn empty_store_is_ten_bytes() {
        let bytes = encode(&EmbeddingStore::new()).unwrap();
        // magic (4) + version (2) + space count (4)
        assert_eq!(bytes.len(), 4 + 2 + 4);
        assert_eq!(&bytes, b"EMBS\x01\x00\x00\x00\x00\x00");
        assert!(decode(&bytes).unwrap().is_empty());
    }

    #[test]
    fn single_entry_layout() {
        let bytes = encode(&sample()).unwrap();
        let expected = 10 + (2 + 7 + 4 + 1 + 8) + (1 + 2 + 11 + 8);
        assert_eq!(bytes.len(), expected);
        assert_eq!(decode(&bytes).unwrap(), sample());
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode(&sample()).unwrap();
        let cut = &bytes[..bytes.len() - 1];
        match decode(cut) {
            Err(Error::Codec { offset, message }) => {
                assert_eq!(offset, bytes.len() - 8);
                assert!(message.contains("truncated"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode(&sample()).unwrap();
        bytes[0] = b'X';
        assert!(decode(&bytes).unwrap_err().to_string().contains("magic"));
        let mut bytes = encode(&sample()).unwrap();
        bytes[4] = 2;
        assert!(decode(&bytes).unwrap_err().to_string().contains("version"));
        assert!(decode(b"EM").is_err());
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode(&sample()).unwrap();
        bytes.push(0);
        assert!(decode(&bytes).is_err());
    }
}
