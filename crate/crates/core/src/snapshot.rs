//! Binary index snapshots.
//!
//! All integers are little-endian. Layout, version 1:
//!
//! ```text
//! magic            8 bytes  "MNRUHNSW"
//! version          u32
//! metric           u8       0 = l2, 1 = inner product, 2 = cosine
//! m                u64
//! m_max0           u64
//! ef_construction  u64
//! level_lambda     f64 (IEEE-754 bits)
//! rng_seed         u64
//! rng_word_pos     u128     position in the level-sampling stream
//! dim              u64
//! capacity         u64
//! slot_count       u64
//! entry_point      u64      u64::MAX when absent
//! max_layer        u64
//! deleted_len      u64
//! deleted_list     deleted_len x u32, oldest first
//! node table       slot_count records:
//!   label          u64
//!   level          u32
//!   deleted        u8
//!   per layer 0..=level: degree u32, then degree x u32 slot ids
//! vectors          slot_count x dim x f32
//! ```
//!
//! Saving a loaded snapshot reproduces the input bytes exactly.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::Metric;
use crate::error::{IndexError, Result};
use crate::graph::{Label, LayeredGraph, Node, SlotId};
use crate::params::IndexParams;

pub const MAGIC: &[u8; 8] = b"MNRUHNSW";
pub const VERSION: u32 = 1;

const NO_ENTRY: u64 = u64::MAX;

struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => IndexError::Format {
                    offset: self.offset,
                    reason: format!("truncated: needed {N} more bytes"),
                },
                _ => IndexError::Io(e),
            })?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.bytes()?))
    }

    fn usize(&mut self) -> Result<usize> {
        let at = self.offset;
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.fail_at(at, format!("value {v} does not fit in usize")))
    }

    fn fail_at(&self, offset: u64, reason: impl Into<String>) -> IndexError {
        IndexError::Format {
            offset,
            reason: reason.into(),
        }
    }
}

impl LayeredGraph {
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let p = &self.params;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[p.metric.tag()])?;
        for v in [p.m as u64, p.m_max0 as u64, p.ef_construction as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&p.level_lambda.to_bits().to_le_bytes())?;
        w.write_all(&p.rng_seed.to_le_bytes())?;
        w.write_all(&self.rng.get_word_pos().to_le_bytes())?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        w.write_all(&(self.capacity as u64).to_le_bytes())?;
        w.write_all(&(self.nodes.len() as u64).to_le_bytes())?;
        let entry = self.entry_point.map_or(NO_ENTRY, |s| s.0 as u64);
        w.write_all(&entry.to_le_bytes())?;
        w.write_all(&(self.max_layer as u64).to_le_bytes())?;
        w.write_all(&(self.deleted_list.len() as u64).to_le_bytes())?;
        for s in &self.deleted_list {
            w.write_all(&s.0.to_le_bytes())?;
        }
        for node in &self.nodes {
            w.write_all(&node.label.0.to_le_bytes())?;
            w.write_all(&(node.level as u32).to_le_bytes())?;
            w.write_all(&[node.deleted as u8])?;
            for list in &node.neighbors {
                w.write_all(&(list.len() as u32).to_le_bytes())?;
                for s in list {
                    w.write_all(&s.0.to_le_bytes())?;
                }
            }
        }
        for x in &self.vectors {
            w.write_all(&x.to_bits().to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader {
            inner: r,
            offset: 0,
        };
        let magic = r.bytes::<8>()?;
        if &magic != MAGIC {
            return Err(r.fail_at(0, "bad magic bytes"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.fail_at(8, format!("unsupported version {version}")));
        }
        let at = r.offset;
        let metric =
            Metric::from_tag(r.u8()?).ok_or_else(|| r.fail_at(at, "unknown metric tag"))?;
        let params = IndexParams {
            m: r.usize()?,
            m_max0: r.usize()?,
            ef_construction: r.usize()?,
            metric,
            level_lambda: f64::from_bits(r.u64()?),
            rng_seed: r.u64()?,
        };
        let word_pos = r.u128()?;
        let dim = r.usize()?;
        let capacity = r.usize()?;
        let at = r.offset;
        let slot_count = r.usize()?;
        if slot_count > capacity {
            return Err(r.fail_at(at, format!("{slot_count} slots exceed capacity {capacity}")));
        }
        let mut graph =
            LayeredGraph::new(params, dim, capacity).map_err(|e| r.fail_at(9, e.to_string()))?;
        graph.rng = ChaCha8Rng::seed_from_u64(graph.params.rng_seed);
        graph.rng.set_word_pos(word_pos);

        let at = r.offset;
        let entry = r.u64()?;
        graph.entry_point = match entry {
            NO_ENTRY => None,
            e if (e as usize) < slot_count => Some(SlotId(e as u32)),
            e => return Err(r.fail_at(at, format!("entry point {e} out of range"))),
        };
        graph.max_layer = r.usize()?;

        let deleted_len = r.usize()?;
        let mut deleted_list = VecDeque::with_capacity(deleted_len.min(slot_count));
        for _ in 0..deleted_len {
            let at = r.offset;
            let s = r.u32()?;
            if s as usize >= slot_count {
                return Err(r.fail_at(at, format!("deleted slot {s} out of range")));
            }
            deleted_list.push_back(SlotId(s));
        }

        let mut nodes = Vec::with_capacity(slot_count);
        for _ in 0..slot_count {
            let label = Label(r.u64()?);
            let level = r.u32()? as usize;
            let at = r.offset;
            let deleted = match r.u8()? {
                0 => false,
                1 => true,
                f => return Err(r.fail_at(at, format!("invalid deleted flag {f}"))),
            };
            let mut neighbors = Vec::with_capacity(level + 1);
            for _ in 0..=level {
                let degree = r.u32()? as usize;
                let mut list = Vec::with_capacity(degree.min(1024));
                for _ in 0..degree {
                    let at = r.offset;
                    let s = r.u32()?;
                    if s as usize >= slot_count {
                        return Err(r.fail_at(at, format!("neighbor slot {s} out of range")));
                    }
                    list.push(SlotId(s));
                }
                neighbors.push(list);
            }
            nodes.push(Node {
                label,
                level,
                neighbors,
                deleted,
            });
        }

        let mut vectors = Vec::with_capacity(slot_count * dim);
        for _ in 0..slot_count * dim {
            vectors.push(f32::from_bits(r.u32()?));
        }

        let mut label_index = HashMap::with_capacity(slot_count);
        for &s in &deleted_list {
            label_index.insert(nodes[s.index()].label, s);
        }
        for (i, node) in nodes.iter().enumerate() {
            if !node.deleted {
                label_index.insert(node.label, SlotId(i as u32));
            }
        }
        graph.live_count = nodes.iter().filter(|n| !n.deleted).count();
        graph.nodes = nodes;
        graph.vectors = vectors;
        graph.label_index = label_index;
        graph.deleted_list = deleted_list;
        Ok(graph)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_snapshot(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_snapshot(BufReader::new(File::open(path)?))
    }
}
