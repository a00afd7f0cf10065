//! The partition list: all linear scales of a relation merged into one
//! append-only list.
//!
//! Each entry records a split value, the dimension it refines and the address
//! of the directory piece written when the split happened. An entry's position
//! is its timestamp, so the list is never reordered and never shrinks.
//!
//! Split values are prefix coded: a value holds only as many leading words of
//! the attribute as were needed to separate the tuples of the overflowing
//! bucket, and is compared as if padded with zero words.

use std::cmp::Ordering;

use num_bigint::BigUint;

use crate::directory::PieceAddr;
use crate::error::{Error, Result};
use crate::storage::{FileRole, PageId, Pager};
use crate::value::WORD;

/// A prefix-coded scale value, canonicalised without trailing zero words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScaleValue(Vec<u8>);

impl ScaleValue {
    pub fn new(mut bytes: Vec<u8>) -> Result<ScaleValue> {
        if bytes.is_empty() || !bytes.len().is_multiple_of(WORD) || bytes.len() / WORD > 255 {
            return Err(Error::CorruptHeader(format!(
                "scale value of {} bytes is not a whole number of words",
                bytes.len()
            )));
        }
        while bytes.len() > WORD && bytes[bytes.len() - WORD..].iter().all(|&b| b == 0) {
            bytes.truncate(bytes.len() - WORD);
        }
        Ok(ScaleValue(bytes))
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn words(&self) -> usize {
        self.0.len() / WORD
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Compares this value, zero padded, against a full attribute key.
    /// `Less | Equal` means the value brackets the key from below.
    pub fn cmp_key(&self, key: &[u8]) -> Ordering {
        cmp_zero_padded(&self.0, key)
    }
}

impl PartialOrd for ScaleValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScaleValue {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_zero_padded(&self.0, &other.0)
    }
}

fn cmp_zero_padded(a: &[u8], b: &[u8]) -> Ordering {
    let n = a.len().max(b.len());
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartEntry {
    pub value: ScaleValue,
    pub piece: PieceAddr,
    pub dim: usize,
}

/// One side of the interval enclosing an attribute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracket {
    DomainMin,
    DomainMax,
    Entry(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Only the midpoint of the interval, at the bracket word length.
    Midpoint,
    /// Midpoint first, then any separating value, growing the length a word
    /// at a time.
    Any,
}

const SCALES_MAGIC: &[u8; 4] = b"GRDS";

#[derive(Debug, Clone)]
pub struct Partlist {
    k: usize,
    entries: Vec<PartEntry>,
    /// Per dimension, entry positions ordered by value.
    sorted: Vec<Vec<usize>>,
    /// Per entry, the interval count of every dimension when it was appended.
    extents: Vec<Vec<usize>>,
    byte_len: usize,
}

impl Partlist {
    pub fn new(k: usize) -> Partlist {
        Partlist {
            k,
            entries: Vec::new(),
            sorted: vec![Vec::new(); k],
            extents: Vec::new(),
            byte_len: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PartEntry] {
        &self.entries
    }

    pub fn entry(&self, pos: usize) -> &PartEntry {
        &self.entries[pos]
    }

    /// Lower and upper brackets of `key` on `dim`, found in one pass.
    pub fn locate_brackets(&self, dim: usize, key: &[u8]) -> (Bracket, Bracket) {
        let mut lower: Option<usize> = None;
        let mut upper: Option<usize> = None;
        for (pos, e) in self.entries.iter().enumerate() {
            if e.dim != dim {
                continue;
            }
            if e.value.cmp_key(key) != Ordering::Greater {
                if lower.is_none_or(|l| self.entries[l].value < e.value) {
                    lower = Some(pos);
                }
            } else if upper.is_none_or(|u| e.value < self.entries[u].value) {
                upper = Some(pos);
            }
        }
        (
            lower.map_or(Bracket::DomainMin, Bracket::Entry),
            upper.map_or(Bracket::DomainMax, Bracket::Entry),
        )
    }

    /// Number of `dim` entries before `cutoff` whose value is `<= key`; the
    /// zero-based interval index of `key` as the scale stood at `cutoff`.
    pub fn rank_at(&self, dim: usize, key: &[u8], cutoff: usize) -> usize {
        self.entries[..cutoff.min(self.entries.len())]
            .iter()
            .filter(|e| e.dim == dim && e.value.cmp_key(key) != Ordering::Greater)
            .count()
    }

    /// Interval count of `dim` as the scale stood at `cutoff`.
    pub fn extent_at(&self, dim: usize, cutoff: usize) -> usize {
        1 + self.entries[..cutoff.min(self.entries.len())]
            .iter()
            .filter(|e| e.dim == dim)
            .count()
    }

    /// Interval counts of all dimensions when entry `pos` was appended.
    pub fn extents_at_entry(&self, pos: usize) -> &[usize] {
        &self.extents[pos]
    }

    /// Current interval count of `dim`.
    pub fn extent(&self, dim: usize) -> usize {
        1 + self.sorted[dim].len()
    }

    pub fn extents(&self) -> Vec<usize> {
        (0..self.k).map(|d| self.extent(d)).collect()
    }

    /// Entry positions of `dim` in value order.
    pub fn sorted(&self, dim: usize) -> &[usize] {
        &self.sorted[dim]
    }

    /// Current block index of `key` along `dim`.
    pub fn block_index(&self, dim: usize, key: &[u8]) -> usize {
        self.sorted[dim].partition_point(|&p| self.entries[p].value.cmp_key(key) != Ordering::Greater)
    }

    /// Position of the entry that is the lower bound of block `idx` along
    /// `dim`; `None` for the first block.
    pub fn block_lower_pos(&self, dim: usize, idx: usize) -> Option<usize> {
        idx.checked_sub(1).map(|i| self.sorted[dim][i])
    }

    pub fn block_lower(&self, dim: usize, idx: usize) -> Option<&ScaleValue> {
        self.block_lower_pos(dim, idx).map(|p| &self.entries[p].value)
    }

    /// Upper bound of block `idx` along `dim`; `None` for the last block.
    pub fn block_upper(&self, dim: usize, idx: usize) -> Option<&ScaleValue> {
        self.sorted[dim].get(idx).map(|&p| &self.entries[p].value)
    }

    /// Rank of block `idx` along `dim` among the blocks that existed at `cutoff`.
    pub fn time_rank(&self, dim: usize, idx: usize, cutoff: usize) -> usize {
        self.sorted[dim][..idx].iter().filter(|&&p| p < cutoff).count()
    }

    fn check_append(&self, dim: usize, value: &ScaleValue) -> Result<()> {
        if dim >= self.k {
            return Err(Error::OutOfRange {
                index: dim,
                len: self.k,
            });
        }
        if value.is_zero() {
            return Err(Error::DuplicateScaleValue { dim });
        }
        let idx = self.sorted[dim].partition_point(|&p| self.entries[p].value < *value);
        if let Some(&p) = self.sorted[dim].get(idx) {
            if self.entries[p].value == *value {
                return Err(Error::DuplicateScaleValue { dim });
            }
        }
        Ok(())
    }

    fn push(&mut self, entry: PartEntry) -> usize {
        let pos = self.entries.len();
        self.extents.push(self.extents());
        let dim = entry.dim;
        let idx = self.sorted[dim].partition_point(|&p| self.entries[p].value < entry.value);
        self.sorted[dim].insert(idx, pos);
        self.entries.push(entry);
        pos
    }

    /// Appends an entry in memory only.
    pub fn append_in_memory(&mut self, dim: usize, value: ScaleValue, piece: PieceAddr) -> Result<usize> {
        self.check_append(dim, &value)?;
        Ok(self.push(PartEntry { value, piece, dim }))
    }

    /// Appends an entry at the tail and persists it to the scales file.
    pub fn append_entry(
        &mut self,
        pager: &mut Pager,
        dim: usize,
        value: ScaleValue,
        piece: PieceAddr,
    ) -> Result<usize> {
        self.check_append(dim, &value)?;
        let entry = PartEntry { value, piece, dim };
        let rec = encode_record(&entry);
        self.write_bytes(pager, self.byte_len, &rec)?;
        self.byte_len += rec.len();
        let pos = self.push(entry);
        self.write_header(pager)?;
        Ok(pos)
    }

    /// Writes an empty scales file header.
    pub fn init_file(&mut self, pager: &mut Pager) -> Result<()> {
        if pager.page_count(FileRole::Scales) != 0 {
            return Err(Error::AlreadyInitialized);
        }
        pager.alloc_page(FileRole::Scales)?;
        self.write_header(pager)
    }

    fn write_header(&self, pager: &mut Pager) -> Result<()> {
        let mut page = vec![0u8; pager.page_size()];
        page[0..4].copy_from_slice(SCALES_MAGIC);
        page[4..8].copy_from_slice(&1u32.to_le_bytes());
        page[8..12].copy_from_slice(&(self.k as u32).to_le_bytes());
        page[12..16].copy_from_slice(&(self.entries.len() as u32).to_le_bytes());
        page[16..20].copy_from_slice(&(self.byte_len as u32).to_le_bytes());
        pager.write_page(PageId::scales(0), &page)
    }

    fn write_bytes(&self, pager: &mut Pager, at: usize, bytes: &[u8]) -> Result<()> {
        let ps = pager.page_size();
        let mut done = 0;
        while done < bytes.len() {
            let off = at + done;
            let page_no = 1 + (off / ps) as u32;
            let in_page = off % ps;
            let n = (ps - in_page).min(bytes.len() - done);
            let mut page = if in_page == 0 {
                while pager.page_count(FileRole::Scales) <= page_no {
                    pager.alloc_page(FileRole::Scales)?;
                }
                vec![0u8; ps]
            } else {
                pager.read_page(PageId::scales(page_no))?
            };
            page[in_page..in_page + n].copy_from_slice(&bytes[done..done + n]);
            pager.write_page(PageId::scales(page_no), &page)?;
            done += n;
        }
        Ok(())
    }

    /// Reads the whole list into memory.
    pub fn load(pager: &mut Pager, k: usize) -> Result<Partlist> {
        if pager.page_count(FileRole::Scales) == 0 {
            return Err(Error::CorruptHeader("scales file is empty".into()));
        }
        let head = pager.read_page(PageId::scales(0))?;
        if &head[0..4] != SCALES_MAGIC {
            return Err(Error::CorruptHeader("bad scales magic".into()));
        }
        let stored_k = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        if stored_k != k {
            return Err(Error::CorruptHeader(format!(
                "scales file has k={stored_k}, schema has k={k}"
            )));
        }
        let count = u32::from_le_bytes(head[12..16].try_into().unwrap()) as usize;
        let byte_len = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
        let ps = pager.page_size();
        let mut stream = Vec::with_capacity(byte_len);
        let mut page_no = 1;
        while stream.len() < byte_len {
            let page = pager.read_page(PageId::scales(page_no))?;
            let n = (byte_len - stream.len()).min(ps);
            stream.extend_from_slice(&page[..n]);
            page_no += 1;
        }
        let mut list = Partlist::new(k);
        let mut at = 0;
        for _ in 0..count {
            let (entry, used) = decode_record(&stream[at..])?;
            if entry.dim >= k {
                return Err(Error::CorruptHeader("scale entry dimension out of range".into()));
            }
            at += used;
            list.check_append(entry.dim, &entry.value)
                .map_err(|_| Error::CorruptHeader("duplicate scale entry".into()))?;
            list.push(entry);
        }
        if at != byte_len {
            return Err(Error::CorruptHeader("scales byte length mismatch".into()));
        }
        list.byte_len = byte_len;
        Ok(list)
    }
}

fn encode_record(e: &PartEntry) -> Vec<u8> {
    let mut r = Vec::with_capacity(8 + e.value.bytes().len());
    r.push(e.dim as u8);
    r.push(e.value.words() as u8);
    r.extend_from_slice(e.value.bytes());
    r.extend_from_slice(&e.piece.page.to_le_bytes());
    r.extend_from_slice(&e.piece.offset.to_le_bytes());
    r
}

fn decode_record(b: &[u8]) -> Result<(PartEntry, usize)> {
    let short = || Error::CorruptHeader("truncated scale record".into());
    if b.len() < 2 {
        return Err(short());
    }
    let dim = b[0] as usize;
    let words = b[1] as usize;
    let vlen = words * WORD;
    let used = 2 + vlen + 6;
    if b.len() < used {
        return Err(short());
    }
    let value = ScaleValue::new(b[2..2 + vlen].to_vec())?;
    let page = u32::from_le_bytes(b[2 + vlen..6 + vlen].try_into().unwrap());
    let offset = u16::from_le_bytes(b[6 + vlen..8 + vlen].try_into().unwrap());
    Ok((
        PartEntry {
            value,
            piece: PieceAddr { page, offset },
            dim,
        },
        used,
    ))
}

fn padded_num(bytes: &[u8], len: usize) -> BigUint {
    let mut v = bytes[..bytes.len().min(len)].to_vec();
    v.resize(len, 0);
    BigUint::from_bytes_be(&v)
}

fn num_bytes(n: &BigUint, len: usize) -> Vec<u8> {
    let b = n.to_bytes_be();
    let mut out = vec![0u8; len.saturating_sub(b.len())];
    out.extend_from_slice(&b[b.len().saturating_sub(len)..]);
    out
}

/// Chooses the value at which to split the interval `[lower, upper)` so the
/// resident keys fall on both sides.
///
/// `key_words` is the attribute's key length in words. The search starts at
/// the longer of the two bracket lengths and, in [`SplitMode::Any`], grows one
/// word at a time up to the full key. When a bracket is a domain bound the
/// midpoint is taken over the residents' own range instead. Returns `None`
/// when no length yields a separating value.
pub fn choose_split_value(
    lower: Option<&ScaleValue>,
    upper: Option<&ScaleValue>,
    residents: &[&[u8]],
    key_words: usize,
    mode: SplitMode,
) -> Option<ScaleValue> {
    if residents.len() < 2 {
        return None;
    }
    let w = lower
        .map_or(1, |v| v.words())
        .max(upper.map_or(1, |v| v.words()))
        .min(key_words);
    let last = match mode {
        SplitMode::Midpoint => w,
        SplitMode::Any => key_words,
    };
    let valid = |v: &ScaleValue| -> bool {
        if v.is_zero() {
            return false;
        }
        if lower.is_some_and(|l| *v <= *l) {
            return false;
        }
        if upper.is_some_and(|u| *v >= *u) {
            return false;
        }
        let left = residents.iter().filter(|r| v.cmp_key(r) == Ordering::Greater).count();
        left > 0 && left < residents.len()
    };
    for words in w..=last {
        let len = words * WORD;
        let mut prefixes: Vec<BigUint> = residents.iter().map(|r| padded_num(r, len)).collect();
        prefixes.sort();
        let lo = match lower {
            Some(l) => padded_num(l.bytes(), len),
            None => prefixes[0].clone(),
        };
        let hi = match upper {
            Some(u) => padded_num(u.bytes(), len),
            None => prefixes[prefixes.len() - 1].clone() + 1u32,
        };
        if lo < hi {
            let mid: BigUint = (&lo + &hi) >> 1;
            if let Ok(v) = ScaleValue::new(num_bytes(&mid, len)) {
                if valid(&v) {
                    return Some(v);
                }
            }
        }
        if mode == SplitMode::Midpoint {
            continue;
        }
        // Most balanced cut between two adjacent distinct prefixes.
        let n = prefixes.len();
        let mut best: Option<(usize, usize)> = None;
        for i in 1..n {
            if prefixes[i] != prefixes[i - 1] {
                let imbalance = (2 * i).abs_diff(n);
                if best.is_none_or(|(_, b)| imbalance < b) {
                    best = Some((i, imbalance));
                }
            }
        }
        if let Some((i, _)) = best {
            let cut: BigUint = (&prefixes[i - 1] + &prefixes[i] + 1u32) >> 1;
            if let Ok(v) = ScaleValue::new(num_bytes(&cut, len)) {
                if valid(&v) {
                    return Some(v);
                }
            }
        }
    }
    None
}
