//! Append-only grid directory.
//!
//! The directory starts as a single root element. Every refinement of a scale
//! appends one (k-1)-dimensional piece covering the new slab of blocks, and
//! earlier pieces are never moved or resized. An element is found by taking,
//! over all dimensions, the lower-bound scale entry of the block with the
//! greatest position; the element lives in the piece appended with that entry
//! and is addressed row-major by the block's ranks as the scales stood then.
//!
//! File layout (`.dir`, little-endian):
//!
//! ```text
//! page 0   magic "GRDD" | version u32 | k u32 | element width u32 | page size u32
//! page 1.. pieces; root piece at page 1 offset 0
//! element  bucket page u32 | ceil(k/8) bytes of SHARED bits, bit d = dimension d
//! ```
//!
//! A piece that fits in a page is packed after the previous piece when there
//! is room, else it starts a new page. Larger pieces start on a fresh page and
//! span contiguous pages with `page_size / width` elements per page, so no
//! element straddles a page boundary.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::region::Parallelepiped;
use crate::scales::{Bracket, Partlist};
use crate::storage::{FileRole, PageId, Pager};

const DIR_MAGIC: &[u8; 4] = b"GRDD";

/// Location of a directory piece in the `.dir` file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PieceAddr {
    pub page: u32,
    pub offset: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectoryElement {
    pub bucket: u32,
    /// Bit `d` set: the block's lower neighbour along `d` uses the same bucket.
    pub shared: u64,
}

impl DirectoryElement {
    pub fn new(bucket: u32) -> Self {
        DirectoryElement { bucket, shared: 0 }
    }

    pub fn is_shared(&self, dim: usize) -> bool {
        self.shared & (1 << dim) != 0
    }

    pub fn set_shared(&mut self, dim: usize, on: bool) {
        if on {
            self.shared |= 1 << dim;
        } else {
            self.shared &= !(1 << dim);
        }
    }
}

/// Which piece holds an element and where inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementRef {
    /// Partition-list position of the piece, `None` for the root.
    pub piece: Option<usize>,
    pub addr: PieceAddr,
    pub count: usize,
    pub index: usize,
}

/// Result of locating the element of the block enclosing a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    pub element: DirectoryElement,
    pub at: ElementRef,
    /// Current block index per dimension.
    pub coords: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Directory {
    k: usize,
    width: usize,
    page_size: usize,
    root: PieceAddr,
    /// Page and used bytes of the last packed page, if more pieces fit there.
    tail: Option<(u32, usize)>,
}

pub fn element_width(k: usize) -> usize {
    4 + k.div_ceil(8)
}

impl Directory {
    /// Writes the header and the root piece pointing at `root_bucket`.
    pub fn init(pager: &mut Pager, k: usize, root_bucket: u32) -> Result<Directory> {
        if pager.page_count(FileRole::Directory) != 0 {
            return Err(Error::AlreadyInitialized);
        }
        let ps = pager.page_size();
        let width = element_width(k);
        if width > ps {
            return Err(Error::InvalidSchema("directory element exceeds page size".into()));
        }
        let head = pager.alloc_page(FileRole::Directory)?;
        let mut page = vec![0u8; ps];
        page[0..4].copy_from_slice(DIR_MAGIC);
        page[4..8].copy_from_slice(&1u32.to_le_bytes());
        page[8..12].copy_from_slice(&(k as u32).to_le_bytes());
        page[12..16].copy_from_slice(&(width as u32).to_le_bytes());
        page[16..20].copy_from_slice(&(ps as u32).to_le_bytes());
        pager.write_page(head, &page)?;
        let mut dir = Directory {
            k,
            width,
            page_size: ps,
            root: PieceAddr { page: 1, offset: 0 },
            tail: None,
        };
        let root = dir.append_piece(pager, &[DirectoryElement::new(root_bucket)])?;
        debug_assert_eq!(root, dir.root);
        Ok(dir)
    }

    /// Opens an existing directory. `last` is the address and element count of
    /// the most recently appended piece.
    pub fn open(pager: &mut Pager, k: usize, last: Option<(PieceAddr, usize)>) -> Result<Directory> {
        if pager.page_count(FileRole::Directory) < 2 {
            return Err(Error::CorruptHeader("directory file too short".into()));
        }
        let page = pager.read_page(PageId::dir(0))?;
        let word = |i: usize| u32::from_le_bytes(page[i..i + 4].try_into().unwrap()) as usize;
        if &page[0..4] != DIR_MAGIC {
            return Err(Error::CorruptHeader("bad directory magic".into()));
        }
        if word(8) != k || word(12) != element_width(k) || word(16) != pager.page_size() {
            return Err(Error::CorruptHeader("directory header does not match schema".into()));
        }
        let mut dir = Directory {
            k,
            width: element_width(k),
            page_size: pager.page_size(),
            root: PieceAddr { page: 1, offset: 0 },
            tail: None,
        };
        let (addr, count) = last.unwrap_or((dir.root, 1));
        if dir.is_packed(count) {
            dir.tail = Some((addr.page, addr.offset as usize + count * dir.width));
        }
        Ok(dir)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn element_width(&self) -> usize {
        self.width
    }

    pub fn root(&self) -> PieceAddr {
        self.root
    }

    fn is_packed(&self, count: usize) -> bool {
        count * self.width <= self.page_size
    }

    /// Page and byte offset of element `index` of a piece with `count` elements.
    pub fn slot(&self, addr: PieceAddr, count: usize, index: usize) -> (u32, usize) {
        if self.is_packed(count) {
            (addr.page, addr.offset as usize + index * self.width)
        } else {
            let per_page = self.page_size / self.width;
            (addr.page + (index / per_page) as u32, (index % per_page) * self.width)
        }
    }

    /// Byte ranges `(page, start, end)` occupied by a piece.
    pub fn piece_extent(&self, addr: PieceAddr, count: usize) -> Vec<(u32, usize, usize)> {
        if self.is_packed(count) {
            let s = addr.offset as usize;
            vec![(addr.page, s, s + count * self.width)]
        } else {
            let per_page = self.page_size / self.width;
            let mut out = Vec::new();
            let mut left = count;
            let mut page = addr.page;
            while left > 0 {
                let n = left.min(per_page);
                out.push((page, 0, n * self.width));
                left -= n;
                page += 1;
            }
            out
        }
    }

    fn encode(&self, e: &DirectoryElement, out: &mut [u8]) {
        out[0..4].copy_from_slice(&e.bucket.to_le_bytes());
        let bits = e.shared.to_le_bytes();
        let n = self.width - 4;
        out[4..4 + n].copy_from_slice(&bits[..n]);
    }

    fn decode(&self, b: &[u8]) -> DirectoryElement {
        let bucket = u32::from_le_bytes(b[0..4].try_into().unwrap());
        let mut bits = [0u8; 8];
        let n = self.width - 4;
        bits[..n].copy_from_slice(&b[4..4 + n]);
        DirectoryElement {
            bucket,
            shared: u64::from_le_bytes(bits),
        }
    }

    /// Appends a piece. Only pages past the current end of the directory, or
    /// the unused tail of the last packed page, are written.
    pub fn append_piece(&mut self, pager: &mut Pager, elements: &[DirectoryElement]) -> Result<PieceAddr> {
        let n = elements.len();
        if n == 0 {
            return Err(Error::SizeMismatch { expected: 1, got: 0 });
        }
        let w = self.width;
        if self.is_packed(n) {
            let (page_no, start, mut page) = match self.tail {
                Some((p, used)) if used + n * w <= self.page_size => (p, used, pager.read_page(PageId::dir(p))?),
                _ => {
                    let id = pager.alloc_page(FileRole::Directory)?;
                    (id.index, 0, vec![0u8; self.page_size])
                }
            };
            for (i, e) in elements.iter().enumerate() {
                self.encode(e, &mut page[start + i * w..start + (i + 1) * w]);
            }
            pager.write_page(PageId::dir(page_no), &page)?;
            self.tail = Some((page_no, start + n * w));
            Ok(PieceAddr {
                page: page_no,
                offset: start as u16,
            })
        } else {
            let per_page = self.page_size / w;
            let mut first = None;
            for chunk in elements.chunks(per_page) {
                let id = pager.alloc_page(FileRole::Directory)?;
                first.get_or_insert(id.index);
                let mut page = vec![0u8; self.page_size];
                for (i, e) in chunk.iter().enumerate() {
                    self.encode(e, &mut page[i * w..(i + 1) * w]);
                }
                pager.write_page(id, &page)?;
            }
            self.tail = None;
            Ok(PieceAddr {
                page: first.unwrap(),
                offset: 0,
            })
        }
    }

    /// Appends the piece for partition-list position `created_at`, checking
    /// its size against the extents of the other dimensions at that moment.
    pub fn append_piece_for(
        &mut self,
        pager: &mut Pager,
        partlist: &Partlist,
        split_dim: usize,
        created_at: usize,
        elements: &[DirectoryElement],
    ) -> Result<PieceAddr> {
        let expected: usize = (0..self.k)
            .filter(|&d| d != split_dim)
            .map(|d| partlist.extent_at(d, created_at))
            .product();
        if expected != elements.len() {
            return Err(Error::SizeMismatch {
                expected,
                got: elements.len(),
            });
        }
        self.append_piece(pager, elements)
    }

    pub fn read_element(&self, pager: &mut Pager, at: ElementRef) -> Result<DirectoryElement> {
        if at.index >= at.count {
            return Err(Error::OutOfRange {
                index: at.index,
                len: at.count,
            });
        }
        let (page, off) = self.slot(at.addr, at.count, at.index);
        let buf = pager.read_page(PageId::dir(page))?;
        Ok(self.decode(&buf[off..off + self.width]))
    }

    /// Overwrites one element in place; the piece geometry is untouched.
    pub fn update_element(&self, pager: &mut Pager, at: ElementRef, e: &DirectoryElement) -> Result<()> {
        if at.index >= at.count {
            return Err(Error::OutOfRange {
                index: at.index,
                len: at.count,
            });
        }
        let (page, off) = self.slot(at.addr, at.count, at.index);
        let mut buf = pager.read_page(PageId::dir(page))?;
        self.encode(e, &mut buf[off..off + self.width]);
        pager.write_page(PageId::dir(page), &buf)
    }

    /// Element count of the piece appended at `pos`.
    pub fn piece_len(&self, partlist: &Partlist, pos: usize) -> usize {
        let d = partlist.entry(pos).dim;
        partlist
            .extents_at_entry(pos)
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != d)
            .map(|(_, &e)| e)
            .product()
    }

    /// Element reference for block coordinates (current block indices).
    pub fn element_ref(&self, partlist: &Partlist, coords: &[usize]) -> ElementRef {
        let newest = (0..self.k)
            .filter_map(|d| partlist.block_lower_pos(d, coords[d]).map(|p| (p, d)))
            .max();
        match newest {
            None => ElementRef {
                piece: None,
                addr: self.root,
                count: 1,
                index: 0,
            },
            Some((pos, split_dim)) => {
                let ext = partlist.extents_at_entry(pos);
                let mut index = 0;
                for d in (0..self.k).filter(|&d| d != split_dim) {
                    index = index * ext[d] + partlist.time_rank(d, coords[d], pos);
                }
                ElementRef {
                    piece: Some(pos),
                    addr: partlist.entry(pos).piece,
                    count: self.piece_len(partlist, pos),
                    index,
                }
            }
        }
    }

    /// Locates the element of the block enclosing the point with the given
    /// grid keys. Reads exactly one directory page.
    pub fn locate_element(&self, pager: &mut Pager, partlist: &Partlist, keys: &[Vec<u8>]) -> Result<Located> {
        let mut newest: Option<(usize, usize)> = None;
        for (d, key) in keys.iter().enumerate() {
            if let (Bracket::Entry(p), _) = partlist.locate_brackets(d, key) {
                if newest.is_none_or(|(q, _)| p > q) {
                    newest = Some((p, d));
                }
            }
        }
        let at = match newest {
            None => ElementRef {
                piece: None,
                addr: self.root,
                count: 1,
                index: 0,
            },
            Some((pos, split_dim)) => {
                let ext = partlist.extents_at_entry(pos);
                let mut index = 0;
                for d in (0..self.k).filter(|&d| d != split_dim) {
                    index = index * ext[d] + partlist.rank_at(d, &keys[d], pos);
                }
                ElementRef {
                    piece: Some(pos),
                    addr: partlist.entry(pos).piece,
                    count: self.piece_len(partlist, pos),
                    index,
                }
            }
        };
        let element = self.read_element(pager, at)?;
        let coords = keys
            .iter()
            .enumerate()
            .map(|(d, k)| partlist.block_index(d, k))
            .collect();
        Ok(Located { element, at, coords })
    }

    /// Visits every element whose block index lies in `ranges[d]` (inclusive)
    /// on every dimension, exactly once, in file order. Each directory page is
    /// read at most once per call.
    pub fn enumerate_blocks<F>(
        &self,
        pager: &mut Pager,
        partlist: &Partlist,
        ranges: &[(usize, usize)],
        mut visit: F,
    ) -> Result<()>
    where
        F: FnMut(&mut Pager, ElementRef, &[usize], DirectoryElement) -> Result<()>,
    {
        let mut page_buf: Option<(u32, Vec<u8>)> = None;
        let mut fetch = |pager: &mut Pager, at: ElementRef| -> Result<DirectoryElement> {
            let (page, off) = self.slot(at.addr, at.count, at.index);
            if page_buf.as_ref().is_none_or(|(p, _)| *p != page) {
                page_buf = Some((page, pager.read_page(PageId::dir(page))?));
            }
            let buf = &page_buf.as_ref().unwrap().1;
            Ok(self.decode(&buf[off..off + self.width]))
        };
        if ranges.iter().any(|&(a, b)| a > b) {
            return Ok(());
        }
        if ranges.iter().all(|&(a, _)| a == 0) {
            let at = ElementRef {
                piece: None,
                addr: self.root,
                count: 1,
                index: 0,
            };
            let e = fetch(pager, at)?;
            visit(pager, at, &vec![0; self.k], e)?;
        }
        for pos in 0..partlist.len() {
            let split_dim = partlist.entry(pos).dim;
            let own = 1 + partlist
                .sorted(split_dim)
                .iter()
                .position(|&p| p == pos)
                .expect("entry is in its dimension's scale");
            let (a, b) = ranges[split_dim];
            if own < a || own > b {
                continue;
            }
            // candidate (block index, rank at pos) per other dimension
            let mut axes: Vec<Vec<(usize, usize)>> = Vec::with_capacity(self.k - 1);
            let mut dims = Vec::with_capacity(self.k - 1);
            let mut empty = false;
            for d in (0..self.k).filter(|&d| d != split_dim) {
                let (a, b) = ranges[d];
                let mut rank = partlist.time_rank(d, a, pos);
                let mut axis = Vec::new();
                for s in a..=b {
                    if s > a && partlist.block_lower_pos(d, s).is_some_and(|p| p < pos) {
                        rank += 1;
                    }
                    if partlist.block_lower_pos(d, s).is_none_or(|p| p < pos) {
                        axis.push((s, rank));
                    }
                }
                if axis.is_empty() {
                    empty = true;
                    break;
                }
                axes.push(axis);
                dims.push(d);
            }
            if empty {
                continue;
            }
            let ext = partlist.extents_at_entry(pos);
            let count = self.piece_len(partlist, pos);
            let addr = partlist.entry(pos).piece;
            let mut cursor = vec![0usize; axes.len()];
            let mut coords = vec![0usize; self.k];
            coords[split_dim] = own;
            loop {
                let mut index = 0;
                for (i, &d) in dims.iter().enumerate() {
                    let (s, r) = axes[i][cursor[i]];
                    coords[d] = s;
                    index = index * ext[d] + r;
                }
                let at = ElementRef {
                    piece: Some(pos),
                    addr,
                    count,
                    index,
                };
                let e = fetch(pager, at)?;
                visit(pager, at, &coords, e)?;
                // odometer, last dimension fastest
                let mut i = axes.len();
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    cursor[i] += 1;
                    if cursor[i] < axes[i].len() {
                        break;
                    }
                    cursor[i] = 0;
                    if i == 0 {
                        i = usize::MAX;
                        break;
                    }
                }
                if axes.is_empty() || i == usize::MAX {
                    break;
                }
            }
        }
        Ok(())
    }

    /// Visits every element whose block intersects `region`.
    pub fn enumerate_region<F>(
        &self,
        pager: &mut Pager,
        partlist: &Partlist,
        region: &Parallelepiped,
        visit: F,
    ) -> Result<()>
    where
        F: FnMut(&mut Pager, ElementRef, &[usize], DirectoryElement) -> Result<()>,
    {
        let ranges = block_ranges(partlist, region);
        self.enumerate_blocks(pager, partlist, &ranges, visit)
    }
}

/// Inclusive block-index range of `region` on every dimension.
pub fn block_ranges(partlist: &Partlist, region: &Parallelepiped) -> Vec<(usize, usize)> {
    region
        .intervals()
        .iter()
        .enumerate()
        .map(|(d, iv)| {
            let a = partlist.block_index(d, &iv.lo);
            let b = match &iv.hi {
                None => partlist.extent(d) - 1,
                Some(hi) => partlist
                    .sorted(d)
                    .partition_point(|&p| partlist.entry(p).value.cmp_key(hi) == Ordering::Less),
            };
            (a, b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::ScaleValue;
    use crate::storage::PagerOptions;
    use crate::value::{DataType, Value};

    fn ikey(v: i32) -> Vec<u8> {
        DataType::Integer.key_of(&Value::Int(v)).unwrap()
    }

    fn setup(page_size: usize) -> (tempfile::TempDir, Pager) {
        let dir = tempfile::tempdir().unwrap();
        let pager = Pager::create(
            dir.path(),
            "D",
            PagerOptions {
                page_size,
                cache_pages: 0,
            },
        )
        .unwrap();
        (dir, pager)
    }

    /// Builds a directory whose elements each point at a distinct bucket, so
    /// every element can be identified by its bucket number.
    fn build(pager: &mut Pager, k: usize, splits: &[(usize, i32)]) -> (Directory, Partlist) {
        let mut dir = Directory::init(pager, k, 0).unwrap();
        let mut pl = Partlist::new(k);
        let mut next = 1;
        for &(d, v) in splits {
            let pos = pl.len();
            let n: usize = (0..k).filter(|&i| i != d).map(|i| pl.extent_at(i, pos)).product();
            let elems: Vec<_> = (0..n)
                .map(|_| {
                    next += 1;
                    DirectoryElement::new(next - 1)
                })
                .collect();
            let addr = dir.append_piece_for(pager, &pl, d, pos, &elems).unwrap();
            pl.append_in_memory(d, ScaleValue::new(ikey(v)).unwrap(), addr).unwrap();
        }
        (dir, pl)
    }

    #[test]
    fn root_only() {
        let (_t, mut pager) = setup(256);
        let dir = Directory::init(&mut pager, 2, 7).unwrap();
        let pl = Partlist::new(2);
        let loc = dir.locate_element(&mut pager, &pl, &[ikey(3), ikey(-3)]).unwrap();
        assert_eq!(loc.element.bucket, 7);
        assert_eq!(loc.at.piece, None);
        assert_eq!(loc.coords, vec![0, 0]);
        assert!(matches!(
            Directory::init(&mut pager, 2, 7),
            Err(Error::AlreadyInitialized)
        ));
    }

    #[test]
    fn piece_sizes() {
        let (_t, mut pager) = setup(256);
        let (dir, pl) = build(&mut pager, 2, &[(0, 50)]);
        assert_eq!(dir.piece_len(&pl, 0), 1);
        let (_t2, mut pager2) = setup(256);
        // extents (3, -, 2) when dim 1 splits: 6 elements
        let (dir3, pl3) = build(&mut pager2, 3, &[(0, 10), (0, 20), (2, 5), (1, 0)]);
        assert_eq!(dir3.piece_len(&pl3, 3), 6);
        let mut bad = dir3.clone();
        let e = vec![DirectoryElement::new(0); 5];
        assert!(matches!(
            bad.append_piece_for(&mut pager2, &pl3, 1, 4, &e),
            Err(Error::SizeMismatch { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn two_split_construction() {
        let (_t, mut pager) = setup(256);
        // dim0 @ 50 (pos 0), dim1 @ 30 (pos 1)
        let (dir, pl) = build(&mut pager, 2, &[(0, 50), (1, 30)]);
        let l = dir.locate_element(&mut pager, &pl, &[ikey(60), ikey(10)]).unwrap();
        assert_eq!(l.at.piece, Some(0));
        assert_eq!(l.at.index, 0);
        let l = dir.locate_element(&mut pager, &pl, &[ikey(60), ikey(40)]).unwrap();
        assert_eq!(l.at.piece, Some(1));
        assert_eq!(l.at.index, pl.rank_at(0, &ikey(60), 1));
        assert_eq!(l.at.index, 1);
        assert_eq!(l.coords, vec![1, 1]);
    }

    #[test]
    fn update_leaves_siblings_intact() {
        let (_t, mut pager) = setup(256);
        let (dir, pl) = build(&mut pager, 2, &[(0, 10), (0, 20), (1, 5)]);
        let at = dir.element_ref(&pl, &[1, 1]);
        let sib = dir.element_ref(&pl, &[2, 1]);
        let before = dir.read_element(&mut pager, sib).unwrap();
        let mut e = dir.read_element(&mut pager, at).unwrap();
        e.set_shared(1, true);
        e.bucket = 99;
        dir.update_element(&mut pager, at, &e).unwrap();
        assert_eq!(dir.read_element(&mut pager, at).unwrap(), e);
        assert_eq!(dir.read_element(&mut pager, sib).unwrap(), before);
        let l = dir.locate_element(&mut pager, &pl, &[ikey(15), ikey(7)]).unwrap();
        assert_eq!(l.element.bucket, 99);
        let oob = ElementRef { index: at.count, ..at };
        assert!(dir.update_element(&mut pager, oob, &e).is_err());
    }

    #[test]
    fn large_pieces_span_pages() {
        let (_t, mut pager) = setup(64);
        // width 5, 12 per page; grow dim0 to 30 intervals then split dim1
        let mut splits: Vec<(usize, i32)> = (1..30).map(|v| (0, v * 10)).collect();
        splits.push((1, 0));
        let (dir, pl) = build(&mut pager, 2, &splits);
        let last = pl.len() - 1;
        assert_eq!(dir.piece_len(&pl, last), 30);
        let ext = dir.piece_extent(pl.entry(last).piece, 30);
        assert_eq!(ext.len(), 3);
        for s in 0..30 {
            let at = dir.element_ref(&pl, &[s, 1]);
            assert_eq!(at.piece, Some(last));
            let e = dir.read_element(&mut pager, at).unwrap();
            assert_eq!(e.bucket as usize, 30 + s);
        }
    }

    #[test]
    fn reopen_preserves_root_and_tail() {
        let (t, mut pager) = setup(256);
        let (mut dir, pl) = build(&mut pager, 2, &[(0, 10)]);
        let last = (pl.entry(0).piece, dir.piece_len(&pl, 0));
        let reopened = Directory::open(&mut pager, 2, Some(last)).unwrap();
        assert_eq!(reopened.tail, dir.tail);
        assert_eq!(reopened.root(), dir.root());
        let e = dir.append_piece(&mut pager, &[DirectoryElement::new(4)]).unwrap();
        assert_eq!(e.page, 1);
        drop(t);
    }
}
