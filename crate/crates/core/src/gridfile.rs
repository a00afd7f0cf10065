//! One relation stored as a grid file.
//!
//! Data file layout (`.dat`, little-endian):
//!
//! ```text
//! page 0   magic "GRDF" | version u32 | schema hash u64 | page size u32
//!          free-list head u32 | tuple width u32 | capacity u32
//!          policy u8 (+3 pad) | round-robin counter u32
//!          tuple count u64 | bucket count u64 | overflow pages u64
//! page n   tuple count u16 | overflow link u32 | 2 reserved | tuples
//! ```
//!
//! The header is kept in memory and written back by [`GridFile::flush`], so
//! single-tuple operations touch only directory and bucket pages.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::directory::{block_ranges, Directory, DirectoryElement, PieceAddr};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::region::{Interval, Parallelepiped, RegionSet, RegionSpace};
use crate::scales::{choose_split_value, Partlist, ScaleValue, SplitMode};
use crate::storage::{AccessStats, FileRole, PageId, Pager, PagerOptions, TraceEvent, NO_PAGE};
use crate::value::{Key, RelationSchema, Tuple, Value, BUCKET_HEADER};

const DATA_MAGIC: &[u8; 4] = b"GRDF";

/// How an overflowing single-block bucket picks its split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SplitPolicy {
    /// Rotate over the grid attributes, skipping any that cannot separate
    /// the bucket.
    #[default]
    RoundRobin,
    /// Try the interval midpoint on each attribute in order, then fall back to
    /// any separating value.
    MidpointFirst,
}

impl SplitPolicy {
    fn code(self) -> u8 {
        match self {
            SplitPolicy::RoundRobin => 0,
            SplitPolicy::MidpointFirst => 1,
        }
    }

    fn from_code(c: u8) -> Result<SplitPolicy> {
        match c {
            0 => Ok(SplitPolicy::RoundRobin),
            1 => Ok(SplitPolicy::MidpointFirst),
            _ => Err(Error::CorruptHeader(format!("unknown split policy {c}"))),
        }
    }
}

impl fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitPolicy::RoundRobin => "roundrobin",
            SplitPolicy::MidpointFirst => "midpoint",
        })
    }
}

impl FromStr for SplitPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "roundrobin" | "round-robin" | "round_robin" | "rr" => Ok(SplitPolicy::RoundRobin),
            "midpoint" | "midpoint-first" | "midpoint_first" => Ok(SplitPolicy::MidpointFirst),
            _ => Err(format!("unknown split policy '{s}' (expected roundrobin or midpoint)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridStats {
    pub tuples: u64,
    pub buckets: u64,
    pub capacity: usize,
    /// Mean bucket fill fraction.
    pub occupancy: f64,
    pub directory_elements: u64,
    /// Directory elements per data bucket.
    pub redundancy: f64,
    /// Interval count per grid dimension.
    pub partitions: Vec<usize>,
    pub overflow_pages: u64,
}

#[derive(Debug, Clone)]
struct Header {
    policy: SplitPolicy,
    rr_next: usize,
    tuples: u64,
    buckets: u64,
    overflow_pages: u64,
}

/// A bucket's pages (primary first) and its encoded tuples.
#[derive(Debug)]
struct Bucket {
    pages: Vec<u32>,
    tuples: Vec<Vec<u8>>,
}

/// Inclusive block-index range per dimension.
type BlockBox = Vec<(usize, usize)>;

/// A bucket to read during a region scan, with the region box it serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanUnit {
    pub bucket: u32,
    pub region_box: usize,
}

pub struct GridFile {
    schema: RelationSchema,
    pager: Pager,
    partlist: Partlist,
    dir: Directory,
    header: Header,
    dirty: bool,
    /// Per grid dimension: byte offset in the tuple, field width, key length.
    key_slots: Vec<(usize, usize, usize)>,
    space: RegionSpace,
}

impl fmt::Debug for GridFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFile")
            .field("relation", &self.schema.name)
            .field("tuples", &self.header.tuples)
            .field("buckets", &self.header.buckets)
            .finish()
    }
}

fn key_slots(schema: &RelationSchema) -> Vec<(usize, usize, usize)> {
    let offsets = schema.offsets();
    schema
        .grid
        .iter()
        .map(|&a| {
            let ty = schema.attributes[a].ty;
            (offsets[a], ty.width(), ty.key_len())
        })
        .collect()
}

fn page_count(buf: &[u8]) -> usize {
    u16::from_le_bytes([buf[0], buf[1]]) as usize
}

fn page_next(buf: &[u8]) -> u32 {
    u32::from_le_bytes(buf[2..6].try_into().unwrap())
}

impl GridFile {
    /// Creates the files for `schema` in `dir` with an empty root bucket.
    pub fn create(dir: &Path, schema: RelationSchema, policy: SplitPolicy, opts: PagerOptions) -> Result<GridFile> {
        schema.validate(opts.page_size)?;
        let mut pager = Pager::create(dir, &schema.name, opts)?;
        let head = pager.alloc_page(FileRole::Data)?;
        debug_assert_eq!(head.index, 0);
        let root = pager.alloc_page(FileRole::Data)?;
        let mut partlist = Partlist::new(schema.k());
        partlist.init_file(&mut pager)?;
        let dir = Directory::init(&mut pager, schema.k(), root.index)?;
        let mut g = GridFile {
            key_slots: key_slots(&schema),
            space: RegionSpace::for_schema(&schema),
            schema,
            pager,
            partlist,
            dir,
            header: Header {
                policy,
                rr_next: 0,
                tuples: 0,
                buckets: 1,
                overflow_pages: 0,
            },
            dirty: true,
        };
        g.write_bucket(&mut Bucket {
            pages: vec![root.index],
            tuples: Vec::new(),
        })?;
        g.flush()?;
        Ok(g)
    }

    /// Opens an existing relation; `schema` must match the one it was
    /// created with.
    pub fn open(dir: &Path, schema: RelationSchema, opts: PagerOptions) -> Result<GridFile> {
        let mut pager = Pager::open(dir, &schema.name, opts)?;
        if pager.page_count(FileRole::Data) < 2 {
            return Err(Error::CorruptHeader(format!("{}: data file too short", schema.name)));
        }
        let buf = pager.read_page(PageId::data(0))?;
        let u32_at = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(buf[i..i + 8].try_into().unwrap());
        if &buf[0..4] != DATA_MAGIC || u32_at(4) != 1 {
            return Err(Error::CorruptHeader(format!("{}: bad data file magic", schema.name)));
        }
        if u64_at(8) != schema.schema_hash() {
            return Err(Error::CorruptHeader(format!(
                "{}: schema does not match the stored relation",
                schema.name
            )));
        }
        if u32_at(16) as usize != pager.page_size() {
            return Err(Error::CorruptHeader(format!("{}: page size mismatch", schema.name)));
        }
        let free = u32_at(20);
        pager.set_free_list_head((free != NO_PAGE).then_some(free));
        let header = Header {
            policy: SplitPolicy::from_code(buf[32])?,
            rr_next: u32_at(36) as usize,
            tuples: u64_at(40),
            buckets: u64_at(48),
            overflow_pages: u64_at(56),
        };
        let partlist = Partlist::load(&mut pager, schema.k())?;
        let last = partlist.len().checked_sub(1).map(|p| {
            let e = partlist.entry(p);
            let n = partlist
                .extents_at_entry(p)
                .iter()
                .enumerate()
                .filter(|&(d, _)| d != e.dim)
                .map(|(_, &x)| x)
                .product();
            (e.piece, n)
        });
        let dir = Directory::open(&mut pager, schema.k(), last)?;
        Ok(GridFile {
            key_slots: key_slots(&schema),
            space: RegionSpace::for_schema(&schema),
            schema,
            pager,
            partlist,
            dir,
            header,
            dirty: false,
        })
    }

    /// Removes the files of relation `name`.
    pub fn destroy(dir: &Path, name: &str) -> Result<()> {
        Pager::remove_files(dir, name)
    }

    /// Writes the relation header if it changed.
    pub fn flush(&mut self) -> Result<()> {
        let free = self.pager.free_list_head().unwrap_or(NO_PAGE);
        if !self.dirty {
            return Ok(());
        }
        let mut page = vec![0u8; self.pager.page_size()];
        page[0..4].copy_from_slice(DATA_MAGIC);
        page[4..8].copy_from_slice(&1u32.to_le_bytes());
        page[8..16].copy_from_slice(&self.schema.schema_hash().to_le_bytes());
        page[16..20].copy_from_slice(&(self.pager.page_size() as u32).to_le_bytes());
        page[20..24].copy_from_slice(&free.to_le_bytes());
        page[24..28].copy_from_slice(&(self.schema.tuple_width() as u32).to_le_bytes());
        page[28..32].copy_from_slice(&(self.schema.capacity as u32).to_le_bytes());
        page[32] = self.header.policy.code();
        page[36..40].copy_from_slice(&(self.header.rr_next as u32).to_le_bytes());
        page[40..48].copy_from_slice(&self.header.tuples.to_le_bytes());
        page[48..56].copy_from_slice(&self.header.buckets.to_le_bytes());
        page[56..64].copy_from_slice(&self.header.overflow_pages.to_le_bytes());
        self.pager.write_page(PageId::data(0), &page)?;
        self.dirty = false;
        Ok(())
    }

    pub fn close(mut self) -> Result<()> {
        self.flush()?;
        self.pager.sync()
    }

    pub fn schema(&self) -> &RelationSchema {
        &self.schema
    }

    pub fn policy(&self) -> SplitPolicy {
        self.header.policy
    }

    pub fn partlist(&self) -> &Partlist {
        &self.partlist
    }

    pub fn directory(&self) -> &Directory {
        &self.dir
    }

    pub fn space(&self) -> &RegionSpace {
        &self.space
    }

    pub fn len(&self) -> u64 {
        self.header.tuples
    }

    pub fn is_empty(&self) -> bool {
        self.header.tuples == 0
    }

    pub fn bucket_count(&self) -> u64 {
        self.header.buckets
    }

    pub fn access_stats(&self) -> AccessStats {
        self.pager.stats()
    }

    pub fn reset_access_stats(&mut self) {
        self.pager.reset_stats()
    }

    pub fn set_trace(&mut self, on: bool) {
        self.pager.set_trace(on)
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.pager.take_trace()
    }

    pub fn stats(&self) -> GridStats {
        let partitions = self.partlist.extents();
        let elements: u64 = partitions.iter().map(|&e| e as u64).product();
        let buckets = self.header.buckets.max(1);
        GridStats {
            tuples: self.header.tuples,
            buckets: self.header.buckets,
            capacity: self.schema.capacity,
            occupancy: self.header.tuples as f64 / (buckets as f64 * self.schema.capacity as f64),
            directory_elements: elements,
            redundancy: elements as f64 / buckets as f64,
            partitions,
            overflow_pages: self.header.overflow_pages,
        }
    }

    fn raw_keys(&self, raw: &[u8]) -> Vec<Key> {
        self.key_slots
            .iter()
            .map(|&(off, w, len)| {
                let mut k = vec![0u8; len];
                k[..w].copy_from_slice(&raw[off..off + w]);
                k
            })
            .collect()
    }

    fn raw_key(&self, raw: &[u8], dim: usize) -> Key {
        let (off, w, len) = self.key_slots[dim];
        let mut k = vec![0u8; len];
        k[..w].copy_from_slice(&raw[off..off + w]);
        k
    }

    fn encode(&self, t: &Tuple) -> Result<Vec<u8>> {
        self.schema.check_tuple(t)?;
        let mut raw = vec![0u8; self.schema.tuple_width()];
        self.schema.encode_tuple(t, &mut raw)?;
        Ok(raw)
    }

    // ---- bucket pages ----

    fn read_bucket(&mut self, page: u32) -> Result<Bucket> {
        let buf = self.pager.read_page(PageId::data(page))?;
        self.read_bucket_from(page, buf)
    }

    fn read_bucket_from(&mut self, page: u32, mut buf: Vec<u8>) -> Result<Bucket> {
        let tw = self.schema.tuple_width();
        let mut b = Bucket {
            pages: vec![page],
            tuples: Vec::new(),
        };
        loop {
            let n = page_count(&buf);
            for i in 0..n {
                let o = BUCKET_HEADER + i * tw;
                b.tuples.push(buf[o..o + tw].to_vec());
            }
            let next = page_next(&buf);
            if next == NO_PAGE {
                return Ok(b);
            }
            b.pages.push(next);
            buf = self.pager.read_page(PageId::data(next))?;
        }
    }

    /// Writes a bucket's tuples over as many chained pages as needed.
    fn write_bucket(&mut self, b: &mut Bucket) -> Result<()> {
        let c = self.schema.capacity;
        let tw = self.schema.tuple_width();
        let needed = b.tuples.len().div_ceil(c).max(1);
        while b.pages.len() < needed {
            let id = self.pager.alloc_page(FileRole::Data)?;
            b.pages.push(id.index);
            self.header.overflow_pages += 1;
            self.dirty = true;
        }
        while b.pages.len() > needed {
            let p = b.pages.pop().unwrap();
            self.pager.free_page(PageId::data(p))?;
            self.header.overflow_pages -= 1;
            self.dirty = true;
        }
        let mut page = vec![0u8; self.pager.page_size()];
        for (i, &p) in b.pages.iter().enumerate() {
            page.fill(0);
            let chunk = b.tuples.get(i * c..((i + 1) * c).min(b.tuples.len())).unwrap_or(&[]);
            page[0..2].copy_from_slice(&(chunk.len() as u16).to_le_bytes());
            let next = b.pages.get(i + 1).copied().unwrap_or(NO_PAGE);
            page[2..6].copy_from_slice(&next.to_le_bytes());
            for (j, t) in chunk.iter().enumerate() {
                let o = BUCKET_HEADER + j * tw;
                page[o..o + tw].copy_from_slice(t);
            }
            self.pager.write_page(PageId::data(p), &page)?;
        }
        Ok(())
    }

    fn alloc_bucket(&mut self) -> Result<u32> {
        let id = self.pager.alloc_page(FileRole::Data)?;
        self.header.buckets += 1;
        self.dirty = true;
        Ok(id.index)
    }

    fn free_bucket(&mut self, page: u32) -> Result<()> {
        self.pager.free_page(PageId::data(page))?;
        self.header.buckets -= 1;
        self.dirty = true;
        Ok(())
    }

    // ---- directory helpers ----

    fn element_at(&mut self, coords: &[usize]) -> Result<DirectoryElement> {
        let at = self.dir.element_ref(&self.partlist, coords);
        self.dir.read_element(&mut self.pager, at)
    }

    /// Every block in `bx` with its element.
    fn blocks_in(
        &mut self,
        bx: &[(usize, usize)],
    ) -> Result<Vec<(Vec<usize>, crate::directory::ElementRef, DirectoryElement)>> {
        let mut out = Vec::new();
        self.dir
            .enumerate_blocks(&mut self.pager, &self.partlist, bx, |_, at, c, e| {
                out.push((c.to_vec(), at, e));
                Ok(())
            })?;
        Ok(out)
    }

    /// The box of blocks sharing the bucket of the block at `anchor`, found
    /// by walking SHARED flags outwards along each axis.
    fn bucket_region(&mut self, anchor: &[usize]) -> Result<BlockBox> {
        let k = self.schema.k();
        let mut region = Vec::with_capacity(k);
        let mut probe = anchor.to_vec();
        for d in 0..k {
            let mut lo = anchor[d];
            while lo > 0 {
                probe[d] = lo;
                if !self.element_at(&probe)?.is_shared(d) {
                    break;
                }
                lo -= 1;
            }
            let mut hi = anchor[d];
            let ext = self.partlist.extent(d);
            while hi + 1 < ext {
                probe[d] = hi + 1;
                if !self.element_at(&probe)?.is_shared(d) {
                    break;
                }
                hi += 1;
            }
            probe[d] = anchor[d];
            region.push((lo, hi));
        }
        Ok(region)
    }

    /// Points every block of `bx` at `bucket`, with SHARED flags describing
    /// `bx` as one region. Unchanged elements are not rewritten.
    fn assign_region(&mut self, bx: &[(usize, usize)], bucket: u32) -> Result<()> {
        for (c, at, e) in self.blocks_in(bx)? {
            let mut ne = DirectoryElement::new(bucket);
            for (d, &(lo, _)) in bx.iter().enumerate() {
                ne.set_shared(d, c[d] > lo);
            }
            if ne != e {
                self.dir.update_element(&mut self.pager, at, &ne)?;
            }
        }
        Ok(())
    }

    // ---- point operations ----

    /// Tuples whose grid attributes equal `values` (one per grid dimension).
    pub fn point_query(&mut self, values: &[Value]) -> Result<Vec<Tuple>> {
        if values.len() != self.schema.k() {
            return Err(Error::InvalidTuple(format!(
                "point query needs {} grid values, got {}",
                self.schema.k(),
                values.len()
            )));
        }
        let keys = values
            .iter()
            .enumerate()
            .map(|(d, v)| self.schema.grid_type(d).key_of(v))
            .collect::<Result<Vec<_>>>()?;
        let loc = self.dir.locate_element(&mut self.pager, &self.partlist, &keys)?;
        let b = self.read_bucket(loc.element.bucket)?;
        Ok(b.tuples
            .iter()
            .filter(|raw| self.raw_keys(raw) == keys)
            .map(|raw| self.schema.decode_tuple(raw))
            .collect())
    }

    pub fn insert(&mut self, t: &Tuple) -> Result<()> {
        let raw = self.encode(t)?;
        let keys = self.raw_keys(&raw);
        let loc = self.dir.locate_element(&mut self.pager, &self.partlist, &keys)?;
        let page = loc.element.bucket;
        let mut buf = self.pager.read_page(PageId::data(page))?;
        self.header.tuples += 1;
        self.dirty = true;
        let n = page_count(&buf);
        if n < self.schema.capacity && page_next(&buf) == NO_PAGE {
            let tw = self.schema.tuple_width();
            let o = BUCKET_HEADER + n * tw;
            buf[o..o + tw].copy_from_slice(&raw);
            buf[0..2].copy_from_slice(&((n + 1) as u16).to_le_bytes());
            return self.pager.write_page(PageId::data(page), &buf);
        }
        let mut bucket = self.read_bucket_from(page, buf)?;
        bucket.tuples.push(raw);
        let region = self.bucket_region(&loc.coords)?;
        self.resolve_overflow(bucket, region)
    }

    /// Splits buckets until each fits its capacity: first by dividing a
    /// multi-block region, then by refining a scale, finally by chaining.
    fn resolve_overflow(&mut self, bucket: Bucket, region: BlockBox) -> Result<()> {
        let c = self.schema.capacity;
        let mut work = vec![(bucket, region)];
        while let Some((mut b, region)) = work.pop() {
            if b.tuples.len() <= c {
                self.write_bucket(&mut b)?;
                continue;
            }
            let widest = region
                .iter()
                .enumerate()
                .filter(|(_, &(lo, hi))| hi > lo)
                .max_by(|(i, x), (j, y)| (x.1 - x.0).cmp(&(y.1 - y.0)).then(j.cmp(i)))
                .map(|(d, _)| d);
            if let Some(d) = widest {
                let (lo, hi) = region[d];
                let m = lo + (hi - lo).div_ceil(2);
                let mut lower = region.clone();
                lower[d] = (lo, m - 1);
                let mut upper = region.clone();
                upper[d] = (m, hi);
                let fresh = self.alloc_bucket()?;
                self.assign_region(&upper, fresh)?;
                let (moved, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut b.tuples)
                    .into_iter()
                    .partition(|raw| self.partlist.block_index(d, &self.raw_key(raw, d)) >= m);
                b.tuples = kept;
                work.push((
                    Bucket {
                        pages: vec![fresh],
                        tuples: moved,
                    },
                    upper,
                ));
                work.push((b, lower));
                continue;
            }
            let coords: Vec<usize> = region.iter().map(|r| r.0).collect();
            let Some((d, v)) = self.choose_split(&coords, &b.tuples) else {
                self.write_bucket(&mut b)?;
                continue;
            };
            let s = coords[d];
            let fresh = self.alloc_bucket()?;
            self.refine(d, v.clone(), &coords, fresh)?;
            for (_, r) in work.iter_mut() {
                if r[d].0 > s {
                    r[d].0 += 1;
                }
                if r[d].1 > s {
                    r[d].1 += 1;
                }
            }
            let (moved, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut b.tuples)
                .into_iter()
                .partition(|raw| v.cmp_key(&self.raw_key(raw, d)).is_le());
            b.tuples = kept;
            let mut upper = region.clone();
            upper[d] = (s + 1, s + 1);
            work.push((
                Bucket {
                    pages: vec![fresh],
                    tuples: moved,
                },
                upper,
            ));
            work.push((b, region));
        }
        Ok(())
    }

    fn choose_split(&mut self, coords: &[usize], tuples: &[Vec<u8>]) -> Option<(usize, ScaleValue)> {
        let k = self.schema.k();
        let try_dim = |g: &GridFile, d: usize, mode: SplitMode| {
            let keys: Vec<Key> = tuples.iter().map(|raw| g.raw_key(raw, d)).collect();
            let refs: Vec<&[u8]> = keys.iter().map(|k| k.as_slice()).collect();
            choose_split_value(
                g.partlist.block_lower(d, coords[d]),
                g.partlist.block_upper(d, coords[d]),
                &refs,
                g.schema.grid_type(d).key_words(),
                mode,
            )
        };
        match self.header.policy {
            SplitPolicy::RoundRobin => {
                for i in 0..k {
                    let d = (self.header.rr_next + i) % k;
                    if let Some(v) = try_dim(self, d, SplitMode::Any) {
                        self.header.rr_next = (d + 1) % k;
                        self.dirty = true;
                        return Some((d, v));
                    }
                }
                None
            }
            SplitPolicy::MidpointFirst => {
                let start = self.header.rr_next;
                let mut pick = (0..k)
                    .map(|i| (start + i) % k)
                    .find_map(|d| try_dim(self, d, SplitMode::Midpoint).map(|v| (d, v)));
                if pick.is_none() {
                    // any attribute; the shortest separating value wins
                    for i in 0..k {
                        let d = (start + i) % k;
                        if let Some(v) = try_dim(self, d, SplitMode::Any) {
                            if pick.as_ref().is_none_or(|(_, p)| v.words() < p.words()) {
                                pick = Some((d, v));
                            }
                        }
                    }
                }
                if let Some((d, _)) = &pick {
                    self.header.rr_next = (d + 1) % k;
                    self.dirty = true;
                }
                pick
            }
        }
    }

    /// Refines dimension `d` at `v` inside the block at `coords`: writes the
    /// new directory piece, then appends the scale entry.
    fn refine(&mut self, d: usize, v: ScaleValue, coords: &[usize], fresh: u32) -> Result<PieceAddr> {
        let pos = self.partlist.len();
        let ext = self.partlist.extents();
        let s = coords[d];
        let mut slab: BlockBox = ext.iter().map(|&e| (0, e - 1)).collect();
        slab[d] = (s, s);
        let n: usize = (0..ext.len()).filter(|&j| j != d).map(|j| ext[j]).product();
        let index_of = |c: &[usize]| (0..ext.len()).filter(|&j| j != d).fold(0, |acc, j| acc * ext[j] + c[j]);
        let mut elems = vec![DirectoryElement::new(NO_PAGE); n];
        for (c, _, e) in self.blocks_in(&slab)? {
            let mut ne = e;
            ne.set_shared(d, true);
            elems[index_of(&c)] = ne;
        }
        elems[index_of(coords)] = DirectoryElement::new(fresh);
        let addr = self
            .dir
            .append_piece_for(&mut self.pager, &self.partlist, d, pos, &elems)?;
        self.partlist.append_entry(&mut self.pager, d, v, addr)?;
        Ok(addr)
    }

    // ---- region operations ----

    fn box_blocks(&self, bx: &Parallelepiped) -> BlockBox {
        block_ranges(&self.partlist, bx)
    }

    /// Buckets to read for `region`, each at most once per region box: a
    /// bucket is taken from the one element of its region whose block is the
    /// region's lowest corner inside the box.
    pub fn plan_scan(&mut self, region: &RegionSet) -> Result<Vec<ScanUnit>> {
        let mut units = Vec::new();
        for (i, bx) in region.boxes().iter().enumerate() {
            let ranges = self.box_blocks(bx);
            let first: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            self.dir
                .enumerate_blocks(&mut self.pager, &self.partlist, &ranges, |_, _, c, e| {
                    if (0..c.len()).all(|j| !e.is_shared(j) || c[j] == first[j]) {
                        units.push(ScanUnit {
                            bucket: e.bucket,
                            region_box: i,
                        });
                    }
                    Ok(())
                })?;
        }
        Ok(units)
    }

    /// Reads one planned bucket and returns its tuples inside the unit's box
    /// that satisfy `residual`.
    pub fn read_unit(&mut self, region: &RegionSet, unit: ScanUnit, residual: &Expr) -> Result<Vec<Tuple>> {
        let bx = &region.boxes()[unit.region_box];
        let b = self.read_bucket(unit.bucket)?;
        let mut out = Vec::new();
        for raw in &b.tuples {
            if bx.contains(&self.raw_keys(raw)) {
                let t = self.schema.decode_tuple(raw);
                if residual.eval(&|c| &t.0[c.attr]) {
                    out.push(t);
                }
            }
        }
        Ok(out)
    }

    /// Tuples in `region` satisfying `residual`, each exactly once.
    pub fn scan_region(&mut self, region: &RegionSet, residual: &Expr) -> Result<Vec<Tuple>> {
        let mut out = Vec::new();
        for unit in self.plan_scan(region)? {
            out.extend(self.read_unit(region, unit, residual)?);
        }
        Ok(out)
    }

    pub fn scan_all(&mut self) -> Result<Vec<Tuple>> {
        let full = self.space.full();
        self.scan_region(&full, &Expr::Bool(true))
    }

    /// Tuples of `region` satisfying `residual`, sorted on grid dimension
    /// `dim`. The scale intervals of `dim` are scanned in order and each
    /// slab is sorted in memory.
    pub fn ordered_scan(&mut self, dim: usize, region: &RegionSet, residual: &Expr) -> Result<Vec<Tuple>> {
        if dim >= self.schema.k() {
            return Err(Error::OutOfRange {
                index: dim,
                len: self.schema.k(),
            });
        }
        let key_len = self.schema.grid_type(dim).key_len();
        let pad = |v: &ScaleValue| {
            let mut k = v.bytes().to_vec();
            k.resize(key_len, 0);
            k
        };
        let mut out = Vec::new();
        for s in 0..self.partlist.extent(dim) {
            let lo = self.partlist.block_lower(dim, s).map_or(vec![0; key_len], pad);
            let hi = self.partlist.block_upper(dim, s).map(pad);
            let slab_iv = Interval::new(lo, hi);
            let boxes = region
                .boxes()
                .iter()
                .map(|b| {
                    let mut ivs = b.intervals().to_vec();
                    ivs[dim] = ivs[dim].intersect(&slab_iv);
                    Parallelepiped::new(ivs)
                })
                .collect();
            let slab = RegionSet::from_disjoint(boxes);
            if slab.is_empty() {
                continue;
            }
            let mut part: Vec<(Key, Tuple)> = self
                .scan_region(&slab, residual)?
                .into_iter()
                .map(|t| (self.schema.grid_key(&t, dim), t))
                .collect();
            part.sort_by(|a, b| a.0.cmp(&b.0));
            out.extend(part.into_iter().map(|(_, t)| t));
        }
        Ok(out)
    }

    /// Deletes the tuples of `region` satisfying `residual` and returns them.
    /// Emptied buckets are merged into a neighbour when the union is a box.
    pub fn delete_where(&mut self, region: &RegionSet, residual: &Expr) -> Result<Vec<Tuple>> {
        let mut deleted = Vec::new();
        let mut emptied: Vec<(u32, Vec<usize>)> = Vec::new();
        for bx in region.boxes() {
            let ranges = self.box_blocks(bx);
            let first: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            let mut targets = Vec::new();
            self.dir
                .enumerate_blocks(&mut self.pager, &self.partlist, &ranges, |_, _, c, e| {
                    if (0..c.len()).all(|j| !e.is_shared(j) || c[j] == first[j]) {
                        targets.push((e.bucket, c.to_vec()));
                    }
                    Ok(())
                })?;
            for (page, coords) in targets {
                let mut b = self.read_bucket(page)?;
                let before = b.tuples.len();
                let mut kept = Vec::with_capacity(before);
                for raw in std::mem::take(&mut b.tuples) {
                    let t = self.schema.decode_tuple(&raw);
                    if bx.contains(&self.raw_keys(&raw)) && residual.eval(&|c| &t.0[c.attr]) {
                        deleted.push(t);
                    } else {
                        kept.push(raw);
                    }
                }
                b.tuples = kept;
                if b.tuples.len() != before {
                    self.write_bucket(&mut b)?;
                    if b.tuples.is_empty() {
                        emptied.push((page, coords));
                    }
                }
            }
        }
        if !deleted.is_empty() {
            self.header.tuples -= deleted.len() as u64;
            self.dirty = true;
        }
        if !emptied.is_empty() {
            self.merge_empty(emptied)?;
        }
        Ok(deleted)
    }

    fn merge_empty(&mut self, emptied: Vec<(u32, Vec<usize>)>) -> Result<()> {
        if self.header.tuples == 0 {
            return self.collapse_all();
        }
        let k = self.schema.k();
        let mut work: VecDeque<(u32, Vec<usize>)> = emptied.into();
        let mut gone = HashSet::new();
        while let Some((page, anchor)) = work.pop_front() {
            if gone.contains(&page) || self.element_at(&anchor)?.bucket != page {
                continue;
            }
            let region = self.bucket_region(&anchor)?;
            'dims: for d in 0..k {
                for upward in [false, true] {
                    let mut probe: Vec<usize> = region.iter().map(|r| r.0).collect();
                    if upward {
                        if region[d].1 + 1 >= self.partlist.extent(d) {
                            continue;
                        }
                        probe[d] = region[d].1 + 1;
                    } else {
                        if region[d].0 == 0 {
                            continue;
                        }
                        probe[d] = region[d].0 - 1;
                    }
                    let other = self.element_at(&probe)?.bucket;
                    let theirs = self.bucket_region(&probe)?;
                    if (0..k).any(|j| j != d && theirs[j] != region[j]) {
                        continue;
                    }
                    let mut union = region.clone();
                    union[d] = (region[d].0.min(theirs[d].0), region[d].1.max(theirs[d].1));
                    self.assign_region(&union, other)?;
                    self.free_bucket(page)?;
                    gone.insert(page);
                    let buf = self.pager.read_page(PageId::data(other))?;
                    if page_count(&buf) == 0 && page_next(&buf) == NO_PAGE {
                        work.push_back((other, probe));
                    }
                    break 'dims;
                }
            }
        }
        Ok(())
    }

    /// With no tuples left, points the whole directory at one bucket and
    /// frees every other bucket.
    fn collapse_all(&mut self) -> Result<()> {
        let full: BlockBox = self.partlist.extents().iter().map(|&e| (0, e - 1)).collect();
        let keep = self.element_at(&vec![0; self.schema.k()])?.bucket;
        let mut others: Vec<u32> = self
            .blocks_in(&full)?
            .into_iter()
            .map(|(_, _, e)| e.bucket)
            .filter(|&b| b != keep)
            .collect();
        others.sort_unstable();
        others.dedup();
        self.assign_region(&full, keep)?;
        for b in others {
            let mut bucket = self.read_bucket(b)?;
            while bucket.pages.len() > 1 {
                let p = bucket.pages.pop().unwrap();
                self.pager.free_page(PageId::data(p))?;
                self.header.overflow_pages -= 1;
            }
            self.free_bucket(b)?;
        }
        let mut root = self.read_bucket(keep)?;
        root.tuples.clear();
        self.write_bucket(&mut root)
    }

    /// Walks the whole directory and every bucket, checking that SHARED
    /// flags describe box-shaped bucket regions and that every tuple lies in
    /// its bucket's region.
    pub fn check_invariants(&mut self) -> std::result::Result<(), String> {
        let ext = self.partlist.extents();
        let full: BlockBox = ext.iter().map(|&e| (0, e - 1)).collect();
        let blocks = self.blocks_in(&full).map_err(|e| e.to_string())?;
        let expected: usize = ext.iter().product();
        if blocks.len() != expected {
            return Err(format!("enumerated {} blocks, expected {expected}", blocks.len()));
        }
        let map: HashMap<Vec<usize>, DirectoryElement> = blocks.iter().map(|(c, _, e)| (c.clone(), *e)).collect();
        if map.len() != expected {
            return Err("a block was enumerated twice".into());
        }
        let mut boxes: HashMap<u32, (BlockBox, usize)> = HashMap::new();
        for (c, e) in &map {
            for d in 0..c.len() {
                let same = c[d] > 0 && {
                    let mut n = c.clone();
                    n[d] -= 1;
                    map[&n].bucket == e.bucket
                };
                if same != e.is_shared(d) {
                    return Err(format!(
                        "block {c:?}: SHARED[{d}] is {} but lower neighbour {} the bucket",
                        e.is_shared(d),
                        if same { "shares" } else { "does not share" }
                    ));
                }
            }
            let entry = boxes
                .entry(e.bucket)
                .or_insert_with(|| (c.iter().map(|&x| (x, x)).collect(), 0));
            for (d, &x) in c.iter().enumerate() {
                entry.0[d].0 = entry.0[d].0.min(x);
                entry.0[d].1 = entry.0[d].1.max(x);
            }
            entry.1 += 1;
        }
        for (b, (bx, n)) in &boxes {
            let vol: usize = bx.iter().map(|(l, h)| h - l + 1).product();
            if vol != *n {
                return Err(format!("bucket {b} region is not a box"));
            }
        }
        if boxes.len() as u64 != self.header.buckets {
            return Err(format!(
                "{} buckets referenced, header says {}",
                boxes.len(),
                self.header.buckets
            ));
        }
        let mut total = 0u64;
        let mut pages: Vec<u32> = boxes.keys().copied().collect();
        pages.sort_unstable();
        for b in pages {
            let bucket = self.read_bucket(b).map_err(|e| e.to_string())?;
            for raw in &bucket.tuples {
                let keys = self.raw_keys(raw);
                let c: Vec<usize> = (0..keys.len())
                    .map(|d| self.partlist.block_index(d, &keys[d]))
                    .collect();
                if map[&c].bucket != b {
                    return Err(format!("tuple in bucket {b} belongs to block {c:?}"));
                }
            }
            total += bucket.tuples.len() as u64;
        }
        if total != self.header.tuples {
            return Err(format!("{total} tuples stored, header says {}", self.header.tuples));
        }
        Ok(())
    }
}

impl Drop for GridFile {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}
