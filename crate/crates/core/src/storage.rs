//! Page-granular file storage.
//!
//! Every relation lives in three files, `<rel>.dat` (buckets), `<rel>.dir`
//! (directory pieces) and `<rel>.scales` (the partition list). The [`Pager`]
//! is the only code that touches them, and it counts every physical page read
//! and write per file role. Those counters are the cost metric reported by the
//! engine, so nothing above this layer may bypass them.
//!
//! An optional read cache can be switched on. Cache hits are not physical
//! accesses and are not counted; turn the cache off when measuring.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const DEFAULT_PAGE_SIZE: usize = 4096;
pub const MIN_PAGE_SIZE: usize = 64;
pub const MAX_PAGE_SIZE: usize = 65536;

/// Sentinel used for "no page" in on-disk links.
pub const NO_PAGE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FileRole {
    Data,
    Directory,
    Scales,
}

impl FileRole {
    pub const ALL: [FileRole; 3] = [FileRole::Data, FileRole::Directory, FileRole::Scales];

    pub fn extension(self) -> &'static str {
        match self {
            FileRole::Data => "dat",
            FileRole::Directory => "dir",
            FileRole::Scales => "scales",
        }
    }

    fn slot(self) -> usize {
        match self {
            FileRole::Data => 0,
            FileRole::Directory => 1,
            FileRole::Scales => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PageId {
    pub role: FileRole,
    pub index: u32,
}

impl PageId {
    pub fn data(index: u32) -> Self {
        PageId {
            role: FileRole::Data,
            index,
        }
    }

    pub fn dir(index: u32) -> Self {
        PageId {
            role: FileRole::Directory,
            index,
        }
    }

    pub fn scales(index: u32) -> Self {
        PageId {
            role: FileRole::Scales,
            index,
        }
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.role.extension(), self.index)
    }
}

/// Physical page access counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccessStats {
    pub data_reads: u64,
    pub data_writes: u64,
    pub dir_reads: u64,
    pub dir_writes: u64,
    pub scale_reads: u64,
    pub scale_writes: u64,
}

impl AccessStats {
    pub fn reads(&self) -> u64 {
        self.data_reads + self.dir_reads + self.scale_reads
    }

    pub fn writes(&self) -> u64 {
        self.data_writes + self.dir_writes + self.scale_writes
    }

    pub fn reads_for(&self, role: FileRole) -> u64 {
        match role {
            FileRole::Data => self.data_reads,
            FileRole::Directory => self.dir_reads,
            FileRole::Scales => self.scale_reads,
        }
    }

    pub fn writes_for(&self, role: FileRole) -> u64 {
        match role {
            FileRole::Data => self.data_writes,
            FileRole::Directory => self.dir_writes,
            FileRole::Scales => self.scale_writes,
        }
    }

    fn count_read(&mut self, role: FileRole) {
        match role {
            FileRole::Data => self.data_reads += 1,
            FileRole::Directory => self.dir_reads += 1,
            FileRole::Scales => self.scale_reads += 1,
        }
    }

    fn count_write(&mut self, role: FileRole) {
        match role {
            FileRole::Data => self.data_writes += 1,
            FileRole::Directory => self.dir_writes += 1,
            FileRole::Scales => self.scale_writes += 1,
        }
    }
}

impl std::ops::Add for AccessStats {
    type Output = AccessStats;

    fn add(self, o: AccessStats) -> AccessStats {
        AccessStats {
            data_reads: self.data_reads + o.data_reads,
            data_writes: self.data_writes + o.data_writes,
            dir_reads: self.dir_reads + o.dir_reads,
            dir_writes: self.dir_writes + o.dir_writes,
            scale_reads: self.scale_reads + o.scale_reads,
            scale_writes: self.scale_writes + o.scale_writes,
        }
    }
}

impl std::ops::AddAssign for AccessStats {
    fn add_assign(&mut self, o: AccessStats) {
        *self = *self + o;
    }
}

/// One physical page operation, recorded while tracing is enabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Read(PageId),
    Write {
        id: PageId,
        before: Vec<u8>,
        after: Vec<u8>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PagerOptions {
    pub page_size: usize,
    /// Number of pages kept in the read cache; 0 disables it.
    pub cache_pages: usize,
}

impl Default for PagerOptions {
    fn default() -> Self {
        PagerOptions {
            page_size: DEFAULT_PAGE_SIZE,
            cache_pages: 0,
        }
    }
}

#[derive(Debug)]
struct PageFile {
    file: File,
    pages: u32,
}

#[derive(Debug)]
pub struct Pager {
    files: [PageFile; 3],
    page_size: usize,
    free_head: u32,
    stats: AccessStats,
    cache: Option<PageCache>,
    trace: Option<Vec<TraceEvent>>,
}

#[derive(Debug)]
struct PageCache {
    capacity: usize,
    pages: HashMap<PageId, Vec<u8>>,
}

pub fn relation_path(dir: &Path, name: &str, role: FileRole) -> PathBuf {
    dir.join(format!("{}.{}", name, role.extension()))
}

fn check_page_size(page_size: usize) -> Result<()> {
    if !(MIN_PAGE_SIZE..=MAX_PAGE_SIZE).contains(&page_size) {
        return Err(Error::InvalidSchema(format!(
            "page size {page_size} outside {MIN_PAGE_SIZE}..={MAX_PAGE_SIZE}"
        )));
    }
    Ok(())
}

impl Pager {
    /// Creates the three files of relation `name` in `dir`. Fails if any exists.
    pub fn create(dir: &Path, name: &str, opts: PagerOptions) -> Result<Pager> {
        check_page_size(opts.page_size)?;
        for role in FileRole::ALL {
            let path = relation_path(dir, name, role);
            if path.exists() {
                return Err(Error::Exists(path));
            }
        }
        let mut files = Vec::with_capacity(3);
        for role in FileRole::ALL {
            let file = OpenOptions::new()
                .read(true)
                .write(true)
                .create_new(true)
                .open(relation_path(dir, name, role))?;
            files.push(PageFile { file, pages: 0 });
        }
        Ok(Self::assemble(files, opts))
    }

    pub fn open(dir: &Path, name: &str, opts: PagerOptions) -> Result<Pager> {
        check_page_size(opts.page_size)?;
        let mut files = Vec::with_capacity(3);
        for role in FileRole::ALL {
            let path = relation_path(dir, name, role);
            if !path.exists() {
                return Err(Error::NotFound(path));
            }
            let file = OpenOptions::new().read(true).write(true).open(&path)?;
            let len = file.metadata()?.len();
            if len % opts.page_size as u64 != 0 {
                return Err(Error::CorruptHeader(format!(
                    "{} length {len} is not a multiple of the page size {}",
                    path.display(),
                    opts.page_size
                )));
            }
            let pages = (len / opts.page_size as u64) as u32;
            files.push(PageFile { file, pages });
        }
        Ok(Self::assemble(files, opts))
    }

    fn assemble(files: Vec<PageFile>, opts: PagerOptions) -> Pager {
        let files: [PageFile; 3] = files.try_into().expect("three files");
        Pager {
            files,
            page_size: opts.page_size,
            free_head: NO_PAGE,
            stats: AccessStats::default(),
            cache: (opts.cache_pages > 0).then(|| PageCache {
                capacity: opts.cache_pages,
                pages: HashMap::new(),
            }),
            trace: None,
        }
    }

    /// Deletes the files of relation `name`. Missing files are ignored.
    pub fn remove_files(dir: &Path, name: &str) -> Result<()> {
        for role in FileRole::ALL {
            match std::fs::remove_file(relation_path(dir, name, role)) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn page_count(&self, role: FileRole) -> u32 {
        self.files[role.slot()].pages
    }

    pub fn free_list_head(&self) -> Option<u32> {
        (self.free_head != NO_PAGE).then_some(self.free_head)
    }

    /// Restores the free-list head persisted by the owner of the data file.
    pub fn set_free_list_head(&mut self, head: Option<u32>) {
        self.free_head = head.unwrap_or(NO_PAGE);
    }

    pub fn stats(&self) -> AccessStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = AccessStats::default();
    }

    pub fn set_trace(&mut self, on: bool) {
        self.trace = on.then(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Allocates a zero-filled page. Data pages are taken from the free list
    /// first; directory and scale files only grow.
    pub fn alloc_page(&mut self, role: FileRole) -> Result<PageId> {
        if role == FileRole::Data && self.free_head != NO_PAGE {
            let id = PageId::data(self.free_head);
            let page = self.read_page(id)?;
            self.free_head = u32::from_le_bytes(page[0..4].try_into().unwrap());
            self.write_page(id, &vec![0u8; self.page_size])?;
            return Ok(id);
        }
        let ps = self.page_size as u64;
        let pf = &mut self.files[role.slot()];
        if pf.pages == NO_PAGE - 1 {
            return Err(Error::StorageFull("page index space exhausted"));
        }
        let index = pf.pages;
        pf.file.set_len((index as u64 + 1) * ps)?;
        pf.pages += 1;
        Ok(PageId { role, index })
    }

    /// Returns a data page to the free list.
    pub fn free_page(&mut self, id: PageId) -> Result<()> {
        if id.role != FileRole::Data {
            return Err(Error::InvalidFree(id));
        }
        self.check(id)?;
        let mut page = vec![0u8; self.page_size];
        page[0..4].copy_from_slice(&self.free_head.to_le_bytes());
        self.write_page(id, &page)?;
        self.free_head = id.index;
        Ok(())
    }

    fn check(&self, id: PageId) -> Result<()> {
        if id.index >= self.files[id.role.slot()].pages {
            return Err(Error::UnknownPage(id));
        }
        Ok(())
    }

    pub fn read_page(&mut self, id: PageId) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; self.page_size];
        self.read_page_into(id, &mut buf)?;
        Ok(buf)
    }

    pub fn read_page_into(&mut self, id: PageId, buf: &mut [u8]) -> Result<()> {
        if buf.len() != self.page_size {
            return Err(Error::WrongLength {
                expected: self.page_size,
                got: buf.len(),
            });
        }
        self.check(id)?;
        if let Some(cache) = &self.cache {
            if let Some(p) = cache.pages.get(&id) {
                buf.copy_from_slice(p);
                return Ok(());
            }
        }
        self.raw_read(id, buf)?;
        self.stats.count_read(id.role);
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent::Read(id));
        }
        if let Some(cache) = &mut self.cache {
            if cache.pages.len() >= cache.capacity {
                cache.pages.clear();
            }
            cache.pages.insert(id, buf.to_vec());
        }
        Ok(())
    }

    pub fn write_page(&mut self, id: PageId, buf: &[u8]) -> Result<()> {
        if buf.len() != self.page_size {
            return Err(Error::WrongLength {
                expected: self.page_size,
                got: buf.len(),
            });
        }
        self.check(id)?;
        if self.trace.is_some() {
            let mut before = vec![0u8; self.page_size];
            self.raw_read(id, &mut before)?;
            self.trace.as_mut().unwrap().push(TraceEvent::Write {
                id,
                before,
                after: buf.to_vec(),
            });
        }
        let offset = id.index as u64 * self.page_size as u64;
        let f = &mut self.files[id.role.slot()].file;
        f.seek(SeekFrom::Start(offset))?;
        f.write_all(buf)?;
        self.stats.count_write(id.role);
        if let Some(cache) = &mut self.cache {
            if let Some(p) = cache.pages.get_mut(&id) {
                p.copy_from_slice(buf);
            }
        }
        Ok(())
    }

    fn raw_read(&mut self, id: PageId, buf: &mut [u8]) -> Result<()> {
        let offset = id.index as u64 * self.page_size as u64;
        let f = &mut self.files[id.role.slot()].file;
        f.seek(SeekFrom::Start(offset))?;
        f.read_exact(buf)?;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<()> {
        for pf in &mut self.files {
            pf.file.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pager(dir: &Path) -> Pager {
        Pager::create(
            dir,
            "T",
            PagerOptions {
                page_size: 128,
                cache_pages: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn first_alloc_is_page_zero_and_ids_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = pager(dir.path());
        let a = p.alloc_page(FileRole::Data).unwrap();
        let b = p.alloc_page(FileRole::Data).unwrap();
        assert_eq!(a, PageId::data(0));
        assert_ne!(a, b);
        assert_eq!(p.read_page(a).unwrap(), vec![0u8; 128]);
    }

    #[test]
    fn freed_page_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = pager(dir.path());
        for _ in 0..5 {
            p.alloc_page(FileRole::Data).unwrap();
        }
        p.write_page(PageId::data(3), &[7u8; 128]).unwrap();
        p.free_page(PageId::data(3)).unwrap();
        let again = p.alloc_page(FileRole::Data).unwrap();
        assert_eq!(again, PageId::data(3));
        assert_eq!(p.read_page(again).unwrap(), vec![0u8; 128]);
        // list is empty again, so the file grows
        assert_eq!(p.alloc_page(FileRole::Data).unwrap(), PageId::data(5));
        assert!(p.free_page(PageId::dir(0)).is_err());
    }

    #[test]
    fn counters_follow_scripted_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = pager(dir.path());
        let d = p.alloc_page(FileRole::Directory).unwrap();
        let x = vec![9u8; 128];
        p.write_page(d, &x).unwrap();
        p.write_page(d, &x).unwrap();
        for _ in 0..5 {
            assert_eq!(p.read_page(d).unwrap(), x);
        }
        let s = p.stats();
        assert_eq!((s.dir_reads, s.dir_writes), (5, 2));
        assert_eq!(s.data_reads + s.scale_reads, 0);
        p.reset_stats();
        assert_eq!(p.stats(), AccessStats::default());
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = pager(dir.path());
        assert!(matches!(p.read_page(PageId::data(0)), Err(Error::UnknownPage(_))));
        let id = p.alloc_page(FileRole::Data).unwrap();
        assert!(matches!(p.write_page(id, &[0u8; 3]), Err(Error::WrongLength { .. })));
        assert!(matches!(
            Pager::create(dir.path(), "T", PagerOptions::default()),
            Err(Error::Exists(_))
        ));
        assert!(matches!(
            Pager::open(dir.path(), "U", PagerOptions::default()),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn content_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let opts = PagerOptions {
            page_size: 128,
            cache_pages: 0,
        };
        {
            let mut p = Pager::create(dir.path(), "T", opts).unwrap();
            let id = p.alloc_page(FileRole::Scales).unwrap();
            p.write_page(id, &[5u8; 128]).unwrap();
        }
        let mut p = Pager::open(dir.path(), "T", opts).unwrap();
        assert_eq!(p.page_count(FileRole::Scales), 1);
        assert_eq!(p.read_page(PageId::scales(0)).unwrap(), vec![5u8; 128]);
    }

    #[test]
    fn cache_hits_are_not_counted() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = Pager::create(
            dir.path(),
            "T",
            PagerOptions {
                page_size: 128,
                cache_pages: 4,
            },
        )
        .unwrap();
        let id = p.alloc_page(FileRole::Data).unwrap();
        p.write_page(id, &[1u8; 128]).unwrap();
        p.read_page(id).unwrap();
        p.read_page(id).unwrap();
        assert_eq!(p.stats().data_reads, 1);
        p.write_page(id, &[2u8; 128]).unwrap();
        assert_eq!(p.read_page(id).unwrap(), vec![2u8; 128]);
    }
}
