//! Attribute types, values, tuples and the order-preserving key encoding.
//!
//! Grid coordinates are compared as unsigned byte strings. INTEGER values are
//! stored offset-binary big-endian so byte order equals numeric order, and
//! CHAR(n) values are space padded to n bytes. A grid key is the stored field
//! padded with zero bytes to a whole number of words.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Bytes per word of a coded scale value.
pub const WORD: usize = 4;

pub type Key = Vec<u8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    Integer,
    Char(u16),
}

impl DataType {
    pub fn width(self) -> usize {
        match self {
            DataType::Integer => 4,
            DataType::Char(n) => n as usize,
        }
    }

    /// Key length in words.
    pub fn key_words(self) -> usize {
        self.width().div_ceil(WORD)
    }

    pub fn key_len(self) -> usize {
        self.key_words() * WORD
    }

    pub fn encode(self, v: &Value, out: &mut [u8]) -> Result<()> {
        match (self, v) {
            (DataType::Integer, Value::Int(i)) => {
                out[..4].copy_from_slice(&((*i as u32) ^ 0x8000_0000).to_be_bytes());
                Ok(())
            }
            (DataType::Char(n), Value::Char(s)) => {
                let b = s.as_bytes();
                if b.len() > n as usize {
                    return Err(Error::InvalidTuple(format!(
                        "string of {} bytes does not fit CHAR({n})",
                        b.len()
                    )));
                }
                out[..b.len()].copy_from_slice(b);
                out[b.len()..n as usize].fill(b' ');
                Ok(())
            }
            (t, v) => Err(Error::TypeMismatch(format!("{v} is not a {t} value"))),
        }
    }

    pub fn decode(self, bytes: &[u8]) -> Value {
        match self {
            DataType::Integer => {
                let u = u32::from_be_bytes(bytes[..4].try_into().unwrap());
                Value::Int((u ^ 0x8000_0000) as i32)
            }
            DataType::Char(n) => {
                let raw = &bytes[..n as usize];
                let end = raw.iter().rposition(|&b| b != b' ' && b != 0).map_or(0, |p| p + 1);
                Value::Char(String::from_utf8_lossy(&raw[..end]).into_owned())
            }
        }
    }

    /// Grid key of a value of this type.
    pub fn key_of(self, v: &Value) -> Result<Key> {
        let mut k = vec![0u8; self.key_len()];
        self.encode(v, &mut k)?;
        Ok(k)
    }

    /// Best-effort inverse of [`DataType::key_of`], used for display.
    pub fn value_of_key(self, key: &[u8]) -> Value {
        let mut buf = vec![0u8; self.key_len().max(self.width())];
        let n = key.len().min(buf.len());
        buf[..n].copy_from_slice(&key[..n]);
        self.decode(&buf)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Integer => write!(f, "INTEGER"),
            DataType::Char(n) => write!(f, "CHAR({n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i32),
    Char(String),
}

impl Value {
    pub fn data_type_matches(&self, t: DataType) -> bool {
        matches!(
            (self, t),
            (Value::Int(_), DataType::Integer) | (Value::Char(_), DataType::Char(_))
        )
    }

    /// SQL comparison: integers numerically, strings as space-padded bytes.
    /// `None` when the types differ.
    pub fn sql_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Char(a), Value::Char(b)) => Some(cmp_padded(a.as_bytes(), b.as_bytes())),
            _ => None,
        }
    }
}

/// Compares two byte strings as if both were padded with spaces to equal length.
pub fn cmp_padded(a: &[u8], b: &[u8]) -> Ordering {
    let n = a.len().max(b.len());
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(b' ');
        let y = b.get(i).copied().unwrap_or(b' ');
        match x.cmp(&y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Char(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tuple(pub Vec<Value>);

impl Tuple {
    pub fn values(&self) -> &[Value] {
        &self.0
    }
}

impl std::ops::Index<usize> for Tuple {
    type Output = Value;

    fn index(&self, i: usize) -> &Value {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub ty: DataType,
}

impl Attribute {
    pub fn new(name: &str, ty: DataType) -> Self {
        Attribute {
            name: name.to_ascii_uppercase(),
            ty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: String,
    pub attributes: Vec<Attribute>,
    /// Attribute indices that define the grid, in dimension order.
    pub grid: Vec<usize>,
    /// Maximum tuples per bucket page.
    pub capacity: usize,
}

/// Bytes reserved at the start of each data page (count + overflow link).
pub const BUCKET_HEADER: usize = 8;

impl RelationSchema {
    /// Schema with every attribute in the grid and the largest capacity that
    /// fits `page_size`.
    pub fn new(name: &str, attributes: Vec<Attribute>, page_size: usize) -> Self {
        let grid = (0..attributes.len()).collect();
        let mut s = RelationSchema {
            name: name.to_ascii_uppercase(),
            attributes,
            grid,
            capacity: 0,
        };
        s.capacity = s.max_capacity(page_size);
        s
    }

    pub fn with_grid(mut self, grid: Vec<usize>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn tuple_width(&self) -> usize {
        self.attributes.iter().map(|a| a.ty.width()).sum()
    }

    pub fn max_capacity(&self, page_size: usize) -> usize {
        let w = self.tuple_width().max(1);
        page_size.saturating_sub(BUCKET_HEADER) / w
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name.eq_ignore_ascii_case(name))
    }

    /// Grid dimension of attribute `attr`, if it is a grid attribute.
    pub fn grid_dim(&self, attr: usize) -> Option<usize> {
        self.grid.iter().position(|&a| a == attr)
    }

    pub fn grid_type(&self, dim: usize) -> DataType {
        self.attributes[self.grid[dim]].ty
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.attributes.len());
        let mut o = 0;
        for a in &self.attributes {
            off.push(o);
            o += a.ty.width();
        }
        off
    }

    pub fn validate(&self, page_size: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchema(m));
        if self.name.is_empty() {
            return bad("empty relation name".into());
        }
        if self.attributes.is_empty() {
            return bad("relation has no attributes".into());
        }
        for (i, a) in self.attributes.iter().enumerate() {
            if let DataType::Char(0) = a.ty {
                return bad(format!("attribute {} has zero width", a.name));
            }
            if self.attributes[..i].iter().any(|b| b.name == a.name) {
                return bad(format!("duplicate attribute {}", a.name));
            }
        }
        if self.grid.is_empty() {
            return bad("grid must have at least one attribute (k >= 1)".into());
        }
        if self.grid.len() > 64 {
            return bad("grid has more than 64 attributes".into());
        }
        for (i, &g) in self.grid.iter().enumerate() {
            if g >= self.attributes.len() {
                return bad(format!("grid attribute index {g} out of range"));
            }
            if self.grid[..i].contains(&g) {
                return bad(format!("grid attribute {} listed twice", self.attributes[g].name));
            }
        }
        if self.capacity < 2 {
            return bad(format!("bucket capacity {} is below 2", self.capacity));
        }
        if self.capacity > self.max_capacity(page_size) {
            return bad(format!(
                "bucket capacity {} does not fit a {page_size}-byte page",
                self.capacity
            ));
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a hash of the schema, stored in the relation header.
    pub fn schema_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.name.as_bytes());
        for a in &self.attributes {
            eat(&[0xff]);
            eat(a.name.as_bytes());
            match a.ty {
                DataType::Integer => eat(&[1]),
                DataType::Char(n) => {
                    eat(&[2]);
                    eat(&n.to_le_bytes());
                }
            }
        }
        for &g in &self.grid {
            eat(&(g as u32).to_le_bytes());
        }
        eat(&(self.capacity as u32).to_le_bytes());
        h
    }

    pub fn check_tuple(&self, t: &Tuple) -> Result<()> {
        if t.0.len() != self.attributes.len() {
            return Err(Error::InvalidTuple(format!(
                "{} has {} attributes, got {} values",
                self.name,
                self.attributes.len(),
                t.0.len()
            )));
        }
        for (v, a) in t.0.iter().zip(&self.attributes) {
            if !v.data_type_matches(a.ty) {
                return Err(Error::TypeMismatch(format!(
                    "{v} is not a {} value for {}",
                    a.ty, a.name
                )));
            }
            if let (Value::Char(s), DataType::Char(n)) = (v, a.ty) {
                if s.len() > n as usize {
                    return Err(Error::InvalidTuple(format!(
                        "value for {} is longer than {n} bytes",
                        a.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn encode_tuple(&self, t: &Tuple, out: &mut [u8]) -> Result<()> {
        let mut o = 0;
        for (v, a) in t.0.iter().zip(&self.attributes) {
            let w = a.ty.width();
            a.ty.encode(v, &mut out[o..o + w])?;
            o += w;
        }
        Ok(())
    }

    pub fn decode_tuple(&self, bytes: &[u8]) -> Tuple {
        let mut o = 0;
        let mut vals = Vec::with_capacity(self.attributes.len());
        for a in &self.attributes {
            let w = a.ty.width();
            vals.push(a.ty.decode(&bytes[o..o + w]));
            o += w;
        }
        Tuple(vals)
    }

    /// Grid key of `t` along grid dimension `dim`.
    pub fn grid_key(&self, t: &Tuple, dim: usize) -> Key {
        let a = &self.attributes[self.grid[dim]];
        a.ty.key_of(&t.0[self.grid[dim]]).expect("tuple checked against schema")
    }

    pub fn grid_keys(&self, t: &Tuple) -> Vec<Key> {
        (0..self.k()).map(|d| self.grid_key(t, d)).collect()
    }
}
