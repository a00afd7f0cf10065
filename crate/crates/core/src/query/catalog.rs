//! The system catalog: two ordinary grid-file relations that describe every
//! relation in the database, themselves included.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::value::{Attribute, DataType, RelationSchema, Tuple, Value};

pub const RELCAT: &str = "RELCAT";
pub const ATTRCAT: &str = "ATTRCAT";

/// Longest relation or attribute name.
pub const NAME_LEN: usize = 32;

const TYPE_INTEGER: i32 = 0;
const TYPE_CHAR: i32 = 1;

pub fn relcat_schema(page_size: usize) -> RelationSchema {
    RelationSchema::new(
        RELCAT,
        vec![
            Attribute::new("RELNAME", DataType::Char(NAME_LEN as u16)),
            Attribute::new("NATTRS", DataType::Integer),
            Attribute::new("CAPACITY", DataType::Integer),
        ],
        page_size,
    )
    .with_grid(vec![0])
}

pub fn attrcat_schema(page_size: usize) -> RelationSchema {
    RelationSchema::new(
        ATTRCAT,
        vec![
            Attribute::new("RELNAME", DataType::Char(NAME_LEN as u16)),
            Attribute::new("POS", DataType::Integer),
            Attribute::new("ATTRNAME", DataType::Char(NAME_LEN as u16)),
            Attribute::new("TYPE", DataType::Integer),
            Attribute::new("WIDTH", DataType::Integer),
            Attribute::new("GRIDPOS", DataType::Integer),
        ],
        page_size,
    )
    .with_grid(vec![0, 1])
}

pub fn is_catalog(name: &str) -> bool {
    name.eq_ignore_ascii_case(RELCAT) || name.eq_ignore_ascii_case(ATTRCAT)
}

/// In-memory copy of the catalog relations.
#[derive(Debug, Clone)]
pub struct Catalog {
    page_size: usize,
    schemas: BTreeMap<String, RelationSchema>,
}

impl Catalog {
    /// Catalog holding only the two catalog relations.
    pub fn bootstrap(page_size: usize) -> Catalog {
        let mut schemas = BTreeMap::new();
        for s in [relcat_schema(page_size), attrcat_schema(page_size)] {
            schemas.insert(s.name.clone(), s);
        }
        Catalog { page_size, schemas }
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn get(&self, name: &str) -> Option<&RelationSchema> {
        self.schemas.get(&name.to_ascii_uppercase())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schemas.keys().map(|s| s.as_str())
    }

    pub fn schemas(&self) -> impl Iterator<Item = &RelationSchema> {
        self.schemas.values()
    }

    pub fn insert(&mut self, schema: RelationSchema) {
        self.schemas.insert(schema.name.clone(), schema);
    }

    pub fn remove(&mut self, name: &str) -> Option<RelationSchema> {
        self.schemas.remove(&name.to_ascii_uppercase())
    }

    /// RELCAT row and ATTRCAT rows describing `s`.
    pub fn rows_for(s: &RelationSchema) -> (Tuple, Vec<Tuple>) {
        let name = Value::Char(s.name.clone());
        let rel = Tuple(vec![
            name.clone(),
            Value::Int(s.attributes.len() as i32),
            Value::Int(s.capacity as i32),
        ]);
        let attrs = s
            .attributes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (ty, width) = match a.ty {
                    DataType::Integer => (TYPE_INTEGER, 4),
                    DataType::Char(n) => (TYPE_CHAR, n as i32),
                };
                Tuple(vec![
                    name.clone(),
                    Value::Int(i as i32),
                    Value::Char(a.name.clone()),
                    Value::Int(ty),
                    Value::Int(width),
                    Value::Int(s.grid_dim(i).map_or(-1, |d| d as i32)),
                ])
            })
            .collect();
        (rel, attrs)
    }

    /// Rebuilds the catalog from the contents of RELCAT and ATTRCAT.
    pub fn from_rows(page_size: usize, relcat: &[Tuple], attrcat: &[Tuple]) -> Result<Catalog> {
        let corrupt = |m: String| Error::CorruptHeader(format!("catalog: {m}"));
        let text = |v: &Value| match v {
            Value::Char(s) => Ok(s.clone()),
            _ => Err(corrupt("expected a name".into())),
        };
        let int = |v: &Value| match v {
            Value::Int(i) => Ok(*i),
            _ => Err(corrupt("expected an integer".into())),
        };
        let mut cat = Catalog {
            page_size,
            schemas: BTreeMap::new(),
        };
        for r in relcat {
            let name = text(&r[0])?;
            let nattrs = int(&r[1])?;
            let capacity = int(&r[2])?;
            let mut rows: Vec<&Tuple> = attrcat
                .iter()
                .filter(|a| matches!(&a[0], Value::Char(n) if *n == name))
                .collect();
            rows.sort_by_key(|a| int(&a[1]).unwrap_or(-1));
            if rows.len() != nattrs as usize {
                return Err(corrupt(format!(
                    "{name} lists {nattrs} attributes, found {}",
                    rows.len()
                )));
            }
            let mut attributes = Vec::new();
            let mut grid: Vec<(i32, usize)> = Vec::new();
            for (i, a) in rows.iter().enumerate() {
                if int(&a[1])? != i as i32 {
                    return Err(corrupt(format!("{name} attribute positions are not dense")));
                }
                let ty = match (int(&a[3])?, int(&a[4])?) {
                    (TYPE_INTEGER, _) => DataType::Integer,
                    (TYPE_CHAR, w) if (1..=u16::MAX as i32).contains(&w) => DataType::Char(w as u16),
                    (t, w) => return Err(corrupt(format!("bad type {t}/{w}"))),
                };
                attributes.push(Attribute::new(&text(&a[2])?, ty));
                let g = int(&a[5])?;
                if g >= 0 {
                    grid.push((g, i));
                }
            }
            grid.sort_unstable();
            let schema = RelationSchema {
                name: name.clone(),
                attributes,
                grid: grid.into_iter().map(|(_, i)| i).collect(),
                capacity: capacity.max(0) as usize,
            };
            schema.validate(page_size)?;
            cat.schemas.insert(name, schema);
        }
        for s in [relcat_schema(page_size), attrcat_schema(page_size)] {
            if cat.get(&s.name) != Some(&s) {
                return Err(corrupt(format!("{} does not describe itself", s.name)));
            }
        }
        Ok(cat)
    }
}
