//! Tokenizer. Keywords and identifiers are case-insensitive and come out
//! upper-cased; string literals keep their case.

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Keyword(&'static str),
    Int(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Star,
    Dot,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Eof,
}

pub const KEYWORDS: &[&str] = &[
    "AND", "AS", "ASC", "BY", "CHAR", "CREATE", "DELETE", "DESC", "DROP", "FROM", "GRID", "INSERT", "INTEGER", "INTO",
    "NOT", "OR", "ORDER", "SELECT", "SET", "TABLE", "UPDATE", "VALUES", "WHERE",
];

impl Tok {
    /// Human-readable form used in error messages.
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Keyword(k) => k.to_string(),
            Tok::Int(s) => format!("integer {s}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Star => "'*'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Eq => "'='".into(),
            Tok::Ne => "'<>'".into(),
            Tok::Lt => "'<'".into(),
            Tok::Le => "'<='".into(),
            Tok::Gt => "'>'".into(),
            Tok::Ge => "'>='".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = src[start..i].to_ascii_uppercase();
            match KEYWORDS.iter().find(|&&k| k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            Tok::Int(src[start..i].to_string())
        } else if c == b'\'' {
            let mut s = Vec::new();
            i += 1;
            loop {
                match bytes.get(i) {
                    None => {
                        return Err(SyntaxError {
                            position: start,
                            expected: vec!["closing quote".into()],
                            found: "unterminated string".into(),
                        })
                    }
                    Some(b'\'') if bytes.get(i + 1) == Some(&b'\'') => {
                        s.push(b'\'');
                        i += 2;
                    }
                    Some(b'\'') => {
                        i += 1;
                        break;
                    }
                    Some(&b) => {
                        s.push(b);
                        i += 1;
                    }
                }
            }
            Tok::Str(String::from_utf8_lossy(&s).into_owned())
        } else {
            i += 1;
            let next = bytes.get(i).copied();
            match (c, next) {
                (b'<', Some(b'>')) | (b'!', Some(b'=')) => {
                    i += 1;
                    Tok::Ne
                }
                (b'<', Some(b'=')) => {
                    i += 1;
                    Tok::Le
                }
                (b'>', Some(b'=')) => {
                    i += 1;
                    Tok::Ge
                }
                (b'<', _) => Tok::Lt,
                (b'>', _) => Tok::Gt,
                (b'=', _) => Tok::Eq,
                (b'(', _) => Tok::LParen,
                (b')', _) => Tok::RParen,
                (b',', _) => Tok::Comma,
                (b';', _) => Tok::Semi,
                (b'*', _) => Tok::Star,
                (b'.', _) => Tok::Dot,
                (b'+', _) => Tok::Plus,
                (b'-', _) => Tok::Minus,
                _ => {
                    let ch = src[start..].chars().next().unwrap();
                    return Err(SyntaxError {
                        position: start,
                        expected: vec!["a token".into()],
                        found: format!("character {ch:?}"),
                    });
                }
            }
        };
        out.push(Token { tok, pos: start });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: src.len(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let t = tokenize("select a<>'it''s' -- note\n <= 12;").unwrap();
        let toks: Vec<_> = t.iter().map(|t| (t.tok.clone(), t.pos)).collect();
        assert_eq!(
            toks,
            vec![
                (Tok::Keyword("SELECT"), 0),
                (Tok::Ident("A".into()), 7),
                (Tok::Ne, 8),
                (Tok::Str("it's".into()), 10),
                (Tok::Le, 27),
                (Tok::Int("12".into()), 30),
                (Tok::Semi, 32),
                (Tok::Eof, 33),
            ]
        );
    }

    #[test]
    fn bad_input() {
        assert_eq!(tokenize("'abc").unwrap_err().position, 0);
        assert_eq!(tokenize("a # b").unwrap_err().position, 2);
        // multi-byte characters are reported whole
        assert!(tokenize("é").unwrap_err().found.contains('é'));
    }
}
