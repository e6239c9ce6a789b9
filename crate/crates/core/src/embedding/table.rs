use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Dense token vectors.
///
/// Tokens keep the order they were inserted in (descending frequency for
/// trained tables). The text form is a `dim=<d> vocab=<n>` header followed by
/// one `<token> <v1> ... <vd>` line per token; floats are written in their
/// shortest round-trip form so a reload is bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    counts: Option<Vec<u64>>,
}

impl EmbeddingTable {
    pub(crate) fn from_parts(
        dim: usize,
        tokens: Vec<String>,
        data: Vec<f64>,
        counts: Option<Vec<u64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if data.len() != tokens.len() * dim {
            return Err(Error::Shape(format!(
                "{} tokens of dim {dim} need {} values, got {}",
                tokens.len(),
                tokens.len() * dim,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite component for token `{}`", tokens[bad / dim])));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(Error::Data(format!("invalid token `{t}`")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate token `{t}`")));
            }
        }
        Ok(EmbeddingTable { dim, tokens, index, data, counts })
    }

    /// Table built from explicit `(token, vector)` rows.
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut tokens = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (token, v) in rows {
            if v.len() != dim {
                return Err(Error::Shape(format!("vector for `{token}` has {} components, expected {dim}", v.len())));
            }
            tokens.push(token);
            data.extend(v);
        }
        Self::from_parts(dim, tokens, data, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vector(i))
    }

    pub(crate) fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Training-corpus frequency; `None` for tables loaded from disk.
    pub fn frequency(&self, token: &str) -> Option<u64> {
        let counts = self.counts.as_ref()?;
        self.index.get(token).map(|&i| counts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens.iter().enumerate().map(|(i, t)| (t.as_str(), self.vector(i)))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dim={} vocab={}\n", self.dim, self.tokens.len());
        for (token, v) in self.iter() {
            out.push_str(token);
            for x in v {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty embedding file"))?;
        let (dim, vocab) = parse_header(header)
            .ok_or_else(|| Error::parse(path, 1, format!("expected `dim=<d> vocab=<n>`, got `{header}`")))?;
        let mut tokens = Vec::with_capacity(vocab);
        let mut data = Vec::with_capacity(vocab * dim);
        for (no, line) in lines {
            let mut fields = line.split(' ');
            let token = fields.next().unwrap_or_default().to_owned();
            let before = data.len();
            for f in fields {
                let v: f64 = f.parse().map_err(|_| Error::parse(path, no + 1, format!("bad float `{f}`")))?;
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(Error::parse(
                    path,
                    no + 1,
                    format!("expected {dim} components, got {}", data.len() - before),
                ));
            }
            tokens.push(token);
        }
        if tokens.len() != vocab {
            return Err(Error::parse(path, 1, format!("header says {vocab} tokens, file has {}", tokens.len())));
        }
        Self::from_parts(dim, tokens, data, None)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split(' ');
    let dim = it.next()?.strip_prefix("dim=")?.parse().ok()?;
    let vocab = it.next()?.strip_prefix("vocab=")?.parse().ok()?;
    it.next().is_none().then_some((dim, vocab))
}
