//! Line-oriented checkpoint files.
//!
//! ```text
//! lhrm-checkpoint 1
//! shape emb_dim=32 user_attr_dim=7 item_attr_dim=60 hidden=64,32 latent_dim=32
//! user_schema <sha256>
//! item_schema <sha256>
//! config <key=value> ...
//! w_user
//! <row> ...
//! w_item
//! ...
//! layer user 0
//! <weight rows>
//! <bias>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so reloading is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{ModelParams, ModelShape};
use crate::linalg::Matrix;
use crate::{Error, Result};

const MAGIC: &str = "lhrm-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    /// Schema hashes of the user and item attribute encoders.
    pub user_schema: String,
    pub item_schema: String,
    /// Free-form settings recorded alongside; keys and values are single words.
    pub config: BTreeMap<String, String>,
}

fn write_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

fn write_matrix(out: &mut String, m: &Matrix) {
    for r in 0..m.rows() {
        write_row(out, m.row(r));
    }
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let s = self.params.shape();
        let hidden: Vec<String> = s.hidden.iter().map(usize::to_string).collect();
        let mut out = format!("{MAGIC}\n");
        writeln!(
            out,
            "shape emb_dim={} user_attr_dim={} item_attr_dim={} hidden={} latent_dim={}",
            s.emb_dim,
            s.user_attr_dim,
            s.item_attr_dim,
            hidden.join(","),
            s.latent_dim
        )
        .unwrap();
        writeln!(out, "user_schema {}", self.user_schema).unwrap();
        writeln!(out, "item_schema {}", self.item_schema).unwrap();
        out.push_str("config");
        for (k, v) in &self.config {
            write!(out, " {k}={v}").unwrap();
        }
        out.push('\n');
        out.push_str("w_user\n");
        write_matrix(&mut out, &self.params.w_user);
        out.push_str("w_item\n");
        write_matrix(&mut out, &self.params.w_item);
        for (side, mlp) in [("user", &self.params.user_mlp), ("item", &self.params.item_mlp)] {
            for (i, layer) in mlp.layers.iter().enumerate() {
                writeln!(out, "layer {side} {i}").unwrap();
                write_matrix(&mut out, &layer.weight);
                write_row(&mut out, &layer.bias);
            }
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut r = Reader { lines: text.lines().enumerate(), path, line: 0 };

        let magic = r.next("header")?;
        if magic != MAGIC {
            return Err(r.error(format!("unsupported checkpoint header `{magic}`")));
        }
        let shape_line = r.next("shape")?;
        let shape = parse_shape(shape_line).ok_or_else(|| r.error("bad shape line"))?;
        let user_schema = r.tagged("user_schema")?.to_owned();
        let item_schema = r.tagged("item_schema")?.to_owned();
        let mut config = BTreeMap::new();
        for kv in r.tagged("config")?.split(' ').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| r.error(format!("bad config entry `{kv}`")))?;
            config.insert(k.to_owned(), v.to_owned());
        }

        let mut params = ModelParams::zeros(&shape).map_err(|e| r.error(e.to_string()))?;
        let d = shape.emb_dim;
        r.tagged("w_user")?;
        r.rows(params.w_user.as_mut_slice(), d)?;
        r.tagged("w_item")?;
        r.rows(params.w_item.as_mut_slice(), d)?;
        for (side, mlp) in [("user", &mut params.user_mlp), ("item", &mut params.item_mlp)] {
            for (i, layer) in mlp.layers.iter_mut().enumerate() {
                if r.next("layer")? != format!("layer {side} {i}") {
                    return Err(r.error(format!("expected `layer {side} {i}`")));
                }
                let cols = layer.inputs();
                r.rows(layer.weight.as_mut_slice(), cols)?;
                let width = layer.bias.len();
                r.rows(&mut layer.bias, width)?;
            }
        }
        if r.next("end").is_ok() {
            return Err(r.error("trailing content"));
        }
        params.validate()?;
        Ok(Checkpoint { params, user_schema, item_schema, config })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

struct Reader<'a, L> {
    lines: L,
    path: &'a Path,
    line: usize,
}

impl<'a, L: Iterator<Item = (usize, &'a str)>> Reader<'a, L> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, msg)
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.error(format!("truncated checkpoint, expected {what}"))),
        }
    }

    /// Rest of a line that starts with `tag`.
    fn tagged(&mut self, tag: &str) -> Result<&'a str> {
        let line = self.next(tag)?;
        match line.strip_prefix(tag) {
            Some("") => Ok(""),
            Some(rest) if rest.starts_with(' ') => Ok(&rest[1..]),
            _ => Err(self.error(format!("expected `{tag}` line"))),
        }
    }

    fn rows(&mut self, dst: &mut [f64], cols: usize) -> Result<()> {
        for row in dst.chunks_mut(cols) {
            let line = self.next("matrix row")?;
            let values: Vec<f64> = line
                .split(' ')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| self.error("bad number"))?;
            if values.len() != row.len() {
                return Err(self.error(format!("expected {} values", row.len())));
            }
            row.copy_from_slice(&values);
        }
        Ok(())
    }
}

fn parse_shape(line: &str) -> Option<ModelShape> {
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for kv in line.strip_prefix("shape ")?.split(' ') {
        let (k, v) = kv.split_once('=')?;
        fields.insert(k, v);
    }
    let num = |k: &str| fields.get(k)?.parse::<usize>().ok();
    let hidden = match *fields.get("hidden")? {
        "" => Vec::new(),
        h => h.split(',').map(|x| x.parse().ok()).collect::<Option<Vec<usize>>>()?,
    };
    Some(ModelShape {
        emb_dim: num("emb_dim")?,
        user_attr_dim: num("user_attr_dim")?,
        item_attr_dim: num("item_attr_dim")?,
        hidden,
        latent_dim: num("latent_dim")?,
    })
}
