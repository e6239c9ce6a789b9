//! Fixed-length encoding of basic user and item attributes.
//!
//! Categorical fields become one-hot blocks over a vocabulary frozen at fit
//! time plus a trailing out-of-vocabulary slot; numeric fields are min-max
//! scaled with the fitted range.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Cat(String),
    Num(f64),
}

/// Raw attributes of one user or item, keyed by field name.
pub type RawAttributes = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldEncoding {
    Categorical { name: String, vocab: Vec<String> },
    Numeric { name: String, min: f64, max: f64 },
}

impl FieldEncoding {
    pub fn name(&self) -> &str {
        match self {
            FieldEncoding::Categorical { name, .. } | FieldEncoding::Numeric { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            FieldEncoding::Categorical { vocab, .. } => vocab.len() + 1,
            FieldEncoding::Numeric { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeVector {
    values: Vec<f64>,
}

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("attribute vector has non-finite values".into()));
        }
        Ok(AttributeVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeEncoder {
    fields: Vec<FieldEncoding>,
}

fn valid_word(s: &str) -> bool {
    !s.is_empty() && !s.contains(char::is_whitespace)
}

impl AttributeEncoder {
    pub fn new(fields: Vec<FieldEncoding>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for f in &fields {
            if !valid_word(f.name()) || !names.insert(f.name().to_owned()) {
                return Err(Error::Config(format!("bad or duplicate field name `{}`", f.name())));
            }
            match f {
                FieldEncoding::Categorical { vocab, .. } => {
                    let sorted = vocab.windows(2).all(|w| w[0] < w[1]);
                    if !sorted || !vocab.iter().all(|v| valid_word(v)) {
                        return Err(Error::Config(format!(
                            "vocabulary of `{}` must be sorted, unique words",
                            f.name()
                        )));
                    }
                }
                FieldEncoding::Numeric { min, max, .. } => {
                    if !(min.is_finite() && max.is_finite() && min <= max) {
                        return Err(Error::Config(format!("bad range for `{}`", f.name())));
                    }
                }
            }
        }
        Ok(AttributeEncoder { fields })
    }

    /// Freezes field kinds, vocabularies and numeric ranges from `records`.
    /// Every record must carry the same fields with the same kinds.
    pub fn fit<'a>(records: impl IntoIterator<Item = &'a RawAttributes>) -> Result<Self> {
        let mut cats: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        let mut nums: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        let mut layout: Option<Vec<(&str, bool)>> = None;
        for rec in records {
            let this: Vec<(&str, bool)> =
                rec.iter().map(|(k, v)| (k.as_str(), matches!(v, AttrValue::Cat(_)))).collect();
            match &layout {
                None => layout = Some(this),
                Some(l) if *l != this => return Err(Error::Data("attribute records disagree on their fields".into())),
                Some(_) => {}
            }
            for (k, v) in rec {
                match v {
                    AttrValue::Cat(c) => {
                        cats.entry(k).or_default().insert(c);
                    }
                    AttrValue::Num(x) => {
                        if !x.is_finite() {
                            return Err(Error::Data(format!("non-finite value for `{k}`")));
                        }
                        let e = nums.entry(k).or_insert((*x, *x));
                        e.0 = e.0.min(*x);
                        e.1 = e.1.max(*x);
                    }
                }
            }
        }
        let layout = layout.ok_or_else(|| Error::Data("no attribute records to fit".into()))?;
        let fields = layout
            .into_iter()
            .map(|(name, is_cat)| {
                if is_cat {
                    FieldEncoding::Categorical {
                        name: name.to_owned(),
                        vocab: cats[name].iter().map(|s| s.to_string()).collect(),
                    }
                } else {
                    let (min, max) = nums[name];
                    FieldEncoding::Numeric { name: name.to_owned(), min, max }
                }
            })
            .collect();
        Self::new(fields)
    }

    pub fn fields(&self) -> &[FieldEncoding] {
        &self.fields
    }

    pub fn width(&self) -> usize {
        self.fields.iter().map(FieldEncoding::width).sum()
    }

    /// Slot names in encoding order, e.g. `gender=f`, `gender=<oov>`, `age`.
    pub fn schema(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.width());
        for f in &self.fields {
            match f {
                FieldEncoding::Categorical { name, vocab } => {
                    out.extend(vocab.iter().map(|v| format!("{name}={v}")));
                    out.push(format!("{name}=<oov>"));
                }
                FieldEncoding::Numeric { name, .. } => out.push(name.clone()),
            }
        }
        out
    }

    pub fn encode(&self, rec: &RawAttributes) -> Result<AttributeVector> {
        let mut values = Vec::with_capacity(self.width());
        for f in &self.fields {
            let value = rec.get(f.name()).ok_or_else(|| Error::Data(format!("missing attribute `{}`", f.name())))?;
            match (f, value) {
                (FieldEncoding::Categorical { vocab, .. }, AttrValue::Cat(c)) => {
                    let slot = vocab.binary_search(c).unwrap_or(vocab.len());
                    values.extend((0..=vocab.len()).map(|i| if i == slot { 1.0 } else { 0.0 }));
                }
                (FieldEncoding::Numeric { min, max, .. }, AttrValue::Num(x)) => {
                    values.push(if max > min { (x - min) / (max - min) } else { 0.0 });
                }
                _ => return Err(Error::Data(format!("attribute `{}` has the wrong kind", f.name()))),
            }
        }
        AttributeVector::new(values)
    }

    /// One line per field: `cat <name> <v1> ...` or `num <name> <min> <max>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.fields {
            match f {
                FieldEncoding::Categorical { name, vocab } => {
                    out.push_str("cat ");
                    out.push_str(name);
                    for v in vocab {
                        out.push(' ');
                        out.push_str(v);
                    }
                }
                FieldEncoding::Numeric { name, min, max } => {
                    write!(out, "num {name} {min} {max}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let fields = text
            .lines()
            .map(|line| {
                let parts: Vec<&str> = line.split(' ').collect();
                match parts.as_slice() {
                    ["cat", name, vocab @ ..] => Ok(FieldEncoding::Categorical {
                        name: name.to_string(),
                        vocab: vocab.iter().map(|s| s.to_string()).collect(),
                    }),
                    ["num", name, min, max] => Ok(FieldEncoding::Numeric {
                        name: name.to_string(),
                        min: min.parse().map_err(|_| Error::Data(format!("bad min in `{line}`")))?,
                        max: max.parse().map_err(|_| Error::Data(format!("bad max in `{line}`")))?,
                    }),
                    _ => Err(Error::Data(format!("bad encoder line `{line}`"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fields)
    }

    /// SHA-256 of the text form; pins checkpoints to their encoders.
    pub fn schema_hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_text().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(gender: &str, age: f64) -> RawAttributes {
        [("gender".to_string(), AttrValue::Cat(gender.into())), ("age".to_string(), AttrValue::Num(age))]
            .into_iter()
            .collect()
    }

    #[test]
    fn one_hot_with_oov_and_minmax() {
        let enc = AttributeEncoder::fit(&[rec("m", 20.0), rec("f", 60.0), rec("m", 40.0)]).unwrap();
        // Fields are keyed by name, so `age` comes before `gender`.
        assert_eq!(enc.schema(), ["age", "gender=f", "gender=m", "gender=<oov>"]);
        assert_eq!(enc.encode(&rec("f", 30.0)).unwrap().values(), &[0.25, 1.0, 0.0, 0.0]);
        assert_eq!(enc.encode(&rec("x", 60.0)).unwrap().values(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_numeric_field_encodes_to_zero() {
        let enc = AttributeEncoder::fit(&[rec("m", 5.0), rec("m", 5.0)]).unwrap();
        assert_eq!(enc.encode(&rec("m", 5.0)).unwrap().values()[0], 0.0);
    }

    #[test]
    fn inconsistent_records_are_rejected() {
        let mut odd = rec("m", 1.0);
        odd.insert("age".into(), AttrValue::Cat("old".into()));
        assert!(AttributeEncoder::fit(&[rec("m", 1.0), odd.clone()]).is_err());
        let enc = AttributeEncoder::fit(&[rec("m", 1.0)]).unwrap();
        assert!(enc.encode(&odd).is_err());
        assert!(enc.encode(&RawAttributes::new()).is_err());
    }

    #[test]
    fn text_round_trip_preserves_hash() {
        let enc = AttributeEncoder::fit(&[rec("m", 20.1), rec("f", 61.3)]).unwrap();
        let back = AttributeEncoder::from_text(&enc.to_text()).unwrap();
        assert_eq!(back, enc);
        assert_eq!(back.schema_hash(), enc.schema_hash());
        assert_eq!(enc.schema_hash().len(), 64);
    }
}
