//! Tab-separated artifact files. Every reader accepts exactly what the
//! matching writer produces, so write, read, write is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::{BehaviorEvent, Catalog, ItemCatalogEntry, UserProfile};
use crate::eval::RankedList;
use crate::geocode::GeoPoint;
use crate::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn fields<'a>(line: &'a str, n: usize, path: &Path, no: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != n {
        return Err(Error::parse(path, no, format!("expected {n} tab-separated fields, got {}", f.len())));
    }
    Ok(f)
}

fn num<T: std::str::FromStr>(s: &str, what: &str, path: &Path, no: usize) -> Result<T> {
    s.parse().map_err(|_| Error::parse(path, no, format!("bad {what} `{s}`")))
}

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

fn non_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_owned())
}

/// `user item domain action timestamp lat lon`, lat/lon empty when unknown.
pub fn events_to_text(events: &[BehaviorEvent]) -> String {
    let mut out = String::new();
    for e in events {
        write!(out, "{}\t{}\t{}\t{}\t{}\t", e.user, e.item, e.domain, e.action, e.timestamp).unwrap();
        if let Some(p) = e.location {
            write!(out, "{}\t{}", p.lat(), p.lon()).unwrap();
        } else {
            out.push('\t');
        }
        out.push('\n');
    }
    out
}

pub fn events_from_text(text: &str, path: &Path) -> Result<Vec<BehaviorEvent>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let no = i + 1;
            let f = fields(line, 7, path, no)?;
            let location = match (f[5], f[6]) {
                ("", "") => None,
                (lat, lon) => Some(
                    GeoPoint::new(num(lat, "latitude", path, no)?, num(lon, "longitude", path, no)?)
                        .map_err(|e| Error::parse(path, no, e.to_string()))?,
                ),
            };
            Ok(BehaviorEvent {
                user: f[0].into(),
                item: f[1].into(),
                domain: f[2].parse().map_err(|e: Error| Error::parse(path, no, e.to_string()))?,
                action: f[3].parse().map_err(|e: Error| Error::parse(path, no, e.to_string()))?,
                timestamp: num(f[4], "timestamp", path, no)?,
                location,
            })
        })
        .collect()
}

/// `item domain category destination topic travel price`
pub fn catalog_to_text(catalog: &Catalog) -> String {
    let mut out = String::new();
    for e in catalog.entries() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.item,
            e.domain,
            e.category,
            opt(&e.destination),
            opt(&e.topic),
            e.travel_related as u8,
            e.price
        )
        .unwrap();
    }
    out
}

pub fn catalog_from_text(text: &str, path: &Path) -> Result<Catalog> {
    let entries = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let no = i + 1;
            let f = fields(line, 7, path, no)?;
            let travel_related = match f[5] {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(path, no, format!("bad travel flag `{other}`"))),
            };
            Ok(ItemCatalogEntry {
                item: f[0].into(),
                domain: f[1].parse().map_err(|e: Error| Error::parse(path, no, e.to_string()))?,
                category: f[2].to_owned(),
                destination: non_empty(f[3]),
                topic: non_empty(f[4]),
                travel_related,
                price: num(f[6], "price", path, no)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Catalog::new(entries)
}

/// `user age gender cohort`
pub fn users_to_text(users: &[UserProfile]) -> String {
    users.iter().map(|u| format!("{}\t{}\t{}\t{}\n", u.user, u.age, u.gender, u.cohort)).collect()
}

pub fn users_from_text(text: &str, path: &Path) -> Result<Vec<UserProfile>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let no = i + 1;
            let f = fields(line, 4, path, no)?;
            Ok(UserProfile {
                user: f[0].into(),
                age: num(f[1], "age", path, no)?,
                gender: f[2].to_owned(),
                cohort: f[3].parse().map_err(|e: Error| Error::parse(path, no, e.to_string()))?,
            })
        })
        .collect()
}

/// A ranked list and whether it came from the popularity fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct RecLine {
    pub list: RankedList,
    pub fallback: bool,
}

/// `user fallback item,item,... score,score,...`
pub fn recs_to_text(recs: &[RecLine]) -> String {
    let mut out = String::new();
    for r in recs {
        let items: Vec<&str> = r.list.items().iter().map(|i| i.as_str()).collect();
        let scores: Vec<String> = r.list.scores().iter().map(f64::to_string).collect();
        writeln!(out, "{}\t{}\t{}\t{}", r.list.user, r.fallback as u8, items.join(","), scores.join(",")).unwrap();
    }
    out
}

pub fn recs_from_text(text: &str, path: &Path) -> Result<Vec<RecLine>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let no = i + 1;
            let f = fields(line, 4, path, no)?;
            let split = |s: &str| -> Vec<String> {
                if s.is_empty() {
                    Vec::new()
                } else {
                    s.split(',').map(str::to_owned).collect()
                }
            };
            let items = split(f[2]).into_iter().map(Into::into).collect();
            let scores = split(f[3]).iter().map(|s| num(s, "score", path, no)).collect::<Result<Vec<f64>>>()?;
            let fallback = match f[1] {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(path, no, format!("bad fallback flag `{other}`"))),
            };
            let list =
                RankedList::new(f[0].into(), items, scores).map_err(|e| Error::parse(path, no, e.to_string()))?;
            Ok(RecLine { list, fallback })
        })
        .collect()
}
