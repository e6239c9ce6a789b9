//! Geohash encoding of LBS coordinates.
//!
//! Standard bit-interleaving scheme: alternate longitude and latitude interval
//! bisection starting with longitude, five bits per base-32 character. A value
//! that falls exactly on a bisection line goes to the upper half.

use std::fmt;

use crate::{Error, Result};

pub const ALPHABET: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// Longest supported code; twelve characters is already sub-centimetre.
pub const MAX_PRECISION: usize = 12;

/// Precision of the location tokens mixed into behavior sequences (~5 km cells).
pub const LBS_PRECISION: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Validation(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Validation(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// A geohash code; its length is the precision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeohashToken(String);

impl GeohashToken {
    /// Validates an existing code string.
    pub fn parse(code: &str) -> Result<Self> {
        if code.is_empty() || code.len() > MAX_PRECISION {
            return Err(Error::Validation(format!("geohash `{code}` must have 1..={MAX_PRECISION} characters")));
        }
        if let Some(bad) = code.bytes().find(|b| symbol_value(*b).is_none()) {
            return Err(Error::Validation(format!(
                "geohash `{code}` contains `{}` outside the base-32 alphabet",
                bad as char
            )));
        }
        Ok(GeohashToken(code.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn precision(&self) -> usize {
        self.0.len()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for GeohashToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn symbol_value(b: u8) -> Option<u8> {
    ALPHABET.iter().position(|&a| a == b).map(|p| p as u8)
}

fn check_precision(precision: usize) -> Result<()> {
    if precision == 0 || precision > MAX_PRECISION {
        return Err(Error::Validation(format!("geohash precision {precision} outside 1..={MAX_PRECISION}")));
    }
    Ok(())
}

pub fn encode_geohash(point: GeoPoint, precision: usize) -> Result<GeohashToken> {
    check_precision(precision)?;

    let (mut lat_lo, mut lat_hi) = (-90.0_f64, 90.0_f64);
    let (mut lon_lo, mut lon_hi) = (-180.0_f64, 180.0_f64);
    let mut code = String::with_capacity(precision);
    let mut even = true;
    for _ in 0..precision {
        let mut symbol = 0u8;
        for _ in 0..5 {
            let (value, lo, hi) =
                if even { (point.lon, &mut lon_lo, &mut lon_hi) } else { (point.lat, &mut lat_lo, &mut lat_hi) };
            let mid = (*lo + *hi) / 2.0;
            symbol <<= 1;
            if value >= mid {
                symbol |= 1;
                *lo = mid;
            } else {
                *hi = mid;
            }
            even = !even;
        }
        code.push(ALPHABET[symbol as usize] as char);
    }
    Ok(GeohashToken(code))
}

/// The canonical location token: the 5-character geohash.
pub fn token_for_event(point: GeoPoint) -> GeohashToken {
    encode_geohash(point, LBS_PRECISION).expect("LBS_PRECISION is a valid precision")
}

/// Closed latitude/longitude box covered by a geohash cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn contains(&self, point: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&point.lat) && (self.min_lon..=self.max_lon).contains(&point.lon)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.min_lat + self.max_lat) / 2.0, (self.min_lon + self.max_lon) / 2.0)
    }
}

/// Decodes a geohash into the cell it names.
pub fn decode_bbox(code: &str) -> Result<BoundingBox> {
    let token = GeohashToken::parse(code)?;
    let (mut lat_lo, mut lat_hi) = (-90.0_f64, 90.0_f64);
    let (mut lon_lo, mut lon_hi) = (-180.0_f64, 180.0_f64);
    let mut even = true;
    for b in token.0.bytes() {
        let symbol = symbol_value(b).expect("validated by parse");
        for shift in (0..5).rev() {
            let bit = (symbol >> shift) & 1 == 1;
            let (lo, hi) = if even { (&mut lon_lo, &mut lon_hi) } else { (&mut lat_lo, &mut lat_hi) };
            let mid = (*lo + *hi) / 2.0;
            if bit {
                *lo = mid;
            } else {
                *hi = mid;
            }
            even = !even;
        }
    }
    Ok(BoundingBox { min_lat: lat_lo, max_lat: lat_hi, min_lon: lon_lo, max_lon: lon_hi })
}
