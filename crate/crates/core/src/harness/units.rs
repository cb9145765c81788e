//! Time values in configs and on the command line: bare numbers are seconds,
//! or a number with one of the suffixes `s`, `ms`, `us`/`µs`, `ns`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub fn parse_time(text: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse time `{text}`"));
    let t = text.trim();
    let (number, shift) = [("ms", -3), ("us", -6), ("µs", -6), ("ns", -9), ("s", 0)]
        .iter()
        .find_map(|(suffix, shift)| t.strip_suffix(suffix).map(|n| (n.trim(), *shift)))
        .unwrap_or((t, 0));
    // shift the decimal exponent in text so "2.5us" parses to the same double as "2.5e-6"
    let (mantissa, exponent) = match number.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (number, 0),
    };
    let value: f64 = format!("{mantissa}e{}", exponent + shift).parse().map_err(|_| bad())?;
    if !value.is_finite() {
        return Err(Error::Config(format!("time `{text}` is not finite")));
    }
    Ok(value)
}

/// A duration in seconds that deserialises from either a number or a suffixed string.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Seconds(pub f64);

impl Serialize for Seconds {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Seconds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Seconds(v)),
            Raw::Text(t) => parse_time(&t).map(Seconds).map_err(serde::de::Error::custom),
        }
    }
}
