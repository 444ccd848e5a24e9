//! Access-path descriptions and per-path rate vectors.
//!
//! Units are fixed across the crate: rates in Mbps, power in mW, time in
//! seconds. Note that 1 mW/Mbps is exactly 1 mJ/Mb, so energy per bit and
//! marginal power share a unit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power and capacity characteristics of one access path (interface).
///
/// The interface draws `b * x + theta` mW while carrying `x` Mbps, and
/// exactly 0 mW when switched off. `c` is the bandwidth available on the
/// access link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub id: String,
    /// Marginal power, mW per Mbps.
    pub b: f64,
    /// Sunk power drawn whenever the interface is on, mW.
    pub theta: f64,
    /// Access-link capacity, Mbps.
    pub c: f64,
}

impl PathSpec {
    pub fn new(id: impl Into<String>, b: f64, theta: f64, c: f64) -> Result<Self> {
        let spec = PathSpec {
            id: id.into(),
            b,
            theta,
            c,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::Domain(format!("path `{}`: b must be >= 0", self.id)));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::Domain(format!(
                "path `{}`: theta must be >= 0",
                self.id
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Domain(format!("path `{}`: c must be > 0", self.id)));
        }
        Ok(())
    }

    /// Effective per-bit cost `b + theta / c`, the cost of the path when run
    /// at full capacity. Used to rank paths in both selection problems.
    pub fn b_prime(&self) -> f64 {
        self.b + self.theta / self.c
    }

    /// Representative WiFi interface (measured: 4.12 Mbps, 238.2 mW/Mbps, 132.9 mW).
    pub fn wifi() -> Self {
        PathSpec::new("wifi", 238.2, 132.9, 4.12).unwrap()
    }

    /// Representative 4G/LTE interface (measured: 12.74 Mbps, 52 mW/Mbps, 1288 mW).
    pub fn lte() -> Self {
        PathSpec::new("lte", 52.0, 1288.0, 12.74).unwrap()
    }
}

/// Per-path rates in Mbps, keyed by path id and kept in path order.
/// Serializes as a plain JSON object `{"path": mbps, ...}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateVector {
    entries: Vec<(String, f64)>,
}

impl Serialize for RateVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (k, v) in &self.entries {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for RateVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct MapVisitor;
        impl<'de> serde::de::Visitor<'de> for MapVisitor {
            type Value = RateVector;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a map of path id to rate in Mbps")
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, f64>()? {
                    entries.push((k, v));
                }
                Ok(RateVector { entries })
            }
        }
        deserializer.deserialize_map(MapVisitor)
    }
}

impl RateVector {
    pub fn new() -> Self {
        RateVector::default()
    }

    pub fn from_pairs(entries: Vec<(String, f64)>) -> Self {
        RateVector { entries }
    }

    pub fn push(&mut self, id: impl Into<String>, rate: f64) {
        self.entries.push((id.into(), rate));
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(k, _)| k == id)
            .map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total rate across paths.
    pub fn aggregate(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_prime_of_reference_interfaces() {
        let wifi = PathSpec::wifi();
        let lte = PathSpec::lte();
        assert!((wifi.b_prime() - 270.457_281_553_398_05).abs() < 1e-9);
        assert!((lte.b_prime() - 153.098_901_098_901_08).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PathSpec::new("x", -1.0, 0.0, 1.0).is_err());
        assert!(PathSpec::new("x", 0.0, -1.0, 1.0).is_err());
        assert!(PathSpec::new("x", 0.0, 0.0, 0.0).is_err());
        assert!(PathSpec::new("x", 0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn rate_vector_aggregate() {
        let mut rv = RateVector::new();
        rv.push("a", 1.5);
        rv.push("b", 2.5);
        assert_eq!(rv.aggregate(), 4.0);
        assert_eq!(rv.get("a"), Some(1.5));
        assert_eq!(rv.get("missing"), None);
    }
}
