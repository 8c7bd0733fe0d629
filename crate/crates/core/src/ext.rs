//! Extended non-negative reals: tolerance helpers and the `"inf"` wire format.

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;

/// Comparison tolerance: absolute 1e-9 for magnitudes up to 1, relative above.
pub fn tolerance(reference: f64) -> f64 {
    1e-9 * reference.abs().max(1.0)
}

/// `a <= b` up to [`tolerance`]. Infinite `b` dominates everything.
pub fn approx_le(a: f64, b: f64) -> bool {
    if b == f64::INFINITY {
        return true;
    }
    if a == f64::INFINITY {
        return false;
    }
    a <= b + tolerance(b)
}

/// Product with the convention `0 * inf = 0`.
pub fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Shortest round-trip decimal text; infinity is written as `inf`.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

/// Parses a decimal or `inf`.
pub fn parse_value(s: &str) -> Option<f64> {
    let s = s.trim();
    match s {
        "inf" | "Infinity" | "+inf" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}

/// An `f64` that serializes infinity as the JSON string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Ext(pub f64);

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str(if self.0 > 0.0 { "inf" } else { "-inf" })
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor;
        impl Visitor<'_> for ExtVisitor {
            type Value = Ext;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Ext, E> {
                Ok(Ext(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Ext, E> {
                Ok(Ext(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Ext, E> {
                Ok(Ext(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Ext, E> {
                match v {
                    "-inf" => Ok(Ext(f64::NEG_INFINITY)),
                    _ => parse_value(v)
                        .map(Ext)
                        .ok_or_else(|| E::custom(format!("invalid number {v:?}"))),
                }
            }
        }
        deserializer.deserialize_any(ExtVisitor)
    }
}

/// Serde adapter for `f64` fields that may be infinite.
pub mod ext_f64 {
    use super::Ext;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Ext(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ext::deserialize(d).map(|e| e.0)
    }
}

/// Serde adapter for `Vec<f64>` fields that may contain infinities.
pub mod ext_vec {
    use super::Ext;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| Ext(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Ext>::deserialize(d).map(|v| v.into_iter().map(|e| e.0).collect())
    }
}

/// Serde adapter for matrices (`Vec<Vec<f64>>`) that may contain infinities.
pub mod ext_matrix {
    use super::Ext;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|row| row.iter().map(|x| Ext(*x)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Vec::<Vec<Ext>>::deserialize(d)
            .map(|m| m.into_iter().map(|row| row.into_iter().map(|e| e.0).collect()).collect())
    }
}
