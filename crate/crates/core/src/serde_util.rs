//! Serde adapters.
//!
//! Model files store floating-point scalars as decimal strings so that a
//! save/load cycle reproduces every bit. Reports use [`lenient_f64`], which
//! writes non-finite values (`inf`, `-inf`, `nan`) as strings because JSON has
//! no literal for them.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::Deserialize;

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        // `{:?}` is the shortest representation that parses back to the same bits
        format!("{v:?}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "nan" | "NaN" => Some(f64::NAN),
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// `f64` <-> decimal string.
pub mod decimal {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_f64(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        parse_f64(&s).ok_or_else(|| de::Error::custom(format!("bad decimal `{s}`")))
    }
}

/// `Vec<f64>` <-> array of decimal strings.
pub mod decimal_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&format_f64(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_f64(s).ok_or_else(|| de::Error::custom(format!("bad decimal `{s}`"))))
            .collect()
    }
}

/// `Vec<Vec<f64>>` <-> nested arrays of decimal strings.
pub mod decimal_vec2 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<Vec<String>> = v
            .iter()
            .map(|row| row.iter().map(|x| format_f64(*x)).collect())
            .collect();
        serde::Serialize::serialize(&strings, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|row| {
                row.iter()
                    .map(|s| {
                        parse_f64(s).ok_or_else(|| de::Error::custom(format!("bad decimal `{s}`")))
                    })
                    .collect()
            })
            .collect()
    }
}

/// `f64` written as a JSON number when finite, otherwise as a string.
pub mod lenient_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&format_f64(*v))
        }
    }

    struct LenientVisitor;

    impl<'de> Visitor<'de> for LenientVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            parse_f64(v).ok_or_else(|| E::custom(format!("bad number `{v}`")))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(LenientVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "decimal")]
        a: f64,
        #[serde(with = "decimal_vec")]
        b: Vec<f64>,
        #[serde(with = "lenient_f64")]
        c: f64,
    }

    #[test]
    fn decimal_strings_round_trip_bits() {
        let h = Holder {
            a: 0.1 + 0.2,
            b: vec![1.0 / 3.0, -0.0, f64::INFINITY, 1e-310],
            c: f64::NEG_INFINITY,
        };
        let json = serde_json::to_string(&h).unwrap();
        let back: Holder = serde_json::from_str(&json).unwrap();
        assert_eq!(back.a.to_bits(), h.a.to_bits());
        for (x, y) in back.b.iter().zip(&h.b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(back.c, f64::NEG_INFINITY);
        assert!(json.contains("\"-inf\""));
    }
}
