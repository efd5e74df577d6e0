//! JSON helpers: 17-significant-digit floats and the `"INF"` sentinel.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::io;

/// Formatter that writes every float with 17 significant digits. Infinities
/// become `"INF"` / `"-INF"` and NaN becomes `null`, so output stays valid JSON.
#[derive(Clone, Copy, Debug, Default)]
pub struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_nan() {
            writer.write_all(b"null")
        } else if value == f64::INFINITY {
            writer.write_all(b"\"INF\"")
        } else if value == f64::NEG_INFINITY {
            writer.write_all(b"\"-INF\"")
        } else {
            write!(writer, "{value:.16e}")
        }
    }
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Pretty variant of [`to_string`] with the same float formatting.
pub fn to_string_pretty<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    // serde_json has no pretty formatter that can be combined with a custom
    // float writer, so round-trip through a Value holding numbers verbatim.
    let compact = to_string(value)?;
    let v: serde_json::Value = serde_json::from_str(&compact)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PrettyDigits17::default());
    v.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

#[derive(Default)]
struct PrettyDigits17<'a>(serde_json::ser::PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettyDigits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        Digits17.write_f64(writer, value)
    }
    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaybeInf {
    Num(f64),
    Str(String),
}

fn encode(v: f64) -> MaybeInf {
    if v == f64::INFINITY {
        MaybeInf::Str("INF".into())
    } else {
        MaybeInf::Num(v)
    }
}

fn decode<E: serde::de::Error>(v: MaybeInf) -> Result<f64, E> {
    match v {
        MaybeInf::Num(x) => Ok(x),
        MaybeInf::Str(s) if s == "INF" => Ok(f64::INFINITY),
        MaybeInf::Str(s) => Err(E::custom(format!("expected number or \"INF\", got {s:?}"))),
    }
}

/// `#[serde(with = "inf")]` for a single `f64` where `+∞` is written as `"INF"`.
pub mod inf {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        encode(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(MaybeInf::deserialize(d)?)
    }
}

/// `#[serde(with = "inf_table")]` for a square distance table.
pub mod inf_table {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<MaybeInf>> = v
            .iter()
            .map(|r| r.iter().map(|&x| encode(x)).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<MaybeInf>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|r| r.into_iter().map(decode).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct T {
        #[serde(with = "inf")]
        x: f64,
        #[serde(with = "inf_table")]
        d: Vec<Vec<f64>>,
    }

    #[test]
    fn round_trip_with_inf() {
        let t = T {
            x: 0.1,
            d: vec![vec![0.0, f64::INFINITY], vec![f64::INFINITY, 0.0]],
        };
        let s = to_string(&t).unwrap();
        assert!(s.contains("\"INF\""));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: T = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let pretty = to_string_pretty(&t).unwrap();
        assert_eq!(serde_json::from_str::<T>(&pretty).unwrap(), t);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [1.0 / 3.0, std::f64::consts::PI * 1e-7, -2.5e300, 12345.0] {
            let s = to_string(&v).unwrap();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
