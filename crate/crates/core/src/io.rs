//! Number formatting and serde helpers shared by the CSV and JSON writers.
//!
//! CSV numbers are written with 17 significant digits so that every `f64`
//! parses back to the identical bit pattern. JSON goes through `serde_json`,
//! whose shortest-representation output also round-trips exactly; non-finite
//! values, which JSON cannot carry as numbers, are written as the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Format with 17 significant digits (round-trip exact).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad number `{t}`: {e}"))),
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// `#[serde(with = "crate::io::f64_ext")]` for a single `f64` that may be infinite.
pub mod f64_ext {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_f64(*x))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum NumOrStr {
        Num(f64),
        Str(String),
    }

    impl NumOrStr {
        pub(crate) fn value<E: serde::de::Error>(self) -> Result<f64, E> {
            match self {
                NumOrStr::Num(v) => Ok(v),
                NumOrStr::Str(s) => super::parse_f64(&s).map_err(E::custom),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        NumOrStr::deserialize(d)?.value()
    }
}

/// Same as [`f64_ext`] for `Vec<f64>`.
pub mod f64_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::f64_ext::NumOrStr;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            if x.is_finite() {
                seq.serialize_element(x)?;
            } else {
                seq.serialize_element(&super::fmt_f64(*x))?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<NumOrStr>::deserialize(d)?
            .into_iter()
            .map(NumOrStr::value)
            .collect()
    }
}

/// Same as [`f64_ext`] for `Option<f64>`.
pub mod f64_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::f64_ext::NumOrStr;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::f64_ext::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<NumOrStr>::deserialize(d)?.map(NumOrStr::value).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_numbers_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            let back = parse_f64(&fmt_f64(x)).unwrap();
            if x.is_nan() {
                prop_assert!(back.is_nan());
            } else {
                prop_assert_eq!(back.to_bits(), x.to_bits());
            }
        }
    }

    #[test]
    fn infinite_values_survive_json() {
        #[derive(serde::Serialize, serde::Deserialize)]
        struct W {
            #[serde(with = "f64_ext")]
            v: f64,
        }
        let s = serde_json::to_string(&W { v: f64::INFINITY }).unwrap();
        assert_eq!(s, r#"{"v":"inf"}"#);
        let w: W = serde_json::from_str(&s).unwrap();
        assert!(w.v.is_infinite());
    }
}
