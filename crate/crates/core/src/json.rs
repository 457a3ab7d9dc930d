//! Fixed-format JSON numbers: every `f64` is written with 17 significant
//! digits so output files are byte-reproducible and round-trip bitwise.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

/// `x` as a JSON number with 17 significant digits; non-finite values become
/// `null`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Serializes through [`fmt_f64`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sci(pub f64);

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(fmt_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn sci<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    Sci(*x).serialize(s)
}

pub fn sci_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => Sci(*v).serialize(s),
        None => s.serialize_none(),
    }
}

pub fn sci_seq<S: Serializer, T: AsRef<[f64]>>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    let v = v.as_ref();
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Sci(*x))?;
    }
    seq.end()
}

pub fn sci_opt_seq<S: Serializer>(v: &[Option<f64>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.map(Sci))?;
    }
    seq.end()
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
