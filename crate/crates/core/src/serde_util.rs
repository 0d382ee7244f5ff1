//! Serialization helpers for reports.
//!
//! Exact integers are written as JSON numbers when they fit in `i64` and as
//! decimal strings otherwise; rationals as `"p/q"` strings; floats rounded to
//! 12 significant digits so reports are stable byte-for-byte.

use std::fmt::Display;

use num_traits::ToPrimitive;
use serde::ser::{SerializeSeq, Serializer};

use crate::exactnum::Int;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn int<S: Serializer>(v: &Int, s: S) -> Result<S::Ok, S::Error> {
    match v.to_i64() {
        Some(i) => s.serialize_i64(i),
        None => s.collect_str(v),
    }
}

struct IntRef<'a>(&'a Int);

impl serde::Serialize for IntRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        int(self.0, s)
    }
}

pub fn int_opt<S: Serializer>(v: &Option<Int>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => int(v, s),
        None => s.serialize_none(),
    }
}

pub fn int_vec<S: Serializer>(v: &[Int], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&IntRef(x))?;
    }
    seq.end()
}

pub fn int_vec_opt<S: Serializer>(v: &Option<Vec<Int>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => int_vec(v, s),
        None => s.serialize_none(),
    }
}

struct IntRow<'a>(&'a [Int]);

impl serde::Serialize for IntRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        int_vec(self.0, s)
    }
}

pub fn int_matrix<S: Serializer>(v: &[Vec<Int>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        seq.serialize_element(&IntRow(row))?;
    }
    seq.end()
}

pub fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn display_opt<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

pub fn f64_12<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(sig12(*v))
}

pub fn f64_12_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_f64(sig12(*v)),
        None => s.serialize_none(),
    }
}

pub fn f64_12_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&sig12(*x))?;
    }
    seq.end()
}

/// Rationals as `"p/q"` strings.
pub mod rational_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::exactnum::{ExactScalar, Rational};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(ToString::to_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| {
                let x: ExactScalar = t.parse().map_err(serde::de::Error::custom)?;
                x.as_rational().cloned().ok_or_else(|| serde::de::Error::custom(format!("`{t}` is not rational")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(0.5), 0.5);
        assert_eq!(sig12(std::f64::consts::PI).to_string(), "3.14159265359");
        assert_eq!(sig12(-1.0 / 3.0).to_string(), "-0.333333333333");
        assert_eq!(sig12(1e-20 / 3.0).to_string(), "0.00000000000000000000333333333333");
        assert!(sig12(f64::NAN).is_nan());
    }
}
