//! Exact rational lengths and the scaled-integer comparison helpers used by
//! the distance engines.
//!
//! Every length in the public API is a `Rational64`. Inside a graph, edge
//! lengths are rescaled by the LCM of their denominators to plain `u64`
//! weights, so shortest-path arithmetic is integer-exact. Comparisons between
//! a scaled distance and a rational threshold cross-multiply in `u128`, which
//! keeps every comparison exact without ever leaving integers.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};

use crate::error::Error;

/// Exact length type used throughout the public API.
pub type Len = Rational64;

/// Scaled integer distance, relative to some graph's `scale`.
pub type SDist = u64;

/// Sentinel for "unreachable" in scaled-distance tables.
pub const INF: SDist = u64::MAX;

/// Parse a length literal: either a decimal (`1`, `1.5`, `0.25`) or an exact
/// fraction (`3/2`). Always exact; decimals become numerator/10^k.
pub fn parse_len(s: &str) -> Result<Len, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid length literal '{s}'"));
    if let Some((p, q)) = s.split_once('/') {
        let num: i64 = p.trim().parse().map_err(|_| bad())?;
        let den: i64 = q.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_part: i64 = if int == "-" || int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > 12 {
            return Err(Error::Parse(format!(
                "length literal '{s}' has too many decimal digits; use p/q form"
            )));
        }
        let den = 10i64.pow(frac.len() as u32);
        let frac_part: i64 = frac.parse().map_err(|_| bad())?;
        let magnitude = Rational64::new(int_part.abs(), 1) + Rational64::new(frac_part, den);
        return Ok(if neg || int_part < 0 {
            -magnitude
        } else {
            magnitude
        });
    }
    let n: i64 = s.parse().map_err(|_| bad())?;
    Ok(Rational64::from_integer(n))
}

/// Render a length compactly: integers without a denominator, otherwise `p/q`.
pub fn fmt_len(r: &Len) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter serializing `Rational64` as the string form used by
/// `fmt_len` / `parse_len`.
pub mod serde_len {
    use super::{fmt_len, parse_len, Len};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Len, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_len(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Len, D::Error> {
        let s = String::deserialize(d)?;
        parse_len(&s).map_err(de::Error::custom)
    }
}

/// Serde adapter for `Option<Rational64>` in string form.
pub mod serde_len_opt {
    use super::{fmt_len, parse_len, Len};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Len>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&fmt_len(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Len>, D::Error> {
        let o = Option::<String>::deserialize(d)?;
        o.map(|s| parse_len(&s).map_err(de::Error::custom)).transpose()
    }
}

/// A positive rational threshold pre-multiplied for comparison against scaled
/// distances: for `r = p/q` on a graph with scale `D`, comparing `d` (scaled)
/// with `r` is comparing `d*q` with `p*D`.
#[derive(Clone, Copy, Debug)]
pub struct Thresh {
    q: u128,
    p_scale: u128,
}

impl Thresh {
    /// Build a threshold for rational `r >= 0` on a graph with scale `scale`.
    pub fn new(r: Len, scale: u64) -> Result<Self, Error> {
        if r.is_negative() {
            return Err(Error::BadParameter(format!(
                "threshold must be non-negative, got {}",
                fmt_len(&r)
            )));
        }
        Ok(Thresh {
            q: *r.denom() as u128,
            p_scale: (*r.numer() as u128) * (scale as u128),
        })
    }

    /// Compare a scaled distance against the threshold.
    fn relate(&self, d: SDist) -> Ordering {
        if d == INF {
            return Ordering::Greater;
        }
        ((d as u128) * self.q).cmp(&self.p_scale)
    }

    /// d < r
    pub fn below(&self, d: SDist) -> bool {
        self.relate(d) == Ordering::Less
    }

    /// d <= r
    pub fn at_most(&self, d: SDist) -> bool {
        self.relate(d) != Ordering::Greater
    }

    /// d >= r
    pub fn at_least(&self, d: SDist) -> bool {
        self.relate(d) != Ordering::Less
    }

    /// d > r
    pub fn above(&self, d: SDist) -> bool {
        self.relate(d) == Ordering::Greater
    }

    /// d == r
    pub fn exactly(&self, d: SDist) -> bool {
        self.relate(d) == Ordering::Equal
    }
}

/// Convert a scaled distance back to an exact rational, given the scale.
pub fn unscale(d: SDist, scale: u64) -> Len {
    debug_assert!(d != INF, "unscale called on INF");
    debug_assert!(d <= i64::MAX as u64 && scale <= i64::MAX as u64);
    Rational64::new(d as i64, scale as i64)
}

/// Pretty wrapper for distances that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaybeDist {
    Finite(SDist),
    Unreachable,
}

impl MaybeDist {
    pub fn from_raw(d: SDist) -> Self {
        if d == INF {
            MaybeDist::Unreachable
        } else {
            MaybeDist::Finite(d)
        }
    }
}

impl fmt::Display for MaybeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaybeDist::Finite(d) => write!(f, "{d}"),
            MaybeDist::Unreachable => write!(f, "inf"),
        }
    }
}

/// Floor a rational to the lattice `k * gran` (largest multiple <= r).
/// Returns 0 if `r < gran`.
pub fn floor_to_lattice(r: Len, gran: Len) -> Len {
    if gran.is_zero() || r.is_negative() {
        return Rational64::zero();
    }
    let q = r / gran;
    let k = q.floor();
    k * gran
}

/// Floor to the lattice, but fall back to the exact rational when the floored
/// value would be zero: proof-scale constants like m/1000 must stay positive
/// to keep verification meaningful.
pub fn floor_to_lattice_pos(r: Len, gran: Len) -> Len {
    let f = floor_to_lattice(r, gran);
    if f.is_zero() {
        r
    } else {
        f
    }
}
