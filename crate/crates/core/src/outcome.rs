//! Dichotomic outcome labels shared by every probability table in the crate.
//!
//! Four-entry tables are stored as `[f64; 4]` in the fixed order
//! `(+,+)`, `(+,-)`, `(-,+)`, `(-,-)`; see [`OUTCOMES`].

use std::fmt;

use serde::{Deserialize, Serialize};

/// A ±1 measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(v: i32) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// A joint outcome `(x, z)`. Also used for hidden pairs `(x', z')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub x: Sign,
    pub z: Sign,
}

impl Outcome {
    pub const fn new(x: Sign, z: Sign) -> Self {
        Self { x, z }
    }

    /// Position in the canonical table order.
    #[inline]
    pub fn index(self) -> usize {
        2 * (self.x == Sign::Minus) as usize + (self.z == Sign::Minus) as usize
    }

    #[inline]
    pub fn x_value(self) -> f64 {
        self.x.value()
    }

    #[inline]
    pub fn z_value(self) -> f64 {
        self.z.value()
    }

    /// The product `x z`.
    #[inline]
    pub fn xz_value(self) -> f64 {
        self.x.value() * self.z.value()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.z)
    }
}

pub const OUTCOMES: [Outcome; 4] = [
    Outcome::new(Sign::Plus, Sign::Plus),
    Outcome::new(Sign::Plus, Sign::Minus),
    Outcome::new(Sign::Minus, Sign::Plus),
    Outcome::new(Sign::Minus, Sign::Minus),
];

/// Build a four-entry table by evaluating `f` at each outcome in canonical order.
pub fn table_from_fn(mut f: impl FnMut(Outcome) -> f64) -> [f64; 4] {
    let mut t = [0.0; 4];
    for o in OUTCOMES {
        t[o.index()] = f(o);
    }
    t
}

/// Largest entrywise absolute difference between two tables.
pub fn max_abs_difference(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}
