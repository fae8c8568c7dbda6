//! Exact slope arithmetic.
//!
//! A slope is a reduced fraction q/p with p >= 1. The struct is generic over
//! the integer scalar so the arithmetic is reusable over machine integers in
//! tests; the crate root pins the arbitrary-precision instantiation used by
//! everything else (user-supplied slopes are unbounded).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::Signed;
use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlopeError {
    #[error("slope denominator is zero")]
    ZeroDenominator,
}

/// A fraction q/p in lowest terms with p >= 1.
///
/// Invariants: p >= 1 and gcd(|q|, p) = 1; held by construction, so two equal
/// slopes are structurally equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Slope<T> {
    q: T,
    p: T,
}

impl<T: Integer + Signed + Clone> Slope<T> {
    /// Reduce q/p to canonical form. The sign moves to the numerator.
    pub fn new(q: T, p: T) -> Result<Self, SlopeError> {
        if p.is_zero() {
            return Err(SlopeError::ZeroDenominator);
        }
        let (mut q, mut p) = if p.is_negative() { (-q, -p) } else { (q, p) };
        let g = q.abs().gcd(&p);
        if !g.is_zero() {
            q = q / g.clone();
            p = p / g;
        }
        if q.is_zero() {
            p = T::one();
        }
        Ok(Slope { q, p })
    }

    pub fn numerator(&self) -> &T {
        &self.q
    }

    pub fn denominator(&self) -> &T {
        &self.p
    }

    /// A fiber is singular exactly when its denominator is at least 2.
    pub fn is_singular(&self) -> bool {
        self.p > T::one()
    }

    pub fn has_denominator_two(&self) -> bool {
        self.p == T::one() + T::one()
    }

    /// Canonical regular slope 0/1, the marker used for unmarked regular fibers.
    pub fn regular() -> Self {
        Slope { q: T::zero(), p: T::one() }
    }
}

impl<T: Integer> PartialOrd for Slope<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Slopes order by (denominator, numerator); any total order works for the
/// deterministic tie-breaks that use it, and this one groups singular fibers
/// of equal order together.
impl<T: Integer> Ord for Slope<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.p.cmp(&other.p).then_with(|| self.q.cmp(&other.q))
    }
}

impl<T: fmt::Display> fmt::Display for Slope<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.q, self.p)
    }
}

impl<T: fmt::Display> fmt::Debug for Slope<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.q, self.p)
    }
}

/// Serialized as the two-element array [q, p]; arbitrary-size integers survive
/// because the JSON layer keeps full-precision numbers.
impl<T: fmt::Display> Serialize for Slope<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        let q: serde_json::Number = self
            .q
            .to_string()
            .parse()
            .map_err(|_| serde::ser::Error::custom("numerator is not a JSON number"))?;
        let p: serde_json::Number = self
            .p
            .to_string()
            .parse()
            .map_err(|_| serde::ser::Error::custom("denominator is not a JSON number"))?;
        t.serialize_element(&q)?;
        t.serialize_element(&p)?;
        t.end()
    }
}

impl<'de, T> Deserialize<'de> for Slope<T>
where
    T: Integer + Signed + Clone + FromStr,
{
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SlopeVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T> Visitor<'de> for SlopeVisitor<T>
        where
            T: Integer + Signed + Clone + FromStr,
        {
            type Value = Slope<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a [q, p] integer pair")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let q: serde_json::Number = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let p: serde_json::Number = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<serde_json::Number>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                let q = T::from_str(&q.to_string())
                    .map_err(|_| de::Error::custom("slope numerator is not an integer"))?;
                let p = T::from_str(&p.to_string())
                    .map_err(|_| de::Error::custom("slope denominator is not an integer"))?;
                Slope::new(q, p).map_err(|e| de::Error::custom(e.to_string()))
            }
        }

        deserializer.deserialize_tuple(2, SlopeVisitor(std::marker::PhantomData))
    }
}

/// Field-level serde for arbitrary-precision integers as plain JSON numbers,
/// for `#[serde(with = "crate::slope::bigint_json")]`.
pub(crate) mod bigint_json {
    use num_bigint::BigInt;
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, serializer: S) -> Result<S::Ok, S::Error> {
        let n: serde_json::Number = v
            .to_string()
            .parse()
            .map_err(|_| serde::ser::Error::custom("value is not a JSON number"))?;
        n.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigInt, D::Error> {
        let n = serde_json::Number::deserialize(deserializer)?;
        n.to_string().parse().map_err(|_| de::Error::custom("value is not an integer"))
    }
}
