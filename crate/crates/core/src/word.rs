// SPDX-License-Identifier: Apache-2.0

//! Unsigned 256-bit machine words.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::sync::OnceLock;

/// An unsigned integer in `[0, 2^256)`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(BigUint);

fn modulus() -> &'static BigUint {
    static MODULUS: OnceLock<BigUint> = OnceLock::new();
    MODULUS.get_or_init(|| BigUint::one() << 256u32)
}

impl Word {
    pub fn zero() -> Self {
        Word(BigUint::zero())
    }

    pub fn one() -> Self {
        Word(BigUint::one())
    }

    pub fn max_value() -> Self {
        Word(modulus() - 1u32)
    }

    pub fn parse_decimal(text: &str) -> Option<Self> {
        let value = BigUint::parse_bytes(text.as_bytes(), 10)?;
        (value < *modulus()).then_some(Word(value))
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn to_usize(&self) -> Option<usize> {
        self.0.to_usize()
    }

    pub fn wrapping_add(&self, rhs: &Word) -> Word {
        Word((&self.0 + &rhs.0) % modulus())
    }

    pub fn wrapping_sub(&self, rhs: &Word) -> Word {
        if self.0 >= rhs.0 {
            Word(&self.0 - &rhs.0)
        } else {
            Word(modulus() - (&rhs.0 - &self.0))
        }
    }

    pub fn wrapping_mul(&self, rhs: &Word) -> Word {
        Word((&self.0 * &rhs.0) % modulus())
    }

    /// EVM `DIV`: division by zero yields zero.
    pub fn wrapping_div(&self, rhs: &Word) -> Word {
        if rhs.is_zero() {
            Word::zero()
        } else {
            Word(&self.0 / &rhs.0)
        }
    }

    /// EVM `MOD`: modulo by zero yields zero.
    pub fn wrapping_rem(&self, rhs: &Word) -> Word {
        if rhs.is_zero() {
            Word::zero()
        } else {
            Word(&self.0 % &rhs.0)
        }
    }

    pub fn checked_add(&self, rhs: &Word) -> Option<Word> {
        let sum = &self.0 + &rhs.0;
        (sum < *modulus()).then_some(Word(sum))
    }

    pub fn checked_sub(&self, rhs: &Word) -> Option<Word> {
        (self.0 >= rhs.0).then(|| Word(&self.0 - &rhs.0))
    }

    pub fn checked_mul(&self, rhs: &Word) -> Option<Word> {
        let product = &self.0 * &rhs.0;
        (product < *modulus()).then_some(Word(product))
    }

    pub fn checked_div(&self, rhs: &Word) -> Option<Word> {
        (!rhs.is_zero()).then(|| Word(&self.0 / &rhs.0))
    }

    pub fn checked_rem(&self, rhs: &Word) -> Option<Word> {
        (!rhs.is_zero()).then(|| Word(&self.0 % &rhs.0))
    }
}

impl From<u64> for Word {
    fn from(v: u64) -> Self {
        Word(BigUint::from(v))
    }
}

impl From<u128> for Word {
    fn from(v: u128) -> Self {
        Word(BigUint::from(v))
    }
}

impl From<usize> for Word {
    fn from(v: usize) -> Self {
        Word(BigUint::from(v))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// Serialized as a decimal string; plain JSON numbers are accepted on input.
impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct WordVisitor;
        impl Visitor<'_> for WordVisitor {
            type Value = Word;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or unsigned integer below 2^256")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Word, E> {
                Ok(Word::from(v))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Word, E> {
                Word::parse_decimal(v).ok_or_else(|| E::custom(format!("invalid word {v:?}")))
            }
        }
        d.deserialize_any(WordVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_at_two_to_the_256() {
        let max = Word::max_value();
        assert_eq!(max.wrapping_add(&Word::one()), Word::zero());
        assert_eq!(Word::zero().wrapping_sub(&Word::one()), max);
        assert_eq!(max.checked_add(&Word::one()), None);
        assert_eq!(Word::zero().checked_sub(&Word::one()), None);
    }

    #[test]
    fn division_by_zero_follows_evm() {
        let seven = Word::from(7u64);
        assert_eq!(seven.wrapping_div(&Word::zero()), Word::zero());
        assert_eq!(seven.wrapping_rem(&Word::zero()), Word::zero());
        assert_eq!(seven.checked_div(&Word::zero()), None);
    }

    #[test]
    fn parse_rejects_out_of_range() {
        let two_256 = (BigUint::one() << 256u32).to_string();
        assert!(Word::parse_decimal(&two_256).is_none());
        assert!(Word::parse_decimal("12x").is_none());
        assert_eq!(Word::parse_decimal("42"), Some(Word::from(42u64)));
    }

    #[test]
    fn serde_uses_decimal_strings() {
        let w = Word::from(1234u64);
        let text = serde_json::to_string(&w).unwrap();
        assert_eq!(text, "\"1234\"");
        let back: Word = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
        let from_num: Word = serde_json::from_str("99").unwrap();
        assert_eq!(from_num, Word::from(99u64));
    }
}
