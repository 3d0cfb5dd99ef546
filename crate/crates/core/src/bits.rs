//! Fixed-width bit strings.
//!
//! One convention everywhere: bit `i` of a string is bit `i` of the backing
//! integer, and strings are written with index 0 first (`"011"` has bit 0
//! clear and bits 1, 2 set). Amplitude indices, wire packing, and register
//! qubits all follow the same little-endian order.

use std::fmt;

/// A bit string of length at most 32.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bits {
    len: u8,
    val: u32,
}

impl Bits {
    pub fn new(val: u32, len: usize) -> Self {
        assert!(len <= 32, "bit string too long: {len}");
        let mask = if len == 32 { u32::MAX } else { (1u32 << len) - 1 };
        Bits { len: len as u8, val: val & mask }
    }

    pub fn zeros(len: usize) -> Self {
        Bits::new(0, len)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u32 {
        self.val
    }

    pub fn index(&self) -> usize {
        self.val as usize
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range for width {}", self.len);
        (self.val >> i) & 1 == 1
    }

    pub fn with_bit(&self, i: usize, b: bool) -> Self {
        assert!(i < self.len());
        let val = if b { self.val | (1 << i) } else { self.val & !(1 << i) };
        Bits { len: self.len, val }
    }

    pub fn flipped(&self, i: usize) -> Self {
        assert!(i < self.len());
        Bits { len: self.len, val: self.val ^ (1 << i) }
    }

    pub fn xor(&self, other: &Bits) -> Self {
        assert_eq!(self.len, other.len, "width mismatch in xor");
        Bits { len: self.len, val: self.val ^ other.val }
    }

    pub fn and(&self, other: &Bits) -> Self {
        assert_eq!(self.len, other.len, "width mismatch in and");
        Bits { len: self.len, val: self.val & other.val }
    }

    /// Parity of all set bits.
    pub fn parity(&self) -> bool {
        self.val.count_ones() % 2 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.val.count_ones() as usize
    }

    /// GF(2) inner product with `other`.
    pub fn dot(&self, other: &Bits) -> bool {
        self.and(other).parity()
    }

    pub fn is_zero(&self) -> bool {
        self.val == 0
    }

    /// `self` followed by `other` (other's bit 0 lands at index `self.len`).
    pub fn concat(&self, other: &Bits) -> Self {
        let len = self.len() + other.len();
        assert!(len <= 32);
        Bits::new(self.val | (other.val << self.len()), len)
    }

    /// Bits `[start, start+len)` as a new string.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len());
        Bits::new(self.val >> start, len)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// All strings of the given length, in index order.
    pub fn all(len: usize) -> impl Iterator<Item = Bits> {
        assert!(len <= 20, "enumeration too large");
        (0..(1u32 << len)).map(move |v| Bits::new(v, len))
    }

    /// Pack LSB-first into whole bytes (zero padded).
    pub fn pack(&self) -> Vec<u8> {
        let nbytes = self.len().div_ceil(8);
        (0..nbytes).map(|k| ((self.val >> (8 * k)) & 0xff) as u8).collect()
    }

    /// Inverse of [`Bits::pack`] for a known width.
    pub fn unpack(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) || len > 32 {
            return None;
        }
        let mut val: u32 = 0;
        for (k, &b) in bytes.iter().enumerate() {
            val |= (b as u32) << (8 * k);
        }
        let b = Bits::new(val, len);
        // padding bits must be clear
        if b.val != val && len < 32 {
            return None;
        }
        Some(b)
    }

    /// Parse an index-0-first string of '0'/'1' characters.
    pub fn parse(s: &str) -> Self {
        let mut val = 0u32;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => val |= 1 << i,
                '0' => {}
                _ => panic!("invalid bit character {c:?}"),
            }
        }
        Bits::new(val, s.len())
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_is_index_zero_first() {
        let b = Bits::parse("01");
        assert!(!b.get(0));
        assert!(b.get(1));
        assert_eq!(b.value(), 2);
        assert_eq!(b.to_string(), "01");
    }

    #[test]
    fn dot_and_parity() {
        let d = Bits::parse("100");
        let t = Bits::parse("101");
        assert!(d.dot(&t));
        assert!(!Bits::parse("11").parity());
    }

    #[test]
    fn concat_slice_roundtrip() {
        let a = Bits::parse("101");
        let b = Bits::parse("01");
        let c = a.concat(&b);
        assert_eq!(c.to_string(), "10101");
        assert_eq!(c.slice(0, 3), a);
        assert_eq!(c.slice(3, 2), b);
    }

    proptest! {
        #[test]
        fn pack_unpack_roundtrip(val in 0u32..1 << 20, len in 1usize..=20) {
            let b = Bits::new(val, len);
            let packed = b.pack();
            prop_assert_eq!(Bits::unpack(&packed, len), Some(b));
        }

        #[test]
        fn xor_is_involutive(v1 in 0u32..1024, v2 in 0u32..1024) {
            let a = Bits::new(v1, 10);
            let b = Bits::new(v2, 10);
            prop_assert_eq!(a.xor(&b).xor(&b), a);
        }
    }
}
