//! Cyclic redundancy checks. Registers start at zero and the CRC is appended
//! most significant bit first.

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrcPoly {
    Crc24A,
    Crc24B,
    Crc24C,
    Crc16,
    Crc11,
    Crc6,
}

impl CrcPoly {
    pub const ALL: [CrcPoly; 6] = [
        CrcPoly::Crc24A,
        CrcPoly::Crc24B,
        CrcPoly::Crc24C,
        CrcPoly::Crc16,
        CrcPoly::Crc11,
        CrcPoly::Crc6,
    ];

    pub fn len(self) -> usize {
        match self {
            CrcPoly::Crc24A | CrcPoly::Crc24B | CrcPoly::Crc24C => 24,
            CrcPoly::Crc16 => 16,
            CrcPoly::Crc11 => 11,
            CrcPoly::Crc6 => 6,
        }
    }

    /// Generator polynomial without the leading `D^len` term.
    pub fn generator(self) -> u32 {
        match self {
            CrcPoly::Crc24A => 0x86_4CFB,
            CrcPoly::Crc24B => 0x80_0063,
            CrcPoly::Crc24C => 0xB2_B117,
            CrcPoly::Crc16 => 0x1021,
            CrcPoly::Crc11 => 0x621,
            CrcPoly::Crc6 => 0x21,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CrcPoly::Crc24A => "crc24a",
            CrcPoly::Crc24B => "crc24b",
            CrcPoly::Crc24C => "crc24c",
            CrcPoly::Crc16 => "crc16",
            CrcPoly::Crc11 => "crc11",
            CrcPoly::Crc6 => "crc6",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        CrcPoly::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| domain!("unknown CRC polynomial `{name}`"))
    }
}

/// CRC remainder of `bits` as an integer, most significant bit first.
pub fn crc_compute(bits: &[u8], poly: CrcPoly) -> u32 {
    crc_compute_from(0, bits, poly)
}

/// Continues a CRC computation from register state `reg`.
pub fn crc_compute_from(mut reg: u32, bits: &[u8], poly: CrcPoly) -> u32 {
    let len = poly.len();
    let mask = (1u32 << len) - 1;
    let top = len - 1;
    let g = poly.generator();
    for &b in bits {
        let fb = ((reg >> top) as u8 ^ b) & 1;
        reg = (reg << 1) & mask;
        if fb == 1 {
            reg ^= g;
        }
    }
    reg
}

pub fn crc_bits(value: u32, len: usize) -> impl Iterator<Item = u8> {
    (0..len).rev().map(move |i| ((value >> i) & 1) as u8)
}

pub fn crc_attach(bits: &[u8], poly: CrcPoly) -> Result<Vec<u8>> {
    if bits.is_empty() {
        return Err(domain!("cannot attach CRC to an empty payload"));
    }
    let crc = crc_compute(bits, poly);
    let mut out = Vec::with_capacity(bits.len() + poly.len());
    out.extend_from_slice(bits);
    out.extend(crc_bits(crc, poly.len()));
    Ok(out)
}

/// `true` when `bits` (payload followed by its CRC) is consistent.
pub fn crc_check(bits: &[u8], poly: CrcPoly) -> bool {
    bits.len() > poly.len() && crc_compute(bits, poly) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    // Polynomial long division over GF(2) on whole bit vectors.
    fn oracle_remainder(bits: &[u8], poly: CrcPoly) -> u32 {
        let len = poly.len();
        let mut gen = vec![1u8];
        gen.extend(crc_bits(poly.generator(), len));
        let mut work: Vec<u8> = bits.to_vec();
        work.extend(std::iter::repeat_n(0, len));
        for i in 0..bits.len() {
            if work[i] == 1 {
                for (j, g) in gen.iter().enumerate() {
                    work[i + j] ^= g;
                }
            }
        }
        work[bits.len()..].iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
    }

    #[test]
    fn matches_long_division() {
        let bits: Vec<u8> = (0..77u32).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        for p in CrcPoly::ALL {
            assert_eq!(crc_compute(&bits, p), oracle_remainder(&bits, p), "{p:?}");
        }
    }

    #[test]
    fn zero_payload_gives_zero_crc() {
        for p in CrcPoly::ALL {
            let a = crc_attach(&[0; 40], p).unwrap();
            assert!(a[40..].iter().all(|&b| b == 0));
            assert!(crc_check(&a, p));
        }
    }

    #[test]
    fn names_and_errors() {
        assert_eq!(CrcPoly::from_name("CRC24A").unwrap(), CrcPoly::Crc24A);
        assert!(CrcPoly::from_name("crc32").is_err());
        assert!(crc_attach(&[], CrcPoly::Crc16).is_err());
    }
}
