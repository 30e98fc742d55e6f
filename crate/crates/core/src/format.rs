//! The `DST1` tensor file format.
//!
//! Layout, all little-endian, no padding:
//!
//! ```text
//! 0..4    b"DST1"
//! 4..8    rank as u32
//! 8..     rank x u64 extents
//! ..      product(extents) x f64 values, row-major
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{validate_shape, Tensor, MAX_RANK};

pub const MAGIC: &[u8; 4] = b"DST1";

/// Serializes `t` into a byte buffer.
pub fn encode(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * t.rank() + 8 * t.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &n in t.shape() {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &'a [u8], at: usize, n: usize, expected_total: usize) -> Result<&'a [u8]> {
    bytes.get(at..at + n).ok_or(Error::Length {
        expected: expected_total.max(at + n),
        actual: bytes.len(),
    })
}

/// Parses a buffer produced by [`encode`].
pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    let magic = take(bytes, 0, 4, 8)?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let rank = u32::from_le_bytes(take(bytes, 4, 4, 8)?.try_into().unwrap()) as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Shape(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let header = 8 + 8 * rank;
    let mut shape = Vec::with_capacity(rank);
    for axis in 0..rank {
        let raw = take(bytes, 8 + 8 * axis, 8, header)?;
        let extent = u64::from_le_bytes(raw.try_into().unwrap());
        shape.push(
            usize::try_from(extent)
                .map_err(|_| Error::Shape(format!("extent {extent} too large")))?,
        );
    }
    let count = validate_shape(&shape)?;
    let total = count
        .checked_mul(8)
        .and_then(|n| n.checked_add(header))
        .ok_or_else(|| Error::Shape(format!("payload of {shape:?} overflows")))?;
    if bytes.len() < total {
        return Err(Error::Length {
            expected: total,
            actual: bytes.len(),
        });
    }
    if bytes.len() > total {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - total
        )));
    }
    let data = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(shape, data)
}

pub fn write_to(t: &Tensor, mut w: impl Write) -> Result<()> {
    w.write_all(&encode(t))?;
    Ok(())
}

pub fn read_from(mut r: impl Read) -> Result<Tensor> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(t))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn size_of_small_vector() {
        let t = Tensor::vector(&[1.0, 2.0]);
        let bytes = encode(&t);
        assert_eq!(bytes.len(), 32);
        assert_eq!(&bytes[..4], b"DST1");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &1.0f64.to_le_bytes());
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode(&Tensor::vector(&[1.0]));
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode(&Tensor::vector(&[1.0, 2.0, 3.0]));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 3]),
            Err(Error::Length { expected: 40, actual: 37 })
        ));
        assert!(matches!(decode(&bytes[..6]), Err(Error::Length { .. })));
    }

    #[test]
    fn rank_above_limit() {
        let mut bytes = b"DST1".to_vec();
        bytes.extend_from_slice(&9u32.to_le_bytes());
        bytes.extend(std::iter::repeat_n(0u8, 9 * 8 + 8));
        assert!(matches!(decode(&bytes), Err(Error::Shape(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dst");
        let t = Tensor::new(vec![2, 3], vec![0.1, -2.5, 3e300, -0.0, 5e-310, 7.0]).unwrap();
        write_tensor(&t, &path).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back.shape(), t.shape());
        for (a, b) in back.data().iter().zip(t.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            shape in prop::collection::vec(1usize..5, 1..=4),
            seed in any::<u64>(),
        ) {
            let n: usize = shape.iter().product();
            let data: Vec<f64> = (0..n as u64)
                .map(|i| f64::from_bits(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(i as u32) & 0x7FEF_FFFF_FFFF_FFFF))
                .collect();
            let t = Tensor::new(shape, data).unwrap();
            let back = decode(&encode(&t)).unwrap();
            prop_assert_eq!(back.shape(), t.shape());
            prop_assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
