//! Floating-point scalar abstraction shared by the numeric parts of the
//! crate (similarity measures and the sentence classifier).

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};

/// A real scalar usable by the similarity measures and the MLP.
///
/// Besides the arithmetic from [`Float`], a scalar knows its little-endian
/// byte encoding so model files can be written and reloaded bit-identically.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Encoded width in bytes.
    const WIDTH: usize;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `WIDTH` bytes.
    fn read_le(bytes: &[u8]) -> Self;

    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).unwrap_or_else(Self::nan)
    }

    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {
    const WIDTH: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 4];
        buf.copy_from_slice(&bytes[..4]);
        f32::from_le_bytes(buf)
    }
}

impl Scalar for f64 {
    const WIDTH: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<T: Scalar>(x: T) -> T {
        let mut buf = Vec::new();
        x.write_le(&mut buf);
        assert_eq!(buf.len(), T::WIDTH);
        T::read_le(&buf)
    }

    #[test]
    fn le_roundtrip_is_bit_exact() {
        for x in [0.0f64, -1.5, 1e-300, f64::MAX, 0.1 + 0.2] {
            assert_eq!(roundtrip(x).to_bits(), x.to_bits());
        }
        for x in [0.0f32, -1.5, 1e-30, f32::MAX, 0.3] {
            assert_eq!(roundtrip(x).to_bits(), x.to_bits());
        }
    }
}
