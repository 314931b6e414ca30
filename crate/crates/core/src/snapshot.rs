//! Binary snapshots of a solenoidal state.
//!
//! Layout, all little-endian: magic, version, endianness marker, `M`, `N`,
//! the three radii, time, step, then for every `(l, m)` the toroidal and the
//! poloidal coefficients as `(re, im)` pairs, and a CRC-32 of everything before it.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{DynamoError, Result};
use crate::radial::{RadialBasis, RadialFunction};
use crate::solenoidal::SolenoidalState;
use crate::sph::lm_count;

pub const MAGIC: [u8; 8] = *b"DYNSNAP\0";
pub const VERSION: u32 = 1;
const ENDIAN_MARKER: u32 = 0x0102_0304;
const HEADER_LEN: usize = 8 + 4 * 4 + 8 * 3 + 8 + 8;

/// A decoded snapshot.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: u64,
    pub state: SolenoidalState,
}

pub fn encode(state: &SolenoidalState, step: u64) -> Vec<u8> {
    let size = state.basis.size();
    let mut out = Vec::with_capacity(HEADER_LEN + lm_count(state.max_degree) * size * 32 + 4);
    out.extend_from_slice(&MAGIC);
    for v in [VERSION, ENDIAN_MARKER, state.max_degree as u32, state.basis.n as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for r in state.basis.radii {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out.extend_from_slice(&state.time.to_le_bytes());
    out.extend_from_slice(&step.to_le_bytes());
    for (t, a) in state.t.iter().zip(&state.a) {
        for c in t.coeffs.iter().chain(&a.coeffs) {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let mut b = [0u8; K];
        b.copy_from_slice(&self.bytes[self.pos..self.pos + K]);
        self.pos += K;
        b
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(DynamoError::Format(format!("snapshot too short: {} bytes", bytes.len())));
    }
    if bytes[..8] != MAGIC {
        return Err(DynamoError::Format("not a snapshot file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(DynamoError::Checksum { stored, computed });
    }
    let mut rd = Reader { bytes: body, pos: 8 };
    let version = rd.u32();
    if version != VERSION {
        return Err(DynamoError::Format(format!("unsupported snapshot version {version}")));
    }
    if rd.u32() != ENDIAN_MARKER {
        return Err(DynamoError::Format("unexpected byte order marker".into()));
    }
    let max_degree = rd.u32() as usize;
    let n = rd.u32() as usize;
    let radii = [rd.f64(), rd.f64(), rd.f64()];
    let time = rd.f64();
    let step = rd.u64();
    let basis = RadialBasis::new(n, radii)?;
    let size = basis.size();
    let expected = HEADER_LEN + lm_count(max_degree) * size * 32;
    if body.len() != expected {
        return Err(DynamoError::SizeMismatch {
            expected,
            actual: body.len(),
        });
    }
    let mut state = SolenoidalState::zeros(max_degree, &basis);
    state.time = time;
    let read = |rd: &mut Reader| RadialFunction {
        coeffs: (0..size).map(|_| Complex64::new(rd.f64(), rd.f64())).collect(),
    };
    for k in 0..lm_count(max_degree) {
        state.t[k] = read(&mut rd);
        state.a[k] = read(&mut rd);
    }
    Ok(Snapshot { step, state })
}

pub fn write_snapshot(path: &Path, state: &SolenoidalState, step: u64) -> Result<()> {
    fs::write(path, encode(state, step))?;
    Ok(())
}

/// Reads a snapshot; with `max_degree` set the state is zero-padded to that degree.
pub fn read_snapshot(path: &Path, max_degree: Option<usize>) -> Result<Snapshot> {
    let mut snap = decode(&fs::read(path)?)?;
    if let Some(m) = max_degree {
        snap.state = snap.state.padded(m)?;
    }
    Ok(snap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SolenoidalState {
        let basis = RadialBasis::new(4, [1.0, 2.0, 4.0]).unwrap();
        let mut s = SolenoidalState::zeros(3, &basis);
        s.time = 0.25;
        for (k, f) in s.t.iter_mut().enumerate() {
            for (j, c) in f.coeffs.iter_mut().enumerate() {
                *c = Complex64::new(k as f64 + 0.5, -(j as f64) / 3.0);
            }
        }
        s.a[4].coeffs[2] = Complex64::new(1e-300, 7.0);
        s
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = sample();
        let snap = decode(&encode(&s, 42)).unwrap();
        assert_eq!(snap.step, 42);
        assert_eq!(snap.state.time.to_bits(), s.time.to_bits());
        assert_eq!(snap.state.t, s.t);
        assert_eq!(snap.state.a, s.a);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = encode(&sample(), 1);
        let k = bytes.len() / 2;
        bytes[k] ^= 0x10;
        assert!(matches!(decode(&bytes), Err(DynamoError::Checksum { .. })));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut bytes = encode(&sample(), 1);
        bytes[8] = 9;
        let n = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..n]);
        bytes[n..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(DynamoError::Format(_))));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = encode(&sample(), 1);
        assert!(decode(&bytes[..20]).is_err());
        assert!(decode(&bytes[..bytes.len() - 9]).is_err());
    }
}
