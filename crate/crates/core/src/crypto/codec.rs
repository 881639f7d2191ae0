//! Fixed-width canonical byte encodings.
//!
//! Scalars are 32 bytes big-endian and must be reduced; group elements use
//! the standard compressed encodings (48 bytes in G1, 96 in G2). Composite
//! objects open with a 2-byte format tag: high byte is the object kind, low
//! byte the layout version.

use bls12_381::{G1Affine, G1Projective, G2Affine, Scalar};

use crate::error::{Error, Result};

pub const SCALAR_LEN: usize = 32;
pub const G1_LEN: usize = 48;
pub const G2_LEN: usize = 96;

pub mod tag {
    pub const SIGNATURE: u16 = 0x0101;
    pub const COMMITMENT: u16 = 0x0201;
    pub const RANGE_PROOF: u16 = 0x0301;
    pub const SPK: u16 = 0x0401;
    pub const PRESENTATION: u16 = 0x0501;
    pub const CREDENTIAL: u16 = 0x0601;
    pub const ISSUANCE_RESPONSE: u16 = 0x0701;
    pub const CREDENTIAL_REQUEST: u16 = 0x0801;
    pub const PUBLIC_KEY: u16 = 0x0901;
    pub const BLINDING_PROOF: u16 = 0x0a01;
}

pub fn scalar_to_bytes(s: &Scalar) -> [u8; SCALAR_LEN] {
    let mut b = s.to_bytes();
    b.reverse();
    b
}

pub fn scalar_from_bytes(bytes: &[u8; SCALAR_LEN]) -> Option<Scalar> {
    let mut le = *bytes;
    le.reverse();
    Option::from(Scalar::from_bytes(&le))
}

pub fn g1_to_bytes(p: &G1Projective) -> [u8; G1_LEN] {
    G1Affine::from(p).to_compressed()
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_tag(tag: u16) -> Self {
        let mut w = Self::new();
        w.u16(tag);
        w
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    /// u32 length prefix followed by the bytes.
    pub fn var(&mut self, bytes: &[u8]) -> &mut Self {
        self.u32(bytes.len() as u32);
        self.raw(bytes)
    }

    pub fn scalar(&mut self, s: &Scalar) -> &mut Self {
        self.raw(&scalar_to_bytes(s))
    }

    pub fn g1(&mut self, p: &G1Projective) -> &mut Self {
        self.raw(&g1_to_bytes(p))
    }

    pub fn g2(&mut self, p: &G2Affine) -> &mut Self {
        self.raw(&p.to_compressed())
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    /// Reads and checks the leading format tag.
    pub fn expect_tag(buf: &'a [u8], tag: u16) -> Result<Self> {
        let mut r = Self::new(buf);
        let got = r.u16()?;
        if got != tag {
            return Err(Error::FormatTag(got));
        }
        Ok(r)
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated);
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn var(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn scalar(&mut self) -> Result<Scalar> {
        scalar_from_bytes(&self.array()?).ok_or(Error::Decode("non-canonical scalar"))
    }

    pub fn g1(&mut self) -> Result<G1Projective> {
        let bytes = self.array::<G1_LEN>()?;
        Option::<G1Affine>::from(G1Affine::from_compressed(&bytes))
            .map(G1Projective::from)
            .ok_or(Error::Decode("invalid G1 element"))
    }

    pub fn g2(&mut self) -> Result<G2Affine> {
        let bytes = self.array::<G2_LEN>()?;
        Option::from(G2Affine::from_compressed(&bytes)).ok_or(Error::Decode("invalid G2 element"))
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Decode("trailing bytes"));
        }
        Ok(())
    }
}
