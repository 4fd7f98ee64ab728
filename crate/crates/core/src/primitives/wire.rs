//! Tag-length framing shared by every serialized object.
//!
//! A frame is `tag (1 byte) || body length (2 bytes, big-endian) || body`.
//! Integers inside a body are fixed-width big-endian. Nested objects are
//! themselves frames, so a decoder can always skip or reject them by length.

use thiserror::Error;

/// Bytes taken by the frame header.
pub const HEADER_LEN: usize = 3;

/// Largest body a single frame can carry.
pub const MAX_BODY_LEN: usize = u16::MAX as usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("input truncated: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("unexpected tag {found:#04x}, expected {expected:#04x}")]
    TagMismatch { expected: u8, found: u8 },
    #[error("{0} trailing bytes after object")]
    TrailingBytes(usize),
    #[error("body of {0} bytes exceeds frame limit")]
    TooLong(usize),
    #[error("invalid field: {0}")]
    Invalid(&'static str),
}

/// Type tags. Values are part of the on-wire format and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tag {
    PrfKey = 0x01,
    PrfOutput = 0x02,
    Commitment = 0x03,
    Blinding = 0x04,
    PublicKey = 0x05,
    Signature = 0x06,
    MerkleRoot = 0x07,
    MerklePath = 0x08,
    Seed = 0x09,
    Tape = 0x0a,

    RandomizerConfig = 0x10,
    RelationParams = 0x11,

    StatementBase = 0x20,
    StatementExpand = 0x21,
    StatementShuffle = 0x22,
    WitnessBase = 0x23,
    WitnessExpand = 0x24,
    WitnessShuffle = 0x25,
    Proof = 0x26,
    EvaluationKey = 0x27,
    VerificationKey = 0x28,

    GenRandRequest = 0x30,
    GenRandResponse = 0x31,
    Submit = 0x32,
    PublicValues = 0x33,
    PublicParams = 0x34,
    Bundle = 0x35,
    SignedInput = 0x36,
}

impl Tag {
    pub fn byte(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    /// Variable-length byte string with a 2-byte length prefix.
    pub fn put_var(&mut self, b: &[u8]) {
        debug_assert!(b.len() <= MAX_BODY_LEN);
        self.put_u16(b.len() as u16);
        self.put_bytes(b);
    }

    /// Writes a nested object as its own frame.
    pub fn put_object<T: Wire>(&mut self, obj: &T) {
        let bytes = obj.to_bytes();
        self.put_bytes(&bytes);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.remaining() < n {
            return Err(WireError::Truncated {
                needed: n - self.remaining(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn get_u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn get_u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.get_array()?))
    }

    pub fn get_u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.get_array()?))
    }

    pub fn get_u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.get_array()?))
    }

    pub fn get_array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn get_var(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.get_u16()? as usize;
        self.take(len)
    }

    /// Reads a nested frame with the given tag and returns a reader over its body.
    pub fn get_frame(&mut self, tag: Tag) -> Result<Reader<'a>, WireError> {
        let found = self.get_u8()?;
        if found != tag.byte() {
            return Err(WireError::TagMismatch {
                expected: tag.byte(),
                found,
            });
        }
        let len = self.get_u16()? as usize;
        Ok(Reader::new(self.take(len)?))
    }

    pub fn get_object<T: Wire>(&mut self) -> Result<T, WireError> {
        let mut body = self.get_frame(T::TAG)?;
        let obj = T::read_body(&mut body)?;
        body.finish()?;
        Ok(obj)
    }

    /// Fails unless every byte was consumed.
    pub fn finish(&self) -> Result<(), WireError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(WireError::TrailingBytes(n)),
        }
    }
}

/// Wraps a body in a frame header.
pub fn frame(tag: Tag, body: &[u8]) -> Vec<u8> {
    assert!(body.len() <= MAX_BODY_LEN, "frame body too long");
    let mut out = Vec::with_capacity(HEADER_LEN + body.len());
    out.push(tag.byte());
    out.extend_from_slice(&(body.len() as u16).to_be_bytes());
    out.extend_from_slice(body);
    out
}

/// A value with a framed byte encoding.
pub trait Wire: Sized {
    const TAG: Tag;

    fn write_body(&self, w: &mut Writer);

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write_body(&mut w);
        frame(Self::TAG, &w.into_inner())
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let obj = r.get_object()?;
        r.finish()?;
        Ok(obj)
    }
}
