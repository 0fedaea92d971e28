//! Canonical byte encoding used for hashing and signing.
//!
//! Every field is written as a 4-byte big-endian length followed by the field
//! bytes. Integers are fixed-width big-endian (`u16` 2 bytes, `u32` 4,
//! `u64` 8, `u128` 16) inside that frame. Fields appear in declaration order.
//! See `docs/encoding.md` for the per-structure layouts.

use thiserror::Error;

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, field: &[u8]) -> &mut Self {
        let len = u32::try_from(field.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(field);
        self
    }

    pub fn str(&mut self, field: &str) -> &mut Self {
        self.bytes(field.as_bytes())
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn raw(&mut self, data: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(data);
        self
    }

    pub fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("input ended early")]
    UnexpectedEnd,
    #[error("field has length {got}, expected {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("field is not valid UTF-8")]
    Utf8,
    #[error("unknown opcode {0:#04x}")]
    UnknownOpcode(u8),
}

pub struct Decoder<'a> {
    input: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Decoder { input }
    }

    pub fn byte(&mut self) -> Result<u8, DecodeError> {
        let (&b, rest) = self.input.split_first().ok_or(DecodeError::UnexpectedEnd)?;
        self.input = rest;
        Ok(b)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        if self.input.len() < 4 {
            return Err(DecodeError::UnexpectedEnd);
        }
        let (len, rest) = self.input.split_at(4);
        let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(DecodeError::UnexpectedEnd);
        }
        let (field, rest) = rest.split_at(len);
        self.input = rest;
        Ok(field)
    }

    pub fn fixed<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let field = self.bytes()?;
        field
            .try_into()
            .map_err(|_| DecodeError::FieldLength { expected: N, got: field.len() })
    }

    pub fn string(&mut self) -> Result<String, DecodeError> {
        let field = self.bytes()?;
        String::from_utf8(field.to_vec()).map_err(|_| DecodeError::Utf8)
    }

    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        self.fixed::<2>().map(u16::from_be_bytes)
    }

    pub fn u128(&mut self) -> Result<u128, DecodeError> {
        self.fixed::<16>().map(u128::from_be_bytes)
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        if self.input.is_empty() {
            Ok(())
        } else {
            Err(DecodeError::TrailingBytes(self.input.len()))
        }
    }
}
