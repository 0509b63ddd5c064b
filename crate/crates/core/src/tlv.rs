//! Tag-length-value primitives shared by the E2AP and service-model codecs.
//!
//! Every field is `[tag:1][length:3 big-endian][value:length]`. Composite
//! values nest further TLVs inside their value. Fields appear in a fixed
//! order; optional fields are simply absent.

use thiserror::Error;

/// Largest value a 3-byte length can carry.
pub const MAX_VALUE_LEN: usize = (1 << 24) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TlvError {
    #[error("truncated at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("expected tag {expected} at byte {offset}, found {found}")]
    UnexpectedTag {
        expected: u8,
        found: u8,
        offset: usize,
    },
    #[error("missing field with tag {0}")]
    Missing(u8),
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("bad value for tag {tag}: {reason}")]
    BadValue { tag: u8, reason: String },
    #[error("value of {len} bytes under tag {tag} exceeds the 3-byte length limit")]
    Oversize { tag: u8, len: usize },
}

/// Appends TLV fields to a buffer.
#[derive(Debug, Default)]
pub struct TlvWriter {
    buf: Vec<u8>,
}

impl TlvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, tag: u8, value: &[u8]) -> Result<(), TlvError> {
        if value.len() > MAX_VALUE_LEN {
            return Err(TlvError::Oversize {
                tag,
                len: value.len(),
            });
        }
        let len = value.len() as u32;
        self.buf.push(tag);
        self.buf.extend_from_slice(&len.to_be_bytes()[1..]);
        self.buf.extend_from_slice(value);
        Ok(())
    }

    pub fn u8(&mut self, tag: u8, v: u8) -> Result<(), TlvError> {
        self.bytes(tag, &[v])
    }

    pub fn u16(&mut self, tag: u8, v: u16) -> Result<(), TlvError> {
        self.bytes(tag, &v.to_be_bytes())
    }

    pub fn u32(&mut self, tag: u8, v: u32) -> Result<(), TlvError> {
        self.bytes(tag, &v.to_be_bytes())
    }

    pub fn u64(&mut self, tag: u8, v: u64) -> Result<(), TlvError> {
        self.bytes(tag, &v.to_be_bytes())
    }

    pub fn i64(&mut self, tag: u8, v: i64) -> Result<(), TlvError> {
        self.bytes(tag, &v.to_be_bytes())
    }

    pub fn f64(&mut self, tag: u8, v: f64) -> Result<(), TlvError> {
        self.bytes(tag, &v.to_bits().to_be_bytes())
    }

    pub fn str(&mut self, tag: u8, v: &str) -> Result<(), TlvError> {
        self.bytes(tag, v.as_bytes())
    }

    pub fn flag(&mut self, tag: u8, v: bool) -> Result<(), TlvError> {
        self.u8(tag, u8::from(v))
    }

    /// Writes a composite field whose value is built by `f`.
    pub fn nested<F>(&mut self, tag: u8, f: F) -> Result<(), TlvError>
    where
        F: FnOnce(&mut TlvWriter) -> Result<(), TlvError>,
    {
        let mut inner = TlvWriter::new();
        f(&mut inner)?;
        self.bytes(tag, &inner.buf)
    }
}

/// Reads TLV fields in order from a byte slice.
#[derive(Debug, Clone)]
pub struct TlvReader<'a> {
    data: &'a [u8],
    pos: usize,
    /// Absolute offset of `data[0]` within the outermost buffer.
    base: usize,
}

impl<'a> TlvReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self::with_base(data, 0)
    }

    pub fn with_base(data: &'a [u8], base: usize) -> Self {
        Self { data, pos: 0, base }
    }

    pub fn offset(&self) -> usize {
        self.base + self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.data.len()
    }

    pub fn peek_tag(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    /// Consumes the next field, returning its tag and value.
    pub fn next_field(&mut self) -> Result<(u8, &'a [u8], usize), TlvError> {
        let remaining = self.data.len() - self.pos;
        if remaining < 4 {
            return Err(TlvError::Truncated {
                offset: self.offset(),
                needed: 4 - remaining,
            });
        }
        let tag = self.data[self.pos];
        let len = u32::from_be_bytes([
            0,
            self.data[self.pos + 1],
            self.data[self.pos + 2],
            self.data[self.pos + 3],
        ]) as usize;
        let start = self.pos + 4;
        if self.data.len() - start < len {
            return Err(TlvError::Truncated {
                offset: self.base + start,
                needed: len - (self.data.len() - start),
            });
        }
        self.pos = start + len;
        Ok((tag, &self.data[start..start + len], self.base + start))
    }

    pub fn expect(&mut self, tag: u8) -> Result<&'a [u8], TlvError> {
        match self.peek_tag() {
            None => Err(TlvError::Missing(tag)),
            Some(t) if t != tag => Err(TlvError::UnexpectedTag {
                expected: tag,
                found: t,
                offset: self.offset(),
            }),
            Some(_) => Ok(self.next_field()?.1),
        }
    }

    pub fn optional(&mut self, tag: u8) -> Result<Option<&'a [u8]>, TlvError> {
        if self.peek_tag() == Some(tag) {
            Ok(Some(self.next_field()?.1))
        } else {
            Ok(None)
        }
    }

    /// Nested reader over the value of the next field, which must carry `tag`.
    pub fn nested(&mut self, tag: u8) -> Result<TlvReader<'a>, TlvError> {
        match self.peek_tag() {
            None => Err(TlvError::Missing(tag)),
            Some(t) if t != tag => Err(TlvError::UnexpectedTag {
                expected: tag,
                found: t,
                offset: self.offset(),
            }),
            Some(_) => {
                let (_, value, at) = self.next_field()?;
                Ok(TlvReader::with_base(value, at))
            }
        }
    }

    pub fn optional_nested(&mut self, tag: u8) -> Result<Option<TlvReader<'a>>, TlvError> {
        if self.peek_tag() == Some(tag) {
            Ok(Some(self.nested(tag)?))
        } else {
            Ok(None)
        }
    }

    pub fn u8(&mut self, tag: u8) -> Result<u8, TlvError> {
        Ok(fixed::<1>(tag, self.expect(tag)?)?[0])
    }

    pub fn u16(&mut self, tag: u8) -> Result<u16, TlvError> {
        Ok(u16::from_be_bytes(fixed(tag, self.expect(tag)?)?))
    }

    pub fn u32(&mut self, tag: u8) -> Result<u32, TlvError> {
        Ok(u32::from_be_bytes(fixed(tag, self.expect(tag)?)?))
    }

    pub fn u64(&mut self, tag: u8) -> Result<u64, TlvError> {
        Ok(u64::from_be_bytes(fixed(tag, self.expect(tag)?)?))
    }

    pub fn i64(&mut self, tag: u8) -> Result<i64, TlvError> {
        Ok(i64::from_be_bytes(fixed(tag, self.expect(tag)?)?))
    }

    pub fn f64(&mut self, tag: u8) -> Result<f64, TlvError> {
        Ok(f64::from_bits(u64::from_be_bytes(fixed(
            tag,
            self.expect(tag)?,
        )?)))
    }

    pub fn string(&mut self, tag: u8) -> Result<String, TlvError> {
        let raw = self.expect(tag)?;
        String::from_utf8(raw.to_vec()).map_err(|_| TlvError::BadValue {
            tag,
            reason: "invalid UTF-8".into(),
        })
    }

    pub fn flag(&mut self, tag: u8) -> Result<bool, TlvError> {
        match self.u8(tag)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(TlvError::BadValue {
                tag,
                reason: format!("flag byte {v}"),
            }),
        }
    }

    /// Reads every remaining field carrying `tag` (list items).
    pub fn repeated(&mut self, tag: u8) -> Result<Vec<TlvReader<'a>>, TlvError> {
        let mut out = Vec::new();
        while self.peek_tag() == Some(tag) {
            out.push(self.nested(tag)?);
        }
        Ok(out)
    }

    pub fn finish(&self) -> Result<(), TlvError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(TlvError::Trailing(self.data.len() - self.pos))
        }
    }

    pub fn remaining(&self) -> &'a [u8] {
        &self.data[self.pos..]
    }
}

/// Interprets a value as a fixed-width big-endian integer.
pub fn fixed<const N: usize>(tag: u8, raw: &[u8]) -> Result<[u8; N], TlvError> {
    raw.try_into().map_err(|_| TlvError::BadValue {
        tag,
        reason: format!("expected {N} bytes, got {}", raw.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_tag_then_24_bit_length() {
        let mut w = TlvWriter::new();
        w.bytes(7, &[0xAA, 0xBB]).unwrap();
        assert_eq!(w.into_bytes(), vec![7, 0, 0, 2, 0xAA, 0xBB]);
    }

    #[test]
    fn nested_and_optional_fields() {
        let mut w = TlvWriter::new();
        w.nested(1, |w| {
            w.u16(2, 0x1234)?;
            w.str(3, "du-0")
        })
        .unwrap();
        w.u8(9, 4).unwrap();
        let bytes = w.into_bytes();

        let mut r = TlvReader::new(&bytes);
        let mut inner = r.nested(1).unwrap();
        assert_eq!(inner.u16(2).unwrap(), 0x1234);
        assert_eq!(inner.optional(4).unwrap(), None);
        assert_eq!(inner.string(3).unwrap(), "du-0");
        inner.finish().unwrap();
        assert_eq!(r.u8(9).unwrap(), 4);
        r.finish().unwrap();
    }

    #[test]
    fn truncation_reports_offset() {
        let err = TlvReader::new(&[1, 0, 0, 5, 0xFF]).next_field().unwrap_err();
        assert_eq!(
            err,
            TlvError::Truncated {
                offset: 4,
                needed: 4
            }
        );
    }

    #[test]
    fn oversize_value_rejected() {
        let big = vec![0u8; MAX_VALUE_LEN + 1];
        assert!(matches!(
            TlvWriter::new().bytes(1, &big),
            Err(TlvError::Oversize { .. })
        ));
    }
}
