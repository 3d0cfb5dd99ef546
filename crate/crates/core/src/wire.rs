//! Binary message framing shared by the protocol and the compilers.
//!
//! One frame per message: a tag byte, a little-endian u32 payload length,
//! then the payload with fields in declaration order. Bit strings are packed
//! LSB-first and padded to whole bytes.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("truncated frame")]
    Truncated,
    #[error("unexpected tag {got:#04x}, wanted {want:#04x}")]
    UnexpectedTag { got: u8, want: u8 },
    #[error("malformed payload")]
    MalformedPayload,
    #[error("trailing bytes after final frame")]
    TrailingBytes,
}

pub type Result<T> = std::result::Result<T, WireError>;

pub mod tag {
    pub const PK: u8 = 0x01;
    pub const COMMITMENT: u8 = 0x02;
    pub const CHALLENGE: u8 = 0x03;
    pub const OPENING: u8 = 0x04;
    pub const RESULT: u8 = 0x05;

    // compiler messages
    pub const HASH_KEY: u8 = 0x10;
    pub const DIGEST: u8 = 0x11;
    pub const AOK_MSG: u8 = 0x12;
    pub const AOK_CHALLENGE: u8 = 0x13;
    pub const AOK_RESPONSE: u8 = 0x14;
    pub const COINS: u8 = 0x15;
    pub const FHE_PK: u8 = 0x16;
    pub const FHE_CT: u8 = 0x17;
    pub const FS_BUNDLE: u8 = 0x18;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub tag: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(tag: u8, payload: Vec<u8>) -> Frame {
        Frame { tag, payload }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.payload.len());
        out.push(self.tag);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decode one frame from the front of `bytes`, returning it and the rest.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, &[u8])> {
        if bytes.len() < 5 {
            return Err(WireError::Truncated);
        }
        let tag = bytes[0];
        let len = u32::from_le_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]) as usize;
        if bytes.len() < 5 + len {
            return Err(WireError::Truncated);
        }
        Ok((Frame { tag, payload: bytes[5..5 + len].to_vec() }, &bytes[5 + len..]))
    }

    pub fn decode_expect(bytes: &[u8], want: u8) -> Result<(Frame, &[u8])> {
        let (f, rest) = Frame::decode(bytes)?;
        if f.tag != want {
            return Err(WireError::UnexpectedTag { got: f.tag, want });
        }
        Ok((f, rest))
    }
}

/// Decode a full byte stream into frames, requiring exact consumption.
pub fn decode_all(mut bytes: &[u8]) -> Result<Vec<Frame>> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (f, rest) = Frame::decode(bytes)?;
        out.push(f);
        bytes = rest;
    }
    Ok(out)
}

pub fn encode_all(frames: &[Frame]) -> Vec<u8> {
    frames.iter().flat_map(|f| f.encode()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn truncated_frames_are_rejected() {
        assert_eq!(Frame::decode(&[0x01, 0x02, 0x00]), Err(WireError::Truncated));
        let f = Frame::new(tag::CHALLENGE, vec![1]);
        let mut bytes = f.encode();
        bytes.pop();
        assert_eq!(Frame::decode(&bytes), Err(WireError::Truncated));
    }

    proptest! {
        #[test]
        fn frame_stream_roundtrip(frames in proptest::collection::vec(
            (0u8..0x20, proptest::collection::vec(any::<u8>(), 0..64)), 0..8)
        ) {
            let frames: Vec<Frame> =
                frames.into_iter().map(|(t, p)| Frame::new(t, p)).collect();
            let bytes = encode_all(&frames);
            prop_assert_eq!(decode_all(&bytes).unwrap(), frames);
        }
    }
}
