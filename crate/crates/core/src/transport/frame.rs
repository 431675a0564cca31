//! Wire framing: `u32` little-endian payload byte length, `u64`
//! little-endian round tag, then the payload as little-endian `u64` words.

use std::io::{self, Read, Write};

use super::RoundMessage;
use crate::error::TransportError;

pub const FRAME_HEADER_LEN: usize = 12;

/// Payload limit; a round never carries more than this many bytes.
const MAX_PAYLOAD_BYTES: usize = u32::MAX as usize;

pub fn encode_frame(msg: &RoundMessage) -> Result<Vec<u8>, TransportError> {
    let len = msg.payload.len() * 8;
    if len > MAX_PAYLOAD_BYTES {
        return Err(TransportError::Frame(format!(
            "payload of {len} bytes exceeds frame limit"
        )));
    }
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + len);
    out.extend_from_slice(&(len as u32).to_le_bytes());
    out.extend_from_slice(&msg.round_tag.to_le_bytes());
    for w in &msg.payload {
        out.extend_from_slice(&w.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_frame(bytes: &[u8]) -> Result<RoundMessage, TransportError> {
    if bytes.len() < FRAME_HEADER_LEN {
        return Err(TransportError::Frame("truncated header".into()));
    }
    let len = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let round_tag = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let body = &bytes[FRAME_HEADER_LEN..];
    if !len.is_multiple_of(8) || body.len() != len {
        return Err(TransportError::Frame(format!(
            "declared payload {len} bytes, found {}",
            body.len()
        )));
    }
    Ok(RoundMessage {
        round_tag,
        payload: words_from_le(body),
    })
}

pub fn write_frame<W: Write>(w: &mut W, msg: &RoundMessage) -> Result<(), TransportError> {
    w.write_all(&encode_frame(msg)?)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. Returns `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<RoundMessage>, TransportError> {
    let mut header = [0u8; FRAME_HEADER_LEN];
    match r.read_exact(&mut header) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let round_tag = u64::from_le_bytes(header[4..12].try_into().unwrap());
    if !len.is_multiple_of(8) {
        return Err(TransportError::Frame(format!(
            "payload length {len} is not a multiple of 8"
        )));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    Ok(Some(RoundMessage {
        round_tag,
        payload: words_from_le(&body),
    }))
}

fn words_from_le(bytes: &[u8]) -> Vec<u64> {
    bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frame_layout_is_bit_exact() {
        let msg = RoundMessage::new(0x0102_0304_0506_0708, vec![1, u64::MAX]);
        let bytes = encode_frame(&msg).unwrap();
        assert_eq!(&bytes[0..4], &16u32.to_le_bytes());
        assert_eq!(&bytes[4..12], &[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(&bytes[12..20], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[20..28], &[0xff; 8]);
    }

    #[test]
    fn rejects_bad_lengths() {
        let mut bytes = encode_frame(&RoundMessage::new(1, vec![5])).unwrap();
        bytes.pop();
        assert!(decode_frame(&bytes).is_err());
        assert!(decode_frame(&[0u8; 3]).is_err());
    }

    #[test]
    fn clean_eof_is_none() {
        let mut empty: &[u8] = &[];
        assert!(read_frame(&mut empty).unwrap().is_none());
    }

    proptest! {
        #[test]
        fn frames_round_trip(tag: u64, payload in proptest::collection::vec(any::<u64>(), 0..64)) {
            let msg = RoundMessage::new(tag, payload);
            let bytes = encode_frame(&msg).unwrap();
            prop_assert_eq!(decode_frame(&bytes).unwrap(), msg.clone());
            let mut cursor = std::io::Cursor::new(bytes);
            prop_assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), msg);
        }
    }
}
