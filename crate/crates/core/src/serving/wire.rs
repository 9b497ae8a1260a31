//! Framed message protocol between the front end and workers.
//!
//! Every frame starts with the 4-byte marker `CIN1`, then
//!
//! ```text
//! type: u8              1 = TASK, 2 = RESULT, 3 = ERROR
//! query_id: u64 LE
//! task_index: u8        1-based position in the coded batch
//! ```
//!
//! TASK and RESULT continue with `dim: u32 LE` followed by `dim` f64
//! values, little-endian. ERROR continues with `code: u16 LE`,
//! `msg_len: u32 LE`, and `msg_len` bytes of UTF-8.
//!
//! All integers and floats are little-endian. A reader that loses framing
//! scans byte by byte for the next marker, so one corrupt frame costs at
//! most the bytes until the next `CIN1`.

use std::io::{self, Read, Write};

pub const MAGIC: [u8; 4] = *b"CIN1";

pub const TYPE_TASK: u8 = 1;
pub const TYPE_RESULT: u8 = 2;
pub const TYPE_ERROR: u8 = 3;

/// ERROR code: the peer sent bytes that did not parse as a frame.
pub const ERR_MALFORMED: u16 = 1;
/// ERROR code: a TASK payload length did not match the worker's function.
pub const ERR_DIM_MISMATCH: u16 = 2;

/// Upper bound on vector length accepted off the wire. Caps allocation at
/// 8 MiB per frame.
pub const MAX_DIM: u32 = 1 << 20;
/// Upper bound on ERROR message length in bytes.
pub const MAX_ERROR_MSG: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Task { query_id: u64, task_index: u8, payload: Vec<f64> },
    Result { query_id: u64, task_index: u8, payload: Vec<f64> },
    Error { query_id: u64, task_index: u8, code: u16, message: String },
}

impl Frame {
    pub fn query_id(&self) -> u64 {
        match *self {
            Frame::Task { query_id, .. }
            | Frame::Result { query_id, .. }
            | Frame::Error { query_id, .. } => query_id,
        }
    }

    pub fn task_index(&self) -> u8 {
        match *self {
            Frame::Task { task_index, .. }
            | Frame::Result { task_index, .. }
            | Frame::Error { task_index, .. } => task_index,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(&MAGIC);
        match self {
            Frame::Task { query_id, task_index, payload }
            | Frame::Result { query_id, task_index, payload } => {
                let ty = if matches!(self, Frame::Task { .. }) { TYPE_TASK } else { TYPE_RESULT };
                out.push(ty);
                out.extend_from_slice(&query_id.to_le_bytes());
                out.push(*task_index);
                out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
                for v in payload {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Frame::Error { query_id, task_index, code, message } => {
                out.push(TYPE_ERROR);
                out.extend_from_slice(&query_id.to_le_bytes());
                out.push(*task_index);
                out.extend_from_slice(&code.to_le_bytes());
                out.extend_from_slice(&(message.len() as u32).to_le_bytes());
                out.extend_from_slice(message.as_bytes());
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.encode())
    }
}

/// One attempt to pull a frame off the stream.
#[derive(Debug, PartialEq)]
pub enum ReadOutcome {
    Frame(Frame),
    /// The stream held bytes that were not a valid frame. The reader has
    /// already repositioned itself; calling again continues after the bad
    /// region.
    Malformed { skipped_bytes: u64, reason: String },
}

/// Incremental frame parser over any byte stream. Wrap raw sockets in a
/// `BufReader`: resynchronization reads one byte at a time.
pub struct FrameReader<R> {
    inner: R,
    /// True when a marker has been consumed but its body not yet read;
    /// set while reporting pre-marker garbage so the next call resumes at
    /// the body instead of rescanning.
    magic_consumed: bool,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        FrameReader { inner, magic_consumed: false }
    }

    /// Reads the next frame, skipping garbage. End of stream surfaces as
    /// `io::ErrorKind::UnexpectedEof`.
    pub fn read_frame(&mut self) -> io::Result<ReadOutcome> {
        if !self.magic_consumed {
            let skipped = self.scan_to_magic()?;
            if skipped > 0 {
                self.magic_consumed = true;
                return Ok(ReadOutcome::Malformed {
                    skipped_bytes: skipped,
                    reason: format!("skipped {skipped} bytes before frame marker"),
                });
            }
        }
        self.magic_consumed = false;

        let ty = read_u8(&mut self.inner)?;
        if !matches!(ty, TYPE_TASK | TYPE_RESULT | TYPE_ERROR) {
            return Ok(ReadOutcome::Malformed {
                skipped_bytes: 0,
                reason: format!("unknown frame type {ty}"),
            });
        }
        let query_id = read_u64(&mut self.inner)?;
        let task_index = read_u8(&mut self.inner)?;

        if ty == TYPE_ERROR {
            let code = read_u16(&mut self.inner)?;
            let len = read_u32(&mut self.inner)?;
            if len > MAX_ERROR_MSG {
                return Ok(ReadOutcome::Malformed {
                    skipped_bytes: 0,
                    reason: format!("error message length {len} exceeds cap {MAX_ERROR_MSG}"),
                });
            }
            let mut buf = vec![0u8; len as usize];
            self.inner.read_exact(&mut buf)?;
            return match String::from_utf8(buf) {
                Ok(message) => Ok(ReadOutcome::Frame(Frame::Error {
                    query_id,
                    task_index,
                    code,
                    message,
                })),
                Err(_) => Ok(ReadOutcome::Malformed {
                    skipped_bytes: 0,
                    reason: "error message is not valid UTF-8".to_string(),
                }),
            };
        }

        let dim = read_u32(&mut self.inner)?;
        if dim > MAX_DIM {
            return Ok(ReadOutcome::Malformed {
                skipped_bytes: 0,
                reason: format!("vector length {dim} exceeds cap {MAX_DIM}"),
            });
        }
        let mut buf = vec![0u8; dim as usize * 8];
        self.inner.read_exact(&mut buf)?;
        let payload: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let frame = if ty == TYPE_TASK {
            Frame::Task { query_id, task_index, payload }
        } else {
            Frame::Result { query_id, task_index, payload }
        };
        Ok(ReadOutcome::Frame(frame))
    }

    /// Consumes bytes through the next marker, returning how many garbage
    /// bytes preceded it.
    fn scan_to_magic(&mut self) -> io::Result<u64> {
        let mut window = [0u8; 4];
        self.inner.read_exact(&mut window)?;
        let mut skipped = 0u64;
        while window != MAGIC {
            let next = read_u8(&mut self.inner)?;
            window.rotate_left(1);
            window[3] = next;
            skipped += 1;
        }
        Ok(skipped)
    }
}

fn read_u8<R: Read>(r: &mut R) -> io::Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u16<R: Read>(r: &mut R) -> io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn read_all(bytes: Vec<u8>) -> Vec<io::Result<ReadOutcome>> {
        let mut reader = FrameReader::new(Cursor::new(bytes));
        let mut out = Vec::new();
        loop {
            match reader.read_frame() {
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
                other => out.push(other),
            }
        }
        out
    }

    #[test]
    fn result_frame_bytes_are_pinned() {
        let frame = Frame::Result { query_id: 7, task_index: 2, payload: vec![1.0, -2.5] };
        let expected: Vec<u8> = vec![
            0x43, 0x49, 0x4E, 0x31, // "CIN1"
            0x02, // RESULT
            0x07, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, // query 7
            0x02, // task 2
            0x02, 0x00, 0x00, 0x00, // dim 2
            0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F, // 1.0
            0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x04, 0xC0, // -2.5
        ];
        assert_eq!(frame.encode(), expected);
    }

    #[test]
    fn frames_round_trip() {
        let frames = vec![
            Frame::Task { query_id: u64::MAX, task_index: 255, payload: vec![] },
            Frame::Result { query_id: 0, task_index: 1, payload: vec![f64::MIN, 0.0, f64::MAX] },
            Frame::Error {
                query_id: 42,
                task_index: 3,
                code: ERR_DIM_MISMATCH,
                message: "expected dim 2, got 5".to_string(),
            },
        ];
        let mut bytes = Vec::new();
        for f in &frames {
            f.write_to(&mut bytes).unwrap();
        }
        let out = read_all(bytes);
        assert_eq!(out.len(), frames.len());
        for (got, want) in out.into_iter().zip(frames) {
            assert_eq!(got.unwrap(), ReadOutcome::Frame(want));
        }
    }

    #[test]
    fn negative_zero_payload_survives_bitwise() {
        let frame = Frame::Result { query_id: 1, task_index: 1, payload: vec![-0.0] };
        let out = read_all(frame.encode());
        match out[0].as_ref().unwrap() {
            ReadOutcome::Frame(Frame::Result { payload, .. }) => {
                assert_eq!(payload[0].to_bits(), (-0.0f64).to_bits());
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn garbage_before_a_frame_is_skipped_and_reported() {
        let mut bytes = vec![0xDE, 0xAD, 0xBE];
        let frame = Frame::Task { query_id: 9, task_index: 1, payload: vec![3.25] };
        bytes.extend(frame.encode());
        let out = read_all(bytes);
        assert_eq!(out.len(), 2);
        match out[0].as_ref().unwrap() {
            ReadOutcome::Malformed { skipped_bytes: 3, .. } => {}
            other => panic!("expected 3 skipped bytes, got {other:?}"),
        }
        assert_eq!(*out[1].as_ref().unwrap(), ReadOutcome::Frame(frame));
    }

    #[test]
    fn unknown_type_resyncs_to_the_next_frame() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.push(9); // no such type
        bytes.extend_from_slice(&[0u8; 9]); // pretend header remnants
        let frame = Frame::Result { query_id: 2, task_index: 1, payload: vec![] };
        bytes.extend(frame.encode());
        let out = read_all(bytes);
        assert_eq!(out.len(), 3, "bad type, its remnant bytes, then the frame");
        assert!(matches!(out[0].as_ref().unwrap(), ReadOutcome::Malformed { reason, .. }
            if reason.contains("unknown frame type 9")));
        assert!(matches!(out[1].as_ref().unwrap(), ReadOutcome::Malformed { .. }));
        assert_eq!(*out[2].as_ref().unwrap(), ReadOutcome::Frame(frame));
    }

    #[test]
    fn oversized_dim_is_rejected_without_allocating() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.push(TYPE_TASK);
        bytes.extend_from_slice(&1u64.to_le_bytes());
        bytes.push(1);
        bytes.extend_from_slice(&(MAX_DIM + 1).to_le_bytes());
        let out = read_all(bytes);
        assert!(matches!(out[0].as_ref().unwrap(), ReadOutcome::Malformed { reason, .. }
            if reason.contains("exceeds cap")));
    }

    #[test]
    fn invalid_utf8_error_message_is_malformed() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.push(TYPE_ERROR);
        bytes.extend_from_slice(&1u64.to_le_bytes());
        bytes.push(1);
        bytes.extend_from_slice(&ERR_MALFORMED.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0xFF, 0xFE]);
        let out = read_all(bytes);
        assert!(matches!(out[0].as_ref().unwrap(), ReadOutcome::Malformed { reason, .. }
            if reason.contains("UTF-8")));
    }

    #[test]
    fn truncated_payload_reads_as_eof() {
        let frame = Frame::Result { query_id: 1, task_index: 1, payload: vec![1.0, 2.0] };
        let mut bytes = frame.encode();
        bytes.truncate(bytes.len() - 5);
        let mut reader = FrameReader::new(Cursor::new(bytes));
        let err = reader.read_frame().unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::UnexpectedEof);
    }

    #[test]
    fn empty_stream_reads_as_eof() {
        let mut reader = FrameReader::new(Cursor::new(Vec::new()));
        let err = reader.read_frame().unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::UnexpectedEof);
    }
}
