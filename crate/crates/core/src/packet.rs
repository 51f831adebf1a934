//! Wire format.
//!
//! Every packet travels in its own datagram. All integers are big-endian.
//!
//! ```text
//! header  : magic 0x56 0x44 | version u8 = 1 | type u8 | transfer_id u32
//! FIRQ    : requested_chunk_size u32 | name_len u16 | name (UTF-8)
//! FIRP    : status u8 | file_size u64 | file_crc32 u32
//! DRQ     : chunk_index u32
//! DRP     : chunk_index u32 | data_len u32 | data
//! ABORT   : reason_code u8
//! ```

use bytes::Bytes;
use thiserror::Error;

use crate::config::MAX_CHUNK_SIZE;

pub const MAGIC: [u8; 2] = [0x56, 0x44];
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 8;
/// Longest file name a FIRQ may carry.
pub const MAX_NAME_LEN: usize = 1024;
/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65_507;
/// Bytes a DRP adds on top of its chunk data.
pub const DRP_OVERHEAD: usize = HEADER_LEN + 8;

const FIRQ_FIXED: usize = HEADER_LEN + 4 + 2;
const FIRP_LEN: usize = HEADER_LEN + 1 + 8 + 4;
const DRQ_LEN: usize = HEADER_LEN + 4;
const ABORT_LEN: usize = HEADER_LEN + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PacketType {
    Firq = 0x01,
    Firp = 0x02,
    Drq = 0x03,
    Drp = 0x04,
    Abort = 0x05,
}

impl PacketType {
    pub fn from_u8(tag: u8) -> Option<Self> {
        Some(match tag {
            0x01 => Self::Firq,
            0x02 => Self::Firp,
            0x03 => Self::Drq,
            0x04 => Self::Drp,
            0x05 => Self::Abort,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Firq => "FIRQ",
            Self::Firp => "FIRP",
            Self::Drq => "DRQ",
            Self::Drp => "DRP",
            Self::Abort => "ABORT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FirpStatus {
    Ok = 0,
    NotFound = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum AbortReason {
    Refused = 1,
    UserCancel = 2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Packet {
    Firq {
        transfer_id: u32,
        requested_chunk_size: u32,
        file_name: String,
    },
    Firp {
        transfer_id: u32,
        status: FirpStatus,
        file_size: u64,
        file_crc32: u32,
    },
    Drq {
        transfer_id: u32,
        chunk_index: u32,
    },
    Drp {
        transfer_id: u32,
        chunk_index: u32,
        data: Bytes,
    },
    Abort {
        transfer_id: u32,
        reason: AbortReason,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("file name is {0} bytes, limit is {MAX_NAME_LEN}")]
    NameTooLong(usize),
    #[error("chunk data is {0} bytes, limit is {MAX_CHUNK_SIZE}")]
    DataTooLong(usize),
    #[error("chunk indices start at 1")]
    ZeroChunkIndex,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated packet: need {needed} bytes, got {actual}")]
    Truncated { needed: usize, actual: usize },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown packet type {0:#04x}")]
    UnknownType(u8),
    #[error("length field says {declared} bytes follow, datagram holds {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("{0} trailing bytes after packet")]
    TrailingBytes(usize),
    #[error("file name is not valid UTF-8")]
    InvalidUtf8,
    #[error("file name is {0} bytes, limit is {MAX_NAME_LEN}")]
    NameTooLong(usize),
    #[error("chunk data is {0} bytes, limit is {MAX_CHUNK_SIZE}")]
    DataTooLong(usize),
    #[error("unknown FIRP status {0}")]
    InvalidStatus(u8),
    #[error("unknown ABORT reason {0}")]
    InvalidReason(u8),
    #[error("chunk indices start at 1")]
    ZeroChunkIndex,
}

impl Packet {
    pub fn transfer_id(&self) -> u32 {
        match *self {
            Packet::Firq { transfer_id, .. }
            | Packet::Firp { transfer_id, .. }
            | Packet::Drq { transfer_id, .. }
            | Packet::Drp { transfer_id, .. }
            | Packet::Abort { transfer_id, .. } => transfer_id,
        }
    }

    pub fn packet_type(&self) -> PacketType {
        match self {
            Packet::Firq { .. } => PacketType::Firq,
            Packet::Firp { .. } => PacketType::Firp,
            Packet::Drq { .. } => PacketType::Drq,
            Packet::Drp { .. } => PacketType::Drp,
            Packet::Abort { .. } => PacketType::Abort,
        }
    }

    /// Chunk index for DRQ/DRP, `None` otherwise.
    pub fn chunk_index(&self) -> Option<u32> {
        match *self {
            Packet::Drq { chunk_index, .. } | Packet::Drp { chunk_index, .. } => Some(chunk_index),
            _ => None,
        }
    }

    /// Size of the encoded datagram, without encoding it.
    pub fn encoded_len(&self) -> usize {
        match self {
            Packet::Firq { file_name, .. } => FIRQ_FIXED + file_name.len(),
            Packet::Firp { .. } => FIRP_LEN,
            Packet::Drq { .. } => DRQ_LEN,
            Packet::Drp { data, .. } => DRP_OVERHEAD + data.len(),
            Packet::Abort { .. } => ABORT_LEN,
        }
    }

    fn validate(&self) -> Result<(), EncodeError> {
        match self {
            Packet::Firq { file_name, .. } if file_name.len() > MAX_NAME_LEN => {
                Err(EncodeError::NameTooLong(file_name.len()))
            }
            Packet::Drp { data, .. } if data.len() > MAX_CHUNK_SIZE as usize => {
                Err(EncodeError::DataTooLong(data.len()))
            }
            Packet::Drq { chunk_index: 0, .. } | Packet::Drp { chunk_index: 0, .. } => {
                Err(EncodeError::ZeroChunkIndex)
            }
            _ => Ok(()),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, EncodeError> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out)?;
        Ok(out)
    }

    /// Appends the encoding to `out`. Nothing is written on error.
    pub fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), EncodeError> {
        self.validate()?;
        out.reserve(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.packet_type() as u8);
        out.extend_from_slice(&self.transfer_id().to_be_bytes());
        match self {
            Packet::Firq {
                requested_chunk_size,
                file_name,
                ..
            } => {
                out.extend_from_slice(&requested_chunk_size.to_be_bytes());
                out.extend_from_slice(&(file_name.len() as u16).to_be_bytes());
                out.extend_from_slice(file_name.as_bytes());
            }
            Packet::Firp {
                status,
                file_size,
                file_crc32,
                ..
            } => {
                out.push(*status as u8);
                out.extend_from_slice(&file_size.to_be_bytes());
                out.extend_from_slice(&file_crc32.to_be_bytes());
            }
            Packet::Drq { chunk_index, .. } => {
                out.extend_from_slice(&chunk_index.to_be_bytes());
            }
            Packet::Drp {
                chunk_index, data, ..
            } => {
                out.extend_from_slice(&chunk_index.to_be_bytes());
                out.extend_from_slice(&(data.len() as u32).to_be_bytes());
                out.extend_from_slice(data);
            }
            Packet::Abort { reason, .. } => out.push(*reason as u8),
        }
        Ok(())
    }

    /// Decodes exactly one packet; the datagram must contain nothing else.
    pub fn decode(buf: &[u8]) -> Result<Packet, DecodeError> {
        let mut r = Reader { buf, pos: 0 };
        let magic = [r.u8()?, r.u8()?];
        if magic != MAGIC {
            return Err(DecodeError::BadMagic(magic));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(DecodeError::UnsupportedVersion(version));
        }
        let tag = r.u8()?;
        let kind = PacketType::from_u8(tag).ok_or(DecodeError::UnknownType(tag))?;
        let transfer_id = r.u32()?;

        let packet = match kind {
            PacketType::Firq => {
                let requested_chunk_size = r.u32()?;
                let name_len = r.u16()? as usize;
                r.exact_remaining(name_len)?;
                if name_len > MAX_NAME_LEN {
                    return Err(DecodeError::NameTooLong(name_len));
                }
                let file_name = std::str::from_utf8(r.take(name_len)?)
                    .map_err(|_| DecodeError::InvalidUtf8)?
                    .to_owned();
                Packet::Firq {
                    transfer_id,
                    requested_chunk_size,
                    file_name,
                }
            }
            PacketType::Firp => {
                let status = match r.u8()? {
                    0 => FirpStatus::Ok,
                    1 => FirpStatus::NotFound,
                    other => return Err(DecodeError::InvalidStatus(other)),
                };
                Packet::Firp {
                    transfer_id,
                    status,
                    file_size: r.u64()?,
                    file_crc32: r.u32()?,
                }
            }
            PacketType::Drq => Packet::Drq {
                transfer_id,
                chunk_index: nonzero_index(r.u32()?)?,
            },
            PacketType::Drp => {
                let chunk_index = nonzero_index(r.u32()?)?;
                let data_len = r.u32()? as usize;
                r.exact_remaining(data_len)?;
                if data_len > MAX_CHUNK_SIZE as usize {
                    return Err(DecodeError::DataTooLong(data_len));
                }
                Packet::Drp {
                    transfer_id,
                    chunk_index,
                    data: Bytes::copy_from_slice(r.take(data_len)?),
                }
            }
            PacketType::Abort => {
                let reason = match r.u8()? {
                    1 => AbortReason::Refused,
                    2 => AbortReason::UserCancel,
                    other => return Err(DecodeError::InvalidReason(other)),
                };
                Packet::Abort {
                    transfer_id,
                    reason,
                }
            }
        };

        match r.remaining() {
            0 => Ok(packet),
            extra => Err(DecodeError::TrailingBytes(extra)),
        }
    }
}

fn nonzero_index(index: u32) -> Result<u32, DecodeError> {
    if index == 0 {
        Err(DecodeError::ZeroChunkIndex)
    } else {
        Ok(index)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated {
                needed: self.pos + n,
                actual: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// A length-prefixed tail must account for every remaining byte.
    fn exact_remaining(&self, declared: usize) -> Result<(), DecodeError> {
        if self.remaining() != declared {
            return Err(DecodeError::LengthMismatch {
                declared,
                actual: self.remaining(),
            });
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex(s: &str) -> Vec<u8> {
        s.split_whitespace()
            .map(|b| u8::from_str_radix(b, 16).unwrap())
            .collect()
    }

    #[test]
    fn firq_layout() {
        let p = Packet::Firq {
            transfer_id: 7,
            requested_chunk_size: 25_600,
            file_name: "a.bin".into(),
        };
        let expected = hex("56 44 01 01 00 00 00 07 00 00 64 00 00 05 61 2E 62 69 6E");
        assert_eq!(p.encode().unwrap(), expected);
        assert_eq!(p.encoded_len(), expected.len());
        assert_eq!(Packet::decode(&expected).unwrap(), p);
    }

    #[test]
    fn drq_layout() {
        let p = Packet::Drq {
            transfer_id: 7,
            chunk_index: 1,
        };
        assert_eq!(
            p.encode().unwrap(),
            hex("56 44 01 03 00 00 00 07 00 00 00 01")
        );
    }

    #[test]
    fn empty_drp_is_valid() {
        let p = Packet::Drp {
            transfer_id: 1,
            chunk_index: 1,
            data: Bytes::new(),
        };
        let wire = p.encode().unwrap();
        assert_eq!(wire.len(), DRP_OVERHEAD);
        assert_eq!(&wire[12..16], &[0, 0, 0, 0]);
        assert_eq!(Packet::decode(&wire).unwrap(), p);
    }

    #[test]
    fn firp_and_abort_layout() {
        let p = Packet::Firp {
            transfer_id: 0x0102_0304,
            status: FirpStatus::NotFound,
            file_size: 1_000_000,
            file_crc32: 0xDEAD_BEEF,
        };
        assert_eq!(
            p.encode().unwrap(),
            hex("56 44 01 02 01 02 03 04 01 00 00 00 00 00 0F 42 40 DE AD BE EF")
        );
        let a = Packet::Abort {
            transfer_id: 9,
            reason: AbortReason::Refused,
        };
        assert_eq!(a.encode().unwrap(), hex("56 44 01 05 00 00 00 09 01"));
    }

    #[test]
    fn encode_rejects_oversize_fields() {
        let p = Packet::Firq {
            transfer_id: 1,
            requested_chunk_size: 1,
            file_name: "x".repeat(MAX_NAME_LEN + 1),
        };
        assert_eq!(p.encode(), Err(EncodeError::NameTooLong(MAX_NAME_LEN + 1)));
        let p = Packet::Drp {
            transfer_id: 1,
            chunk_index: 1,
            data: Bytes::from(vec![0; MAX_CHUNK_SIZE as usize + 1]),
        };
        assert!(matches!(p.encode(), Err(EncodeError::DataTooLong(_))));

        let mut out = vec![0xAA];
        assert!(p.encode_into(&mut out).is_err());
        assert_eq!(out, vec![0xAA]);
    }

    #[test]
    fn largest_drp_fits_a_datagram() {
        let p = Packet::Drp {
            transfer_id: 1,
            chunk_index: 1,
            data: Bytes::from(vec![7; MAX_CHUNK_SIZE as usize]),
        };
        assert!(p.encode().unwrap().len() <= MAX_DATAGRAM);
    }

    #[test]
    fn malformed_inputs_map_to_distinct_errors() {
        let drq = hex("56 44 01 03 00 00 00 07 00 00 00 01");

        assert_eq!(
            Packet::decode(&hex("00 00 01 03 00 00 00 07 00 00 00 01")),
            Err(DecodeError::BadMagic([0, 0]))
        );
        let mut v = drq.clone();
        v[2] = 2;
        assert_eq!(Packet::decode(&v), Err(DecodeError::UnsupportedVersion(2)));
        let mut v = drq.clone();
        v[3] = 9;
        assert_eq!(Packet::decode(&v), Err(DecodeError::UnknownType(9)));
        assert!(matches!(
            Packet::decode(&drq[..10]),
            Err(DecodeError::Truncated {
                needed: 12,
                actual: 10
            })
        ));
        assert!(matches!(
            Packet::decode(&[]),
            Err(DecodeError::Truncated { .. })
        ));
        let mut v = drq.clone();
        v.push(0);
        assert_eq!(Packet::decode(&v), Err(DecodeError::TrailingBytes(1)));
        let mut v = drq.clone();
        v[11] = 0;
        assert_eq!(Packet::decode(&v), Err(DecodeError::ZeroChunkIndex));

        // FIRQ whose name_len disagrees with the datagram
        let firq = hex("56 44 01 01 00 00 00 07 00 00 64 00 00 06 61 2E 62 69 6E");
        assert_eq!(
            Packet::decode(&firq),
            Err(DecodeError::LengthMismatch {
                declared: 6,
                actual: 5
            })
        );
        let bad_utf8 = hex("56 44 01 01 00 00 00 07 00 00 64 00 00 02 C3 28");
        assert_eq!(Packet::decode(&bad_utf8), Err(DecodeError::InvalidUtf8));

        let firp = hex("56 44 01 02 00 00 00 01 07 00 00 00 00 00 00 00 00 00 00 00 00");
        assert_eq!(Packet::decode(&firp), Err(DecodeError::InvalidStatus(7)));
        let abort = hex("56 44 01 05 00 00 00 09 03");
        assert_eq!(Packet::decode(&abort), Err(DecodeError::InvalidReason(3)));

        let drp = hex("56 44 01 04 00 00 00 01 00 00 00 01 00 00 00 03 AA BB");
        assert_eq!(
            Packet::decode(&drp),
            Err(DecodeError::LengthMismatch {
                declared: 3,
                actual: 2
            })
        );
    }

    #[test]
    fn oversize_length_fields_are_rejected() {
        let mut firq = hex("56 44 01 01 00 00 00 07 00 00 64 00 04 01");
        firq.extend([b'a'; 1025]);
        assert_eq!(Packet::decode(&firq), Err(DecodeError::NameTooLong(1025)));

        let mut drp = hex("56 44 01 04 00 00 00 01 00 00 00 01 00 00 FD E9");
        drp.extend(vec![0u8; 65_001]);
        assert_eq!(Packet::decode(&drp), Err(DecodeError::DataTooLong(65_001)));
    }
}
