//! Typed protocol messages and their canonical binary layout.
//!
//! Fields are laid out in declaration order: 32-octet values raw, points as
//! a flag octet plus fixed-width big-endian coordinates, timestamps as
//! 8-octet big-endian milliseconds, identity strings as a 2-octet length
//! followed by UTF-8.

use std::fmt::Write as _;
use std::ops::Range;

use crate::bytes::Bytes32;
use crate::curve::{CurveParams, Point};
use crate::error::{Error, Result};

/// Milliseconds since an arbitrary epoch.
pub type Timestamp = u64;

/// `M_A1`: user → server, public channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsgA1 {
    pub s1: Bytes32,
    pub id_u1: Bytes32,
    pub u_point: Point,
    pub t1: Timestamp,
}

/// `M_A2`: server → user, public channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsgA2 {
    pub id_s1: Bytes32,
    pub s2: Bytes32,
    pub s_point: Point,
    pub t3: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegRequest {
    pub id: String,
    pub r1: Bytes32,
    pub t_rg1: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegResponse {
    pub r3: Bytes32,
    pub t: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateRequest {
    pub id: String,
    pub r1_star: Bytes32,
    pub t_rg1: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateResponse {
    pub r3_star: Bytes32,
    pub t: Timestamp,
}

/// Shared encoding for every message type.
pub trait WireMessage: Sized {
    /// Short tag used in transcripts.
    const KIND: &'static str;

    /// Named fields in wire order, already encoded.
    fn fields(&self, curve: &CurveParams) -> Vec<(&'static str, Vec<u8>)>;

    fn from_wire(bytes: &[u8], curve: &CurveParams) -> Result<Self>;

    fn to_wire(&self, curve: &CurveParams) -> Vec<u8> {
        self.fields(curve)
            .into_iter()
            .flat_map(|(_, v)| v)
            .collect()
    }

    /// One `name: hex` line per field.
    fn to_text(&self, curve: &CurveParams) -> String {
        let mut out = String::new();
        for (name, value) in self.fields(curve) {
            let _ = writeln!(out, "{name}: {}", hex::encode(value));
        }
        out
    }

    /// Byte range of each field in the wire form.
    fn layout(&self, curve: &CurveParams) -> Vec<(&'static str, Range<usize>)> {
        let mut at = 0;
        self.fields(curve)
            .into_iter()
            .map(|(name, v)| {
                let r = at..at + v.len();
                at = r.end;
                (name, r)
            })
            .collect()
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    kind: &'static str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Malformed(format!("{}: truncated", self.kind)));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn bytes32(&mut self) -> Result<Bytes32> {
        Bytes32::from_slice(self.take(32)?)
    }

    fn timestamp(&mut self) -> Result<Timestamp> {
        Ok(u64::from_be_bytes(
            self.take(8)?.try_into().expect("8 octets"),
        ))
    }

    fn point(&mut self, curve: &CurveParams) -> Result<Point> {
        curve.point_from_wire(self.take(curve.point_wire_len())?)
    }

    fn id(&mut self) -> Result<String> {
        let len = u16::from_be_bytes(self.take(2)?.try_into().expect("2 octets")) as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Malformed(format!("{}: id is not UTF-8", self.kind)))
    }

    fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Malformed(format!("{}: trailing bytes", self.kind)))
        }
    }
}

fn id_field(id: &str) -> Vec<u8> {
    let len = u16::try_from(id.len()).expect("identity longer than 65535 octets");
    let mut v = len.to_be_bytes().to_vec();
    v.extend_from_slice(id.as_bytes());
    v
}

impl WireMessage for MsgA1 {
    const KIND: &'static str = "M_A1";

    fn fields(&self, curve: &CurveParams) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            ("S1", self.s1.0.to_vec()),
            ("ID_U1", self.id_u1.0.to_vec()),
            ("U_point", curve.point_to_wire(&self.u_point)),
            ("t1", self.t1.to_be_bytes().to_vec()),
        ]
    }

    fn from_wire(bytes: &[u8], curve: &CurveParams) -> Result<Self> {
        let mut r = Reader {
            buf: bytes,
            kind: Self::KIND,
        };
        if bytes.len() != 64 + curve.point_wire_len() + 8 {
            return Err(Error::Malformed("M_A1: wrong length".into()));
        }
        let msg = MsgA1 {
            s1: r.bytes32()?,
            id_u1: r.bytes32()?,
            u_point: r.point(curve)?,
            t1: r.timestamp()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

impl WireMessage for MsgA2 {
    const KIND: &'static str = "M_A2";

    fn fields(&self, curve: &CurveParams) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            ("ID_S1", self.id_s1.0.to_vec()),
            ("S2", self.s2.0.to_vec()),
            ("S_point", curve.point_to_wire(&self.s_point)),
            ("t3", self.t3.to_be_bytes().to_vec()),
        ]
    }

    fn from_wire(bytes: &[u8], curve: &CurveParams) -> Result<Self> {
        if bytes.len() != 64 + curve.point_wire_len() + 8 {
            return Err(Error::Malformed("M_A2: wrong length".into()));
        }
        let mut r = Reader {
            buf: bytes,
            kind: Self::KIND,
        };
        let msg = MsgA2 {
            id_s1: r.bytes32()?,
            s2: r.bytes32()?,
            s_point: r.point(curve)?,
            t3: r.timestamp()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

impl WireMessage for RegRequest {
    const KIND: &'static str = "REG_REQ";

    fn fields(&self, _: &CurveParams) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            ("ID", id_field(&self.id)),
            ("R1", self.r1.0.to_vec()),
            ("t_RG1", self.t_rg1.to_be_bytes().to_vec()),
        ]
    }

    fn from_wire(bytes: &[u8], _: &CurveParams) -> Result<Self> {
        let mut r = Reader {
            buf: bytes,
            kind: Self::KIND,
        };
        let msg = RegRequest {
            id: r.id()?,
            r1: r.bytes32()?,
            t_rg1: r.timestamp()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

impl WireMessage for RegResponse {
    const KIND: &'static str = "REG_RESP";

    fn fields(&self, _: &CurveParams) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            ("R3", self.r3.0.to_vec()),
            ("t", self.t.to_be_bytes().to_vec()),
        ]
    }

    fn from_wire(bytes: &[u8], _: &CurveParams) -> Result<Self> {
        let mut r = Reader {
            buf: bytes,
            kind: Self::KIND,
        };
        let msg = RegResponse {
            r3: r.bytes32()?,
            t: r.timestamp()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

impl WireMessage for UpdateRequest {
    const KIND: &'static str = "UPD_REQ";

    fn fields(&self, _: &CurveParams) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            ("ID", id_field(&self.id)),
            ("R1_star", self.r1_star.0.to_vec()),
            ("t_RG1", self.t_rg1.to_be_bytes().to_vec()),
        ]
    }

    fn from_wire(bytes: &[u8], _: &CurveParams) -> Result<Self> {
        let mut r = Reader {
            buf: bytes,
            kind: Self::KIND,
        };
        let msg = UpdateRequest {
            id: r.id()?,
            r1_star: r.bytes32()?,
            t_rg1: r.timestamp()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

impl WireMessage for UpdateResponse {
    const KIND: &'static str = "UPD_RESP";

    fn fields(&self, _: &CurveParams) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            ("R3_star", self.r3_star.0.to_vec()),
            ("t", self.t.to_be_bytes().to_vec()),
        ]
    }

    fn from_wire(bytes: &[u8], _: &CurveParams) -> Result<Self> {
        let mut r = Reader {
            buf: bytes,
            kind: Self::KIND,
        };
        let msg = UpdateResponse {
            r3_star: r.bytes32()?,
            t: r.timestamp()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::profile;

    fn a1(curve: &CurveParams) -> MsgA1 {
        MsgA1 {
            s1: Bytes32([1; 32]),
            id_u1: Bytes32([2; 32]),
            u_point: curve.g.clone(),
            t1: 1_700_000_000_123,
        }
    }

    #[test]
    fn a1_layout_sizes() {
        let p256 = profile("p256").unwrap();
        let m = a1(&p256);
        assert_eq!(m.to_wire(&p256).len(), 32 + 32 + 65 + 8);
        let layout = m.layout(&p256);
        assert_eq!(layout[2], ("U_point", 64..129));
        assert_eq!(layout[3], ("t1", 129..137));
        let toy = profile("toy23").unwrap();
        assert_eq!(a1(&toy).to_wire(&toy).len(), 32 + 32 + 3 + 8);
    }

    #[test]
    fn decode_inverts_encode() {
        let c = profile("p256").unwrap();
        let m = a1(&c);
        assert_eq!(MsgA1::from_wire(&m.to_wire(&c), &c).unwrap(), m);
        let req = RegRequest {
            id: "meter-0042".into(),
            r1: Bytes32([9; 32]),
            t_rg1: 5,
        };
        let wire = req.to_wire(&c);
        assert_eq!(wire.len(), 2 + 10 + 32 + 8);
        assert_eq!(RegRequest::from_wire(&wire, &c).unwrap(), req);
    }

    #[test]
    fn decode_rejects_bad_input() {
        let c = profile("p256").unwrap();
        let wire = a1(&c).to_wire(&c);
        assert!(matches!(
            MsgA1::from_wire(&wire[..100], &c),
            Err(Error::Malformed(_))
        ));
        let mut off = wire.clone();
        off[70] ^= 0x10;
        assert_eq!(MsgA1::from_wire(&off, &c), Err(Error::InvalidPoint));
        let mut long = RegResponse {
            r3: Bytes32::ZERO,
            t: 1,
        }
        .to_wire(&c);
        long.push(0);
        assert!(RegResponse::from_wire(&long, &c).is_err());
    }

    #[test]
    fn text_form() {
        let c = profile("toy23").unwrap();
        let text = a1(&c).to_text(&c);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "U_point: 001103");
        assert!(lines[0].starts_with("S1: 0101"));
    }
}
