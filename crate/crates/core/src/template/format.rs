//! `FTT1` template files (little-endian).
//!
//! ```text
//! magic "FTT1"      4 bytes
//! version           u8 (1)
//! kind              u8 (0 latent, 1 reference)
//! variant           u8 (0 raw, 1 e1, 2 e2, 3 t)
//! stride            u16
//! minutiae count n  u32
//! descriptor_len    u16
//! n x (u16 x, u16 y, f32 theta, u32 dual_group)
//! n * descriptor_len f32, row-major
//! ```
//!
//! A template without minutiae is exactly the 15-byte header.

use crate::descriptor::DESCRIPTOR_LENGTHS;
use crate::error::{Error, FormatError, Result};

use super::{TemplateKind, TextureTemplate, Variant, VirtualMinutia};

pub const MAGIC: [u8; 4] = *b"FTT1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 15;
const RECORD_LEN: usize = 12;

fn kind_code(kind: TemplateKind) -> u8 {
    match kind {
        TemplateKind::Latent => 0,
        TemplateKind::Reference => 1,
    }
}

fn variant_code(v: Variant) -> u8 {
    match v {
        Variant::Raw => 0,
        Variant::E1 => 1,
        Variant::E2 => 2,
        Variant::T => 3,
    }
}

/// Encodes a template. Coordinates must be integral and fit in `u16`, angles
/// must be exactly representable as `f32`; anything else would not survive the
/// round trip and is rejected.
pub fn serialize(t: &TextureTemplate) -> Result<Vec<u8>> {
    t.validate().map_err(FormatError::InvalidTemplate)?;
    if t.minutiae.len() > u32::MAX as usize {
        return Err(Error::InvalidParams("too many minutiae".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + t.len() * (RECORD_LEN + 4 * t.descriptor_len));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(kind_code(t.kind));
    out.push(variant_code(t.variant));
    out.extend_from_slice(&t.stride.to_le_bytes());
    out.extend_from_slice(&(t.minutiae.len() as u32).to_le_bytes());
    out.extend_from_slice(&(t.descriptor_len as u16).to_le_bytes());
    for m in &t.minutiae {
        let x = to_u16(m.x)?;
        let y = to_u16(m.y)?;
        let theta = m.theta as f32;
        if theta as f64 != m.theta {
            return Err(FormatError::InvalidTemplate(format!("theta {} not representable in f32", m.theta)).into());
        }
        out.extend_from_slice(&x.to_le_bytes());
        out.extend_from_slice(&y.to_le_bytes());
        out.extend_from_slice(&theta.to_le_bytes());
        out.extend_from_slice(&m.dual_group.to_le_bytes());
    }
    for v in &t.descriptors {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn to_u16(v: f64) -> Result<u16> {
    if v.fract() == 0.0 && (0.0..=u16::MAX as f64).contains(&v) {
        Ok(v as u16)
    } else {
        Err(FormatError::InvalidTemplate(format!("coordinate {v} is not a u16 pixel index")).into())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(FormatError::Truncated { needed: end, available: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<TextureTemplate, FormatError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(FormatError::BadMagic { expected: MAGIC, found: magic });
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let kind = match r.u8()? {
        0 => TemplateKind::Latent,
        1 => TemplateKind::Reference,
        k => return Err(FormatError::BadKind(k)),
    };
    let variant = match r.u8()? {
        0 => Variant::Raw,
        1 => Variant::E1,
        2 => Variant::E2,
        3 => Variant::T,
        v => return Err(FormatError::BadVariant(v)),
    };
    let stride = r.u16()?;
    let n = r.u32()? as usize;
    let descriptor_len = r.u16()?;
    if !DESCRIPTOR_LENGTHS.contains(&(descriptor_len as usize)) {
        return Err(FormatError::BadDescriptorLen(descriptor_len));
    }
    let descriptor_len = descriptor_len as usize;
    let needed = HEADER_LEN + n * (RECORD_LEN + 4 * descriptor_len);
    if bytes.len() < needed {
        return Err(FormatError::Truncated { needed, available: bytes.len() });
    }
    if bytes.len() > needed {
        return Err(FormatError::TrailingBytes(bytes.len() - needed));
    }
    let mut minutiae = Vec::with_capacity(n);
    for _ in 0..n {
        let x = r.u16()? as f64;
        let y = r.u16()? as f64;
        let theta = r.f32()? as f64;
        let dual_group = r.u32()?;
        minutiae.push(VirtualMinutia { x, y, theta, dual_group });
    }
    let mut descriptors = Vec::with_capacity(n * descriptor_len);
    for _ in 0..n * descriptor_len {
        descriptors.push(r.f32()?);
    }
    let t = TextureTemplate { kind, variant, stride, minutiae, descriptors, descriptor_len };
    t.validate().map_err(FormatError::InvalidTemplate)?;
    Ok(t)
}
