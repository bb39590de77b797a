use std::io::Write;

use super::IoError;
use crate::bev::field::CHANNELS;
use crate::bev::MotionField;
use crate::geometry::GridSpec;

pub const FIELD_MAGIC: &[u8; 4] = b"CCMF";
pub const FIELD_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 5 * 8 + 5 * 4;

/// Binary field layout, little endian: magic, u16 version, u16 reserved,
/// f64 x_min x_max y_min y_max cell, u32 nx ny steps channels ego_id, then
/// `steps * channels * nx * ny` f32 values.
pub fn write_field<W: Write>(field: &MotionField, mut w: W) -> Result<(), IoError> {
    let g = &field.grid;
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FIELD_VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    for v in [g.x_min, g.x_max, g.y_min, g.y_max, g.cell] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [g.nx(), g.ny(), field.steps(), CHANNELS] {
        let v = u32::try_from(v).map_err(|_| IoError::Format("dimension exceeds u32".into()))?;
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&field.ego_id.to_le_bytes())?;
    for v in field.raw() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn field_to_bytes(field: &MotionField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + field.raw().len() * 4);
    write_field(field, &mut out).expect("writing to memory");
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], IoError> {
        let end = self.at.checked_add(N).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| IoError::Format(format!("truncated at byte {}", self.at)))?;
        let out = self.buf[self.at..end].try_into().expect("length checked");
        self.at = end;
        Ok(out)
    }
    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u16(&mut self) -> Result<u16, IoError> {
        Ok(u16::from_le_bytes(self.take()?))
    }
}

/// Decodes a binary field, validating the header against the payload.
pub fn decode_field(bytes: &[u8]) -> Result<MotionField, IoError> {
    let mut c = Cursor { buf: bytes, at: 0 };
    if &c.take::<4>()? != FIELD_MAGIC {
        return Err(IoError::Format("bad magic".into()));
    }
    let version = c.u16()?;
    if version != FIELD_VERSION {
        return Err(IoError::Format(format!("unsupported version {version}")));
    }
    let _reserved = c.u16()?;
    let (x_min, x_max, y_min, y_max, cell) = (c.f64()?, c.f64()?, c.f64()?, c.f64()?, c.f64()?);
    let grid = GridSpec::new(x_min, x_max, y_min, y_max, cell).map_err(|e| IoError::Format(e.to_string()))?;
    let (nx, ny, steps, channels, ego) = (c.u32()?, c.u32()?, c.u32()?, c.u32()?, c.u32()?);
    if nx as usize != grid.nx() || ny as usize != grid.ny() {
        return Err(IoError::Format(format!("grid {nx}x{ny} does not match extents ({}x{})", grid.nx(), grid.ny())));
    }
    if channels as usize != CHANNELS {
        return Err(IoError::Format(format!("expected {CHANNELS} channels, found {channels}")));
    }
    let count = (steps as usize)
        .checked_mul(CHANNELS)
        .and_then(|v| v.checked_mul(grid.len()))
        .ok_or_else(|| IoError::Format("payload size overflows".into()))?;
    let payload = &bytes[c.at..];
    if Some(payload.len()) != count.checked_mul(4) {
        return Err(IoError::Format(format!("payload is {} bytes, expected {} values", payload.len(), count)));
    }
    let data: Vec<f32> = payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4"))).collect();
    let field = MotionField::from_raw(grid, ego, steps as usize, data).map_err(|e| IoError::Format(e.to_string()))?;
    field.validate().map_err(|e| IoError::Format(e.to_string()))?;
    Ok(field)
}
