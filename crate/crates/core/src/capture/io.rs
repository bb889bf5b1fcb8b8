use std::io::{BufRead, Read, Write};

use super::{CorrespondenceMap, Tag};
use crate::geom::{Mask, MaskValue, Vec2};
use crate::{Error, Real, Result};

const CORR_MAGIC: &[u8; 4] = b"CORR";
const CORR_VERSION: u32 = 1;

/// Writes a correspondence map: little-endian header `CORR`, version, view,
/// width, height, monitor resolution, then per pixel a tag byte and the
/// monitor position as two `f64` (NaN when absent).
pub fn write_corr<T: Real>(map: &CorrespondenceMap<T>, w: &mut impl Write) -> Result<()> {
    w.write_all(CORR_MAGIC)?;
    for v in [CORR_VERSION, map.view, map.width, map.height, map.res[0], map.res[1]] {
        w.write_all(&v.to_le_bytes())?;
    }
    for (t, q) in map.tags.iter().zip(&map.q) {
        w.write_all(&[*t as u8])?;
        let (x, y) = q.map_or((f64::NAN, f64::NAN), |q| (q.x.as_f64(), q.y.as_f64()));
        w.write_all(&x.to_le_bytes())?;
        w.write_all(&y.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::format("CORR", "truncated header"))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_corr<T: Real>(r: &mut impl Read) -> Result<CorrespondenceMap<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::format("CORR", "truncated header"))?;
    if &magic != CORR_MAGIC {
        return Err(Error::format("CORR", "bad magic"));
    }
    let version = read_u32(r)?;
    if version != CORR_VERSION {
        return Err(Error::format("CORR", format!("unsupported version {version}")));
    }
    let view = read_u32(r)?;
    let width = read_u32(r)?;
    let height = read_u32(r)?;
    let res = [read_u32(r)?, read_u32(r)?];
    let n = width as usize * height as usize;
    let mut tags = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut rec = [0u8; 17];
    for k in 0..n {
        r.read_exact(&mut rec).map_err(|_| Error::format("CORR", format!("truncated at pixel {k}")))?;
        let tag = Tag::from_u8(rec[0]).ok_or_else(|| Error::format("CORR", format!("unknown tag {}", rec[0])))?;
        let x = f64::from_le_bytes(rec[1..9].try_into().expect("8 bytes"));
        let y = f64::from_le_bytes(rec[9..17].try_into().expect("8 bytes"));
        tags.push(tag);
        q.push((!x.is_nan() && !y.is_nan()).then(|| Vec2::new(T::lit(x), T::lit(y))));
    }
    let map = CorrespondenceMap { view, width, height, res, tags, q };
    map.validate().map_err(|e| Error::format("CORR", e.to_string()))?;
    Ok(map)
}

/// Writes a mask as binary PGM: 0 outside, 128 boundary, 255 inside.
pub fn write_pgm(mask: &Mask, w: &mut impl Write) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", mask.width, mask.height)?;
    let bytes: Vec<u8> = mask.values.iter().map(|v| v.to_gray()).collect();
    w.write_all(&bytes)?;
    Ok(())
}

fn pgm_token(r: &mut impl BufRead) -> Result<String> {
    let mut tok = String::new();
    loop {
        let buf = r.fill_buf()?;
        let Some(&c) = buf.first() else { break };
        r.consume(1);
        if c == b'#' && tok.is_empty() {
            let mut comment = Vec::new();
            r.read_until(b'\n', &mut comment)?;
        } else if c.is_ascii_whitespace() {
            if !tok.is_empty() {
                break;
            }
        } else {
            tok.push(c as char);
        }
    }
    if tok.is_empty() {
        return Err(Error::format("PGM", "truncated header"));
    }
    Ok(tok)
}

pub fn read_pgm(r: &mut impl BufRead) -> Result<Mask> {
    if pgm_token(r)? != "P5" {
        return Err(Error::format("PGM", "expected binary P5"));
    }
    let mut num = || -> Result<u32> { pgm_token(r)?.parse().map_err(|_| Error::format("PGM", "bad header number")) };
    let (width, height, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(Error::format("PGM", format!("unsupported maxval {maxval}")));
    }
    let mut bytes = vec![0u8; width as usize * height as usize];
    r.read_exact(&mut bytes).map_err(|_| Error::format("PGM", "truncated pixel data"))?;
    let values = bytes.into_iter().map(MaskValue::from_gray).collect::<Result<Vec<_>>>()?;
    Ok(Mask { width, height, values })
}
