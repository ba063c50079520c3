//! The "MSCT" binary tensor file format.
//!
//! Layout: magic bytes `MSCT`, format version u32, then H, W, D as u32
//! little-endian, then `H*W*D` IEEE-754 32-bit floats little-endian,
//! row-major, channel-last.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

const MAGIC: &[u8; 4] = b"MSCT";
const VERSION: u32 = 1;

pub fn write_tensor(path: &Path, map: &FeatureMap) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(map.height as u32).to_le_bytes())?;
    w.write_all(&(map.width as u32).to_le_bytes())?;
    w.write_all(&(map.channels as u32).to_le_bytes())?;
    for v in &map.values {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<FeatureMap> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadTensorFile(format!(
            "bad magic {:?} in {}",
            magic,
            path.display()
        )));
    }
    let mut u = [0u8; 4];
    r.read_exact(&mut u)?;
    let version = u32::from_le_bytes(u);
    if version != VERSION {
        return Err(Error::BadTensorFile(format!("unsupported version {version}")));
    }
    r.read_exact(&mut u)?;
    let h = u32::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let w = u32::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let d = u32::from_le_bytes(u) as usize;
    if h == 0 || w == 0 || d == 0 {
        return Err(Error::BadTensorFile("zero dimension".into()));
    }
    let mut values = Vec::with_capacity(h * w * d);
    let mut f = [0u8; 4];
    for _ in 0..h * w * d {
        r.read_exact(&mut f)?;
        values.push(f32::from_le_bytes(f) as f64);
    }
    FeatureMap::from_values(h, w, d, values)
}
