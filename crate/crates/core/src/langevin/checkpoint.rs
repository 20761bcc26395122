//! Binary checkpoint format, little-endian:
//!
//! ```text
//! magic   [u8; 4] = "FDYN"
//! version u32     = 1
//! n       u32
//! m       u32
//! time    f64
//! seed    u64
//! stream  u64     (noise generator word position)
//! data    m * n² complex entries, (re: f64, im: f64), row-major per matrix
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;

use crate::{C64, CMat};

use super::{Ensemble, LangevinError};

const MAGIC: &[u8; 4] = b"FDYN";
const VERSION: u32 = 1;

pub fn write_checkpoint(path: &Path, ens: &Ensemble) -> Result<(), LangevinError> {
    let (n, m) = ens.dims();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&ens.time().to_le_bytes())?;
    w.write_all(&ens.seed().to_le_bytes())?;
    w.write_all(&ens.stream_position().to_le_bytes())?;
    for mat in ens.matrices() {
        for row in 0..n {
            for col in 0..n {
                let v = mat[(row, col)];
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Ensemble, LangevinError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LangevinError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(LangevinError::Checkpoint(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let m = read_u32(&mut r)? as usize;
    let time = read_f64(&mut r)?;
    let seed = read_u64(&mut r)?;
    let stream = read_u64(&mut r)?;
    let mut mats = Vec::with_capacity(m);
    for _ in 0..m {
        let mut mat: CMat = Mat::zeros(n, n);
        for row in 0..n {
            for col in 0..n {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                mat[(row, col)] = C64::new(re, im);
            }
        }
        mats.push(mat);
    }
    Ok(Ensemble::restore(mats, time, seed, stream))
}

fn read_u32(r: &mut impl Read) -> Result<u32, LangevinError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, LangevinError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, LangevinError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
