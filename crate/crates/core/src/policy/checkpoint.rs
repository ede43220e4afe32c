//! Versioned binary checkpoints: all parameter tensors, optimizer moments,
//! the training RNG state and the completed-block counter, so `train
//! --resume` continues bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use super::{Adam, PolicyParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MPCKPT01";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub adam: Adam,
    pub rng_seed: [u8; 32],
    pub rng_word_pos: u128,
    pub blocks_done: u32,
}

fn write_tensors(f: &mut impl Write, p: &PolicyParams) -> Result<()> {
    for t in p.tensors() {
        f.write_all(&(t.len() as u64).to_le_bytes())?;
        for &v in t.iter() {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_tensors(f: &mut impl Read, d_e: usize, d_h: usize) -> Result<PolicyParams> {
    let mut p = PolicyParams::zeros(d_e, d_h);
    for t in p.tensors_mut() {
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        if len != t.len() {
            return Err(Error::Data(format!(
                "checkpoint tensor length {} does not match shape {}",
                len,
                t.len()
            )));
        }
        for v in t.iter_mut() {
            f.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
    }
    Ok(p)
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    f.write_all(&(ck.params.d_e as u32).to_le_bytes())?;
    f.write_all(&(ck.params.d_h as u32).to_le_bytes())?;
    f.write_all(&ck.adam.alpha.to_le_bytes())?;
    f.write_all(&ck.adam.t.to_le_bytes())?;
    f.write_all(&ck.blocks_done.to_le_bytes())?;
    f.write_all(&ck.rng_seed)?;
    f.write_all(&ck.rng_word_pos.to_le_bytes())?;
    write_tensors(&mut f, &ck.params)?;
    write_tensors(&mut f, &ck.adam.m)?;
    write_tensors(&mut f, &ck.adam.v)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data(format!(
            "{} is not a checkpoint file (bad magic)",
            path.display()
        )));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    f.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Data(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    f.read_exact(&mut b4)?;
    let d_e = u32::from_le_bytes(b4) as usize;
    f.read_exact(&mut b4)?;
    let d_h = u32::from_le_bytes(b4) as usize;
    f.read_exact(&mut b8)?;
    let alpha = f64::from_le_bytes(b8);
    f.read_exact(&mut b8)?;
    let t = u64::from_le_bytes(b8);
    f.read_exact(&mut b4)?;
    let blocks_done = u32::from_le_bytes(b4);
    let mut rng_seed = [0u8; 32];
    f.read_exact(&mut rng_seed)?;
    let mut b16 = [0u8; 16];
    f.read_exact(&mut b16)?;
    let rng_word_pos = u128::from_le_bytes(b16);
    let params = read_tensors(&mut f, d_e, d_h)?;
    let m = read_tensors(&mut f, d_e, d_h)?;
    let v = read_tensors(&mut f, d_e, d_h)?;
    Ok(Checkpoint {
        params,
        adam: Adam::from_state(alpha, t, m, v),
        rng_seed,
        rng_word_pos,
        blocks_done,
    })
}
