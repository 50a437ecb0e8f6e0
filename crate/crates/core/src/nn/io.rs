//! Binary checkpoint format:
//!
//! ```text
//! b"MLP1"
//! u32 LE        number of layer sizes
//! u32 LE * n    layer sizes, input first
//! u8            activation tag (1 = ReLU hidden layers, identity output)
//! u64 LE        parameter count
//! f64 LE * p    parameters; per layer the row-major weights then the biases
//! ```

use std::io::{Read, Write};

use super::Mlp;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MLP1";
const RELU_TAG: u8 = 1;

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

impl Mlp {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.sizes.len() as u32).to_le_bytes())?;
        for s in &self.sizes {
            w.write_all(&(*s as u32).to_le_bytes())?;
        }
        w.write_all(&[RELU_TAG])?;
        w.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad network magic".into()));
        }
        let n = read_u32(r)? as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::Format(format!("implausible layer count {n}")));
        }
        let sizes = (0..n)
            .map(|_| read_u32(r).map(|s| s as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        if tag[0] != RELU_TAG {
            return Err(Error::Format(format!("unknown activation tag {}", tag[0])));
        }
        let mut count = [0u8; 8];
        r.read_exact(&mut count)?;
        let count = u64::from_le_bytes(count) as usize;
        let expected = Mlp::zeros(&sizes)?.num_params();
        if count != expected {
            return Err(Error::Format(format!(
                "expected {expected} parameters, header says {count}"
            )));
        }
        let mut params = Vec::with_capacity(count);
        let mut b = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut b)?;
            params.push(f64::from_le_bytes(b));
        }
        Mlp::from_params(&sizes, params)
    }
}
