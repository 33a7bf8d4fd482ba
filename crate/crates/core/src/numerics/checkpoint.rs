//! Versioned little-endian container of named networks.
//!
//! Layout:
//!
//! ```text
//! magic    8 bytes  "IGENETS\0"
//! version  u32      1
//! count    u32      number of networks
//! per network:
//!   name     u32 length + utf-8 bytes
//!   hidden   u8 activation code
//!   output   u8 activation code
//!   sizes    u32 count + u64 per layer size
//!   params   u64 count + f64 bit patterns
//! ```

use std::path::Path;

use super::{Activation, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"IGENETS\0";
const VERSION: u32 = 1;

pub fn encode(nets: &[(&str, &Mlp)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    for (name, net) in nets {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(net.hidden_activation().code());
        out.push(net.output_activation().code());
        out.extend_from_slice(&(net.layer_sizes().len() as u32).to_le_bytes());
        for &size in net.layer_sizes() {
            out.extend_from_slice(&(size as u64).to_le_bytes());
        }
        out.extend_from_slice(&(net.param_count() as u64).to_le_bytes());
        for p in net.params() {
            out.extend_from_slice(&p.to_bits().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Parse(format!("checkpoint truncated at byte {}", self.pos)))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Mlp)>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Parse("not a network checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported checkpoint version {version}")));
    }
    let count = r.u32()?;
    let mut nets = Vec::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|e| Error::Parse(format!("network name: {e}")))?
            .to_string();
        let hidden = Activation::from_code(r.u8()?)
            .ok_or_else(|| Error::Parse(format!("{name}: unknown hidden activation")))?;
        let output = Activation::from_code(r.u8()?)
            .ok_or_else(|| Error::Parse(format!("{name}: unknown output activation")))?;
        let n_sizes = r.u32()? as usize;
        let sizes = (0..n_sizes)
            .map(|_| r.u64().map(|s| s as usize))
            .collect::<Result<Vec<_>>>()?;
        let n_params = r.u64()? as usize;
        if n_params > bytes.len() / 8 {
            return Err(Error::Parse(format!("{name}: implausible parameter count {n_params}")));
        }
        let params = (0..n_params)
            .map(|_| r.u64().map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        let net = Mlp::from_flat(&sizes, params, hidden, output)?;
        nets.push((name, net));
    }
    if r.pos != bytes.len() {
        return Err(Error::Parse("trailing bytes after checkpoint".into()));
    }
    Ok(nets)
}

pub fn save(path: &Path, nets: &[(&str, &Mlp)]) -> Result<()> {
    std::fs::write(path, encode(nets)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Vec<(String, Mlp)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Mlp::xavier(&[4, 64, 64, 2], Activation::Tanh, &mut rng).unwrap();
        let b = Mlp::xavier(&[3, 5, 1], Activation::Relu, &mut rng).unwrap();
        let bytes = encode(&[("policy", &a), ("value", &b)]);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].0, "policy");
        assert_eq!(back[0].1, a);
        assert_eq!(back[1].1, b);
        assert_eq!(back[0].1.checksum(), a.checksum());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let net = Mlp::zeros(&[2, 2], Activation::Tanh, Activation::Identity).unwrap();
        let bytes = encode(&[("n", &net)]);
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        assert!(decode(b"").is_err());
    }
}
