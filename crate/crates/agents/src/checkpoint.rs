//! Binary layout: the 8-byte magic `JRNMLP01`, the layer count `L + 1` as
//! u64, `L + 1` layer sizes as u64, then for each layer its weights
//! (`out x in`, row-major) followed by its biases, all f64. Every number is
//! little-endian.

use std::io::{self, Read, Write};

use crate::mlp::Mlp;

pub const MAGIC: &[u8; 8] = b"JRNMLP01";

pub fn write_mlp<W: Write>(net: &Mlp, mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(net.sizes.len() as u64).to_le_bytes())?;
    for &s in &net.sizes {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    for x in net.to_flat() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_mlp<R: Read>(mut r: R) -> io::Result<Mlp> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(invalid("not an MLP checkpoint"));
    }
    let n = read_u64(&mut r)?;
    if !(2..=64).contains(&n) {
        return Err(invalid(format!("implausible layer count {n}")));
    }
    let sizes = (0..n)
        .map(|_| read_u64(&mut r).map(|s| s as usize))
        .collect::<io::Result<Vec<_>>>()?;
    let mut net = Mlp::zeros(&sizes).map_err(|e| invalid(e.to_string()))?;
    let flat = (0..net.num_params())
        .map(|_| read_u64(&mut r).map(f64::from_bits))
        .collect::<io::Result<Vec<_>>>()?;
    net.set_flat(&flat);
    Ok(net)
}

/// `layer,kind,row,col,value` rows for inspection.
pub fn write_mlp_csv<W: Write>(net: &Mlp, mut w: W) -> io::Result<()> {
    writeln!(w, "layer,kind,row,col,value")?;
    for (l, layer) in net.layers.iter().enumerate() {
        for ((r, c), v) in layer.w.indexed_iter() {
            writeln!(w, "{l},w,{r},{c},{v:e}")?;
        }
        for (r, v) in layer.b.iter().enumerate() {
            writeln!(w, "{l},b,{r},0,{v:e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip() {
        let net = Mlp::random(&[3, 4, 2], 1.0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut buf = Vec::new();
        write_mlp(&net, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 * 4 + 8 * net.num_params());
        assert_eq!(read_mlp(&buf[..]).unwrap(), net);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_mlp(&b"NOTMAGIC........"[..]).is_err());
        let net = Mlp::zeros(&[1, 1]).unwrap();
        let mut buf = Vec::new();
        write_mlp(&net, &mut buf).unwrap();
        buf.pop();
        assert!(read_mlp(&buf[..]).is_err());
    }

    #[test]
    fn csv_has_one_row_per_parameter() {
        let net = Mlp::zeros(&[2, 3, 1]).unwrap();
        let mut buf = Vec::new();
        write_mlp_csv(&net, &mut buf).unwrap();
        let lines = String::from_utf8(buf).unwrap().lines().count();
        assert_eq!(lines, 1 + net.num_params());
    }
}
