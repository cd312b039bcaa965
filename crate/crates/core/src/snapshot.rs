//! Binary container for full-field snapshots.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "PNLS1"  u32 n_edges  u32 n_nodes  u32 n_snapshots  f64 h  f64 X
//! per snapshot: f64 t, then per edge n_nodes pairs (f64 re, f64 im)
//! ```

use crate::domain::{DiscreteDomain, Field};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{Read, Write};

const MAGIC: &[u8; 5] = b"PNLS1";

pub fn write_snapshots<W: Write>(mut w: W, dom: &DiscreteDomain, snaps: &[(f64, Field)]) -> Result<()> {
    let count = |n: usize| u32::try_from(n).map_err(|_| Error::Format(format!("count {n} overflows u32")));
    w.write_all(MAGIC)?;
    w.write_all(&count(dom.n_edges)?.to_le_bytes())?;
    w.write_all(&count(dom.nodes_per_edge())?.to_le_bytes())?;
    w.write_all(&count(snaps.len())?.to_le_bytes())?;
    w.write_all(&dom.h.to_le_bytes())?;
    w.write_all(&dom.x_max.to_le_bytes())?;
    for (t, f) in snaps {
        if f.domain() != dom {
            return Err(Error::DomainMismatch);
        }
        w.write_all(&t.to_le_bytes())?;
        for z in f.edges().iter().flatten() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated container".into())
    } else {
        e.into()
    }
}

/// Reads a container back. The domain kind is not stored; two-edge
/// containers come back as lines.
pub fn read_snapshots<R: Read>(mut r: R) -> Result<(DiscreteDomain, Vec<(f64, Field)>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let n_edges = read_u32(&mut r)? as usize;
    let n_nodes = read_u32(&mut r)? as usize;
    let n_snap = read_u32(&mut r)? as usize;
    let h = read_f64(&mut r)?;
    let x_max = read_f64(&mut r)?;
    let dom = if n_edges == 2 { DiscreteDomain::line(h, x_max) } else { DiscreteDomain::star(n_edges, h, x_max) }
        .map_err(|e| Error::Format(format!("header describes no valid domain: {e}")))?;
    if dom.nodes_per_edge() != n_nodes {
        return Err(Error::Format(format!(
            "header has {n_nodes} nodes per edge, h and X imply {}",
            dom.nodes_per_edge()
        )));
    }
    let mut out = Vec::with_capacity(n_snap.min(1 << 16));
    for _ in 0..n_snap {
        let t = read_f64(&mut r)?;
        let mut values = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let mut e = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                e.push(Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?));
            }
            values.push(e);
        }
        out.push((t, Field::from_values(&dom, values)?));
    }
    Ok((dom, out))
}
