//! Binary state snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes        | content                         |
//! |--------------|---------------------------------|
//! | 5            | magic `CHTX1`                   |
//! | 4            | `dim` as u32                    |
//! | 8 × dim      | cells per axis as u64           |
//! | 8 × dim      | box lengths as f64              |
//! | 8            | time `t` as f64                 |
//! | 16 × cells   | `u` then `v`, f64, row-major    |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Field, Grid, State};

pub const MAGIC: &[u8; 5] = b"CHTX1";

pub fn encode_snapshot(state: &State, grid: &Grid) -> Vec<u8> {
    let n = grid.len();
    let mut buf = Vec::with_capacity(5 + 4 + 16 * grid.dim() + 8 + 16 * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &c in grid.cells() {
        buf.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for &l in grid.lengths() {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    buf.extend_from_slice(&state.t.to_le_bytes());
    for x in state.u.iter().chain(state.v.iter()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let end = self.pos.checked_add(N)?;
        let out = self.bytes.get(self.pos..end)?.try_into().ok()?;
        self.pos = end;
        Some(out)
    }
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<(State, Grid)> {
    let truncated = || Error::format(path, "truncated header");
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::format(path, "not a CHTX1 snapshot"));
    }
    let mut rd = Reader { bytes, pos: MAGIC.len() };
    let dim = u32::from_le_bytes(rd.take().ok_or_else(truncated)?) as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::format(path, format!("invalid dimension {dim}")));
    }
    let mut cells = Vec::with_capacity(dim);
    for _ in 0..dim {
        cells.push(u64::from_le_bytes(rd.take().ok_or_else(truncated)?) as usize);
    }
    let mut lengths = Vec::with_capacity(dim);
    for _ in 0..dim {
        lengths.push(f64::from_le_bytes(rd.take().ok_or_else(truncated)?));
    }
    let t = f64::from_le_bytes(rd.take().ok_or_else(truncated)?);
    let grid = Grid::new(&cells, &lengths).map_err(|e| Error::format(path, e.to_string()))?;
    let n = grid.len();
    let payload = &bytes[rd.pos..];
    if payload.len() != 16 * n {
        return Err(Error::format(
            path,
            if payload.len() < 16 * n {
                format!("truncated payload ({} of {} bytes)", payload.len(), 16 * n)
            } else {
                format!("trailing bytes after payload ({} > {})", payload.len(), 16 * n)
            },
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (u, v) = values.split_at(n);
    Ok((
        State {
            u: Field::from_vec(u.to_vec()),
            v: Field::from_vec(v.to_vec()),
            t,
        },
        grid,
    ))
}

pub fn write_snapshot(state: &State, grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_snapshot(state, grid)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(State, Grid)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes, path)
}

/// Reads a snapshot and checks it against an expected grid.
pub fn read_snapshot_for(path: impl AsRef<Path>, expected: &Grid) -> Result<State> {
    let path = path.as_ref();
    let (state, grid) = read_snapshot(path)?;
    if grid.cells() != expected.cells() {
        return Err(Error::format(
            path,
            format!(
                "dimension mismatch: snapshot has cells {:?}, expected {:?}",
                grid.cells(),
                expected.cells()
            ),
        ));
    }
    Ok(state)
}
