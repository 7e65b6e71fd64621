//! Path/ensemble serialization: CSV and the `FSSDE1` binary layout.
//!
//! Binary layout (all integers little-endian):
//! ```text
//! magic   6 bytes  "FSSDE1"
//! u32     n_paths
//! u32     grid_len
//! u32     fast_dim m
//! u32     slow_dim n
//! u64     master_seed
//! f64[grid_len]        s grid
//! f64[grid_len * n]    shared slow states
//! per path: u64 seed, u64 clamp_events, i64 blowup_step (-1 = none),
//!           f64[grid_len * m] fast states (NaN past blow-up)
//! ```
//! All floating-point payloads are IEEE-754 doubles, little-endian.

use std::io::{Read, Write};

use super::{Path, PathEnsemble};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"FSSDE1";

fn write_header(w: &mut impl Write, m: usize, n: usize) -> Result<()> {
    write!(w, "s")?;
    for j in 1..=n {
        write!(w, ",y_{j}")?;
    }
    for i in 1..=m {
        write!(w, ",x_{i}")?;
    }
    Ok(())
}

/// CSV with header `s,y_1..y_n,x_1..x_m`.
pub fn write_path_csv(w: &mut impl Write, path: &Path) -> Result<()> {
    write_header(w, path.fast_dim, path.slow_dim)?;
    writeln!(w)?;
    for i in 0..path.len() {
        write!(w, "{}", path.s[i])?;
        for v in path.y_at(i) {
            write!(w, ",{v}")?;
        }
        for v in path.x_at(i) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// CSV with header `s,y_1..y_n,x_1..x_m,path_id`.
pub fn write_ensemble_csv(w: &mut impl Write, ens: &PathEnsemble) -> Result<()> {
    write_header(w, ens.fast_dim, ens.slow_dim)?;
    writeln!(w, ",path_id")?;
    for r in 0..ens.n_paths {
        for i in 0..ens.grid_len() {
            write!(w, "{}", ens.s_grid[i])?;
            for v in ens.y_at(i) {
                write!(w, ",{v}")?;
            }
            for v in ens.x_at(r, i) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{r}")?;
        }
    }
    Ok(())
}

pub fn write_ensemble_binary(w: &mut impl Write, ens: &PathEnsemble) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [
        ens.n_paths as u32,
        ens.grid_len() as u32,
        ens.fast_dim as u32,
        ens.slow_dim as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&ens.master_seed.to_le_bytes())?;
    for v in &ens.s_grid {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in &ens.y_grid {
        w.write_all(&v.to_le_bytes())?;
    }
    let stride = ens.grid_len() * ens.fast_dim;
    for r in 0..ens.n_paths {
        w.write_all(&ens.seeds[r].to_le_bytes())?;
        w.write_all(&ens.clamp_events[r].to_le_bytes())?;
        let blow: i64 = ens.blowups[r].map_or(-1, |s| s as i64);
        w.write_all(&blow.to_le_bytes())?;
        for v in &ens.x[r * stride..(r + 1) * stride] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_exact_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

pub fn read_ensemble_binary(r: &mut impl Read) -> Result<PathEnsemble> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}; expected {:?}",
            magic, MAGIC
        )));
    }
    let n_paths = read_exact_u32(r)? as usize;
    let grid_len = read_exact_u32(r)? as usize;
    let m = read_exact_u32(r)? as usize;
    let n = read_exact_u32(r)? as usize;
    let master_seed = read_exact_u64(r)?;
    let s_grid = read_f64s(r, grid_len)?;
    let y_grid = read_f64s(r, grid_len * n)?;
    let mut ens = PathEnsemble {
        fast_dim: m,
        slow_dim: n,
        n_paths,
        s_grid,
        y_grid,
        x: Vec::with_capacity(n_paths * grid_len * m),
        seeds: Vec::with_capacity(n_paths),
        clamp_events: Vec::with_capacity(n_paths),
        blowups: Vec::with_capacity(n_paths),
        master_seed,
    };
    for _ in 0..n_paths {
        ens.seeds.push(read_exact_u64(r)?);
        ens.clamp_events.push(read_exact_u64(r)?);
        let blow = read_exact_u64(r)? as i64;
        ens.blowups.push(if blow < 0 { None } else { Some(blow as usize) });
        ens.x.extend(read_f64s(r, grid_len * m)?);
    }
    Ok(ens)
}

/// Parses an ensemble CSV produced by [`write_ensemble_csv`].
pub fn read_ensemble_csv(r: &mut impl Read) -> Result<PathEnsemble> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty csv".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.iter().filter(|c| c.starts_with("y_")).count();
    let m = cols.iter().filter(|c| c.starts_with("x_")).count();
    if m == 0 || cols.last() != Some(&"path_id") {
        return Err(Error::Format("not an ensemble csv".into()));
    }
    let mut s_grid = Vec::new();
    let mut y_grid = Vec::new();
    let mut x = Vec::new();
    let mut n_paths = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + n + m {
            return Err(Error::Format(format!("line {}: bad field count", lineno + 2)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))
        };
        let path_id: usize = fields[1 + n + m]
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
        if path_id == 0 {
            s_grid.push(parse(fields[0])?);
            for f in &fields[1..1 + n] {
                y_grid.push(parse(f)?);
            }
        }
        n_paths = n_paths.max(path_id + 1);
        for f in &fields[1 + n..1 + n + m] {
            x.push(parse(f)?);
        }
    }
    let grid_len = s_grid.len();
    if grid_len == 0 || x.len() != n_paths * grid_len * m {
        return Err(Error::Format("inconsistent ensemble csv".into()));
    }
    Ok(PathEnsemble {
        fast_dim: m,
        slow_dim: n,
        n_paths,
        s_grid,
        y_grid,
        x,
        seeds: vec![0; n_paths],
        clamp_events: vec![0; n_paths],
        blowups: vec![None; n_paths],
        master_seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{FastSlowSystem, SimConfig};

    fn small_ensemble() -> PathEnsemble {
        let system =
            FastSlowSystem::scalar_additive(0.5, 0.3, |x, _| -x, |_, _| 1.0).unwrap();
        let config = SimConfig::new(0.05, 0.5, 2, 11, 3);
        crate::sde::simulate_ensemble(&system, &config, &[0.4], &[0.0]).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let ens = small_ensemble();
        let mut buf = Vec::new();
        write_ensemble_binary(&mut buf, &ens).unwrap();
        assert_eq!(&buf[..6], MAGIC);
        let back = read_ensemble_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.n_paths, ens.n_paths);
        assert!(back
            .x
            .iter()
            .zip(&ens.x)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.seeds, ens.seeds);
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let ens = small_ensemble();
        let mut buf = Vec::new();
        write_ensemble_csv(&mut buf, &ens).unwrap();
        let back = read_ensemble_csv(&mut buf.as_slice()).unwrap();
        assert_eq!(back.n_paths, ens.n_paths);
        assert_eq!(back.grid_len(), ens.grid_len());
        for (a, b) in back.x.iter().zip(&ens.x) {
            // shortest-roundtrip float formatting is lossless
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
