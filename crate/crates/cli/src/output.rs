//! Deterministic output files: CSV series, field snapshots, text reports.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fracschro::{ComplexField, Trajectory};
use num_complex::Complex32;

/// Full-precision float formatting shared by every CSV.
pub fn num(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn write_file(path: &Path, contents: &str) -> io::Result<PathBuf> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(path.to_path_buf())
}

/// `t,l2,hbeta,linf` per node.
pub fn norms_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,l2,hbeta,linf\n");
    for (j, t) in traj.time_grid.nodes().into_iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", num(t), num(traj.l2[j]), num(traj.hbeta[j]), num(traj.linf[j]));
    }
    s
}

/// `iteration,sup_distance,ratio`; the first ratio is empty.
pub fn picard_csv(traj: &Trajectory) -> String {
    let mut s = String::from("iteration,sup_distance,ratio\n");
    for (k, d) in traj.picard_history.iter().enumerate() {
        let ratio = if k == 0 || traj.picard_history[k - 1] == 0.0 {
            String::new()
        } else {
            num(d / traj.picard_history[k - 1])
        };
        let _ = writeln!(s, "{},{},{}", k + 1, num(*d), ratio);
    }
    s
}

/// Metadata stored next to a binary snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub dims: usize,
    pub points: usize,
    pub half_width: f64,
    pub t: f64,
    pub node: usize,
}

impl SnapshotHeader {
    fn render(&self) -> String {
        format!(
            "format = complex64-le\norder = row-major, first axis slowest\ndims = {}\nN = {}\nL = {}\nt = {}\nnode = {}\n",
            self.dims,
            self.points,
            num(self.half_width),
            num(self.t),
            self.node
        )
    }

    fn parse(text: &str) -> io::Result<Self> {
        let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
        let field = |key: &str| -> io::Result<&str> {
            text.lines()
                .filter_map(|l| l.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim())
                .ok_or_else(|| bad(format!("snapshot header lacks `{key}`")))
        };
        let parse_err = |key: &str| bad(format!("snapshot header: bad `{key}`"));
        if field("format")? != "complex64-le" {
            return Err(bad("unsupported snapshot format".into()));
        }
        Ok(Self {
            dims: field("dims")?.parse().map_err(|_| parse_err("dims"))?,
            points: field("N")?.parse().map_err(|_| parse_err("N"))?,
            half_width: field("L")?.parse().map_err(|_| parse_err("L"))?,
            t: field("t")?.parse().map_err(|_| parse_err("t"))?,
            node: field("node")?.parse().map_err(|_| parse_err("node"))?,
        })
    }
}

/// Writes `<stem>.c64` (interleaved little-endian `f32` pairs) and
/// `<stem>.hdr`. Values are rounded to single precision.
pub fn write_snapshot(dir: &Path, stem: &str, field: &ComplexField, t: f64, node: usize) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let grid = field.grid();
    let header = SnapshotHeader {
        dims: grid.dim(),
        points: grid.points_per_axis(),
        half_width: grid.half_width(),
        t,
        node,
    };
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&(v.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    let data = dir.join(format!("{stem}.c64"));
    let hdr = dir.join(format!("{stem}.hdr"));
    fs::write(&data, bytes)?;
    fs::write(&hdr, header.render())?;
    Ok(vec![data, hdr])
}

/// Inverse of [`write_snapshot`]: `path` is the `.c64` file.
pub fn read_snapshot(path: &Path) -> io::Result<(SnapshotHeader, Vec<Complex32>)> {
    let header = SnapshotHeader::parse(&fs::read_to_string(path.with_extension("hdr"))?)?;
    let bytes = fs::read(path)?;
    let expected = header.points.pow(header.dims as u32) * 8;
    if bytes.len() != expected {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("snapshot holds {} bytes, header implies {expected}", bytes.len()),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex32::new(re, im)
        })
        .collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracschro::SpatialGrid;
    use num_complex::Complex64;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::new(2, 16, 3.0).unwrap();
        let f = ComplexField::from_fn(&g, |x| Complex64::new((-(x[0] * x[0])).exp(), x[1].sin()));
        let files = write_snapshot(dir.path(), "u_00003", &f, 0.375, 3).unwrap();
        let (h, v) = read_snapshot(&files[0]).unwrap();
        assert_eq!(h, SnapshotHeader { dims: 2, points: 16, half_width: 3.0, t: 0.375, node: 3 });
        for (a, b) in v.iter().zip(f.values()) {
            assert_eq!(a.re, b.re as f32);
            assert_eq!(a.im, b.im as f32);
        }
        // single-precision data survives a second pass unchanged
        let g32 = ComplexField::new(g.clone(), v.iter().map(|c| Complex64::new(c.re as f64, c.im as f64)).collect()).unwrap();
        let files = write_snapshot(dir.path(), "again", &g32, 0.375, 3).unwrap();
        assert_eq!(fs::read(&files[0]).unwrap(), fs::read(dir.path().join("u_00003.c64")).unwrap());
    }

    #[test]
    fn truncated_snapshot_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::new(1, 8, 1.0).unwrap();
        let files = write_snapshot(dir.path(), "s", &ComplexField::zeros(&g), 0.0, 0).unwrap();
        fs::write(&files[0], [0u8; 12]).unwrap();
        assert!(read_snapshot(&files[0]).is_err());
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
