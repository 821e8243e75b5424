//! Binary field snapshots.
//!
//! One text header line
//! `wqflow-field v1 n=<n> N=<N,...> lo=<...> hi=<...> topology=<p|b>`
//! followed by the node values as row-major little-endian `f64`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{GridSpec, ScalarField, Topology};
use crate::error::{Error, Result};

const MAGIC: &str = "wqflow-field";
const VERSION: &str = "v1";

fn join(xs: impl Iterator<Item = String>) -> String {
    xs.collect::<Vec<_>>().join(",")
}

pub fn header(grid: &GridSpec) -> String {
    format!(
        "{MAGIC} {VERSION} n={} N={} lo={} hi={} topology={}",
        grid.dim(),
        join(grid.points().iter().map(|v| v.to_string())),
        join(grid.lo().iter().map(|v| v.to_string())),
        join(grid.hi().iter().map(|v| v.to_string())),
        grid.topology().tag()
    )
}

pub fn write_field(mut w: impl Write, field: &ScalarField) -> Result<()> {
    writeln!(w, "{}", header(field.grid()))?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let f = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Snapshot(format!("bad value `{t}` for {key}")))
        })
        .collect()
}

pub fn parse_header(line: &str) -> Result<GridSpec> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(MAGIC) || tokens.next() != Some(VERSION) {
        return Err(Error::Snapshot(format!("unrecognised header `{line}`")));
    }
    let (mut dim, mut pts, mut lo, mut hi, mut topo) = (None, None, None, None, None);
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Snapshot(format!("malformed token `{tok}`")))?;
        match k {
            "n" => dim = Some(parse_list::<usize>(v, k)?),
            "N" => pts = Some(parse_list::<usize>(v, k)?),
            "lo" => lo = Some(parse_list::<f64>(v, k)?),
            "hi" => hi = Some(parse_list::<f64>(v, k)?),
            "topology" => {
                topo = Some(match v {
                    "p" => Topology::Periodic,
                    "b" => Topology::Box,
                    _ => return Err(Error::Snapshot(format!("unknown topology `{v}`"))),
                })
            }
            _ => return Err(Error::Snapshot(format!("unknown header key `{k}`"))),
        }
    }
    let missing = |k: &str| Error::Snapshot(format!("header lacks `{k}`"));
    let dim = dim.ok_or_else(|| missing("n"))?;
    let pts = pts.ok_or_else(|| missing("N"))?;
    if dim.len() != 1 || dim[0] != pts.len() {
        return Err(Error::Snapshot("n does not match the number of N entries".into()));
    }
    GridSpec::new(
        &lo.ok_or_else(|| missing("lo"))?,
        &hi.ok_or_else(|| missing("hi"))?,
        &pts,
        topo.ok_or_else(|| missing("topology"))?,
    )
}

pub fn read_field(r: impl Read) -> Result<ScalarField> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let grid = parse_header(line.trim_end_matches('\n'))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Snapshot(format!(
            "expected {} bytes of data, found {}",
            8 * grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::from_vec(grid, values)
}

pub fn load(path: impl AsRef<Path>) -> Result<ScalarField> {
    read_field(fs::File::open(path)?)
}
