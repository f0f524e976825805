//! Time-series CSV, Picard report CSV and binary state snapshots.
//!
//! Snapshot layout: an ASCII header of `key value` lines terminated by a
//! line `end`, then every field listed under `fields` as row-major
//! little-endian f64, in that order. Floats in the header use the shortest
//! decimal form that reads back to the same bits.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::alignment::AlignmentFields;
use crate::diagnostics::{DiagnosticsRecord, RECORD_FIELDS};
use crate::driver::SimState;
use crate::error::{Error, Result};
use crate::phase_space::{Axis, Boundary, FluidState, KineticState, PhaseGrid, SpatialGrid};
use crate::picard::PicardStudy;

pub const SNAPSHOT_MAGIC: &str = "FLOCKNS-SNAPSHOT";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const SNAPSHOT_FIELDS: [&str; 5] = ["f", "rho", "q", "a", "b"];

/// Header of the time-series CSV.
pub fn timeseries_header() -> String {
    RECORD_FIELDS.join(",")
}

pub fn write_timeseries_to<W: Write>(records: &[DiagnosticsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_FIELDS)?;
    for r in records {
        w.write_record(r.values().iter().map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per record under a header equal to [`RECORD_FIELDS`].
pub fn write_timeseries(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    write_timeseries_to(records, fs::File::create(path)?)
}

pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RECORD_FIELDS {
        return Err(Error::Snapshot(format!("unexpected time-series header: {}", header.join(","))));
    }
    r.records()
        .map(|row| {
            let row = row?;
            let mut v = [0.0; RECORD_FIELDS.len()];
            for (slot, cell) in v.iter_mut().zip(row.iter()) {
                *slot = cell
                    .parse()
                    .map_err(|_| Error::Snapshot(format!("bad number `{cell}` in time series")))?;
            }
            Ok(DiagnosticsRecord::from_values(&v))
        })
        .collect()
}

pub const PICARD_FIELDS: [&str; 12] = [
    "iteration",
    "momentum",
    "density_l2",
    "density_l32",
    "kinetic_l65",
    "kinetic_l1",
    "sup_f",
    "velocity_l2",
    "grad_integral",
    "ratio",
    "converged",
    "fitted_rate",
];

/// One row per F^n: sup over time of each component, the ratio r_n and the
/// fitted geometric rate (repeated).
pub fn write_picard_report(study: &PicardStudy, path: &Path) -> Result<()> {
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PICARD_FIELDS)?;
    let rate = study.report.fitted_rate.map_or(String::from("nan"), |r| format!("{r:e}"));
    for (fun, row) in study.functionals.iter().zip(&study.report.rows) {
        w.write_record([
            row.n.to_string(),
            format!("{:e}", sup(&fun.momentum)),
            format!("{:e}", sup(&fun.density_l2)),
            format!("{:e}", sup(&fun.density_l32)),
            format!("{:e}", sup(&fun.kinetic_l65)),
            format!("{:e}", sup(&fun.kinetic_l1)),
            format!("{:e}", row.sup_f),
            format!("{:e}", sup(&fun.velocity_l2)),
            format!("{:e}", row.grad_integral),
            row.ratio.map_or(String::from("nan"), |r| format!("{r:e}")),
            (row.converged as u8).to_string(),
            rate.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn axis_line(tag: &str, a: &Axis) -> String {
    format!("{tag} {} {} {}\n", a.lower, a.upper, a.cells)
}

/// Writes the state to `out` in the snapshot layout.
pub fn write_snapshot<W: Write>(s: &SimState, mut out: W) -> Result<()> {
    let grid = s.kin.grid();
    let mut header = format!(
        "{SNAPSHOT_MAGIC}\nversion {SNAPSHOT_VERSION}\nendian little\ndim {}\nboundary {}\n",
        grid.dim(),
        grid.space().boundary().as_str()
    );
    for a in grid.space().axes() {
        header += &axis_line("x_axis", a);
    }
    for a in grid.velocity_axes() {
        header += &axis_line("v_axis", a);
    }
    header += &format!(
        "t {}\nstep {}\nepoch {}\nfields_epoch {}\nfields {}\nend\n",
        s.t,
        s.step,
        s.kin.epoch(),
        s.af.epoch,
        SNAPSHOT_FIELDS.join(" ")
    );
    out.write_all(header.as_bytes())?;
    for field in [s.kin.values(), &s.fluid.rho, &s.fluid.q, &s.af.a, &s.af.b] {
        let mut buf = Vec::with_capacity(field.len() * 8);
        for x in field {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn dump_snapshot(s: &SimState, path: &Path) -> Result<()> {
    write_snapshot(s, std::io::BufWriter::new(fs::File::create(path)?))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

fn parse_num<T: std::str::FromStr>(s: Option<&str>, what: &str) -> Result<T> {
    s.and_then(|x| x.parse().ok())
        .ok_or_else(|| bad(format!("snapshot header: bad or missing {what}")))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| bad(format!("snapshot payload truncated: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot<R: Read>(input: R) -> Result<SimState> {
    let mut r = BufReader::new(input);
    let mut lines = Vec::new();
    loop {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("snapshot header has no `end` line"));
        }
        let line = line.trim_end().to_string();
        if line == "end" {
            break;
        }
        lines.push(line);
        if lines.len() > 64 {
            return Err(bad("snapshot header too long"));
        }
    }
    if lines.first().map(String::as_str) != Some(SNAPSHOT_MAGIC) {
        return Err(bad("not a snapshot file"));
    }
    let mut dim = None;
    let mut boundary = None;
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    let (mut t, mut step, mut epoch, mut fields_epoch) = (None, None, None, None);
    for line in &lines[1..] {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        match key {
            "version" => {
                let v: u32 = parse_num(it.next(), "version")?;
                if v != SNAPSHOT_VERSION {
                    return Err(bad(format!("snapshot version {v}, expected {SNAPSHOT_VERSION}")));
                }
            }
            "endian" => {
                if it.next() != Some("little") {
                    return Err(bad("only little-endian snapshots are supported"));
                }
            }
            "dim" => dim = Some(parse_num::<usize>(it.next(), "dim")?),
            "boundary" => {
                boundary = Some(match it.next() {
                    Some("periodic") => Boundary::Periodic,
                    Some("clamped") => Boundary::Clamped,
                    _ => return Err(bad("unknown boundary")),
                })
            }
            "x_axis" | "v_axis" => {
                let lo: f64 = parse_num(it.next(), "axis lower")?;
                let hi: f64 = parse_num(it.next(), "axis upper")?;
                let n: usize = parse_num(it.next(), "axis cells")?;
                if key == "x_axis" {
                    xs.push(Axis::new(lo, hi, n)?);
                } else {
                    vs.push((hi, n));
                }
            }
            "t" => t = Some(parse_num::<f64>(it.next(), "t")?),
            "step" => step = Some(parse_num::<u64>(it.next(), "step")?),
            "epoch" => epoch = Some(parse_num::<u64>(it.next(), "epoch")?),
            "fields_epoch" => fields_epoch = Some(parse_num::<u64>(it.next(), "fields_epoch")?),
            "fields" => {
                let listed: Vec<&str> = it.collect();
                if listed != SNAPSHOT_FIELDS {
                    return Err(bad(format!("unexpected field list {listed:?}")));
                }
            }
            other => return Err(bad(format!("unknown snapshot header key `{other}`"))),
        }
    }
    let dim = dim.ok_or_else(|| bad("snapshot header lacks dim"))?;
    if xs.len() != dim || vs.len() != dim {
        return Err(bad(format!("snapshot declares dim {dim} but lists {} x and {} v axes", xs.len(), vs.len())));
    }
    let space = SpatialGrid::new(xs, boundary.ok_or_else(|| bad("snapshot header lacks boundary"))?)?;
    let (vmax, nv): (Vec<f64>, Vec<usize>) = vs.into_iter().unzip();
    let grid = PhaseGrid::new(space.clone(), &vmax, &nv)?;
    let cells = space.len();

    let f = read_f64s(&mut r, grid.len())?;
    let rho = read_f64s(&mut r, cells)?;
    let q = read_f64s(&mut r, cells * dim)?;
    let a = read_f64s(&mut r, cells)?;
    let b = read_f64s(&mut r, cells * dim)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(bad(format!("{} trailing bytes after snapshot payload", rest.len())));
    }
    let mut kin = KineticState::from_values(grid, f)?;
    kin.set_epoch(epoch.ok_or_else(|| bad("snapshot header lacks epoch"))?);
    Ok(SimState {
        t: t.ok_or_else(|| bad("snapshot header lacks t"))?,
        kin,
        fluid: FluidState::new(space, rho, q)?,
        af: AlignmentFields {
            dim,
            a,
            b,
            epoch: fields_epoch.ok_or_else(|| bad("snapshot header lacks fields_epoch"))?,
        },
        step: step.ok_or_else(|| bad("snapshot header lacks step"))?,
    })
}

pub fn load_snapshot(path: &Path) -> Result<SimState> {
    read_snapshot(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_schema() {
        assert_eq!(
            timeseries_header(),
            "t,mass_f,mass_rho,energy,viscous_dissipation_cum,friction_cum,alignment_cum,energy_residual,\
             support_radius,support_ceiling,f_l2w,f_h1w,rho_linf,u_linf,grad_u_linf,blowup_monitor"
        );
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(read_snapshot(&b"hello\nend\n"[..]).is_err());
        assert!(read_snapshot(&b"FLOCKNS-SNAPSHOT\nversion 2\nend\n"[..]).is_err());
    }
}
