//! CSV files. Floats are written with 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use crate::calib::{AScan, CalibratedScan};
use crate::demod::{BlockEstimate, PhaseEstimate};
use crate::error::{Error, Result};
use crate::lcs::{CalibClock, LevelLadder};
use crate::signal::{Grid, SampledSignal};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes named float columns of equal length.
pub fn write_columns<W: Write>(w: W, header: &[&str], cols: &[&[f64]]) -> Result<()> {
    let n = cols.first().map_or(0, |c| c.len());
    if cols.iter().any(|c| c.len() != n) || header.len() != cols.len() {
        return Err(Error::Contract("CSV columns differ in length".into()));
    }
    let mut out = writer(w);
    out.write_record(header)?;
    for i in 0..n {
        out.write_record(cols.iter().map(|c| fmt_f64(c[i])))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads float columns, checking the header exactly.
pub fn read_columns<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Parse(format!("expected header {}, found {}", header.join(","), got.join(","))));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("row {}: expected {} fields, found {}", line + 2, header.len(), rec.len())));
        }
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: '{field}' is not a number", line + 2)))?;
            c.push(v);
        }
    }
    Ok(cols)
}

pub const SIGNAL_HEADER: [&str; 2] = ["t_s", "value"];
pub const PHASE_HEADER: [&str; 3] = ["n", "phase_rad", "amplitude"];
pub const BLOCK_HEADER: [&str; 3] = ["block_index", "omega0_rad_per_sample", "d_per_sample"];
pub const CLOCK_HEADER: [&str; 3] = ["event_index", "t_s", "level_rad_per_m"];
pub const ASCAN_HEADER: [&str; 2] = ["depth_m", "magnitude"];
pub const SCAN_HEADER: [&str; 2] = ["k_rad_per_m", "value"];

pub fn write_signal(path: &Path, s: &SampledSignal) -> Result<()> {
    write_columns(create(path)?, &SIGNAL_HEADER, &[&s.times, &s.values])
}

/// Reads a signal; it is marked uniform when the steps agree to 1e-9.
pub fn read_signal(path: &Path) -> Result<SampledSignal> {
    let c = read_columns(open(path)?, &SIGNAL_HEADER)?;
    let (times, values) = (c[0].clone(), c[1].clone());
    let mut grid = Grid::from_times(times)?;
    if grid.len() >= 2 {
        let n = grid.len();
        let step = (grid.times[n - 1] - grid.times[0]) / (n - 1) as f64;
        let uniform = grid.times.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step);
        if uniform {
            grid.rate = Some(1.0 / step);
        }
    }
    SampledSignal::new(&grid, values)
}

pub fn write_phase(path: &Path, p: &PhaseEstimate) -> Result<()> {
    let mut out = writer(create(path)?);
    match &p.amplitude {
        Some(a) => {
            out.write_record(PHASE_HEADER)?;
            for (i, (ph, am)) in p.phase.iter().zip(a).enumerate() {
                out.write_record([i.to_string(), fmt_f64(*ph), fmt_f64(*am)])?;
            }
        }
        None => {
            out.write_record(&PHASE_HEADER[..2])?;
            for (i, ph) in p.phase.iter().enumerate() {
                out.write_record([i.to_string(), fmt_f64(*ph)])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_blocks(path: &Path, blocks: &[BlockEstimate]) -> Result<()> {
    let mut out = writer(create(path)?);
    out.write_record(BLOCK_HEADER)?;
    for (i, b) in blocks.iter().enumerate() {
        out.write_record([i.to_string(), fmt_f64(b.omega0), fmt_f64(b.d)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_clock(path: &Path, clock: &CalibClock, ladder: &LevelLadder) -> Result<()> {
    let mut out = writer(create(path)?);
    out.write_record(CLOCK_HEADER)?;
    for (i, (t, l)) in clock.events.iter().zip(&clock.level_index).enumerate() {
        out.write_record([i.to_string(), fmt_f64(*t), fmt_f64(ladder.levels[*l])])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_ascan(path: &Path, a: &AScan) -> Result<()> {
    write_columns(create(path)?, &ASCAN_HEADER, &[&a.depth, &a.magnitude])
}

pub fn read_ascan(path: &Path) -> Result<AScan> {
    let mut c = read_columns(open(path)?, &ASCAN_HEADER)?;
    let magnitude = c.pop().unwrap_or_default();
    let depth = c.pop().unwrap_or_default();
    Ok(AScan { depth, magnitude })
}

pub fn write_scan(path: &Path, s: &CalibratedScan) -> Result<()> {
    write_columns(create(path)?, &SCAN_HEADER, &[&s.k_values, &s.samples])
}

pub fn read_scan(path: &Path) -> Result<CalibratedScan> {
    let mut c = read_columns(open(path)?, &SCAN_HEADER)?;
    let samples = c.pop().unwrap_or_default();
    let k = c.pop().unwrap_or_default();
    CalibratedScan::new(k, samples, "file")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = SampledSignal::uniform_from(0.0, 3.0e8, vec![0.1, -1.0 / 3.0, std::f64::consts::PI]).unwrap();
        write_signal(&p, &s).unwrap();
        let back = read_signal(&p).unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.times, s.times);
        assert!(back.is_uniform());
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t_s,value\n"));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let e = read_columns("a,b\n1,2\n".as_bytes(), &SIGNAL_HEADER).unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
        let e = read_columns("t_s,value\n1,x\n".as_bytes(), &SIGNAL_HEADER).unwrap_err();
        assert!(e.to_string().contains("row 2"));
    }

    #[test]
    fn phase_header_follows_amplitude() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        write_phase(&p, &PhaseEstimate { phase: vec![0.0, 1.0], amplitude: None, blocks: None }).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("n,phase_rad\n0,"));
        write_phase(&p, &PhaseEstimate { phase: vec![0.0], amplitude: Some(vec![2.0]), blocks: None }).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("n,phase_rad,amplitude\n"));
    }
}
