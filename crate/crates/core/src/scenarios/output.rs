//! CSV outputs and ingestion of measured gauge data.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{EocTable, GaugeRecord, InvariantRecord, Snapshot};

/// Fixed float format: 17 significant digits, so output is byte-reproducible.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    csv::Writer::from_path(path).map_err(csv_io)
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

pub fn write_invariants(path: &Path, records: &[InvariantRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "t",
        "mass",
        "secondary_linear_invariant",
        "energy",
        "modified_entropy",
        "gamma",
    ])
    .map_err(csv_io)?;
    for r in records {
        let modified = r.invariants.modified_entropy.map(fmt_f64).unwrap_or_default();
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.invariants.mass),
            fmt_f64(r.invariants.secondary_linear),
            fmt_f64(r.invariants.energy),
            modified,
            fmt_f64(r.gamma),
        ])
        .map_err(csv_io)?;
    }
    finish(w)
}

pub fn write_gauge(path: &Path, gauge: &GaugeRecord) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "eta"]).map_err(csv_io)?;
    for (t, eta) in gauge.t.iter().zip(&gauge.eta) {
        w.write_record([fmt_f64(*t), fmt_f64(*eta)]).map_err(csv_io)?;
    }
    finish(w)
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "eta", "v", "b"]).map_err(csv_io)?;
    for i in 0..snap.x.len() {
        w.write_record([
            fmt_f64(snap.x[i]),
            fmt_f64(snap.eta[i]),
            fmt_f64(snap.v[i]),
            fmt_f64(snap.b[i]),
        ])
        .map_err(csv_io)?;
    }
    finish(w)
}

pub fn write_eoc(path: &Path, tables: &[EocTable]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["order", "n", "l2_error_eta", "l2_error_v", "eoc_eta", "eoc_v"])
        .map_err(csv_io)?;
    for table in tables {
        for (i, row) in table.rows.iter().enumerate() {
            let (e_eta, e_v) = match table.eoc(i) {
                Some((a, b)) => (fmt_f64(a), fmt_f64(b)),
                None => (String::new(), String::new()),
            };
            w.write_record([
                table.order.to_string(),
                row.n.to_string(),
                fmt_f64(row.error_eta),
                fmt_f64(row.error_v),
                e_eta,
                e_v,
            ])
            .map_err(csv_io)?;
        }
    }
    finish(w)
}

/// Model and measured surface elevation at the measurement times.
pub fn write_comparison(path: &Path, t: &[f64], model: &[f64], measured: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "eta_model", "eta_measured"]).map_err(csv_io)?;
    for i in 0..t.len() {
        w.write_record([fmt_f64(t[i]), fmt_f64(model[i]), fmt_f64(measured[i])])
            .map_err(csv_io)?;
    }
    finish(w)
}

/// Measured series per gauge id, each sorted by time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentalData {
    pub gauges: BTreeMap<usize, (Vec<f64>, Vec<f64>)>,
}

impl ExperimentalData {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.gauges.values().flat_map(|(t, _)| t.iter().copied())
    }
}

/// Reads `gauge_id, t, eta` rows. Errors carry the 1-based line number.
pub fn read_experimental<R: Read>(mut input: R) -> Result<ExperimentalData> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    // The reader skips blank lines when counting, so lines come from byte offsets.
    let line_of = |pos: Option<&csv::Position>| {
        pos.map_or(0, |p| {
            let mut start = p.byte() as usize;
            while start < bytes.len() && matches!(bytes[start], b'\n' | b'\r') {
                start += 1;
            }
            1 + bytes[..start].iter().filter(|&&b| b == b'\n').count() as u64
        })
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| Error::Ingest {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["gauge_id", "t", "eta"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Ingest {
            line: 1,
            message: format!(
                "expected header 'gauge_id,t,eta', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut data = ExperimentalData::default();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Ingest {
            line: line_of(e.position()),
            message: e.to_string(),
        })?;
        let line = line_of(record.position());
        let bad = |message: String| Error::Ingest { line, message };
        if record.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", record.len())));
        }
        let id: usize = record[0]
            .parse()
            .map_err(|_| bad(format!("gauge_id '{}' is not a nonnegative integer", &record[0])))?;
        let parse = |s: &str, what: &str| -> Result<f64> {
            match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(bad(format!("{what} '{s}' is not a finite number"))),
            }
        };
        let t = parse(&record[1], "t")?;
        let eta = parse(&record[2], "eta")?;
        let entry = data.gauges.entry(id).or_default();
        if entry.0.last().is_some_and(|&last| t <= last) {
            return Err(bad(format!(
                "times of gauge {id} must increase, {t} follows {}",
                entry.0.last().unwrap()
            )));
        }
        entry.0.push(t);
        entry.1.push(eta);
    }
    Ok(data)
}

pub fn read_experimental_file(path: &Path) -> Result<ExperimentalData> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open experimental data '{}': {e}", path.display())))?;
    read_experimental(std::io::BufReader::new(file))
}

pub fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn reads_measured_gauges() {
        let text = "gauge_id,t,eta\n0,0.0,0.01\n1,0.0,0.02\n0,0.5,0.015\n";
        let d = read_experimental(text.as_bytes()).unwrap();
        assert_eq!(d.gauges[&0], (vec![0.0, 0.5], vec![0.01, 0.015]));
        assert_eq!(d.gauges[&1].0, vec![0.0]);
        assert_eq!(d.times().count(), 3);
    }

    #[test]
    fn ingestion_errors_report_lines() {
        let cases = [
            ("gauge_id,t,eta\n0,0.0,0.01\n0,abc,0.02\n", 3),
            ("gauge_id,t,eta\n0,0.0,0.01\n\n-1,1.0,0.02\n", 4),
            ("gauge_id,t,eta\n0,0.0,0.01\n0,0.0,0.02\n", 3),
            ("gauge_id,t,eta\n0,0.0\n", 2),
            ("id,time,eta\n0,0.0,0.01\n", 1),
            ("gauge_id,t,eta\n0,1.0,inf\n", 2),
        ];
        for (text, expected) in cases {
            match read_experimental(text.as_bytes()) {
                Err(Error::Ingest { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
