use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectra::Observation;

/// On-disk layout of a scalar series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    /// One value per line. Blank lines and lines starting with `#` are
    /// skipped.
    Text,
    /// One column of a comma-separated file, optionally below a header row.
    CsvColumn { column: usize, header: bool },
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io {
        context: path.display().to_string(),
        source: e,
    })
}

fn parse_value(path: &Path, line: usize, field: &str) -> Result<f64> {
    let parse_err = |msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("cannot parse {:?} as a number", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(format!("non-finite value {v}")));
    }
    Ok(v)
}

/// Reads the numeric values of a series file. `column` selects a CSV column;
/// `None` reads one value per line.
pub(crate) fn read_column(path: &Path, csv_column: Option<(usize, bool)>) -> Result<Vec<f64>> {
    let file = open(path)?;
    let mut values = Vec::new();
    match csv_column {
        None => {
            for (k, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::Io {
                    context: path.display().to_string(),
                    source: e,
                })?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                values.push(parse_value(path, k + 1, trimmed)?);
            }
        }
        Some((column, header)) => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(header)
                .flexible(true)
                .comment(Some(b'#'))
                .from_reader(file);
            for record in reader.records() {
                let record = record?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                let field = record.get(column).ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line,
                    msg: format!("no column {column}"),
                })?;
                values.push(parse_value(path, line, field)?);
            }
        }
    }
    Ok(values)
}

/// Loads a fully observed series, optionally subtracting its mean.
pub fn load_series(path: &Path, format: SeriesFormat, center: bool) -> Result<Observation> {
    let values = match format {
        SeriesFormat::Text => read_column(path, None)?,
        SeriesFormat::CsvColumn { column, header } => read_column(path, Some((column, header)))?,
    };
    if values.len() < 2 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: format!("need at least 2 values, found {}", values.len()),
        });
    }
    let obs = Observation::new(values)?;
    Ok(if center { obs.centered() } else { obs })
}

/// Writes samples one per line with round-trip precision.
pub fn write_series(path: &Path, obs: &Observation) -> Result<()> {
    let io_err = |e| Error::Io {
        context: path.display().to_string(),
        source: e,
    };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io_err)?);
    for v in obs.samples() {
        writeln!(out, "{v:?}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// One nonnegative integer label per line.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let file = open(path)?;
    let mut labels = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Io {
            context: path.display().to_string(),
            source: e,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        labels.push(trimmed.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: k + 1,
            msg: format!("cannot parse {trimmed:?} as a label"),
        })?);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmodel::{ar2_model, sample_ar2};

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn text_series() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.txt", "1.0\n2.0\n");
        assert_eq!(load_series(&p, SeriesFormat::Text, false).unwrap().samples(), &[1.0, 2.0]);
        let c = load_series(&p, SeriesFormat::Text, true).unwrap();
        assert_eq!(c.samples(), &[-0.5, 0.5]);
        assert!(c.mask().iter().all(|&m| m));
    }

    #[test]
    fn errors_cite_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bad.txt", "1.0\n2.0\nabc\n");
        let err = load_series(&p, SeriesFormat::Text, false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("line 3"));
        let p = write(&dir, "nan.txt", "1.0\nNaN\n");
        assert!(matches!(load_series(&p, SeriesFormat::Text, false), Err(Error::Parse { line: 2, .. })));
        let p = write(&dir, "inf.txt", "inf\n1.0\n");
        assert!(load_series(&p, SeriesFormat::Text, false).is_err());
        let p = write(&dir, "short.txt", "1.0\n");
        assert!(load_series(&p, SeriesFormat::Text, false).is_err());
        assert!(matches!(
            load_series(&dir.path().join("missing"), SeriesFormat::Text, false),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn csv_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "t,x\n0,1.5\n1,2.5\n2,x\n");
        let fmt = SeriesFormat::CsvColumn { column: 1, header: true };
        let err = load_series(&p, fmt, false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let p = write(&dir, "b.csv", "t,x\n0,1.5\n1,2.5\n");
        assert_eq!(load_series(&p, fmt, false).unwrap().samples(), &[1.5, 2.5]);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let model = ar2_model(0.6, 2.0, 1 << 12, 256).unwrap();
        let obs = sample_ar2(&model, 500, 9, 100).unwrap();
        let p = dir.path().join("obs.txt");
        write_series(&p, &obs).unwrap();
        assert_eq!(load_series(&p, SeriesFormat::Text, false).unwrap(), obs);
    }

    #[test]
    fn labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "l.txt", "0\n1\n\n1\n");
        assert_eq!(load_labels(&p).unwrap(), vec![0, 1, 1]);
        let p = write(&dir, "l2.txt", "0\n-1\n");
        assert!(matches!(load_labels(&p), Err(Error::Parse { line: 2, .. })));
    }
}
