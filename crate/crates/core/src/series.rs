//! Sampled time series: simulation output and recorded-signal playback.

use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("sample times must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("channel `{name}` has {got} samples, expected {expected}")]
    LengthMismatch { name: String, got: usize, expected: usize },
    #[error("duplicate channel `{0}`")]
    DuplicateChannel(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("time {t} outside recorded range [{first}, {last}]")]
    OutOfRange { t: f64, first: f64, last: f64 },
    #[error("series is empty")]
    Empty,
    #[error("csv line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Strictly increasing sample instants plus named scalar columns of equal
/// length.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SeriesTable {
    times: Vec<f64>,
    channels: Vec<(String, Vec<f64>)>,
}

impl SeriesTable {
    pub fn new(times: Vec<f64>) -> Result<Self, SeriesError> {
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(SeriesError::NotIncreasing(i + 1));
        }
        Ok(Self { times, channels: Vec::new() })
    }

    pub fn add_channel(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<(), SeriesError> {
        let name = name.into();
        if values.len() != self.times.len() {
            return Err(SeriesError::LengthMismatch { name, got: values.len(), expected: self.times.len() });
        }
        if self.channels.iter().any(|(n, _)| *n == name) {
            return Err(SeriesError::DuplicateChannel(name));
        }
        self.channels.push((name, values));
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(n, _)| n.as_str())
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Linear interpolation of `channel` at time `t`. Exact at knots; no
    /// extrapolation outside the recorded span.
    pub fn playback(&self, channel: &str, t: f64) -> Result<f64, SeriesError> {
        let values = self.channel(channel).ok_or_else(|| SeriesError::UnknownChannel(channel.to_string()))?;
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return Err(SeriesError::Empty),
        };
        if !(t >= first && t <= last) {
            return Err(SeriesError::OutOfRange { t, first, last });
        }
        // first index with time > t
        let hi = self.times.partition_point(|&s| s <= t);
        if hi == 0 {
            return Ok(values[0]);
        }
        let lo = hi - 1;
        if self.times[lo] == t || hi == self.times.len() {
            return Ok(values[lo]);
        }
        let (t0, t1) = (self.times[lo], self.times[hi]);
        let w = (t - t0) / (t1 - t0);
        Ok(values[lo] + w * (values[hi] - values[lo]))
    }

    /// Writes `t` followed by every channel, LF line endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t");
        for (name, _) in &self.channels {
            header.push(',');
            header.push_str(name);
        }
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for (i, t) in self.times.iter().enumerate() {
            line.clear();
            line.push_str(&format!("{t}"));
            for (_, values) in &self.channels {
                line.push(',');
                line.push_str(&format!("{}", values[i]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads a table written by [`SeriesTable::write_csv`]: a header whose
    /// first column is the time axis, then numeric rows.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SeriesError> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(h) => h?,
            None => return Err(SeriesError::Empty),
        };
        let names: Vec<String> = header.trim_end().split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut times = Vec::new();
        let mut cols = vec![Vec::new(); names.len()];
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64, SeriesError> {
                let s = s.ok_or_else(|| SeriesError::Parse { line: i + 2, message: "missing field".into() })?;
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| SeriesError::Parse { line: i + 2, message: format!("`{s}`: {e}") })
            };
            times.push(parse(fields.next())?);
            for col in cols.iter_mut() {
                col.push(parse(fields.next())?);
            }
        }
        let mut table = SeriesTable::new(times)?;
        for (name, col) in names.into_iter().zip(cols) {
            table.add_channel(name, col)?;
        }
        Ok(table)
    }
}
