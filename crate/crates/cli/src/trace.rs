//! Checkpoint schedules and CSV emission for convergence traces.

use std::io::Write;
use std::str::FromStr;

use nbl_sat::TraceRecord;

/// Spacing of trace rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stride {
    /// A row every `n` samples.
    Linear(u64),
    /// `k` rows per decade, log-spaced.
    Log(u32),
}

impl FromStr for Stride {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("log") {
            let per_decade = match rest.strip_prefix(':') {
                Some(k) => k.parse().map_err(|_| format!("bad points per decade `{k}`"))?,
                None if rest.is_empty() => 1,
                None => return Err(format!("bad stride `{s}`")),
            };
            if per_decade == 0 {
                return Err("points per decade must be positive".into());
            }
            return Ok(Stride::Log(per_decade));
        }
        match crate::parse_count(s)? {
            0 => Err("stride must be positive".into()),
            n => Ok(Stride::Linear(n)),
        }
    }
}

impl Stride {
    /// Sample counts at which a row is emitted, always ending at `max`.
    pub fn checkpoints(self, max: u64) -> Vec<u64> {
        let mut points = match self {
            Stride::Linear(step) => (1..=max / step).map(|k| k * step).collect(),
            Stride::Log(per_decade) => {
                let mut points = Vec::new();
                for i in 0.. {
                    let p = 10f64.powf(i as f64 / per_decade as f64).round();
                    if p > max as f64 {
                        break;
                    }
                    points.push(p as u64);
                }
                points
            }
        };
        points.push(max);
        points.dedup();
        points
    }
}

pub fn write_csv<W: Write>(out: W, records: &[TraceRecord]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}
