//! CSV persistence for per-round traces, checkpoint summaries and runtime
//! comparisons. Reals are written in shortest round-trip form, so parsing a
//! written file reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROUNDS_HEADER: &str = "trial,t,arm_index,reward,inst_regret,cum_regret,round_time_ns";
pub const SUMMARY_HEADER: &str = "checkpoint_t,mean_cum_regret,std_cum_regret,mean_cum_time_ns,std_cum_time_ns";
pub const COMPARE_HEADER: &str =
    "series,total_time_ns,mean_round_time_ns,round_time_slope,slope_p_value,time_ratio_b_over_a";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub trial: u64,
    pub t: u64,
    pub arm_index: u64,
    pub reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub round_time_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub checkpoint_t: u64,
    pub mean_cum_regret: f64,
    pub std_cum_regret: f64,
    pub mean_cum_time_ns: f64,
    pub std_cum_time_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub series: String,
    pub total_time_ns: f64,
    pub mean_round_time_ns: f64,
    pub round_time_slope: f64,
    pub slope_p_value: f64,
    pub time_ratio_b_over_a: f64,
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &str) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let got = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != header {
        return Err(Error::invalid(format!("{}: header {got:?} does not match {header:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Header-only when `rows` is empty; the header is emitted by serde.
pub fn write_rounds_to<W: Write>(mut out: W, rows: &[RoundTrace]) -> Result<()> {
    if rows.is_empty() {
        writeln!(out, "{ROUNDS_HEADER}").map_err(|e| Error::io("<csv>", e))?;
        return Ok(());
    }
    write_rows(out, rows)
}

pub fn write_rounds(path: &Path, rows: &[RoundTrace]) -> Result<()> {
    write_rounds_to(create(path)?, rows)
}

pub fn read_rounds(path: &Path) -> Result<Vec<RoundTrace>> {
    read_rows(path, ROUNDS_HEADER)
}

pub fn write_summary_to<W: Write>(mut out: W, rows: &[SummaryRow]) -> Result<()> {
    if rows.is_empty() {
        writeln!(out, "{SUMMARY_HEADER}").map_err(|e| Error::io("<csv>", e))?;
        return Ok(());
    }
    write_rows(out, rows)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_summary_to(create(path)?, rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path, SUMMARY_HEADER)
}

pub fn write_compare(path: &Path, rows: &[CompareRow]) -> Result<()> {
    write_rows(create(path)?, rows)
}

pub fn read_compare(path: &Path) -> Result<Vec<CompareRow>> {
    read_rows(path, COMPARE_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3f64..1e3]
    }

    fn trace() -> impl Strategy<Value = RoundTrace> {
        (any::<u64>(), any::<u64>(), any::<u64>(), finite(), finite(), finite(), any::<u64>()).prop_map(
            |(trial, t, arm_index, reward, inst_regret, cum_regret, round_time_ns)| RoundTrace {
                trial,
                t,
                arm_index,
                reward,
                inst_regret,
                cum_regret,
                round_time_ns,
            },
        )
    }

    #[test]
    fn headers_are_exact() {
        let mut buf = Vec::new();
        write_rounds_to(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), ROUNDS_HEADER);
        let mut buf = Vec::new();
        let row = RoundTrace {
            trial: 0,
            t: 1,
            arm_index: 2,
            reward: 0.5,
            inst_regret: 0.0,
            cum_regret: 0.0,
            round_time_ns: 7,
        };
        write_rounds_to(&mut buf, &[row]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().next().unwrap(), ROUNDS_HEADER);
        let mut buf = Vec::new();
        let srow = SummaryRow {
            checkpoint_t: 1,
            mean_cum_regret: 0.0,
            std_cum_regret: 0.0,
            mean_cum_time_ns: 1.0,
            std_cum_time_ns: 0.0,
        };
        write_summary_to(&mut buf, &[srow]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().next().unwrap(), SUMMARY_HEADER);
    }

    #[test]
    fn rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(read_rounds(&p).is_err());
        assert!(read_summary(&p).is_err());
    }

    proptest! {
        #[test]
        fn rounds_round_trip(rows in proptest::collection::vec(trace(), 1..20)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("rounds.csv");
            write_rounds(&p, &rows).unwrap();
            let back = read_rounds(&p).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in back.iter().zip(&rows) {
                prop_assert_eq!(a.trial, b.trial);
                prop_assert_eq!(a.round_time_ns, b.round_time_ns);
                prop_assert_eq!(a.reward.to_bits(), b.reward.to_bits());
                prop_assert_eq!(a.cum_regret.to_bits(), b.cum_regret.to_bits());
                prop_assert_eq!(a.inst_regret.to_bits(), b.inst_regret.to_bits());
            }
        }
    }
}
