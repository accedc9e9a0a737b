//! CSV emission and parse-back.
//!
//! One data row per (workload, impl, threads, dummy_count, repeat) with the
//! measured seconds; each group is followed by a summary row whose
//! `repeat_index` is the literal `summary`, carrying the mean and the 99%
//! confidence half-width. Data rows leave the summary columns empty and vice
//! versa. Floats are written with shortest round-trip formatting.

use crate::stats::{summarize, Summary};
use std::path::Path;

pub const HEADER: [&str; 8] = [
    "workload",
    "impl",
    "threads",
    "dummy_count",
    "repeat_index",
    "seconds",
    "mean",
    "ci99_halfwidth",
];

/// One benchmark configuration with its per-repeat times.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub workload: String,
    pub impl_name: String,
    pub threads: usize,
    pub dummy_count: usize,
    pub seconds: Vec<f64>,
}

impl Group {
    pub fn summary(&self) -> Summary {
        summarize(&self.seconds)
    }
}

pub fn emit_csv(path: &Path, groups: &[Group]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for g in groups {
        for (i, s) in g.seconds.iter().enumerate() {
            w.write_record([
                g.workload.as_str(),
                g.impl_name.as_str(),
                &g.threads.to_string(),
                &g.dummy_count.to_string(),
                &i.to_string(),
                &s.to_string(),
                "",
                "",
            ])?;
        }
        let sm = g.summary();
        w.write_record([
            g.workload.as_str(),
            g.impl_name.as_str(),
            &g.threads.to_string(),
            &g.dummy_count.to_string(),
            "summary",
            "",
            &sm.mean.to_string(),
            &sm.ci99_halfwidth.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`emit_csv`] back into groups, checking the
/// summary rows against recomputed statistics.
pub fn parse_csv(path: &Path) -> Result<Vec<Group>, Box<dyn std::error::Error>> {
    let mut r = csv::Reader::from_path(path)?;
    {
        let got = r.headers()?;
        if got.iter().ne(HEADER) {
            return Err(format!("unexpected header: {got:?}").into());
        }
    }
    let mut groups: Vec<Group> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let key = (
            rec[0].to_string(),
            rec[1].to_string(),
            rec[2].parse::<usize>()?,
            rec[3].parse::<usize>()?,
        );
        if &rec[4] == "summary" {
            let g = groups
                .last()
                .filter(|g| {
                    (g.workload.as_str(), g.impl_name.as_str(), g.threads, g.dummy_count)
                        == (key.0.as_str(), key.1.as_str(), key.2, key.3)
                })
                .ok_or("summary row without data rows")?;
            let mean: f64 = rec[6].parse()?;
            let hw: f64 = rec[7].parse()?;
            let sm = g.summary();
            if mean != sm.mean || hw != sm.ci99_halfwidth {
                return Err("summary row disagrees with data rows".into());
            }
            continue;
        }
        let idx: usize = rec[4].parse()?;
        let secs: f64 = rec[5].parse()?;
        let needs_new = groups.last().is_none_or(|g| {
            (g.workload.as_str(), g.impl_name.as_str(), g.threads, g.dummy_count)
                != (key.0.as_str(), key.1.as_str(), key.2, key.3)
        });
        if needs_new {
            groups.push(Group {
                workload: key.0,
                impl_name: key.1,
                threads: key.2,
                dummy_count: key.3,
                seconds: Vec::new(),
            });
        }
        let g = groups.last_mut().unwrap();
        if idx != g.seconds.len() {
            return Err(format!("repeat_index out of order: {idx}").into());
        }
        g.seconds.push(secs);
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_result_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        emit_csv(&p, &[]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text.trim(),
            "workload,impl,threads,dummy_count,repeat_index,seconds,mean,ci99_halfwidth"
        );
        assert!(parse_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn twenty_repeats_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let g = Group {
            workload: "uniform".into(),
            impl_name: "adlist".into(),
            threads: 8,
            dummy_count: 0,
            seconds: (1..=20).map(|i| i as f64 / 10.0).collect(),
        };
        emit_csv(&p, std::slice::from_ref(&g)).unwrap();
        let lines = std::fs::read_to_string(&p).unwrap().lines().count();
        assert_eq!(lines, 1 + 20 + 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.csv");
        let groups = vec![
            Group {
                workload: "lru-warmup".into(),
                impl_name: "adlist-dummy".into(),
                threads: 8,
                dummy_count: 64,
                seconds: vec![0.1234567890123, 3.0e-7, 19.25],
            },
            Group {
                workload: "uniform".into(),
                impl_name: "dlist".into(),
                threads: 1,
                dummy_count: 0,
                seconds: vec![2.5],
            },
        ];
        emit_csv(&p, &groups).unwrap();
        assert_eq!(parse_csv(&p).unwrap(), groups);
    }

    #[test]
    fn quoting_survives_round_trip() {
        // field values with commas or quotes must come back intact
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.csv");
        let groups = vec![Group {
            workload: "uniform, custom \"x\"".into(),
            impl_name: "adlist".into(),
            threads: 2,
            dummy_count: 0,
            seconds: vec![1.0, 2.0],
        }];
        emit_csv(&p, &groups).unwrap();
        assert_eq!(parse_csv(&p).unwrap(), groups);
    }
}
