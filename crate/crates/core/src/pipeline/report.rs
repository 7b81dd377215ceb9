use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{summarize, Summary};

/// One (image, pipeline) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub image: String,
    pub pipeline: String,
    pub path_count: usize,
    pub d_chars: usize,
    pub mse: f64,
    pub ssim: f64,
    pub ssim_original: Option<f64>,
    /// Wall time; excluded from determinism guarantees.
    pub ms: f64,
}

impl MetricsRow {
    pub fn log_paths(&self) -> f64 {
        (self.path_count as f64 + 1.0).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub rows: Vec<MetricsRow>,
    /// Sampled files that could not be read.
    pub skipped: usize,
    pub sampled: usize,
}

/// Per-pipeline summaries of one report.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub pipeline: String,
    pub ssim: Summary,
    pub mse: Summary,
    pub log_paths: Summary,
    pub path_count: Summary,
}

pub const CSV_HEADER: [&str; 7] = ["image", "pipeline", "path_count", "d_chars", "mse", "ssim", "ms"];

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

impl RunReport {
    /// CSV with the standard columns, plus `ssim_original` when present.
    /// Without `timing` the `ms` column is written as 0.
    pub fn write_csv_to(&self, w: impl Write, timing: bool) -> Result<()> {
        let extra = self.rows.iter().any(|r| r.ssim_original.is_some());
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = CSV_HEADER.to_vec();
        if extra {
            header.push("ssim_original");
        }
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.image.clone(),
                r.pipeline.clone(),
                r.path_count.to_string(),
                r.d_chars.to_string(),
                fixed(r.mse),
                fixed(r.ssim),
                format!("{:.3}", if timing { r.ms } else { 0.0 }),
            ];
            if extra {
                rec.push(r.ssim_original.map(fixed).unwrap_or_default());
            }
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("csv output", e))?;
        Ok(())
    }

    pub fn to_csv(&self, timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf, timing).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(f), true)
    }

    pub fn read_csv_from(r: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidArgument(format!("report lacks column '{name}'")))
        };
        let idx: Vec<usize> = CSV_HEADER.iter().map(|c| col(c)).collect::<Result<_>>()?;
        let orig = col("ssim_original").ok();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(idx[i]).unwrap_or("");
            let num = |i: usize| -> Result<f64> {
                field(i)
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad {} '{}'", CSV_HEADER[i], field(i))))
            };
            rows.push(MetricsRow {
                image: field(0).to_string(),
                pipeline: field(1).to_string(),
                path_count: num(2)? as usize,
                d_chars: num(3)? as usize,
                mse: num(4)?,
                ssim: num(5)?,
                ms: num(6)?,
                ssim_original: orig.and_then(|i| rec.get(i)).and_then(|v| v.parse().ok()),
            });
        }
        let sampled = rows.iter().map(|r| &r.image).collect::<std::collections::BTreeSet<_>>().len();
        Ok(RunReport {
            rows,
            skipped: 0,
            sampled,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(f)
    }

    pub fn pipelines(&self) -> Vec<String> {
        let mut v: Vec<String> = self.rows.iter().map(|r| r.pipeline.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn rows_for<'a>(&'a self, pipeline: &'a str) -> impl Iterator<Item = &'a MetricsRow> + 'a {
        self.rows.iter().filter(move |r| r.pipeline == pipeline)
    }

    pub fn summaries(&self) -> Result<Vec<PipelineSummary>> {
        let mut groups: BTreeMap<&str, Vec<&MetricsRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry(&r.pipeline).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|(name, rows)| {
                let of = |f: fn(&MetricsRow) -> f64| summarize(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
                Ok(PipelineSummary {
                    pipeline: name.to_string(),
                    ssim: of(|r| r.ssim)?,
                    mse: of(|r| r.mse)?,
                    log_paths: of(MetricsRow::log_paths)?,
                    path_count: of(|r| r.path_count as f64)?,
                })
            })
            .collect()
    }
}

fn write_box(path: &Path, rows: &[(String, Summary)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["pipeline", "n", "min", "q1", "median", "q3", "max", "mean", "std"])?;
    for (name, s) in rows {
        let mut rec = vec![name.clone(), s.n.to_string()];
        rec.extend([s.min, s.q1, s.median, s.q3, s.max, s.mean, s.std].map(fixed));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes `box_ssim.csv`, `box_log_paths.csv` and `ranking.csv` (pipelines
/// by descending mean SSIM) into `dir`.
pub fn compare_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if report.rows.is_empty() {
        return Err(Error::InvalidArgument("report has no rows".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sums = report.summaries()?;
    let ssim_path = dir.join("box_ssim.csv");
    write_box(&ssim_path, &sums.iter().map(|s| (s.pipeline.clone(), s.ssim)).collect::<Vec<_>>())?;
    let paths_path = dir.join("box_log_paths.csv");
    write_box(&paths_path, &sums.iter().map(|s| (s.pipeline.clone(), s.log_paths)).collect::<Vec<_>>())?;
    let ranked = ranking(&sums);
    let rank_path = dir.join("ranking.csv");
    let mut w = csv::Writer::from_path(&rank_path)?;
    w.write_record(["rank", "pipeline", "mean_ssim", "median_ssim", "mean_mse", "median_path_count"])?;
    for (i, s) in ranked.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            s.pipeline.clone(),
            fixed(s.ssim.mean),
            fixed(s.ssim.median),
            fixed(s.mse.mean),
            format!("{}", s.path_count.median),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&rank_path, e))?;
    Ok(vec![ssim_path, paths_path, rank_path])
}

/// Summaries by descending mean SSIM, ties by name.
pub fn ranking(sums: &[PipelineSummary]) -> Vec<&PipelineSummary> {
    let mut v: Vec<&PipelineSummary> = sums.iter().collect();
    v.sort_by(|a, b| b.ssim.mean.total_cmp(&a.ssim.mean).then_with(|| a.pipeline.cmp(&b.pipeline)));
    v
}
