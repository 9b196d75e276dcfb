use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use expandforge::eval::median;
use expandforge::Error;

use crate::commands::MetricsFile;
use crate::{CmdResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Aggregate {
    /// One row per metrics file.
    None,
    /// One row per (method, ratio) with medians over seeds.
    Median,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics JSON files written by traineval.
    #[arg(long, num_args = 1.., required = true)]
    metrics: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Aggregate::None)]
    aggregate: Aggregate,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

const HEADER: [&str; 6] = ["method", "ratio", "seed", "accuracy", "macro_accuracy", "covering_radius"];

fn load(path: &PathBuf) -> Result<MetricsFile, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::from_error("", Error::io(path, e)))?;
    serde_json::from_slice(&bytes).map_err(|e| Failure::from_error("", Error::Json { path: path.clone(), source: e }))
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

pub fn report(a: ReportArgs) -> CmdResult {
    let files = a.metrics.iter().map(load).collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<[String; 6]> = Vec::new();
    match a.aggregate {
        Aggregate::None => {
            for f in &files {
                rows.push([
                    f.method.clone(),
                    f.ratio.to_string(),
                    f.seed.to_string(),
                    num(f.metrics.accuracy),
                    num(f.metrics.macro_accuracy),
                    num(f.covering_radius),
                ]);
            }
        }
        Aggregate::Median => {
            let mut groups: Vec<(String, usize, Vec<&MetricsFile>)> = Vec::new();
            for f in &files {
                match groups.iter_mut().find(|(m, r, _)| *m == f.method && *r == f.ratio) {
                    Some(g) => g.2.push(f),
                    None => groups.push((f.method.clone(), f.ratio, vec![f])),
                }
            }
            for (method, ratio, fs) in groups {
                let med = |get: fn(&MetricsFile) -> f64| median(&fs.iter().map(|f| get(f)).collect::<Vec<_>>());
                rows.push([
                    method,
                    ratio.to_string(),
                    "median".to_string(),
                    num(med(|f| f.metrics.accuracy)),
                    num(med(|f| f.metrics.macro_accuracy)),
                    num(med(|f| f.covering_radius)),
                ]);
            }
        }
    }
    let io = |e: csv::Error| Failure { code: 2, message: format!("{}: {e}", a.out.display()) };
    let mut w = csv::Writer::from_path(&a.out).map_err(io)?;
    w.write_record(HEADER).map_err(io)?;
    for r in &rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::from_error("", Error::io(&a.out, e)))?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}
