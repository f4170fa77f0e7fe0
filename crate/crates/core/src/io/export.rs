//! Result writers: epoch logs, map grids, grayscale images, run summaries.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use super::write_new;
use crate::error::Result;
use crate::loss::FrequencyLoss;
use crate::metrics::{finite_psnr, RunStatistics};
use crate::scalar::Real;
use crate::train::{EpochLog, MonteCarlo, TrainConfig, TrainRun};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn psnr_cell(v: Option<f64>) -> String {
    opt(v.map(finite_psnr))
}

/// One row per epoch; per-frequency columns stay blank while a frequency is inactive.
pub fn epoch_csv(logs: &[EpochLog], freqs: &[f64]) -> String {
    let mut s = String::from("epoch,stage,beta");
    for term in ["l_data", "l_state", "l_cross"] {
        for i in 0..freqs.len() {
            write!(s, ",{term}_f{i}").unwrap();
        }
    }
    s.push_str(",alpha,gamma,psnr_eps,psnr_sigma\n");
    for l in logs {
        write!(s, "{},{},{}", l.epoch, l.stage, l.beta).unwrap();
        let lookup = |f: f64| l.losses.per_freq.iter().find(|t| t.freq == f);
        let picks: [fn(&FrequencyLoss) -> f64; 3] = [|t| t.data, |t| t.state, |t| t.cross];
        for pick in picks {
            for &f in freqs {
                write!(s, ",{}", opt(lookup(f).map(pick))).unwrap();
            }
        }
        writeln!(s, ",{},{},{},{}", opt(l.alpha), opt(l.gamma), psnr_cell(l.psnr_eps), psnr_cell(l.psnr_sigma)).unwrap();
    }
    s
}

/// `n` lines of `n` values, in pixel order (first line is the lowest `y` row).
pub fn grid_csv(values: &[f64], n: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(n) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Binary 8-bit PGM with `[min, max]` stretched to `[0, 255]` and `+y` up.
pub fn pgm(values: &[f64], n: usize) -> (Vec<u8>, f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for row in values.chunks(n).rev() {
        out.extend(row.iter().map(|&v| if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 }));
    }
    (out, lo, hi)
}

/// Writes `<stem>.csv`, `<stem>.pgm` and the `<stem>.range.txt` sidecar.
pub fn write_map(dir: &Path, stem: &str, values: &[f64], n: usize, force: bool) -> Result<()> {
    write_new(&dir.join(format!("{stem}.csv")), grid_csv(values, n).as_bytes(), force)?;
    let (img, lo, hi) = pgm(values, n);
    write_new(&dir.join(format!("{stem}.pgm")), &img, force)?;
    write_new(&dir.join(format!("{stem}.range.txt")), format!("min {lo}\nmax {hi}\n").as_bytes(), force)
}

pub fn run_summary<T: Real>(run: &TrainRun<T>, cfg: &TrainConfig) -> String {
    let last = run.logs.last();
    let summary = json!({
        "mode": run.mode.to_string(),
        "strategy": run.strategy.to_string(),
        "seed": run.seed,
        "epochs": run.logs.len(),
        "requested_epochs": cfg.epochs,
        "final_total_loss": last.map(|l| l.losses.total),
        "final_l_data": last.map(|l| l.losses.per_freq.iter().map(|t| t.data).collect::<Vec<_>>()),
        "final_psnr_eps": run.final_psnr().map(finite_psnr),
        "final_psnr_sigma": run.logs.iter().rev().find_map(|l| l.psnr_sigma).map(finite_psnr),
        "eps_r_range": [min(&run.final_eps_r), max(&run.final_eps_r)],
        "sigma_range": [min(&run.final_sigma), max(&run.final_sigma)],
    });
    serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
}

fn min(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::min)
}

fn max(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

/// Per-epoch mean and standard deviation of PSNR across runs.
pub fn curves_csv(stats: &RunStatistics) -> String {
    let mut s = String::from("epoch,mean_psnr,std_psnr\n");
    for ((e, m), d) in stats.epochs.iter().zip(&stats.mean).zip(&stats.std) {
        writeln!(s, "{e},{},{}", finite_psnr(*m), d).unwrap();
    }
    s
}

/// Final PSNR of every run, for boxplots.
pub fn finals_csv<T: Real>(mc: &MonteCarlo<T>) -> String {
    let mut s = String::from("seed,final_psnr_eps,final_psnr_sigma\n");
    for r in &mc.runs {
        let sig = r.logs.iter().rev().find_map(|l| l.psnr_sigma);
        writeln!(s, "{},{},{}", r.seed, opt(r.final_psnr().map(finite_psnr)), psnr_cell(sig)).unwrap();
    }
    s
}

pub fn monte_carlo_summary<T: Real>(mc: &MonteCarlo<T>) -> String {
    let stats = mc.stats.as_ref().map(|st| {
        let f = &st.final_summary;
        json!({
            "min": finite_psnr(f.min),
            "q1": finite_psnr(f.q1),
            "median": finite_psnr(f.median),
            "q3": finite_psnr(f.q3),
            "max": finite_psnr(f.max),
            "iqr": f.iqr(),
            "mean": finite_psnr(st.final_values.iter().sum::<f64>() / st.final_values.len() as f64),
            "median_run_seed": mc.runs[st.median_run].seed,
        })
    });
    let summary = json!({
        "runs": mc.runs.len(),
        "failures": mc.failures.iter().map(|(seed, why)| json!({"seed": seed, "error": why})).collect::<Vec<_>>(),
        "final_psnr_eps": stats,
    });
    serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
}
