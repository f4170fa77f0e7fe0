//! Reconstruction fidelity (PSNR) and Monte Carlo aggregation.

use crate::error::{Error, Result};
use crate::geometry::{rasterize_phantom, Grid, Phantom, Scene};

/// Finite stand-in for an infinite PSNR in numeric outputs.
pub const PSNR_INF_SENTINEL: f64 = 1e9;

/// `10·log10(peak²/MSE)`; `+∞` when the maps are identical.
pub fn psnr(recon: &[f64], truth: &[f64], peak: f64) -> Result<f64> {
    if recon.len() != truth.len() || recon.is_empty() {
        return Err(Error::dims(truth.len(), recon.len()));
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("PSNR peak must be positive, got {peak}")));
    }
    let mse = recon.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / recon.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Replaces infinities with [`PSNR_INF_SENTINEL`].
pub fn finite_psnr(x: f64) -> f64 {
    if x == f64::INFINITY {
        PSNR_INF_SENTINEL
    } else {
        x
    }
}

/// Ground-truth maps at inversion resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthProfile {
    pub eps_true: Grid<f64>,
    pub sigma_true: Grid<f64>,
    pub peak_eps: f64,
    pub peak_sigma: f64,
}

impl TruthProfile {
    pub fn new(eps_true: Grid<f64>, sigma_true: Grid<f64>) -> Result<Self> {
        if eps_true.n != sigma_true.n {
            return Err(Error::dims(eps_true.n, sigma_true.n));
        }
        let peak = |g: &Grid<f64>| g.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(TruthProfile { peak_eps: peak(&eps_true), peak_sigma: peak(&sigma_true), eps_true, sigma_true })
    }

    pub fn from_phantom(phantom: &Phantom, scene: &Scene) -> Result<Self> {
        let (eps, sigma) = rasterize_phantom(phantom, scene, None);
        Self::new(eps, sigma)
    }

    /// PSNR of a relative-permittivity map.
    pub fn psnr_eps(&self, eps_r: &[f64]) -> Result<f64> {
        psnr(eps_r, &self.eps_true.data, self.peak_eps)
    }

    /// PSNR of a conductivity map; `None` for a lossless truth.
    pub fn psnr_sigma(&self, sigma: &[f64]) -> Result<Option<f64>> {
        if self.peak_sigma > 0.0 {
            psnr(sigma, &self.sigma_true.data, self.peak_sigma).map(Some)
        } else {
            Ok(None)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub fn five_number(values: &[f64]) -> Result<FiveNumber> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values to summarize".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(FiveNumber {
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// PSNR trajectory of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub epochs: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStatistics {
    pub epochs: Vec<usize>,
    pub mean: Vec<f64>,
    /// Population standard deviation per epoch.
    pub std: Vec<f64>,
    pub final_values: Vec<f64>,
    pub final_summary: FiveNumber,
    /// Index of the run whose final value is the (lower) median.
    pub median_run: usize,
}

pub fn summarize_runs(curves: &[Curve]) -> Result<RunStatistics> {
    let first = curves.first().ok_or_else(|| Error::InvalidArgument("no runs to summarize".into()))?;
    if first.epochs.is_empty() {
        return Err(Error::InvalidArgument("run has no logged values".into()));
    }
    for c in curves {
        if c.epochs != first.epochs || c.values.len() != c.epochs.len() {
            return Err(Error::InvalidArgument("runs have mismatched epoch axes".into()));
        }
    }
    let n = curves.len() as f64;
    let len = first.epochs.len();
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for i in 0..len {
        let m = curves.iter().map(|c| c.values[i]).sum::<f64>() / n;
        let var = curves.iter().map(|c| (c.values[i] - m).powi(2)).sum::<f64>() / n;
        mean[i] = m;
        std[i] = var.sqrt();
    }
    let final_values: Vec<f64> = curves.iter().map(|c| c.values[len - 1]).collect();
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by(|&a, &b| final_values[a].total_cmp(&final_values[b]).then(a.cmp(&b)));
    let median_run = order[(curves.len() - 1) / 2];
    Ok(RunStatistics {
        epochs: first.epochs.clone(),
        mean,
        std,
        final_summary: five_number(&final_values)?,
        final_values,
        median_run,
    })
}
