//! Converter for measured scattered-field tables.
//!
//! The table is plain text, one sample per line:
//! `freq_hz tx_index rx_angle_deg re im`, separated by whitespace or commas.
//! Blank lines and lines starting with `#` are ignored. Fields are assumed
//! calibrated; incident fields are synthesized from the line-source model.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::forward::MeasurementSet;
use crate::geometry::Scene;
use crate::greens::incident_field;
use crate::scalar::{Real, C};

/// Antenna ring and inversion grid for a measured table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredGeometry {
    pub radius: f64,
    pub doi_half: f64,
    pub n_grid: usize,
    /// Transmitter angles; evenly spaced from 0° when absent.
    #[serde(default)]
    pub tx_angles_deg: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasuredRow {
    /// 1-based line number in the source text.
    pub line: usize,
    pub freq: f64,
    pub tx: usize,
    pub angle_deg: f64,
    pub re: f64,
    pub im: f64,
}

pub fn parse_table(text: &str) -> Result<Vec<MeasuredRow>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let bad = |m: &str| Error::MeasuredTable(format!("line {line}: {m}"));
        if fields.len() != 5 {
            return Err(bad(&format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |k: usize| fields[k].parse::<f64>().map_err(|_| bad(&format!("cannot parse {:?}", fields[k])));
        let tx = fields[1].parse::<usize>().map_err(|_| bad(&format!("bad transmitter index {:?}", fields[1])))?;
        let row = MeasuredRow { line, freq: num(0)?, tx, angle_deg: num(2)?, re: num(3)?, im: num(4)? };
        if !(row.freq > 0.0 && row.freq.is_finite()) || ![row.angle_deg, row.re, row.im].iter().all(|v| v.is_finite()) {
            return Err(bad("non-finite or non-positive value"));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::MeasuredTable("table has no samples".into()));
    }
    Ok(rows)
}

/// Angles compare at micro-degree resolution.
fn angle_key(deg: f64) -> i64 {
    (deg.rem_euclid(360.0) * 1e6).round() as i64 % 360_000_000
}

const MAX_LISTED: usize = 20;

fn listing(items: &[String]) -> String {
    let mut s = items.iter().take(MAX_LISTED).cloned().collect::<Vec<_>>().join("; ");
    if items.len() > MAX_LISTED {
        s.push_str(&format!("; ... ({} in total)", items.len()));
    }
    s
}

/// Builds a dataset from table rows, keeping every `stride`-th receiver.
///
/// Receivers of each transmitter are ordered by angle measured from that
/// transmitter; the first one is always kept.
pub fn convert<T: Real>(rows: &[MeasuredRow], geom: &MeasuredGeometry, stride: usize) -> Result<MeasurementSet<T>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let mut seen: HashMap<(u64, usize, i64), usize> = HashMap::new();
    let mut dups = Vec::new();
    for r in rows {
        if let Some(first) = seen.insert((r.freq.to_bits(), r.tx, angle_key(r.angle_deg)), r.line) {
            dups.push(format!("lines {first} and {} (f={} Hz, tx={}, angle={}°)", r.line, r.freq, r.tx, r.angle_deg));
        }
    }
    if !dups.is_empty() {
        return Err(Error::MeasuredTable(format!("duplicate samples: {}", listing(&dups))));
    }

    let mut freqs: Vec<f64> = rows.iter().map(|r| r.freq).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    let n_tx = rows.iter().map(|r| r.tx).max().unwrap() + 1;
    let tx_deg: Vec<f64> = match &geom.tx_angles_deg {
        Some(a) if a.len() != n_tx => {
            return Err(Error::MeasuredTable(format!("{} transmitter angles given, table uses {n_tx}", a.len())));
        }
        Some(a) => a.clone(),
        None => (0..n_tx).map(|p| 360.0 * p as f64 / n_tx as f64).collect(),
    };

    // per transmitter: angle key -> angle, ordered by offset from the transmitter
    let mut angles: Vec<BTreeMap<i64, f64>> = vec![BTreeMap::new(); n_tx];
    let mut values: HashMap<(u64, usize, i64), (f64, f64)> = HashMap::new();
    for r in rows {
        let key = angle_key(r.angle_deg);
        let offset = angle_key(r.angle_deg - tx_deg[r.tx]);
        angles[r.tx].insert(offset, r.angle_deg);
        values.insert((r.freq.to_bits(), r.tx, key), (r.re, r.im));
    }
    let mut gaps = Vec::new();
    for (tx, set) in angles.iter().enumerate() {
        if set.is_empty() {
            gaps.push(format!("tx={tx}: no samples"));
        }
        for &f in &freqs {
            for &a in set.values() {
                if !values.contains_key(&(f.to_bits(), tx, angle_key(a))) {
                    gaps.push(format!("f={f} Hz, tx={tx}, angle={a}°"));
                }
            }
        }
    }
    if !gaps.is_empty() {
        return Err(Error::MeasuredTable(format!("missing samples: {}", listing(&gaps))));
    }

    let kept: Vec<Vec<f64>> = angles.iter().map(|set| set.values().copied().step_by(stride).collect()).collect();
    let n_rx = kept[0].len();
    if let Some(tx) = kept.iter().position(|k| k.len() != n_rx) {
        return Err(Error::MeasuredTable(format!(
            "transmitter {tx} keeps {} receivers, transmitter 0 keeps {n_rx}",
            kept[tx].len()
        )));
    }
    let on_ring = |deg: f64| {
        let t = deg.to_radians();
        [geom.radius * t.cos(), geom.radius * t.sin()]
    };
    let scene = Scene::new(
        [-geom.doi_half, -geom.doi_half],
        [geom.doi_half, geom.doi_half],
        geom.n_grid,
        tx_deg.iter().map(|&d| on_ring(d)).collect(),
        kept.iter().map(|k| k.iter().map(|&d| on_ring(d)).collect()).collect(),
        freqs.clone(),
        geom.radius,
    )?;
    let mut scattered = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let mut y = Batch::zeros(n_tx, n_rx);
        for (tx, ks) in kept.iter().enumerate() {
            for (q, &a) in ks.iter().enumerate() {
                let (re, im) = values[&(f.to_bits(), tx, angle_key(a))];
                y.row_mut(tx)[q] = C::new(T::of(re), T::of(im));
            }
        }
        scattered.push(y);
    }
    let incident = freqs.iter().map(|&f| incident_field::<T>(&scene, f)).collect();
    Ok(MeasurementSet { scene, scattered, incident, snr_applied: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> MeasuredGeometry {
        MeasuredGeometry { radius: 1.67, doi_half: 0.075, n_grid: 8, tx_angles_deg: None }
    }

    /// Fresnel-style table: receivers from tx+60° to tx+300° every degree.
    fn table(n_tx: usize, freqs: &[f64]) -> String {
        let mut s = String::from("# freq tx angle re im\n");
        for &f in freqs {
            for tx in 0..n_tx {
                let t0 = 360.0 * tx as f64 / n_tx as f64;
                for q in 0..241 {
                    let a = (t0 + 60.0 + q as f64).rem_euclid(360.0);
                    s.push_str(&format!("{f:e} {tx} {a} {} {}\n", q as f64 * 1e-3, -(tx as f64)));
                }
            }
        }
        s
    }

    #[test]
    fn five_degree_stride_keeps_49_receivers() {
        let rows = parse_table(&table(4, &[2e9, 4e9])).unwrap();
        let m: MeasurementSet<f64> = convert(&rows, &geom(), 5).unwrap();
        assert_eq!(m.scene.n_rx(), 49);
        assert_eq!(m.scene.frequencies, vec![2e9, 4e9]);
        // first kept receiver sits 60° past its transmitter, then every 5°
        let tx1 = 90f64.to_radians();
        let want = (tx1 + 60f64.to_radians() + 10f64.to_radians()).sin() * 1.67;
        assert!((m.scene.rx_positions[1][2][1] - want).abs() < 1e-12);
        assert_eq!(m.scattered[1].row(3)[2], C::new(10.0 * 1e-3, -3.0));
        assert_eq!(m.incident[0].cols, 64);
    }

    #[test]
    fn unit_stride_passes_everything_through() {
        let rows = parse_table(&table(2, &[3e9])).unwrap();
        let m: MeasurementSet<f64> = convert(&rows, &geom(), 1).unwrap();
        assert_eq!(m.scene.n_rx(), 241);
        for tx in 0..2 {
            for q in 0..241 {
                assert_eq!(m.scattered[0].row(tx)[q], C::new(q as f64 * 1e-3, -(tx as f64)));
            }
        }
    }

    #[test]
    fn duplicates_are_reported_by_line() {
        let mut text = table(2, &[3e9]);
        text.push_str("3e9, 1, 240.0, 0.5, 0.5\n");
        let rows = parse_table(&text).unwrap();
        let err = convert::<f64>(&rows, &geom(), 5).unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains("lines 243 and 484"), "{err}");
    }

    #[test]
    fn gaps_are_listed() {
        let text: String = table(2, &[3e9, 4e9])
            .lines()
            .filter(|l| !l.starts_with("4e9 1 250 "))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = convert::<f64>(&parse_table(&text).unwrap(), &geom(), 5).unwrap_err().to_string();
        assert!(err.contains("missing") && err.contains("f=4000000000 Hz, tx=1, angle=250°"), "{err}");
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_table("3e9 0 10 1.0\n").unwrap_err().to_string().contains("line 1"));
        assert!(parse_table("\n3e9 x 10 1 2\n").unwrap_err().to_string().contains("line 2"));
        assert!(parse_table("# only comments\n").is_err());
        assert!(parse_table("-3e9 0 10 1 2\n").is_err());
        let rows = parse_table(&table(2, &[3e9])).unwrap();
        assert!(convert::<f64>(&rows, &geom(), 0).is_err());
        let g = MeasuredGeometry { tx_angles_deg: Some(vec![0.0]), ..geom() };
        assert!(convert::<f64>(&rows, &g, 5).is_err());
    }
}
