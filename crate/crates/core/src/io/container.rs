//! `MISI1` dataset container.
//!
//! Layout (all integers u64, all reals f64, little-endian):
//! magic `MISI1`; `n_freq n_tx n_rx n_grid`; `doi_min doi_max obs_radius`;
//! frequencies; tx positions; per-Tx rx positions; `snr_applied` (NaN when
//! clean); then the payload: scattered data `(re, im)` ordered frequency, Tx,
//! Rx, followed by incident fields ordered frequency, Tx, row-major pixel.

use std::path::Path;

use super::{read_file, write_new, ByteReader, ByteWriter};
use crate::batch::Batch;
use crate::error::Result;
use crate::forward::MeasurementSet;
use crate::geometry::Scene;
use crate::scalar::{Real, C};

pub const MAGIC: &[u8; 5] = b"MISI1";

pub fn payload_len(n_freq: usize, n_tx: usize, n_rx: usize, n_grid: usize) -> usize {
    2 * 8 * (n_freq * n_tx * n_rx + n_freq * n_tx * n_grid * n_grid)
}

pub fn encode<T: Real>(m: &MeasurementSet<T>) -> Result<Vec<u8>> {
    m.validate()?;
    let s = &m.scene;
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    for n in [s.n_freq(), s.n_tx(), s.n_rx(), s.n_grid] {
        w.u64(n as u64);
    }
    w.f64s(s.doi_min.into_iter().chain(s.doi_max).chain([s.obs_radius]));
    w.f64s(s.frequencies.iter().copied());
    w.f64s(s.tx_positions.iter().flatten().copied());
    w.f64s(s.rx_positions.iter().flatten().flatten().copied());
    w.f64(m.snr_applied.unwrap_or(f64::NAN));
    for b in m.scattered.iter().chain(&m.incident) {
        w.f64s(b.data.iter().flat_map(|z| [z.re.as_f64(), z.im.as_f64()]));
    }
    Ok(w.buf)
}

pub fn decode<T: Real>(bytes: &[u8], path: &Path) -> Result<MeasurementSet<T>> {
    let mut r = ByteReader::new(bytes, path);
    let magic = r.take(5)?;
    if magic != MAGIC {
        return r.fail(format!("bad magic {:?}", String::from_utf8_lossy(magic)));
    }
    let n_freq = r.count("frequency count")?;
    let n_tx = r.count("transmitter count")?;
    let n_rx = r.count("receiver count")?;
    let n_grid = r.count("grid size")?;
    let head = r.f64s(5)?;
    let frequencies = r.f64s(n_freq)?;
    let pts = |v: Vec<f64>| v.chunks_exact(2).map(|c| [c[0], c[1]]).collect::<Vec<_>>();
    let tx_positions = pts(r.f64s(2 * n_tx)?);
    let rx_flat = pts(r.f64s(2 * n_tx * n_rx)?);
    let rx_positions = if n_rx == 0 { vec![vec![]; n_tx] } else { rx_flat.chunks(n_rx).map(<[_]>::to_vec).collect() };
    let snr = r.f64()?;
    let scene = Scene {
        doi_min: [head[0], head[1]],
        doi_max: [head[2], head[3]],
        n_grid,
        tx_positions,
        rx_positions,
        frequencies,
        obs_radius: head[4],
    };
    if let Err(e) = scene.validate() {
        return r.fail(e.to_string());
    }
    let remaining = bytes.len() - 5 - 8 * (4 + 5 + n_freq + 2 * n_tx + 2 * n_tx * n_rx + 1);
    let (f, t) = (n_freq as u128, n_tx as u128);
    let want = 16 * (f * t * n_rx as u128 + f * t * (n_grid as u128).pow(2));
    if remaining as u128 != want {
        return r.fail(format!("payload is {remaining} bytes, expected {want}"));
    }
    let mut batch = |cols: usize| -> Result<Batch<T>> {
        let v = r.f64s(2 * n_tx * cols)?;
        let data = v.chunks_exact(2).map(|c| C::new(T::of(c[0]), T::of(c[1]))).collect();
        Batch::from_vec(n_tx, cols, data)
    };
    let scattered = (0..n_freq).map(|_| batch(n_rx)).collect::<Result<Vec<_>>>()?;
    let incident = (0..n_freq).map(|_| batch(n_grid * n_grid)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let m = MeasurementSet { scene, scattered, incident, snr_applied: (!snr.is_nan()).then_some(snr) };
    m.validate()?;
    Ok(m)
}

pub fn write<T: Real>(m: &MeasurementSet<T>, path: &Path, force: bool) -> Result<()> {
    write_new(path, &encode(m)?, force)
}

pub fn read<T: Real>(path: &Path) -> Result<MeasurementSet<T>> {
    decode(&read_file(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{add_noise, synthesize_measurements, SynthOptions};
    use crate::geometry::{build_fresnel_like_scene, Phantom};

    fn sample() -> MeasurementSet<f64> {
        let scene = build_fresnel_like_scene(3, 60.0, 20.0, 3.0, 0.5, 6, vec![0.3e9, 0.5e9]).unwrap();
        let m = synthesize_measurements(&scene, &Phantom::disk([0.1, 0.0], 0.2, 2.5, 0.01), SynthOptions::new(12)).unwrap();
        add_noise(&m, 10.0, 3).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = sample();
        let bytes = encode(&m).unwrap();
        let s = &m.scene;
        let header = 5 + 8 * (4 + 5 + 2 + 2 * 3 + 2 * 3 * s.n_rx() + 1);
        assert_eq!(bytes.len(), header + payload_len(2, 3, s.n_rx(), 6));
        let back: MeasurementSet<f64> = decode(&bytes, Path::new("x")).unwrap();
        assert_eq!(back, m);
        assert_eq!(encode(&back).unwrap(), bytes);

        let mut clean = m.clone();
        clean.snr_applied = None;
        let back: MeasurementSet<f64> = decode(&encode(&clean).unwrap(), Path::new("x")).unwrap();
        assert_eq!(back.snr_applied, None);
    }

    #[test]
    fn f32_data_survives_the_f64_container() {
        let m64 = sample();
        let bytes = encode(&m64).unwrap();
        let m32: MeasurementSet<f32> = decode(&bytes, Path::new("x")).unwrap();
        let again: MeasurementSet<f32> = decode(&encode(&m32).unwrap(), Path::new("x")).unwrap();
        assert_eq!(again, m32);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode(&sample()).unwrap();
        let p = Path::new("x");
        let mut bad = bytes.clone();
        bad[4] = b'2';
        assert!(decode::<f64>(&bad, p).unwrap_err().to_string().contains("magic"));
        assert!(decode::<f64>(&bytes[..bytes.len() - 8], p).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode::<f64>(&long, p).is_err());
        assert!(decode::<f64>(&bytes[..3], p).is_err());
        let mut huge = bytes.clone();
        huge[5..13].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode::<f64>(&huge, p).is_err());
    }

    #[test]
    fn existing_files_need_force() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.misi");
        let m = sample();
        write(&m, &path, false).unwrap();
        assert!(matches!(write(&m, &path, false), Err(crate::error::Error::Io { .. })));
        write(&m, &path, true).unwrap();
        assert_eq!(read::<f64>(&path).unwrap(), m);
    }
}
