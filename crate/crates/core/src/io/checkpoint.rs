//! `MNET1` network checkpoint.
//!
//! Layout (little-endian): magic `MNET1`; `n_features`, hidden-layer count
//! and widths as u64; `sigma_ff eps_max sigma_max lr beta1 beta2 eps_adam
//! output_bias` as f64; Adam step and parameter count as u64; then f64
//! arrays: Fourier features (row-major), parameters in declaration order
//! (per layer: direction, gain, bias), Adam first and second moments.

use std::path::Path;

use ndarray::Array2;

use super::{read_file, write_new, ByteReader, ByteWriter};
use crate::error::Result;
use crate::net::{AdamState, NetConfig, NetworkState};
use crate::scalar::Real;

pub const MAGIC: &[u8; 5] = b"MNET1";

pub fn encode<T: Real>(net: &NetworkState<T>) -> Vec<u8> {
    let c = &net.cfg;
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    w.u64(c.n_features as u64);
    w.u64(c.hidden.len() as u64);
    c.hidden.iter().for_each(|&h| w.u64(h as u64));
    w.f64s([c.sigma_ff, c.eps_max, c.sigma_max, c.lr, c.beta1, c.beta2, c.eps_adam, c.output_bias]);
    w.u64(net.adam.step);
    w.u64(net.params.len() as u64);
    for xs in [net.features.as_slice().expect("standard layout"), &net.params, &net.adam.m, &net.adam.v] {
        w.f64s(xs.iter().map(|x| x.as_f64()));
    }
    w.buf
}

pub fn decode<T: Real>(bytes: &[u8], path: &Path) -> Result<NetworkState<T>> {
    let mut r = ByteReader::new(bytes, path);
    let magic = r.take(5)?;
    if magic != MAGIC {
        return r.fail(format!("bad magic {:?}", String::from_utf8_lossy(magic)));
    }
    let n_features = r.count("feature count")?;
    let depth = r.count("layer count")?;
    let hidden = (0..depth).map(|_| r.count("layer width")).collect::<Result<Vec<_>>>()?;
    let h = r.f64s(8)?;
    let cfg = NetConfig {
        n_features,
        hidden,
        sigma_ff: h[0],
        eps_max: h[1],
        sigma_max: h[2],
        lr: h[3],
        beta1: h[4],
        beta2: h[5],
        eps_adam: h[6],
        output_bias: h[7],
    };
    if let Err(e) = cfg.validate() {
        return r.fail(e.to_string());
    }
    let step = r.u64()?;
    let n = r.count("parameter count")?;
    let mut net = NetworkState::<T>::skeleton(&cfg);
    if n != net.n_params() {
        return r.fail(format!("{n} parameters recorded, architecture has {}", net.n_params()));
    }
    let mut arr = |len: usize| -> Result<Vec<T>> { Ok(r.f64s(len)?.into_iter().map(T::of).collect()) };
    net.features = Array2::from_shape_vec((n_features, 2), arr(2 * n_features)?).expect("shape checked");
    net.params = arr(n)?;
    net.adam = AdamState { m: arr(n)?, v: arr(n)?, step };
    r.finish()?;
    Ok(net)
}

pub fn write<T: Real>(net: &NetworkState<T>, path: &Path, force: bool) -> Result<()> {
    write_new(path, &encode(net), force)
}

pub fn read<T: Real>(path: &Path) -> Result<NetworkState<T>> {
    decode(&read_file(path)?, path)
}
