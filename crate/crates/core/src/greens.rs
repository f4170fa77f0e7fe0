//! Discretized Green's operators for the 2D TM scalar problem.
//!
//! Pixels are replaced by equal-area circles of radius `a = Δ/√π`, giving the
//! closed-form interaction coefficients below. Time convention is `exp(+jωt)`,
//! so every Hankel function is of the second kind.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::geometry::{wavenumber, Point, Scene};
use crate::scalar::{c64_to, Real, C};
use crate::special::{bessel_j1, hankel2_0, hankel2_1};

const NEG_HALF_J: Complex64 = Complex64::new(0.0, -0.5);

/// Interaction coefficients for one frequency and cell size.
#[derive(Clone, Copy, Debug)]
pub struct CellCoupling {
    pub k_b: f64,
    /// Equal-area-circle radius.
    pub radius: f64,
    /// Multiplies `H₀⁽²⁾(k_b ρ)` for distinct source and observation points.
    pub mutual: Complex64,
    pub self_term: Complex64,
}

impl CellCoupling {
    pub fn new(f: f64, cell: f64) -> Self {
        let k_b = wavenumber(f);
        let radius = cell / std::f64::consts::PI.sqrt();
        let ka = k_b * radius;
        let pi = std::f64::consts::PI;
        let mutual = NEG_HALF_J * (pi * ka * bessel_j1(ka));
        let self_term = NEG_HALF_J * (pi * ka * hankel2_1(ka) - Complex64::new(0.0, 2.0));
        CellCoupling { k_b, radius, mutual, self_term }
    }

    /// Kernel entry for two pixel centers a distance `rho` apart (`rho = 0` is the self cell).
    pub fn at(&self, rho: f64) -> Complex64 {
        if rho == 0.0 {
            self.self_term
        } else {
            self.mutual * hankel2_0(self.k_b * rho)
        }
    }
}

/// Field radiated by a unit line source: `(-j/4)·H₀⁽²⁾(k_b ρ)`.
pub fn line_source(k_b: f64, rho: f64) -> Complex64 {
    Complex64::new(0.0, -0.25) * hankel2_0(k_b * rho)
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `𝓖_D`: domain-to-domain operator applied as a zero-padded 2D circular convolution.
pub struct DomainOperator<T: Real> {
    pub freq: f64,
    pub n_grid: usize,
    pub pad_factor: usize,
    pub cell_area: f64,
    pub coupling: CellCoupling,
    /// Spectrum of the circulant-embedded kernel, stored transposed (column-major).
    kernel_fft: Vec<C<T>>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for DomainOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainOperator")
            .field("freq", &self.freq)
            .field("n_grid", &self.n_grid)
            .field("pad_factor", &self.pad_factor)
            .finish()
    }
}

/// Reusable FFT buffers for one caller of [`DomainOperator::apply_into`].
pub struct Scratch<T: Real> {
    buf: Vec<C<T>>,
    tbuf: Vec<C<T>>,
    fft: Vec<C<T>>,
}

impl<T: Real> DomainOperator<T> {
    pub fn build(scene: &Scene, f: f64, pad_factor: usize) -> Result<Self> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::InvalidArgument(format!("frequency must be positive, got {f}")));
        }
        if !(pad_factor == 2 || pad_factor == 4) {
            return Err(Error::InvalidArgument(format!("pad_factor must be 2 or 4, got {pad_factor}")));
        }
        let n = scene.n_grid;
        let p = pad_factor * n;
        let cell = scene.cell_size();
        let coupling = CellCoupling::new(f, cell);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(p);
        let inv = planner.plan_fft_inverse(p);

        let mut kernel = vec![C::new(T::zero(), T::zero()); p * p];
        let span = n as isize - 1;
        for dy in -span..=span {
            for dx in -span..=span {
                let rho = cell * ((dx * dx + dy * dy) as f64).sqrt();
                let r = dy.rem_euclid(p as isize) as usize;
                let c = dx.rem_euclid(p as isize) as usize;
                kernel[r * p + c] = c64_to(coupling.at(rho));
            }
        }
        let mut op = DomainOperator {
            freq: f,
            n_grid: n,
            pad_factor,
            cell_area: cell * cell,
            coupling,
            kernel_fft: Vec::new(),
            fwd,
            inv,
        };
        let mut s = op.scratch();
        op.forward_transposed(&kernel, p, p, &mut s);
        op.kernel_fft = s.tbuf;
        Ok(op)
    }

    fn padded(&self) -> usize {
        self.pad_factor * self.n_grid
    }

    pub fn scratch(&self) -> Scratch<T> {
        let p = self.padded();
        let len = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        Scratch {
            buf: vec![C::new(T::zero(), T::zero()); p * p],
            tbuf: vec![C::new(T::zero(), T::zero()); p * p],
            fft: vec![C::new(T::zero(), T::zero()); len],
        }
    }

    /// 2D forward FFT of a `rows × width` block (zero-extended to `p × p`);
    /// the spectrum lands in `s.tbuf` in column-major order.
    fn forward_transposed(&self, src: &[C<T>], rows: usize, width: usize, s: &mut Scratch<T>) {
        let p = self.padded();
        let zero = C::new(T::zero(), T::zero());
        s.buf.iter_mut().for_each(|z| *z = zero);
        for r in 0..rows {
            let dst = &mut s.buf[r * p..(r + 1) * p];
            dst[..width].copy_from_slice(&src[r * width..(r + 1) * width]);
            self.fwd.process_with_scratch(dst, &mut s.fft);
        }
        transpose(&s.buf, &mut s.tbuf, p);
        self.fwd.process_with_scratch(&mut s.tbuf, &mut s.fft);
    }

    fn convolve_row(&self, src: &[C<T>], dst: &mut [C<T>], adjoint: bool, s: &mut Scratch<T>) {
        let n = self.n_grid;
        let p = self.padded();
        self.forward_transposed(src, n, n, s);
        if adjoint {
            s.tbuf.iter_mut().zip(&self.kernel_fft).for_each(|(x, k)| *x *= k.conj());
        } else {
            s.tbuf.iter_mut().zip(&self.kernel_fft).for_each(|(x, k)| *x *= k);
        }
        self.inv.process_with_scratch(&mut s.tbuf, &mut s.fft);
        let norm = T::one() / T::of((p * p) as f64);
        for r in 0..n {
            let row = &mut s.buf[r * p..(r + 1) * p];
            for (c, z) in row.iter_mut().enumerate() {
                *z = s.tbuf[c * p + r];
            }
            self.inv.process_with_scratch(row, &mut s.fft);
            for (d, z) in dst[r * n..(r + 1) * n].iter_mut().zip(row.iter()) {
                *d = z * norm;
            }
        }
    }

    /// Operator with the complex-conjugated kernel (the opposite time convention).
    pub fn conjugated(&self) -> Self {
        DomainOperator {
            freq: self.freq,
            n_grid: self.n_grid,
            pad_factor: self.pad_factor,
            cell_area: self.cell_area,
            coupling: self.coupling,
            kernel_fft: self.kernel_fft.iter().map(|z| z.conj()).collect(),
            fwd: self.fwd.clone(),
            inv: self.inv.clone(),
        }
    }

    /// Applies the operator (or its adjoint) to one pixel vector.
    pub fn apply_into(&self, src: &[C<T>], dst: &mut [C<T>], adjoint: bool, s: &mut Scratch<T>) {
        self.convolve_row(src, dst, adjoint, s);
    }

    fn apply_impl(&self, src: &Batch<T>, adjoint: bool) -> Result<Batch<T>> {
        let np = self.n_grid * self.n_grid;
        if src.cols != np {
            return Err(Error::dims(np, src.cols));
        }
        let mut out = Batch::zeros(src.rows, np);
        let mut s = self.scratch();
        for r in 0..src.rows {
            self.convolve_row(src.row(r), out.row_mut(r), adjoint, &mut s);
        }
        Ok(out)
    }

    /// `𝓖_D J` for every row of the batch.
    pub fn apply(&self, sources: &Batch<T>) -> Result<Batch<T>> {
        self.apply_impl(sources, false)
    }

    /// `𝓖_Dᴴ w` under `⟨a, b⟩ = Σ conj(a)·b`.
    pub fn apply_adjoint(&self, fields: &Batch<T>) -> Result<Batch<T>> {
        self.apply_impl(fields, true)
    }
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], p: usize) {
    const TILE: usize = 16;
    for rb in (0..p).step_by(TILE) {
        for cb in (0..p).step_by(TILE) {
            for r in rb..(rb + TILE).min(p) {
                for c in cb..(cb + TILE).min(p) {
                    dst[c * p + r] = src[r * p + c];
                }
            }
        }
    }
}

/// `𝓖_S`: dense domain-to-receiver operator.
///
/// Receivers shared between transmitters are stored once; each transmitter
/// keeps the list of rows it observes.
#[derive(Clone, Debug)]
pub struct SurfaceOperator<T> {
    pub freq: f64,
    pub n_pixels: usize,
    pub receivers: Vec<Point>,
    matrix: Vec<C<T>>,
    /// Real and imaginary parts of `matrix` for real matrix products.
    m_re: Array2<T>,
    m_im: Array2<T>,
    tx_rows: Vec<Vec<usize>>,
}

impl<T: Real> SurfaceOperator<T> {
    pub fn build(scene: &Scene, f: f64) -> Result<Self> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::InvalidArgument(format!("frequency must be positive, got {f}")));
        }
        let tol = 1e-9 * scene.obs_radius.max(1.0);
        let mut receivers: Vec<Point> = Vec::new();
        let mut tx_rows = Vec::with_capacity(scene.n_tx());
        for rx in &scene.rx_positions {
            let rows = rx
                .iter()
                .map(|&q| match receivers.iter().position(|&u| dist(u, q) <= tol) {
                    Some(i) => i,
                    None => {
                        receivers.push(q);
                        receivers.len() - 1
                    }
                })
                .collect();
            tx_rows.push(rows);
        }
        let coupling = CellCoupling::new(f, scene.cell_size());
        let centers = scene.pixel_centers();
        let mut matrix = Vec::with_capacity(receivers.len() * centers.len());
        for &q in &receivers {
            matrix.extend(centers.iter().map(|&r| c64_to::<T>(coupling.at(dist(q, r)))));
        }
        let shape = (receivers.len(), centers.len());
        let m_re = Array2::from_shape_vec(shape, matrix.iter().map(|z| z.re).collect()).expect("matrix shape");
        let m_im = Array2::from_shape_vec(shape, matrix.iter().map(|z| z.im).collect()).expect("matrix shape");
        Ok(SurfaceOperator { freq: f, n_pixels: centers.len(), receivers, matrix, m_re, m_im, tx_rows })
    }

    pub fn conjugated(&self) -> Self {
        let mut out = self.clone();
        out.matrix.iter_mut().for_each(|z| *z = z.conj());
        out.m_im.mapv_inplace(|x| -x);
        out
    }

    pub fn n_tx(&self) -> usize {
        self.tx_rows.len()
    }

    pub fn n_rx(&self) -> usize {
        self.tx_rows[0].len()
    }

    /// Kernel entry between receiver `q` of transmitter `tx` and pixel `n`.
    pub fn entry(&self, tx: usize, q: usize, n: usize) -> C<T> {
        self.matrix[self.tx_rows[tx][q] * self.n_pixels + n]
    }

    fn row(&self, u: usize) -> &[C<T>] {
        &self.matrix[u * self.n_pixels..(u + 1) * self.n_pixels]
    }

    /// Whether one product against every distinct receiver beats per-transmitter dots.
    fn shared_receivers(&self) -> bool {
        self.receivers.len() <= 2 * self.n_rx()
    }

    pub fn apply(&self, sources: &Batch<T>) -> Result<Batch<T>> {
        sources.check_shape(self.n_tx(), self.n_pixels)?;
        let mut out = Batch::zeros(self.n_tx(), self.n_rx());
        if self.shared_receivers() {
            let (j_re, j_im) = split(sources);
            let (mt_re, mt_im) = (self.m_re.t(), self.m_im.t());
            let y_re = j_re.dot(&mt_re) - j_im.dot(&mt_im);
            let y_im = j_re.dot(&mt_im) + j_im.dot(&mt_re);
            for (tx, rows) in self.tx_rows.iter().enumerate() {
                for (o, &u) in out.row_mut(tx).iter_mut().zip(rows) {
                    *o = C::new(y_re[[tx, u]], y_im[[tx, u]]);
                }
            }
            return Ok(out);
        }
        for (tx, rows) in self.tx_rows.iter().enumerate() {
            let j = sources.row(tx);
            for (o, &u) in out.row_mut(tx).iter_mut().zip(rows) {
                *o = dot(self.row(u), j);
            }
        }
        Ok(out)
    }

    pub fn apply_adjoint(&self, data: &Batch<T>) -> Result<Batch<T>> {
        data.check_shape(self.n_tx(), self.n_rx())?;
        if self.shared_receivers() {
            let shape = (self.n_tx(), self.receivers.len());
            let mut r_re = Array2::zeros(shape);
            let mut r_im = Array2::zeros(shape);
            for (tx, rows) in self.tx_rows.iter().enumerate() {
                for (&u, w) in rows.iter().zip(data.row(tx)) {
                    r_re[[tx, u]] += w.re;
                    r_im[[tx, u]] += w.im;
                }
            }
            let o_re = r_re.dot(&self.m_re) + r_im.dot(&self.m_im);
            let o_im = r_im.dot(&self.m_re) - r_re.dot(&self.m_im);
            let data = o_re.iter().zip(o_im.iter()).map(|(&re, &im)| C::new(re, im)).collect();
            return Batch::from_vec(self.n_tx(), self.n_pixels, data);
        }
        let mut out = Batch::zeros(self.n_tx(), self.n_pixels);
        for (tx, rows) in self.tx_rows.iter().enumerate() {
            let d = data.row(tx).to_vec();
            let o = out.row_mut(tx);
            for (&u, &w) in rows.iter().zip(&d) {
                for (x, m) in o.iter_mut().zip(self.row(u)) {
                    *x += m.conj() * w;
                }
            }
        }
        Ok(out)
    }
}

fn split<T: Real>(b: &Batch<T>) -> (Array2<T>, Array2<T>) {
    let re = Array2::from_shape_fn((b.rows, b.cols), |(r, c)| b.data[r * b.cols + c].re);
    let im = Array2::from_shape_fn((b.rows, b.cols), |(r, c)| b.data[r * b.cols + c].im);
    (re, im)
}

fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    let (mut re, mut im) = (T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    C::new(re, im)
}

/// Line-source illumination of every pixel center, one row per transmitter.
pub fn incident_field<T: Real>(scene: &Scene, f: f64) -> Batch<T> {
    let k_b = wavenumber(f);
    let centers = scene.pixel_centers();
    let mut out = Batch::zeros(scene.n_tx(), centers.len());
    for (tx, &src) in scene.tx_positions.iter().enumerate() {
        for (o, &r) in out.row_mut(tx).iter_mut().zip(&centers) {
            *o = c64_to(line_source(k_b, dist(src, r)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_fresnel_like_scene;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scene(n: usize) -> Scene {
        build_fresnel_like_scene(4, 30.0, 15.0, 3.0, 0.5, n, vec![0.4e9]).unwrap()
    }

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Batch<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Batch::from_vec(rows, cols, data).unwrap()
    }

    fn dense_apply(s: &Scene, f: f64, j: &Batch<f64>) -> Batch<f64> {
        let c = CellCoupling::new(f, s.cell_size());
        let centers = s.pixel_centers();
        let mut out = Batch::zeros(j.rows, j.cols);
        for r in 0..j.rows {
            for (m, &rm) in centers.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (n, &rn) in centers.iter().enumerate() {
                    acc += c.at(dist(rm, rn)) * j.row(r)[n];
                }
                out.row_mut(r)[m] = acc;
            }
        }
        out
    }

    fn rel(a: &Batch<f64>, b: &Batch<f64>) -> f64 {
        (a.sub(b).norm_sqr() / b.norm_sqr()).sqrt()
    }

    #[test]
    fn one_hot_reads_kernel_column() {
        let s = scene(8);
        let op = DomainOperator::<f64>::build(&s, 0.4e9, 4).unwrap();
        let centers = s.pixel_centers();
        for &n in &[0usize, 13, 63] {
            let mut j = Batch::zeros(1, 64);
            j.data[n] = C::new(1.0, 0.0);
            let out = op.apply(&j).unwrap();
            for m in 0..64 {
                let want = op.coupling.at(dist(centers[m], centers[n]));
                assert!((out.data[m] - want).norm() <= 1e-12 * want.norm(), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn fft_matches_dense_and_pad_factors_agree() {
        let s = scene(16);
        let j = random_batch(3, 256, 1);
        let want = dense_apply(&s, 0.4e9, &j);
        let op4 = DomainOperator::<f64>::build(&s, 0.4e9, 4).unwrap();
        let op2 = DomainOperator::<f64>::build(&s, 0.4e9, 2).unwrap();
        let a4 = op4.apply(&j).unwrap();
        let a2 = op2.apply(&j).unwrap();
        assert!(rel(&a4, &want) < 1e-10);
        assert!(rel(&a2, &a4) < 1e-12);
    }

    #[test]
    fn batch_equals_single_applications_bitwise() {
        let s = scene(8);
        let op = DomainOperator::<f64>::build(&s, 0.4e9, 4).unwrap();
        let j = random_batch(12, 64, 2);
        let all = op.apply(&j).unwrap();
        for r in 0..12 {
            let one = Batch::from_vec(1, 64, j.row(r).to_vec()).unwrap();
            assert_eq!(op.apply(&one).unwrap().data, all.row(r));
        }
    }

    #[test]
    fn linearity_and_zero() {
        let s = scene(8);
        let op = DomainOperator::<f64>::build(&s, 0.4e9, 2).unwrap();
        let j = random_batch(2, 64, 3);
        let mut j2 = j.clone();
        j2.scale(C::new(2.0, 0.0));
        let (a, b) = (op.apply(&j).unwrap(), op.apply(&j2).unwrap());
        for (x, y) in a.data.iter().zip(&b.data) {
            assert_eq!(*x * 2.0, *y);
        }
        let z = op.apply(&Batch::zeros(2, 64)).unwrap();
        assert!(z.data.iter().all(|v| v.norm() == 0.0));
        let z = op.apply_adjoint(&Batch::zeros(2, 64)).unwrap();
        assert!(z.data.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn domain_adjoint_identity() {
        let s = scene(16);
        let op = DomainOperator::<f64>::build(&s, 0.4e9, 4).unwrap();
        let v = random_batch(2, 256, 4);
        let w = random_batch(2, 256, 5);
        let lhs = op.apply(&v).unwrap().inner(&w);
        let rhs = v.inner(&op.apply_adjoint(&w).unwrap());
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm());
        let a = v.inner(&op.apply_adjoint(&v).unwrap());
        let b = v.inner(&op.apply(&v).unwrap());
        assert!((a.re - b.re).abs() <= 1e-10 * b.norm());
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = scene(8);
        assert!(DomainOperator::<f64>::build(&s, 0.0, 4).is_err());
        assert!(DomainOperator::<f64>::build(&s, 1e9, 3).is_err());
        let op = DomainOperator::<f64>::build(&s, 1e9, 2).unwrap();
        assert!(matches!(op.apply(&Batch::zeros(1, 63)), Err(Error::DimensionMismatch { .. })));
        let so = SurfaceOperator::<f64>::build(&s, 1e9).unwrap();
        assert!(so.apply(&Batch::zeros(3, 64)).is_err());
    }

    #[test]
    fn surface_operator_columns_and_adjoint() {
        let s = scene(8);
        let f = 0.4e9;
        let op = SurfaceOperator::<f64>::build(&s, f).unwrap();
        let mut j = Batch::zeros(s.n_tx(), 64);
        j.row_mut(2)[17] = C::new(1.0, 0.0);
        let y = op.apply(&j).unwrap();
        let c = CellCoupling::new(f, s.cell_size());
        for q in 0..s.n_rx() {
            let want = c.at(dist(s.rx_positions[2][q], s.pixel_center(17)));
            assert!((y.row(2)[q] - want).norm() <= 1e-14 * want.norm());
            assert!((op.entry(2, q, 17) - want).norm() <= 1e-14 * want.norm());
        }
        let v = random_batch(s.n_tx(), 64, 6);
        let w = random_batch(s.n_tx(), s.n_rx(), 7);
        let lhs = op.apply(&v).unwrap().inner(&w);
        let rhs = v.inner(&op.apply_adjoint(&w).unwrap());
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }

    #[test]
    fn surface_entry_matches_reference_hankel() {
        // scipy: (-0.5j)*pi*ka*j1(ka)*hankel2(0, k*rho) with k = 2π·0.4e9/c, a = Δ/√π
        let s = scene(8);
        let f = 0.4e9;
        let op = SurfaceOperator::<f64>::build(&s, f).unwrap();
        let rho = dist(s.rx_positions[0][0], s.pixel_center(0));
        let k = wavenumber(f);
        let a = s.cell_size() / std::f64::consts::PI.sqrt();
        let ka = k * a;
        let expected = Complex64::new(0.0, -0.5)
            * (std::f64::consts::PI * ka * puruspe::bessel::Jn(1, ka))
            * Complex64::new(puruspe::bessel::Jn(0, k * rho), -puruspe::bessel::Yn(0, k * rho));
        assert!((op.entry(0, 0, 0) - expected).norm() <= 1e-10 * expected.norm());
    }

    #[test]
    fn shared_receivers_are_deduplicated() {
        let s = build_fresnel_like_scene(12, 30.0, 3.0, 3.0, 0.5, 4, vec![0.3e9]).unwrap();
        let op = SurfaceOperator::<f64>::build(&s, 0.3e9).unwrap();
        // rings rotate in 30° steps on a 3° lattice: 120 distinct sites
        assert_eq!(op.receivers.len(), 120);
        assert_eq!(op.n_rx(), 101);
    }

    #[test]
    fn incident_field_decays_and_is_symmetric() {
        let s = Scene::new(
            [-0.5, -0.5],
            [0.5, 0.5],
            16,
            vec![[0.0, 3.0], [0.0, -3.0]],
            vec![vec![[3.0, 0.0]], vec![[3.0, 0.0]]],
            vec![0.3e9],
            3.0,
        )
        .unwrap();
        let e = incident_field::<f64>(&s, 0.3e9);
        // column 8 runs along the y axis; rows farther from the +y source decay
        let col = 8;
        for r in (1..15).rev() {
            let near = e.row(0)[r * 16 + col].norm();
            let far = e.row(0)[(r - 1) * 16 + col].norm();
            assert!(far < near, "row {r}");
        }
        for r in 0..16 {
            for c in 0..16 {
                let a = e.row(0)[r * 16 + c];
                let b = e.row(1)[(15 - r) * 16 + c];
                assert!((a - b).norm() <= 1e-12 * a.norm());
            }
        }
        let k = wavenumber(0.3e9);
        let rho = dist([0.0, 3.0], s.pixel_center(37));
        let want = Complex64::new(0.0, -0.25)
            * Complex64::new(puruspe::bessel::Jn(0, k * rho), -puruspe::bessel::Yn(0, k * rho));
        assert!((e.row(0)[37] - want).norm() <= 1e-12 * want.norm());
    }

    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    #[test]
    fn self_term_matches_cell_quadrature() {
        // k_b a = 0.1 with k_b = 1: integrate k²(-j/4)H₀⁽²⁾(kρ) over the square cell
        // in polar coordinates (eight symmetric triangles).
        let k = 1.0;
        let cell = 0.1 * std::f64::consts::PI.sqrt();
        let half = 0.5 * cell;
        let nodes = gauss_legendre(48);
        let mut total = Complex64::new(0.0, 0.0);
        let phi_max = std::f64::consts::FRAC_PI_4;
        for &(xp, wp) in &nodes {
            let phi = 0.5 * phi_max * (xp + 1.0);
            let r_max = half / phi.cos();
            let mut inner = Complex64::new(0.0, 0.0);
            for &(xr, wr) in &nodes {
                let rho = 0.5 * r_max * (xr + 1.0);
                inner += wr * 0.5 * r_max * rho * hankel2_0(k * rho);
            }
            total += wp * 0.5 * phi_max * inner;
        }
        let quad = Complex64::new(0.0, -0.25) * k * k * 8.0 * total;

        let f = k / wavenumber(1.0);
        let c = CellCoupling::new(f, cell);
        assert!((c.k_b * c.radius - 0.1).abs() < 1e-12);
        let rel = (c.self_term - quad).norm() / quad.norm();
        assert!(rel < 0.01, "self {} vs quadrature {quad} (rel {rel:e})", c.self_term);
    }
}
