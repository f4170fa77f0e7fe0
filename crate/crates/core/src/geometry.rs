//! Imaging geometry: the square domain of interest, antenna rings, frequency
//! list, and the phantoms used as ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Vacuum permittivity in F/m (CODATA 2018).
pub const EPS0: f64 = 8.8541878128e-12;
/// Vacuum permeability in H/m (CODATA 2018).
pub const MU0: f64 = 1.25663706212e-6;

/// Background wavenumber `ω·sqrt(μ₀ε₀)` at frequency `f` in Hz.
pub fn wavenumber(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f * (MU0 * EPS0).sqrt()
}

pub type Point = [f64; 2];

/// Square pixel map stored row-major: row index follows `y`, column follows `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(n: usize, v: T) -> Self {
        Grid { n, data: vec![v; n * n] }
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.n + col]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid { n: self.n, data: self.data.iter().map(f).collect() }
    }
}

/// Immutable description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub doi_min: Point,
    pub doi_max: Point,
    pub n_grid: usize,
    pub tx_positions: Vec<Point>,
    /// Receivers seen by each transmitter, indexed like `tx_positions`.
    pub rx_positions: Vec<Vec<Point>>,
    pub frequencies: Vec<f64>,
    pub obs_radius: f64,
}

impl Scene {
    pub fn new(
        doi_min: Point,
        doi_max: Point,
        n_grid: usize,
        tx_positions: Vec<Point>,
        rx_positions: Vec<Vec<Point>>,
        frequencies: Vec<f64>,
        obs_radius: f64,
    ) -> Result<Self> {
        let scene = Scene {
            doi_min,
            doi_max,
            n_grid,
            tx_positions,
            rx_positions,
            frequencies,
            obs_radius,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        if self.n_grid < 2 {
            return bad(format!("n_grid must be >= 2, got {}", self.n_grid));
        }
        let wx = self.doi_max[0] - self.doi_min[0];
        let wy = self.doi_max[1] - self.doi_min[1];
        if !(wx > 0.0 && wy > 0.0) {
            return bad("doi_max must exceed doi_min componentwise".into());
        }
        if (wx - wy).abs() > 1e-12 * wx.max(wy) {
            return bad(format!("domain must be square, got {wx} x {wy}"));
        }
        if self.frequencies.is_empty() {
            return bad("at least one frequency is required".into());
        }
        if self.frequencies.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return bad("frequencies must be finite and positive".into());
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return bad("frequencies must be strictly increasing".into());
        }
        if self.tx_positions.is_empty() {
            return bad("at least one transmitter is required".into());
        }
        if self.rx_positions.len() != self.tx_positions.len() {
            return bad(format!(
                "{} receiver lists for {} transmitters",
                self.rx_positions.len(),
                self.tx_positions.len()
            ));
        }
        let n_rx = self.rx_positions[0].len();
        if n_rx == 0 || self.rx_positions.iter().any(|r| r.len() != n_rx) {
            return bad("every transmitter must see the same, non-zero number of receivers".into());
        }
        let inside = |p: &Point| {
            p[0] >= self.doi_min[0]
                && p[0] <= self.doi_max[0]
                && p[1] >= self.doi_min[1]
                && p[1] <= self.doi_max[1]
        };
        if self.tx_positions.iter().any(inside) {
            return bad("transmitter inside the domain of interest".into());
        }
        if self.rx_positions.iter().flatten().any(inside) {
            return bad("receiver inside the domain of interest".into());
        }
        Ok(())
    }

    pub fn cell_size(&self) -> f64 {
        (self.doi_max[0] - self.doi_min[0]) / self.n_grid as f64
    }

    pub fn n_pixels(&self) -> usize {
        self.n_grid * self.n_grid
    }

    pub fn n_tx(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx_positions[0].len()
    }

    pub fn n_freq(&self) -> usize {
        self.frequencies.len()
    }

    /// Center of pixel `idx` (row-major) in meters.
    pub fn pixel_center(&self, idx: usize) -> Point {
        let d = self.cell_size();
        let (row, col) = (idx / self.n_grid, idx % self.n_grid);
        [
            self.doi_min[0] + (col as f64 + 0.5) * d,
            self.doi_min[1] + (row as f64 + 0.5) * d,
        ]
    }

    pub fn pixel_centers(&self) -> Vec<Point> {
        (0..self.n_pixels()).map(|i| self.pixel_center(i)).collect()
    }

    /// Pixel centers mapped affinely onto `[-1, 1]²`.
    pub fn normalized_coords(&self) -> Vec<Point> {
        let half = 0.5 * (self.doi_max[0] - self.doi_min[0]);
        let mid = [
            0.5 * (self.doi_max[0] + self.doi_min[0]),
            0.5 * (self.doi_max[1] + self.doi_min[1]),
        ];
        self.pixel_centers()
            .into_iter()
            .map(|p| [(p[0] - mid[0]) / half, (p[1] - mid[1]) / half])
            .collect()
    }

    /// Same experiment discretized at a different resolution.
    pub fn with_grid(&self, n_grid: usize) -> Result<Scene> {
        let mut s = self.clone();
        s.n_grid = n_grid;
        s.validate()?;
        Ok(s)
    }

    /// Same experiment restricted to the listed frequency indices.
    pub fn with_frequencies(&self, idx: &[usize]) -> Scene {
        let mut s = self.clone();
        s.frequencies = idx.iter().map(|&i| self.frequencies[i]).collect();
        s
    }
}

/// Circular Tx ring with a blind sector of receivers around each active Tx.
///
/// Transmitters sit at angles `360°·p/n_tx`. `blind_deg` is the half-width of
/// the excluded sector: receivers run from `tx + blind` to `tx + 360 - blind`
/// inclusive in steps of `rx_step_deg`, i.e. `floor((360 - 2·blind)/step) + 1`
/// per transmitter (101 for 30°/3°, 49 for 60°/5°).
pub fn build_fresnel_like_scene(
    n_tx: usize,
    blind_deg: f64,
    rx_step_deg: f64,
    radius: f64,
    doi_half: f64,
    n_grid: usize,
    freqs: Vec<f64>,
) -> Result<Scene> {
    if n_tx == 0 {
        return Err(Error::InvalidScene("n_tx must be >= 1".into()));
    }
    if !(rx_step_deg > 0.0) {
        return Err(Error::InvalidScene("rx_step_deg must be positive".into()));
    }
    if !(0.0..180.0).contains(&blind_deg) {
        return Err(Error::InvalidScene("blind_deg must lie in [0, 180)".into()));
    }
    if !(doi_half > 0.0) {
        return Err(Error::InvalidScene("doi_half must be positive".into()));
    }
    if radius <= doi_half * std::f64::consts::SQRT_2 {
        return Err(Error::InvalidScene(format!(
            "antenna radius {radius} m does not clear the domain corners ({} m)",
            doi_half * std::f64::consts::SQRT_2
        )));
    }
    let n_rx = ((360.0 - 2.0 * blind_deg) / rx_step_deg + 1e-9).floor() as usize + 1;
    let on_ring = |deg: f64| {
        let t = deg.to_radians();
        [radius * t.cos(), radius * t.sin()]
    };
    let mut tx = Vec::with_capacity(n_tx);
    let mut rx = Vec::with_capacity(n_tx);
    for p in 0..n_tx {
        let tx_deg = 360.0 * p as f64 / n_tx as f64;
        tx.push(on_ring(tx_deg));
        let start = tx_deg + blind_deg;
        rx.push((0..n_rx).map(|q| on_ring(start + q as f64 * rx_step_deg)).collect());
    }
    Scene::new(
        [-doi_half, -doi_half],
        [doi_half, doi_half],
        n_grid,
        tx,
        rx,
        freqs,
        radius,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Disk {
        center: Point,
        radius: f64,
        eps_r: f64,
        #[serde(default)]
        sigma: f64,
    },
    Annulus {
        center: Point,
        inner: f64,
        outer: f64,
        eps_r: f64,
        #[serde(default)]
        sigma: f64,
    },
}

impl Shape {
    fn contains(&self, p: Point) -> bool {
        let dist = |c: &Point| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        match self {
            Shape::Disk { center, radius, .. } => dist(center) <= *radius,
            Shape::Annulus { center, inner, outer, .. } => {
                let r = dist(center);
                r >= *inner && r <= *outer
            }
        }
    }

    fn material(&self) -> (f64, f64) {
        match *self {
            Shape::Disk { eps_r, sigma, .. } | Shape::Annulus { eps_r, sigma, .. } => (eps_r, sigma),
        }
    }
}

/// Piecewise-constant target in a vacuum background; later shapes overwrite earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phantom {
    #[serde(default)]
    pub shapes: Vec<Shape>,
}

impl Phantom {
    pub fn new(shapes: Vec<Shape>) -> Result<Self> {
        let p = Phantom { shapes };
        p.validate()?;
        Ok(p)
    }

    /// Two disks and a ring sharing one material.
    pub fn austria(eps_r: f64, sigma: f64) -> Self {
        Phantom {
            shapes: vec![
                Shape::Disk { center: [0.3, -0.15], radius: 0.1, eps_r, sigma },
                Shape::Disk { center: [0.3, 0.15], radius: 0.1, eps_r, sigma },
                Shape::Annulus { center: [-0.1, 0.0], inner: 0.15, outer: 0.3, eps_r, sigma },
            ],
        }
    }

    pub fn disk(center: Point, radius: f64, eps_r: f64, sigma: f64) -> Self {
        Phantom { shapes: vec![Shape::Disk { center, radius, eps_r, sigma }] }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.shapes.iter().enumerate() {
            let (eps_r, sigma) = s.material();
            let bad = |m: &str| Err(Error::InvalidPhantom(format!("shape {i}: {m}")));
            if !(eps_r >= 1.0) || !eps_r.is_finite() {
                return bad("eps_r must be >= 1");
            }
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return bad("sigma must be >= 0");
            }
            match *s {
                Shape::Disk { radius, .. } if !(radius > 0.0) => return bad("radius must be positive"),
                Shape::Annulus { inner, outer, .. } if !(inner >= 0.0 && inner < outer) => {
                    return bad("annulus needs 0 <= inner < outer")
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn is_lossy(&self) -> bool {
        self.shapes.iter().any(|s| s.material().1 > 0.0)
    }
}

/// Samples the phantom at pixel centers; returns `(eps_r, sigma)` maps.
pub fn rasterize_phantom(
    phantom: &Phantom,
    scene: &Scene,
    n_grid_override: Option<usize>,
) -> (Grid<f64>, Grid<f64>) {
    let n = n_grid_override.unwrap_or(scene.n_grid);
    let d = (scene.doi_max[0] - scene.doi_min[0]) / n as f64;
    let mut eps = Grid::filled(n, 1.0);
    let mut sigma = Grid::filled(n, 0.0);
    for row in 0..n {
        for col in 0..n {
            let p = [
                scene.doi_min[0] + (col as f64 + 0.5) * d,
                scene.doi_min[1] + (row as f64 + 0.5) * d,
            ];
            for s in phantom.shapes.iter().filter(|s| s.contains(p)) {
                let (e, c) = s.material();
                eps.data[row * n + col] = e;
                sigma.data[row * n + col] = c;
            }
        }
    }
    (eps, sigma)
}

/// Complex contrast `(eps_r - 1) - j·sigma/(ω ε₀)` under the `exp(+jωt)` convention.
pub fn contrast_of<T: Real>(eps_r: &[T], sigma: &[T], f: f64) -> Vec<C<T>> {
    let scale = T::of(1.0 / (2.0 * std::f64::consts::PI * f * EPS0));
    eps_r
        .iter()
        .zip(sigma)
        .map(|(&e, &s)| C::new(e - T::one(), -s * scale))
        .collect()
}

/// Same as [`contrast_of`] but from `Δε = eps_r - 1` directly.
pub fn contrast_from_offset<T: Real>(delta_eps: &[T], sigma: &[T], f: f64) -> Vec<C<T>> {
    let scale = T::of(1.0 / (2.0 * std::f64::consts::PI * f * EPS0));
    delta_eps
        .iter()
        .zip(sigma)
        .map(|(&e, &s)| C::new(e, -s * scale))
        .collect()
}
