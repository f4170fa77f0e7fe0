//! Data, state and cross-correlated residual losses with their analytic
//! gradients.
//!
//! Gradients follow the directional-derivative convention
//! `d/dα L(x + α v)|₀ = Re⟨g, v⟩` with `⟨a, b⟩ = Σ conj(a)·b`, so the exact
//! line-search step along `v` is `-Re⟨g, v⟩ / (2·Denom(v))`.

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::forward::MeasurementSet;
use crate::geometry::{Scene, EPS0};
use crate::greens::{DomainOperator, SurfaceOperator};
use crate::scalar::{Real, C};

/// Annealing weight of the cross term: `0.5^(s-1)·exp(-decay·k/K_s)`.
pub fn beta_schedule_with(stage: usize, k: f64, k_s: f64, decay: f64) -> f64 {
    0.5f64.powi(stage as i32 - 1) * (-decay * k / k_s).exp()
}

/// [`beta_schedule_with`] at the default decay rate of 10.
pub fn beta_schedule(stage: usize, k: f64, k_s: f64) -> f64 {
    beta_schedule_with(stage, k, k_s, 10.0)
}

/// Operators and measured data for one frequency.
pub struct FrequencyTerm<T: Real> {
    pub freq: f64,
    pub domain: DomainOperator<T>,
    pub surface: SurfaceOperator<T>,
    pub e_inc: Batch<T>,
    pub y: Batch<T>,
    pub y_norm2: T,
    pub inc_norm2: T,
}

impl<T: Real> FrequencyTerm<T> {
    fn y_scale(&self) -> Result<T> {
        if self.y_norm2 == T::zero() {
            return Err(Error::ZeroNorm("measured field"));
        }
        Ok(T::one() / self.y_norm2)
    }

    fn inc_scale(&self) -> Result<T> {
        if self.inc_norm2 == T::zero() {
            return Err(Error::ZeroNorm("incident field"));
        }
        Ok(T::one() / self.inc_norm2)
    }

    /// `ω ε₀` for the chain rule from σ to the imaginary contrast.
    pub fn omega_eps0(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.freq * EPS0
    }
}

/// Precomputed operators for every frequency of a dataset.
pub struct Problem<T: Real> {
    pub scene: Scene,
    pub terms: Vec<FrequencyTerm<T>>,
}

impl<T: Real> Problem<T> {
    pub fn build(mset: &MeasurementSet<T>, pad_factor: usize) -> Result<Self> {
        mset.validate()?;
        let scene = mset.scene.clone();
        let mut terms = Vec::with_capacity(scene.n_freq());
        for (i, &f) in scene.frequencies.iter().enumerate() {
            let y = mset.scattered[i].clone();
            let e_inc = mset.incident[i].clone();
            terms.push(FrequencyTerm {
                freq: f,
                domain: DomainOperator::build(&scene, f, pad_factor)?,
                surface: SurfaceOperator::build(&scene, f)?,
                y_norm2: y.norm_sqr(),
                inc_norm2: e_inc.norm_sqr(),
                e_inc,
                y,
            });
        }
        Ok(Problem { scene, terms })
    }

    pub fn n_tx(&self) -> usize {
        self.scene.n_tx()
    }

    pub fn n_pixels(&self) -> usize {
        self.scene.n_pixels()
    }

    /// Copy with every operator, field and datum complex-conjugated.
    pub fn conjugated(&self) -> Self {
        Problem {
            scene: self.scene.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| FrequencyTerm {
                    freq: t.freq,
                    domain: t.domain.conjugated(),
                    surface: t.surface.conjugated(),
                    e_inc: t.e_inc.conj(),
                    y: t.y.conj(),
                    y_norm2: t.y_norm2,
                    inc_norm2: t.inc_norm2,
                })
                .collect(),
        }
    }
}

/// Contrast sources for the active frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSet<T: Real> {
    /// Indices into [`Problem::terms`].
    pub freqs: Vec<usize>,
    /// One `n_tx × n_pixels` batch per entry of `freqs`.
    pub j: Vec<Batch<T>>,
}

impl<T: Real> SourceSet<T> {
    pub fn zeros(freqs: Vec<usize>, n_tx: usize, n_pixels: usize) -> Self {
        let j = freqs.iter().map(|_| Batch::zeros(n_tx, n_pixels)).collect();
        SourceSet { freqs, j }
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.j.iter().zip(&other.j).fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.inner(b))
    }

    pub fn norm_sqr(&self) -> T {
        self.j.iter().fold(T::zero(), |acc, b| acc + b.norm_sqr())
    }

    /// `self += a·other`
    pub fn axpy(&mut self, a: T, other: &Self) {
        let a = C::new(a, T::zero());
        self.j.iter_mut().zip(&other.j).for_each(|(x, y)| x.axpy(a, y));
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.j.iter_mut().for_each(|b| b.scale(C::new(a, T::zero())));
        out
    }

    pub fn conj(&self) -> Self {
        SourceSet { freqs: self.freqs.clone(), j: self.j.iter().map(Batch::conj).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.j.iter().all(Batch::is_finite)
    }

    pub(crate) fn check(&self, problem: &Problem<T>, chi: &[Vec<C<T>>]) -> Result<()> {
        if chi.len() != self.freqs.len() || self.j.len() != self.freqs.len() {
            return Err(Error::dims(self.freqs.len(), chi.len().min(self.j.len())));
        }
        for (&fi, (b, c)) in self.freqs.iter().zip(self.j.iter().zip(chi)) {
            if fi >= problem.terms.len() {
                return Err(Error::InvalidArgument(format!("frequency index {fi} out of range")));
            }
            b.check_shape(problem.n_tx(), problem.n_pixels())?;
            if c.len() != problem.n_pixels() {
                return Err(Error::dims(problem.n_pixels(), c.len()));
            }
        }
        Ok(())
    }
}

/// Loss terms for one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyLoss {
    pub freq: f64,
    pub data: f64,
    pub state: f64,
    pub cross: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub per_freq: Vec<FrequencyLoss>,
    pub beta: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub(crate) fn assemble(per_freq: Vec<FrequencyLoss>, beta: f64) -> Self {
        let total = per_freq.iter().map(|l| l.data + l.state + beta * l.cross).sum();
        LossBreakdown { per_freq, beta, total }
    }

    /// `Σ_f (state + β·cross)`: the part that depends on the contrast.
    pub fn contrast_part(&self) -> f64 {
        self.per_freq.iter().map(|l| l.state + self.beta * l.cross).sum()
    }
}

/// Residuals of the three equations at one frequency.
pub(crate) struct Residuals<T: Real> {
    pub e_tot: Batch<T>,
    /// `χ⊙E_tot - J`
    pub state: Batch<T>,
    /// `𝓖_S J - y`
    pub data: Batch<T>,
    /// `𝓖_S(χ⊙E_tot) - y`
    pub cross: Batch<T>,
}

pub(crate) fn residuals<T: Real>(term: &FrequencyTerm<T>, j: &Batch<T>, chi: &[C<T>]) -> Result<Residuals<T>> {
    let e_tot = term.e_inc.add(&term.domain.apply(j)?);
    residuals_with_field(term, j, chi, e_tot)
}

pub(crate) fn residuals_with_field<T: Real>(
    term: &FrequencyTerm<T>,
    j: &Batch<T>,
    chi: &[C<T>],
    e_tot: Batch<T>,
) -> Result<Residuals<T>> {
    let w = e_tot.mul_rows(chi);
    let state = w.sub(j);
    let data = term.surface.apply(j)?.sub(&term.y);
    let cross = term.surface.apply(&w)?.sub(&term.y);
    Ok(Residuals { e_tot, state, data, cross })
}

pub(crate) fn frequency_loss<T: Real>(term: &FrequencyTerm<T>, r: &Residuals<T>) -> Result<FrequencyLoss> {
    let ys = term.y_scale()?;
    let is = term.inc_scale()?;
    Ok(FrequencyLoss {
        freq: term.freq,
        data: (r.data.norm_sqr() * ys).as_f64(),
        state: (r.state.norm_sqr() * is).as_f64(),
        cross: (r.cross.norm_sqr() * ys).as_f64(),
    })
}

/// Evaluates every loss term for the active frequencies.
pub fn eval_losses<T: Real>(
    problem: &Problem<T>,
    sources: &SourceSet<T>,
    chi: &[Vec<C<T>>],
    beta: f64,
) -> Result<LossBreakdown> {
    sources.check(problem, chi)?;
    let mut per = Vec::with_capacity(sources.freqs.len());
    for ((&fi, j), c) in sources.freqs.iter().zip(&sources.j).zip(chi) {
        let term = &problem.terms[fi];
        per.push(frequency_loss(term, &residuals(term, j, c)?)?);
    }
    Ok(LossBreakdown::assemble(per, beta))
}

/// Gradient of one frequency's total loss with respect to its sources.
pub(crate) fn grad_from_residuals<T: Real>(
    term: &FrequencyTerm<T>,
    chi: &[C<T>],
    r: &Residuals<T>,
    beta: T,
) -> Result<Batch<T>> {
    let two = T::of(2.0);
    let ys = C::new(two * term.y_scale()?, T::zero());
    let is = C::new(two * term.inc_scale()?, T::zero());
    let mut g = term.surface.apply_adjoint(&r.data)?;
    g.scale(ys);
    // state and cross terms share one trip through 𝓖_Dᴴ(conj(χ) ⊙ ·)
    let mut through = r.state.clone();
    through.scale(is);
    if beta != T::zero() {
        let back = term.surface.apply_adjoint(&r.cross)?;
        through.axpy(ys * beta, &back);
    }
    let chi_conj: Vec<C<T>> = chi.iter().map(|c| c.conj()).collect();
    let pulled = term.domain.apply_adjoint(&through.mul_rows(&chi_conj))?;
    g = g.add(&pulled);
    g.axpy(-is, &r.state);
    Ok(g)
}

/// Complex gradient of the total loss with respect to the contrast sources.
pub fn grad_j<T: Real>(
    problem: &Problem<T>,
    sources: &SourceSet<T>,
    chi: &[Vec<C<T>>],
    beta: f64,
) -> Result<SourceSet<T>> {
    sources.check(problem, chi)?;
    let mut out = Vec::with_capacity(sources.freqs.len());
    for ((&fi, j), c) in sources.freqs.iter().zip(&sources.j).zip(chi) {
        let term = &problem.terms[fi];
        out.push(grad_from_residuals(term, c, &residuals(term, j, c)?, T::of(beta))?);
    }
    Ok(SourceSet { freqs: sources.freqs.clone(), j: out })
}

/// Elementwise magnitude clip preserving phase.
pub fn clip_gradient_magnitude<T: Real>(g: &mut [C<T>], threshold: T) {
    for z in g.iter_mut() {
        let m = z.norm();
        if m > threshold {
            *z *= threshold / m;
        }
    }
}

/// Second-order coefficient of `L(J + α v)` in `α`.
pub fn line_search_denominator<T: Real>(
    problem: &Problem<T>,
    direction: &SourceSet<T>,
    chi: &[Vec<C<T>>],
    beta: f64,
) -> Result<f64> {
    direction.check(problem, chi)?;
    let mut acc = 0.0;
    for ((&fi, v), c) in direction.freqs.iter().zip(&direction.j).zip(chi) {
        let term = &problem.terms[fi];
        let ys = term.y_scale()?.as_f64();
        let is = term.inc_scale()?.as_f64();
        let gv = term.domain.apply(v)?.mul_rows(c);
        let data = term.surface.apply(v)?.norm_sqr().as_f64();
        let state = gv.sub(v).norm_sqr().as_f64();
        let cross = term.surface.apply(&gv)?.norm_sqr().as_f64();
        acc += data * ys + state * is + beta * cross * ys;
    }
    Ok(acc)
}

/// Gradient of `Σ_f (state + β·cross)` with respect to the contrast, with
/// the total fields held fixed, chained onto the real material maps.
#[derive(Clone, Debug)]
pub struct ContrastGradient<T: Real> {
    /// Complex gradient per active frequency.
    pub per_freq: Vec<Vec<C<T>>>,
    pub d_delta_eps: Vec<T>,
    pub d_sigma: Vec<T>,
    /// Loss value at the evaluation point.
    pub loss: f64,
}

pub fn grad_chi<T: Real>(
    problem: &Problem<T>,
    sources: &SourceSet<T>,
    e_tot: &[Batch<T>],
    chi: &[Vec<C<T>>],
    beta: f64,
) -> Result<ContrastGradient<T>> {
    sources.check(problem, chi)?;
    if e_tot.len() != sources.freqs.len() {
        return Err(Error::dims(sources.freqs.len(), e_tot.len()));
    }
    let np = problem.n_pixels();
    let two = T::of(2.0);
    let beta_t = T::of(beta);
    let mut per = Vec::with_capacity(sources.freqs.len());
    let mut loss = 0.0;
    for (((&fi, j), c), e) in sources.freqs.iter().zip(&sources.j).zip(chi).zip(e_tot) {
        let term = &problem.terms[fi];
        e.check_shape(problem.n_tx(), np)?;
        let ys = term.y_scale()?;
        let is = term.inc_scale()?;
        let w = e.mul_rows(c);
        let state = w.sub(j);
        let zero = C::new(T::zero(), T::zero());
        let mut g = vec![zero; np];
        for tx in 0..e.rows {
            for ((gi, ei), ri) in g.iter_mut().zip(e.row(tx)).zip(state.row(tx)) {
                *gi += ei.conj() * ri * (two * is);
            }
        }
        let mut l = (state.norm_sqr() * is).as_f64();
        if beta != 0.0 {
            let cross = term.surface.apply(&w)?.sub(&term.y);
            l += beta * (cross.norm_sqr() * ys).as_f64();
            let back = term.surface.apply_adjoint(&cross)?;
            let s = two * ys * beta_t;
            for tx in 0..e.rows {
                for ((gi, ei), bi) in g.iter_mut().zip(e.row(tx)).zip(back.row(tx)) {
                    *gi += ei.conj() * bi * s;
                }
            }
        }
        loss += l;
        per.push(g);
    }
    let freqs: Vec<f64> = sources.freqs.iter().map(|&fi| problem.terms[fi].freq).collect();
    let (d_delta_eps, d_sigma) = chain_to_material(&per, &freqs);
    Ok(ContrastGradient { per_freq: per, d_delta_eps, d_sigma, loss })
}

/// Chain rule through `χ_f = Δε - j·σ/(ω_f ε₀)`: `(Σ_f Re g_f, Σ_f -Im g_f/(ω_f ε₀))`.
pub fn chain_to_material<T: Real>(per_freq: &[Vec<C<T>>], freqs: &[f64]) -> (Vec<T>, Vec<T>) {
    let np = per_freq.first().map_or(0, Vec::len);
    let mut d_eps = vec![T::zero(); np];
    let mut d_sig = vec![T::zero(); np];
    for (g, &f) in per_freq.iter().zip(freqs) {
        let inv_we = T::of(1.0 / (2.0 * std::f64::consts::PI * f * EPS0));
        for ((de, ds), gi) in d_eps.iter_mut().zip(d_sig.iter_mut()).zip(g) {
            *de += gi.re;
            *ds -= gi.im * inv_we;
        }
    }
    (d_eps, d_sig)
}

/// Loss `Σ_f (state + β·cross)` at fixed total fields (the network objective).
pub fn contrast_loss<T: Real>(
    problem: &Problem<T>,
    sources: &SourceSet<T>,
    e_tot: &[Batch<T>],
    chi: &[Vec<C<T>>],
    beta: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for (((&fi, j), c), e) in sources.freqs.iter().zip(&sources.j).zip(chi).zip(e_tot) {
        let term = &problem.terms[fi];
        let w = e.mul_rows(c);
        acc += (w.sub(j).norm_sqr() * term.inc_scale()?).as_f64();
        if beta != 0.0 {
            acc += beta * (term.surface.apply(&w)?.sub(&term.y).norm_sqr() * term.y_scale()?).as_f64();
        }
    }
    Ok(acc)
}

/// `E_inc + 𝓖_D J` for every active frequency.
pub fn total_fields<T: Real>(problem: &Problem<T>, sources: &SourceSet<T>) -> Result<Vec<Batch<T>>> {
    sources
        .freqs
        .iter()
        .zip(&sources.j)
        .map(|(&fi, j)| {
            let t = &problem.terms[fi];
            Ok(t.e_inc.add(&t.domain.apply(j)?))
        })
        .collect()
}
