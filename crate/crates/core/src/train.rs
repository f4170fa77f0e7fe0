//! Alternating optimization: exact-line-search conjugate gradient on the
//! contrast sources, then a few Adam steps on the material network.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::forward::MeasurementSet;
use crate::geometry::contrast_from_offset;
use crate::loss::{
    beta_schedule_with, clip_gradient_magnitude, frequency_loss, grad_chi, grad_from_residuals, residuals,
    LossBreakdown, Problem, Residuals, SourceSet,
};
use crate::metrics::{summarize_runs, Curve, RunStatistics, TruthProfile};
use crate::net::{clip_global_norm, AdamState, ForwardCache, NetConfig, NetworkState};
use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Alternating updates with the cross-correlated term.
    AltCc,
    /// Alternating updates with the cross term switched off.
    Alt,
    /// Sources and network updated jointly by Adam.
    SimulCc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Hop,
    Simul,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alt-cc" | "alt_cc" => Ok(Mode::AltCc),
            "alt" => Ok(Mode::Alt),
            "simul-cc" | "simul_cc" => Ok(Mode::SimulCc),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?} (alt-cc, alt, simul-cc)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::AltCc => "alt-cc",
            Mode::Alt => "alt",
            Mode::SimulCc => "simul-cc",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hop" => Ok(Strategy::Hop),
            "simul" => Ok(Strategy::Simul),
            _ => Err(Error::InvalidArgument(format!("unknown strategy {s:?} (hop, simul)"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Hop => "hop",
            Strategy::Simul => "simul",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    /// Active frequency indices.
    pub freqs: Vec<usize>,
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
}

impl StagePlan {
    /// Percentages used when none are given: 20/20/60 for three
    /// frequencies, equal shares otherwise.
    pub fn default_split(n_freq: usize) -> Vec<f64> {
        if n_freq == 3 {
            vec![20.0, 20.0, 60.0]
        } else {
            vec![1.0; n_freq]
        }
    }

    /// Stage `s` activates the first `s` frequencies; epochs follow `split`.
    pub fn hopping(n_freq: usize, epochs: usize, split: &[f64]) -> Result<Self> {
        if split.len() != n_freq {
            return Err(Error::InvalidArgument(format!(
                "stage split has {} entries for {n_freq} frequencies",
                split.len()
            )));
        }
        if split.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("stage split entries must be positive".into()));
        }
        let total: f64 = split.iter().sum();
        let mut stages = Vec::with_capacity(n_freq);
        let mut cum = 0.0;
        let mut prev = 0usize;
        for (s, &p) in split.iter().enumerate() {
            cum += p;
            let bound = if s + 1 == n_freq { epochs } else { (epochs as f64 * cum / total).round() as usize };
            if bound <= prev {
                return Err(Error::InvalidArgument(format!("stage {} would get no epochs", s + 1)));
            }
            stages.push(Stage { freqs: (0..=s).collect(), epochs: bound - prev });
            prev = bound;
        }
        Ok(StagePlan { stages })
    }

    /// One stage with every frequency active.
    pub fn simultaneous(n_freq: usize, epochs: usize) -> Result<Self> {
        if n_freq == 0 || epochs == 0 {
            return Err(Error::InvalidArgument("need at least one frequency and one epoch".into()));
        }
        Ok(StagePlan { stages: vec![Stage { freqs: (0..n_freq).collect(), epochs }] })
    }

    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(|s| s.epochs).sum()
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub mode: Mode,
    pub strategy: Strategy,
    pub epochs: usize,
    pub seed: u64,
    /// Stage percentages for hopping; `None` uses [`StagePlan::default_split`].
    pub stage_split: Option<Vec<f64>>,
    pub net: NetConfig,
    /// Network updates per epoch.
    pub n_inner: usize,
    /// PSNR logging period in epochs (the last epoch is always logged).
    pub psnr_every: usize,
    pub beta_decay: f64,
    /// Pins β to a constant in every epoch.
    pub beta_override: Option<f64>,
    /// Elementwise magnitude clip on source gradients in the conjugate-gradient phase.
    pub source_clip: f64,
    /// Global-norm clip on network gradients.
    pub net_clip: f64,
    /// Global-norm clip on source gradients in the joint Adam mode.
    pub joint_source_clip: f64,
    pub pad_factor: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::AltCc,
            strategy: Strategy::Hop,
            epochs: 25000,
            seed: 0,
            stage_split: None,
            net: NetConfig::default(),
            n_inner: 2,
            psnr_every: 10,
            beta_decay: 10.0,
            beta_override: None,
            source_clip: 100.0,
            net_clip: 1.0,
            joint_source_clip: 1.0,
            pad_factor: 4,
        }
    }
}

impl TrainConfig {
    pub fn plan(&self, n_freq: usize) -> Result<StagePlan> {
        match self.strategy {
            Strategy::Simul => StagePlan::simultaneous(n_freq, self.epochs),
            Strategy::Hop => {
                let split = self.stage_split.clone().unwrap_or_else(|| StagePlan::default_split(n_freq));
                StagePlan::hopping(n_freq, self.epochs, &split)
            }
        }
    }

    /// β for epoch `k` (1-based) of stage `stage` (1-based) lasting `k_s` epochs.
    pub fn beta(&self, stage: usize, k: usize, k_s: usize) -> f64 {
        if self.mode == Mode::Alt {
            return 0.0;
        }
        self.beta_override.unwrap_or_else(|| beta_schedule_with(stage, k as f64, k_s as f64, self.beta_decay))
    }
}

/// Conjugate-gradient memory across epochs of one stage.
#[derive(Clone, Debug, Default)]
pub struct CgState<T: Real> {
    pub g_prev: Option<SourceSet<T>>,
    pub v_prev: Option<SourceSet<T>>,
}

impl<T: Real> CgState<T> {
    pub fn new() -> Self {
        CgState { g_prev: None, v_prev: None }
    }
}

#[derive(Clone, Debug)]
pub struct PrcgOutcome<T: Real> {
    pub alpha: f64,
    pub gamma: f64,
    pub loss_before: LossBreakdown,
    pub loss_after: LossBreakdown,
    /// `Re⟨∇L, v⟩` along the chosen direction.
    pub slope: f64,
    pub denom: f64,
    /// Whether the direction fell back to steepest descent.
    pub reset: bool,
    /// `E_inc + 𝓖_D J` at the updated sources.
    pub e_tot: Vec<Batch<T>>,
}

/// Adjoint back-projection scaled by the optimal step, one transmitter at a time.
pub fn init_sources<T: Real>(problem: &Problem<T>, freqs: &[usize]) -> Result<SourceSet<T>> {
    let mut j = Vec::with_capacity(freqs.len());
    for &fi in freqs {
        let term = problem
            .terms
            .get(fi)
            .ok_or_else(|| Error::InvalidArgument(format!("frequency index {fi} out of range")))?;
        let mut b = term.surface.apply_adjoint(&term.y)?;
        let gb = term.surface.apply(&b)?;
        for tx in 0..b.rows {
            let num = crate::scalar::norm_sqr(b.row(tx));
            let den = crate::scalar::norm_sqr(gb.row(tx));
            let c = if den > T::zero() { num / den } else { T::zero() };
            b.row_mut(tx).iter_mut().for_each(|z| *z *= c);
        }
        j.push(b);
    }
    Ok(SourceSet { freqs: freqs.to_vec(), j })
}

/// One Polak-Ribière step with exact line search on the sources, contrast frozen.
///
/// The step length uses the unclipped gradient so that it is the exact
/// minimizer along `v`; clipping only shapes the direction.
pub fn prcg_step<T: Real>(
    problem: &Problem<T>,
    sources: &mut SourceSet<T>,
    cg: &mut CgState<T>,
    chi: &[Vec<C<T>>],
    beta: f64,
    clip: f64,
) -> Result<PrcgOutcome<T>> {
    sources.check(problem, chi)?;
    let start = sources
        .freqs
        .iter()
        .zip(&sources.j)
        .zip(chi)
        .map(|((&fi, j), c)| residuals(&problem.terms[fi], j, c))
        .collect::<Result<Vec<_>>>()?;
    prcg_from(problem, sources, cg, chi, beta, clip, start).map(|(out, _)| out)
}

/// [`prcg_step`] from residuals already evaluated at the current point;
/// also returns the residuals at the updated sources.
fn prcg_from<T: Real>(
    problem: &Problem<T>,
    sources: &mut SourceSet<T>,
    cg: &mut CgState<T>,
    chi: &[Vec<C<T>>],
    beta: f64,
    clip: f64,
    mut res: Vec<Residuals<T>>,
) -> Result<(PrcgOutcome<T>, Vec<Residuals<T>>)> {
    let beta_t = T::of(beta);
    let mut per_before = Vec::with_capacity(res.len());
    let mut g_true = Vec::with_capacity(res.len());
    for ((&fi, c), r) in sources.freqs.iter().zip(chi).zip(&res) {
        let term = &problem.terms[fi];
        per_before.push(frequency_loss(term, r)?);
        g_true.push(grad_from_residuals(term, c, r, beta_t)?);
    }
    let loss_before = LossBreakdown::assemble(per_before, beta);
    let g_true = SourceSet { freqs: sources.freqs.clone(), j: g_true };
    if !g_true.is_finite() {
        return Err(Error::NonFinite("source gradient".into()));
    }
    let mut g = g_true.clone();
    g.j.iter_mut().for_each(|b| clip_gradient_magnitude(&mut b.data, T::of(clip)));

    let same_shape = |s: &Option<SourceSet<T>>| s.as_ref().is_some_and(|p| p.freqs == g.freqs);
    let gamma = if same_shape(&cg.g_prev) && same_shape(&cg.v_prev) {
        let gp = cg.g_prev.as_ref().expect("checked");
        let den = gp.norm_sqr().as_f64();
        if den > 0.0 {
            let mut diff = g.clone();
            diff.axpy(-T::one(), gp);
            (g.inner(&diff).re.as_f64() / den).max(0.0)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let mut v = g.scaled(-T::one());
    if gamma > 0.0 {
        v.axpy(T::of(gamma), cg.v_prev.as_ref().expect("checked"));
    }
    let mut slope = g_true.inner(&v).re.as_f64();
    let mut reset = false;
    if slope >= 0.0 && gamma > 0.0 {
        v = g.scaled(-T::one());
        slope = g_true.inner(&v).re.as_f64();
        reset = true;
    }

    // images of v under each operator; the loss is quadratic along v
    let mut denom = 0.0;
    let mut images = Vec::with_capacity(v.j.len());
    for ((&fi, vb), c) in v.freqs.iter().zip(&v.j).zip(chi) {
        let term = &problem.terms[fi];
        let d = term.domain.apply(vb)?;
        let cd = d.mul_rows(c);
        let sv = term.surface.apply(vb)?;
        let scd = term.surface.apply(&cd)?;
        let dstate = cd.sub(vb);
        let ys = 1.0 / term.y_norm2.as_f64();
        let is = 1.0 / term.inc_norm2.as_f64();
        denom += sv.norm_sqr().as_f64() * ys + dstate.norm_sqr().as_f64() * is;
        denom += beta * scd.norm_sqr().as_f64() * ys;
        images.push((d, dstate, sv, scd));
    }
    let alpha = if denom < 1e-30 || slope >= 0.0 { 0.0 } else { -slope / (2.0 * denom) };

    let a = C::new(T::of(alpha), T::zero());
    let mut per_after = Vec::with_capacity(res.len());
    for (i, &fi) in sources.freqs.iter().enumerate() {
        let (d, dstate, sv, scd) = &images[i];
        sources.j[i].axpy(a, &v.j[i]);
        let r = &mut res[i];
        r.e_tot.axpy(a, d);
        r.state.axpy(a, dstate);
        r.data.axpy(a, sv);
        r.cross.axpy(a, scd);
        per_after.push(frequency_loss(&problem.terms[fi], r)?);
    }
    if !sources.is_finite() {
        return Err(Error::NonFinite("contrast sources".into()));
    }
    cg.g_prev = Some(g);
    cg.v_prev = Some(v);
    let outcome = PrcgOutcome {
        alpha,
        gamma,
        loss_before,
        loss_after: LossBreakdown::assemble(per_after, beta),
        slope,
        denom,
        reset,
        e_tot: res.iter().map(|r| r.e_tot.clone()).collect(),
    };
    Ok((outcome, res))
}

/// Network plus its fixed coordinate embedding and the current forward pass.
#[derive(Clone, Debug)]
pub struct MaterialModel<T: Real> {
    pub net: NetworkState<T>,
    embedded: Array2<T>,
    cache: ForwardCache<T>,
}

impl<T: Real> MaterialModel<T> {
    pub fn new(net: NetworkState<T>, coords: &[[f64; 2]]) -> Self {
        let embedded = net.embed(coords);
        let cache = net.forward_embedded(&embedded);
        MaterialModel { net, embedded, cache }
    }

    pub fn delta_eps(&self) -> &[T] {
        &self.cache.delta_eps
    }

    pub fn sigma(&self) -> &[T] {
        &self.cache.sigma
    }

    pub fn eps_r(&self) -> Vec<f64> {
        self.cache.delta_eps.iter().map(|d| 1.0 + d.as_f64()).collect()
    }

    pub fn sigma_f64(&self) -> Vec<f64> {
        self.cache.sigma.iter().map(|s| s.as_f64()).collect()
    }

    /// Complex contrast at each listed frequency.
    pub fn contrast(&self, problem: &Problem<T>, freqs: &[usize]) -> Vec<Vec<C<T>>> {
        freqs
            .iter()
            .map(|&fi| contrast_from_offset(&self.cache.delta_eps, &self.cache.sigma, problem.terms[fi].freq))
            .collect()
    }

    /// Backprop from material-map gradients, one clipped Adam step, and a
    /// fresh forward pass. Returns the gradient norm before clipping.
    pub fn update(&mut self, d_delta_eps: &[T], d_sigma: &[T], clip: f64) -> Result<f64> {
        let mut grads = self.net.backward(&self.cache, d_delta_eps, d_sigma)?;
        let lr = self.net.cfg.lr;
        let norm = self.net.adam_step(&mut grads, clip, lr)?;
        self.cache = self.net.forward_embedded(&self.embedded);
        Ok(norm)
    }
}

/// Network updates with the sources (and so the total fields) frozen.
/// Returns the network objective before each update.
pub fn nn_phase<T: Real>(
    model: &mut MaterialModel<T>,
    problem: &Problem<T>,
    sources: &SourceSet<T>,
    e_tot: &[Batch<T>],
    beta: f64,
    n_inner: usize,
    clip: f64,
) -> Result<Vec<f64>> {
    let mut losses = Vec::with_capacity(n_inner);
    for _ in 0..n_inner {
        let chi = model.contrast(problem, &sources.freqs);
        let g = grad_chi(problem, sources, e_tot, &chi, beta)?;
        losses.push(g.loss);
        model.update(&g.d_delta_eps, &g.d_sigma, clip)?;
    }
    Ok(losses)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    /// 1-based epoch counter over the whole run.
    pub epoch: usize,
    pub stage: usize,
    pub beta: f64,
    pub losses: LossBreakdown,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub psnr_eps: Option<f64>,
    pub psnr_sigma: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainRun<T: Real> {
    pub mode: Mode,
    pub strategy: Strategy,
    pub seed: u64,
    pub logs: Vec<EpochLog>,
    pub final_eps_r: Vec<f64>,
    pub final_sigma: Vec<f64>,
    pub sources: SourceSet<T>,
    pub net: NetworkState<T>,
}

impl<T: Real> TrainRun<T> {
    fn empty(cfg: &TrainConfig) -> Self {
        TrainRun {
            mode: cfg.mode,
            strategy: cfg.strategy,
            seed: cfg.seed,
            logs: vec![],
            final_eps_r: vec![],
            final_sigma: vec![],
            sources: SourceSet::zeros(vec![], 0, 0),
            net: NetworkState::init(0, &NetConfig::default()).expect("default config is valid"),
        }
    }

    pub fn psnr_curve(&self) -> Curve {
        let (epochs, values) = self.logs.iter().filter_map(|l| l.psnr_eps.map(|p| (l.epoch, p))).unzip();
        Curve { epochs, values }
    }

    pub fn final_psnr(&self) -> Option<f64> {
        self.logs.iter().rev().find_map(|l| l.psnr_eps)
    }

    pub fn final_losses(&self) -> Option<&LossBreakdown> {
        self.logs.last().map(|l| &l.losses)
    }
}

/// A run that stopped early, with everything logged up to the failure.
#[derive(Debug)]
pub struct RunFailure<T: Real> {
    pub error: Error,
    pub partial: TrainRun<T>,
}

struct Trainer<'a, T: Real> {
    problem: &'a Problem<T>,
    cfg: &'a TrainConfig,
    truth: Option<&'a TruthProfile>,
    model: MaterialModel<T>,
    sources: SourceSet<T>,
    logs: Vec<EpochLog>,
}

impl<T: Real> Trainer<'_, T> {
    fn activate(&mut self, freqs: &[usize]) -> Result<()> {
        let fresh: Vec<usize> = freqs.iter().copied().filter(|f| !self.sources.freqs.contains(f)).collect();
        let init = init_sources(self.problem, &fresh)?;
        self.sources.freqs.extend(init.freqs);
        self.sources.j.extend(init.j);
        Ok(())
    }

    fn psnr(&self, epoch: usize, last: bool) -> Result<(Option<f64>, Option<f64>)> {
        let Some(truth) = self.truth else { return Ok((None, None)) };
        if !(last || (self.cfg.psnr_every > 0 && epoch.is_multiple_of(self.cfg.psnr_every))) {
            return Ok((None, None));
        }
        Ok((Some(truth.psnr_eps(&self.model.eps_r())?), truth.psnr_sigma(&self.model.sigma_f64())?))
    }

    /// Residuals after a contrast change; the data residual depends on `J` only.
    fn refresh(&self, res: Vec<Residuals<T>>) -> Result<Vec<Residuals<T>>> {
        let chi = self.model.contrast(self.problem, &self.sources.freqs);
        let mut out = Vec::with_capacity(res.len());
        for (i, (&fi, r)) in self.sources.freqs.iter().zip(res).enumerate() {
            let term = &self.problem.terms[fi];
            let w = r.e_tot.mul_rows(&chi[i]);
            let state = w.sub(&self.sources.j[i]);
            let cross = term.surface.apply(&w)?.sub(&term.y);
            out.push(Residuals { e_tot: r.e_tot, state, data: r.data, cross });
        }
        Ok(out)
    }

    fn current_residuals(&self) -> Result<Vec<Residuals<T>>> {
        let chi = self.model.contrast(self.problem, &self.sources.freqs);
        self.sources
            .freqs
            .iter()
            .zip(&self.sources.j)
            .zip(&chi)
            .map(|((&fi, j), c)| residuals(&self.problem.terms[fi], j, c))
            .collect()
    }

    fn alternating(&mut self, plan: &StagePlan) -> Result<()> {
        let total = plan.total_epochs();
        let mut epoch = 0;
        for (si, stage) in plan.stages.iter().enumerate() {
            self.activate(&stage.freqs)?;
            let mut cg = CgState::new();
            let mut res = self.current_residuals()?;
            for k in 1..=stage.epochs {
                epoch += 1;
                let beta = self.cfg.beta(si + 1, k, stage.epochs);
                let chi = self.model.contrast(self.problem, &self.sources.freqs);
                let (step, after) =
                    prcg_from(self.problem, &mut self.sources, &mut cg, &chi, beta, self.cfg.source_clip, res)?;
                nn_phase(
                    &mut self.model,
                    self.problem,
                    &self.sources,
                    &step.e_tot,
                    beta,
                    self.cfg.n_inner,
                    self.cfg.net_clip,
                )?;
                res = self.refresh(after)?;
                let per = self
                    .sources
                    .freqs
                    .iter()
                    .zip(&res)
                    .map(|(&fi, r)| frequency_loss(&self.problem.terms[fi], r))
                    .collect::<Result<Vec<_>>>()?;
                let (psnr_eps, psnr_sigma) = self.psnr(epoch, epoch == total)?;
                self.logs.push(EpochLog {
                    epoch,
                    stage: si + 1,
                    beta,
                    losses: LossBreakdown::assemble(per, beta),
                    alpha: Some(step.alpha),
                    gamma: Some(step.gamma),
                    psnr_eps,
                    psnr_sigma,
                });
            }
        }
        Ok(())
    }

    fn joint(&mut self, plan: &StagePlan) -> Result<()> {
        let total = plan.total_epochs();
        let ncfg = self.model.net.cfg.clone();
        let mut epoch = 0;
        for (si, stage) in plan.stages.iter().enumerate() {
            self.activate(&stage.freqs)?;
            let n_real: usize = self.sources.j.iter().map(|b| 2 * b.data.len()).sum();
            let mut adam = AdamState::<T>::new(n_real);
            for k in 1..=stage.epochs {
                epoch += 1;
                let beta = self.cfg.beta(si + 1, k, stage.epochs);
                let beta_t = T::of(beta);
                let chi = self.model.contrast(self.problem, &self.sources.freqs);
                let mut per = Vec::with_capacity(chi.len());
                let mut flat_g = Vec::with_capacity(n_real);
                let mut fields = Vec::with_capacity(chi.len());
                for (i, &fi) in self.sources.freqs.iter().enumerate() {
                    let term = &self.problem.terms[fi];
                    let r = residuals(term, &self.sources.j[i], &chi[i])?;
                    per.push(frequency_loss(term, &r)?);
                    let g = grad_from_residuals(term, &chi[i], &r, beta_t)?;
                    flat_g.extend(g.data.iter().flat_map(|z| [z.re, z.im]));
                    fields.push(r.e_tot);
                }
                let losses = LossBreakdown::assemble(per, beta);
                let cg = grad_chi(self.problem, &self.sources, &fields, &chi, beta)?;
                self.model.update(&cg.d_delta_eps, &cg.d_sigma, self.cfg.net_clip)?;
                clip_global_norm(&mut flat_g, self.cfg.joint_source_clip, "source")?;
                let mut flat_j: Vec<T> =
                    self.sources.j.iter().flat_map(|b| b.data.iter().flat_map(|z| [z.re, z.im])).collect();
                adam.update(&mut flat_j, &flat_g, ncfg.lr, ncfg.beta1, ncfg.beta2, ncfg.eps_adam);
                let mut it = flat_j.chunks_exact(2);
                for b in self.sources.j.iter_mut() {
                    for z in b.data.iter_mut() {
                        let p = it.next().expect("sized");
                        *z = C::new(p[0], p[1]);
                    }
                }
                let (psnr_eps, psnr_sigma) = self.psnr(epoch, epoch == total)?;
                self.logs.push(EpochLog {
                    epoch,
                    stage: si + 1,
                    beta,
                    losses,
                    alpha: None,
                    gamma: None,
                    psnr_eps,
                    psnr_sigma,
                });
            }
        }
        Ok(())
    }

    fn finish(self) -> TrainRun<T> {
        TrainRun {
            mode: self.cfg.mode,
            strategy: self.cfg.strategy,
            seed: self.cfg.seed,
            logs: self.logs,
            final_eps_r: self.model.eps_r(),
            final_sigma: self.model.sigma_f64(),
            sources: self.sources,
            net: self.model.net,
        }
    }
}

/// Runs one inversion on prebuilt operators.
pub fn run_on<T: Real>(
    problem: &Problem<T>,
    cfg: &TrainConfig,
    truth: Option<&TruthProfile>,
) -> std::result::Result<TrainRun<T>, Box<RunFailure<T>>> {
    let setup = NetworkState::init(cfg.seed, &cfg.net).and_then(|net| {
        if let Some(t) = truth {
            if t.eps_true.n != problem.scene.n_grid {
                return Err(Error::dims(problem.scene.n_grid, t.eps_true.n));
            }
        }
        Ok((net, cfg.plan(problem.terms.len())?))
    });
    let (net, plan) = setup.map_err(|error| Box::new(RunFailure { error, partial: TrainRun::empty(cfg) }))?;
    let model = MaterialModel::new(net, &problem.scene.normalized_coords());
    let mut trainer = Trainer {
        problem,
        cfg,
        truth,
        model,
        sources: SourceSet::zeros(vec![], problem.n_tx(), problem.n_pixels()),
        logs: Vec::with_capacity(plan.total_epochs()),
    };
    let outcome = match cfg.mode {
        Mode::SimulCc => trainer.joint(&plan),
        Mode::AltCc | Mode::Alt => trainer.alternating(&plan),
    };
    match outcome {
        Ok(()) => Ok(trainer.finish()),
        Err(error) => Err(Box::new(RunFailure { error, partial: trainer.finish() })),
    }
}

/// Builds the operators for `mset` and runs one inversion.
pub fn run<T: Real>(
    mset: &MeasurementSet<T>,
    cfg: &TrainConfig,
    truth: Option<&TruthProfile>,
) -> std::result::Result<TrainRun<T>, Box<RunFailure<T>>> {
    let problem =
        Problem::build(mset, cfg.pad_factor).map_err(|error| Box::new(RunFailure { error, partial: TrainRun::empty(cfg) }))?;
    run_on(&problem, cfg, truth)
}

#[derive(Debug)]
pub struct MonteCarlo<T: Real> {
    pub runs: Vec<TrainRun<T>>,
    /// Seeds whose runs failed, with the reason.
    pub failures: Vec<(u64, String)>,
    /// PSNR statistics over the successful runs (needs a truth profile).
    pub stats: Option<RunStatistics>,
}

/// Repeats `run_on` with seeds `base_seed..base_seed + n_runs`.
pub fn monte_carlo<T: Real>(
    problem: &Problem<T>,
    cfg: &TrainConfig,
    truth: Option<&TruthProfile>,
    n_runs: usize,
    base_seed: u64,
) -> Result<MonteCarlo<T>> {
    if n_runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let mut runs = Vec::with_capacity(n_runs);
    let mut failures = Vec::new();
    for i in 0..n_runs as u64 {
        let seed = base_seed + i;
        let c = TrainConfig { seed, ..cfg.clone() };
        match run_on(problem, &c, truth) {
            Ok(r) => runs.push(r),
            Err(f) => failures.push((seed, f.error.to_string())),
        }
    }
    let stats = if truth.is_some() && !runs.is_empty() {
        Some(summarize_runs(&runs.iter().map(TrainRun::psnr_curve).collect::<Vec<_>>())?)
    } else {
        None
    };
    Ok(MonteCarlo { runs, failures, stats })
}
