//! Box-bounded minimization on `[0, 1]^d` with finite-difference gradients.
//!
//! Each iteration builds a limited-memory BFGS direction on the variables not
//! pinned at a bound, projects the trial step back into the box and
//! backtracks until the projected step satisfies an Armijo decrease.
//! `multi_restart` repeats this from seeded uniform starting points.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::scalar::Real;

const LBFGS_MEMORY: usize = 8;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;
const PROJECTED_GRADIENT_TOL: f64 = 1e-10;

/// A scalar function of `[0, 1]^d`.
pub trait Objective<T>: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, p: &[T]) -> Result<T>;
}

/// Wrap a closure as an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T, F> Objective<T> for FnObjective<F>
where
    F: Fn(&[T]) -> Result<T> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, p: &[T]) -> Result<T> {
        (self.f)(p)
    }
}

/// Counts evaluations of the wrapped objective.
struct Counted<'a, T, O: Objective<T> + ?Sized> {
    inner: &'a O,
    calls: AtomicUsize,
    _marker: std::marker::PhantomData<fn() -> T>,
}

impl<'a, T, O: Objective<T> + ?Sized> Counted<'a, T, O> {
    fn new(inner: &'a O) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
            _marker: std::marker::PhantomData,
        }
    }
}

impl<T, O: Objective<T> + ?Sized> Objective<T> for Counted<'_, T, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn evaluate(&self, p: &[T]) -> Result<T> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptOptions {
    pub fd_step: f64,
    pub max_iterations: usize,
    pub loss_tolerance: f64,
    pub step_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            fd_step: 1e-3,
            max_iterations: 200,
            loss_tolerance: 1e-8,
            step_tolerance: 1e-8,
            restarts: 8,
            seed: 0,
        }
    }
}

impl OptOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0 && self.fd_step < 0.1) {
            return Err(MaserError::OutOfRange {
                name: "fd_step",
                value: self.fd_step,
                range: "(0, 0.1)",
            });
        }
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(MaserError::Invalid(
                "max_iterations and restarts must be positive".into(),
            ));
        }
        if !(self.loss_tolerance >= 0.0 && self.step_tolerance >= 0.0) {
            return Err(MaserError::Invalid("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    LossTolerance,
    StepTolerance,
    ProjectedGradient,
    LineSearchExhausted,
    MaxIterations,
}

/// Outcome of one bounded descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descent<T> {
    pub params: Vec<T>,
    pub loss: T,
    /// Loss at every accepted iterate, starting with the initial point.
    pub loss_history: Vec<T>,
    pub reason: Convergence,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult<T> {
    pub best_params: Vec<T>,
    pub best_loss: T,
    /// History of the restart that produced the optimum.
    pub loss_history: Vec<T>,
    /// Final loss per restart; `inf` for restarts whose evaluation failed.
    pub restart_losses: Vec<T>,
    pub restart_starts: Vec<Vec<T>>,
    pub evaluations: usize,
    pub reason: Convergence,
}

fn clamp_unit<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// Finite-difference gradient on the unit box. Central where both probes fit
/// in `[0, 1]`, one-sided at the faces; `f0 = f(p)` is needed only for the
/// one-sided case and evaluated on demand when `None`.
pub fn numerical_gradient<T: Real, O: Objective<T> + ?Sized>(
    f: &O,
    p: &[T],
    fd_step: T,
    f0: Option<T>,
) -> Result<Vec<T>> {
    enum Probe {
        Central,
        Forward,
        Backward,
    }
    let h = fd_step;
    let kinds: Vec<Probe> = p
        .iter()
        .map(|&x| {
            if x - h >= T::zero() && x + h <= T::one() {
                Probe::Central
            } else if x + h <= T::one() {
                Probe::Forward
            } else {
                Probe::Backward
            }
        })
        .collect();
    let needs_base = kinds.iter().any(|k| !matches!(k, Probe::Central));
    let base = match (needs_base, f0) {
        (true, Some(v)) => v,
        (true, None) => f.evaluate(p)?,
        (false, _) => T::zero(),
    };

    let mut probes: Vec<(usize, Vec<T>)> = Vec::with_capacity(2 * p.len());
    for (i, kind) in kinds.iter().enumerate() {
        let shifted = |delta: T| {
            let mut q = p.to_vec();
            q[i] += delta;
            q
        };
        match kind {
            Probe::Central => {
                probes.push((i, shifted(h)));
                probes.push((i, shifted(-h)));
            }
            Probe::Forward => probes.push((i, shifted(h))),
            Probe::Backward => probes.push((i, shifted(-h))),
        }
    }
    let values: Vec<T> = probes
        .par_iter()
        .map(|(i, q)| {
            f.evaluate(q).map_err(|e| MaserError::Gradient {
                coordinate: *i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut grad = Vec::with_capacity(p.len());
    let mut at = 0;
    for kind in &kinds {
        let g = match kind {
            Probe::Central => {
                let g = (values[at] - values[at + 1]) / (T::lit(2.0) * h);
                at += 2;
                g
            }
            Probe::Forward => {
                let g = (values[at] - base) / h;
                at += 1;
                g
            }
            Probe::Backward => {
                let g = (base - values[at]) / h;
                at += 1;
                g
            }
        };
        grad.push(g);
    }
    Ok(grad)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn inf_norm<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Coordinates held at a bound by the gradient.
fn pinned<T: Real>(x: &[T], g: &[T]) -> Vec<bool> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| (xi <= T::zero() && gi > T::zero()) || (xi >= T::one() && gi < T::zero()))
        .collect()
}

fn lbfgs_direction<T: Real>(g: &[T], memory: &VecDeque<(Vec<T>, Vec<T>)>, fixed: &[bool]) -> Vec<T> {
    let mask = |v: &[T]| -> Vec<T> {
        v.iter()
            .zip(fixed)
            .map(|(&x, &f)| if f { T::zero() } else { x })
            .collect()
    };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let (s, y) = (mask(s), mask(y));
        let sy = dot(&s, &y);
        if sy <= T::zero() {
            alphas.push(T::zero());
            continue;
        }
        let a = dot(&s, &q) / sy;
        for (qi, &yi) in q.iter_mut().zip(&y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y)) = memory.back() {
        let (s, y) = (mask(s), mask(y));
        let yy = dot(&y, &y);
        let sy = dot(&s, &y);
        if yy > T::zero() && sy > T::zero() {
            let gamma = sy / yy;
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
    }
    for ((s, y), &a) in memory.iter().zip(alphas.iter().rev()) {
        let (s, y) = (mask(s), mask(y));
        let sy = dot(&s, &y);
        if sy <= T::zero() {
            continue;
        }
        let b = dot(&y, &q) / sy;
        for (qi, &si) in q.iter_mut().zip(&s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|&x| -x).collect()
}

/// Bounded descent from `init` (clamped into the box).
pub fn minimize<T: Real, O: Objective<T> + ?Sized>(f: &O, init: &[T], opts: &OptOptions) -> Result<Descent<T>> {
    opts.validate()?;
    if init.len() != f.dim() {
        return Err(MaserError::DimensionMismatch {
            expected: f.dim(),
            found: init.len(),
        });
    }
    let h = T::lit(opts.fd_step);
    let loss_tol = T::lit(opts.loss_tolerance);
    let step_tol = T::lit(opts.step_tolerance);
    let c1 = T::lit(ARMIJO_C1);

    let mut x: Vec<T> = init.iter().map(|&v| clamp_unit(v)).collect();
    let mut fx = f.evaluate(&x)?;
    let mut g = numerical_gradient(f, &x, h, Some(fx))?;
    let mut history = vec![fx];
    let mut memory: VecDeque<(Vec<T>, Vec<T>)> = VecDeque::with_capacity(LBFGS_MEMORY);

    for iteration in 0..opts.max_iterations {
        let fixed = pinned(&x, &g);
        let projected: Vec<T> = g
            .iter()
            .zip(&fixed)
            .map(|(&gi, &fi)| if fi { T::zero() } else { gi })
            .collect();
        if inf_norm(&projected) <= T::lit(PROJECTED_GRADIENT_TOL) {
            return Ok(Descent {
                params: x,
                loss: fx,
                loss_history: history,
                reason: Convergence::ProjectedGradient,
                iterations: iteration,
            });
        }

        let mut d = lbfgs_direction(&g, &memory, &fixed);
        if !(dot(&d, &g) < T::zero()) {
            memory.clear();
            d = projected.iter().map(|&v| -v).collect();
        }
        // Without curvature information, cap the first trial step to a tenth of the box.
        let mut t = if memory.is_empty() {
            T::one().min(T::lit(0.1) / inf_norm(&d))
        } else {
            T::one()
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<T> = x.iter().zip(&d).map(|(&xi, &di)| clamp_unit(xi + t * di)).collect();
            let step: Vec<T> = trial.iter().zip(&x).map(|(&a, &b)| a - b).collect();
            if inf_norm(&step) == T::zero() {
                break;
            }
            // A trial point the model cannot represent (e.g. truncation
            // overflow) is treated like an insufficient decrease.
            let ft = match f.evaluate(&trial) {
                Ok(v) => v,
                Err(e) if e.is_numerical() => {
                    t *= T::lit(0.5);
                    continue;
                }
                Err(e) => return Err(e),
            };
            if ft <= fx + c1 * dot(&g, &step) && ft <= fx {
                match numerical_gradient(f, &trial, h, Some(ft)) {
                    Ok(gt) => {
                        accepted = Some((trial, step, ft, gt));
                        break;
                    }
                    Err(MaserError::Gradient { source, .. }) if source.is_numerical() => {}
                    Err(e) => return Err(e),
                }
            }
            t *= T::lit(0.5);
        }
        let Some((xn, s, fxn, gn)) = accepted else {
            return Ok(Descent {
                params: x,
                loss: fx,
                loss_history: history,
                reason: Convergence::LineSearchExhausted,
                iterations: iteration,
            });
        };

        let y: Vec<T> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        if dot(&s, &y) > T::epsilon() * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if memory.len() == LBFGS_MEMORY {
                memory.pop_front();
            }
            memory.push_back((s.clone(), y));
        }
        let decrease = fx - fxn;
        x = xn;
        fx = fxn;
        g = gn;
        history.push(fx);

        if decrease.abs() < loss_tol {
            return Ok(Descent {
                params: x,
                loss: fx,
                loss_history: history,
                reason: Convergence::LossTolerance,
                iterations: iteration + 1,
            });
        }
        if inf_norm(&s) < step_tol {
            return Ok(Descent {
                params: x,
                loss: fx,
                loss_history: history,
                reason: Convergence::StepTolerance,
                iterations: iteration + 1,
            });
        }
    }
    Ok(Descent {
        params: x,
        loss: fx,
        loss_history: history,
        reason: Convergence::MaxIterations,
        iterations: opts.max_iterations,
    })
}

/// Starting points drawn uniformly from the box.
pub fn restart_points<T: Real>(dim: usize, opts: &OptOptions) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.restarts)
        .map(|_| (0..dim).map(|_| T::lit(rng.gen::<f64>())).collect())
        .collect()
}

/// [`minimize`] from `opts.restarts` seeded starting points; keeps the best.
pub fn multi_restart<T: Real, O: Objective<T> + ?Sized>(f: &O, opts: &OptOptions) -> Result<OptResult<T>> {
    opts.validate()?;
    let starts = restart_points::<T>(f.dim(), opts);
    let counted = Counted::new(f);
    let runs: Vec<Result<Descent<T>>> = starts.par_iter().map(|s| minimize(&counted, s, opts)).collect();

    let mut best: Option<Descent<T>> = None;
    let mut restart_losses = Vec::with_capacity(runs.len());
    let mut failures = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(d) => {
                restart_losses.push(d.loss);
                if best.as_ref().is_none_or(|b| d.loss < b.loss) {
                    best = Some(d);
                }
            }
            Err(e) => {
                restart_losses.push(T::infinity());
                failures.push(format!("restart {i}: {e}"));
            }
        }
    }
    let best = best.ok_or_else(|| MaserError::Optimization(failures.join("; ")))?;
    Ok(OptResult {
        best_params: best.params,
        best_loss: best.loss,
        loss_history: best.loss_history,
        restart_losses,
        restart_starts: starts,
        evaluations: counted.calls.load(Ordering::Relaxed),
        reason: best.reason,
    })
}
