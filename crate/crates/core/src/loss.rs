//! Composite charging loss
//!
//! `L = −W (1−c̄)(1−q̄) / (W + (1−c̄) + (1−q̄)) + λ Σ_{k ∈ window} |E_k − E_{k−1}|`
//!
//! where `W` is the ergotropy after the full `n`-qubit cycle, `c̄`, `q̄` are the
//! qubit-weighted mean preparation parameters and the window is the trailing
//! `⌈η n⌉` collisions.

use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::jc::{Coupling, QubitParams};
use crate::optimizer::Objective;
use crate::protocol::{run_protocol, BatchSpec, ProtocolSpec, Trajectory};
use crate::scalar::Real;

/// Penalty window used for a single stream of identical qubits.
pub const SINGLE_BATCH_ETA: f64 = 0.20;
/// Penalty window used for multi-batch streams.
pub const MULTI_BATCH_ETA: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig<T> {
    pub lambda: T,
    pub eta_fraction: T,
    pub n_qubits: usize,
}

impl<T: Real> LossConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(MaserError::OutOfRange {
                name: "lambda",
                value: self.lambda.to_f64_lossy(),
                range: "[0, inf)",
            });
        }
        if !(self.eta_fraction > T::zero() && self.eta_fraction <= T::one()) {
            return Err(MaserError::OutOfRange {
                name: "eta_fraction",
                value: self.eta_fraction.to_f64_lossy(),
                range: "(0, 1]",
            });
        }
        let floor = (self.eta_fraction * T::from_usize_lossy(self.n_qubits)).floor();
        if floor < T::one() {
            return Err(MaserError::Invalid(format!(
                "penalty window is empty: eta_fraction {} of {} qubits",
                self.eta_fraction, self.n_qubits
            )));
        }
        Ok(())
    }

    /// Number of trailing collisions in the penalty window, `⌈η n⌉`.
    pub fn window(&self) -> usize {
        let w = (self.eta_fraction * T::from_usize_lossy(self.n_qubits)).ceil();
        w.to_usize().unwrap_or(0).min(self.n_qubits)
    }
}

/// Preparation parameters per batch together with the batch lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector<T> {
    pub pairs: Vec<QubitParams<T>>,
    pub batch_sizes: Vec<usize>,
}

impl<T: Real> ParamVector<T> {
    /// Every batch of the same length `b`.
    pub fn uniform(pairs: Vec<QubitParams<T>>, b: usize) -> Self {
        let batch_sizes = vec![b; pairs.len()];
        Self { pairs, batch_sizes }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() || self.pairs.len() != self.batch_sizes.len() {
            return Err(MaserError::Invalid(
                "parameter vector needs one size per (c, q) pair".into(),
            ));
        }
        if self.batch_sizes.contains(&0) {
            return Err(MaserError::Invalid("batch size must be positive".into()));
        }
        self.pairs.iter().try_for_each(QubitParams::validate)
    }

    pub fn total_qubits(&self) -> usize {
        self.batch_sizes.iter().sum()
    }

    pub fn batches(&self) -> Vec<BatchSpec<T>> {
        self.pairs
            .iter()
            .zip(&self.batch_sizes)
            .map(|(&params, &b)| BatchSpec { b, params })
            .collect()
    }

    /// Flattened `[c₀, q₀, c₁, q₁, …]`.
    pub fn flatten(&self) -> Vec<T> {
        self.pairs.iter().flat_map(|p| [p.c, p.q]).collect()
    }
}

/// Qubit-weighted means `(c̄, q̄)`.
pub fn mean_params<T: Real>(params: &ParamVector<T>) -> (T, T) {
    let total = T::from_usize_lossy(params.total_qubits());
    let (mut c, mut q) = (T::zero(), T::zero());
    for (p, &b) in params.pairs.iter().zip(&params.batch_sizes) {
        let w = T::from_usize_lossy(b);
        c += w * p.c;
        q += w * p.q;
    }
    (c / total, q / total)
}

/// `Σ |E_k − E_{k−1}|` over the trailing window (λ is applied by the caller).
pub fn stability_penalty<T: Real>(energies: &[T], config: &LossConfig<T>) -> Result<T> {
    if energies.len() != config.n_qubits + 1 {
        return Err(MaserError::DimensionMismatch {
            expected: config.n_qubits + 1,
            found: energies.len(),
        });
    }
    let window = config.window();
    if window == 0 {
        return Err(MaserError::Invalid("penalty window is empty".into()));
    }
    let start = energies.len() - 1 - window;
    Ok(energies[start..]
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .sum())
}

/// `−W (1−c̄)(1−q̄) / (W + (1−c̄) + (1−q̄))`, and 0 when the denominator vanishes.
pub fn charging_term<T: Real>(ergotropy: T, c_bar: T, q_bar: T) -> T {
    let (a, b) = (T::one() - c_bar, T::one() - q_bar);
    let denom = ergotropy + a + b;
    if denom == T::zero() {
        return T::zero();
    }
    -(ergotropy * a * b) / denom
}

/// Simulation context of a loss evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossContext<T> {
    pub coupling: Coupling<T>,
    pub n_c: usize,
    pub config: LossConfig<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown<T> {
    pub loss: T,
    pub charging_term: T,
    pub penalty: T,
    pub ergotropy: T,
    pub c_bar: T,
    pub q_bar: T,
}

/// Run the `n`-qubit cycle for `params` and score it.
pub fn evaluate_loss_detailed<T: Real>(
    params: &ParamVector<T>,
    ctx: &LossContext<T>,
) -> Result<(LossBreakdown<T>, Trajectory<T>)> {
    ctx.config.validate()?;
    params.validate()?;
    if params.total_qubits() != ctx.config.n_qubits {
        return Err(MaserError::Invalid(format!(
            "batches hold {} qubits but the loss expects {}",
            params.total_qubits(),
            ctx.config.n_qubits
        )));
    }
    let spec = ProtocolSpec::new(ctx.coupling, ctx.n_c, params.batches()).with_stride(ctx.config.n_qubits);
    let traj = run_protocol(&spec)?;
    let ergotropy = traj.final_ergotropy();
    let (c_bar, q_bar) = mean_params(params);
    let term = charging_term(ergotropy, c_bar, q_bar);
    let penalty = stability_penalty(&traj.energies, &ctx.config)?;
    let breakdown = LossBreakdown {
        loss: term + ctx.config.lambda * penalty,
        charging_term: term,
        penalty,
        ergotropy,
        c_bar,
        q_bar,
    };
    Ok((breakdown, traj))
}

pub fn evaluate_loss<T: Real>(params: &ParamVector<T>, ctx: &LossContext<T>) -> Result<(T, Trajectory<T>)> {
    evaluate_loss_detailed(params, ctx).map(|(b, t)| (b.loss, t))
}

/// One batch of the optimized schedule: free, or pinned to given parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSlot<T> {
    pub b: usize,
    pub fixed: Option<QubitParams<T>>,
}

/// The loss as a function of the free `(c, q)` coordinates of a batch layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingObjective<T> {
    pub ctx: LossContext<T>,
    pub layout: Vec<BatchSlot<T>>,
}

impl<T: Real> ChargingObjective<T> {
    pub fn new(ctx: LossContext<T>, layout: Vec<BatchSlot<T>>) -> Result<Self> {
        ctx.config.validate()?;
        let total: usize = layout.iter().map(|s| s.b).sum();
        if total != ctx.config.n_qubits {
            return Err(MaserError::Invalid(format!(
                "batch layout holds {total} qubits but the loss expects {}",
                ctx.config.n_qubits
            )));
        }
        if layout.iter().all(|s| s.fixed.is_some()) {
            return Err(MaserError::Invalid("batch layout has no free parameters".into()));
        }
        Ok(Self { ctx, layout })
    }

    /// `count` free batches of `b` qubits each.
    pub fn uniform(ctx: LossContext<T>, count: usize, b: usize) -> Result<Self> {
        Self::new(ctx, vec![BatchSlot { b, fixed: None }; count])
    }

    /// Fill the free slots from `[c, q, c, q, …]`.
    pub fn params(&self, free: &[T]) -> Result<ParamVector<T>> {
        if free.len() != self.free_dim() {
            return Err(MaserError::DimensionMismatch {
                expected: self.free_dim(),
                found: free.len(),
            });
        }
        let mut it = free.chunks(2);
        let pairs = self
            .layout
            .iter()
            .map(|slot| {
                slot.fixed.unwrap_or_else(|| {
                    let c = it.next().expect("length checked");
                    QubitParams { c: c[0], q: c[1] }
                })
            })
            .collect();
        Ok(ParamVector {
            pairs,
            batch_sizes: self.layout.iter().map(|s| s.b).collect(),
        })
    }

    pub fn free_dim(&self) -> usize {
        2 * self.layout.iter().filter(|s| s.fixed.is_none()).count()
    }

    pub fn breakdown(&self, free: &[T]) -> Result<(LossBreakdown<T>, Trajectory<T>)> {
        evaluate_loss_detailed(&self.params(free)?, &self.ctx)
    }
}

impl<T: Real> Objective<T> for ChargingObjective<T> {
    fn dim(&self) -> usize {
        self.free_dim()
    }

    fn evaluate(&self, p: &[T]) -> Result<T> {
        Ok(self.breakdown(p)?.0.loss)
    }
}
