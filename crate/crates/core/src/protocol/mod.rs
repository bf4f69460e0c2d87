//! Charging schedules: batches of identical qubits colliding with a cavity
//! that starts in the vacuum.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::fock::{hermitian_eigenvalues, CMatrix, DensityMatrix};
use crate::jc::{build_qubit_state, check_edge, CollisionUnitary, Coupling, QubitParams};
use crate::scalar::Real;

/// Default number of collisions between ergotropy/purity samples.
pub const DEFAULT_METRIC_STRIDE: usize = 100;

/// `b` consecutive qubits prepared with the same parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec<T> {
    pub b: usize,
    pub params: QubitParams<T>,
}

impl<T: Real> BatchSpec<T> {
    pub fn new(b: usize, c: T, q: T) -> Self {
        Self {
            b,
            params: QubitParams { c, q },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec<T> {
    pub coupling: Coupling<T>,
    pub n_c: usize,
    pub batches: Vec<BatchSpec<T>>,
    pub metric_stride: usize,
}

impl<T: Real> ProtocolSpec<T> {
    pub fn new(coupling: Coupling<T>, n_c: usize, batches: Vec<BatchSpec<T>>) -> Self {
        Self {
            coupling,
            n_c,
            batches,
            metric_stride: DEFAULT_METRIC_STRIDE,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.metric_stride = stride;
        self
    }

    /// Lengthen the last batch so the schedule has `total` collisions.
    /// Schedules already at least that long are returned unchanged.
    pub fn extended_to(mut self, total: usize) -> Self {
        let have = self.total_collisions();
        if let Some(last) = self.batches.last_mut() {
            if total > have {
                last.b += total - have;
            }
        }
        self
    }

    pub fn total_collisions(&self) -> usize {
        self.batches.iter().map(|b| b.b).sum()
    }

    fn validate_environment(&self) -> Result<()> {
        self.coupling.validated()?;
        if self.metric_stride == 0 {
            return Err(MaserError::Invalid("metric stride must be positive".into()));
        }
        let chamber_pair = 4 * self.coupling.m as usize;
        if self.n_c < chamber_pair {
            return Err(MaserError::Invalid(format!(
                "truncation n_c = {} must cover the first two chambers (>= 4m = {chamber_pair})",
                self.n_c
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_environment()?;
        if self.total_collisions() == 0 {
            return Err(MaserError::Invalid("protocol has no collisions".into()));
        }
        for batch in &self.batches {
            if batch.b == 0 {
                return Err(MaserError::Invalid("batch size must be positive".into()));
            }
            batch.params.validate()?;
        }
        Ok(())
    }
}

/// Per-collision record of a charging run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    /// Energy after `k` collisions, `k = 0..=K`.
    pub energies: Vec<T>,
    /// Collisions at which ergotropy and purity were sampled.
    pub sampled_k: Vec<usize>,
    pub ergotropies: Vec<T>,
    pub purities: Vec<T>,
    pub final_state: DensityMatrix<T>,
    /// Largest population seen in the watched truncation levels.
    pub edge_peak: T,
}

impl<T: Real> Trajectory<T> {
    /// Zero-collision trajectory starting from an arbitrary state.
    pub fn from_state(state: DensityMatrix<T>) -> Result<Self> {
        let (e, w, p) = sample(state.entries())?;
        Ok(Self {
            energies: vec![e],
            sampled_k: vec![0],
            ergotropies: vec![w],
            purities: vec![p],
            edge_peak: crate::jc::edge_population(state.entries()),
            final_state: state,
        })
    }

    pub fn collisions(&self) -> usize {
        self.energies.len() - 1
    }

    pub fn final_energy(&self) -> T {
        *self.energies.last().expect("trajectory has k = 0")
    }

    pub fn final_ergotropy(&self) -> T {
        *self.ergotropies.last().expect("final collision sampled")
    }

    pub fn final_purity(&self) -> T {
        *self.purities.last().expect("final collision sampled")
    }

    /// `max |E_k − E_{k−1}|` over the last `window` collisions.
    pub fn max_step(&self, window: usize) -> T {
        let start = self.energies.len().saturating_sub(window + 1);
        self.energies[start..]
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(T::zero(), T::max)
    }

    /// Sampled `(k, ergotropy)` pairs with `k >= from`.
    pub fn ergotropies_since(&self, from: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.sampled_k
            .iter()
            .copied()
            .zip(self.ergotropies.iter().copied())
            .filter(move |&(k, _)| k >= from)
    }
}

fn energy_of<T: Real>(rho: &CMatrix<T>) -> T {
    (0..rho.dim())
        .map(|n| T::from_usize_lossy(n) * rho[(n, n)].re)
        .sum()
}

/// `(energy, ergotropy, purity)` of a trusted state matrix.
fn sample<T: Real>(rho: &CMatrix<T>) -> Result<(T, T, T)> {
    let e = energy_of(rho);
    let spectrum = hermitian_eigenvalues(rho)?;
    let passive: T = spectrum
        .iter()
        .enumerate()
        .map(|(k, &r)| T::from_usize_lossy(k) * r)
        .sum();
    let mut w = e - passive;
    if w < T::zero() && w >= -T::tol(1e-10) {
        w = T::zero();
    }
    let p = rho.as_slice().iter().map(|z| z.norm_sqr()).sum();
    Ok((e, w, p))
}

/// Continue `traj` through `batches`, sampling at multiples of `stride` and
/// at the final collision.
fn evolve<T: Real>(
    mut traj: Trajectory<T>,
    batches: &[BatchSpec<T>],
    unitary: &CollisionUnitary<T>,
    stride: usize,
) -> Result<Trajectory<T>> {
    let start = traj.collisions();
    let added: usize = batches.iter().map(|b| b.b).sum();
    if added == 0 {
        return Ok(traj);
    }
    let end = start + added;
    // A final-only sample from a previous run is not part of the stride grid.
    if let Some(&last) = traj.sampled_k.last() {
        if last == start && !start.is_multiple_of(stride) {
            traj.sampled_k.pop();
            traj.ergotropies.pop();
            traj.purities.pop();
        }
    }
    traj.energies.reserve(added);

    let mut cur = traj.final_state.into_entries();
    let mut next = CMatrix::zeros(cur.dim());
    let mut k = start;
    for batch in batches {
        let qubit = build_qubit_state(batch.params)?;
        for _ in 0..batch.b {
            k += 1;
            unitary.channel_into(&cur, &qubit, &mut next);
            std::mem::swap(&mut cur, &mut next);
            let edge = check_edge(&cur).map_err(|e| match e {
                MaserError::TruncationOverflow { population, .. } => MaserError::TruncationOverflow {
                    collision: Some(k),
                    population,
                },
                other => other,
            })?;
            traj.edge_peak = traj.edge_peak.max(edge);
            if k.is_multiple_of(stride) || k == end {
                let (e, w, p) = sample(&cur)?;
                traj.energies.push(e);
                traj.sampled_k.push(k);
                traj.ergotropies.push(w);
                traj.purities.push(p);
            } else {
                traj.energies.push(energy_of(&cur));
            }
        }
    }
    traj.final_state = DensityMatrix::from_trusted(cur);
    Ok(traj)
}

/// Run `spec` from the vacuum.
pub fn run_protocol<T: Real>(spec: &ProtocolSpec<T>) -> Result<Trajectory<T>> {
    spec.validate()?;
    let unitary = CollisionUnitary::from_coupling(&spec.coupling, spec.n_c)?;
    let start = Trajectory::from_state(DensityMatrix::vacuum(spec.n_c))?;
    evolve(start, &spec.batches, &unitary, spec.metric_stride)
}

/// Continue an existing trajectory with one more batch, using the coupling,
/// truncation and stride of `spec`. `run(A ++ B)` and `extend(run(A), B)`
/// produce identical records.
pub fn extend_protocol<T: Real>(
    traj: Trajectory<T>,
    extra: BatchSpec<T>,
    spec: &ProtocolSpec<T>,
) -> Result<Trajectory<T>> {
    spec.validate_environment()?;
    if traj.final_state.dim() != spec.n_c {
        return Err(MaserError::DimensionMismatch {
            expected: spec.n_c,
            found: traj.final_state.dim(),
        });
    }
    if extra.b == 0 {
        return Err(MaserError::Invalid("batch size must be positive".into()));
    }
    extra.params.validate()?;
    let unitary = CollisionUnitary::from_coupling(&spec.coupling, spec.n_c)?;
    evolve(traj, &[extra], &unitary, spec.metric_stride)
}
