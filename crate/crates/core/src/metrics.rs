//! Figures of merit of a battery state. Energies are in units of the cavity
//! frequency, with the Fock ladder `ε_k = k`.

use serde::{Deserialize, Serialize};

use crate::error::{MaserError, Result};
use crate::fock::{purity, DensityMatrix};
use crate::scalar::Real;

/// Fock-level populations `ρ^{(n,n)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationVector<T> {
    pub probs: Vec<T>,
}

impl<T: Real> PopulationVector<T> {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sum(&self) -> T {
        self.probs.iter().copied().sum()
    }

    /// Extend with zeros (or truncate) to `len` levels.
    pub fn padded(mut self, len: usize) -> Self {
        self.probs.resize(len, T::zero());
        self
    }

    /// Total population at levels `>= n`.
    pub fn tail(&self, n: usize) -> T {
        self.probs.iter().skip(n).copied().sum()
    }

    pub fn mean_level(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, &p)| T::from_usize_lossy(n) * p)
            .sum()
    }
}

/// `E = Tr(a†a ρ) = Σ n ρ_nn`.
pub fn energy<T: Real>(rho: &DensityMatrix<T>) -> T {
    (0..rho.dim())
        .map(|n| T::from_usize_lossy(n) * rho.population(n))
        .sum()
}

fn passive_energy_from_spectrum<T: Real>(descending: &[T]) -> T {
    descending
        .iter()
        .enumerate()
        .map(|(k, &r)| T::from_usize_lossy(k) * r)
        .sum()
}

/// Energy of the passive state: descending eigenvalues placed on ascending levels.
pub fn passive_energy<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(passive_energy_from_spectrum(&rho.eigenvalues()?))
}

fn clamp_ergotropy<T: Real>(w: T) -> T {
    if w < T::zero() && w >= -T::tol(1e-10) {
        T::zero()
    } else {
        w
    }
}

/// `W = E − E_passive`.
pub fn ergotropy<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(clamp_ergotropy(energy(rho) - passive_energy(rho)?))
}

/// Energy, ergotropy and purity from a single diagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figures<T> {
    pub energy: T,
    pub ergotropy: T,
    pub purity: T,
}

pub fn figures<T: Real>(rho: &DensityMatrix<T>) -> Result<Figures<T>> {
    let e = energy(rho);
    let passive = passive_energy_from_spectrum(&rho.eigenvalues()?);
    Ok(Figures {
        energy: e,
        ergotropy: clamp_ergotropy(e - passive),
        purity: purity(rho),
    })
}

pub fn populations<T: Real>(rho: &DensityMatrix<T>) -> PopulationVector<T> {
    PopulationVector {
        probs: (0..rho.dim()).map(|n| rho.population(n)).collect(),
    }
}

/// Steady-state populations of coherent pumping at a fine-tuned coupling:
/// `ρ_n = ((1−q)/q) cot²(π √n / (2 √m)) ρ_{n−1}` for `n < m`, normalized.
/// The returned vector covers levels `0..m`.
pub fn cotangent_populations<T: Real>(q: T, m: u32) -> Result<PopulationVector<T>> {
    if !(q > T::zero() && q < T::one()) {
        return Err(MaserError::OutOfRange {
            name: "q",
            value: q.to_f64_lossy(),
            range: "(0, 1)",
        });
    }
    if m < 2 {
        return Err(MaserError::OutOfRange {
            name: "m",
            value: m as f64,
            range: "m >= 2",
        });
    }
    let prefactor = (T::one() - q) / q;
    let denom = T::lit(2.0) * T::from_u32(m).unwrap().sqrt();
    let mut probs = Vec::with_capacity(m as usize);
    probs.push(T::one());
    for n in 1..m as usize {
        let angle = T::PI() * T::from_usize_lossy(n).sqrt() / denom;
        let cot = angle.cos() / angle.sin();
        let prev = probs[n - 1];
        probs.push(prefactor * cot * cot * prev);
    }
    let total: T = probs.iter().copied().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(PopulationVector { probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn energies() {
        assert_eq!(energy(&DensityMatrix::<f64>::vacuum(4)), 0.0);
        assert_eq!(energy(&DensityMatrix::<f64>::fock(8, 5)), 5.0);
        let d = DensityMatrix::diagonal(&[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(energy(&d), 1.0);
    }

    #[test]
    fn passive_energy_and_ergotropy() {
        let d = DensityMatrix::diagonal(&[0.3f64, 0.7]).unwrap();
        assert!((passive_energy(&d).unwrap() - 0.3).abs() < 1e-15);
        assert!((ergotropy(&d).unwrap() - 0.4).abs() < 1e-15);

        let mixed = DensityMatrix::diagonal(&[0.5f64, 0.5, 0.0]).unwrap();
        assert!((passive_energy(&mixed).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(ergotropy(&mixed).unwrap(), 0.0);

        let fifteen = DensityMatrix::<f64>::fock(20, 15);
        assert!((ergotropy(&fifteen).unwrap() - 15.0).abs() < 1e-12);
        assert!(passive_energy(&fifteen).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pure_superposition_ergotropy_is_its_energy() {
        let psi = [cplx(0.6, 0.0), cplx(0.0, 0.48), cplx(0.64, 0.0)];
        let rho = DensityMatrix::<f64>::pure(&psi).unwrap();
        let f = figures(&rho).unwrap();
        assert!((f.ergotropy - f.energy).abs() < 1e-9);
        assert!((f.purity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn passive_state_has_zero_ergotropy() {
        let d = DensityMatrix::diagonal(&[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert_eq!(ergotropy(&d).unwrap(), 0.0);
    }

    #[test]
    fn population_extraction() {
        let p = populations(&DensityMatrix::<f64>::fock(5, 3));
        assert_eq!(p.probs, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        let v = populations(&DensityMatrix::<f64>::vacuum(3));
        assert_eq!(v.probs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn cotangent_two_levels() {
        // cot²(π/(2√2)) = 0.245562786..., evaluated independently.
        let p = cotangent_populations(0.5f64, 2).unwrap();
        assert!((p.probs[1] / p.probs[0] - 0.245_562_786_050_746_4).abs() < 1e-12);
        assert!((p.probs[0] - 0.802_849_933_539_406_7).abs() < 1e-12);
        assert!((p.probs[1] - 0.197_150_066_460_593_3).abs() < 1e-12);
    }

    #[test]
    fn cotangent_normalized_and_concentrates() {
        for (q, m) in [(0.2f64, 16u32), (0.5, 16), (0.9, 5), (0.01, 30)] {
            let p = cotangent_populations(q, m).unwrap();
            assert_eq!(p.len(), m as usize);
            assert!(p.probs.iter().all(|&x| x >= 0.0));
            assert!((p.sum() - 1.0).abs() < 1e-12);
        }
        let near_one = cotangent_populations(1.0 - 1e-9, 16).unwrap();
        assert!(near_one.probs[0] > 1.0 - 1e-6);
        assert!(cotangent_populations(0.0f64, 16).is_err());
        assert!(cotangent_populations(1.0f64, 16).is_err());
        assert!(cotangent_populations(0.5f64, 1).is_err());
    }
}
