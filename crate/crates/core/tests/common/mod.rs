//! Reference implementations used only by the integration tests. They share
//! no code with the library: plain `Vec<Complex64>` matrices, a Taylor
//! exponential and explicit index loops.

#![allow(dead_code)]

use maserbat::{CMatrix, DensityMatrix};
use num_complex::Complex64 as C;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const I: C = C::new(0.0, 1.0);

/// Dense square matrix, row-major.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub d: Vec<C>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, d: vec![C::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.d[i * n + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> C {
        self.d[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.d[i * self.n + j] = v;
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        let n = self.n;
        let mut r = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.d[i * n + k];
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    r.d[i * n + j] += a * o.d[k * n + j];
                }
            }
        }
        r
    }

    pub fn dagger(&self) -> Dense {
        let n = self.n;
        let mut r = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                r.d[j * n + i] = self.d[i * n + j].conj();
            }
        }
        r
    }

    pub fn scaled(&self, s: C) -> Dense {
        Dense { n: self.n, d: self.d.iter().map(|&x| x * s).collect() }
    }

    fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `exp(A)` by scaling and squaring with a 30-term Taylor series.
    pub fn expm(&self) -> Dense {
        let norm = self.one_norm();
        let mut s = 0;
        while norm / 2f64.powi(s) > 0.25 {
            s += 1;
        }
        let a = self.scaled(C::new(1.0 / 2f64.powi(s), 0.0));
        let mut result = Dense::identity(self.n);
        let mut term = Dense::identity(self.n);
        for k in 1..=30 {
            term = term.mul(&a).scaled(C::new(1.0 / k as f64, 0.0));
            for (r, t) in result.d.iter_mut().zip(&term.d) {
                *r += *t;
            }
        }
        for _ in 0..s {
            result = result.mul(&result);
        }
        result
    }

    pub fn from_cmatrix(m: &CMatrix<f64>) -> Dense {
        Dense { n: m.dim(), d: m.as_slice().to_vec() }
    }

    pub fn to_cmatrix(&self) -> CMatrix<f64> {
        CMatrix::from_vec(self.n, self.d.clone())
    }

    pub fn max_diff(&self, o: &Dense) -> f64 {
        self.d.iter().zip(&o.d).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `a σ₊ + a† σ₋` on cavity levels `0..dim` ⊗ qubit, joint index `2n + s`
/// with `s = 0` ground and `s = 1` excited.
pub fn jc_hamiltonian(dim: usize) -> Dense {
    let mut h = Dense::zeros(2 * dim);
    for n in 1..dim {
        // ⟨n−1, e| a σ₊ |n, g⟩ = √n
        let amp = C::new((n as f64).sqrt(), 0.0);
        h.set(2 * (n - 1) + 1, 2 * n, amp);
        h.set(2 * n, 2 * (n - 1) + 1, amp);
    }
    h
}

/// `Tr_q[exp(−igH)(ρ ⊗ σ)exp(igH)]` built from dense matrices.
pub fn oracle_collision(rho: &Dense, qubit: [[C; 2]; 2], g: f64) -> Dense {
    let dim = rho.n;
    let u = jc_hamiltonian(dim).scaled(-I * g).expm();
    let mut joint = Dense::zeros(2 * dim);
    for n in 0..dim {
        for np in 0..dim {
            for s in 0..2 {
                for sp in 0..2 {
                    joint.set(2 * n + s, 2 * np + sp, rho.at(n, np) * qubit[s][sp]);
                }
            }
        }
    }
    let evolved = u.mul(&joint).mul(&u.dagger());
    let mut out = Dense::zeros(dim);
    for n in 0..dim {
        for np in 0..dim {
            out.set(n, np, evolved.at(2 * n, 2 * np) + evolved.at(2 * n + 1, 2 * np + 1));
        }
    }
    out
}

/// Wigner function as the expectation of the displaced parity operator,
/// `W(α) = (1/π) Tr[D(α)† ρ D(α) Π]` with `α = (x + ip)/√2`, evaluated in a
/// Fock space of `big` levels.
pub fn displaced_parity_wigner(rho: &Dense, x: f64, p: f64, big: usize) -> f64 {
    let alpha = C::new(x, p) / 2f64.sqrt();
    let mut gen = Dense::zeros(big);
    for n in 1..big {
        let s = (n as f64).sqrt();
        // α a† − α* a
        gen.set(n, n - 1, alpha * s);
        gen.set(n - 1, n, -alpha.conj() * s);
    }
    let d = gen.expm();
    let mut w = 0.0;
    for k in 0..big {
        let mut acc = C::new(0.0, 0.0);
        for i in 0..rho.n {
            for j in 0..rho.n {
                acc += d.at(i, k).conj() * rho.at(i, j) * d.at(j, k);
            }
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        w += sign * acc.re;
    }
    w / std::f64::consts::PI
}

/// Coherent state `|β⟩` truncated to `dim` levels and renormalized.
pub fn coherent(beta: C, dim: usize) -> Vec<C> {
    let mut psi = Vec::with_capacity(dim);
    let mut amp = C::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            amp = amp * beta / (n as f64).sqrt();
        }
        psi.push(amp);
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter().map(|z| z / norm).collect()
}

/// Eigenvalues of a 3×3 Hermitian matrix from its characteristic cubic,
/// descending.
pub fn hermitian3_eigenvalues(a: &Dense) -> [f64; 3] {
    assert_eq!(a.n, 3);
    let d = |i: usize| a.at(i, i).re;
    let p1 = a.at(0, 1).norm_sqr() + a.at(0, 2).norm_sqr() + a.at(1, 2).norm_sqr();
    let q = (d(0) + d(1) + d(2)) / 3.0;
    let p2 = (d(0) - q).powi(2) + (d(1) - q).powi(2) + (d(2) - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q, q, q];
    }
    let mut b = a.clone();
    for i in 0..3 {
        b.set(i, i, a.at(i, i) - q);
    }
    let b = b.scaled(C::new(1.0 / p, 0.0));
    let det = b.at(0, 0) * (b.at(1, 1) * b.at(2, 2) - b.at(1, 2) * b.at(2, 1))
        - b.at(0, 1) * (b.at(1, 0) * b.at(2, 2) - b.at(1, 2) * b.at(2, 0))
        + b.at(0, 2) * (b.at(1, 0) * b.at(2, 1) - b.at(1, 1) * b.at(2, 0));
    let r = (det.re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let mut h = Dense::zeros(n);
    for i in 0..n {
        h.set(i, i, C::new(rng.gen_range(-1.0..1.0), 0.0));
        for j in (i + 1)..n {
            let z = random_complex(rng);
            h.set(i, j, z);
            h.set(j, i, z.conj());
        }
    }
    h
}

/// `G G† / Tr` for a random `n × rank` complex `G`.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Dense {
    let g: Vec<C> = (0..n * rank).map(|_| random_complex(rng)).collect();
    let mut rho = Dense::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = C::new(0.0, 0.0);
            for k in 0..rank {
                acc += g[i * rank + k] * g[j * rank + k].conj();
            }
            rho.set(i, j, acc);
        }
    }
    let tr: f64 = (0..n).map(|i| rho.at(i, i).re).sum();
    let mut rho = rho.scaled(C::new(1.0 / tr, 0.0));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rho.at(i, j);
            rho.set(j, i, v.conj());
        }
        let d = rho.at(i, i).re;
        rho.set(i, i, C::new(d, 0.0));
    }
    rho
}

/// Random density confined to the lowest `support` levels of `n`.
pub fn random_low_density(rng: &mut ChaCha8Rng, n: usize, support: usize) -> DensityMatrix<f64> {
    let small = random_density(rng, support, support);
    let mut big = Dense::zeros(n);
    for i in 0..support {
        for j in 0..support {
            big.set(i, j, small.at(i, j));
        }
    }
    DensityMatrix::new(big.to_cmatrix()).expect("valid density")
}

/// Random unitary from the exponential of a random Hermitian generator.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    random_hermitian(rng, n).scaled(I * 3.0).expm()
}

pub fn qubit_matrix(c: f64, q: f64) -> [[C; 2]; 2] {
    let coh = C::new(c * (q * (1.0 - q)).sqrt(), 0.0);
    [[C::new(q, 0.0), coh], [coh, C::new(1.0 - q, 0.0)]]
}
