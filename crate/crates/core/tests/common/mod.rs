//! Independent oracles and corpus generators shared by the integration
//! tests. Nothing here calls the library's own formulas for `h`, `E`, the
//! adjoint or the operator matrix.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wco::space::{atom_name, MeasureSpace, SystemInstance};
use wco::subnormality::family::ProbabilityFamily;
use wco::C64;

pub type M = DMatrix<C64>;

pub fn instance(mass: &[f64], phi: &[usize], w: &[C64]) -> SystemInstance {
    let space = MeasureSpace::new(mass.iter().enumerate().map(|(k, &m)| (atom_name(k), m))).unwrap();
    SystemInstance::new(space, phi.to_vec(), w.to_vec()).unwrap()
}

pub fn collapse() -> SystemInstance {
    instance(&[1.0, 2.0], &[0, 0], &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)])
}

/// Up to 12 atoms, masses in (0.1, 10), complex weights with about 20%
/// zeros, uniformly random symbol.
pub fn random_instance(rng: &mut ChaCha8Rng) -> SystemInstance {
    let n = rng.gen_range(1..=12);
    let mass: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    let phi: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let w: Vec<C64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                C64::new(0.0, 0.0)
            } else {
                C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            }
        })
        .collect();
    instance(&mass, &phi, &w)
}

pub fn random_diagonal(rng: &mut ChaCha8Rng) -> SystemInstance {
    let n = rng.gen_range(1..=12);
    let mass: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    let w: Vec<C64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                C64::new(0.0, 0.0)
            } else {
                C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            }
        })
        .collect();
    instance(&mass, &(0..n).collect::<Vec<_>>(), &w)
}

pub fn corpus(seed: u64, count: usize) -> Vec<SystemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

/// `A[x, y] = w(x) [phi(x) = y] sqrt(mu(x) / mu(y))` in the basis
/// `chi_x / sqrt(mu(x))`.
pub fn matrix(inst: &SystemInstance) -> M {
    let n = inst.len();
    let mu = inst.space().masses();
    M::from_fn(n, n, |x, y| {
        if inst.phi_map()[x] == y {
            inst.weights()[x] * (mu[x] / mu[y]).sqrt()
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// PSD square root by eigendecomposition; eigenvalues within round-off of
/// zero are set to zero.
pub fn sqrt_psd(m: &M) -> M {
    let eig = SymmetricEigen::new((m + m.adjoint()) * C64::new(0.5, 0.0));
    let top = eig.eigenvalues.iter().fold(1f64, |a, v| a.max(v.abs()));
    let mut v = eig.eigenvectors.clone();
    for (c, &l) in eig.eigenvalues.iter().enumerate() {
        let r = if l <= 1e-12 * top { 0.0 } else { l.sqrt() };
        v.column_mut(c).scale_mut(r);
    }
    &v * eig.eigenvectors.adjoint()
}

pub fn min_eig(m: &M) -> f64 {
    let eig = SymmetricEigen::new((m + m.adjoint()) * C64::new(0.5, 0.0));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `h_n(x) = ||A^n e_x||^2`, since `||C^n chi_x||^2 = mu_{w_n}(phi^{-n}(x))`.
pub fn h_n_oracle(inst: &SystemInstance, n: u32) -> Vec<f64> {
    let a = matrix(inst);
    let mut p = M::identity(inst.len(), inst.len());
    for _ in 0..n {
        p = &p * &a;
    }
    (0..inst.len()).map(|x| p.column(x).norm_squared()).collect()
}

/// `h(y) = sum_{phi(x) = y} |w(x)|^2 mu(x) / mu(y)`.
pub fn h_oracle(inst: &SystemInstance) -> Vec<f64> {
    let mu = inst.space().masses();
    let mut h = vec![0.0; inst.len()];
    for x in 0..inst.len() {
        h[inst.phi_map()[x]] += inst.weights()[x].norm_sqr() * mu[x];
    }
    h.iter().zip(mu).map(|(a, m)| a / m).collect()
}

fn mass_at(family: &ProbabilityFamily, x: usize, t: f64) -> f64 {
    family
        .get(x)
        .atoms()
        .iter()
        .filter(|&&(s, _)| (s - t).abs() <= 1e-12 * 1f64.max(s.abs()).max(t.abs()))
        .map(|a| a.1)
        .sum()
}

/// Largest absolute CC deviation over `w(x) != 0` and all locations.
pub fn cc_residual(inst: &SystemInstance, family: &ProbabilityFamily) -> f64 {
    let h = h_oracle(inst);
    let mu = inst.space().masses();
    let phi = inst.phi_map();
    let w = inst.weights();
    let mut locs: Vec<f64> = family.measures().iter().flat_map(|m| m.atoms().iter().map(|a| a.0)).collect();
    locs.sort_by(f64::total_cmp);
    locs.dedup();
    let mut worst: f64 = 0.0;
    for x in 0..inst.len() {
        if w[x] == C64::new(0.0, 0.0) {
            continue;
        }
        let y = phi[x];
        let fiber: Vec<usize> = (0..inst.len()).filter(|&z| phi[z] == y).collect();
        let den: f64 = fiber.iter().map(|&z| w[z].norm_sqr() * mu[z]).sum();
        for &t in &locs {
            let num: f64 = fiber.iter().map(|&z| w[z].norm_sqr() * mu[z] * mass_at(family, z, t)).sum();
            let rhs = t * mass_at(family, y, t) / h[y];
            worst = worst.max((num / den - rhs).abs());
        }
    }
    worst
}

/// Coordinates of `f` in the orthonormal basis.
pub fn coords(inst: &SystemInstance, f: &[C64]) -> DVector<C64> {
    DVector::from_iterator(inst.len(), f.iter().zip(inst.space().masses()).map(|(v, m)| v * m.sqrt()))
}
