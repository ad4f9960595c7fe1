//! Radon-Nikodym derivative `h`, the change-of-variables identity and
//! conditional expectation with respect to `phi^{-1}(A)`.
//!
//! On a finite atomic space `phi^{-1}(A)` is generated by the fibers
//! `phi^{-1}({y})`, so conditioning is a `mu_w`-weighted average over each
//! fiber. Fibers of zero `mu_w`-mass carry no information; values there are
//! filled with zero and recorded in the density's mask.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, WcoError};
use crate::space::{make_mu_sup_w, pushforward, Atom, SystemInstance};
use crate::subnormality::family::PointMeasure;
use crate::tolerance::Tolerances;
use crate::{approx_eq, C64};

/// Values a density may take: real or complex.
pub trait Scalar:
    Copy + Debug + PartialEq + Zero + Add<Output = Self> + Mul<f64, Output = Self> + Div<f64, Output = Self>
{
}

impl Scalar for f64 {}
impl Scalar for C64 {}

/// The null-set convention under which a density's values are canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AeScope {
    /// Determined at every atom.
    Mu,
    /// Determined only on atoms of positive `mu_w`-mass.
    MuW,
}

/// A function on atoms together with the atoms whose value is a convention
/// fill rather than data.
#[derive(Debug, Clone, PartialEq)]
pub struct Density<T = f64> {
    pub values: Vec<T>,
    pub scope: AeScope,
    pub mask: Vec<bool>,
}

pub type DensityFunction = Density<f64>;

impl<T: Scalar> Density<T> {
    pub fn unmasked(values: Vec<T>, scope: AeScope) -> Self {
        let mask = vec![false; values.len()];
        Self {
            values,
            scope,
            mask,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_canonical(&self, x: Atom) -> bool {
        !self.mask[x]
    }
}

impl<T: Scalar> std::ops::Index<Atom> for Density<T> {
    type Output = T;

    fn index(&self, x: Atom) -> &T {
        &self.values[x]
    }
}

/// Per-atom `mu_w(phi^{-1}({y}))`.
pub(crate) fn fiber_weighted_mass(inst: &SystemInstance) -> Vec<f64> {
    let mut mass = vec![0.0; inst.len()];
    for x in inst.space().atoms() {
        mass[inst.phi(x)] += inst.weighted_mass(x);
    }
    mass
}

/// `h = d(mu_w o phi^{-1}) / d mu`, i.e.
/// `h(y) = sum_{phi(x) = y} |w(x)|^2 mu(x) / mu(y)`.
pub fn compute_h(inst: &SystemInstance) -> DensityFunction {
    let values = fiber_weighted_mass(inst)
        .into_iter()
        .zip(inst.space().masses())
        .map(|(m, mu)| m / mu)
        .collect();
    Density::unmasked(values, AeScope::Mu)
}

/// `int f o phi d mu_w`, checked against `int f h d mu`.
///
/// The two sums are accumulated in different orders (by source atom and by
/// target atom); the result is rejected if they differ by more than
/// `tol.rel` times the sum of absolute terms.
pub fn change_of_variables(inst: &SystemInstance, f: &[f64], tol: &Tolerances) -> Result<f64> {
    check_len(inst.len(), f.len())?;
    let h = compute_h(inst);
    let mut lhs = 0.0;
    let mut scale = 0.0;
    for x in inst.space().atoms() {
        let term = f[inst.phi(x)] * inst.weighted_mass(x);
        lhs += term;
        scale += term.abs();
    }
    let rhs: f64 = inst
        .space()
        .atoms()
        .map(|y| f[y] * h[y] * inst.space().mass(y))
        .sum();
    let residual = (lhs - rhs).abs();
    if residual > tol.rel * scale {
        return Err(WcoError::Postcondition {
            check: "change of variables",
            residual,
            tol: tol.rel * scale,
        });
    }
    Ok(lhs)
}

/// Fiber numerators `sum_{phi(x)=y} f(x) |w(x)|^2 mu(x)` and denominators.
fn fiber_sums<T: Scalar>(inst: &SystemInstance, f: &[T]) -> (Vec<T>, Vec<f64>) {
    let mut num = vec![T::zero(); inst.len()];
    let mut den = vec![0.0; inst.len()];
    for x in inst.space().atoms() {
        let y = inst.phi(x);
        let m = inst.weighted_mass(x);
        num[y] = num[y] + f[x] * m;
        den[y] += m;
    }
    (num, den)
}

/// `E(f)`: conditional expectation of `f` onto `phi^{-1}(A)` in `L^2(mu_w)`.
///
/// Constant on every fiber. Atoms whose fiber has zero `mu_w`-mass are
/// masked and set to zero.
pub fn cond_expectation<T: Scalar>(inst: &SystemInstance, f: &[T]) -> Result<Density<T>> {
    check_len(inst.len(), f.len())?;
    let (num, den) = fiber_sums(inst, f);
    let mut values = Vec::with_capacity(inst.len());
    let mut mask = Vec::with_capacity(inst.len());
    for x in inst.space().atoms() {
        let y = inst.phi(x);
        if den[y] > 0.0 {
            values.push(num[y] / den[y]);
            mask.push(false);
        } else {
            values.push(T::zero());
            mask.push(true);
        }
    }
    Ok(Density {
        values,
        scope: AeScope::MuW,
        mask,
    })
}

/// `E(f) o phi^{-1}`: the representative `g` with `g o phi = E(f)` a.e.
/// `[mu_w]` that vanishes on `{h = 0}`.
pub fn cond_expectation_inv<T: Scalar>(inst: &SystemInstance, f: &[T]) -> Result<Density<T>> {
    check_len(inst.len(), f.len())?;
    let (num, den) = fiber_sums(inst, f);
    let mut values = Vec::with_capacity(inst.len());
    let mut mask = Vec::with_capacity(inst.len());
    for (n, d) in num.into_iter().zip(den) {
        if d > 0.0 {
            values.push(n / d);
            mask.push(false);
        } else {
            values.push(T::zero());
            mask.push(true);
        }
    }
    Ok(Density {
        values,
        scope: AeScope::Mu,
        mask,
    })
}

/// `d(mu^w o phi^{-1}) / d mu = h * E(chi_{w != 0} / |w|^2) o phi^{-1}`,
/// checked against the pushforward of `mu^w` divided by `mu`.
pub fn density_mu_sup_w(inst: &SystemInstance, tol: &Tolerances) -> Result<DensityFunction> {
    let h = compute_h(inst);
    let inv_w: Vec<f64> = inst
        .space()
        .atoms()
        .map(|x| {
            if inst.w_nonzero(x) {
                1.0 / inst.w(x).norm_sqr()
            } else {
                0.0
            }
        })
        .collect();
    let g = cond_expectation_inv(inst, &inv_w)?;
    let values: Vec<f64> = inst.space().atoms().map(|x| h[x] * g[x]).collect();

    let direct = pushforward(&make_mu_sup_w(inst), inst.phi_map())?;
    for x in inst.space().atoms() {
        let expected = direct.mass[x] / inst.space().mass(x);
        if !approx_eq(values[x], expected, tol.abs) {
            return Err(WcoError::Postcondition {
                check: "density of mu^w o phi^{-1}",
                residual: (values[x] - expected).abs(),
                tol: tol.abs,
            });
        }
    }
    Ok(Density::unmasked(values, AeScope::Mu))
}

/// Whether a finitely atomic probability measure on `[0, inf)` is `delta_0`,
/// decided by its first moment. Rejects measures whose masses do not sum
/// to one.
pub fn is_dirac_at_zero(atoms: &[(f64, f64)], tol: &Tolerances) -> Result<bool> {
    let m = PointMeasure::new(atoms.iter().copied(), tol)?;
    Ok(m.mean() <= tol.abs)
}
