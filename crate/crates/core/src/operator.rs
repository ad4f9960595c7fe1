//! The weighted composition operator `C f = w * (f o phi)` on `L^2(mu)`.
//!
//! Matrices use the orthonormal basis `e_x = chi_{x} / sqrt(mu(x))` with atoms
//! in declaration order, so `A[x, y] = w(x) [phi(x) = y] sqrt(mu(x) / mu(y))`.

use crate::calculus::{self, compute_h, cond_expectation, cond_expectation_inv, AeScope, Density, DensityFunction};
use crate::error::{check_len, Result, WcoError};
use crate::oracle::{CMatrix, CVector};
use crate::space::{base_measure, is_absolutely_continuous, make_mu_w, pushforward, Atom, MeasureSpace, SystemInstance};
use crate::tolerance::Tolerances;
use crate::{approx_eq, C64};

pub type OperatorMatrix = CMatrix;

/// An element of `L^2(mu)`, stored by value at each atom.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Vector {
    pub coeffs: Vec<C64>,
}

impl L2Vector {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); n])
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Unit vector `chi_{x} / sqrt(mu(x))`.
    pub fn basis(space: &MeasureSpace, x: Atom) -> Self {
        let mut v = Self::zeros(space.len());
        v.coeffs[x] = C64::new(1.0 / space.mass(x).sqrt(), 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self, space: &MeasureSpace) -> f64 {
        self.coeffs
            .iter()
            .zip(space.masses())
            .map(|(z, m)| z.norm_sqr() * m)
            .sum()
    }

    /// `<self, other> = sum self(x) conj(other(x)) mu(x)`.
    pub fn inner(&self, other: &Self, space: &MeasureSpace) -> C64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(space.masses())
            .map(|((a, b), m)| a * b.conj() * *m)
            .sum()
    }

    /// Coordinates in the orthonormal basis: `f(x) sqrt(mu(x))`.
    pub fn coords(&self, space: &MeasureSpace) -> CVector {
        CVector::from_iterator(
            self.len(),
            self.coeffs
                .iter()
                .zip(space.masses())
                .map(|(z, m)| z * m.sqrt()),
        )
    }

    pub fn from_coords(coords: &CVector, space: &MeasureSpace) -> Self {
        Self::new(
            coords
                .iter()
                .zip(space.masses())
                .map(|(z, m)| z / m.sqrt())
                .collect(),
        )
    }

    pub fn support(&self) -> impl Iterator<Item = Atom> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != C64::new(0.0, 0.0))
            .map(|(x, _)| x)
    }
}

/// `C_{phi,w}` with its Radon-Nikodym derivative cached.
#[derive(Debug, Clone)]
pub struct WcOperator {
    inst: SystemInstance,
    h: DensityFunction,
    /// `mu_w o phi^{-1} << mu`.
    pub well_defined: bool,
    /// `h < inf` at every atom.
    pub densely_defined: bool,
}

impl WcOperator {
    pub fn new(inst: SystemInstance) -> Result<Self> {
        let pushed = pushforward(&make_mu_w(&inst), inst.phi_map())?;
        let well_defined = is_absolutely_continuous(&pushed, &base_measure(inst.space()))?;
        let h = compute_h(&inst);
        let densely_defined = h.values.iter().all(|v| v.is_finite());
        if !well_defined || !densely_defined {
            return Err(WcoError::InvalidInstance(format!(
                "operator not well-defined ({well_defined}) or not densely defined ({densely_defined})"
            )));
        }
        Ok(Self {
            inst,
            h,
            well_defined,
            densely_defined,
        })
    }

    pub fn instance(&self) -> &SystemInstance {
        &self.inst
    }

    pub fn space(&self) -> &MeasureSpace {
        self.inst.space()
    }

    pub fn h(&self) -> &DensityFunction {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.inst.len()
    }

    /// `(C f)(x) = w(x) f(phi(x))`.
    pub fn apply(&self, f: &L2Vector) -> Result<L2Vector> {
        check_len(self.dim(), f.len())?;
        Ok(L2Vector::new(
            self.space()
                .atoms()
                .map(|x| self.inst.w(x) * f.coeffs[self.inst.phi(x)])
                .collect(),
        ))
    }

    /// `int |f|^2 (1 + h) d mu`, equal to `||f||^2 + ||C f||^2`.
    pub fn graph_norm_sqr(&self, f: &L2Vector) -> Result<f64> {
        check_len(self.dim(), f.len())?;
        Ok(self
            .space()
            .atoms()
            .map(|x| f.coeffs[x].norm_sqr() * (1.0 + self.h[x]) * self.space().mass(x))
            .sum())
    }

    /// Operator norm `max sqrt(h)`.
    pub fn norm(&self) -> f64 {
        self.h.values.iter().fold(0.0, |acc, v| acc.max(v.sqrt()))
    }

    pub fn to_matrix(&self) -> OperatorMatrix {
        let n = self.dim();
        let mut a = OperatorMatrix::zeros(n, n);
        for x in self.space().atoms() {
            let y = self.inst.phi(x);
            let scale = (self.space().mass(x) / self.space().mass(y)).sqrt();
            a[(x, y)] = self.inst.w(x) * scale;
        }
        a
    }

    /// Orthonormal basis `{e_x : h(x) = 0}` of the kernel.
    pub fn kernel_basis(&self) -> Vec<L2Vector> {
        self.space()
            .atoms()
            .filter(|&x| self.h[x] == 0.0)
            .map(|x| L2Vector::basis(self.space(), x))
            .collect()
    }

    /// `f_w = chi_{w != 0} f / w`, an element of `L^2(mu_w)`.
    pub fn f_sub_w(&self, f: &L2Vector) -> Result<Vec<C64>> {
        check_len(self.dim(), f.len())?;
        Ok(self
            .space()
            .atoms()
            .map(|x| {
                if self.inst.w_nonzero(x) {
                    f.coeffs[x] / self.inst.w(x)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect())
    }

    /// Norm in `L^2(mu_w)`.
    pub fn norm_sqr_mu_w(&self, g: &[C64]) -> Result<f64> {
        check_len(self.dim(), g.len())?;
        Ok(g.iter()
            .enumerate()
            .map(|(x, z)| z.norm_sqr() * self.inst.weighted_mass(x))
            .sum())
    }

    /// `C* f = h * E(f_w) o phi^{-1}`.
    pub fn adjoint_apply(&self, f: &L2Vector) -> Result<L2Vector> {
        let fw = self.f_sub_w(f)?;
        let g = cond_expectation_inv(&self.inst, &fw)?;
        Ok(L2Vector::new(
            self.space().atoms().map(|x| g[x] * self.h[x]).collect(),
        ))
    }

    /// `E(f_w)`, used by the modulus of the adjoint.
    pub fn cond_expectation_of_fw(&self, f: &L2Vector) -> Result<Density<C64>> {
        let fw = self.f_sub_w(f)?;
        cond_expectation(&self.inst, &fw)
    }
}

/// `(phi^n, w_n)` with `w_0 = 1` and `w_n = prod_{j < n} w o phi^j`.
pub fn power_weight(inst: &SystemInstance, n: u32) -> SystemInstance {
    let len = inst.len();
    let mut phi_n: Vec<Atom> = (0..len).collect();
    let mut w_n = vec![C64::new(1.0, 0.0); len];
    for _ in 0..n {
        for x in 0..len {
            w_n[x] *= inst.w(phi_n[x]);
            phi_n[x] = inst.phi(phi_n[x]);
        }
    }
    SystemInstance::new(inst.space().clone(), phi_n, w_n)
        .expect("powers of a valid symbol stay inside the space")
}

/// `h_n` by the recurrence `h_{n+1} = E(h_n) o phi^{-1} * h`, `h_0 = 1`.
pub fn h_n_recurrence(inst: &SystemInstance, n: u32) -> DensityFunction {
    let h = compute_h(inst);
    let mut current = vec![1.0; inst.len()];
    for _ in 0..n {
        let g = calculus::cond_expectation_inv(inst, &current).expect("lengths agree");
        current = inst.space().atoms().map(|x| g[x] * h[x]).collect();
    }
    Density::unmasked(current, AeScope::Mu)
}

/// `h_n = h_{phi^n, w_n}`, computed directly and through the recurrence; the
/// two must agree to `tol.abs` relative to magnitude.
pub fn h_n(inst: &SystemInstance, n: u32, tol: &Tolerances) -> Result<DensityFunction> {
    let direct = compute_h(&power_weight(inst, n));
    let recurrence = h_n_recurrence(inst, n);
    for x in inst.space().atoms() {
        if !approx_eq(direct[x], recurrence[x], tol.abs) {
            return Err(WcoError::Postcondition {
                check: "h_n recurrence",
                residual: (direct[x] - recurrence[x]).abs(),
                tol: tol.abs,
            });
        }
    }
    Ok(direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{max_abs, null_space, spectral_norm};
    use crate::space::atom_name;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn inst(mass: &[f64], phi: &[usize], w: &[C64]) -> SystemInstance {
        let space = MeasureSpace::new(mass.iter().enumerate().map(|(k, &m)| (atom_name(k), m)))
            .unwrap();
        SystemInstance::new(space, phi.to_vec(), w.to_vec()).unwrap()
    }

    fn collapse() -> WcOperator {
        WcOperator::new(inst(&[1.0, 2.0], &[0, 0], &[c(1.0), c(2.0)])).unwrap()
    }

    #[test]
    fn apply_examples() {
        let m = WcOperator::new(inst(&[1.0, 1.0], &[0, 1], &[c(2.0), c(3.0)])).unwrap();
        let out = m.apply(&L2Vector::from_real(&[1.0, 1.0])).unwrap();
        assert_eq!(out, L2Vector::from_real(&[2.0, 3.0]));

        let op = collapse();
        let f = L2Vector::from_real(&[5.0, 7.0]);
        assert_eq!(op.apply(&f).unwrap(), L2Vector::from_real(&[5.0, 10.0]));
        assert_eq!(op.apply(&L2Vector::zeros(2)).unwrap(), L2Vector::zeros(2));
        assert!(op.apply(&L2Vector::zeros(3)).is_err());

        let space = op.space();
        let lhs = f.norm_sqr(space) + op.apply(&f).unwrap().norm_sqr(space);
        assert!((lhs - op.graph_norm_sqr(&f).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn matrix_examples() {
        let m = WcOperator::new(inst(&[1.0, 1.0, 1.0], &[0, 1, 2], &[c(2.0), c(-1.0), C64::new(0.0, 4.0)]))
            .unwrap();
        let a = m.to_matrix();
        for x in 0..3 {
            for y in 0..3 {
                let expected = if x == y { m.instance().w(x) } else { c(0.0) };
                assert_eq!(a[(x, y)], expected);
            }
        }

        let a = collapse().to_matrix();
        let r8 = 8f64.sqrt();
        assert_eq!(a[(0, 0)], c(1.0));
        assert!((a[(1, 0)] - c(r8)).norm() < 1e-15);
        assert_eq!(a[(0, 1)], c(0.0));
        assert_eq!(a[(1, 1)], c(0.0));

        let zero = WcOperator::new(inst(&[1.0, 3.0], &[1, 0], &[c(0.0), c(0.0)])).unwrap();
        assert_eq!(max_abs(&zero.to_matrix()), 0.0);
    }

    #[test]
    fn matrix_represents_apply() {
        let op = WcOperator::new(inst(
            &[0.5, 2.0, 3.0],
            &[2, 0, 0],
            &[C64::new(1.0, -1.0), c(0.5), C64::new(0.0, 2.0)],
        ))
        .unwrap();
        let f = L2Vector::new(vec![C64::new(1.0, 2.0), c(-3.0), C64::new(0.5, 0.5)]);
        let via_matrix = op.to_matrix() * f.coords(op.space());
        let direct = op.apply(&f).unwrap().coords(op.space());
        assert!((via_matrix - direct).norm() < 1e-13);
        assert!((spectral_norm(&op.to_matrix()) - op.norm()).abs() < 1e-12);
    }

    #[test]
    fn kernel_examples() {
        let injective = WcOperator::new(inst(&[1.0, 2.0], &[1, 0], &[c(1.0), c(3.0)])).unwrap();
        assert!(injective.kernel_basis().is_empty());

        let op = collapse();
        let ker = op.kernel_basis();
        assert_eq!(ker.len(), 1);
        assert_eq!(ker[0].support().collect::<Vec<_>>(), vec![1]);
        assert_eq!(op.apply(&ker[0]).unwrap(), L2Vector::zeros(2));
        assert_eq!(null_space(&op.to_matrix(), 1e-9).len(), 1);

        let zero = WcOperator::new(inst(&[1.0, 3.0], &[1, 0], &[c(0.0), c(0.0)])).unwrap();
        assert_eq!(zero.kernel_basis().len(), 2);
    }

    #[test]
    fn f_sub_w_examples() {
        let unimodular = WcOperator::new(inst(&[1.0, 2.0], &[0, 1], &[C64::new(0.6, 0.8), c(-1.0)])).unwrap();
        let f = L2Vector::new(vec![C64::new(1.0, 1.0), c(2.0)]);
        let fw = unimodular.f_sub_w(&f).unwrap();
        let lhs = unimodular.norm_sqr_mu_w(&fw).unwrap();
        assert!((lhs - f.norm_sqr(unimodular.space())).abs() < 1e-14);

        let partial = WcOperator::new(inst(&[1.0, 1.0], &[0, 1], &[c(0.0), c(3.0)])).unwrap();
        let fw = partial.f_sub_w(&L2Vector::from_real(&[4.0, 0.0])).unwrap();
        assert_eq!(fw, vec![c(0.0), c(0.0)]);

        let op = WcOperator::new(inst(&[1.0, 1.0], &[0, 1], &[c(1.0), c(2.0)])).unwrap();
        let f = L2Vector::from_real(&[3.0, 4.0]);
        let fw = op.f_sub_w(&f).unwrap();
        assert_eq!(fw, vec![c(3.0), c(2.0)]);
        assert_eq!(op.norm_sqr_mu_w(&fw).unwrap(), 25.0);
        assert_eq!(f.norm_sqr(op.space()), 25.0);
    }

    #[test]
    fn adjoint_examples() {
        let w = [C64::new(1.0, 2.0), c(-3.0)];
        let m = WcOperator::new(inst(&[0.5, 2.0], &[0, 1], &w)).unwrap();
        let f = L2Vector::new(vec![C64::new(0.0, 1.0), c(2.0)]);
        let out = m.adjoint_apply(&f).unwrap();
        for ((o, wx), fx) in out.coeffs.iter().zip(&w).zip(&f.coeffs) {
            assert!((o - wx.conj() * fx).norm() < 1e-14);
        }

        let op = collapse();
        let out = op.adjoint_apply(&L2Vector::from_real(&[1.0, 0.0])).unwrap();
        assert!((out.coeffs[0] - c(1.0)).norm() < 1e-15);
        assert_eq!(out.coeffs[1], c(0.0));
        let oracle = op.to_matrix().adjoint() * L2Vector::from_real(&[1.0, 0.0]).coords(op.space());
        let oracle = L2Vector::from_coords(&oracle, op.space());
        assert!((oracle.coeffs[0] - out.coeffs[0]).norm() < 1e-12);
    }

    #[test]
    fn adjoint_kills_orthogonal_complement_of_range() {
        let op = collapse();
        // ran C is spanned by C e_a = (1, 2) / 1; its complement in L^2(mu)
        // is spanned by (2*2, -1) (weights mu = (1, 2)).
        let f = L2Vector::from_real(&[4.0, -1.0]);
        let range = op.apply(&L2Vector::from_real(&[1.0, 0.0])).unwrap();
        assert!(f.inner(&range, op.space()).norm() < 1e-14);
        let out = op.adjoint_apply(&f).unwrap();
        assert!(out.coeffs.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn power_weight_examples() {
        let base = inst(&[1.0, 2.0, 4.0], &[1, 2, 0], &[c(2.0), C64::new(0.0, 1.0), c(-1.0)]);
        let p0 = power_weight(&base, 0);
        assert_eq!(p0.phi_map(), &[0, 1, 2]);
        assert!(p0.weights().iter().all(|z| *z == c(1.0)));
        assert_eq!(power_weight(&base, 1), base);

        let col = inst(&[1.0, 2.0], &[0, 0], &[c(1.0), c(2.0)]);
        let p2 = power_weight(&col, 2);
        assert_eq!(p2.phi_map(), &[0, 0]);
        assert_eq!(p2.weights(), &[c(1.0), c(2.0)]);
        let a = WcOperator::new(col).unwrap().to_matrix();
        let a2 = WcOperator::new(p2).unwrap().to_matrix();
        assert!(max_abs(&(&a * &a - a2)) < 1e-12);
    }

    #[test]
    fn h_n_examples() {
        let tol = Tolerances::default();
        let w = [C64::new(1.0, 1.0), c(0.5), c(0.0)];
        let mult = inst(&[1.0, 2.0, 3.0], &[0, 1, 2], &w);
        for n in 0..5 {
            let hn = h_n(&mult, n, &tol).unwrap();
            for x in 0..3 {
                assert!((hn[x] - w[x].norm_sqr().powi(n as i32)).abs() < 1e-12);
            }
        }
        let col = inst(&[1.0, 2.0], &[0, 0], &[c(1.0), c(2.0)]);
        assert_eq!(h_n(&col, 1, &tol).unwrap(), compute_h(&col));
        assert_eq!(h_n(&col, 0, &tol).unwrap().values, vec![1.0, 1.0]);
        // phi^2 = phi, w_2 = (1, 2): h_2 = (1 + 4*2, 0).
        assert_eq!(h_n(&col, 2, &tol).unwrap().values, vec![9.0, 0.0]);
        assert_eq!(h_n_recurrence(&col, 2).values, vec![9.0, 0.0]);
    }

    #[test]
    fn rec2_on_support() {
        let i = inst(&[1.0, 2.0, 0.5, 1.5], &[1, 2, 1, 0], &[c(1.0), C64::new(0.5, 0.5), c(2.0), c(0.0)]);
        let h = compute_h(&i);
        for n in 0..4 {
            let hn = h_n_recurrence(&i, n);
            let next = h_n_recurrence(&i, n + 1);
            let e = calculus::cond_expectation(&i, &hn.values).unwrap();
            for x in 0..4 {
                if i.w_nonzero(x) {
                    let y = i.phi(x);
                    assert!(approx_eq(next[y], e[x] * h[y], 1e-12));
                }
            }
        }
    }

    #[test]
    fn symbol_change_on_zero_weight_is_invisible() {
        let a = inst(&[1.0, 2.0, 3.0], &[1, 2, 0], &[c(1.0), c(2.0), c(0.0)]);
        let b = inst(&[1.0, 2.0, 3.0], &[1, 2, 2], &[c(1.0), c(2.0), c(0.0)]);
        let (oa, ob) = (WcOperator::new(a).unwrap(), WcOperator::new(b).unwrap());
        assert_eq!(oa.h(), ob.h());
        let f = L2Vector::new(vec![C64::new(1.0, -1.0), c(2.0), c(3.0)]);
        assert_eq!(oa.apply(&f).unwrap(), ob.apply(&f).unwrap());
        assert_eq!(oa.to_matrix(), ob.to_matrix());
    }
}
