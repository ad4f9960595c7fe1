//! The product-space operator `C_{Phi,W}` on `L^2(rho)`, where
//! `rho({(x,t)}) = mu(x) P(x,{t})`, `Phi(x,t) = (phi(x),t)` and `W(x,t) = w(x)`.

use crate::calculus::compute_h;
use crate::error::{Result, WcoError};
use crate::operator::{L2Vector, WcOperator};
use crate::space::{Atom, MeasureSpace, SystemInstance};
use crate::structure::{is_quasinormal, Verdict};
use crate::subnormality::family::ProbabilityFamily;
use crate::tolerance::Tolerances;
use crate::C64;

/// Product atoms of positive `rho`-mass together with `Phi`, `W` and, when
/// `rho_W o Phi^{-1} << rho`, the derivative `H = h_{Phi,W}`.
#[derive(Debug, Clone)]
pub struct ProductSystem {
    /// Product atom `k` is `(pairs[k].0, pairs[k].1)`.
    pub pairs: Vec<(Atom, f64)>,
    /// `embedding[x]` lists the product atoms over `x`.
    pub embedding: Vec<Vec<usize>>,
    /// First product atom `(x, t)` with `w(x) != 0` whose image `(phi(x), t)`
    /// has zero `rho`-mass.
    pub ac_failure: Option<(Atom, f64)>,
    /// Product atoms with `w(x) = 0` whose image has zero `rho`-mass, with the
    /// excluded image location. `Phi` sends them to themselves; `W` vanishes
    /// there, so the operator does not see the choice.
    pub redirected: Vec<(usize, f64)>,
    /// The product instance, present when absolute continuity holds.
    pub instance: Option<SystemInstance>,
    /// `H` on product atoms, present when absolute continuity holds.
    pub h_ext: Option<Vec<f64>>,
}

impl ProductSystem {
    pub fn build(inst: &SystemInstance, family: &ProbabilityFamily, tol: &Tolerances) -> Result<Self> {
        if family.len() != inst.len() {
            return Err(WcoError::SpaceMismatch {
                expected: inst.len(),
                got: family.len(),
            });
        }
        let mut pairs = Vec::new();
        let mut embedding = vec![Vec::new(); inst.len()];
        let mut ids = Vec::new();
        let mut rho = Vec::new();
        for x in inst.space().atoms() {
            for &(t, p) in family.get(x).atoms() {
                embedding[x].push(pairs.len());
                pairs.push((x, t));
                ids.push(format!("{}@{}", inst.space().id(x), t));
                rho.push(inst.space().mass(x) * p);
            }
        }

        let mut ac_failure = None;
        let mut redirected = Vec::new();
        let mut big_phi = Vec::with_capacity(pairs.len());
        for (k, &(x, t)) in pairs.iter().enumerate() {
            let y = inst.phi(x);
            let target = embedding[y]
                .iter()
                .copied()
                .find(|&j| tol.same_location(pairs[j].1, t));
            match target {
                Some(j) => big_phi.push(j),
                None => {
                    if inst.w_nonzero(x) {
                        ac_failure.get_or_insert((x, t));
                    } else {
                        redirected.push((k, t));
                    }
                    big_phi.push(k);
                }
            }
        }

        let (instance, h_ext) = if ac_failure.is_none() {
            let space = MeasureSpace::new(ids.into_iter().zip(rho))?;
            let weights: Vec<C64> = pairs.iter().map(|&(x, _)| inst.w(x)).collect();
            let product = SystemInstance::new(space, big_phi, weights)?;
            let h = compute_h(&product).values;
            (Some(product), Some(h))
        } else {
            (None, None)
        };
        Ok(Self {
            pairs,
            embedding,
            ac_failure,
            redirected,
            instance,
            h_ext,
        })
    }

    pub fn absolutely_continuous(&self) -> bool {
        self.ac_failure.is_none()
    }

    /// `(U f)(x, t) = f(x)`.
    pub fn embed(&self, f: &L2Vector) -> L2Vector {
        L2Vector::new(self.pairs.iter().map(|&(x, _)| f.coeffs[x]).collect())
    }
}

/// Residuals of the properties the extension must have under the
/// consistency condition.
#[derive(Debug, Clone)]
pub struct ExtensionChecks {
    /// `max |H(x,t) - chi_{h>0}(x) t|`, relative to `max(1, t)`.
    pub h_residual: f64,
    pub quasinormal: Verdict,
    /// `max |U C e_x - C_{Phi,W} U e_x|` over the basis.
    pub intertwining_residual: f64,
    /// `max | ||U e_x||^2 - 1 |` over the basis.
    pub isometry_residual: f64,
}

impl ExtensionChecks {
    pub fn all_pass(&self, tol: &Tolerances) -> bool {
        self.h_residual <= tol.abs
            && self.quasinormal.holds
            && self.intertwining_residual <= tol.abs
            && self.isometry_residual <= tol.abs
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionSystem {
    pub product: ProductSystem,
    pub operator: WcOperator,
    pub checks: ExtensionChecks,
}

impl ExtensionSystem {
    pub fn instance(&self) -> &SystemInstance {
        self.operator.instance()
    }

    pub fn h_ext(&self) -> &[f64] {
        &self.operator.h().values
    }
}

/// Builds `(rho, Phi, W)` and checks `H = chi_{h>0} t`, quasinormality,
/// `U C = C_{Phi,W} U` and the isometry of `U`. Fails when `Phi` sends a
/// product atom of positive `rho_W`-mass to a `rho`-null one.
pub fn build_extension(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    tol: &Tolerances,
) -> Result<ExtensionSystem> {
    let product = ProductSystem::build(inst, family, tol)?;
    if let Some((x, t)) = product.ac_failure {
        return Err(WcoError::AbsoluteContinuity {
            atom: inst.space().id(x).to_string(),
            t,
        });
    }
    let ext_inst = product
        .instance
        .clone()
        .expect("instance exists when absolute continuity holds");
    let operator = WcOperator::new(ext_inst)?;
    let base = WcOperator::new(inst.clone())?;
    let h = base.h();

    let h_ext = &operator.h().values;
    let h_residual = product
        .pairs
        .iter()
        .enumerate()
        .map(|(k, &(x, t))| {
            let expected = if h[x] > 0.0 { t } else { 0.0 };
            (h_ext[k] - expected).abs() / 1f64.max(t)
        })
        .fold(0.0, f64::max);

    let mut intertwining_residual: f64 = 0.0;
    let mut isometry_residual: f64 = 0.0;
    for x in inst.space().atoms() {
        let e = L2Vector::basis(inst.space(), x);
        let lhs = product.embed(&base.apply(&e)?);
        let rhs = operator.apply(&product.embed(&e))?;
        let gap = lhs
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        intertwining_residual = intertwining_residual.max(gap);
        let embedded = product.embed(&e).norm_sqr(operator.space());
        isometry_residual = isometry_residual.max((embedded - 1.0).abs());
    }

    let quasinormal = is_quasinormal(&operator, tol);
    Ok(ExtensionSystem {
        product,
        operator,
        checks: ExtensionChecks {
            h_residual,
            quasinormal,
            intertwining_residual,
            isometry_residual,
        },
    })
}
