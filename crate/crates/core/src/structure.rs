//! Polar decomposition and the quasinormal / hyponormal / normal predicates.
//!
//! Each predicate is decided by one route and cross-checked by another:
//! quasinormality by `h o phi = h` on `{w != 0}` against the commutator
//! `A |A|^2 - |A|^2 A`, hyponormality by the spectrum of `A* A - A A*`
//! against the necessary condition `h > 0` on `{w != 0}`.

use serde::Serialize;

use crate::error::{Result, WcoError};
use crate::operator::{L2Vector, OperatorMatrix, WcOperator};
use crate::oracle::{self, CMatrix, CVector};
use crate::space::Atom;
use crate::tolerance::Tolerances;
use crate::{approx_eq, calculus::DensityFunction, C64};

/// `C = U |C|` with `|C| = M_{sqrt(h)}` and `U = C_{phi, w~}`.
#[derive(Debug, Clone)]
pub struct PolarParts {
    pub modulus: DensityFunction,
    pub w_tilde: Vec<C64>,
    pub partial_isometry: WcOperator,
    /// `max |sqrt(A* A) - diag(sqrt h)|` from the eigendecomposition oracle.
    pub modulus_residual: f64,
    /// `max |U diag(sqrt h) - A|`.
    pub factor_residual: f64,
    /// `max |U* U - P_{h > 0}|`.
    pub projection_residual: f64,
}

pub fn polar_decompose(op: &WcOperator, tol: &Tolerances) -> Result<PolarParts> {
    let inst = op.instance();
    let h = op.h();
    let modulus = DensityFunction {
        values: h.values.iter().map(|v| v.sqrt()).collect(),
        scope: h.scope,
        mask: h.mask.clone(),
    };
    // w(x) != 0 forces h(phi(x)) > 0, so the division never sees a zero.
    let w_tilde: Vec<C64> = inst
        .space()
        .atoms()
        .map(|x| {
            if inst.w_nonzero(x) {
                inst.w(x) / modulus[inst.phi(x)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let partial_isometry = WcOperator::new(inst.with_weights(w_tilde.clone())?)?;

    let a = op.to_matrix();
    let n = op.dim();
    let diag_modulus = CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(modulus[r], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let oracle_modulus = oracle::psd_sqrt(&(a.adjoint() * &a));
    let modulus_residual = oracle::max_abs(&(&oracle_modulus - &diag_modulus));

    let u = partial_isometry.to_matrix();
    let factor_residual = oracle::max_abs(&(&u * &diag_modulus - &a));
    let projection = CMatrix::from_fn(n, n, |r, c| {
        if r == c && h[r] > 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let projection_residual = oracle::max_abs(&(u.adjoint() * &u - projection));

    let scale = 1f64.max(op.norm());
    for (check, residual) in [
        ("polar modulus against sqrt(A*A)", modulus_residual),
        ("polar factorization", factor_residual / scale),
        ("partial isometry initial projection", projection_residual),
    ] {
        if residual > tol.oracle {
            return Err(WcoError::Postcondition {
                check,
                residual,
                tol: tol.oracle,
            });
        }
    }
    Ok(PolarParts {
        modulus,
        w_tilde,
        partial_isometry,
        modulus_residual,
        factor_residual,
        projection_residual,
    })
}

/// `|C*| f = w (h o phi)^{1/2} E(f_w)`, checked against `sqrt(A A*)`.
pub fn adjoint_modulus_apply(op: &WcOperator, f: &L2Vector, tol: &Tolerances) -> Result<L2Vector> {
    let inst = op.instance();
    let e = op.cond_expectation_of_fw(f)?;
    let out = L2Vector::new(
        inst.space()
            .atoms()
            .map(|x| inst.w(x) * op.h()[inst.phi(x)].sqrt() * e[x])
            .collect(),
    );
    let a = op.to_matrix();
    let oracle_out: CVector = oracle::psd_sqrt(&(&a * a.adjoint())) * f.coords(inst.space());
    let residual = (oracle_out - out.coords(inst.space())).camax();
    let scale = 1f64.max(op.norm()) * 1f64.max(f.norm_sqr(inst.space()).sqrt());
    if residual > tol.oracle * scale {
        return Err(WcoError::Postcondition {
            check: "adjoint modulus against sqrt(A A*)",
            residual,
            tol: tol.oracle * scale,
        });
    }
    Ok(out)
}

/// The atom that breaks a predicate and by how much.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub atom: String,
    pub magnitude: f64,
    pub detail: String,
}

/// A boolean verdict with the residual of its independent cross-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    /// Residual of the second route (commutator norm, minimum eigenvalue, ...).
    pub oracle_residual: f64,
    pub oracle_agrees: bool,
}

fn witness(op: &WcOperator, x: Atom, magnitude: f64, detail: String) -> Option<Witness> {
    Some(Witness {
        atom: op.space().id(x).to_string(),
        magnitude,
        detail,
    })
}

/// First atom of `{w != 0}` where `h` vanishes, if any.
pub fn first_h_zero_on_support(op: &WcOperator) -> Option<Atom> {
    let inst = op.instance();
    inst.space()
        .atoms()
        .find(|&x| inst.w_nonzero(x) && op.h()[x] == 0.0)
}

/// Quasinormal iff `h(phi(x)) = h(x)` at every atom with `w(x) != 0`.
pub fn is_quasinormal(op: &WcOperator, tol: &Tolerances) -> Verdict {
    let inst = op.instance();
    let h = op.h();
    let violation = inst
        .space()
        .atoms()
        .find(|&x| inst.w_nonzero(x) && !tol.rel_eq(h[inst.phi(x)], h[x]));
    let holds = violation.is_none();
    let commutator = oracle::quasinormal_commutator(&op.to_matrix());
    let oracle_holds = commutator <= tol.oracle;
    Verdict {
        holds,
        witness: violation.and_then(|x| {
            let y = inst.phi(x);
            witness(
                op,
                x,
                (h[y] - h[x]).abs(),
                format!("h(phi(x)) = {} but h(x) = {}", h[y], h[x]),
            )
        }),
        oracle_residual: commutator,
        oracle_agrees: holds == oracle_holds,
    }
}

/// Hyponormal iff `A* A - A A*` is positive semidefinite.
pub fn is_hyponormal(op: &WcOperator, tol: &Tolerances) -> Verdict {
    let a = op.to_matrix();
    let commutator = oracle::self_commutator(&a);
    let (values, vectors) = if a.is_empty() {
        (vec![0.0], CMatrix::zeros(0, 0))
    } else {
        oracle::hermitian_eigen(&commutator)
    };
    let min = values[0];
    let holds = min >= -tol.psd;
    let hipinj = first_h_zero_on_support(op);
    let witness = if holds {
        None
    } else if let Some(x) = hipinj {
        witness(op, x, -min, "h(x) = 0 although w(x) != 0".to_string())
    } else {
        let col = vectors.column(0);
        let x = (0..col.len())
            .max_by(|&i, &j| col[i].norm().total_cmp(&col[j].norm()))
            .unwrap_or(0);
        witness(op, x, -min, format!("A*A - AA* has eigenvalue {min:e}"))
    };
    Verdict {
        holds,
        witness,
        oracle_residual: min,
        // Hyponormality forces h > 0 on {w != 0}.
        oracle_agrees: !(holds && hipinj.is_some()),
    }
}

/// Normal iff `A* A = A A*`.
pub fn is_normal(op: &WcOperator, tol: &Tolerances) -> Verdict {
    let a = op.to_matrix();
    let commutator = oracle::self_commutator(&a);
    let residual = oracle::max_abs(&commutator);
    let holds = residual <= tol.oracle;
    let witness = if holds {
        None
    } else {
        let (r, _) = (0..commutator.nrows())
            .flat_map(|r| (0..commutator.ncols()).map(move |c| (r, c)))
            .max_by(|&p, &q| commutator[p].norm().total_cmp(&commutator[q].norm()))
            .unwrap_or((0, 0));
        witness(op, r, residual, "A*A != AA*".to_string())
    };
    // On a finite-dimensional space normal means ||Af|| = ||A*f|| for all f;
    // spot-check on the basis.
    let basis_gap = (0..a.ncols())
        .map(|k| (a.column(k).norm() - a.row(k).norm()).abs())
        .fold(0.0, f64::max);
    Verdict {
        holds,
        witness,
        oracle_residual: residual,
        oracle_agrees: !holds || basis_gap <= tol.oracle * 1f64.max(op.norm()),
    }
}

/// The five equivalent injectivity-on-support conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    /// `chi_{w != 0} N(C) = {0}`.
    pub kernel_trivial_on_support: bool,
    /// `mu({h = 0} and {w != 0}) = 0`.
    pub null_overlap_measure_zero: bool,
    /// `h > 0` a.e. `[mu_w]`.
    pub h_positive_mu_w: bool,
    /// `chi_{h=0} = chi_{h=0} o phi` a.e. `[mu_w]`.
    pub zero_set_invariant: bool,
    /// `chi_{w != 0} N(C) is contained in N(C*)`.
    pub kernel_in_adjoint_kernel: bool,
    pub agree: bool,
    pub overlap_measure: f64,
    pub witness: Option<Witness>,
}

impl InjectivityReport {
    pub fn conditions(&self) -> [bool; 5] {
        [
            self.kernel_trivial_on_support,
            self.null_overlap_measure_zero,
            self.h_positive_mu_w,
            self.zero_set_invariant,
            self.kernel_in_adjoint_kernel,
        ]
    }
}

pub fn injectivity_report(op: &WcOperator, tol: &Tolerances) -> InjectivityReport {
    let inst = op.instance();
    let h = op.h();
    let a = op.to_matrix();
    let n = op.dim();

    // Null space from the SVD, restricted to the support of w.
    let support_projection = |v: &CVector| -> CVector {
        CVector::from_fn(n, |x, _| {
            if inst.w_nonzero(x) {
                v[x]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    let restricted: Vec<CVector> = oracle::null_space(&a, tol.oracle)
        .iter()
        .map(support_projection)
        .collect();
    let kernel_trivial_on_support = restricted.iter().all(|v| v.camax() <= tol.oracle);
    let adjoint = a.adjoint();
    let scale = 1f64.max(op.norm());
    let kernel_in_adjoint_kernel = restricted
        .iter()
        .all(|v| (&adjoint * v).camax() <= tol.oracle * scale);

    let overlap_measure: f64 = inst
        .space()
        .atoms()
        .filter(|&x| h[x] == 0.0 && inst.w_nonzero(x))
        .map(|x| inst.space().mass(x))
        .sum();
    let null_overlap_measure_zero = overlap_measure == 0.0;
    let first_bad = first_h_zero_on_support(op);
    let h_positive_mu_w = first_bad.is_none();
    let zero_set_invariant = inst
        .space()
        .atoms()
        .filter(|&x| inst.w_nonzero(x))
        .all(|x| (h[x] == 0.0) == (h[inst.phi(x)] == 0.0));

    let conditions = [
        kernel_trivial_on_support,
        null_overlap_measure_zero,
        h_positive_mu_w,
        zero_set_invariant,
        kernel_in_adjoint_kernel,
    ];
    InjectivityReport {
        kernel_trivial_on_support,
        null_overlap_measure_zero,
        h_positive_mu_w,
        zero_set_invariant,
        kernel_in_adjoint_kernel,
        agree: conditions.iter().all(|&c| c == conditions[0]),
        overlap_measure,
        witness: first_bad.and_then(|x| witness(op, x, inst.space().mass(x), "h(x) = 0 with w(x) != 0".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub quasinormal: Verdict,
    pub hyponormal: Verdict,
    pub normal: Verdict,
    pub injective_on_support: bool,
    pub injectivity: InjectivityReport,
    /// `normal => quasinormal => hyponormal`.
    pub hierarchy_consistent: bool,
}

pub fn classify(op: &WcOperator, tol: &Tolerances) -> Classification {
    let quasinormal = is_quasinormal(op, tol);
    let hyponormal = is_hyponormal(op, tol);
    let normal = is_normal(op, tol);
    let injectivity = injectivity_report(op, tol);
    let hierarchy_consistent =
        (!normal.holds || quasinormal.holds) && (!quasinormal.holds || hyponormal.holds);
    Classification {
        injective_on_support: injectivity.h_positive_mu_w,
        quasinormal,
        hyponormal,
        normal,
        injectivity,
        hierarchy_consistent,
    }
}

/// `max |U - V|` restricted to the columns where `h > 0`, used to compare two
/// polar factors on the initial space.
pub fn polar_factor_gap(u: &OperatorMatrix, v: &OperatorMatrix, h: &DensityFunction) -> f64 {
    (0..u.ncols())
        .filter(|&c| h[c] > 0.0)
        .map(|c| (u.column(c) - v.column(c)).camax())
        .fold(0.0, f64::max)
}

/// Whether two vectors agree to `tol` relative to magnitude, coordinatewise.
pub fn vectors_close(a: &L2Vector, b: &L2Vector, tol: f64) -> bool {
    a.coeffs
        .iter()
        .zip(&b.coeffs)
        .all(|(x, y)| approx_eq(x.re, y.re, tol) && approx_eq(x.im, y.im, tol))
}
