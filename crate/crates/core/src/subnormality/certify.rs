//! End-to-end subnormality certificate: `h > 0` on `{w != 0}`, a family
//! satisfying the consistency condition, and the quasinormal extension that
//! the family induces.

use serde::Serialize;

use crate::calculus::compute_h;
use crate::error::Result;
use crate::operator::WcOperator;
use crate::space::SystemInstance;
use crate::structure::is_normal;
use crate::subnormality::cc::{main1_battery, moments_check, verify_cc, CcReport, MomentsReport, DEFAULT_NMAX};
use crate::subnormality::extension::{build_extension, ExtensionChecks};
use crate::subnormality::family::ProbabilityFamily;
use crate::subnormality::solver::{solve_cc, SolveMode, SolveOutcome};
use crate::tolerance::Tolerances;

/// Where the certificate's family comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySource {
    Given(ProbabilityFamily),
    /// Try `delta_h`, then solve on this grid.
    Grid(Vec<f64>),
    /// Try `delta_h`, then solve on the values of `h` together with 0.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyOrigin {
    Given,
    DiracH,
    Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionSummary {
    pub product_atoms: usize,
    pub redirected: usize,
    pub h_residual: f64,
    pub quasinormal: bool,
    pub quasinormal_oracle_residual: f64,
    pub intertwining_residual: f64,
    pub isometry_residual: f64,
}

impl ExtensionSummary {
    fn new(product_atoms: usize, redirected: usize, checks: &ExtensionChecks) -> Self {
        Self {
            product_atoms,
            redirected,
            h_residual: checks.h_residual,
            quasinormal: checks.quasinormal.holds,
            quasinormal_oracle_residual: checks.quasinormal.oracle_residual,
            intertwining_residual: checks.intertwining_residual,
            isometry_residual: checks.isometry_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub certified: bool,
    pub reason: Option<String>,
    #[serde(skip)]
    pub family: Option<ProbabilityFamily>,
    pub family_origin: Option<FamilyOrigin>,
    pub cc: Option<CcReport>,
    pub moments: Option<MomentsReport>,
    pub extension: Option<ExtensionSummary>,
    /// For a multiplication operator: whether `M_{conj w}` certifies too.
    pub adjoint_certified: Option<bool>,
    /// Subnormality of both `M_w` and its adjoint, i.e. normality.
    pub normal: Option<bool>,
    pub normal_oracle_residual: Option<f64>,
}

impl Certificate {
    fn rejected(reason: String) -> Self {
        Self {
            certified: false,
            reason: Some(reason),
            family: None,
            family_origin: None,
            cc: None,
            moments: None,
            extension: None,
            adjoint_certified: None,
            normal: None,
            normal_oracle_residual: None,
        }
    }
}

fn choose_family(
    inst: &SystemInstance,
    source: &FamilySource,
    tol: &Tolerances,
) -> Result<std::result::Result<(ProbabilityFamily, FamilyOrigin), String>> {
    let h = compute_h(inst).values;
    let grid = match source {
        FamilySource::Given(family) => {
            let cc = verify_cc(inst, family, tol)?;
            return Ok(if cc.satisfied {
                Ok((family.clone(), FamilyOrigin::Given))
            } else {
                let worst = cc.worst().expect("a failing report has residuals");
                Err(format!(
                    "the given family violates the consistency condition at atom {} (t={}, deviation {:e})",
                    worst.atom, worst.t, worst.deviation
                ))
            });
        }
        FamilySource::Grid(grid) => grid.clone(),
        FamilySource::Auto => {
            let mut grid = h.clone();
            grid.push(0.0);
            grid
        }
    };
    let dirac = ProbabilityFamily::dirac(inst.space(), &h)?;
    if verify_cc(inst, &dirac, tol)?.satisfied {
        return Ok(Ok((dirac, FamilyOrigin::DiracH)));
    }
    Ok(match solve_cc(inst, &grid, SolveMode::Certifying, tol)? {
        SolveOutcome::Feasible { family, .. } => Ok((family, FamilyOrigin::Solver)),
        SolveOutcome::Infeasible { residual, reason } => {
            Err(format!("{reason} (phase-one residual {residual:e})"))
        }
    })
}

fn certify_one(inst: &SystemInstance, source: &FamilySource, nmax: u32, tol: &Tolerances) -> Result<Certificate> {
    let op = WcOperator::new(inst.clone())?;
    let h = op.h();
    if let Some(x) = inst.space().atoms().find(|&x| inst.w_nonzero(x) && h[x] == 0.0) {
        return Ok(Certificate::rejected(format!(
            "h({id}) = 0 while w({id}) != 0: h > 0 fails on {{w != 0}}, which every subnormal \
             (indeed every hyponormal) weighted composition operator satisfies",
            id = inst.space().id(x)
        )));
    }
    let (family, origin) = match choose_family(inst, source, tol)? {
        Ok(found) => found,
        Err(reason) => return Ok(Certificate::rejected(reason)),
    };
    // Solver output is only guaranteed to the solver tolerance.
    let check_tol = if origin == FamilyOrigin::Solver {
        tol.with_abs(tol.abs.max(tol.solver))
    } else {
        *tol
    };
    let tol = &check_tol;
    let cc = main1_battery(inst, &family, nmax, tol)?;
    let battery_ok = cc.main1_battery.as_ref().is_some_and(|b| b.value() == Some(true));
    let moments = moments_check(inst, &family, nmax, tol)?;
    let ext = build_extension(inst, &family, tol)?;
    let extension = ExtensionSummary::new(ext.product.pairs.len(), ext.product.redirected.len(), &ext.checks);
    let ext_ok = ext.checks.all_pass(tol);

    let certified = battery_ok && moments.passed && ext_ok;
    let reason = (!certified).then(|| {
        format!(
            "internal checks failed: battery {battery_ok}, moments {}, extension {ext_ok}",
            moments.passed
        )
    });
    Ok(Certificate {
        certified,
        reason,
        family: Some(family),
        family_origin: Some(origin),
        cc: Some(cc),
        moments: Some(moments),
        extension: Some(extension),
        adjoint_certified: None,
        normal: None,
        normal_oracle_residual: None,
    })
}

/// Certifies subnormality of `C_{phi,w}`. For a multiplication operator
/// (`phi = id`) the adjoint `M_{conj w}` is certified as well; both being
/// subnormal makes `M_w` normal. Negative outcomes are values; errors are
/// reserved for malformed input.
pub fn certify_subnormal(
    inst: &SystemInstance,
    source: &FamilySource,
    nmax: u32,
    tol: &Tolerances,
) -> Result<Certificate> {
    let mut cert = certify_one(inst, source, nmax, tol)?;
    if cert.certified && inst.is_identity_symbol() {
        let conj = inst.with_weights(inst.weights().iter().map(|w| w.conj()).collect())?;
        let adjoint = certify_one(&conj, &FamilySource::Auto, nmax, tol)?;
        let op = WcOperator::new(inst.clone())?;
        let oracle = is_normal(&op, tol);
        cert.adjoint_certified = Some(adjoint.certified);
        cert.normal = Some(adjoint.certified);
        cert.normal_oracle_residual = Some(oracle.oracle_residual);
    }
    Ok(cert)
}

/// [`certify_subnormal`] with the default moment depth.
pub fn certify(inst: &SystemInstance, source: &FamilySource, tol: &Tolerances) -> Result<Certificate> {
    certify_subnormal(inst, source, DEFAULT_NMAX, tol)
}
