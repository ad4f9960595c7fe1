//! The consistency condition and the statements equivalent to it or implied
//! by it.
//!
//! Every test set `sigma` is reduced to a singleton `{t}` with `t` ranging
//! over the union of the family's locations; all measures are finitely
//! atomic, so singleton equalities give equality on every Borel set.

use serde::Serialize;

use crate::calculus::{compute_h, cond_expectation_inv, is_dirac_at_zero};
use crate::error::{Result, WcoError};
use crate::operator::{h_n, power_weight};
use crate::space::{Atom, SystemInstance};
use crate::subnormality::extension::ProductSystem;
use crate::subnormality::family::ProbabilityFamily;
use crate::tolerance::Tolerances;

/// Default number of moments compared.
pub const DEFAULT_NMAX: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CcVariant {
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "CC-1")]
    Cc1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcResidual {
    pub atom: String,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
}

/// Both directions of the cross-implications between CC and CC-1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NictoCheck {
    /// CC-1 holds and the CC-1 equation also holds on `{h>0} ∩ {w=0}`.
    pub cc1_to_cc_hypothesis: bool,
    pub cc1_to_cc_conclusion: bool,
    /// CC holds and `P(x,.)` has mean zero on `{h=0} ∩ {w!=0}`.
    pub cc_to_cc1_hypothesis: bool,
    pub cc_to_cc1_conclusion: bool,
    pub consistent: bool,
}

/// Conditions (i)-(vii) of the equivalence theorem, evaluated independently.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Main1Battery {
    pub cc1: bool,
    pub moments: bool,
    pub mean_zero_on_h_zero: bool,
    pub dirac_zero_on_h_zero: bool,
    pub extension_h_equals_t: bool,
    pub extension_h_invariant: bool,
    pub h_positive: bool,
    pub nmax: u32,
    pub agree: bool,
}

impl Main1Battery {
    pub fn conditions(&self) -> [bool; 7] {
        [
            self.cc1,
            self.moments,
            self.mean_zero_on_h_zero,
            self.dirac_zero_on_h_zero,
            self.extension_h_equals_t,
            self.extension_h_invariant,
            self.h_positive,
        ]
    }

    pub fn value(&self) -> Option<bool> {
        self.agree.then_some(self.cc1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcReport {
    pub variant: CcVariant,
    pub satisfied: bool,
    pub tolerance: f64,
    pub max_residual: f64,
    pub residuals: Vec<CcResidual>,
    pub main1_battery: Option<Main1Battery>,
    pub nicto: Option<NictoCheck>,
}

impl CcReport {
    fn from_residuals(variant: CcVariant, residuals: Vec<CcResidual>, tolerance: f64) -> Self {
        let max_residual = residuals.iter().map(|r| r.deviation).fold(0.0, f64::max);
        Self {
            variant,
            satisfied: max_residual <= tolerance,
            tolerance,
            max_residual,
            residuals,
            main1_battery: None,
            nicto: None,
        }
    }

    pub fn worst(&self) -> Option<&CcResidual> {
        self.residuals
            .iter()
            .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
    }
}

fn check_family(inst: &SystemInstance, family: &ProbabilityFamily) -> Result<()> {
    if family.len() != inst.len() {
        return Err(WcoError::SpaceMismatch {
            expected: inst.len(),
            got: family.len(),
        });
    }
    Ok(())
}

/// Deviation scaled by `max(1, |lhs|, |rhs|)`.
fn scaled_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// `x -> P(x, {t})`.
fn singleton_masses(family: &ProbabilityFamily, t: f64, tol: &Tolerances) -> Vec<f64> {
    family.measures().iter().map(|m| m.mass_at(t, tol)).collect()
}

/// `(E(P(., {t})) o phi^{-1})(x) * h(x)` at every atom.
fn pulled_back_times_h(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    t: f64,
    h: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let g = cond_expectation_inv(inst, &singleton_masses(family, t, tol))?;
    Ok(g.values.iter().zip(h).map(|(g, h)| g * h).collect())
}

/// CC: for `w(x) != 0`, the `mu_w`-average of `P(., {t})` over the fiber of
/// `phi(x)` equals `t P(phi(x), {t}) / h(phi(x))`. Deviations are absolute
/// and compared against `tol.abs`.
pub fn verify_cc(inst: &SystemInstance, family: &ProbabilityFamily, tol: &Tolerances) -> Result<CcReport> {
    verify_cc_at(inst, family, tol, tol.abs)
}

/// As [`verify_cc`] with an explicit acceptance threshold.
pub fn verify_cc_at(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    tol: &Tolerances,
    threshold: f64,
) -> Result<CcReport> {
    check_family(inst, family)?;
    let h = compute_h(inst).values;
    let locations = family.locations(tol);
    let fibers = inst.fibers();
    let mut residuals = Vec::new();
    for t in locations {
        let p = singleton_masses(family, t, tol);
        for x in inst.space().atoms().filter(|&x| inst.w_nonzero(x)) {
            let y = inst.phi(x);
            let den: f64 = fibers[y].iter().map(|&z| inst.weighted_mass(z)).sum();
            let num: f64 = fibers[y].iter().map(|&z| inst.weighted_mass(z) * p[z]).sum();
            let lhs = num / den;
            let rhs = t * p[y] / h[y];
            residuals.push(CcResidual {
                atom: inst.space().id(x).to_string(),
                t,
                lhs,
                rhs,
                deviation: (lhs - rhs).abs(),
            });
        }
    }
    Ok(CcReport::from_residuals(CcVariant::Cc, residuals, threshold))
}

fn cc1_residuals(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    tol: &Tolerances,
    keep: impl Fn(Atom) -> bool,
) -> Result<Vec<CcResidual>> {
    let h = compute_h(inst).values;
    let mut residuals = Vec::new();
    for t in family.locations(tol) {
        let lhs = pulled_back_times_h(inst, family, t, &h, tol)?;
        for x in inst.space().atoms().filter(|&x| keep(x)) {
            let rhs = t * family.get(x).mass_at(t, tol);
            residuals.push(CcResidual {
                atom: inst.space().id(x).to_string(),
                t,
                lhs: lhs[x],
                rhs,
                deviation: scaled_gap(lhs[x], rhs),
            });
        }
    }
    Ok(residuals)
}

/// CC-1: `(E(P(., {t})) o phi^{-1})(x) h(x) = t P(x, {t})` for `w(x) != 0`.
/// Deviations are scaled by `max(1, |lhs|, |rhs|)`. The report carries the
/// CC / CC-1 cross-implications.
pub fn verify_cc1(inst: &SystemInstance, family: &ProbabilityFamily, tol: &Tolerances) -> Result<CcReport> {
    check_family(inst, family)?;
    let mut report = CcReport::from_residuals(
        CcVariant::Cc1,
        cc1_residuals(inst, family, tol, |x| inst.w_nonzero(x))?,
        tol.abs,
    );
    let h = compute_h(inst).values;
    let cc = verify_cc(inst, family, tol)?;
    let off_support = cc1_residuals(inst, family, tol, |x| !inst.w_nonzero(x) && h[x] > 0.0)?;
    let off_support_ok = off_support.iter().all(|r| r.deviation <= tol.abs);
    let mean_zero = inst
        .space()
        .atoms()
        .filter(|&x| inst.w_nonzero(x) && h[x] == 0.0)
        .all(|x| family.get(x).mean() <= tol.abs);

    let i_hyp = report.satisfied && off_support_ok;
    let ii_hyp = cc.satisfied && mean_zero;
    report.nicto = Some(NictoCheck {
        cc1_to_cc_hypothesis: i_hyp,
        cc1_to_cc_conclusion: cc.satisfied,
        cc_to_cc1_hypothesis: ii_hyp,
        cc_to_cc1_conclusion: report.satisfied,
        consistent: (!i_hyp || cc.satisfied) && (!ii_hyp || report.satisfied),
    });
    Ok(report)
}

/// Power-weight derivatives `h_0, ..., h_nmax`, each computed directly from
/// `(phi^n, w_n)`.
fn direct_h_n(inst: &SystemInstance, nmax: u32) -> Vec<Vec<f64>> {
    (0..=nmax)
        .map(|n| compute_h(&power_weight(inst, n)).values)
        .collect()
}

fn moments_agree(inst: &SystemInstance, family: &ProbabilityFamily, hn: &[Vec<f64>], tol: &Tolerances) -> bool {
    inst.space().atoms().filter(|&x| inst.w_nonzero(x)).all(|x| {
        hn.iter().enumerate().all(|(n, h)| {
            let m = family.get(x).moment(n as u32);
            (h[x] - m).abs() <= tol.moments * 1f64.max(h[x].abs())
        })
    })
}

/// Runs conditions (i)-(vii). Requires CC.
pub fn main1_battery(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    nmax: u32,
    tol: &Tolerances,
) -> Result<CcReport> {
    let mut report = verify_cc(inst, family, tol)?;
    if !report.satisfied {
        return Err(WcoError::Precondition(format!(
            "the family does not satisfy the consistency condition (max residual {:e})",
            report.max_residual
        )));
    }
    report.main1_battery = Some(battery_values(inst, family, nmax, tol)?);
    Ok(report)
}

fn battery_values(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    nmax: u32,
    tol: &Tolerances,
) -> Result<Main1Battery> {
    let h = compute_h(inst).values;
    let cc1 = verify_cc1(inst, family, tol)?.satisfied;
    let moments = moments_agree(inst, family, &direct_h_n(inst, nmax), tol);

    let z: Vec<Atom> = inst
        .space()
        .atoms()
        .filter(|&x| inst.w_nonzero(x) && h[x] == 0.0)
        .collect();
    let mean_zero_on_h_zero = z.iter().all(|&x| family.get(x).mean() <= tol.abs);
    let mut dirac_zero_on_h_zero = true;
    for &x in &z {
        dirac_zero_on_h_zero &= is_dirac_at_zero(family.get(x).atoms(), tol)?;
    }

    let product = ProductSystem::build(inst, family, tol)?;
    let (extension_h_equals_t, extension_h_invariant) = match (&product.instance, &product.h_ext) {
        (Some(ext), Some(big_h)) => {
            let on_support = |k: usize| inst.w_nonzero(product.pairs[k].0);
            let equals_t = (0..big_h.len())
                .filter(|&k| on_support(k))
                .all(|k| scaled_gap(big_h[k], product.pairs[k].1) <= tol.abs);
            let invariant = (0..big_h.len())
                .filter(|&k| on_support(k))
                .all(|k| scaled_gap(big_h[ext.phi(k)], big_h[k]) <= tol.abs);
            (equals_t, invariant)
        }
        _ => (false, false),
    };
    let h_positive = z.is_empty();

    let conditions = [
        cc1,
        moments,
        mean_zero_on_h_zero,
        dirac_zero_on_h_zero,
        extension_h_equals_t,
        extension_h_invariant,
        h_positive,
    ];
    Ok(Main1Battery {
        cc1,
        moments,
        mean_zero_on_h_zero,
        dirac_zero_on_h_zero,
        extension_h_equals_t,
        extension_h_invariant,
        h_positive,
        nmax,
        agree: conditions.iter().all(|&c| c == conditions[0]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: u32,
    pub atom: String,
    pub h_n: f64,
    pub moment: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsReport {
    pub nmax: u32,
    pub passed: bool,
    /// Largest `|h_n(x) - int t^n P(x,dt)| / max(1, h_n(x))`.
    pub max_residual: f64,
    pub rows: Vec<MomentRow>,
}

/// Compares `h_n(x)` with the `n`-th moment of `P(x, .)` on `{w != 0}` for
/// `n = 0..=nmax`. The derivatives are taken through the two-route
/// [`h_n`], so a disagreement between them surfaces as an error.
pub fn moments_check(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    nmax: u32,
    tol: &Tolerances,
) -> Result<MomentsReport> {
    let cc = verify_cc(inst, family, tol)?;
    if !cc.satisfied {
        return Err(WcoError::Precondition(format!(
            "the family does not satisfy the consistency condition (max residual {:e})",
            cc.max_residual
        )));
    }
    let h = compute_h(inst).values;
    if let Some(x) = inst.space().atoms().find(|&x| inst.w_nonzero(x) && h[x] == 0.0) {
        return Err(WcoError::Precondition(format!(
            "h vanishes at atom {} where w is nonzero",
            inst.space().id(x)
        )));
    }
    let mut rows = Vec::new();
    for n in 0..=nmax {
        let hn = h_n(inst, n, tol)?;
        for x in inst.space().atoms().filter(|&x| inst.w_nonzero(x)) {
            let moment = family.get(x).moment(n);
            rows.push(MomentRow {
                n,
                atom: inst.space().id(x).to_string(),
                h_n: hn[x],
                moment,
                deviation: (hn[x] - moment).abs() / 1f64.max(hn[x].abs()),
            });
        }
    }
    let max_residual = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(MomentsReport {
        nmax,
        passed: max_residual <= tol.moments,
        max_residual,
        rows,
    })
}

/// The four equivalent forms of CC, evaluated independently.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcEquivalences {
    /// CC itself.
    pub cc: bool,
    /// `(E(P(.,{t})) o phi^{-1}) h = chi_{h>0} t P(., {t})` at every atom.
    pub pulled_back: bool,
    /// Absolute continuity and `H = chi_{h>0} t` on every product atom.
    pub product_h: bool,
    /// Absolute continuity and `H(phi(x),t) P(phi(x),{t}) = t P(phi(x),{t})`
    /// for `w(x) != 0`.
    pub product_h_on_images: bool,
    pub agree: bool,
}

impl CcEquivalences {
    pub fn conditions(&self) -> [bool; 4] {
        [self.cc, self.pulled_back, self.product_h, self.product_h_on_images]
    }
}

pub fn cc_equivalences(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    tol: &Tolerances,
) -> Result<CcEquivalences> {
    let cc = verify_cc(inst, family, tol)?.satisfied;
    let h = compute_h(inst).values;
    let locations = family.locations(tol);

    let mut pulled_back = true;
    for &t in &locations {
        let lhs = pulled_back_times_h(inst, family, t, &h, tol)?;
        for x in inst.space().atoms() {
            let rhs = if h[x] > 0.0 { t * family.get(x).mass_at(t, tol) } else { 0.0 };
            pulled_back &= scaled_gap(lhs[x], rhs) <= tol.abs;
        }
    }

    let product = ProductSystem::build(inst, family, tol)?;
    let (product_h, product_h_on_images) = match &product.h_ext {
        Some(big_h) => {
            let all = product.pairs.iter().enumerate().all(|(k, &(x, t))| {
                let expected = if h[x] > 0.0 { t } else { 0.0 };
                scaled_gap(big_h[k], expected) <= tol.abs
            });
            let images = inst
                .space()
                .atoms()
                .filter(|&x| inst.w_nonzero(x))
                .all(|x| {
                    let y = inst.phi(x);
                    locations.iter().all(|&t| {
                        let p = family.get(y).mass_at(t, tol);
                        let big_h_yt = product.embedding[y]
                            .iter()
                            .find(|&&k| tol.same_location(product.pairs[k].1, t))
                            .map_or(0.0, |&k| big_h[k]);
                        scaled_gap(big_h_yt * p, t * p) <= tol.abs
                    })
                });
            (all, images)
        }
        None => (false, false),
    };
    let conditions = [cc, pulled_back, product_h, product_h_on_images];
    Ok(CcEquivalences {
        cc,
        pulled_back,
        product_h,
        product_h_on_images,
        agree: conditions.iter().all(|&c| c == cc),
    })
}

/// Largest deviation, over product atoms, of
/// `(E(P(.,{t})) o phi^{-1})(x) h(x) = H(x,t) P(x,{t})`, or `None` when
/// absolute continuity fails on the product.
pub fn product_density_residual(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    tol: &Tolerances,
) -> Result<Option<f64>> {
    check_family(inst, family)?;
    let product = ProductSystem::build(inst, family, tol)?;
    let Some(big_h) = &product.h_ext else {
        return Ok(None);
    };
    let h = compute_h(inst).values;
    let mut worst: f64 = 0.0;
    for t in family.locations(tol) {
        let lhs = pulled_back_times_h(inst, family, t, &h, tol)?;
        for (k, &(x, tk)) in product.pairs.iter().enumerate() {
            if tol.same_location(tk, t) {
                let rhs = big_h[k] * family.get(x).mass_at(t, tol);
                worst = worst.max(scaled_gap(lhs[x], rhs));
            }
        }
    }
    Ok(Some(worst))
}

/// Largest deviation, over `w(x) != 0`, of
/// `(E(int f dP(.,dt)) o phi^{-1})(x) h(x) = int t f(t) P(x,dt)` for
/// `f(t) = t^n`, `n = 0..=4`, and for the indicator of each location.
pub fn integrated_cc1_residual(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    tol: &Tolerances,
) -> Result<f64> {
    check_family(inst, family)?;
    let h = compute_h(inst).values;
    let locations = family.locations(tol);
    let mut tests: Vec<Box<dyn Fn(f64) -> f64>> = (0..=4)
        .map(|n| Box::new(move |t: f64| t.powi(n)) as Box<dyn Fn(f64) -> f64>)
        .collect();
    for &s in &locations {
        let tol = *tol;
        tests.push(Box::new(move |t: f64| if tol.same_location(t, s) { 1.0 } else { 0.0 }));
    }
    let mut worst: f64 = 0.0;
    for f in &tests {
        let integral: Vec<f64> = family
            .measures()
            .iter()
            .map(|m| m.atoms().iter().map(|&(t, p)| f(t) * p).sum())
            .collect();
        let g = cond_expectation_inv(inst, &integral)?;
        for x in inst.space().atoms().filter(|&x| inst.w_nonzero(x)) {
            let lhs = g[x] * h[x];
            let rhs: f64 = family.get(x).atoms().iter().map(|&(t, p)| t * f(t) * p).sum();
            worst = worst.max(scaled_gap(lhs, rhs));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{atom_name, MeasureSpace};
    use crate::subnormality::family::PointMeasure;
    use crate::C64;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn inst(mass: &[f64], phi: &[usize], w: &[C64]) -> SystemInstance {
        let space = MeasureSpace::new(mass.iter().enumerate().map(|(k, &m)| (atom_name(k), m)))
            .unwrap();
        SystemInstance::new(space, phi.to_vec(), w.to_vec()).unwrap()
    }

    fn collapse() -> SystemInstance {
        inst(&[1.0, 2.0], &[0, 0], &[c(1.0), c(2.0)])
    }

    /// A 2-cycle `a <-> b` with `mu = (1, 4)` and `|w|^2 = 4 mu(phi(x)) / mu(x)`,
    /// so `h = 4` on the cycle, plus a tree atom `c -> a` with `w(c) = 0`.
    fn quasinormal() -> SystemInstance {
        inst(&[1.0, 4.0, 2.0], &[1, 0, 0], &[c(4.0), C64::new(0.0, 1.0), c(0.0)])
    }

    fn delta_h(inst: &SystemInstance) -> ProbabilityFamily {
        ProbabilityFamily::dirac(inst.space(), &compute_h(inst).values).unwrap()
    }

    #[test]
    fn quasinormal_delta_h_satisfies_cc() {
        let tol = Tolerances::default();
        let q = quasinormal();
        assert_eq!(compute_h(&q).values, vec![4.0, 4.0, 0.0]);
        let fam = delta_h(&q);
        let cc = verify_cc(&q, &fam, &tol).unwrap();
        assert!(cc.satisfied);
        assert!(cc.max_residual <= 1e-15);
        let cc1 = verify_cc1(&q, &fam, &tol).unwrap();
        assert!(cc1.satisfied);
        assert!(cc1.nicto.unwrap().consistent);
        let battery = main1_battery(&q, &fam, DEFAULT_NMAX, &tol).unwrap().main1_battery.unwrap();
        assert!(battery.agree);
        assert_eq!(battery.value(), Some(true));
        assert!(moments_check(&q, &fam, DEFAULT_NMAX, &tol).unwrap().passed);
        assert!(cc_equivalences(&q, &fam, &tol).unwrap().agree);
    }

    #[test]
    fn multiplication_with_zero_weight_is_vacuous() {
        let tol = Tolerances::default();
        let m = inst(&[1.0, 3.0, 0.5], &[0, 1, 2], &[c(2.0), c(0.0), C64::new(1.0, 1.0)]);
        let fam = ProbabilityFamily::dirac(m.space(), &[4.0, 0.0, 2.0]).unwrap();
        let report = main1_battery(&m, &fam, DEFAULT_NMAX, &tol).unwrap();
        let battery = report.main1_battery.unwrap();
        assert_eq!(battery.conditions(), [true; 7]);
        let moments = moments_check(&m, &fam, DEFAULT_NMAX, &tol).unwrap();
        assert!(moments.passed);
        assert_eq!(moments.rows.len(), 2 * 7);
    }

    #[test]
    fn collapse_delta_h_fails_at_b() {
        let tol = Tolerances::default();
        let col = collapse();
        let fam = delta_h(&col);
        let cc = verify_cc(&col, &fam, &tol).unwrap();
        assert!(!cc.satisfied);
        let worst = cc.worst().unwrap();
        // t = 9: fiber average of P(., {9}) is 1/9, while 9 * 1 / 9 = 1.
        assert_eq!(worst.t, 9.0);
        assert!((worst.deviation - 8.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            main1_battery(&col, &fam, DEFAULT_NMAX, &tol),
            Err(WcoError::Precondition(_))
        ));
    }

    #[test]
    fn collapse_with_delta_nine_satisfies_cc_and_battery_is_all_false() {
        let tol = Tolerances::default();
        let col = collapse();
        let fam = ProbabilityFamily::dirac(col.space(), &[9.0, 9.0]).unwrap();
        let cc = verify_cc(&col, &fam, &tol).unwrap();
        assert!(cc.satisfied);
        let battery = main1_battery(&col, &fam, DEFAULT_NMAX, &tol).unwrap().main1_battery.unwrap();
        assert_eq!(battery.conditions(), [false; 7]);
        assert!(battery.agree);
        let cc1 = verify_cc1(&col, &fam, &tol).unwrap();
        assert!(!cc1.satisfied);
        let nicto = cc1.nicto.unwrap();
        assert!(!nicto.cc_to_cc1_hypothesis);
        assert!(nicto.consistent);
        assert!(matches!(
            moments_check(&col, &fam, DEFAULT_NMAX, &tol),
            Err(WcoError::Precondition(_))
        ));
        let eq = cc_equivalences(&col, &fam, &tol).unwrap();
        assert_eq!(eq.conditions(), [true; 4]);
    }

    #[test]
    fn cc_and_cc1_agree_without_zero_sets() {
        let tol = Tolerances::default();
        // w nowhere zero, h > 0 everywhere: a 2-cycle.
        let cyc = inst(&[1.0, 2.0], &[1, 0], &[c(1.0), c(3.0)]);
        let h = compute_h(&cyc).values;
        assert!(h.iter().all(|&v| v > 0.0));
        let families = [
            delta_h(&cyc),
            ProbabilityFamily::dirac(cyc.space(), &[1.0, 2.0]).unwrap(),
            ProbabilityFamily::new(
                cyc.space(),
                vec![
                    PointMeasure::new([(1.0, 0.5), (4.0, 0.5)], &tol).unwrap(),
                    PointMeasure::dirac(4.0).unwrap(),
                ],
            )
            .unwrap(),
        ];
        for fam in &families {
            let cc = verify_cc(&cyc, fam, &tol).unwrap().satisfied;
            let cc1 = verify_cc1(&cyc, fam, &tol).unwrap().satisfied;
            assert_eq!(cc, cc1);
            let eq = cc_equivalences(&cyc, fam, &tol).unwrap();
            assert!(eq.agree, "{eq:?}");
            assert_eq!(eq.cc, cc);
        }
    }

    #[test]
    fn delta_zero_on_zero_set_gives_cc1() {
        let tol = Tolerances::default();
        // b -> a with w(b) != 0, a -> b with w(a) = 0: h(a) > 0, h(b) = 0.
        let z = inst(&[1.0, 1.0], &[1, 0], &[c(0.0), c(2.0)]);
        assert_eq!(compute_h(&z).values, vec![4.0, 0.0]);
        // CC at b: average over fiber {b} of P(., {t}) = t P(a,{t}) / 4.
        // P(b) = delta_0 forces P(a,{t}) = 0 for t != 0, and t = 0 gives 1 = 0.
        let fam = ProbabilityFamily::dirac(z.space(), &[4.0, 0.0]).unwrap();
        let cc = verify_cc(&z, &fam, &tol).unwrap();
        assert!(!cc.satisfied);
        let cc1 = verify_cc1(&z, &fam, &tol).unwrap();
        assert!(cc1.nicto.unwrap().consistent);
    }

    #[test]
    fn product_density_and_integrated_forms() {
        let tol = Tolerances::default();
        let q = quasinormal();
        let fam = delta_h(&q);
        assert!(product_density_residual(&q, &fam, &tol).unwrap().unwrap() <= 1e-15);
        assert!(integrated_cc1_residual(&q, &fam, &tol).unwrap() <= 1e-15);
        let col = collapse();
        assert_eq!(product_density_residual(&col, &delta_h(&col), &tol).unwrap(), None);
    }

    #[test]
    fn mismatched_family_is_an_error() {
        let tol = Tolerances::default();
        let col = collapse();
        let other = MeasureSpace::counting(3).unwrap();
        let fam = ProbabilityFamily::dirac(&other, &[1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            verify_cc(&col, &fam, &tol),
            Err(WcoError::SpaceMismatch { .. })
        ));
    }
}
