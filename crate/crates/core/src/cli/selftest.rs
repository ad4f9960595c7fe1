//! Property suites over generated instances, fanned out with rayon. Workers
//! share nothing; each returns its own counts and failure messages.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{change_of_variables, compute_h, density_mu_sup_w};
use crate::cli::generate::{generate_instance, Kind};
use crate::cli::report::{fmt_f, Report, Table};
use crate::operator::{h_n, power_weight, L2Vector, WcOperator};
use crate::oracle::max_abs;
use crate::space::SystemInstance;
use crate::structure::{classify, polar_decompose};
use crate::subnormality::cc::{
    cc_equivalences, integrated_cc1_residual, main1_battery, moments_check, product_density_residual,
    verify_cc, verify_cc1,
};
use crate::subnormality::certify::{certify_subnormal, FamilySource};
use crate::subnormality::extension::build_extension;
use crate::subnormality::family::{PointMeasure, ProbabilityFamily};
use crate::subnormality::solver::{solve_cc, SolveMode};
use crate::tolerance::Tolerances;
use crate::C64;

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    pub seed: u64,
    pub count: usize,
    pub nmax: u32,
    pub tol: Tolerances,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 600,
            nmax: crate::subnormality::cc::DEFAULT_NMAX,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SelftestSummary {
    pub instances: usize,
    pub checks: usize,
    pub failures: Vec<String>,
    pub per_kind: BTreeMap<&'static str, usize>,
    pub elapsed_seconds: f64,
}

impl SelftestSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Instance plan: mostly random and quasinormal, with every kind present.
pub fn plan(count: usize, seed: u64) -> Vec<(Kind, usize, u64)> {
    let shares = [
        (Kind::Random, 45),
        (Kind::Quasinormal, 25),
        (Kind::Multiplication, 15),
        (Kind::Cycle, 5),
        (Kind::TruncatedShift, 5),
        (Kind::Collapse, 5),
    ];
    let mut jobs = Vec::with_capacity(count);
    let mut k = 0u64;
    for (kind, share) in shares {
        let n = (count * share).div_ceil(100);
        for i in 0..n {
            let size = 1 + (i % 12);
            jobs.push((kind, size, seed.wrapping_mul(1_000_003).wrapping_add(k)));
            k += 1;
        }
    }
    jobs
}

struct Checker {
    label: String,
    checks: usize,
    failures: Vec<String>,
}

impl Checker {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(format!("{}: {}", self.label, what()));
        }
    }
}

fn random_family(rng: &mut ChaCha8Rng, inst: &SystemInstance, h: &[f64]) -> ProbabilityFamily {
    let tol = Tolerances::default();
    let measures = inst
        .space()
        .atoms()
        .map(|_| {
            let k = rng.gen_range(1..=3);
            let raw: Vec<(f64, f64)> = (0..k)
                .map(|_| {
                    let t = if rng.gen_bool(0.5) {
                        h[rng.gen_range(0..h.len())]
                    } else {
                        rng.gen_range(0.0..5.0)
                    };
                    (t, rng.gen_range(0.1..1.0))
                })
                .collect();
            let total: f64 = raw.iter().map(|a| a.1).sum();
            PointMeasure::new(raw.into_iter().map(|(t, p)| (t, p / total)), &tol)
                .expect("normalized by construction")
        })
        .collect();
    ProbabilityFamily::new(inst.space(), measures).expect("one measure per atom")
}

fn family_suite(c: &mut Checker, inst: &SystemInstance, fam: &ProbabilityFamily, name: &str, nmax: u32, tol: &Tolerances) {
    let eq = match cc_equivalences(inst, fam, tol) {
        Ok(eq) => eq,
        Err(e) => return c.check(false, || format!("{name}: equivalences errored: {e}")),
    };
    c.check(eq.agree, || format!("{name}: CC equivalent forms split {:?}", eq.conditions()));
    match verify_cc1(inst, fam, tol) {
        Ok(r) => c.check(r.nicto.is_some_and(|n| n.consistent), || format!("{name}: CC/CC-1 implications broken")),
        Err(e) => c.check(false, || format!("{name}: CC-1 errored: {e}")),
    }
    if let Ok(Some(r)) = product_density_residual(inst, fam, tol) {
        c.check(r <= tol.abs, || format!("{name}: product density identity residual {r:e}"));
    }
    let cc = verify_cc(inst, fam, tol).map(|r| r.satisfied).unwrap_or(false);
    if cc {
        match main1_battery(inst, fam, nmax, tol) {
            Ok(r) => {
                let b = r.main1_battery.expect("battery present");
                c.check(b.agree, || format!("{name}: battery split {:?}", b.conditions()));
                if b.h_positive {
                    let m = moments_check(inst, fam, nmax, tol);
                    c.check(m.as_ref().is_ok_and(|m| m.passed), || format!("{name}: moments failed: {m:?}"));
                }
            }
            Err(e) => c.check(false, || format!("{name}: battery errored: {e}")),
        }
        if verify_cc1(inst, fam, tol).is_ok_and(|r| r.satisfied) {
            let r = integrated_cc1_residual(inst, fam, tol).unwrap_or(f64::INFINITY);
            c.check(r <= tol.abs, || format!("{name}: integrated CC-1 residual {r:e}"));
        }
        match build_extension(inst, fam, tol) {
            Ok(ext) => {
                let ch = &ext.checks;
                c.check(ch.intertwining_residual <= tol.abs, || format!("{name}: intertwining {:e}", ch.intertwining_residual));
                c.check(ch.isometry_residual <= tol.abs, || format!("{name}: isometry {:e}", ch.isometry_residual));
                c.check(ch.quasinormal.oracle_agrees, || format!("{name}: extension quasinormal oracle split"));
            }
            Err(e) => c.check(false, || format!("{name}: extension failed under CC: {e}")),
        }
    }
}

/// Runs every suite on one instance.
pub fn check_instance(kind: Kind, size: usize, seed: u64, nmax: u32, tol: &Tolerances) -> (usize, Vec<String>) {
    let mut c = Checker {
        label: format!("{}-{size}-{seed}", kind.name()),
        checks: 0,
        failures: Vec::new(),
    };
    let inst = match generate_instance(kind, size, seed) {
        Ok(i) => i,
        Err(e) => {
            c.check(false, || format!("generation failed: {e}"));
            return (c.checks, c.failures);
        }
    };
    let op = match WcOperator::new(inst.clone()) {
        Ok(op) => op,
        Err(e) => {
            c.check(false, || format!("operator construction failed: {e}"));
            return (c.checks, c.failures);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = inst.len();
    let h = compute_h(&inst).values;
    let a = op.to_matrix();

    // Calculus and operator structure.
    let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    c.check(change_of_variables(&inst, &f, tol).is_ok(), || "change of variables".into());
    c.check(density_mu_sup_w(&inst, tol).is_ok(), || "density of mu^w".into());
    let polar = polar_decompose(&op, tol);
    c.check(polar.is_ok(), || format!("polar decomposition: {:?}", polar.err()));
    for _ in 0..3 {
        let v = L2Vector::new((0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
        let via_formula = op.adjoint_apply(&v).expect("dimensions match").coords(inst.space());
        let via_matrix = a.adjoint() * v.coords(inst.space());
        let gap = (via_formula - &via_matrix).camax();
        c.check(gap <= tol.abs * 1f64.max(via_matrix.camax()), || format!("adjoint gap {gap:e}"));
    }
    let cl = classify(&op, tol);
    c.check(cl.quasinormal.oracle_agrees, || "quasinormal oracle split".into());
    c.check(cl.hyponormal.oracle_agrees, || "hyponormal oracle split".into());
    c.check(cl.normal.oracle_agrees, || "normal oracle split".into());
    c.check(cl.injectivity.agree, || format!("injectivity split {:?}", cl.injectivity.conditions()));
    c.check(cl.hierarchy_consistent, || "normal => quasinormal => hyponormal broken".into());
    let mut power = crate::oracle::CMatrix::identity(n, n);
    for k in 0..=nmax {
        c.check(h_n(&inst, k, tol).is_ok(), || format!("h_{k} routes disagree"));
        let direct = WcOperator::new(power_weight(&inst, k)).map(|o| o.to_matrix());
        match direct {
            Ok(d) => {
                let gap = max_abs(&(&power - &d));
                c.check(gap <= 1e-9 * 1f64.max(max_abs(&d)), || format!("matrix power {k} gap {gap:e}"));
            }
            Err(e) => c.check(false, || format!("power weight {k}: {e}")),
        }
        power = &power * &a;
    }

    // Families.
    let dirac = ProbabilityFamily::dirac(inst.space(), &h).expect("h is finite and nonnegative");
    family_suite(&mut c, &inst, &dirac, "delta_h", nmax, tol);
    let rf = random_family(&mut rng, &inst, &h);
    family_suite(&mut c, &inst, &rf, "random family", nmax, tol);

    // Solver soundness and completeness on the grid h + {0}.
    let mut grid = h.clone();
    grid.push(0.0);
    let dirac_cc = verify_cc(&inst, &dirac, tol).is_ok_and(|r| r.satisfied);
    match solve_cc(&inst, &grid, SolveMode::Certifying, tol) {
        Ok(out) => {
            if let Some(fam) = out.family() {
                let r = verify_cc(&inst, fam, &tol.with_abs(tol.solver));
                c.check(r.is_ok_and(|r| r.satisfied), || "solver family fails re-verification".into());
                family_suite(&mut c, &inst, fam, "solver family", nmax, &tol.with_abs(tol.solver));
            }
            c.check(!dirac_cc || out.is_feasible(), || "solver infeasible although delta_h satisfies CC".into());
        }
        Err(e) => c.check(false, || format!("solver errored: {e}")),
    }

    // Certification.
    match certify_subnormal(&inst, &FamilySource::Auto, nmax, tol) {
        Ok(cert) => {
            if !cl.hyponormal.holds {
                c.check(!cert.certified, || "certified a non-hyponormal operator".into());
            }
            if matches!(kind, Kind::Quasinormal | Kind::Multiplication | Kind::Cycle) {
                c.check(cert.certified, || format!("not certified: {:?}", cert.reason));
            }
            if kind == Kind::Multiplication {
                c.check(cert.normal == Some(true), || "multiplication operator not flagged normal".into());
            }
            if kind == Kind::Collapse && size >= 2 {
                c.check(!cert.certified, || "collapse certified".into());
            }
        }
        Err(e) => c.check(false, || format!("certify errored: {e}")),
    }
    (c.checks, c.failures)
}

pub fn selftest(config: &SelftestConfig) -> SelftestSummary {
    let start = Instant::now();
    let jobs = plan(config.count, config.seed);
    let results: Vec<(Kind, usize, Vec<String>)> = jobs
        .par_iter()
        .map(|&(kind, size, seed)| {
            let (checks, failures) = check_instance(kind, size, seed, config.nmax, &config.tol);
            (kind, checks, failures)
        })
        .collect();
    let mut summary = SelftestSummary::default();
    for (kind, checks, failures) in results {
        summary.instances += 1;
        summary.checks += checks;
        *summary.per_kind.entry(kind.name()).or_default() += 1;
        summary.failures.extend(failures);
    }
    summary.elapsed_seconds = start.elapsed().as_secs_f64();
    summary
}

pub fn run_selftest(config: &SelftestConfig, report: &mut Report) {
    let summary = selftest(config);
    let mut t = Table::new("instances", &["kind", "count"]);
    for (k, n) in &summary.per_kind {
        t.row(vec![k.to_string(), n.to_string()]);
    }
    report.table(t);
    if !summary.failures.is_empty() {
        let mut f = Table::new("failures", &["failure"]);
        for msg in summary.failures.iter().take(50) {
            f.row(vec![msg.clone()]);
        }
        report.table(f);
    }
    report.section("selftest", &summary);
    let line = format!(
        "{} instances, {} checks, {} failures in {}s",
        summary.instances,
        summary.checks,
        summary.failures.len(),
        fmt_f((summary.elapsed_seconds * 100.0).round() / 100.0)
    );
    if summary.passed() {
        report.ok(line);
    } else {
        report.negative(line);
    }
}
