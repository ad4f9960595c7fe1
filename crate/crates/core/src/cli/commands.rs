//! Command dispatch. Every command produces a [`Report`]; the exit code is 0
//! for a positive result, 1 for a negative mathematical result and 2 for an
//! input error.

use std::collections::BTreeMap;

use clap::ValueEnum;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::compute_h;
use crate::cli::report::{fmt_f, kv_table, Report, Table};
use crate::cli::scenario::{MassPoint, Scenario, ScenarioError};
use crate::cli::selftest::{run_selftest, SelftestConfig};
use crate::error::WcoError;
use crate::operator::{h_n, WcOperator};
use crate::space::SystemInstance;
use crate::structure::{classify, polar_decompose, Verdict};
use crate::subnormality::cc::{
    cc_equivalences, main1_battery, product_density_residual, verify_cc, verify_cc1, CcReport,
};
use crate::subnormality::certify::{certify_subnormal, FamilySource};
use crate::subnormality::extension::build_extension;
use crate::subnormality::family::ProbabilityFamily;
use crate::subnormality::solver::{solve_cc, SolveMode, SolveOutcome};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    Classify,
    CheckCc,
    Extend,
    SolveCc,
    Certify,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Classify => "classify",
            Command::CheckCc => "check-cc",
            Command::Extend => "extend",
            Command::SolveCc => "solve-cc",
            Command::Certify => "certify",
            Command::Selftest => "selftest",
        }
    }

    pub fn needs_scenario(self) -> bool {
        self != Command::Selftest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

/// Command-line overrides. Each one wins over the scenario's options.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub grid: Option<Vec<f64>>,
    pub nmax: Option<u32>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub mode: SolveMode,
    pub count: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] WcoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub const DEFAULT_NMAX: u32 = crate::subnormality::cc::DEFAULT_NMAX;

fn tolerances(scenario: Option<&Scenario>, flags: &Flags) -> Result<Tolerances, CliError> {
    let base = scenario.map(Scenario::tolerances).unwrap_or_default();
    match flags.tol {
        Some(t) if !(t.is_finite() && t > 0.0) => {
            Err(CliError::Usage(format!("tolerance must be positive and finite, got {t}")))
        }
        Some(t) => Ok(base.with_abs(t)),
        None => Ok(base),
    }
}

fn nmax(scenario: Option<&Scenario>, flags: &Flags) -> u32 {
    flags
        .nmax
        .or_else(|| scenario.and_then(|s| s.options.nmax))
        .unwrap_or(DEFAULT_NMAX)
}

pub fn family_map(inst: &SystemInstance, family: &ProbabilityFamily) -> BTreeMap<String, Vec<MassPoint>> {
    inst.space()
        .atoms()
        .map(|x| {
            let points = family.get(x).atoms().iter().map(|&(t, p)| MassPoint { t, p }).collect();
            (inst.space().id(x).to_string(), points)
        })
        .collect()
}

fn family_table(title: &str, inst: &SystemInstance, family: &ProbabilityFamily) -> Table {
    let mut t = Table::new(title, &["atom", "t", "p"]);
    for x in inst.space().atoms() {
        for &(loc, p) in family.get(x).atoms() {
            t.row(vec![inst.space().id(x).to_string(), fmt_f(loc), fmt_f(p)]);
        }
    }
    t
}

fn default_grid(inst: &SystemInstance) -> Vec<f64> {
    let mut grid = compute_h(inst).values;
    grid.push(0.0);
    grid
}

fn require_family(scenario: &Scenario, command: Command) -> Result<&ProbabilityFamily, CliError> {
    scenario.family.as_ref().ok_or_else(|| {
        CliError::Usage(format!("`{}` needs a scenario with a `family` section", command.name()))
    })
}

/// Runs a command. `scenario` must be present for every command except
/// `selftest`.
pub fn run(command: Command, scenario: Option<&Scenario>, flags: &Flags) -> Result<Report, CliError> {
    let tol = tolerances(scenario, flags)?;
    let nmax = nmax(scenario, flags);
    let mut report = Report::new(command.name(), scenario.map(|s| s.name.as_str()), tol, nmax);
    if command == Command::Selftest {
        let config = SelftestConfig {
            seed: flags.seed.unwrap_or(0),
            count: flags.count.unwrap_or(SelftestConfig::default().count),
            nmax,
            tol,
        };
        run_selftest(&config, &mut report);
        return Ok(report);
    }
    let scenario = scenario
        .ok_or_else(|| CliError::Usage(format!("`{}` needs --scenario", command.name())))?;
    let inst = &scenario.instance;
    match command {
        Command::Analyze => analyze(inst, nmax, &tol, &mut report)?,
        Command::Classify => classify_cmd(inst, &tol, &mut report)?,
        Command::CheckCc => check_cc(inst, require_family(scenario, command)?, nmax, &tol, &mut report)?,
        Command::Extend => extend(inst, require_family(scenario, command)?, &tol, &mut report)?,
        Command::SolveCc => {
            let grid = flags
                .grid
                .clone()
                .or_else(|| scenario.grid.clone())
                .unwrap_or_else(|| default_grid(inst));
            solve(inst, &grid, flags.mode, &tol, &mut report)?
        }
        Command::Certify => {
            let source = if let Some(f) = &scenario.family {
                FamilySource::Given(f.clone())
            } else if let Some(g) = flags.grid.clone().or_else(|| scenario.grid.clone()) {
                FamilySource::Grid(g)
            } else {
                FamilySource::Auto
            };
            certify_cmd(inst, &source, nmax, &tol, &mut report)?
        }
        Command::Selftest => unreachable!("handled above"),
    }
    Ok(report)
}

fn analyze(inst: &SystemInstance, nmax: u32, tol: &Tolerances, report: &mut Report) -> Result<(), CliError> {
    let op = WcOperator::new(inst.clone())?;
    let space = inst.space();
    let h = op.h();
    let hn: Vec<Vec<f64>> = (0..=nmax)
        .map(|n| h_n(inst, n, tol).map(|d| d.values))
        .collect::<Result<_, _>>()?;
    let polar = polar_decompose(&op, tol)?;
    let kernel: Vec<String> = op
        .kernel_basis()
        .iter()
        .flat_map(|v| v.support().map(|x| space.id(x).to_string()).collect::<Vec<_>>())
        .collect();

    let mut t = Table::new("atoms", &["atom", "mu", "phi", "w", "h", "sqrt h", "w~"]);
    for x in space.atoms() {
        let w = inst.w(x);
        let wt = polar.w_tilde[x];
        t.row(vec![
            space.id(x).to_string(),
            fmt_f(space.mass(x)),
            space.id(inst.phi(x)).to_string(),
            format!("{}{:+}i", fmt_f(w.re), fmt_f(w.im)),
            fmt_f(h[x]),
            fmt_f(polar.modulus[x]),
            format!("{}{:+}i", fmt_f(wt.re), fmt_f(wt.im)),
        ]);
    }
    report.table(t);
    let headers: Vec<String> = std::iter::once("atom".to_string())
        .chain((0..=nmax).map(|n| format!("h_{n}")))
        .collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut tn = Table::new("iterated derivatives", &header_refs);
    for x in space.atoms() {
        tn.row(
            std::iter::once(space.id(x).to_string())
                .chain(hn.iter().map(|v| fmt_f(v[x])))
                .collect(),
        );
    }
    report.table(tn);
    report.table(kv_table(
        "kernel and polar decomposition",
        &[
            ("kernel atoms (h = 0)", if kernel.is_empty() { "none".into() } else { kernel.join(", ") }),
            ("||C||", fmt_f(op.norm())),
            ("modulus residual", format!("{:.3e}", polar.modulus_residual)),
            ("factor residual", format!("{:.3e}", polar.factor_residual)),
            ("projection residual", format!("{:.3e}", polar.projection_residual)),
        ],
    ));

    let ids = space.ids();
    let by_atom = |v: &[f64]| -> BTreeMap<String, f64> { ids.iter().cloned().zip(v.iter().copied()).collect() };
    report
        .section(
            "analysis",
            &serde_json::json!({
                "h": by_atom(&h.values),
                "h_n": hn.iter().map(|v| by_atom(v)).collect::<Vec<_>>(),
                "kernel": kernel,
                "norm": op.norm(),
                "polar": {
                    "modulus": by_atom(&polar.modulus.values),
                    "w_tilde": ids.iter().cloned().zip(polar.w_tilde.iter().map(|z| [z.re, z.im])).collect::<BTreeMap<_, _>>(),
                },
            }),
        )
        .residual("polar_modulus", polar.modulus_residual)
        .residual("polar_factor", polar.factor_residual)
        .residual("polar_projection", polar.projection_residual)
        .ok(format!("h computed on {} atoms, kernel dimension {}", space.len(), kernel.len()));
    Ok(())
}

fn verdict_row(name: &str, v: &Verdict) -> Vec<String> {
    vec![
        name.to_string(),
        v.holds.to_string(),
        format!("{:.3e}", v.oracle_residual),
        v.oracle_agrees.to_string(),
        v.witness
            .as_ref()
            .map(|w| format!("{} ({}, {})", w.atom, fmt_f(w.magnitude), w.detail))
            .unwrap_or_default(),
    ]
}

fn classify_cmd(inst: &SystemInstance, tol: &Tolerances, report: &mut Report) -> Result<(), CliError> {
    let op = WcOperator::new(inst.clone())?;
    let c = classify(&op, tol);
    let mut t = Table::new("classification", &["property", "holds", "oracle residual", "oracle agrees", "witness"]);
    t.row(verdict_row("quasinormal", &c.quasinormal));
    t.row(verdict_row("hyponormal", &c.hyponormal));
    t.row(verdict_row("normal", &c.normal));
    report.table(t);
    let inj = &c.injectivity;
    report.table(kv_table(
        "injectivity on {w != 0}",
        &[
            ("kernel trivial on support", inj.kernel_trivial_on_support.to_string()),
            ("mu({h=0} and {w!=0}) = 0", inj.null_overlap_measure_zero.to_string()),
            ("h > 0 a.e. [mu_w]", inj.h_positive_mu_w.to_string()),
            ("chi_{h=0} invariant under phi", inj.zero_set_invariant.to_string()),
            ("kernel part in adjoint kernel", inj.kernel_in_adjoint_kernel.to_string()),
            ("all five agree", inj.agree.to_string()),
            ("overlap measure", fmt_f(inj.overlap_measure)),
        ],
    ));
    report
        .section("classification", &c)
        .residual("quasinormal_commutator", c.quasinormal.oracle_residual)
        .residual("hyponormal_min_eigenvalue", c.hyponormal.oracle_residual)
        .residual("normal_commutator", c.normal.oracle_residual)
        .ok(format!(
            "quasinormal={} hyponormal={} normal={}",
            c.quasinormal.holds, c.hyponormal.holds, c.normal.holds
        ));
    Ok(())
}

const MAX_TEXT_ROWS: usize = 40;

fn residual_table(title: &str, r: &CcReport) -> Table {
    let mut t = Table::new(title, &["atom", "t", "lhs", "rhs", "deviation"]);
    let mut rows: Vec<_> = r.residuals.iter().collect();
    rows.sort_by(|a, b| b.deviation.total_cmp(&a.deviation));
    for res in rows.into_iter().take(MAX_TEXT_ROWS) {
        t.row(vec![
            res.atom.clone(),
            fmt_f(res.t),
            fmt_f(res.lhs),
            fmt_f(res.rhs),
            format!("{:.3e}", res.deviation),
        ]);
    }
    t
}

fn check_cc(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    nmax: u32,
    tol: &Tolerances,
    report: &mut Report,
) -> Result<(), CliError> {
    let cc = verify_cc(inst, family, tol)?;
    let cc1 = verify_cc1(inst, family, tol)?;
    let equivalences = cc_equivalences(inst, family, tol)?;
    let density = product_density_residual(inst, family, tol)?;
    report.table(family_table("family", inst, family));
    report.table(residual_table("CC residuals (largest first)", &cc));
    report.table(residual_table("CC-1 residuals (largest first)", &cc1));
    let mut summary_rows = vec![
        ("CC", cc.satisfied.to_string()),
        ("CC-1", cc1.satisfied.to_string()),
        ("equivalent forms agree", equivalences.agree.to_string()),
    ];
    if let Some(n) = &cc1.nicto {
        summary_rows.push(("CC/CC-1 implications consistent", n.consistent.to_string()));
    }
    let battery = if cc.satisfied {
        let b = main1_battery(inst, family, nmax, tol)?.main1_battery;
        if let Some(b) = &b {
            summary_rows.push(("battery (i)-(vii)", format!("{:?}", b.conditions())));
            summary_rows.push(("battery agrees", b.agree.to_string()));
        }
        b
    } else {
        None
    };
    report.table(kv_table("consistency", &summary_rows));
    report
        .section("family", &family_map(inst, family))
        .section("cc", &cc)
        .section("cc1", &cc1)
        .section("equivalences", &equivalences)
        .section("main1_battery", &battery)
        .residual("cc", cc.max_residual)
        .residual("cc1", cc1.max_residual);
    if let Some(d) = density {
        report.residual("product_density", d);
    }
    if cc.satisfied {
        report.ok(format!("the family satisfies CC (max residual {:.3e})", cc.max_residual));
    } else {
        let w = cc.worst().expect("failing report has residuals");
        report.negative(format!(
            "CC fails at atom {} for t={} (deviation {:.3e})",
            w.atom,
            fmt_f(w.t),
            w.deviation
        ));
    }
    Ok(())
}

fn extend(
    inst: &SystemInstance,
    family: &ProbabilityFamily,
    tol: &Tolerances,
    report: &mut Report,
) -> Result<(), CliError> {
    let ext = match build_extension(inst, family, tol) {
        Ok(ext) => ext,
        Err(e @ WcoError::AbsoluteContinuity { .. }) => {
            report.negative(e.to_string());
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let pi = ext.instance();
    let big_h = ext.h_ext();
    let mut t = Table::new("product atoms", &["atom", "rho", "Phi", "W", "H"]);
    for k in pi.space().atoms() {
        let w = pi.w(k);
        t.row(vec![
            pi.space().id(k).to_string(),
            fmt_f(pi.space().mass(k)),
            pi.space().id(pi.phi(k)).to_string(),
            format!("{}{:+}i", fmt_f(w.re), fmt_f(w.im)),
            fmt_f(big_h[k]),
        ]);
    }
    report.table(t);
    let c = &ext.checks;
    report.table(kv_table(
        "extension checks",
        &[
            ("H = chi_{h>0} t residual", format!("{:.3e}", c.h_residual)),
            ("quasinormal", c.quasinormal.holds.to_string()),
            ("commutator oracle", format!("{:.3e}", c.quasinormal.oracle_residual)),
            ("intertwining residual", format!("{:.3e}", c.intertwining_residual)),
            ("isometry residual", format!("{:.3e}", c.isometry_residual)),
            ("redirected zero-weight atoms", ext.product.redirected.len().to_string()),
        ],
    ));
    let atoms: Vec<_> = pi
        .space()
        .atoms()
        .map(|k| {
            let (x, t) = ext.product.pairs[k];
            serde_json::json!({
                "id": pi.space().id(k),
                "x": inst.space().id(x),
                "t": t,
                "rho": pi.space().mass(k),
                "phi": pi.space().id(pi.phi(k)),
                "w": [pi.w(k).re, pi.w(k).im],
                "h": big_h[k],
            })
        })
        .collect();
    let redirected: Vec<_> = ext
        .product
        .redirected
        .iter()
        .map(|&(k, t)| serde_json::json!({"atom": pi.space().id(k), "excluded_target_t": t}))
        .collect();
    report
        .section("extension", &serde_json::json!({
            "atoms": atoms,
            "redirected": redirected,
            "quasinormal": c.quasinormal,
        }))
        .residual("extension_h", c.h_residual)
        .residual("extension_commutator", c.quasinormal.oracle_residual)
        .residual("intertwining", c.intertwining_residual)
        .residual("isometry", c.isometry_residual);
    if c.all_pass(tol) {
        report.ok(format!("quasinormal extension on {} product atoms", pi.len()));
    } else {
        report.negative("the extension fails its checks; the family likely violates CC");
    }
    Ok(())
}

fn solve(
    inst: &SystemInstance,
    grid: &[f64],
    mode: SolveMode,
    tol: &Tolerances,
    report: &mut Report,
) -> Result<(), CliError> {
    let outcome = solve_cc(inst, grid, mode, tol)?;
    report.section("grid", &grid).section("mode", &mode);
    match outcome {
        SolveOutcome::Feasible { family, residual } => {
            report.table(family_table("solution", inst, &family));
            report
                .section("family", &family_map(inst, &family))
                .residual("cc", residual)
                .ok(format!("feasible; CC residual {residual:.3e}"));
        }
        SolveOutcome::Infeasible { residual, reason } => {
            report
                .section("infeasible", &serde_json::json!({"reason": reason, "residual": residual}))
                .residual("phase_one", residual)
                .negative(format!("infeasible: {reason}"));
        }
    }
    Ok(())
}

fn certify_cmd(
    inst: &SystemInstance,
    source: &FamilySource,
    nmax: u32,
    tol: &Tolerances,
    report: &mut Report,
) -> Result<(), CliError> {
    let cert = certify_subnormal(inst, source, nmax, tol)?;
    let mut rows = vec![("certified", cert.certified.to_string())];
    if let Some(o) = cert.family_origin {
        rows.push(("family", format!("{o:?}")));
    }
    if let Some(r) = &cert.reason {
        rows.push(("reason", r.clone()));
    }
    if let Some(n) = cert.normal {
        rows.push(("normal", n.to_string()));
    }
    report.table(kv_table("certificate", &rows));
    if let Some(f) = &cert.family {
        report.table(family_table("family", inst, f));
        report.section("family", &family_map(inst, f));
    }
    if let Some(cc) = &cert.cc {
        report.residual("cc", cc.max_residual);
    }
    if let Some(m) = &cert.moments {
        report.residual("moments", m.max_residual);
    }
    if let Some(e) = &cert.extension {
        report
            .residual("extension_h", e.h_residual)
            .residual("extension_commutator", e.quasinormal_oracle_residual)
            .residual("intertwining", e.intertwining_residual)
            .residual("isometry", e.isometry_residual);
    }
    if let Some(r) = cert.normal_oracle_residual {
        report.residual("normal_commutator", r);
    }
    report.section("certificate", &cert);
    if cert.certified {
        report.ok(match cert.normal {
            Some(true) => "subnormal; the adjoint is subnormal too, so the operator is normal".to_string(),
            _ => "subnormal, with a quasinormal extension".to_string(),
        });
    } else {
        report.negative(format!(
            "not certifiable: {}",
            cert.reason.as_deref().unwrap_or("unknown")
        ));
    }
    Ok(())
}
