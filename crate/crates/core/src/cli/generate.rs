//! Seeded instance generators.

use std::f64::consts::TAU;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli::scenario::Scenario;
use crate::error::{Result, WcoError};
use crate::space::{atom_name, Atom, MeasureSpace, SystemInstance};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Random symbol, masses in (0.1, 10), complex weights with about 20% zeros.
    Random,
    /// `h o phi = h` on `{w != 0}` by construction.
    Quasinormal,
    /// `phi = id`.
    Multiplication,
    /// Everything maps to the first atom; `mu(k) = w(k) = k + 1`.
    Collapse,
    /// A single cycle with constant `|w|` and counting measure.
    Cycle,
    /// `size + 1` atoms, `phi(k) = max(k - 1, 0)`, `w(k) = sqrt(k + 1)`.
    TruncatedShift,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Random,
        Kind::Quasinormal,
        Kind::Multiplication,
        Kind::Collapse,
        Kind::Cycle,
        Kind::TruncatedShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Random => "random",
            Kind::Quasinormal => "quasinormal",
            Kind::Multiplication => "multiplication",
            Kind::Collapse => "collapse",
            Kind::Cycle => "cycle",
            Kind::TruncatedShift => "truncated-shift",
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = WcoError;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| WcoError::InvalidInstance(format!("unknown generator kind `{s}`")))
    }
}

fn masses(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.1..10.0)).collect()
}

fn phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.gen_range(0.0..TAU))
}

fn random_weight(rng: &mut ChaCha8Rng) -> C64 {
    if rng.gen_bool(0.2) {
        C64::new(0.0, 0.0)
    } else {
        C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    }
}

/// Atoms lying on a cycle of `phi`.
pub fn cycle_atoms(phi: &[Atom]) -> Vec<bool> {
    let n = phi.len();
    (0..n)
        .map(|x| {
            let mut y = phi[x];
            for _ in 0..n {
                if y == x {
                    return true;
                }
                y = phi[y];
            }
            false
        })
        .collect()
}

fn build(mass: Vec<f64>, phi: Vec<Atom>, w: Vec<C64>) -> Result<SystemInstance> {
    let space = MeasureSpace::new(mass.into_iter().enumerate().map(|(k, m)| (atom_name(k), m)))?;
    SystemInstance::new(space, phi, w)
}

/// Builds an instance of the given kind; deterministic in `seed`.
pub fn generate_instance(kind: Kind, size: usize, seed: u64) -> Result<SystemInstance> {
    if size == 0 {
        return Err(WcoError::InvalidInstance("size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size;
    match kind {
        Kind::Random => {
            let mass = masses(&mut rng, n);
            let phi = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let w = (0..n).map(|_| random_weight(&mut rng)).collect();
            build(mass, phi, w)
        }
        Kind::Quasinormal => {
            // Off the cycles w must vanish: a tree atom with w != 0 would
            // need a weighted preimage of its own, and so on forever. On a
            // cycle, |w(x)|^2 = c mu(phi(x)) / mu(x) makes h = c there.
            let mass = masses(&mut rng, n);
            let phi: Vec<Atom> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let on_cycle = cycle_atoms(&phi);
            let mut level = vec![None; n];
            for x in 0..n {
                if on_cycle[x] && level[x].is_none() {
                    let c = if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.25..4.0) };
                    let mut y = x;
                    loop {
                        level[y] = Some(c);
                        y = phi[y];
                        if y == x {
                            break;
                        }
                    }
                }
            }
            let w = (0..n)
                .map(|x| match level[x] {
                    Some(c) if c > 0.0 => phase(&mut rng) * (c * mass[phi[x]] / mass[x]).sqrt(),
                    _ => C64::new(0.0, 0.0),
                })
                .collect();
            build(mass, phi, w)
        }
        Kind::Multiplication => {
            let mass = masses(&mut rng, n);
            let w = (0..n).map(|_| random_weight(&mut rng)).collect();
            build(mass, (0..n).collect(), w)
        }
        Kind::Collapse => {
            let mass = (0..n).map(|k| (k + 1) as f64).collect();
            let w = (0..n).map(|k| C64::new((k + 1) as f64, 0.0)).collect();
            build(mass, vec![0; n], w)
        }
        Kind::Cycle => {
            let r = rng.gen_range(0.5..2.0);
            let w = (0..n).map(|_| phase(&mut rng) * r).collect();
            build(vec![1.0; n], (0..n).map(|k| (k + 1) % n).collect(), w)
        }
        Kind::TruncatedShift => {
            let m = n + 1;
            let w = (0..m).map(|k| C64::new(((k + 1) as f64).sqrt(), 0.0)).collect();
            build(vec![1.0; m], (0..m).map(|k| k.saturating_sub(1)).collect(), w)
        }
    }
}

pub fn generate_scenario(kind: Kind, size: usize, seed: u64) -> Result<Scenario> {
    let instance = generate_instance(kind, size, seed)?;
    let mut scenario = Scenario::new(format!("{}-{size}-{seed}", kind.name()), instance);
    scenario.options.seed = Some(seed);
    Ok(scenario)
}
