//! Finite atomic measure spaces, the operator's defining data and the
//! measures derived from it.
//!
//! Atoms are addressed by their position in declaration order. Every atom
//! carries strictly positive mass, so the only `mu`-null set is the empty set
//! and "almost everywhere with respect to `mu`" means "at every atom".

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, WcoError};
use crate::C64;

/// Atom index into a [`MeasureSpace`].
pub type Atom = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    ids: Vec<String>,
    mass: Vec<f64>,
    index: HashMap<String, Atom>,
}

impl MeasureSpace {
    pub fn new<I, S>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut mass = Vec::new();
        let mut index = HashMap::new();
        for (id, m) in atoms {
            let id = id.into();
            if !(m.is_finite() && m > 0.0) {
                return Err(WcoError::InvalidSpace(format!(
                    "atom `{id}` has mass {m}; masses must be finite and > 0"
                )));
            }
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(WcoError::InvalidSpace(format!("duplicate atom `{id}`")));
            }
            ids.push(id);
            mass.push(m);
        }
        if ids.is_empty() {
            return Err(WcoError::InvalidSpace("no atoms".into()));
        }
        Ok(Self { ids, mass, index })
    }

    /// Counting measure on atoms named by [`atom_name`].
    pub fn counting(n: usize) -> Result<Self> {
        Self::new((0..n).map(|k| (atom_name(k), 1.0)))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn atoms(&self) -> std::ops::Range<Atom> {
        0..self.ids.len()
    }

    pub fn id(&self, x: Atom) -> &str {
        &self.ids[x]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn mass(&self, x: Atom) -> f64 {
        self.mass[x]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn lookup(&self, id: &str) -> Option<Atom> {
        self.index.get(id).copied()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Default atom names: `a`..`z`, then `x26`, `x27`, ...
pub fn atom_name(k: usize) -> String {
    if k < 26 {
        char::from(b'a' + k as u8).to_string()
    } else {
        format!("x{k}")
    }
}

/// The data `(X, mu, phi, w)` of a weighted composition operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemInstance {
    space: MeasureSpace,
    phi: Vec<Atom>,
    w: Vec<C64>,
}

impl SystemInstance {
    pub fn new(space: MeasureSpace, phi: Vec<Atom>, w: Vec<C64>) -> Result<Self> {
        check_len(space.len(), phi.len())?;
        check_len(space.len(), w.len())?;
        if let Some((x, &y)) = phi.iter().enumerate().find(|(_, &y)| y >= space.len()) {
            return Err(WcoError::InvalidInstance(format!(
                "phi({}) = #{y} is not an atom",
                space.id(x)
            )));
        }
        // |w|^2 must stay representable so that {w != 0} = {|w|^2 mu > 0}.
        if let Some(x) = w.iter().position(|z| {
            let m = z.norm_sqr();
            !m.is_finite() || (m == 0.0 && *z != C64::new(0.0, 0.0))
        }) {
            return Err(WcoError::InvalidInstance(format!(
                "|w({})|^2 is not a finite positive double",
                space.id(x)
            )));
        }
        Ok(Self { space, phi, w })
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn phi(&self, x: Atom) -> Atom {
        self.phi[x]
    }

    pub fn phi_map(&self) -> &[Atom] {
        &self.phi
    }

    pub fn w(&self, x: Atom) -> C64 {
        self.w[x]
    }

    pub fn weights(&self) -> &[C64] {
        &self.w
    }

    /// Exact support test: `w(x) != 0` on the supplied data.
    pub fn w_nonzero(&self, x: Atom) -> bool {
        self.w[x] != C64::new(0.0, 0.0)
    }

    /// `|w(x)|^2 mu(x)`, the `mu_w`-mass of the atom.
    pub fn weighted_mass(&self, x: Atom) -> f64 {
        self.w[x].norm_sqr() * self.space.mass(x)
    }

    /// Preimage lists `phi^{-1}({y})` for every atom `y`, in atom order.
    pub fn fibers(&self) -> Vec<Vec<Atom>> {
        let mut fibers = vec![Vec::new(); self.len()];
        for (x, &y) in self.phi.iter().enumerate() {
            fibers[y].push(x);
        }
        fibers
    }

    pub fn is_identity_symbol(&self) -> bool {
        self.phi.iter().enumerate().all(|(x, &y)| x == y)
    }

    /// Same space and symbol, different weight.
    pub fn with_weights(&self, w: Vec<C64>) -> Result<Self> {
        Self::new(self.space.clone(), self.phi.clone(), w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    MuW,
    MuSupW,
    Pushforward,
    Custom,
}

/// A measure on the atoms of a space; zero masses are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedMeasure {
    pub mass: Vec<f64>,
    pub kind: MeasureKind,
}

impl DerivedMeasure {
    pub fn custom(mass: Vec<f64>) -> Result<Self> {
        if let Some(m) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(WcoError::InvalidMeasure(format!(
                "mass {m} is not a finite nonnegative number"
            )));
        }
        Ok(Self {
            mass,
            kind: MeasureKind::Custom,
        })
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// `mu_w(x) = |w(x)|^2 mu(x)`.
pub fn make_mu_w(inst: &SystemInstance) -> DerivedMeasure {
    DerivedMeasure {
        mass: inst.space().atoms().map(|x| inst.weighted_mass(x)).collect(),
        kind: MeasureKind::MuW,
    }
}

/// `mu^w(x) = mu(x)` on `{w != 0}`, zero elsewhere.
pub fn make_mu_sup_w(inst: &SystemInstance) -> DerivedMeasure {
    DerivedMeasure {
        mass: inst
            .space()
            .atoms()
            .map(|x| {
                if inst.w_nonzero(x) {
                    inst.space().mass(x)
                } else {
                    0.0
                }
            })
            .collect(),
        kind: MeasureKind::MuSupW,
    }
}

/// `(m o phi^{-1})(y) = sum of m(x) over phi(x) = y`.
pub fn pushforward(m: &DerivedMeasure, phi: &[Atom]) -> Result<DerivedMeasure> {
    check_len(m.mass.len(), phi.len())?;
    let mut mass = vec![0.0; phi.len()];
    for (x, &y) in phi.iter().enumerate() {
        if y >= mass.len() {
            return Err(WcoError::InvalidInstance(format!(
                "map sends #{x} outside the space"
            )));
        }
        mass[y] += m.mass[x];
    }
    Ok(DerivedMeasure {
        mass,
        kind: MeasureKind::Pushforward,
    })
}

/// `num << den`: every `den`-null atom is `num`-null.
pub fn is_absolutely_continuous(num: &DerivedMeasure, den: &DerivedMeasure) -> Result<bool> {
    check_len(den.mass.len(), num.mass.len())?;
    Ok(num
        .mass
        .iter()
        .zip(&den.mass)
        .all(|(&n, &d)| d != 0.0 || n == 0.0))
}

/// The base measure `mu` viewed as a derived measure.
pub fn base_measure(space: &MeasureSpace) -> DerivedMeasure {
    DerivedMeasure {
        mass: space.masses().to_vec(),
        kind: MeasureKind::Custom,
    }
}
