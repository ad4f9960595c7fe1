//! Finitely atomic probability measures on `[0, inf)` and families of them
//! indexed by the atoms of a space.

use crate::error::{Result, WcoError};
use crate::space::{Atom, MeasureSpace};
use crate::tolerance::Tolerances;

/// Largest allowed deviation of the total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability measure `sum p_i delta_{t_i}` with strictly increasing
/// locations `t_i >= 0` and masses `p_i > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMeasure {
    atoms: Vec<(f64, f64)>,
}

impl PointMeasure {
    /// Validates, drops zero masses, sorts and merges locations that agree to
    /// within `tol.merge`.
    pub fn new(raw: impl IntoIterator<Item = (f64, f64)>, tol: &Tolerances) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (t, p) in raw {
            if !(t.is_finite() && t >= 0.0) {
                return Err(WcoError::InvalidMeasure(format!(
                    "location {t} is not a finite nonnegative number"
                )));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(WcoError::InvalidMeasure(format!(
                    "mass {p} at t={t} is not a finite nonnegative number"
                )));
            }
            if p > 0.0 {
                atoms.push((t, p));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (t, p) in atoms {
            match merged.last_mut() {
                Some(last) if tol.same_location(last.0, t) => last.1 += p,
                _ => merged.push((t, p)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(WcoError::InvalidMeasure(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(Self { atoms: merged })
    }

    pub fn dirac(t: f64) -> Result<Self> {
        Self::new([(t, 1.0)], &Tolerances::default())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `P({t})`, matching locations with `tol.merge`.
    pub fn mass_at(&self, t: f64, tol: &Tolerances) -> f64 {
        self.atoms
            .iter()
            .filter(|(s, _)| tol.same_location(*s, t))
            .map(|(_, p)| p)
            .sum()
    }

    /// `int t^k dP(t)`, with `0^0 = 1`.
    pub fn moment(&self, k: u32) -> f64 {
        self.atoms.iter().map(|&(t, p)| p * t.powi(k as i32)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// `x -> P(x, .)`, one probability measure per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityFamily {
    measures: Vec<PointMeasure>,
}

impl ProbabilityFamily {
    pub fn new(space: &MeasureSpace, measures: Vec<PointMeasure>) -> Result<Self> {
        if measures.len() != space.len() {
            return Err(WcoError::SpaceMismatch {
                expected: space.len(),
                got: measures.len(),
            });
        }
        Ok(Self { measures })
    }

    /// `P(x, .) = delta_{values[x]}`.
    pub fn dirac(space: &MeasureSpace, values: &[f64]) -> Result<Self> {
        let measures = values
            .iter()
            .map(|&t| PointMeasure::dirac(t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, measures)
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn get(&self, x: Atom) -> &PointMeasure {
        &self.measures[x]
    }

    pub fn measures(&self) -> &[PointMeasure] {
        &self.measures
    }

    /// Union of all locations, merged with `tol.merge` and sorted.
    pub fn locations(&self, tol: &Tolerances) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .measures
            .iter()
            .flat_map(|m| m.atoms.iter().map(|a| a.0))
            .collect();
        all.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(all.len());
        for t in all {
            if !out.last().is_some_and(|&s| tol.same_location(s, t)) {
                out.push(t);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_sorts() {
        let tol = Tolerances::default();
        let m = PointMeasure::new([(3.0, 0.25), (1.0, 0.5), (3.0 + 1e-14, 0.25)], &tol).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert_eq!(m.atoms()[0], (1.0, 0.5));
        assert!((m.atoms()[1].1 - 0.5).abs() < 1e-15);
        assert!((m.mass_at(3.0, &tol) - 0.5).abs() < 1e-15);
        assert_eq!(m.mass_at(2.0, &tol), 0.0);
    }

    #[test]
    fn drops_zero_masses() {
        let m = PointMeasure::new([(2.0, 0.0), (5.0, 1.0)], &Tolerances::default()).unwrap();
        assert_eq!(m.atoms(), &[(5.0, 1.0)]);
    }

    #[test]
    fn rejects_invalid() {
        let tol = Tolerances::default();
        assert!(PointMeasure::new([(1.0, 0.9)], &tol).is_err());
        assert!(PointMeasure::new([(-1.0, 1.0)], &tol).is_err());
        assert!(PointMeasure::new([(1.0, -0.5), (2.0, 1.5)], &tol).is_err());
        assert!(PointMeasure::new([(f64::NAN, 1.0)], &tol).is_err());
    }

    #[test]
    fn moments() {
        let m = PointMeasure::new([(0.0, 0.5), (3.0, 0.5)], &Tolerances::default()).unwrap();
        assert_eq!(m.moment(0), 1.0);
        assert_eq!(m.mean(), 1.5);
        assert_eq!(m.moment(2), 4.5);
    }

    #[test]
    fn family_locations_are_merged() {
        let space = MeasureSpace::counting(3).unwrap();
        let fam = ProbabilityFamily::dirac(&space, &[2.0, 2.0 * (1.0 + 1e-15), 0.0]).unwrap();
        assert_eq!(fam.locations(&Tolerances::default()), vec![0.0, 2.0]);
        assert!(ProbabilityFamily::dirac(&space, &[1.0]).is_err());
    }
}
