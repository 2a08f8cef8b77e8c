use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Default ladder ratio 2^{1/4}.
pub const DEFAULT_RATIO: f64 = 1.189_207_115_002_721;

/// Finite geometric set of truncation radii standing in for sup over t > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusLadder {
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
    radii: Vec<f64>,
}

impl RadiusLadder {
    /// Radii t_min·ρ^k for every k with t_min·ρ^k ≤ t_max.
    pub fn new(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_min.is_finite()) {
            return Err(invalid(
                "t_min",
                format!("{t_min} is not a positive length"),
            ));
        }
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(invalid("ratio", format!("{ratio} is not above 1")));
        }
        if !(t_max >= t_min) {
            return Err(Error::EmptyLadder);
        }
        let mut radii = Vec::new();
        let mut k = 0;
        loop {
            let t = t_min * ratio.powi(k);
            if t > t_max * (1.0 + 1e-12) {
                break;
            }
            radii.push(t);
            k += 1;
        }
        Ok(Self {
            t_min,
            t_max,
            ratio,
            radii,
        })
    }

    /// t_min = h, t_max = box diameter, ρ = 2^{1/4}.
    pub fn for_grid(grid: &Grid) -> Self {
        Self::new(grid.h(), grid.diameter(), DEFAULT_RATIO).expect("grid ladder is valid")
    }

    /// Ladder from an explicit list; sorted and deduplicated.
    pub fn from_radii(mut radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::EmptyLadder);
        }
        if let Some(bad) = radii.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(invalid("radii", format!("{bad} is not a positive length")));
        }
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let ratio = if radii.len() > 1 {
            radii
                .windows(2)
                .map(|w| w[1] / w[0])
                .fold(f64::INFINITY, f64::min)
        } else {
            f64::INFINITY
        };
        Ok(Self {
            t_min: radii[0],
            t_max: *radii.last().unwrap(),
            ratio,
            radii,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Union of two ladders.
    pub fn merged(&self, other: &Self) -> Self {
        let mut r = self.radii.clone();
        r.extend_from_slice(&other.radii);
        Self::from_radii(r).expect("union of nonempty ladders")
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        check_radius(self.t_min, grid)
    }
}

pub(crate) fn check_radius(t: f64, grid: &Grid) -> Result<()> {
    if !(t.is_finite() && t >= grid.h() * (1.0 - 1e-12)) {
        return Err(Error::RadiusBelowSpacing { t, h: grid.h() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_radii() {
        let l = RadiusLadder::new(0.5, 4.0, 2.0).unwrap();
        assert_eq!(l.radii(), &[0.5, 1.0, 2.0, 4.0]);
        let d = RadiusLadder::new(1.0, 2.0, DEFAULT_RATIO).unwrap();
        assert_eq!(d.len(), 5);
        assert!(d.radii().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn invalid_ladders() {
        assert!(matches!(
            RadiusLadder::new(1.0, 0.5, 2.0),
            Err(Error::EmptyLadder)
        ));
        assert!(RadiusLadder::new(1.0, 2.0, 1.0).is_err());
        assert!(RadiusLadder::new(0.0, 2.0, 1.5).is_err());
        assert!(matches!(
            RadiusLadder::from_radii(vec![]),
            Err(Error::EmptyLadder)
        ));
    }

    #[test]
    fn grid_ladder_starts_at_spacing() {
        let g = Grid::centered(2, 32, 2.0).unwrap();
        let l = RadiusLadder::for_grid(&g);
        assert_eq!(l.radii()[0], g.h());
        assert!(l.radii().last().unwrap() <= &(g.diameter() * (1.0 + 1e-12)));
        assert!(l.check_grid(&g).is_ok());
        let short = RadiusLadder::new(0.5 * g.h(), 1.0, 2.0).unwrap();
        assert!(matches!(
            short.check_grid(&g),
            Err(Error::RadiusBelowSpacing { .. })
        ));
    }

    #[test]
    fn explicit_radii_are_sorted() {
        let l = RadiusLadder::from_radii(vec![2.0, 0.5, 1.0, 1.0]).unwrap();
        assert_eq!(l.radii(), &[0.5, 1.0, 2.0]);
        assert_eq!(l.ratio, 2.0);
        let m = l.merged(&RadiusLadder::from_radii(vec![0.75]).unwrap());
        assert_eq!(m.len(), 4);
    }
}
