use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::representation::auto_quad_order;
use crate::catalog::{sample_catalog, Params};
use crate::error::{Error, Result};
use crate::grid::{interpolate, Field, Grid};
use crate::operators::{
    riesz_potential, spherical_average, surface_convolution, truncated_potential, TruncationPolicy,
};
use crate::sphere::{KernelSpec, SphereQuadrature, SphereSymbol};

pub const STUDY_CSV_HEADER: &str = "res,h,value,error,order";

/// Configurations with a known value at the origin of a box of half-width 2
/// in ℝ².
pub const ORACLES: [(&str, &str); 5] = [
    ("truncated_potential", "ball_indicator"),
    ("riesz_potential", "ball_indicator"),
    ("spherical_average", "gaussian"),
    ("surface_convolution", "half_space"),
    ("interpolate", "affine"),
];

const HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub res: usize,
    pub h: f64,
    /// Computed value(s) at the probe point.
    pub value: Vec<f64>,
    /// Euclidean distance to the oracle value.
    pub error: f64,
    /// log₂(e_prev / e) / log₂(h_prev / h); absent on the first row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub op: String,
    pub function: String,
    pub exact: Vec<f64>,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// Smallest observed order over successive pairs.
    pub fn min_order(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.order).reduce(f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{STUDY_CSV_HEADER}")?;
        for r in &self.rows {
            let value: Vec<String> = r.value.iter().map(|v| v.to_string()).collect();
            let order = r.order.map(|o| o.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                r.res,
                r.h,
                value.join(";"),
                r.error,
                order
            )?;
        }
        Ok(())
    }
}

fn origin(g: &Grid) -> usize {
    g.nearest(&[0.0, 0.0])
}

/// Returns (computed, exact) for one resolution.
fn evaluate(op: &str, function: &str, res: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    use std::f64::consts::PI;
    let g = Grid::centered(2, res, HALF_WIDTH)?;
    let policy = TruncationPolicy::default();
    let at = |f: &Field| {
        (0..f.m())
            .map(|c| f.value(origin(&g), c))
            .collect::<Vec<_>>()
    };
    match (op, function) {
        ("truncated_potential", "ball_indicator") => {
            // ∫_{1/2 ≤ |z| < 1} |z|^{-1} dz = π
            let f = sample_catalog(function, &Params::new(), &g)?;
            let spec = KernelSpec::potential(SphereSymbol::one(2));
            Ok((at(&truncated_potential(&f, &spec, 0.5, &policy)?), vec![PI]))
        }
        ("riesz_potential", "ball_indicator") => {
            let f = sample_catalog(function, &Params::new(), &g)?;
            Ok((at(&riesz_potential(&f, &policy)?), vec![2.0 * PI]))
        }
        ("spherical_average", "gaussian") => {
            // quadrature refined with the grid so interpolation errors average out
            let f = sample_catalog(function, &Params::new(), &g)?;
            let q = SphereQuadrature::new(2, auto_quad_order(2, 1.0, g.h()))?;
            Ok((at(&spherical_average(&f, 1.0, &q)?), vec![(-1f64).exp()]))
        }
        ("surface_convolution", "half_space") => {
            // -∫_{S¹} χ(u₁ < 0) u dσ = (-2, 0)
            let f = sample_catalog(function, &Params::new(), &g)?;
            let q = SphereQuadrature::new(2, 64)?;
            Ok((
                at(&surface_convolution(&f, &SphereSymbol::one(2), 1.0, &q)?),
                vec![-2.0, 0.0],
            ))
        }
        ("interpolate", "affine") => {
            let f = Field::from_fn(g, |x| 0.75 + 1.5 * x[0] - 0.25 * x[1]);
            let y = [0.3, -0.7];
            Ok((interpolate(&f, &y), vec![0.75 + 1.5 * y[0] - 0.25 * y[1]]))
        }
        _ => Err(Error::NoOracle(format!("{op} on {function}"))),
    }
}

/// Error against the registered oracle at each resolution and the observed
/// order between successive ones.
pub fn refinement_study(op: &str, function: &str, resolutions: &[usize]) -> Result<StudyTable> {
    if !ORACLES.contains(&(op, function)) {
        return Err(Error::NoOracle(format!("{op} on {function}")));
    }
    let mut rows: Vec<StudyRow> = Vec::with_capacity(resolutions.len());
    let mut exact = Vec::new();
    for &res in resolutions {
        let (value, e) = evaluate(op, function, res)?;
        let error = value
            .iter()
            .zip(&e)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let h = 2.0 * HALF_WIDTH / res as f64;
        let order = rows.last().and_then(|prev| {
            if prev.error > 0.0 && error > 0.0 && prev.h != h {
                Some((prev.error / error).log2() / (prev.h / h).log2())
            } else {
                None
            }
        });
        rows.push(StudyRow {
            res,
            h,
            value,
            error,
            order,
        });
        exact = e;
    }
    Ok(StudyTable {
        op: op.to_string(),
        function: function.to_string(),
        exact,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_average_is_second_order() {
        let t = refinement_study("spherical_average", "gaussian", &[32, 64, 128]).unwrap();
        assert!(t.min_order().unwrap() >= 2.0 - 0.1, "{:?}", t.rows);
    }

    #[test]
    fn annulus_at_least_first_order() {
        let t =
            refinement_study("truncated_potential", "ball_indicator", &[32, 64, 128, 256]).unwrap();
        let first = t.rows[0].error;
        let last = t.rows[3].error;
        // the indicator edge makes successive orders noisy; the trend over
        // three halvings must still be at least first order
        assert!((first / last).log2() / 3.0 >= 1.0, "{:?}", t.rows);
    }

    #[test]
    fn affine_interpolation_exact() {
        let t = refinement_study("interpolate", "affine", &[16, 32]).unwrap();
        assert!(t.rows.iter().all(|r| r.error < 1e-14));
    }

    #[test]
    fn unknown_configuration() {
        assert!(matches!(
            refinement_study("riesz_potential", "gaussian", &[16]),
            Err(Error::NoOracle(_))
        ));
    }
}
