use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{interpolate_component, sphere_area, Field};
use crate::operators::ladder::{check_radius, RadiusLadder};
use crate::operators::potential::gradient_form_ladder;
use crate::operators::running_max;
use crate::operators::truncation::TruncationPolicy;
use crate::sphere::SphereQuadrature;

fn check_quad(f: &Field, quad: &SphereQuadrature) -> Result<()> {
    if quad.n != f.grid().n() {
        return Err(Error::DimensionMismatch(format!(
            "quadrature on S^{} for a field on ℝ^{}",
            quad.n - 1,
            f.grid().n()
        )));
    }
    Ok(())
}

fn average_unchecked(samples: &[f64], f: &Field, t: f64, quad: &SphereQuadrature) -> Vec<f64> {
    let g = *f.grid();
    let n = g.n();
    let norm = 1.0 / sphere_area(n);
    (0..g.len())
        .into_par_iter()
        .map(|node| {
            let x = g.coords(node);
            let mut acc = 0.0;
            for (u, w) in quad.nodes.iter().zip(&quad.weights) {
                let y = [x[0] + t * u[0], x[1] + t * u[1], x[2] + t * u[2]];
                acc += w * interpolate_component(&g, samples, &y[..n]);
            }
            acc * norm
        })
        .collect()
}

/// Mean of f over the sphere S(x, t) at every node.
pub fn spherical_average(f: &Field, t: f64, quad: &SphereQuadrature) -> Result<Field> {
    f.require_scalar("spherical_average")?;
    check_quad(f, quad)?;
    check_radius(t, f.grid())?;
    Field::from_data(*f.grid(), 1, average_unchecked(f.data(), f, t, quad))
}

/// With `use_abs`, max over the ladder of the mean of |f|; otherwise max of
/// |mean of f|.
pub fn spherical_maximal(
    f: &Field,
    ladder: &RadiusLadder,
    quad: &SphereQuadrature,
    use_abs: bool,
) -> Result<Field> {
    f.require_scalar("spherical_maximal")?;
    check_quad(f, quad)?;
    ladder.check_grid(f.grid())?;
    let samples: Vec<f64> = if use_abs {
        f.data().iter().map(|v| v.abs()).collect()
    } else {
        f.data().to_vec()
    };
    let mut acc = vec![0.0; f.grid().len()];
    for &t in ladder.radii() {
        let avg = average_unchecked(&samples, f, t, quad);
        for (a, v) in acc.iter_mut().zip(avg) {
            *a = f64::max(*a, v.abs());
        }
    }
    Field::from_data(*f.grid(), 1, acc)
}

/// (1/nω_n)·A*_Ω(∇f) with Ω(z) = z. The gradient is that of the
/// zero-extended field, so the jump at the box faces is included.
pub fn spherical_via_gradient(
    f: &Field,
    ladder: &RadiusLadder,
    policy: &TruncationPolicy,
) -> Result<Field> {
    f.require_scalar("spherical_via_gradient")?;
    ladder.check_grid(f.grid())?;
    let mut acc = vec![0.0; f.grid().len()];
    gradient_form_ladder(f, ladder.radii(), policy, |_, v| {
        running_max(&mut acc, v.iter().map(|x| x.abs()))
    })?;
    Field::from_data(*f.grid(), 1, acc)
}
