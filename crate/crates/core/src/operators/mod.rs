//! Convolution operators: truncated and maximal potentials, the Riesz
//! potential, truncated and maximal singular integrals, the surface term,
//! the gradient decomposition, its majorant and spherical averages.

pub(crate) mod fft;
pub mod gradient;
pub mod ladder;
pub mod potential;
pub mod singular;
pub mod spherical;
pub mod surface;
pub mod truncation;

pub use fft::next_smooth;
pub use gradient::{grad_majorant, grad_truncated_potential};
pub use ladder::RadiusLadder;
pub use potential::{
    maximal_potential, maximal_potential_batch, riesz_potential, truncated_potential,
};
pub use singular::{maximal_singular, truncated_singular};
pub use spherical::{spherical_average, spherical_maximal, spherical_via_gradient};
pub use surface::surface_convolution;
pub use truncation::{ConvolutionPath, TruncationMode, TruncationPolicy};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::sphere::{Degree, KernelSpec};

use fft::{Cutoff, Engine, Sweep};

pub(crate) fn check_spec(f: &Field, spec: &KernelSpec, degree: Degree) -> Result<()> {
    if spec.degree() != degree {
        return Err(crate::error::invalid(
            "spec",
            format!("operator needs a {degree:?} kernel"),
        ));
    }
    if spec.n() != f.grid().n() {
        return Err(Error::DimensionMismatch(format!(
            "kernel in ℝ^{} applied to a field on ℝ^{}",
            spec.n(),
            f.grid().n()
        )));
    }
    if spec.m() != f.m() {
        return Err(Error::DimensionMismatch(format!(
            "symbol has {} components, field has {}",
            spec.m(),
            f.m()
        )));
    }
    Ok(())
}

/// Distance from the origin of every node.
fn node_radii(g: &Grid) -> Vec<f64> {
    (0..g.len())
        .map(|i| {
            let x = g.coords(i);
            (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
        })
        .collect()
}

/// Runs a sweep, using `f.support_hint` to skip steps and nodes whose
/// truncated kernel cannot reach the support. Skipped outputs are exact
/// zeros. Steps may be visited out of order.
pub(crate) fn ladder_sweep<V>(
    engine: &Engine,
    f: &Field,
    sw: &Sweep,
    cutoffs: &[Cutoff],
    policy: &TruncationPolicy,
    mut visit: V,
) where
    V: FnMut(usize, &[Vec<f64>]),
{
    let g = f.grid();
    let margin = g.h() * (g.n() as f64).sqrt();
    let corner = 0.5 * g.diameter();
    let reach = |c: &Cutoff| match (c, f.support_hint) {
        (Cutoff::At(t), Some(r)) => Some(t - r - margin),
        _ => None,
    };
    let comps: Vec<&[f64]> = f.components().collect();
    let (live, dead): (Vec<usize>, Vec<usize>) =
        (0..cutoffs.len()).partition(|&i| reach(&cutoffs[i]).is_none_or(|d| d <= corner));
    let live_cuts: Vec<Cutoff> = live.iter().map(|&i| cutoffs[i]).collect();
    let radii = if f.support_hint.is_some() {
        node_radii(g)
    } else {
        Vec::new()
    };
    engine.sweep(&comps, sw, &live_cuts, policy, |s, out| {
        let step = live[s];
        match reach(&cutoffs[step]) {
            Some(d) if d > 0.0 => {
                let masked: Vec<Vec<f64>> = out
                    .iter()
                    .map(|o| {
                        o.iter()
                            .zip(&radii)
                            .map(|(v, r)| if *r < d { 0.0 } else { *v })
                            .collect()
                    })
                    .collect();
                visit(step, &masked);
            }
            _ => visit(step, out),
        }
    });
    if !dead.is_empty() {
        let zeros = vec![vec![0.0; g.len()]; sw.channels.len()];
        for step in dead {
            visit(step, &zeros);
        }
    }
}

/// Channels Σ_i f_i ∗ K_i for a kernel with one component per field component.
pub(crate) fn dot_channel(m: usize) -> Vec<Vec<(usize, usize)>> {
    vec![(0..m).map(|i| (i, i)).collect()]
}

pub(crate) fn running_max(acc: &mut [f64], values: impl Iterator<Item = f64>) {
    for (a, v) in acc.iter_mut().zip(values) {
        if v > *a {
            *a = v;
        }
    }
}

pub(crate) fn scalar_field(g: Grid, data: Vec<f64>) -> Result<Field> {
    Field::from_data(g, 1, data)
}
