use crate::error::Result;
use crate::grid::Field;
use crate::operators::ladder::{check_radius, RadiusLadder};
use crate::operators::potential::potential_ladder;
use crate::operators::truncation::TruncationPolicy;
use crate::operators::{check_spec, running_max, scalar_field};
use crate::sphere::{Degree, KernelSpec};

/// ∫_{|x-z| ≥ t} f(z)·K(x - z) dz with K of degree -n.
pub fn truncated_singular(
    f: &Field,
    spec: &KernelSpec,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Field> {
    check_spec(f, spec, Degree::Singular)?;
    check_radius(t, f.grid())?;
    let mut out = Vec::new();
    potential_ladder(f, spec, &[t], policy, |_, v| out = v[0].clone())?;
    scalar_field(*f.grid(), out)
}

/// max over the ladder of |truncated_singular|.
pub fn maximal_singular(
    f: &Field,
    spec: &KernelSpec,
    ladder: &RadiusLadder,
    policy: &TruncationPolicy,
) -> Result<Field> {
    check_spec(f, spec, Degree::Singular)?;
    ladder.check_grid(f.grid())?;
    let mut acc = vec![0.0; f.grid().len()];
    potential_ladder(f, spec, ladder.radii(), policy, |_, v| {
        running_max(&mut acc, v[0].iter().map(|x| x.abs()))
    })?;
    scalar_field(*f.grid(), acc)
}
