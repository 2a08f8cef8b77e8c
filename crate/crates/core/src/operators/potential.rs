use crate::error::Result;
use crate::grid::{sphere_area, unit_ball_volume, zero_extended_gradient_parts, Field};
use crate::operators::fft::{Cutoff, Engine, Sweep};
use crate::operators::ladder::{check_radius, RadiusLadder};
use crate::operators::truncation::{TruncationPolicy, WeightFamily};
use crate::operators::{check_spec, dot_channel, ladder_sweep, running_max, scalar_field};
use crate::sphere::{Degree, KernelSpec, SphereSymbol};

pub(crate) fn kernel_table(engine: &Engine, spec: &KernelSpec) -> Vec<Vec<f64>> {
    engine.sample(spec.m(), |d, out| spec.eval_into(d, out))
}

/// Signed values (f ∗ Φ_t)(x) for every ladder radius, passed to `visit`.
pub(crate) fn potential_ladder<V>(
    f: &Field,
    spec: &KernelSpec,
    radii: &[f64],
    policy: &TruncationPolicy,
    visit: V,
) -> Result<()>
where
    V: FnMut(usize, &[Vec<f64>]),
{
    policy.validate()?;
    let engine = Engine::new(f.grid());
    let kernels = kernel_table(&engine, spec);
    let channels = dot_channel(spec.m());
    let sw = Sweep {
        kernels: &kernels,
        channels: &channels,
        families: &[],
        extra: None,
    };
    let cuts: Vec<Cutoff> = radii.iter().map(|t| Cutoff::At(*t)).collect();
    ladder_sweep(&engine, f, &sw, &cuts, policy, visit);
    Ok(())
}

/// Signed (1/nω_n)·(∇f ∗ Φ_t) with Ω(z) = z and ∇f the gradient of the
/// zero-extended field. The face jump is a density on the boundary faces, so
/// its truncation weights are taken over face cells.
pub(crate) fn gradient_form_ladder<V>(
    f: &Field,
    radii: &[f64],
    policy: &TruncationPolicy,
    mut visit: V,
) -> Result<()>
where
    V: FnMut(usize, &[f64]),
{
    f.require_scalar("gradient form")?;
    policy.validate()?;
    let g = *f.grid();
    let n = g.n();
    let (volume, jump) = zero_extended_gradient_parts(f)?;
    let mut data = volume.data().to_vec();
    data.extend_from_slice(jump.data());
    let mut both = Field::from_data(g, 2 * n, data)?;
    both.support_hint = f.support_hint;
    let engine = Engine::new(&g);
    let spec = KernelSpec::potential(SphereSymbol::identity(n));
    let mut kernels = kernel_table(&engine, &spec);
    kernels.extend(kernels.clone());
    let families: Vec<WeightFamily> = (0..n)
        .map(|_| WeightFamily::Volume)
        .chain((0..n).map(WeightFamily::Face))
        .collect();
    let channels = vec![(0..2 * n).map(|k| (k, k)).collect::<Vec<_>>()];
    let sw = Sweep {
        kernels: &kernels,
        channels: &channels,
        families: &families,
        extra: None,
    };
    let cuts: Vec<Cutoff> = radii.iter().map(|t| Cutoff::At(*t)).collect();
    let scale = 1.0 / sphere_area(n);
    ladder_sweep(&engine, &both, &sw, &cuts, policy, |k, v| {
        let out: Vec<f64> = v[0].iter().map(|x| x * scale).collect();
        visit(k, &out)
    });
    Ok(())
}

/// (f ∗ Φ_t)(x) = ∫_{|x-z| ≥ t} f(z)·K̃(x - z) dz at every node.
pub fn truncated_potential(
    f: &Field,
    spec: &KernelSpec,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Field> {
    check_spec(f, spec, Degree::Potential)?;
    check_radius(t, f.grid())?;
    let mut out = Vec::new();
    potential_ladder(f, spec, &[t], policy, |_, v| out = v[0].clone())?;
    scalar_field(*f.grid(), out)
}

/// max over the ladder of |f ∗ Φ_t|.
pub fn maximal_potential(
    f: &Field,
    spec: &KernelSpec,
    ladder: &RadiusLadder,
    policy: &TruncationPolicy,
) -> Result<Field> {
    check_spec(f, spec, Degree::Potential)?;
    ladder.check_grid(f.grid())?;
    let mut acc = vec![0.0; f.grid().len()];
    potential_ladder(f, spec, ladder.radii(), policy, |_, v| {
        running_max(&mut acc, v[0].iter().map(|x| x.abs()))
    })?;
    scalar_field(*f.grid(), acc)
}

/// `maximal_potential` of several fields on one grid, sharing the kernel
/// table and its spectra across members.
pub fn maximal_potential_batch(
    fields: &[Field],
    spec: &KernelSpec,
    ladder: &RadiusLadder,
    policy: &TruncationPolicy,
) -> Result<Vec<Field>> {
    let Some(first) = fields.first() else {
        return Ok(Vec::new());
    };
    let g = *first.grid();
    for f in fields {
        check_spec(f, spec, Degree::Potential)?;
        if *f.grid() != g {
            return Err(crate::error::Error::DimensionMismatch(
                "batch members on different grids".into(),
            ));
        }
    }
    ladder.check_grid(&g)?;
    policy.validate()?;
    let m = spec.m();
    let mut data = Vec::with_capacity(fields.len() * m * g.len());
    for f in fields {
        data.extend_from_slice(f.data());
    }
    let mut all = Field::from_data(g, fields.len() * m, data)?;
    all.support_hint = fields
        .iter()
        .map(|f| f.support_hint)
        .try_fold(0.0_f64, |a, r| r.map(|r| a.max(r)));
    let engine = Engine::new(&g);
    let kernels = kernel_table(&engine, spec);
    let channels: Vec<Vec<(usize, usize)>> = (0..fields.len())
        .map(|k| (0..m).map(|i| (i, k * m + i)).collect())
        .collect();
    let sw = Sweep {
        kernels: &kernels,
        channels: &channels,
        families: &[],
        extra: None,
    };
    let cuts: Vec<Cutoff> = ladder.radii().iter().map(|t| Cutoff::At(*t)).collect();
    let mut acc = vec![vec![0.0; g.len()]; fields.len()];
    ladder_sweep(&engine, &all, &sw, &cuts, policy, |_, v| {
        for (a, out) in acc.iter_mut().zip(v) {
            running_max(a, out.iter().map(|x| x.abs()));
        }
    });
    acc.into_iter().map(|a| scalar_field(g, a)).collect()
}

/// Value of the singular cell: nω_n·r_h with r_h the radius of the ball
/// whose volume is h^n.
pub fn riesz_cell_weight(n: usize, h: f64) -> f64 {
    let r = (h.powi(n as i32) / unit_ball_volume(n)).powf(1.0 / n as f64);
    sphere_area(n) * r
}

/// I₁g(x) = ∫ g(z)|x - z|^{1-n} dz with the equivalent-ball rule at z = x.
pub fn riesz_potential(g: &Field, policy: &TruncationPolicy) -> Result<Field> {
    g.require_scalar("riesz_potential")?;
    let grid = g.grid();
    let n = grid.n();
    let engine = Engine::new(grid);
    let e = 1 - n as i32;
    let mut kernels = engine.sample(1, |d, out| {
        out[0] = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().powi(e)
    });
    kernels[0][0] = riesz_cell_weight(n, grid.h());
    let channels = dot_channel(1);
    let sw = Sweep {
        kernels: &kernels,
        channels: &channels,
        families: &[],
        extra: None,
    };
    let mut out = Vec::new();
    ladder_sweep(&engine, g, &sw, &[Cutoff::Untruncated], policy, |_, v| {
        out = v[0].clone()
    });
    scalar_field(*grid, out)
}
