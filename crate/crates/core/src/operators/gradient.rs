use crate::error::Result;
use crate::grid::Field;
use crate::operators::fft::{Cutoff, Engine, Sweep};
use crate::operators::ladder::{check_radius, RadiusLadder};
use crate::operators::surface::{spread_surface, surface_coefficients, surface_unchecked};
use crate::operators::truncation::{ConvolutionPath, TruncationPolicy};
use crate::operators::{check_spec, ladder_sweep, running_max};
use crate::sphere::kernel::{grad_analytic, grad_numeric};
use crate::sphere::{Degree, KernelSpec, SphereQuadrature};

/// Visits f ∗ ∇Φ_t (n channels) for every radius. On the FFT path the
/// surface measure is spread onto the kernel table; on the direct path it
/// is evaluated by interpolation.
fn gradient_ladder<V>(
    f: &Field,
    spec: &KernelSpec,
    radii: &[f64],
    policy: &TruncationPolicy,
    quad: &SphereQuadrature,
    mut visit: V,
) -> Result<()>
where
    V: FnMut(usize, &[Vec<f64>]),
{
    policy.validate()?;
    let g = f.grid();
    let (n, m) = (g.n(), f.m());
    let engine = Engine::new(g);
    let analytic = spec.symbol().has_analytic_gradient();
    let kernels = engine.sample(m * n, |d, out| {
        if analytic {
            grad_analytic(spec, d, out)
        } else {
            grad_numeric(spec, d, out)
        }
    });
    let channels: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|j| (0..m).map(|i| (i * n + j, i)).collect())
        .collect();
    let cuts: Vec<Cutoff> = radii.iter().map(|t| Cutoff::At(*t)).collect();
    match policy.path {
        ConvolutionPath::Fft => {
            let coef = surface_coefficients(spec.symbol(), quad);
            let extra = |c: Cutoff, k: usize, out: &mut [f64]| {
                if let Cutoff::At(t) = c {
                    spread_surface(&engine, &coef, &quad.nodes, k, t, out);
                }
            };
            let sw = Sweep {
                kernels: &kernels,
                channels: &channels,
                families: &[],
                extra: Some(&extra),
            };
            ladder_sweep(&engine, f, &sw, &cuts, policy, visit);
        }
        ConvolutionPath::Direct => {
            let sw = Sweep {
                kernels: &kernels,
                channels: &channels,
                families: &[],
                extra: None,
            };
            ladder_sweep(&engine, f, &sw, &cuts, policy, |s, vol| {
                let surf = surface_unchecked(f, spec.symbol(), radii[s], quad);
                let total: Vec<Vec<f64>> = vol
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.iter()
                            .zip(surf.component(j))
                            .map(|(a, b)| a + b)
                            .collect()
                    })
                    .collect();
                visit(s, &total);
            });
        }
    }
    Ok(())
}

/// f ∗ ∇Φ_t = f ∗ (∇K̃·χ_{|y| ≥ t}) + f ∗ μ_t, one component per coordinate.
pub fn grad_truncated_potential(
    f: &Field,
    spec: &KernelSpec,
    t: f64,
    policy: &TruncationPolicy,
    quad: &SphereQuadrature,
) -> Result<Field> {
    check_spec(f, spec, Degree::Potential)?;
    check_radius(t, f.grid())?;
    let mut out = Vec::new();
    gradient_ladder(f, spec, &[t], policy, quad, |_, v| out = v.concat())?;
    Field::from_data(*f.grid(), f.grid().n(), out)
}

/// T*f = max over the ladder of |f ∗ ∇Φ_t|.
pub fn grad_majorant(
    f: &Field,
    spec: &KernelSpec,
    ladder: &RadiusLadder,
    policy: &TruncationPolicy,
    quad: &SphereQuadrature,
) -> Result<Field> {
    check_spec(f, spec, Degree::Potential)?;
    ladder.check_grid(f.grid())?;
    let len = f.grid().len();
    let mut acc = vec![0.0; len];
    gradient_ladder(f, spec, ladder.radii(), policy, quad, |_, v| {
        running_max(
            &mut acc,
            (0..len).map(|i| v.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()),
        )
    })?;
    Field::from_data(*f.grid(), 1, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{sample_catalog, Params};
    use crate::grid::{fd_gradient, Grid};
    use crate::operators::potential::truncated_potential;
    use crate::sphere::SphereSymbol;

    fn quad(n: usize) -> SphereQuadrature {
        SphereQuadrature::new(n, 64).unwrap()
    }

    #[test]
    fn matches_gradient_of_truncated_potential() {
        let p = TruncationPolicy::default();
        let spec = KernelSpec::potential(SphereSymbol::coordinate(2, 0).unwrap());
        let mut errs = Vec::new();
        for res in [32, 64] {
            let g = Grid::centered(2, res, 2.0).unwrap();
            let f = sample_catalog("gaussian", &Params::new().with("sigma", 0.5), &g).unwrap();
            let t = 0.5;
            let a = grad_truncated_potential(&f, &spec, t, &p, &quad(2)).unwrap();
            let fd = fd_gradient(&truncated_potential(&f, &spec, t, &p).unwrap()).unwrap();
            let scale = fd.max_magnitude();
            let mut err: f64 = 0.0;
            for i in 0..g.len() {
                if g.is_interior(g.unravel(i), 2) {
                    for j in 0..2 {
                        err = err.max((a.value(i, j) - fd.value(i, j)).abs());
                    }
                }
            }
            errs.push(err / scale);
        }
        assert!(errs[0] < 0.05, "{errs:?}");
        assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
    }

    #[test]
    fn constant_plateau_makes_the_radius_irrelevant() {
        // f ≡ 1 on B(x, 2t): the shell between t and 2t contributes exactly
        // the difference of the two surface terms
        let g = Grid::centered(2, 128, 2.0).unwrap();
        let bump = Params::new().with("radius", 1.8).with("plateau", 1.0);
        let f = sample_catalog("smooth_bump", &bump, &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::coordinate(2, 0).unwrap());
        let p = TruncationPolicy::default();
        let x = g.nearest(&[0.25, 0.125]);
        let t = 0.3;
        let mut totals = Vec::new();
        let mut size: f64 = 0.0;
        for r in [t, 2.0 * t] {
            let total = grad_truncated_potential(&f, &spec, r, &p, &quad(2)).unwrap();
            let surf =
                crate::operators::surface_convolution(&f, spec.symbol(), r, &quad(2)).unwrap();
            let vol =
                (total.value(x, 0) - surf.value(x, 0)).hypot(total.value(x, 1) - surf.value(x, 1));
            size = size.max(vol).max(surf.magnitude_at(x));
            totals.push([total.value(x, 0), total.value(x, 1)]);
        }
        let diff = (totals[0][0] - totals[1][0]).hypot(totals[0][1] - totals[1][1]);
        assert!(size > 0.1);
        assert!(diff < 1e-2 * size, "{diff} vs {size}");
    }

    #[test]
    fn radial_plateau_centre_has_small_majorant() {
        let g = Grid::centered(2, 64, 2.0).unwrap();
        let bump = Params::new().with("radius", 1.8).with("plateau", 1.0);
        let f = sample_catalog("smooth_bump", &bump, &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        let p = TruncationPolicy::default();
        let ladder = RadiusLadder::new(g.h(), 0.5, 2f64.sqrt()).unwrap();
        let maj = grad_majorant(&f, &spec, &ladder, &p, &quad(2)).unwrap();
        let x = g.nearest(&[0.0, 0.0]);
        assert!(maj.data()[x] < 1e-2 * maj.max_magnitude());
    }

    #[test]
    fn fft_and_direct_paths_agree() {
        let g = Grid::centered(2, 23, 2.0).unwrap();
        let f = sample_catalog("smooth_bump", &Params::new().with("radius", 0.8), &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::identity(2));
        let v = Field::from_components(g, vec![f.data().to_vec(), f.scaled(-0.5).data().to_vec()])
            .unwrap();
        let p = TruncationPolicy::default();
        let a = grad_truncated_potential(&v, &spec, 0.3, &p, &quad(2)).unwrap();
        let b = grad_truncated_potential(
            &v,
            &spec,
            0.3,
            &p.with_path(ConvolutionPath::Direct),
            &quad(2),
        )
        .unwrap();
        let scale = b.max_magnitude();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn majorant_dominates_and_scales() {
        let g = Grid::centered(2, 32, 2.0).unwrap();
        let f = sample_catalog("random_bandlimited", &Params::new().with("seed", 2.0), &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::quadratic(2));
        let p = TruncationPolicy::default();
        let ladder = RadiusLadder::new(g.h(), 2.0, 2.0).unwrap();
        let t = grad_majorant(&f, &spec, &ladder, &p, &quad(2)).unwrap();
        for &r in ladder.radii() {
            let gr = grad_truncated_potential(&f, &spec, r, &p, &quad(2)).unwrap();
            assert!((0..g.len()).all(|i| t.data()[i] >= gr.magnitude_at(i) * (1.0 - 1e-14)));
        }
        let t2 = grad_majorant(&f.scaled(-2.0), &spec, &ladder, &p, &quad(2)).unwrap();
        let scale = t.max_magnitude();
        assert!(t2
            .data()
            .iter()
            .zip(t.data())
            .all(|(a, b)| (a - 2.0 * b).abs() < 1e-12 * scale));
    }
}
