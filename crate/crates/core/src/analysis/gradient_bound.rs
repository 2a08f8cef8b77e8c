use crate::analysis::report::{interior_mask, CheckReport, LadderMeta};
use crate::analysis::representation::{auto_quad_order, require_smooth};
use crate::error::Result;
use crate::grid::{fd_gradient, Field};
use crate::operators::{
    check_spec, grad_majorant, maximal_potential, RadiusLadder, TruncationPolicy,
};
use crate::sphere::{Degree, KernelSpec, SphereQuadrature};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBoundSettings {
    pub rel_tol: f64,
    /// Absolute slack, as a multiple of max T*f.
    pub abs_tol: f64,
    /// Allowed fraction of interior nodes in violation.
    pub max_violation_fraction: f64,
    /// Sphere quadrature order for the surface term; `None` scales it with
    /// the largest radius.
    pub quad_order: Option<usize>,
    pub policy: TruncationPolicy,
    pub layers: usize,
    /// Also check |A*f(x) - A*f(y)| ≤ ∫ T*f along axis segments of this many
    /// cells.
    pub segment_steps: Option<usize>,
    pub segment_tol: f64,
}

impl Default for GradientBoundSettings {
    fn default() -> Self {
        Self {
            rel_tol: 0.05,
            abs_tol: 1e-6,
            max_violation_fraction: 0.01,
            quad_order: None,
            policy: TruncationPolicy::default(),
            layers: 1,
            segment_steps: None,
            segment_tol: 0.05,
        }
    }
}

impl GradientBoundSettings {
    pub fn extended(steps: usize) -> Self {
        Self {
            segment_steps: Some(steps),
            ..Self::default()
        }
    }
}

/// Checks |∇A*_Ωf| ≤ (1 + rel_tol)·T*f + abs_tol·max T*f at interior nodes,
/// with ∇A*f by central differences.
pub fn verify_gradient_bound(
    f: &Field,
    spec: &KernelSpec,
    ladder: &RadiusLadder,
) -> Result<CheckReport> {
    verify_gradient_bound_with(f, spec, ladder, &GradientBoundSettings::default())
}

pub fn verify_gradient_bound_with(
    f: &Field,
    spec: &KernelSpec,
    ladder: &RadiusLadder,
    s: &GradientBoundSettings,
) -> Result<CheckReport> {
    check_spec(f, spec, Degree::Potential)?;
    require_smooth(f)?;
    let g = *f.grid();
    let n = g.n();
    let order = s
        .quad_order
        .unwrap_or_else(|| auto_quad_order(n, ladder.t_max, g.h()));
    let quad = SphereQuadrature::new(n, order)?;
    let a = maximal_potential(f, spec, ladder, &s.policy)?;
    let grad_a = fd_gradient(&a)?;
    let t = grad_majorant(f, spec, ladder, &s.policy, &quad)?;
    let scale = t.max_magnitude();
    let abs = s.abs_tol * scale;
    let mask = interior_mask(&g, s.layers);

    let mut report = CheckReport::new("gradient_bound", &g)
        .tolerance("rel_tol", s.rel_tol)
        .tolerance("abs_tol", s.abs_tol)
        .tolerance("max_violation_fraction", s.max_violation_fraction);
    report.ladder = Some(LadderMeta::of(ladder));
    let (mut count, mut bad) = (0usize, 0usize);
    let (mut worst, mut sum) = (0.0_f64, 0.0);
    for (node, inside) in mask.iter().enumerate() {
        if !inside {
            continue;
        }
        count += 1;
        let lhs = grad_a.magnitude_at(node);
        let rhs = t.data()[node];
        if lhs > (1.0 + s.rel_tol) * rhs + abs {
            bad += 1;
        }
        let excess = (lhs - rhs).max(0.0) / scale.max(f64::MIN_POSITIVE);
        worst = worst.max(excess);
        sum += excess;
    }
    report.violation_fraction = if count == 0 {
        0.0
    } else {
        bad as f64 / count as f64
    };
    report.max_residual = worst;
    report.mean_residual = if count == 0 { 0.0 } else { sum / count as f64 };
    report.push("scale", scale);
    report.push("max_grad", grad_a.max_magnitude());
    report.push("interior_nodes", count as f64);
    let mut pass = report.violation_fraction < s.max_violation_fraction;

    if let Some(steps) = s.segment_steps {
        report = report.tolerance("segment_tol", s.segment_tol);
        let (checked, failed, ratio) = segment_check(&a, &t, &mask, steps, s.segment_tol, abs);
        let frac = if checked == 0 {
            0.0
        } else {
            failed as f64 / checked as f64
        };
        report.push("segments", checked as f64);
        report.push("segment_violation_fraction", frac);
        report.push("segment_max_ratio", ratio);
        pass &= failed == 0;
    }
    report.pass = pass;
    Ok(report)
}

/// Axis segments of `steps` cells with both ends in `mask`. Returns the
/// number checked, the number with |Δa| > (1 + tol)·∫T + abs, and the
/// largest |Δa| / ∫T.
fn segment_check(
    a: &Field,
    t: &Field,
    mask: &[bool],
    steps: usize,
    tol: f64,
    abs: f64,
) -> (usize, usize, f64) {
    let g = a.grid();
    let n = g.n();
    let d = g.dims3();
    let h = g.h();
    let strides = [d[1] * d[2], d[2], 1];
    let (av, tv) = (a.data(), t.data());
    let (mut checked, mut failed) = (0usize, 0usize);
    let mut ratio = 0.0_f64;
    for axis in 0..n {
        let st = strides[axis];
        for start in 0..g.len() {
            let i = g.unravel(start)[axis];
            if i + steps >= d[axis] {
                continue;
            }
            let end = start + steps * st;
            if !mask[start] || !mask[end] {
                continue;
            }
            // trapezoid rule over the nodes of the segment
            let mut integral = 0.5 * (tv[start] + tv[end]);
            for k in 1..steps {
                integral += tv[start + k * st];
            }
            integral *= h;
            let jump = (av[end] - av[start]).abs();
            checked += 1;
            if jump > (1.0 + tol) * integral + abs {
                failed += 1;
            }
            if integral > 0.0 {
                ratio = ratio.max(jump / integral);
            }
        }
    }
    (checked, failed, ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{sample_catalog, Params};
    use crate::error::Error;
    use crate::grid::Grid;
    use crate::sphere::SphereSymbol;

    fn run(res: usize, sigma: f64) -> CheckReport {
        let g = Grid::centered(2, res, 2.0).unwrap();
        let f = sample_catalog("gaussian", &Params::new().with("sigma", sigma), &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        verify_gradient_bound_with(
            &f,
            &spec,
            &RadiusLadder::for_grid(&g),
            &GradientBoundSettings::extended(4),
        )
        .unwrap()
    }

    #[test]
    fn gaussian_bound_and_refinement() {
        let coarse = run(64, 0.5);
        let fine = run(128, 0.5);
        assert!(coarse.pass && fine.pass, "{:?}", coarse.samples);
        assert!(fine.violation_fraction <= coarse.violation_fraction);
        assert_eq!(coarse.sample("segment_violation_fraction"), Some(0.0));
    }

    #[test]
    fn plateau_interior_is_flat() {
        // inside a wide plateau A*f varies slowly and T*f is small
        let g = Grid::centered(2, 64, 2.0).unwrap();
        let f = sample_catalog(
            "smooth_bump",
            &Params::new().with("radius", 1.8).with("plateau", 1.2),
            &g,
        )
        .unwrap();
        let spec = KernelSpec::potential(SphereSymbol::coordinate(2, 0).unwrap());
        let r = verify_gradient_bound(&f, &spec, &RadiusLadder::for_grid(&g)).unwrap();
        assert!(r.pass, "{:?}", r.samples);
    }

    #[test]
    fn rejects_rough_fields() {
        let g = Grid::centered(2, 16, 2.0).unwrap();
        let f = sample_catalog("ball_indicator", &Params::new(), &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        assert!(matches!(
            verify_gradient_bound(&f, &spec, &RadiusLadder::for_grid(&g)),
            Err(Error::NotSmooth(_))
        ));
    }
}
