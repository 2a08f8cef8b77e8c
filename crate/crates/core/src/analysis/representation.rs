use crate::analysis::report::{interior_mask, relative_error, CheckReport};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operators::potential::gradient_form_ladder;
use crate::operators::{spherical_average, RadiusLadder, TruncationPolicy};
use crate::sphere::SphereQuadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationSettings {
    pub tol: f64,
    /// Sphere quadrature order for the spherical means; `None` picks one
    /// that resolves the box faces, which the zero-extended field jumps
    /// across.
    pub quad_order: Option<usize>,
    pub policy: TruncationPolicy,
    /// Boundary layers excluded from the comparison.
    pub layers: usize,
}

impl Default for RepresentationSettings {
    fn default() -> Self {
        Self {
            tol: 2e-2,
            quad_order: None,
            policy: TruncationPolicy::default(),
            layers: 1,
        }
    }
}

/// Node spacing on the largest sphere about h/2, with at least 64 nodes,
/// capped at 2048 on S¹ and 128 on S².
pub fn auto_quad_order(n: usize, t_max: f64, h: f64) -> usize {
    let want = (4.0 * std::f64::consts::PI * t_max / h / 8.0).ceil() as usize * 8;
    let cap = if n == 2 { 2048 } else { 128 };
    want.clamp(64, cap)
}

pub(crate) fn require_smooth(f: &Field) -> Result<()> {
    match f.provenance {
        Some(id) if id.is_smooth() => Ok(()),
        Some(id) => Err(Error::NotSmooth(id.to_string())),
        None => Err(Error::NotSmooth(
            "field without a smooth catalog origin".into(),
        )),
    }
}

/// Compares the spherical mean of f over S(x, t) with
/// (1/nω_n)∫_{|x-z| ≥ t} ∇f(z)·(x - z)/|x - z|^n dz at interior nodes.
pub fn verify_representation(f: &Field, radii: &[f64], tol: f64) -> Result<CheckReport> {
    verify_representation_with(
        f,
        radii,
        &RepresentationSettings {
            tol,
            ..RepresentationSettings::default()
        },
    )
}

pub fn verify_representation_with(
    f: &Field,
    radii: &[f64],
    s: &RepresentationSettings,
) -> Result<CheckReport> {
    f.require_scalar("verify_representation")?;
    require_smooth(f)?;
    let g = *f.grid();
    let ladder = RadiusLadder::from_radii(radii.to_vec())?;
    ladder.check_grid(&g)?;
    if ladder.t_max > g.diameter() {
        return Err(crate::error::invalid(
            "radii",
            format!("{} exceeds the box diameter {}", ladder.t_max, g.diameter()),
        ));
    }
    let n = g.n();
    let order = s
        .quad_order
        .unwrap_or_else(|| auto_quad_order(n, ladder.t_max, g.h()));
    let quad = SphereQuadrature::new(n, order)?;
    let mask = interior_mask(&g, s.layers);
    let mut rhs = vec![Vec::new(); ladder.len()];
    gradient_form_ladder(f, ladder.radii(), &s.policy, |k, v| rhs[k] = v.to_vec())?;
    let mut report = CheckReport::new("representation", &g).tolerance("max_relative_error", s.tol);
    for (&t, r) in ladder.radii().iter().zip(&rhs) {
        let lhs = spherical_average(f, t, &quad)?;
        report.push(format!("t={t}"), relative_error(r, lhs.data(), &mask));
    }
    report.summarize("t=");
    report.ladder = Some(crate::analysis::report::LadderMeta::of(&ladder));
    report.pass = report.max_residual <= s.tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{sample_catalog, Params};
    use crate::grid::Grid;

    #[test]
    fn gaussian_identity_and_refinement() {
        let run = |res| {
            let g = Grid::centered(2, res, 2.0).unwrap();
            let f = sample_catalog("gaussian", &Params::new(), &g).unwrap();
            verify_representation(&f, &[0.5, 1.0, 2.0], 2e-2).unwrap()
        };
        let coarse = run(64);
        let fine = run(128);
        assert!(coarse.pass, "{:?}", coarse.samples);
        assert!(
            coarse.max_residual / fine.max_residual >= 1.7,
            "{} {}",
            coarse.max_residual,
            fine.max_residual
        );
    }

    #[test]
    fn scaling_leaves_report_unchanged() {
        let g = Grid::centered(2, 32, 2.0).unwrap();
        let f = sample_catalog("gaussian", &Params::new(), &g).unwrap();
        let a = verify_representation(&f, &[0.5, 1.0], 2e-2).unwrap();
        let mut f4 = f.scaled(4.0);
        f4.provenance = f.provenance;
        let b = verify_representation(&f4, &[0.5, 1.0], 2e-2).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.value - y.value).abs() <= 1e-12 * x.value.max(1e-300));
        }
    }

    #[test]
    fn rejects_non_smooth_fields() {
        let g = Grid::centered(2, 32, 2.0).unwrap();
        let f = sample_catalog("ball_indicator", &Params::new(), &g).unwrap();
        assert!(matches!(
            verify_representation(&f, &[1.0], 2e-2),
            Err(Error::NotSmooth(_))
        ));
    }
}
