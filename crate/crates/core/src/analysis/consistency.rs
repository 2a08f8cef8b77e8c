use crate::analysis::report::{interior_mask, relative_error, CheckReport, LadderMeta};
use crate::analysis::representation::{auto_quad_order, require_smooth};
use crate::error::Result;
use crate::grid::Field;
use crate::operators::{spherical_maximal, spherical_via_gradient, RadiusLadder, TruncationPolicy};
use crate::sphere::SphereQuadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencySettings {
    pub tol: f64,
    /// `None` picks the same order as the representation check.
    pub quad_order: Option<usize>,
    pub policy: TruncationPolicy,
    pub layers: usize,
}

impl Default for ConsistencySettings {
    fn default() -> Self {
        Self {
            tol: 3e-2,
            quad_order: None,
            policy: TruncationPolicy::default(),
            layers: 1,
        }
    }
}

/// Max over the ladder of the spherical mean against the gradient form
/// (1/nω_n)·A*_Ω(∇f), Ω(z) = z, on the same ladder.
pub fn verify_spherical_consistency(f: &Field, ladder: &RadiusLadder) -> Result<CheckReport> {
    verify_spherical_consistency_with(f, ladder, &ConsistencySettings::default())
}

pub fn verify_spherical_consistency_with(
    f: &Field,
    ladder: &RadiusLadder,
    s: &ConsistencySettings,
) -> Result<CheckReport> {
    f.require_scalar("verify_spherical_consistency")?;
    require_smooth(f)?;
    let g = *f.grid();
    ladder.check_grid(&g)?;
    let order = s
        .quad_order
        .unwrap_or_else(|| auto_quad_order(g.n(), ladder.t_max, g.h()));
    let quad = SphereQuadrature::new(g.n(), order)?;
    let direct = spherical_maximal(f, ladder, &quad, false)?;
    let via = spherical_via_gradient(f, ladder, &s.policy)?;
    direct.check_finite()?;
    via.check_finite()?;
    let mask = interior_mask(&g, s.layers);
    let mut report =
        CheckReport::new("spherical_consistency", &g).tolerance("max_relative_error", s.tol);
    report.push(
        "relative_error",
        relative_error(via.data(), direct.data(), &mask),
    );
    report.push("quad_order", order as f64);
    report.summarize("relative_error");
    report.ladder = Some(LadderMeta::of(ladder));
    report.pass = report.max_residual <= s.tol;
    Ok(report)
}
