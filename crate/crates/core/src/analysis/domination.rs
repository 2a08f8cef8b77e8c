use crate::analysis::report::{CheckReport, LadderMeta};
use crate::error::Result;
use crate::grid::{sphere_area, Field};
use crate::operators::{
    check_spec, maximal_potential, riesz_potential, RadiusLadder, TruncationPolicy,
};
use crate::sphere::{Degree, KernelSpec};

/// Allowed undershoot of I₁f − A*f in the equality case, relative to max I₁f.
/// The two sides come from different convolutions and agree only to rounding.
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// Margin on the near-ball slack in the equality case.
pub const SLACK_FACTOR: f64 = 1.01;

/// Checks A*_Ωf ≤ sup|Ω|·I₁|f| + sup|Ω|·nω_n·t_min·max|f| at every node.
///
/// For constant positive Ω and f ≥ 0 the maximum sits at t_min and the gap
/// I₁f − A*f/Ω is the near-ball integral, so it is also checked to lie in
/// [0, 1.01·nω_n·t_min·max f]. The sample `empirical_constant` is the
/// largest ratio A*f / I₁|f| seen.
pub fn verify_domination(
    f: &Field,
    spec: &KernelSpec,
    ladder: &RadiusLadder,
) -> Result<CheckReport> {
    verify_domination_with(f, spec, ladder, &TruncationPolicy::default())
}

pub fn verify_domination_with(
    f: &Field,
    spec: &KernelSpec,
    ladder: &RadiusLadder,
    policy: &TruncationPolicy,
) -> Result<CheckReport> {
    check_spec(f, spec, Degree::Potential)?;
    let g = *f.grid();
    let n = g.n();
    let a = maximal_potential(f, spec, ladder, policy)?;
    let mut mag = f.magnitude();
    mag.support_hint = f.support_hint;
    let riesz = riesz_potential(&mag, policy)?;
    let bound = spec.symbol().sup_norm_bound();
    let fmax = mag.max_magnitude();
    let slack = bound * sphere_area(n) * ladder.t_min * fmax;
    let scale = bound * riesz.max_magnitude();

    let mut report = CheckReport::new("domination", &g)
        .tolerance("slack", slack)
        .tolerance("rounding_floor", ROUNDING_FLOOR);
    report.ladder = Some(LadderMeta::of(ladder));
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut excess_sum = 0.0;
    let mut constant = 0.0_f64;
    for (av, iv) in a.data().iter().zip(riesz.data()) {
        let excess = av - bound * iv;
        if excess > slack + ROUNDING_FLOOR * scale {
            violations += 1;
        }
        worst = worst.max(excess);
        excess_sum += excess.max(0.0);
        if *iv > ROUNDING_FLOOR * scale {
            constant = constant.max(av / iv);
        }
    }
    let len = g.len() as f64;
    let norm = if scale > 0.0 { scale } else { 1.0 };
    report.max_residual = worst.max(0.0) / norm;
    report.mean_residual = excess_sum / len / norm;
    report.violation_fraction = violations as f64 / len;
    report.push("max_excess", worst.max(0.0));
    report.push("slack", slack);
    report.push("scale", scale);
    report.push("empirical_constant", constant);
    let mut pass = violations == 0;

    let nonnegative = f.m() == 1 && f.data().iter().all(|v| *v >= 0.0);
    if spec.symbol().is_constant() && nonnegative {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (av, iv) in a.data().iter().zip(riesz.data()) {
            let gap = iv - av / bound;
            lo = lo.min(gap);
            hi = hi.max(gap);
        }
        let near = slack / bound;
        report = report.tolerance("gap_upper", SLACK_FACTOR * near);
        report.push("gap_min", lo);
        report.push("gap_max", hi);
        pass &= lo >= -ROUNDING_FLOOR * scale && hi <= SLACK_FACTOR * near;
    }
    report.pass = pass;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{sample_catalog, Params};
    use crate::grid::Grid;
    use crate::sphere::SphereSymbol;

    #[test]
    fn disk_gap_within_near_ball_slack() {
        let g = Grid::centered(2, 64, 2.0).unwrap();
        let f = sample_catalog("ball_indicator", &Params::new(), &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        let r = verify_domination(&f, &spec, &RadiusLadder::for_grid(&g)).unwrap();
        assert!(r.pass, "{:?}", r.samples);
        assert_eq!(r.violation_fraction, 0.0);
        // 2π·t_min with t_min = h
        assert!((r.sample("slack").unwrap() - 2.0 * std::f64::consts::PI * g.h()).abs() < 1e-14);
        assert!(r.sample("gap_max").unwrap() > 0.5 * r.sample("slack").unwrap());
    }

    #[test]
    fn sign_changing_and_vector_fields() {
        let g = Grid::centered(2, 32, 2.0).unwrap();
        let ladder = RadiusLadder::for_grid(&g);
        let f = sample_catalog("random_bandlimited", &Params::new().with("seed", 3.0), &g).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::quadratic(2));
        let r = verify_domination(&f, &spec, &ladder).unwrap();
        assert!(r.pass && r.violation_fraction == 0.0);
        assert!(r.sample("gap_min").is_none());
        let v = Field::from_components(
            g,
            vec![f.data().to_vec(), f.shifted([3, 1, 0]).data().to_vec()],
        )
        .unwrap();
        let spec = KernelSpec::potential(SphereSymbol::identity(2));
        assert!(verify_domination(&v, &spec, &ladder).unwrap().pass);
    }

    #[test]
    fn zero_field() {
        let g = Grid::centered(2, 16, 1.0).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        let r = verify_domination(&Field::zeros(g, 1), &spec, &RadiusLadder::for_grid(&g)).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.sample("scale"), Some(0.0));
    }
}
