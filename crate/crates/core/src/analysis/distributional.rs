use crate::analysis::report::CheckReport;
use crate::catalog::{sample_catalog, Params};
use crate::error::{invalid, Error, Result};
use crate::grid::{fd_gradient, unit_ball_volume, Field, Grid};
use crate::operators::TruncationPolicy;
use crate::sphere::kernel::{grad_analytic, grad_numeric};
use crate::sphere::{boundary_constants, symbol_integral, Degree, KernelSpec, SphereQuadrature};
use crate::sum::pairwise_sum_by;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionalSettings {
    pub tol: f64,
    pub quad_order: usize,
    pub policy: TruncationPolicy,
    /// Boundary layers on which φ must vanish.
    pub layers: usize,
    /// Judge the limit ε → 0 by linear extrapolation over the two smallest
    /// ε rather than by the raw value at the smallest ε.
    pub extrapolate: bool,
}

impl Default for DistributionalSettings {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            quad_order: 64,
            policy: TruncationPolicy::default(),
            layers: 2,
            extrapolate: true,
        }
    }
}

/// Both sides of the distributional gradient of K̃ tested against φ at the
/// origin, per component (i, j).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionalSides {
    /// -∫ K̃_i ∂_jφ.
    pub lhs: Vec<Vec<f64>>,
    /// c_ij φ(0) + ∫_{|x| ≥ ε} ∂_jK̃_i φ, one matrix per ε.
    pub rhs: Vec<Vec<Vec<f64>>>,
    /// ∫ |K̃||∇φ|, a size reference for sides that cancel to zero.
    pub abs_mass: f64,
}

/// Test function e^{-|x-c|²/σ²}·b(|x|) with b a smooth bump equal to 1 on
/// |x| ≤ plateau and 0 beyond `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub sigma: f64,
    pub center: [f64; 3],
    pub radius: f64,
    pub plateau: f64,
}

impl Default for GaussianBump {
    /// Off-centre, so φ(0) and ∇φ(0) are both nonzero.
    fn default() -> Self {
        Self {
            sigma: 0.5,
            center: [0.3, 0.2, 0.0],
            radius: 1.6,
            plateau: 0.8,
        }
    }
}

impl GaussianBump {
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        let c = &self.center;
        let gauss = Params::new()
            .with("sigma", self.sigma)
            .with("c1", c[0])
            .with("c2", c[1])
            .with("c3", c[2]);
        let a = sample_catalog("gaussian", &gauss, grid)?;
        let bump = Params::new()
            .with("radius", self.radius)
            .with("plateau", self.plateau);
        let b = sample_catalog("smooth_bump", &bump, grid)?;
        let mut out = a.try_mul_scalar(&b)?;
        out.support_hint = Some(self.radius);
        Ok(out)
    }
}

fn check_phi(phi: &Field, layers: usize) -> Result<usize> {
    phi.require_scalar("verify_distributional_gradient")?;
    let g = phi.grid();
    let origin = g.nearest(&[0.0; 3][..g.n()]);
    let x = g.coords(origin);
    if x.iter().any(|v| v.abs() > 1e-12 * g.h()) {
        return Err(invalid("phi", "the origin is not a grid node"));
    }
    let peak = phi.max_magnitude();
    let edge = (0..g.len())
        .filter(|&i| !g.is_interior(g.unravel(i), layers))
        .map(|i| phi.data()[i].abs())
        .fold(0.0, f64::max);
    if edge > 1e-12 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::NotCompactlySupported(edge));
    }
    Ok(origin)
}

fn check_eps(eps: &[f64], h: f64) -> Result<()> {
    if eps.is_empty() {
        return Err(invalid("eps_list", "empty"));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps_list", "must be strictly decreasing"));
    }
    let last = eps[eps.len() - 1];
    if last < h * (1.0 - 1e-12) {
        return Err(Error::RadiusBelowSpacing { t: last, h });
    }
    Ok(())
}

/// Evaluates both sides by midpoint sums. The left side treats the cell at
/// the origin as the ball of equal volume, over which ∫ K̃_i = r_h·∫Ω_i dσ.
pub fn distributional_sides(
    spec: &KernelSpec,
    phi: &Field,
    eps_list: &[f64],
    settings: &DistributionalSettings,
) -> Result<DistributionalSides> {
    if spec.degree() != Degree::Potential {
        return Err(invalid(
            "spec",
            "the distributional gradient is taken of a potential kernel",
        ));
    }
    settings.policy.validate()?;
    let g = *phi.grid();
    let (n, m) = (g.n(), spec.m());
    if spec.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "kernel in ℝ^{} for a field on ℝ^{n}",
            spec.n()
        )));
    }
    let origin = check_phi(phi, settings.layers)?;
    check_eps(eps_list, g.h())?;
    let h = g.h();
    let cell = g.cell_volume();
    let quad = SphereQuadrature::new(n, settings.quad_order)?;
    let grad_phi = fd_gradient(phi)?;
    let omega_mean = symbol_integral(spec.symbol(), &quad)?;
    let c = boundary_constants(spec, &quad)?.c;
    let r_h = (cell / unit_ball_volume(n)).powf(1.0 / n as f64);
    let analytic = spec.symbol().has_analytic_gradient();

    let kernel = |idx: usize, out: &mut [f64]| spec.eval_into(&g.coords(idx), out);
    let lhs: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dphi = grad_phi.component(j);
                    let far = pairwise_sum_by(g.len(), &|idx| {
                        if idx == origin {
                            return 0.0;
                        }
                        let mut k = [0.0; 3];
                        kernel(idx, &mut k[..m]);
                        k[i] * dphi[idx]
                    });
                    -(far * cell + r_h * omega_mean[i] * dphi[origin])
                })
                .collect()
        })
        .collect();

    let abs_mass = pairwise_sum_by(g.len(), &|idx| {
        if idx == origin {
            return 0.0;
        }
        let mut k = [0.0; 3];
        kernel(idx, &mut k[..m]);
        let kn = k[..m].iter().map(|v| v * v).sum::<f64>().sqrt();
        kn * grad_phi.magnitude_at(idx)
    }) * cell;

    let phi0 = phi.data()[origin];
    let p = &phi.data();
    let rhs = eps_list
        .iter()
        .map(|&eps| {
            (0..m)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let tail = pairwise_sum_by(g.len(), &|idx| {
                                if idx == origin || p[idx] == 0.0 {
                                    return 0.0;
                                }
                                let x = g.coords(idx);
                                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                                let w = settings.policy.weight(&x, r, n, h, eps);
                                if w == 0.0 {
                                    return 0.0;
                                }
                                let mut dk = [0.0; 9];
                                if analytic {
                                    grad_analytic(spec, &x, &mut dk[..m * n]);
                                } else {
                                    grad_numeric(spec, &x, &mut dk[..m * n]);
                                }
                                w * dk[i * n + j] * p[idx]
                            });
                            c[i][j] * phi0 + tail * cell
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(DistributionalSides { lhs, rhs, abs_mass })
}

/// Linear extrapolation to ε = 0 through (e1, v1) and (e2, v2).
fn extrapolate(e1: f64, v1: f64, e2: f64, v2: f64) -> f64 {
    (e1 * v2 - e2 * v1) / (e1 - e2)
}

/// Checks -∫K̃ ∂_jφ = c_j φ(0) + lim_{ε→0} ∫_{|x| ≥ ε} ∂_jK̃ φ at the origin.
///
/// Discrepancies are relative to max |lhs|. With `extrapolate` and at least
/// two ε, the limit is estimated from the two smallest ε; the raw value at
/// the smallest ε and the change between successive extrapolations are
/// reported alongside.
pub fn verify_distributional_gradient(
    spec: &KernelSpec,
    phi: &Field,
    eps_list: &[f64],
) -> Result<CheckReport> {
    verify_distributional_gradient_with(spec, phi, eps_list, &DistributionalSettings::default())
}

pub fn verify_distributional_gradient_with(
    spec: &KernelSpec,
    phi: &Field,
    eps_list: &[f64],
    s: &DistributionalSettings,
) -> Result<CheckReport> {
    let sides = distributional_sides(spec, phi, eps_list, s)?;
    let g = phi.grid();
    let (n, m) = (g.n(), spec.m());
    let k = eps_list.len();
    let scale = sides
        .lhs
        .iter()
        .flatten()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    let rel = |d: f64| {
        if scale > 0.0 {
            d / scale
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let mut report =
        CheckReport::new("distributional_gradient", g).tolerance("relative_discrepancy", s.tol);
    report.push("scale", scale);
    report.push("abs_mass", sides.abs_mass);
    let use_extrap = s.extrapolate && k >= 2;
    let mut judged_all = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let tag = format!("[{},{}]", i + 1, j + 1);
            let lhs = sides.lhs[i][j];
            report.push(format!("lhs{tag}"), lhs);
            for (e, r) in eps_list.iter().zip(&sides.rhs) {
                report.push(format!("rhs{tag}@eps={e}"), r[i][j]);
            }
            let raw = rel((lhs - sides.rhs[k - 1][i][j]).abs());
            report.push(format!("raw{tag}"), raw);
            let judged = if use_extrap {
                let lim = extrapolate(
                    eps_list[k - 2],
                    sides.rhs[k - 2][i][j],
                    eps_list[k - 1],
                    sides.rhs[k - 1][i][j],
                );
                report.push(format!("limit{tag}"), lim);
                if k >= 3 {
                    let prev = extrapolate(
                        eps_list[k - 3],
                        sides.rhs[k - 3][i][j],
                        eps_list[k - 2],
                        sides.rhs[k - 2][i][j],
                    );
                    report.push(format!("trend{tag}"), rel((lim - prev).abs()));
                }
                let d = rel((lhs - lim).abs());
                report.push(format!("extrapolated{tag}"), d);
                d
            } else {
                raw
            };
            judged_all.push(judged);
        }
    }
    let worst = judged_all.iter().copied().fold(0.0, f64::max);
    report.max_residual = worst;
    report.mean_residual = judged_all.iter().sum::<f64>() / judged_all.len() as f64;
    report.pass = worst <= s.tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::smooth_step;
    use crate::sphere::quadrature::gauss_legendre;
    use crate::sphere::SphereSymbol;
    use std::f64::consts::PI;

    const SIGMA: f64 = 0.5;
    const C: [f64; 2] = [0.3, 0.2];
    const RB: f64 = 1.6;
    const PLATEAU: f64 = 0.8;

    fn bump(x: &[f64; 2]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        smooth_step((RB - r) / (RB - PLATEAU))
    }

    fn phi_fn(x: &[f64; 2]) -> f64 {
        let d2 = (x[0] - C[0]).powi(2) + (x[1] - C[1]).powi(2);
        (-d2 / (SIGMA * SIGMA)).exp() * bump(x)
    }

    fn phi_field(res: usize) -> Field {
        let g = Grid::centered(2, res, 2.0).unwrap();
        let phi = GaussianBump::default().sample(&g).unwrap();
        // the sampled field is the function the oracle integrates
        let direct = Field::from_fn(g, |x| phi_fn(&[x[0], x[1]]));
        assert!(phi
            .data()
            .iter()
            .zip(direct.data())
            .all(|(a, b)| (a - b).abs() < 1e-15));
        phi
    }

    /// c φ(0) + ∫_S G(u) ∫_0^R (φ(ru) - φ(0))/r dr dθ with G(u) the value of
    /// ∂_jK̃ on the unit circle, by Gauss–Legendre panels in r and the
    /// trapezoid rule in θ.
    fn polar_limit(f: &dyn Fn(&[f64; 2]) -> f64, g: &dyn Fn(&[f64; 2]) -> f64, c: f64) -> f64 {
        let (xs, ws) = gauss_legendre(8);
        let panels = 400;
        let dr = RB / panels as f64;
        let nth = 256;
        let f0 = f(&[0.0, 0.0]);
        let mut acc = 0.0;
        for k in 0..nth {
            let th = 2.0 * PI * k as f64 / nth as f64;
            let u = [th.cos(), th.sin()];
            let mut radial = 0.0;
            for p in 0..panels {
                for (x, w) in xs.iter().zip(&ws) {
                    let r = dr * (p as f64 + 0.5 * (x + 1.0));
                    radial += 0.5 * dr * w * (f(&[r * u[0], r * u[1]]) - f0) / r;
                }
            }
            acc += g(&u) * radial;
        }
        c * f0 + acc * 2.0 * PI / nth as f64
    }

    fn eps_ladder(h: f64) -> Vec<f64> {
        [8.0, 4.0, 2.0, 1.0].iter().map(|k| k * h).collect()
    }

    #[test]
    fn constant_symbol_matches_polar_oracle() {
        let phi = phi_field(256);
        let h = phi.grid().h();
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        let report = verify_distributional_gradient(&spec, &phi, &eps_ladder(h)).unwrap();
        assert!(report.pass, "{:?}", report.samples);
        let sides = distributional_sides(&spec, &phi, &eps_ladder(h), &Default::default()).unwrap();
        for j in 0..2 {
            // ∂_j|x|^{-1} on the unit circle is -u_j
            let truth = polar_limit(&phi_fn, &|u| -u[j], 0.0);
            let lhs = sides.lhs[0][j];
            assert!((lhs / truth - 1.0).abs() < 1e-2, "{j}: {lhs} {truth}");
            let lim = report.sample(&format!("limit[1,{}]", j + 1)).unwrap();
            assert!((lim / truth - 1.0).abs() < 1e-2, "{j}: {lim} {truth}");
        }
        // the raw value at ε = h still carries the O(ε) term π ε ∂_jφ(0)
        assert!(report.sample("raw[1,1]").unwrap() > report.sample("extrapolated[1,1]").unwrap());
    }

    #[test]
    fn identity_symbol_with_vanishing_phi() {
        // φ(0) = 0 and ∇φ(0) = 0: no Dirac term and no O(ε) term
        let g = Grid::centered(2, 256, 2.0).unwrap();
        let r2 = |x: &[f64; 2]| x[0] * x[0] + x[1] * x[1];
        let f = |x: &[f64; 2]| r2(x) * phi_fn(x);
        let phi = Field::from_fn(g, |x| f(&[x[0], x[1]]));
        let spec = KernelSpec::potential(SphereSymbol::identity(2));
        let settings = DistributionalSettings {
            extrapolate: false,
            ..Default::default()
        };
        let report = verify_distributional_gradient_with(&spec, &phi, &[g.h()], &settings).unwrap();
        assert!(report.pass, "{:?}", report.samples);
        let sides = distributional_sides(&spec, &phi, &[g.h()], &settings).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                // ∂_j(x_i/|x|²) on the unit circle is δ_ij - 2u_iu_j
                let d = if i == j { 1.0 } else { 0.0 };
                let truth = polar_limit(&f, &|u| d - 2.0 * u[i] * u[j], PI * d);
                let scale = sides
                    .lhs
                    .iter()
                    .flatten()
                    .fold(0.0_f64, |a, v| a.max(v.abs()));
                assert!((sides.lhs[i][j] - truth).abs() < 1e-2 * scale, "{i}{j}");
                assert!((sides.rhs[0][i][j] - truth).abs() < 1e-2 * scale, "{i}{j}");
            }
        }
    }

    #[test]
    fn dirac_term_carries_the_boundary_constant() {
        // with Ω(z) = z the c_ij φ(0) term is needed: dropping it breaks agreement
        let phi = phi_field(256);
        let h = phi.grid().h();
        let spec = KernelSpec::potential(SphereSymbol::identity(2));
        let report = verify_distributional_gradient(&spec, &phi, &eps_ladder(h)).unwrap();
        assert!(report.pass, "{:?}", report.samples);
        let phi0 = phi.data()[phi.grid().nearest(&[0.0, 0.0])];
        let scale = report.sample("scale").unwrap();
        let lim = report.sample("limit[1,1]").unwrap();
        let lhs = report.sample("lhs[1,1]").unwrap();
        assert!((lhs - (lim - PI * phi0)).abs() > 0.5 * scale);
    }

    #[test]
    fn odd_phi_cancels() {
        let g = Grid::centered(2, 64, 2.0).unwrap();
        let phi = Field::from_fn(g, |x| {
            x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp() * bump(&[x[0], x[1]])
        });
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        let report = verify_distributional_gradient(&spec, &phi, &eps_ladder(g.h())).unwrap();
        let mass = report.sample("abs_mass").unwrap();
        assert!(report.sample("lhs[1,2]").unwrap().abs() < 1e-3 * mass);
        assert!(report.sample("limit[1,2]").unwrap().abs() < 1e-3 * mass);
        assert!(report.sample("lhs[1,1]").unwrap().abs() > 1e-2 * mass);
    }

    #[test]
    fn preconditions() {
        let g = Grid::centered(2, 32, 2.0).unwrap();
        let spec = KernelSpec::potential(SphereSymbol::one(2));
        let wide = sample_catalog("gaussian", &Params::new(), &g).unwrap();
        assert!(matches!(
            verify_distributional_gradient(&spec, &wide, &[g.h()]),
            Err(Error::NotCompactlySupported(_))
        ));
        let phi = phi_field(32);
        assert!(verify_distributional_gradient(&spec, &phi, &[0.5 * g.h()]).is_err());
        assert!(verify_distributional_gradient(&spec, &phi, &[g.h(), 2.0 * g.h()]).is_err());
        let q = SphereQuadrature::new(2, 64).unwrap();
        let sing = KernelSpec::singular(SphereSymbol::coordinate(2, 0).unwrap(), &q).unwrap();
        assert!(verify_distributional_gradient(&sing, &phi, &[g.h()]).is_err());
    }
}
