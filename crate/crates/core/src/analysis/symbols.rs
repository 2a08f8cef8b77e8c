use std::f64::consts::PI;

use crate::analysis::report::CheckReport;
use crate::catalog::Params;
use crate::error::Result;
use crate::grid::unit_ball_volume;
use crate::sphere::symbol::SYMBOL_IDS;
use crate::sphere::{
    boundary_constants, grad_zero_mean_residual, symbol_integral, KernelSpec, SphereQuadrature,
    SphereSymbol,
};

pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Catalog symbols in ℝⁿ with default parameters.
pub fn catalog_symbols(n: usize) -> Result<Vec<SphereSymbol>> {
    SYMBOL_IDS
        .iter()
        .map(|id| SphereSymbol::from_catalog(id, &Params::new(), n))
        .collect()
}

/// For every catalog symbol: |∫Ω dσ| when Ω is admissible for a singular
/// kernel, and the residual of ∫∇K̃ dσ = 0 for the potential kernel.
pub fn verify_zero_mean(n: usize, order: usize) -> Result<CheckReport> {
    let quad = SphereQuadrature::new(n, order)?;
    let mut report = CheckReport::gridless("zero_mean", n).tolerance("residual", ZERO_MEAN_TOL);
    let mut worst = 0.0_f64;
    for symbol in catalog_symbols(n)? {
        if !symbol.is_constant() {
            let mean = symbol_integral(&symbol, &quad)?
                .iter()
                .fold(0.0_f64, |a, v| a.max(v.abs()));
            report.push(format!("mean:{symbol}"), mean);
            worst = worst.max(mean);
            KernelSpec::singular(symbol.clone(), &quad)?;
        }
        let r = grad_zero_mean_residual(&KernelSpec::potential(symbol.clone()), &quad)?;
        report.push(format!("grad:{symbol}"), r);
        worst = worst.max(r);
    }
    report.max_residual = worst;
    report.pass = worst < ZERO_MEAN_TOL;
    Ok(report)
}

/// c = ω_n·I for Ω(z) = z, with ω_n the volume of the unit ball.
pub fn verify_boundary_constants(n: usize, order: usize) -> Result<CheckReport> {
    let quad = SphereQuadrature::new(n, order)?;
    let tol = if n == 2 { 1e-12 } else { 1e-10 };
    let mut report = CheckReport::gridless("boundary_constants", n).tolerance("abs_error", tol);
    let c = boundary_constants(&KernelSpec::potential(SphereSymbol::identity(n)), &quad)?.c;
    let omega = unit_ball_volume(n);
    let mut worst = 0.0_f64;
    for (i, row) in c.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { omega } else { 0.0 };
            report.push(format!("c[{},{}]", i + 1, j + 1), *v);
            worst = worst.max((v - want).abs());
        }
    }
    report.push("omega_n", omega);
    report.push("omega_n/pi", omega / PI);
    report.max_residual = worst;
    report.pass = worst <= tol;
    Ok(report)
}
