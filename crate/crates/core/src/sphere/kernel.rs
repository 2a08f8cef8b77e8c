use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sphere::quadrature::SphereQuadrature;
use crate::sphere::symbol::{norm, symbol_integral, SphereSymbol};

/// Tolerance on |∫Ω dσ| for singular kernels.
pub const ZERO_MEAN_TOL: f64 = 1e-8;

/// Relative step of the numeric kernel gradient.
pub const GRAD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degree {
    /// K̃(x) = Ω(x/|x|)|x|^{1-n}.
    Potential,
    /// K(x) = Ω(x/|x|)|x|^{-n}.
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    symbol: SphereSymbol,
    degree: Degree,
}

impl KernelSpec {
    pub fn potential(symbol: SphereSymbol) -> Self {
        Self {
            symbol,
            degree: Degree::Potential,
        }
    }

    /// Rejects symbols whose spherical integral exceeds [`ZERO_MEAN_TOL`]
    /// under `quad`.
    pub fn singular(symbol: SphereSymbol, quad: &SphereQuadrature) -> Result<Self> {
        let mean = symbol_integral(&symbol, quad)?;
        if let Some(r) = mean.iter().map(|v| v.abs()).find(|v| *v > ZERO_MEAN_TOL) {
            return Err(Error::NonZeroMean {
                id: symbol.to_string(),
                residual: r,
            });
        }
        Ok(Self {
            symbol,
            degree: Degree::Singular,
        })
    }

    pub fn symbol(&self) -> &SphereSymbol {
        &self.symbol
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn n(&self) -> usize {
        self.symbol.n()
    }

    pub fn m(&self) -> usize {
        self.symbol.m()
    }

    pub fn zero_mean_required(&self) -> bool {
        self.degree == Degree::Singular
    }

    /// The homogeneity exponent: 1-n or -n.
    pub fn exponent(&self) -> i32 {
        let n = self.n() as i32;
        match self.degree {
            Degree::Potential => 1 - n,
            Degree::Singular => -n,
        }
    }

    /// Ω(x/|x|)|x|^{degree}, written to `out` (length m). No domain check.
    #[inline]
    pub(crate) fn eval_into(&self, x: &[f64; 3], out: &mut [f64]) {
        let r = norm(x);
        let u = [x[0] / r, x[1] / r, x[2] / r];
        self.symbol.eval_unit(&u, out);
        let s = r.powi(self.exponent());
        out.iter_mut().for_each(|v| *v *= s);
    }

    pub fn eval(&self, x: &[f64; 3]) -> Result<Vec<f64>> {
        check_nonzero(x)?;
        let mut out = vec![0.0; self.m()];
        self.eval_into(x, &mut out);
        Ok(out)
    }
}

fn check_nonzero(x: &[f64; 3]) -> Result<()> {
    let r = norm(x);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Singularity);
    }
    Ok(())
}

fn require(spec: &KernelSpec, degree: Degree, op: &str) -> Result<()> {
    if spec.degree != degree {
        return Err(invalid("spec", format!("{op} needs a {degree:?} kernel")));
    }
    Ok(())
}

pub fn ktilde_eval(spec: &KernelSpec, x: &[f64; 3]) -> Result<Vec<f64>> {
    require(spec, Degree::Potential, "ktilde_eval")?;
    spec.eval(x)
}

pub fn ksing_eval(spec: &KernelSpec, x: &[f64; 3]) -> Result<Vec<f64>> {
    require(spec, Degree::Singular, "ksing_eval")?;
    spec.eval(x)
}

/// ∇K̃ at `x` as a row-major m × n matrix (row i is ∇K̃_i).
pub fn grad_ktilde(spec: &KernelSpec, x: &[f64; 3]) -> Result<Vec<f64>> {
    require(spec, Degree::Potential, "grad_ktilde")?;
    check_nonzero(x)?;
    let mut out = vec![0.0; spec.m() * spec.n()];
    if spec.symbol.has_analytic_gradient() {
        grad_analytic(spec, x, &mut out);
    } else {
        grad_numeric(spec, x, &mut out);
    }
    Ok(out)
}

/// |x|^{-n}[(I - uuᵀ)∇g(u) + (1-n)Ω(u)u] with u = x/|x|.
pub(crate) fn grad_analytic(spec: &KernelSpec, x: &[f64; 3], out: &mut [f64]) {
    let (n, m) = (spec.n(), spec.m());
    let r = norm(x);
    let u = [x[0] / r, x[1] / r, x[2] / r];
    let mut jac = [0.0; 9];
    let mut om = [0.0; 3];
    spec.symbol.ambient_jacobian(&u, &mut jac[..m * n]);
    spec.symbol.eval_unit(&u, &mut om[..m]);
    let s = r.powi(-(n as i32));
    for i in 0..m {
        let row = &jac[i * n..(i + 1) * n];
        let radial: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
        for j in 0..n {
            let tangential = row[j] - radial * u[j];
            out[i * n + j] = s * (tangential + (1.0 - n as f64) * om[i] * u[j]);
        }
    }
}

/// Central differences on the unit-scaled point, rescaled by |x|^{-n}.
pub(crate) fn grad_numeric(spec: &KernelSpec, x: &[f64; 3], out: &mut [f64]) {
    let (n, m) = (spec.n(), spec.m());
    let r = norm(x);
    let u = [x[0] / r, x[1] / r, x[2] / r];
    let d = GRAD_STEP;
    let (mut plus, mut minus) = ([0.0; 3], [0.0; 3]);
    let s = r.powi(-(n as i32));
    for j in 0..n {
        let mut a = u;
        let mut b = u;
        a[j] += d;
        b[j] -= d;
        spec.eval_into(&a, &mut plus[..m]);
        spec.eval_into(&b, &mut minus[..m]);
        for i in 0..m {
            out[i * n + j] = s * (plus[i] - minus[i]) / (2.0 * d);
        }
    }
}

/// c[i][j] = ∫ Ω_i(u) u_j dσ(u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConstants {
    pub c: Vec<Vec<f64>>,
}

impl BoundaryConstants {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.c
            .iter()
            .flatten()
            .zip(other.c.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_quad(spec: &KernelSpec, quad: &SphereQuadrature) -> Result<()> {
    if spec.n() != quad.n {
        return Err(Error::DimensionMismatch(format!(
            "kernel in ℝ^{} with quadrature for n = {}",
            spec.n(),
            quad.n
        )));
    }
    Ok(())
}

pub fn boundary_constants(spec: &KernelSpec, quad: &SphereQuadrature) -> Result<BoundaryConstants> {
    require(spec, Degree::Potential, "boundary_constants")?;
    check_quad(spec, quad)?;
    let (n, m) = (spec.n(), spec.m());
    let mut c = vec![vec![0.0; n]; m];
    let mut om = vec![0.0; m];
    for (u, w) in quad.nodes.iter().zip(&quad.weights) {
        spec.symbol.eval_unit(u, &mut om);
        for i in 0..m {
            for j in 0..n {
                c[i][j] += w * om[i] * u[j];
            }
        }
    }
    Ok(BoundaryConstants { c })
}

/// Largest entry of |∫_{S^{n-1}} ∇K̃ dσ|.
pub fn grad_zero_mean_residual(spec: &KernelSpec, quad: &SphereQuadrature) -> Result<f64> {
    require(spec, Degree::Potential, "grad_zero_mean_residual")?;
    check_quad(spec, quad)?;
    let len = spec.m() * spec.n();
    let mut acc = vec![0.0; len];
    let mut g = vec![0.0; len];
    let analytic = spec.symbol.has_analytic_gradient();
    for (u, w) in quad.nodes.iter().zip(&quad.weights) {
        if analytic {
            grad_analytic(spec, u, &mut g);
        } else {
            grad_numeric(spec, u, &mut g);
        }
        for (a, b) in acc.iter_mut().zip(&g) {
            *a += w * b;
        }
    }
    Ok(acc.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn symbols(n: usize) -> Vec<SphereSymbol> {
        let q = SphereQuadrature::new(n, 64).unwrap();
        let mut v = vec![
            SphereSymbol::one(n),
            SphereSymbol::identity(n),
            SphereSymbol::quadratic(n),
            SphereSymbol::exp_shift(&q).unwrap(),
        ];
        v.extend((0..n).map(|j| SphereSymbol::coordinate(n, j).unwrap()));
        v
    }

    #[test]
    fn ktilde_examples() {
        let one = KernelSpec::potential(SphereSymbol::one(2));
        assert_eq!(ktilde_eval(&one, &[2.0, 0.0, 0.0]).unwrap(), vec![0.5]);
        let id = KernelSpec::potential(SphereSymbol::identity(2));
        let v = ktilde_eval(&id, &[0.0, 3.0, 0.0]).unwrap();
        assert!(v[0].abs() < 1e-16 && (v[1] - 1.0 / 3.0).abs() < 1e-16);
        assert!(matches!(
            ktilde_eval(&one, &[0.0; 3]),
            Err(Error::Singularity)
        ));
    }

    #[test]
    fn ksing_examples() {
        let q = SphereQuadrature::new(2, 64).unwrap();
        let k = KernelSpec::singular(SphereSymbol::coordinate(2, 0).unwrap(), &q).unwrap();
        assert!((ksing_eval(&k, &[1.0, 0.0, 0.0]).unwrap()[0] - 1.0).abs() < 1e-15);
        let x = [0.4, -0.9, 0.0];
        let a = ksing_eval(&k, &x).unwrap()[0];
        let b = ksing_eval(&k, &[-0.4, 0.9, 0.0]).unwrap()[0];
        assert_eq!(a, -b);
        assert!(matches!(
            KernelSpec::singular(SphereSymbol::one(2), &q),
            Err(Error::NonZeroMean { .. })
        ));
        assert!(ktilde_eval(&k, &x).is_err());
    }

    #[test]
    fn homogeneity_for_all_symbols_and_degrees() {
        for n in [2, 3] {
            let q = SphereQuadrature::new(n, 64).unwrap();
            for s in symbols(n) {
                let mut specs = vec![KernelSpec::potential(s.clone())];
                if let Ok(k) = KernelSpec::singular(s.clone(), &q) {
                    specs.push(k);
                }
                let x = [0.7, -0.3, if n == 3 { 0.45 } else { 0.0 }];
                for spec in &specs {
                    let base = spec.eval(&x).unwrap();
                    for lam in [0.5, 2.0, 10.0] {
                        let y = [x[0] * lam, x[1] * lam, x[2] * lam];
                        let v = spec.eval(&y).unwrap();
                        let f = f64::powi(lam, spec.exponent());
                        for (a, b) in v.iter().zip(&base) {
                            assert!((a - f * b).abs() <= 1e-12 * (f * b).abs().max(1e-300));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_gradient_examples() {
        let one = KernelSpec::potential(SphereSymbol::one(2));
        let g = grad_ktilde(&one, &[1.0, 0.0, 0.0]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
        // -x/|x|³ at a generic point
        let x = [0.3, -1.1, 0.0];
        let r3 = (0.09f64 + 1.21).powf(1.5);
        let g = grad_ktilde(&one, &x).unwrap();
        assert!((g[0] + 0.3 / r3).abs() < 1e-14 && (g[1] - 1.1 / r3).abs() < 1e-14);
    }

    #[test]
    fn gradient_homogeneity_and_numeric_agreement() {
        for n in [2, 3] {
            for s in symbols(n) {
                let spec = KernelSpec::potential(s.clone());
                let numeric = KernelSpec::potential(s.without_analytic_gradient());
                let x = [0.6, 0.25, if n == 3 { -0.8 } else { 0.0 }];
                let g = grad_ktilde(&spec, &x).unwrap();
                let g3 = grad_ktilde(&spec, &[3.0 * x[0], 3.0 * x[1], 3.0 * x[2]]).unwrap();
                let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let f = 3f64.powi(-(n as i32));
                for (a, b) in g3.iter().zip(&g) {
                    assert!((a - f * b).abs() <= 1e-10 * f * scale);
                }
                let gn = grad_ktilde(&numeric, &x).unwrap();
                for (a, b) in gn.iter().zip(&g) {
                    assert!((a - b).abs() <= 1e-6 * scale, "{} {a} {b}", spec.symbol());
                }
            }
        }
    }

    #[test]
    fn boundary_constant_examples() {
        let q2 = SphereQuadrature::new(2, 64).unwrap();
        let c = boundary_constants(&KernelSpec::potential(SphereSymbol::identity(2)), &q2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { PI } else { 0.0 };
                assert!((c.c[i][j] - want).abs() < 1e-12);
            }
        }
        let q3 = SphereQuadrature::new(3, 64).unwrap();
        let c = boundary_constants(&KernelSpec::potential(SphereSymbol::identity(3)), &q3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 4.0 * PI / 3.0 } else { 0.0 };
                assert!((c.c[i][j] - want).abs() < 1e-10);
            }
        }
        for q in [&q2, &q3] {
            let c = boundary_constants(&KernelSpec::potential(SphereSymbol::one(q.n)), q).unwrap();
            assert!(c.c[0].iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn boundary_constants_stable_under_order_increase() {
        for n in [2, 3] {
            let a = SphereQuadrature::new(n, 64).unwrap();
            let b = SphereQuadrature::new(n, 66).unwrap();
            for s in symbols(n) {
                let spec = KernelSpec::potential(s);
                let ca = boundary_constants(&spec, &a).unwrap();
                let cb = boundary_constants(&spec, &b).unwrap();
                assert!(ca.max_abs_diff(&cb) < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_mean_vanishes_for_catalog() {
        for n in [2, 3] {
            let q = SphereQuadrature::new(n, 64).unwrap();
            for s in symbols(n) {
                let spec = KernelSpec::potential(s.clone());
                let r = grad_zero_mean_residual(&spec, &q).unwrap();
                assert!(r < 1e-10, "{s}: {r}");
                let numeric = KernelSpec::potential(s.without_analytic_gradient());
                assert!(grad_zero_mean_residual(&numeric, &q).unwrap() < 1e-8);
            }
        }
        let q = SphereQuadrature::new(2, 64).unwrap();
        let one = KernelSpec::potential(SphereSymbol::one(2));
        assert!(grad_zero_mean_residual(&one, &q).unwrap() < 1e-14);
    }
}
