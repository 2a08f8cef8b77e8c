use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::Params;
use crate::error::{invalid, Error, Result};
use crate::sphere::quadrature::SphereQuadrature;

/// Catalog symbols. Each is the restriction to S^{n-1} of a smooth function
/// `g` on ℝⁿ, which supplies the analytic tangential gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum SymbolKind {
    /// Ω ≡ 1.
    One,
    /// Ω(z) = z, with m = n components.
    Identity,
    /// Ω(z) = z_j.
    Coordinate { axis: usize },
    /// Ω(z) = z₁² − z₂².
    Quadratic,
    /// Ω(z) = exp(z₁) − μ with μ the spherical mean of exp(z₁).
    ExpShift { mean: f64 },
}

impl SymbolKind {
    pub fn id(&self) -> &'static str {
        match self {
            SymbolKind::One => "one",
            SymbolKind::Identity => "identity",
            SymbolKind::Coordinate { .. } => "coordinate",
            SymbolKind::Quadratic => "quadratic",
            SymbolKind::ExpShift { .. } => "exp_shift",
        }
    }
}

pub const SYMBOL_IDS: [&str; 5] = ["one", "identity", "coordinate", "quadratic", "exp_shift"];

/// A C¹ symbol Ω: S^{n-1} → ℝ^m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereSymbol {
    n: usize,
    kind: SymbolKind,
    analytic_gradient: bool,
    sup_norm_bound: f64,
}

impl SphereSymbol {
    pub fn new(n: usize, kind: SymbolKind) -> Result<Self> {
        if !(n == 2 || n == 3) {
            return Err(invalid("n", format!("{n} is not 2 or 3")));
        }
        match kind {
            SymbolKind::Coordinate { axis } if axis >= n => {
                return Err(invalid("axis", format!("{axis} is not below {n}")));
            }
            _ => {}
        }
        let bound = match kind {
            SymbolKind::ExpShift { mean } => (std::f64::consts::E - mean).max(mean - (-1f64).exp()),
            _ => 1.0,
        };
        let symbol = Self {
            n,
            kind,
            analytic_gradient: true,
            sup_norm_bound: bound,
        };
        let check = SphereQuadrature::new(n, 64)?;
        let worst = check
            .nodes
            .iter()
            .map(|u| symbol.magnitude(u))
            .fold(0.0, f64::max);
        if worst > bound * (1.0 + 1e-12) {
            return Err(invalid(
                "sup_norm_bound",
                format!("{bound} < observed {worst}"),
            ));
        }
        Ok(symbol)
    }

    pub fn one(n: usize) -> Self {
        Self::new(n, SymbolKind::One).expect("valid dimension")
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, SymbolKind::Identity).expect("valid dimension")
    }

    pub fn coordinate(n: usize, axis: usize) -> Result<Self> {
        Self::new(n, SymbolKind::Coordinate { axis })
    }

    pub fn quadratic(n: usize) -> Self {
        Self::new(n, SymbolKind::Quadratic).expect("valid dimension")
    }

    /// exp(z₁) shifted by its spherical mean, computed with `quad`.
    pub fn exp_shift(quad: &SphereQuadrature) -> Result<Self> {
        let mean = quad.integrate(|u| u[0].exp()) / quad.weights.iter().sum::<f64>();
        Self::new(quad.n, SymbolKind::ExpShift { mean })
    }

    /// Builds a catalog symbol. `axis` (1-based, default 1) selects the
    /// coordinate symbol; `order` the quadrature used for the exp shift.
    pub fn from_catalog(id: &str, params: &Params, n: usize) -> Result<Self> {
        let allowed: &[&str] = match id {
            "coordinate" => &["axis"],
            "exp_shift" => &["order"],
            _ => &[],
        };
        if let Some(bad) = params.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(invalid(bad, format!("not a parameter of symbol {id}")));
        }
        match id {
            "one" => Self::new(n, SymbolKind::One),
            "identity" => Self::new(n, SymbolKind::Identity),
            "coordinate" => {
                let axis = params.get_or("axis", 1.0);
                if axis < 1.0 || axis.fract() != 0.0 {
                    return Err(invalid("axis", format!("{axis} is not a 1-based axis")));
                }
                Self::coordinate(n, axis as usize - 1)
            }
            "quadratic" => Self::new(n, SymbolKind::Quadratic),
            "exp_shift" => {
                let order = params.get_or("order", 64.0);
                Self::exp_shift(&SphereQuadrature::new(n, order as usize)?)
            }
            other => Err(Error::UnknownCatalog(other.to_string())),
        }
    }

    /// Same symbol with the analytic gradient disabled, so kernel gradients
    /// fall back to finite differences.
    pub fn without_analytic_gradient(mut self) -> Self {
        self.analytic_gradient = false;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn m(&self) -> usize {
        match self.kind {
            SymbolKind::Identity => self.n,
            _ => 1,
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.analytic_gradient
    }

    /// Upper bound for the Euclidean norm |Ω| on the sphere.
    pub fn sup_norm_bound(&self) -> f64 {
        self.sup_norm_bound
    }

    /// True when Ω is a positive constant.
    pub fn is_constant(&self) -> bool {
        matches!(self.kind, SymbolKind::One)
    }

    /// Values of Ω at the direction of `x` (need not be normalized).
    pub fn eval(&self, x: &[f64; 3], out: &mut [f64]) {
        let r = norm(x);
        let u = [x[0] / r, x[1] / r, x[2] / r];
        self.eval_unit(&u, out);
    }

    /// Values of the ambient function g at a unit vector.
    pub(crate) fn eval_unit(&self, u: &[f64; 3], out: &mut [f64]) {
        match self.kind {
            SymbolKind::One => out[0] = 1.0,
            SymbolKind::Identity => out[..self.n].copy_from_slice(&u[..self.n]),
            SymbolKind::Coordinate { axis } => out[0] = u[axis],
            SymbolKind::Quadratic => out[0] = u[0] * u[0] - u[1] * u[1],
            SymbolKind::ExpShift { mean } => out[0] = u[0].exp() - mean,
        }
    }

    /// Jacobian of the ambient function g at `u`, row-major m × n.
    pub(crate) fn ambient_jacobian(&self, u: &[f64; 3], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.kind {
            SymbolKind::One => {}
            SymbolKind::Identity => {
                for i in 0..n {
                    out[i * n + i] = 1.0;
                }
            }
            SymbolKind::Coordinate { axis } => out[axis] = 1.0,
            SymbolKind::Quadratic => {
                out[0] = 2.0 * u[0];
                out[1] = -2.0 * u[1];
            }
            SymbolKind::ExpShift { .. } => out[0] = u[0].exp(),
        }
    }

    pub fn magnitude(&self, x: &[f64; 3]) -> f64 {
        let mut v = [0.0; 3];
        self.eval(x, &mut v[..self.m()]);
        norm(&v)
    }
}

impl fmt::Display for SphereSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SymbolKind::Coordinate { axis } => write!(f, "coordinate(axis={})", axis + 1),
            _ => f.write_str(self.id()),
        }
    }
}

pub(crate) fn norm(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// ∫_{S^{n-1}} Ω dσ by quadrature, one entry per component.
pub fn symbol_integral(symbol: &SphereSymbol, quad: &SphereQuadrature) -> Result<Vec<f64>> {
    if symbol.n() != quad.n {
        return Err(Error::DimensionMismatch(format!(
            "symbol in ℝ^{} with quadrature on S^{}",
            symbol.n(),
            quad.n - 1
        )));
    }
    let m = symbol.m();
    let mut acc = vec![0.0; m];
    let mut v = vec![0.0; m];
    for (u, w) in quad.nodes.iter().zip(&quad.weights) {
        symbol.eval_unit(u, &mut v);
        for (a, b) in acc.iter_mut().zip(&v) {
            *a += w * b;
        }
    }
    Ok(acc)
}
