//! Regular box discretization of ℝⁿ, sampled fields and the norms used by the
//! operators.
//!
//! Nodes sit at `origin + i·h`; every node owns the cube of side `h` centred on
//! it, so volume integrals are node value × `h^n` (midpoint rule). Outside the
//! box every field is zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::CatalogId;
use crate::error::{invalid, Error, Result};
use crate::sum::{max_by, pairwise_sum_by};

pub const MIN_DIMS: usize = 16;

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Surface area `nω_n` of the unit sphere in ℝⁿ.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    dims: [usize; 3],
    h: f64,
    origin: [f64; 3],
}

impl Grid {
    /// Box centred at the origin with `dims[k]` nodes along axis `k`.
    pub fn new(n: usize, dims: &[usize], h: f64) -> Result<Self> {
        if !(n == 2 || n == 3) {
            return Err(Error::InvalidGrid(format!("dimension {n} is not 2 or 3")));
        }
        if dims.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {n} axis sizes, got {}",
                dims.len()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let mut d = [1usize; 3];
        let mut origin = [0.0; 3];
        for k in 0..n {
            if dims[k] < MIN_DIMS {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has {} nodes, need at least {MIN_DIMS}",
                    dims[k]
                )));
            }
            d[k] = dims[k];
            origin[k] = -h * (dims[k] - 1) as f64 / 2.0;
        }
        Ok(Self {
            n,
            dims: d,
            h,
            origin,
        })
    }

    /// Box `[-L, L]ⁿ` cut into `res` cells per axis; nodes include both faces
    /// and the origin, so `h = 2L / res` and there are `res + 1` nodes per axis.
    pub fn centered(n: usize, res: usize, half_width: f64) -> Result<Self> {
        if res < MIN_DIMS - 1 {
            return Err(Error::InvalidGrid(format!(
                "resolution {res} is too coarse"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half width {half_width} must be positive"
            )));
        }
        let h = 2.0 * half_width / res as f64;
        Self::new(n, &vec![res + 1; n], h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.n]
    }

    pub fn dims3(&self) -> [usize; 3] {
        self.dims
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.n]
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Half width of the box along `axis` (distance from 0 to the outer nodes).
    pub fn half_width(&self, axis: usize) -> f64 {
        -self.origin[axis]
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        2.0 * (0..self.n)
            .map(|k| self.half_width(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[0] * self.dims[1] + ijk[1]) * self.dims[2] + ijk[2]
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], k]
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        self.coords_of(self.unravel(idx))
    }

    pub fn coords_of(&self, ijk: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for (k, xk) in x.iter_mut().enumerate().take(self.n) {
            *xk = self.origin[k] + ijk[k] as f64 * self.h;
        }
        x
    }

    /// Node nearest to `x` (clamped to the box).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut ijk = [0usize; 3];
        for k in 0..self.n {
            let s = ((x[k] - self.origin[k]) / self.h).round();
            ijk[k] = s.clamp(0.0, (self.dims[k] - 1) as f64) as usize;
        }
        self.index(ijk)
    }

    /// True when the node lies on the outer layer of the box.
    pub fn is_boundary(&self, ijk: [usize; 3]) -> bool {
        (0..self.n).any(|k| ijk[k] == 0 || ijk[k] + 1 == self.dims[k])
    }

    /// True when the node is at least `layers` nodes away from every face.
    pub fn is_interior(&self, ijk: [usize; 3], layers: usize) -> bool {
        (0..self.n).all(|k| ijk[k] >= layers && ijk[k] + layers < self.dims[k])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.n).all(|k| x[k].abs() <= self.half_width(k) * (1.0 + 1e-12))
    }

    /// Same box with the resolution scaled by `factor` (nodes keep including
    /// both faces and the origin when `res·factor` is even).
    pub fn refined(&self, factor: f64) -> Result<Self> {
        let res = ((self.dims[0] - 1) as f64 * factor).round() as usize;
        Self::centered(self.n, res, self.half_width(0))
    }
}

/// Samples of an `m`-component function at the grid nodes.
///
/// Storage is component-major: component `c` occupies
/// `data[c·len .. (c+1)·len]` in row-major node order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    m: usize,
    data: Vec<f64>,
    pub support_hint: Option<f64>,
    pub provenance: Option<CatalogId>,
}

impl Field {
    pub fn zeros(grid: Grid, m: usize) -> Self {
        Self {
            grid,
            m,
            data: vec![0.0; m * grid.len()],
            support_hint: None,
            provenance: None,
        }
    }

    pub fn from_data(grid: Grid, m: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || data.len() != m * grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for {m} components on {} nodes",
                data.len(),
                grid.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field sample {bad}")));
        }
        Ok(Self {
            grid,
            m,
            data,
            support_hint: None,
            provenance: None,
        })
    }

    pub fn from_components(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        let m = comps.len();
        let data = comps.into_iter().flatten().collect();
        Self::from_data(grid, m, data)
    }

    /// Scalar field sampled from `f` at every node.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.coords(i)))
            .collect();
        Self {
            grid,
            m: 1,
            data,
            support_hint: None,
            provenance: None,
        }
    }

    /// Vector field; `f` fills the `m` component values of one node.
    pub fn from_vector_fn<F>(grid: Grid, m: usize, f: F) -> Self
    where
        F: Fn([f64; 3], &mut [f64]) + Sync,
    {
        let len = grid.len();
        let nodes: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|i| {
                let mut v = vec![0.0; m];
                f(grid.coords(i), &mut v);
                v
            })
            .collect();
        let mut data = vec![0.0; m * len];
        for (i, v) in nodes.iter().enumerate() {
            for c in 0..m {
                data[c * len + i] = v[c];
            }
        }
        Self {
            grid,
            m,
            data,
            support_hint: None,
            provenance: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    pub fn components(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.grid.len())
    }

    pub fn value(&self, node: usize, c: usize) -> f64 {
        self.data[c * self.grid.len() + node]
    }

    /// Euclidean length of the sample vector at `node`.
    pub fn magnitude_at(&self, node: usize) -> f64 {
        if self.m == 1 {
            return self.data[node].abs();
        }
        let len = self.grid.len();
        (0..self.m)
            .map(|c| self.data[c * len + node].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Scalar field `|f|` (Euclidean across components).
    pub fn magnitude(&self) -> Field {
        let data = (0..self.grid.len()).map(|i| self.magnitude_at(i)).collect();
        Field {
            grid: self.grid,
            m: 1,
            data,
            support_hint: self.support_hint,
            provenance: None,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        max_by(self.grid.len(), |i| self.magnitude_at(i))
    }

    pub fn scaled(&self, lambda: f64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= lambda);
        out
    }

    pub fn try_add(&self, other: &Field) -> Result<Field> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        out.provenance = None;
        Ok(out)
    }

    /// Pointwise product with a scalar field.
    pub fn try_mul_scalar(&self, other: &Field) -> Result<Field> {
        if other.m != 1 || other.grid != self.grid {
            return Err(Error::DimensionMismatch(
                "pointwise product needs a scalar field on the same grid".into(),
            ));
        }
        let len = self.grid.len();
        let mut out = self.clone();
        for c in 0..self.m {
            for i in 0..len {
                out.data[c * len + i] *= other.data[i];
            }
        }
        out.support_hint = match (self.support_hint, other.support_hint) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        out.provenance = match (self.provenance, other.provenance) {
            (Some(a), Some(b)) if a.is_smooth() && b.is_smooth() => Some(a),
            (Some(a), _) if !a.is_smooth() => Some(a),
            (_, Some(b)) if !b.is_smooth() => Some(b),
            _ => None,
        };
        Ok(out)
    }

    /// Copy shifted by whole cells: `out(x) = self(x - shift·h)`, zero filled.
    pub fn shifted(&self, shift: [isize; 3]) -> Field {
        let g = self.grid;
        let d = g.dims3();
        let mut out = Field::zeros(g, self.m);
        out.support_hint = None;
        for c in 0..self.m {
            let src = self.component(c);
            let dst = out.component_mut(c);
            for (idx, v) in dst.iter_mut().enumerate() {
                let ijk = g.unravel(idx);
                let mut s = [0usize; 3];
                let mut ok = true;
                for k in 0..3 {
                    let j = ijk[k] as isize - shift[k];
                    if j < 0 || j >= d[k] as isize {
                        ok = false;
                        break;
                    }
                    s[k] = j as usize;
                }
                if ok {
                    *v = src[g.index(s)];
                }
            }
        }
        out
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(bad) => Err(Error::NonFinite(format!(
                "component {} node {}",
                bad / self.grid.len(),
                bad % self.grid.len()
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn check_same_shape(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.m != other.m {
            return Err(Error::DimensionMismatch(format!(
                "fields differ: {} vs {} components or grids",
                self.m, other.m
            )));
        }
        Ok(())
    }

    pub(crate) fn require_scalar(&self, op: &str) -> Result<()> {
        if self.m != 1 {
            return Err(Error::DimensionMismatch(format!(
                "{op} needs a scalar field, got {} components",
                self.m
            )));
        }
        Ok(())
    }
}

/// Exponent pair `(p, p*)` of the homogeneous Sobolev space Ẇ^{1,p}(ℝⁿ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSettings {
    pub p: f64,
    pub p_star: f64,
}

impl NormSettings {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        let nf = n as f64;
        if !(p > 1.0 && p < nf) {
            return Err(invalid("p", format!("{p} is outside (1, {n})")));
        }
        Ok(Self {
            p,
            p_star: nf * p / (nf - p),
        })
    }
}

/// Midpoint value of `(∫|f|^p)^{1/p}`; `p = ∞` gives the max norm.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1");
    let len = f.grid.len();
    if p.is_infinite() {
        return f.max_magnitude();
    }
    let integral = if p == 2.0 {
        pairwise_sum_by(len, &|i| f.magnitude_at(i).powi(2))
    } else {
        pairwise_sum_by(len, &|i| f.magnitude_at(i).powf(p))
    } * f.grid.cell_volume();
    integral.powf(1.0 / p)
}

/// Midpoint integral of each component.
pub fn integral(f: &Field) -> Vec<f64> {
    let vol = f.grid.cell_volume();
    f.components()
        .map(|c| pairwise_sum_by(c.len(), &|i| c[i]) * vol)
        .collect()
}

/// Central differences inside, first-order one-sided differences on the faces.
pub fn fd_gradient(f: &Field) -> Result<Field> {
    f.require_scalar("fd_gradient")?;
    let g = f.grid;
    let n = g.n();
    let d = g.dims3();
    let h = g.h();
    let src = f.component(0);
    let strides = [d[1] * d[2], d[2], 1];
    let mut out = Field::zeros(g, n);
    for axis in 0..n {
        let stride = strides[axis];
        let dst = out.component_mut(axis);
        dst.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let i = g.unravel(idx)[axis];
            *v = if i == 0 {
                (src[idx + stride] - src[idx]) / h
            } else if i + 1 == d[axis] {
                (src[idx] - src[idx - stride]) / h
            } else {
                (src[idx + stride] - src[idx - stride]) / (2.0 * h)
            };
        });
    }
    out.provenance = f.provenance;
    Ok(out)
}

/// Distributional gradient of the zero extension of `f`, as node densities.
///
/// Face nodes own only the part of their cell inside the box, and carry the
/// jump `-f·ν` across the face as a surface layer of thickness `h`. The
/// midpoint integral of every component is exactly zero.
pub fn zero_extended_gradient(f: &Field) -> Result<Field> {
    let (volume, jump) = zero_extended_gradient_parts(f)?;
    volume.try_add(&jump).map(|mut g| {
        g.provenance = f.provenance;
        g
    })
}

/// The two parts of [`zero_extended_gradient`]: the weighted interior
/// gradient and the face layer. Component `a` of the layer is supported on
/// the faces normal to axis `a`.
pub fn zero_extended_gradient_parts(f: &Field) -> Result<(Field, Field)> {
    let mut volume = fd_gradient(f)?;
    let g = f.grid;
    let n = g.n();
    let d = g.dims3();
    let h = g.h();
    let src = f.component(0);
    let mut jump = Field::zeros(g, n);
    for axis in 0..n {
        let vol = volume.component_mut(axis);
        let layer = jump.component_mut(axis);
        vol.par_iter_mut()
            .zip(layer.par_iter_mut())
            .enumerate()
            .for_each(|(idx, (v, j))| {
                let ijk = g.unravel(idx);
                if !g.is_boundary(ijk) {
                    return;
                }
                let mut inside = 1.0;
                let mut tangential = 1.0;
                let mut side = 0.0;
                for k in 0..n {
                    let on_face = ijk[k] == 0 || ijk[k] + 1 == d[k];
                    if on_face {
                        inside *= 0.5;
                        if k != axis {
                            tangential *= 0.5;
                        }
                    }
                    if k == axis {
                        if ijk[k] == 0 {
                            side = -1.0;
                        } else if ijk[k] + 1 == d[k] {
                            side = 1.0;
                        }
                    }
                }
                *v *= inside;
                *j = -side * src[idx] * tangential / h;
            });
    }
    volume.support_hint = f.support_hint;
    jump.support_hint = f.support_hint;
    Ok((volume, jump))
}

/// Multilinear interpolation; zero outside the closed box.
pub fn interpolate(f: &Field, x: &[f64]) -> Vec<f64> {
    (0..f.m)
        .map(|c| interpolate_component(&f.grid, f.component(c), x))
        .collect()
}

pub(crate) fn interpolate_component(g: &Grid, samples: &[f64], x: &[f64]) -> f64 {
    let n = g.n();
    let d = g.dims3();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for k in 0..n {
        let s = (x[k] - g.origin[k]) / g.h;
        let last = (d[k] - 1) as f64;
        if !(s >= -1e-9 && s <= last + 1e-9) {
            return 0.0;
        }
        let s = s.clamp(0.0, last);
        let i = (s.floor() as usize).min(d[k] - 2);
        base[k] = i;
        frac[k] = s - i as f64;
    }
    let strides = [d[1] * d[2], d[2], 1];
    let b = g.index(base);
    let mut acc = 0.0;
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut off = 0;
        for k in 0..n {
            if corner >> k & 1 == 1 {
                w *= frac[k];
                off += strides[k];
            } else {
                w *= 1.0 - frac[k];
            }
        }
        if w != 0.0 {
            acc += w * samples[b + off];
        }
    }
    acc
}

/// `(‖f‖_{p*}, ‖∇f‖_p)`; the Ẇ^{1,p} norm is their sum.
pub fn sobolev_seminorm_pair(f: &Field, settings: &NormSettings) -> Result<(f64, f64)> {
    f.require_scalar("sobolev_seminorm_pair")?;
    let n = f.grid.n() as f64;
    if !(settings.p > 1.0 && settings.p < n) {
        return Err(invalid("p", format!("{} is outside (1, {n})", settings.p)));
    }
    let grad = fd_gradient(f)?;
    Ok((lp_norm(f, settings.p_star), lp_norm(&grad, settings.p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid2(res: usize) -> Grid {
        Grid::centered(2, res, 2.0).unwrap()
    }

    #[test]
    fn centered_grid_is_symmetric_and_has_origin_node() {
        let g = grid2(64);
        assert_eq!(g.dims(), &[65, 65]);
        assert!((g.h() - 4.0 / 64.0).abs() < 1e-15);
        for k in 0..2 {
            assert!((g.origin()[k].abs() - g.h() * 64.0 / 2.0).abs() < 1e-12);
        }
        let c = g.coords(g.nearest(&[0.0, 0.0]));
        assert_eq!(c[0], 0.0);
        assert_eq!(c[1], 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(4, &[16; 4], 0.1).is_err());
        assert!(Grid::new(2, &[8, 16], 0.1).is_err());
        assert!(Grid::new(2, &[16, 16], 0.0).is_err());
        assert!(Grid::new(2, &[16, 16, 16], 0.1).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(3, &[16, 17, 18], 0.1).unwrap();
        for idx in [0, 1, 17, 300, g.len() - 1] {
            assert_eq!(g.index(g.unravel(idx)), idx);
        }
    }

    #[test]
    fn unit_ball_constants() {
        assert_eq!(unit_ball_volume(2), std::f64::consts::PI);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn norm_settings_exponent_relation() {
        for n in [2usize, 3] {
            for p in [1.1, 1.5, 1.9] {
                let s = NormSettings::new(p, n).unwrap();
                let lhs = 1.0 / s.p_star;
                let rhs = 1.0 / p - 1.0 / n as f64;
                // the subtraction on the right loses digits when p is near n
                assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON / p);
            }
        }
        assert!(NormSettings::new(1.0, 3).is_err());
        assert!(NormSettings::new(3.0, 3).is_err());
        assert!(NormSettings::new(2.5, 2).is_err());
    }

    #[test]
    fn lp_norm_of_disk_indicator() {
        let g = grid2(64); // h = 1/16
        let f = Field::from_fn(g, |x| {
            if x[0] * x[0] + x[1] * x[1] < 1.0 {
                1.0
            } else {
                0.0
            }
        });
        let v = lp_norm(&f, 2.0);
        assert!((v / std::f64::consts::PI.sqrt() - 1.0).abs() < 0.02, "{v}");
        assert_eq!(lp_norm(&Field::zeros(g, 1), 3.0), 0.0);
        assert_eq!(lp_norm(&f, f64::INFINITY), 1.0);
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let g = grid2(32);
        let lin = fd_gradient(&Field::from_fn(g, |x| x[0])).unwrap();
        for idx in 0..g.len() {
            assert!((lin.value(idx, 0) - 1.0).abs() < 1e-12);
            assert!(lin.value(idx, 1).abs() < 1e-12);
        }
        let c = fd_gradient(&Field::from_fn(g, |_| 3.5)).unwrap();
        assert_eq!(c.max_magnitude(), 0.0);
    }

    #[test]
    fn gradient_of_gaussian_is_second_order() {
        let err = |res: usize| {
            let g = grid2(res);
            let f = Field::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
            let grad = fd_gradient(&f).unwrap();
            let mut e: f64 = 0.0;
            for idx in 0..g.len() {
                let ijk = g.unravel(idx);
                if !g.is_interior(ijk, 1) {
                    continue;
                }
                let x = g.coords(idx);
                let ex = (-(x[0] * x[0] + x[1] * x[1])).exp();
                for k in 0..2 {
                    e = e.max((grad.value(idx, k) + 2.0 * x[k] * ex).abs());
                }
            }
            e
        };
        let (a, b) = (err(32), err(64));
        assert!(a < 0.02);
        assert!(a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn zero_extended_gradient_integrates_to_zero() {
        let g = Grid::centered(3, 20, 2.0).unwrap();
        let f = Field::from_fn(g, |x| (-(x[0] * x[0] + 0.5 * x[1] * x[1] + x[2])).exp());
        let grad = zero_extended_gradient(&f).unwrap();
        let scale = lp_norm(&f, 1.0) / g.h();
        for v in integral(&grad) {
            assert!(v.abs() < 1e-12 * scale, "{v}");
        }
    }

    #[test]
    fn interpolation_basics() {
        let g = grid2(32);
        let lin = Field::from_fn(g, |x| 2.0 * x[0] - 0.5 * x[1] + 1.0);
        let node = 200;
        assert_eq!(interpolate(&lin, &g.coords(node))[0], lin.value(node, 0));
        let v = interpolate(&lin, &[0.123, -0.77])[0];
        assert!((v - (2.0 * 0.123 + 0.5 * 0.77 + 1.0)).abs() < 1e-12);
        assert_eq!(interpolate(&lin, &[2.01, 0.0])[0], 0.0);
        assert_eq!(interpolate(&lin, &[0.0, -3.0])[0], 0.0);
    }

    #[test]
    fn interpolation_of_gaussian_at_cell_centre() {
        let g = grid2(128);
        let f = Field::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let h = g.h();
        let x = [0.5 + h / 2.0, -0.25 + h / 2.0];
        let exact = (-(x[0] * x[0] + x[1] * x[1])).exp();
        assert!((interpolate(&f, &x)[0] - exact).abs() < 2.0 * h * h);
    }

    #[test]
    fn sobolev_pair_scales_and_refines() {
        let g = Grid::centered(3, 24, 2.0).unwrap();
        let s = NormSettings::new(2.0, 3).unwrap();
        let zero = sobolev_seminorm_pair(&Field::zeros(g, 1), &s).unwrap();
        assert_eq!(zero, (0.0, 0.0));
        let gauss = |x: [f64; 3]| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
        let f = Field::from_fn(g, gauss);
        let (a, b) = sobolev_seminorm_pair(&f, &s).unwrap();
        let (a3, b3) = sobolev_seminorm_pair(&f.scaled(-3.0), &s).unwrap();
        assert!((a3 / a - 3.0).abs() < 1e-12 && (b3 / b - 3.0).abs() < 1e-12);
        let fine = Field::from_fn(g.refined(2.0).unwrap(), gauss);
        let (af, bf) = sobolev_seminorm_pair(&fine, &s).unwrap();
        assert!((a / af - 1.0).abs() < 0.02, "{a} {af}");
        assert!((b / bf - 1.0).abs() < 0.02, "{b} {bf}");
        assert!(sobolev_seminorm_pair(
            &f,
            &NormSettings {
                p: 3.5,
                p_star: 1.0
            }
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn lp_norm_homogeneous_and_subadditive(
            seed in 0u64..1000,
            lambda in -5.0f64..5.0,
            p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, f64::INFINITY]),
        ) {
            let g = Grid::new(2, &[16, 16], 0.1).unwrap();
            let mk = |s: u64| Field::from_fn(g, move |x| (x[0] * 7.3 + s as f64).sin() * (x[1] * 3.1 - s as f64 * 0.7).cos());
            let f = mk(seed);
            let h = mk(seed + 17);
            let nf = lp_norm(&f, p);
            prop_assert!((lp_norm(&f.scaled(lambda), p) - lambda.abs() * nf).abs() <= 1e-12 * nf.max(1e-300));
            let sum = lp_norm(&f.try_add(&h).unwrap(), p);
            prop_assert!(sum <= (nf + lp_norm(&h, p)) * (1.0 + 1e-12));
        }

        #[test]
        fn affine_gradient_constant_inside(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -1.0f64..1.0) {
            let g = Grid::new(2, &[16, 18], 0.07).unwrap();
            let grad = fd_gradient(&Field::from_fn(g, |x| a * x[0] + b * x[1] + c)).unwrap();
            for idx in 0..g.len() {
                prop_assert!((grad.value(idx, 0) - a).abs() < 1e-10);
                prop_assert!((grad.value(idx, 1) - b).abs() < 1e-10);
            }
        }

        #[test]
        fn zero_outside_box(x in 2.0001f64..10.0, y in -10.0f64..10.0) {
            let g = Grid::centered(2, 16, 2.0).unwrap();
            let f = Field::from_fn(g, |_| 1.0);
            prop_assert_eq!(interpolate(&f, &[x, y])[0], 0.0);
            prop_assert_eq!(interpolate(&f, &[y, -x])[0], 0.0);
        }
    }
}
