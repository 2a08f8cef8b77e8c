use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{interpolate_component, Field};
use crate::operators::fft::Engine;
use crate::operators::ladder::check_radius;
use crate::sphere::{SphereQuadrature, SphereSymbol};

fn check_symbol(f: &Field, symbol: &SphereSymbol, quad: &SphereQuadrature) -> Result<()> {
    let n = f.grid().n();
    if symbol.n() != n || quad.n != n {
        return Err(Error::DimensionMismatch(format!(
            "symbol on S^{}, quadrature on S^{}, field on ℝ^{n}",
            symbol.n() - 1,
            quad.n - 1
        )));
    }
    if symbol.m() != f.m() {
        return Err(Error::DimensionMismatch(format!(
            "symbol has {} components, field has {}",
            symbol.m(),
            f.m()
        )));
    }
    Ok(())
}

/// Quadrature coefficients c[q][i·n + j] = w_q·Ω_i(u_q)·u_{q,j}.
fn coefficients(symbol: &SphereSymbol, quad: &SphereQuadrature) -> Vec<Vec<f64>> {
    let (n, m) = (symbol.n(), symbol.m());
    let mut om = vec![0.0; m];
    quad.nodes
        .iter()
        .zip(&quad.weights)
        .map(|(u, w)| {
            symbol.eval_unit(u, &mut om);
            let mut c = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    c[i * n + j] = w * om[i] * u[j];
                }
            }
            c
        })
        .collect()
}

pub(crate) fn surface_unchecked(
    f: &Field,
    symbol: &SphereSymbol,
    t: f64,
    quad: &SphereQuadrature,
) -> Field {
    let g = *f.grid();
    let n = g.n();
    let coef = coefficients(symbol, quad);
    let comps: Vec<&[f64]> = f.components().collect();
    let mut values = vec![0.0; g.len() * n];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(node, out)| {
            let x = g.coords(node);
            for (u, c) in quad.nodes.iter().zip(&coef) {
                let y = [x[0] - t * u[0], x[1] - t * u[1], x[2] - t * u[2]];
                for (i, comp) in comps.iter().enumerate() {
                    let v = interpolate_component(&g, comp, &y[..n]);
                    if v != 0.0 {
                        for j in 0..n {
                            out[j] += v * c[i * n + j];
                        }
                    }
                }
            }
        });
    let len = g.len();
    let mut data = vec![0.0; len * n];
    for (node, v) in values.chunks(n).enumerate() {
        for j in 0..n {
            data[j * len + node] = v[j];
        }
    }
    Field::from_data(g, n, data).expect("finite surface values")
}

/// (f ∗ μ_t)(x) = Σ_i ∫_{S^{n-1}} f_i(x - t u)·Ω_i(u)·u dσ(u), one component
/// per coordinate.
pub fn surface_convolution(
    f: &Field,
    symbol: &SphereSymbol,
    t: f64,
    quad: &SphereQuadrature,
) -> Result<Field> {
    check_symbol(f, symbol, quad)?;
    check_radius(t, f.grid())?;
    let g = f.grid();
    let half = (0..g.n())
        .map(|a| g.half_width(a))
        .fold(f64::INFINITY, f64::min);
    if t > half {
        warn!("surface radius {t} exceeds the box half-width {half}; samples outside the box are zero");
    }
    Ok(surface_unchecked(f, symbol, t, quad))
}

/// Adds to `out` the padded kernel whose convolution with a grid field equals
/// coefficient `index` of the quadrature sum with multilinear interpolation.
pub(crate) fn spread_surface(
    engine: &Engine,
    coef: &[Vec<f64>],
    nodes: &[[f64; 3]],
    index: usize,
    t: f64,
    out: &mut [f64],
) {
    let g = engine.grid();
    let n = g.n();
    let h = g.h();
    for (u, c) in nodes.iter().zip(coef) {
        let w = c[index];
        if w == 0.0 {
            continue;
        }
        let mut base = [0i64; 3];
        let mut frac = [0.0; 3];
        for a in 0..n {
            let s = t * u[a] / h;
            let fl = s.floor();
            base[a] = fl as i64;
            frac[a] = s - fl;
        }
        for corner in 0..(1usize << n) {
            let mut o = base;
            let mut wt = w;
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    o[a] += 1;
                    wt *= frac[a];
                } else {
                    wt *= 1.0 - frac[a];
                }
            }
            if wt != 0.0 {
                if let Some(k) = engine.padded_index(o) {
                    out[k] += wt;
                }
            }
        }
    }
}

pub(crate) fn surface_coefficients(
    symbol: &SphereSymbol,
    quad: &SphereQuadrature,
) -> Vec<Vec<f64>> {
    coefficients(symbol, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{sample_catalog, Params};
    use crate::grid::Grid;

    #[test]
    fn constant_field_gives_zero() {
        let g = Grid::centered(2, 32, 2.0).unwrap();
        let f = Field::from_fn(g, |_| 1.0);
        let q = SphereQuadrature::new(2, 64).unwrap();
        let out = surface_convolution(&f, &SphereSymbol::one(2), 0.5, &q).unwrap();
        let x = g.nearest(&[0.0, 0.0]);
        assert!(out.value(x, 0).abs() < 1e-14 && out.value(x, 1).abs() < 1e-14);
    }

    #[test]
    fn half_plane_arc_integral() {
        let g = Grid::centered(2, 64, 2.0).unwrap();
        let f = sample_catalog("half_space", &Params::new(), &g).unwrap();
        let q = SphereQuadrature::new(2, 64).unwrap();
        let out = surface_convolution(&f, &SphereSymbol::one(2), 1.0, &q).unwrap();
        let x = g.nearest(&[0.0, 0.0]);
        assert!((out.value(x, 0) + 2.0).abs() < 0.04, "{}", out.value(x, 0));
        assert!(out.value(x, 1).abs() < 0.04);
    }

    #[test]
    fn linear_and_checked() {
        let g = Grid::centered(3, 16, 2.0).unwrap();
        let a = sample_catalog("gaussian", &Params::new().with("c2", 0.4), &g).unwrap();
        let b = sample_catalog("smooth_bump", &Params::new(), &g).unwrap();
        let q = SphereQuadrature::new(3, 16).unwrap();
        let s = SphereSymbol::quadratic(3);
        let sum = surface_convolution(&a.try_add(&b.scaled(2.0)).unwrap(), &s, 0.6, &q).unwrap();
        let sa = surface_convolution(&a, &s, 0.6, &q).unwrap();
        let sb = surface_convolution(&b, &s, 0.6, &q).unwrap();
        for i in 0..sum.data().len() {
            assert!((sum.data()[i] - sa.data()[i] - 2.0 * sb.data()[i]).abs() < 1e-13);
        }
        assert!(surface_convolution(&a, &SphereSymbol::identity(3), 0.6, &q).is_err());
        assert!(surface_convolution(&a, &s, 0.01, &q).is_err());
    }

    #[test]
    fn spread_kernel_reproduces_interpolation() {
        use crate::operators::fft::{Cutoff, Sweep};
        use crate::operators::truncation::TruncationPolicy;
        let g = Grid::centered(2, 24, 2.0).unwrap();
        let f = sample_catalog(
            "smooth_bump",
            &Params::new().with("radius", 0.9).with("c1", 0.2),
            &g,
        )
        .unwrap();
        let q = SphereQuadrature::new(2, 32).unwrap();
        let s = SphereSymbol::coordinate(2, 1).unwrap();
        let t = 0.55;
        let direct = surface_convolution(&f, &s, t, &q).unwrap();
        let engine = Engine::new(&g);
        let coef = surface_coefficients(&s, &q);
        let zero = vec![vec![0.0; engine.padded_len()]; 2];
        let extra = |_: Cutoff, k: usize, out: &mut [f64]| {
            spread_surface(&engine, &coef, &q.nodes, k, t, out)
        };
        let channels = vec![vec![(0, 0)], vec![(1, 0)]];
        let sw = Sweep {
            kernels: &zero,
            channels: &channels,
            families: &[],
            extra: Some(&extra),
        };
        let mut got = Vec::new();
        engine.sweep(
            &[f.data()],
            &sw,
            &[Cutoff::Untruncated],
            &TruncationPolicy::default(),
            |_, o| got = o.to_vec(),
        );
        for j in 0..2 {
            for (a, b) in got[j].iter().zip(direct.component(j)) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
