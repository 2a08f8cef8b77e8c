use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const MIN_ORDER: usize = 8;

/// Nodes and positive weights on S^{n-1}; the weights sum to `nω_n`.
///
/// `order` is the node count in angle for n = 2 (trapezoid, exact for
/// trigonometric degree `< order`) and the azimuthal node count for n = 3,
/// where `order / 2` Gauss–Legendre nodes in `cos θ` are used (exact for
/// spherical polynomials of degree `< order`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereQuadrature {
    pub n: usize,
    pub order: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(n: usize, order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(invalid("order", format!("{order} is below {MIN_ORDER}")));
        }
        match n {
            2 => Ok(circle(order)),
            3 => Ok(sphere(order)),
            _ => Err(invalid("n", format!("{n} is not 2 or 3"))),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        self.order - 1
    }

    pub fn integrate<F: Fn(&[f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| w * f(u))
            .sum()
    }
}

/// Default order: 64 trapezoid nodes on S¹, 32 × 64 nodes on S².
pub fn default_order(_n: usize) -> usize {
    64
}

pub fn sphere_quadrature(n: usize, order: usize) -> Result<SphereQuadrature> {
    SphereQuadrature::new(n, order)
}

fn circle(order: usize) -> SphereQuadrature {
    let w = 2.0 * PI / order as f64;
    let nodes = (0..order)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / order as f64;
            [th.cos(), th.sin(), 0.0]
        })
        .collect();
    SphereQuadrature {
        n: 2,
        order,
        nodes,
        weights: vec![w; order],
    }
}

fn sphere(order: usize) -> SphereQuadrature {
    let (zs, zw) = gauss_legendre(order / 2);
    let dphi = 2.0 * PI / order as f64;
    let mut nodes = Vec::with_capacity(zs.len() * order);
    let mut weights = Vec::with_capacity(zs.len() * order);
    for (z, wz) in zs.iter().zip(&zw) {
        let s = (1.0 - z * z).sqrt();
        for k in 0..order {
            let phi = dphi * k as f64;
            nodes.push([s * phi.cos(), s * phi.sin(), *z]);
            weights.push(wz * dphi);
        }
    }
    SphereQuadrature {
        n: 3,
        order,
        nodes,
        weights,
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_count.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; count];
    let mut w = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=count {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[count - 1 - i] = z;
        w[i] = wi;
        w[count - 1 - i] = wi;
    }
    (x, w)
}
