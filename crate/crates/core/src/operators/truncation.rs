use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// How χ_{|y| ≥ t} is sampled on a cell of side h centred at offset y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    CenterIndicator,
    OverlapWeighted,
}

/// Which convolution route evaluates the volume sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionPath {
    Fft,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub mode: TruncationMode,
    pub subsamples: usize,
    pub path: ConvolutionPath,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            mode: TruncationMode::OverlapWeighted,
            subsamples: 4,
            path: ConvolutionPath::Fft,
        }
    }
}

impl TruncationPolicy {
    pub fn new(mode: TruncationMode, subsamples: usize, path: ConvolutionPath) -> Result<Self> {
        let p = Self {
            mode,
            subsamples,
            path,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn center_indicator() -> Self {
        Self {
            mode: TruncationMode::CenterIndicator,
            ..Self::default()
        }
    }

    pub fn with_path(self, path: ConvolutionPath) -> Self {
        Self { path, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == TruncationMode::OverlapWeighted && self.subsamples < 2 {
            return Err(invalid(
                "subsamples",
                format!("{} is below 2 for overlap weighting", self.subsamples),
            ));
        }
        Ok(())
    }

    /// Weight of the cell centred at offset `d` (physical units) for the
    /// region |y| ≥ t.
    pub fn weight(&self, d: &[f64; 3], r: f64, n: usize, h: f64, t: f64) -> f64 {
        match self.mode {
            TruncationMode::CenterIndicator => {
                if r >= t {
                    1.0
                } else {
                    0.0
                }
            }
            TruncationMode::OverlapWeighted => {
                let reach = 0.5 * h * (n as f64).sqrt();
                if r - reach >= t {
                    1.0
                } else if r + reach < t {
                    0.0
                } else {
                    overlap_fraction(d, n, h, t, self.subsamples)
                }
            }
        }
    }
}

/// Which cells a kernel entry is weighted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WeightFamily {
    /// The full n-dimensional cell.
    Volume,
    /// The (n-1)-dimensional face cell normal to the given axis, for
    /// densities that live on a face of the box.
    Face(usize),
}

impl TruncationPolicy {
    pub(crate) fn family_weight(
        &self,
        family: WeightFamily,
        d: &[f64; 3],
        r: f64,
        n: usize,
        h: f64,
        t: f64,
    ) -> f64 {
        let WeightFamily::Face(axis) = family else {
            return self.weight(d, r, n, h, t);
        };
        match self.mode {
            TruncationMode::CenterIndicator => {
                if r >= t {
                    1.0
                } else {
                    0.0
                }
            }
            TruncationMode::OverlapWeighted => {
                let reach = 0.5 * h * ((n - 1) as f64).sqrt();
                if r - reach >= t {
                    1.0
                } else if r + reach < t {
                    0.0
                } else {
                    face_fraction(d, n, h, t, self.subsamples, axis)
                }
            }
        }
    }
}

/// Fraction of the s^{n-1} subsamples of the face cell normal to `axis`
/// that lie in |y| ≥ t.
fn face_fraction(d: &[f64; 3], n: usize, h: f64, t: f64, s: usize, axis: usize) -> f64 {
    let tangent: Vec<usize> = (0..n).filter(|a| *a != axis).collect();
    let sub = |k: usize| h * ((k as f64 + 0.5) / s as f64 - 0.5);
    let count = s.pow(tangent.len() as u32);
    let mut hit = 0usize;
    for q in 0..count {
        let mut y = *d;
        let mut rest = q;
        for &a in &tangent {
            y[a] += sub(rest % s);
            rest /= s;
        }
        if y[0] * y[0] + y[1] * y[1] + y[2] * y[2] >= t * t {
            hit += 1;
        }
    }
    hit as f64 / count as f64
}

/// Fraction of the s^n midpoint subsamples of the cell that lie in |y| ≥ t.
fn overlap_fraction(d: &[f64; 3], n: usize, h: f64, t: f64, s: usize) -> f64 {
    let t2 = t * t;
    let sub = |k: usize| h * ((k as f64 + 0.5) / s as f64 - 0.5);
    let mut hit = 0usize;
    let third = if n == 3 { s } else { 1 };
    for a in 0..s {
        let y0 = d[0] + sub(a);
        for b in 0..s {
            let y1 = d[1] + sub(b);
            for c in 0..third {
                let y2 = if n == 3 { d[2] + sub(c) } else { 0.0 };
                if y0 * y0 + y1 * y1 + y2 * y2 >= t2 {
                    hit += 1;
                }
            }
        }
    }
    hit as f64 / (s * s * third) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radius(d: &[f64; 3]) -> f64 {
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    #[test]
    fn weights_are_monotone_in_radius() {
        let p = TruncationPolicy::default();
        let d = [0.3, 0.2, 0.0];
        let mut last = 1.0;
        for k in 0..60 {
            let t = 0.01 * k as f64;
            let w = p.weight(&d, radius(&d), 2, 0.1, t);
            assert!(w <= last && (0.0..=1.0).contains(&w));
            last = w;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn straddling_cell_is_partial() {
        let p = TruncationPolicy::default();
        let d = [1.0, 0.0, 0.0];
        assert_eq!(p.weight(&d, 1.0, 2, 0.5, 1.0), 0.5);
        assert_eq!(
            TruncationPolicy::center_indicator().weight(&d, 1.0, 2, 0.5, 1.0),
            1.0
        );
        let d3 = [0.0, 0.0, 2.0];
        let w = p.weight(&d3, 2.0, 3, 0.5, 2.0);
        assert!(w > 0.3 && w < 0.7);
    }

    #[test]
    fn face_weights_subsample_tangentially() {
        let p = TruncationPolicy::default();
        // face cell normal to x₁ at the tangent point of the sphere |y| = 1
        let d = [1.0, 0.0, 0.0];
        assert_eq!(
            p.family_weight(WeightFamily::Face(0), &d, 1.0, 2, 0.1, 1.0),
            1.0
        );
        assert_eq!(
            p.family_weight(WeightFamily::Volume, &d, 1.0, 2, 0.1, 1.0),
            0.5
        );
        // crossing the face cell transversally splits it
        let w = p.family_weight(WeightFamily::Face(1), &d, 1.0, 2, 0.1, 1.0);
        assert_eq!(w, 0.5);
    }

    #[test]
    fn rejects_single_subsample() {
        assert!(
            TruncationPolicy::new(TruncationMode::OverlapWeighted, 1, ConvolutionPath::Fft)
                .is_err()
        );
        assert!(
            TruncationPolicy::new(TruncationMode::CenterIndicator, 1, ConvolutionPath::Fft).is_ok()
        );
    }
}
