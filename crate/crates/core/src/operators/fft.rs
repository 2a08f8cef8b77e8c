//! Zero-padded FFT convolution over a radius ladder.
//!
//! Kernels live on a padded array indexed by signed grid offset modulo the
//! padded size, so linear convolution needs no wraparound correction. Real
//! signals are transformed two at a time as the real and imaginary parts of
//! one complex array and separated with Hermitian symmetry.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;
use crate::operators::truncation::{ConvolutionPath, TruncationPolicy, WeightFamily};

/// Smallest 5-smooth integer not below `n`.
pub fn next_smooth(n: usize) -> usize {
    let mut k = n.max(1);
    loop {
        let mut r = k;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return k;
        }
        k += 1;
    }
}

/// Truncation applied to the kernel table at one ladder step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Cutoff {
    /// Keep the region |y| ≥ t.
    At(f64),
    /// Keep every offset, including the origin entry.
    Untruncated,
}

/// One output channel is Σ field[f] ∗ kernel[k] over its (k, f) terms.
pub(crate) struct Sweep<'a> {
    pub kernels: &'a [Vec<f64>],
    pub channels: &'a [Vec<(usize, usize)>],
    /// Weight family per kernel; empty means volume weights throughout.
    pub families: &'a [WeightFamily],
    /// Adds a cutoff-dependent term to kernel `k`.
    pub extra: Option<&'a (dyn Fn(Cutoff, usize, &mut [f64]) + Sync)>,
}

type Plan = Arc<dyn Fft<f64>>;

pub(crate) struct Engine {
    grid: Grid,
    dims: [usize; 3],
    pdims: [usize; 3],
    plen: usize,
    forward: Vec<Option<Plan>>,
    inverse: Vec<Option<Plan>>,
    radius: Vec<f64>,
}

impl Engine {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let dims = grid.dims3();
        let mut pdims = [1usize; 3];
        for a in 0..n {
            pdims[a] = next_smooth(2 * dims[a]);
        }
        let plen = pdims.iter().product();
        let mut planner = FftPlanner::new();
        let mut forward = Vec::new();
        let mut inverse = Vec::new();
        for &p in &pdims {
            if p > 1 {
                forward.push(Some(planner.plan_fft_forward(p)));
                inverse.push(Some(planner.plan_fft_inverse(p)));
            } else {
                forward.push(None);
                inverse.push(None);
            }
        }
        let mut e = Self {
            grid: *grid,
            dims,
            pdims,
            plen,
            forward,
            inverse,
            radius: Vec::new(),
        };
        let h = grid.h();
        let radius = (0..plen)
            .into_par_iter()
            .map(|k| match e.offset(k) {
                Some(o) => h * ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt(),
                None => f64::INFINITY,
            })
            .collect();
        e.radius = radius;
        e
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[cfg(test)]
    pub fn padded_len(&self) -> usize {
        self.plen
    }

    fn split_index(&self, k: usize) -> [usize; 3] {
        let p = self.pdims;
        [k / (p[1] * p[2]), (k / p[2]) % p[1], k % p[2]]
    }

    /// Signed grid offset stored at padded index `k`, if it is reachable.
    pub fn offset(&self, k: usize) -> Option<[i64; 3]> {
        let ijk = self.split_index(k);
        let mut o = [0i64; 3];
        for a in 0..3 {
            let (i, d, p) = (ijk[a], self.dims[a], self.pdims[a]);
            o[a] = if i < d {
                i as i64
            } else if i + d > p {
                i as i64 - p as i64
            } else {
                return None;
            };
        }
        Some(o)
    }

    /// Padded index holding grid offset `o`.
    pub fn padded_index(&self, o: [i64; 3]) -> Option<usize> {
        let mut k = 0;
        for a in 0..3 {
            let d = self.dims[a] as i64;
            if o[a].abs() >= d {
                return None;
            }
            let p = self.pdims[a] as i64;
            k = k * p as usize + o[a].rem_euclid(p) as usize;
        }
        Some(k)
    }

    /// Samples `f(offset) · h^n` at every reachable nonzero offset; the
    /// origin entry is left at zero. Returns one padded array per component.
    pub fn sample<F>(&self, m: usize, f: F) -> Vec<Vec<f64>>
    where
        F: Fn(&[f64; 3], &mut [f64]) + Sync,
    {
        let h = self.grid.h();
        let vol = self.grid.cell_volume();
        let mut packed = vec![0.0; self.plen * m];
        packed.par_chunks_mut(m).enumerate().for_each(|(k, out)| {
            if let Some(o) = self.offset(k) {
                if o != [0, 0, 0] {
                    let d = [o[0] as f64 * h, o[1] as f64 * h, o[2] as f64 * h];
                    f(&d, out);
                    out.iter_mut().for_each(|v| *v *= vol);
                }
            }
        });
        (0..m)
            .map(|c| (0..self.plen).map(|k| packed[k * m + c]).collect())
            .collect()
    }

    /// Physical offset of padded index `k` (zero for unreachable entries).
    pub fn offset_vector(&self, k: usize) -> [f64; 3] {
        let h = self.grid.h();
        match self.offset(k) {
            Some(o) => [o[0] as f64 * h, o[1] as f64 * h, o[2] as f64 * h],
            None => [0.0; 3],
        }
    }

    fn weights(&self, t: f64, policy: &TruncationPolicy, family: WeightFamily) -> Vec<f64> {
        let n = self.grid.n();
        let h = self.grid.h();
        (0..self.plen)
            .into_par_iter()
            .map(|k| {
                let r = self.radius[k];
                if r.is_infinite() {
                    0.0
                } else {
                    policy.family_weight(family, &self.offset_vector(k), r, n, h, t)
                }
            })
            .collect()
    }

    fn build_kernels(
        &self,
        sw: &Sweep,
        cutoff: Cutoff,
        policy: &TruncationPolicy,
    ) -> Vec<Vec<f64>> {
        let family = |k: usize| sw.families.get(k).copied().unwrap_or(WeightFamily::Volume);
        let mut cache: Vec<(WeightFamily, Vec<f64>)> = Vec::new();
        if let Cutoff::At(t) = cutoff {
            for k in 0..sw.kernels.len() {
                if !cache.iter().any(|(f, _)| *f == family(k)) {
                    cache.push((family(k), self.weights(t, policy, family(k))));
                }
            }
        }
        sw.kernels
            .iter()
            .enumerate()
            .map(|(ki, base)| {
                let w = cache.iter().find(|(f, _)| *f == family(ki)).map(|(_, w)| w);
                let mut out = match w {
                    Some(w) => base.par_iter().zip(w).map(|(a, b)| a * b).collect(),
                    None => base.clone(),
                };
                if let Some(extra) = sw.extra {
                    extra(cutoff, ki, &mut out);
                }
                out
            })
            .collect()
    }

    /// In-place N-d transform over the padded array.
    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plans = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        for (axis, plan) in plans.iter().enumerate() {
            let Some(plan) = plan else { continue };
            let len = self.pdims[axis];
            let stride: usize = self.pdims[axis + 1..].iter().product();
            if stride == 1 {
                data.par_chunks_mut(len).for_each_init(
                    || vec![Complex64::default(); plan.get_inplace_scratch_len()],
                    |scratch, line| plan.process_with_scratch(line, scratch),
                );
                continue;
            }
            let block = len * stride;
            let mut lines = vec![Complex64::default(); data.len()];
            {
                let src = &*data;
                lines.par_chunks_mut(len).enumerate().for_each_init(
                    || vec![Complex64::default(); plan.get_inplace_scratch_len()],
                    |scratch, (l, line)| {
                        let (outer, inner) = (l / stride, l % stride);
                        let base = outer * block + inner;
                        for (k, v) in line.iter_mut().enumerate() {
                            *v = src[base + k * stride];
                        }
                        plan.process_with_scratch(line, scratch);
                    },
                );
            }
            data.par_chunks_mut(block)
                .enumerate()
                .for_each(|(outer, chunk)| {
                    for inner in 0..stride {
                        let line = &lines[(outer * stride + inner) * len..][..len];
                        for (k, v) in line.iter().enumerate() {
                            chunk[k * stride + inner] = *v;
                        }
                    }
                });
        }
    }

    fn neg_index(&self, k: usize) -> usize {
        let ijk = self.split_index(k);
        let p = self.pdims;
        let neg = |i: usize, p: usize| (p - i) % p;
        (neg(ijk[0], p[0]) * p[1] + neg(ijk[1], p[1])) * p[2] + neg(ijk[2], p[2])
    }

    /// Spectra of two real padded signals from one complex transform.
    fn real_pair_spectra(
        &self,
        mut z: Vec<Complex64>,
        second: bool,
    ) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
        self.transform(&mut z, false);
        if !second {
            return (z, None);
        }
        let (a, b): (Vec<_>, Vec<_>) = (0..self.plen)
            .into_par_iter()
            .map(|k| {
                let zk = z[k];
                let zn = z[self.neg_index(k)].conj();
                let a = (zk + zn) * 0.5;
                let d = (zk - zn) * 0.5;
                // d / i
                (a, Complex64::new(d.im, -d.re))
            })
            .unzip();
        (a, Some(b))
    }

    fn spectra_of<F>(&self, count: usize, fill: F) -> Vec<Vec<Complex64>>
    where
        F: Fn(usize, &mut [Complex64], bool) + Sync,
    {
        let mut out = Vec::with_capacity(count);
        let mut i = 0;
        while i < count {
            let pair = i + 1 < count;
            let mut z = vec![Complex64::default(); self.plen];
            fill(i, &mut z, false);
            if pair {
                fill(i + 1, &mut z, true);
            }
            let (a, b) = self.real_pair_spectra(z, pair);
            out.push(a);
            out.extend(b);
            i += 2;
        }
        out
    }

    fn grid_to_padded(&self, k: usize) -> usize {
        let d = self.dims;
        let p = self.pdims;
        let (i0, i1, i2) = (k / (d[1] * d[2]), (k / d[2]) % d[1], k % d[2]);
        (i0 * p[1] + i1) * p[2] + i2
    }

    pub fn field_spectra(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        self.spectra_of(fields.len(), |i, z, imag| {
            for (k, v) in fields[i].iter().enumerate() {
                let slot = &mut z[self.grid_to_padded(k)];
                if imag {
                    slot.im = *v;
                } else {
                    slot.re = *v;
                }
            }
        })
    }

    fn kernel_spectra(&self, kernels: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        self.spectra_of(kernels.len(), |i, z, imag| {
            for (slot, v) in z.iter_mut().zip(&kernels[i]) {
                if imag {
                    slot.im = *v;
                } else {
                    slot.re = *v;
                }
            }
        })
    }

    /// Runs the sweep; `visit(step, outputs)` receives one grid-layout array
    /// per channel, in ladder order.
    pub fn sweep<V>(
        &self,
        fields: &[&[f64]],
        sw: &Sweep,
        cutoffs: &[Cutoff],
        policy: &TruncationPolicy,
        mut visit: V,
    ) where
        V: FnMut(usize, &[Vec<f64>]),
    {
        match policy.path {
            ConvolutionPath::Fft => self.sweep_fft(fields, sw, cutoffs, policy, &mut visit),
            ConvolutionPath::Direct => {
                for (step, cut) in cutoffs.iter().enumerate() {
                    let kernels = self.build_kernels(sw, *cut, policy);
                    let out: Vec<Vec<f64>> = sw
                        .channels
                        .iter()
                        .map(|terms| self.direct(fields, &kernels, terms))
                        .collect();
                    visit(step, &out);
                }
            }
        }
    }

    fn sweep_fft<V>(
        &self,
        fields: &[&[f64]],
        sw: &Sweep,
        cutoffs: &[Cutoff],
        policy: &TruncationPolicy,
        visit: &mut V,
    ) where
        V: FnMut(usize, &[Vec<f64>]),
    {
        let fspec = self.field_spectra(fields);
        let nc = sw.channels.len();
        let scale = 1.0 / self.plen as f64;
        let grid_len = self.grid.len();
        // signals are paired only within one step, so a step's values do not
        // depend on the rest of the ladder
        for (step, cut) in cutoffs.iter().enumerate() {
            let kspec = self.kernel_spectra(&self.build_kernels(sw, *cut, policy));
            let channel = |c: usize, k: usize| -> Complex64 {
                sw.channels[c]
                    .iter()
                    .map(|&(ki, fi)| fspec[fi][k] * kspec[ki][k])
                    .sum()
            };
            let mut outputs = vec![Vec::new(); nc];
            for first in (0..nc).step_by(2) {
                let second = (first + 1 < nc).then_some(first + 1);
                let mut y: Vec<Complex64> = (0..self.plen)
                    .into_par_iter()
                    .map(|k| {
                        let a = channel(first, k);
                        match second {
                            Some(c) => {
                                let v = channel(c, k);
                                Complex64::new(a.re - v.im, a.im + v.re)
                            }
                            None => a,
                        }
                    })
                    .collect();
                self.transform(&mut y, true);
                outputs[first] = (0..grid_len)
                    .map(|k| y[self.grid_to_padded(k)].re * scale)
                    .collect();
                if let Some(c) = second {
                    outputs[c] = (0..grid_len)
                        .map(|k| y[self.grid_to_padded(k)].im * scale)
                        .collect();
                }
            }
            visit(step, &outputs);
        }
    }

    /// Reference O(N²) evaluation of one channel with the same kernel table.
    fn direct(
        &self,
        fields: &[&[f64]],
        kernels: &[Vec<f64>],
        terms: &[(usize, usize)],
    ) -> Vec<f64> {
        let d = self.dims;
        let p = self.pdims;
        let wrap = |x: usize, z: usize, a: usize| (x + p[a] - z) % p[a];
        (0..self.grid.len())
            .into_par_iter()
            .map(|x| {
                let xi = [x / (d[1] * d[2]), (x / d[2]) % d[1], x % d[2]];
                let mut acc = 0.0;
                for &(ki, fi) in terms {
                    let (kern, f) = (&kernels[ki], fields[fi]);
                    let mut z = 0;
                    for z0 in 0..d[0] {
                        let k0 = wrap(xi[0], z0, 0) * p[1];
                        for z1 in 0..d[1] {
                            let k1 = (k0 + wrap(xi[1], z1, 1)) * p[2];
                            for z2 in 0..d[2] {
                                acc += f[z] * kern[k1 + wrap(xi[2], z2, 2)];
                                z += 1;
                            }
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::truncation::TruncationMode;

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(96), 96);
        assert_eq!(next_smooth(97), 100);
        assert_eq!(next_smooth(130), 135);
        assert_eq!(next_smooth(1), 1);
    }

    #[test]
    fn offsets_round_trip() {
        let g = Grid::new(3, &[16, 17, 18], 0.1).unwrap();
        let e = Engine::new(&g);
        for o in [[0, 0, 0], [15, -16, 17], [-15, 3, -17], [1, 1, 1]] {
            let k = e.padded_index(o).unwrap();
            assert_eq!(e.offset(k), Some(o));
        }
        assert!(e.padded_index([16, 0, 0]).is_none());
    }

    fn sweep_both(g: &Grid, policy: TruncationPolicy) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let e = Engine::new(g);
        let f1: Vec<f64> = (0..g.len())
            .map(|k| ((k * 7919) % 13) as f64 - 6.0)
            .collect();
        let f2: Vec<f64> = (0..g.len())
            .map(|k| ((k * 104_729) % 11) as f64 * 0.3)
            .collect();
        let kernels = e.sample(2, |d, out| {
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            out[0] = 1.0 / r;
            out[1] = d[0] / (r * r);
        });
        let channels = vec![vec![(0, 0)], vec![(1, 1)], vec![(0, 1), (1, 0)]];
        let sw = Sweep {
            kernels: &kernels,
            channels: &channels,
            families: &[],
            extra: None,
        };
        let cut = [
            Cutoff::At(g.h()),
            Cutoff::At(3.3 * g.h()),
            Cutoff::Untruncated,
        ];
        let run = |path| {
            let mut all = Vec::new();
            e.sweep(&[&f1, &f2], &sw, &cut, &policy.with_path(path), |_, out| {
                all.extend(out.iter().cloned())
            });
            all
        };
        (run(ConvolutionPath::Fft), run(ConvolutionPath::Direct))
    }

    #[test]
    fn fft_matches_direct_sums() {
        for (n, dims) in [(2usize, vec![16, 19]), (3, vec![16, 16, 17])] {
            let g = Grid::new(n, &dims, 0.25).unwrap();
            for mode in [
                TruncationMode::OverlapWeighted,
                TruncationMode::CenterIndicator,
            ] {
                let policy = TruncationPolicy {
                    mode,
                    ..TruncationPolicy::default()
                };
                let (fft, direct) = sweep_both(&g, policy);
                assert_eq!(fft.len(), 9);
                for (a, b) in fft.iter().zip(&direct) {
                    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    let err = a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0, f64::max);
                    assert!(err <= 1e-12 * scale, "{err} vs {scale}");
                }
            }
        }
    }

    #[test]
    fn sweep_is_thread_count_independent() {
        let g = Grid::new(2, &[20, 18], 0.2).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sweep_both(&g, TruncationPolicy::default()).0)
        };
        assert_eq!(run(1), run(4));
    }
}
