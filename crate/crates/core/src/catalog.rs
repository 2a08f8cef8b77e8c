//! Named test functions sampled onto a grid.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogId {
    Gaussian,
    BallIndicator,
    SmoothBump,
    TruncatedPower,
    HalfSpace,
    RandomBandlimited,
}

impl CatalogId {
    pub const ALL: [CatalogId; 6] = [
        CatalogId::Gaussian,
        CatalogId::BallIndicator,
        CatalogId::SmoothBump,
        CatalogId::TruncatedPower,
        CatalogId::HalfSpace,
        CatalogId::RandomBandlimited,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CatalogId::Gaussian => "gaussian",
            CatalogId::BallIndicator => "ball_indicator",
            CatalogId::SmoothBump => "smooth_bump",
            CatalogId::TruncatedPower => "truncated_power",
            CatalogId::HalfSpace => "half_space",
            CatalogId::RandomBandlimited => "random_bandlimited",
        }
    }

    /// Smooth enough for finite-difference gradients to converge.
    pub fn is_smooth(&self) -> bool {
        matches!(
            self,
            CatalogId::Gaussian | CatalogId::SmoothBump | CatalogId::RandomBandlimited
        )
    }

    fn allowed_params(&self) -> &'static [&'static str] {
        match self {
            CatalogId::Gaussian => &["sigma", "c1", "c2", "c3", "amplitude"],
            CatalogId::BallIndicator => &["radius", "c1", "c2", "c3"],
            CatalogId::SmoothBump => &["radius", "plateau", "c1", "c2", "c3", "amplitude"],
            CatalogId::TruncatedPower => &["a", "radius"],
            CatalogId::HalfSpace => &["axis", "offset"],
            CatalogId::RandomBandlimited => &["seed", "kmax", "envelope", "period"],
        }
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CatalogId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CatalogId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCatalog(s.to_string()))
    }
}

/// Named numeric parameters; missing keys take per-function defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params(pub BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    /// Parses `k=v,k=v`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Params::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| invalid(item, "expected key=value"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| invalid(k.trim(), format!("`{}` is not a number", v.trim())))?;
            out.0.insert(k.trim().to_string(), v);
        }
        Ok(out)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(";"))
    }
}

fn center(params: &Params) -> [f64; 3] {
    [
        params.get_or("c1", 0.0),
        params.get_or("c2", 0.0),
        params.get_or("c3", 0.0),
    ]
}

fn dist2(x: &[f64; 3], c: &[f64; 3]) -> f64 {
    (0..3).map(|k| (x[k] - c[k]).powi(2)).sum()
}

fn positive(params: &Params, key: &str, default: f64) -> Result<f64> {
    let v = params.get_or(key, default);
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(key, format!("{v} must be positive")));
    }
    Ok(v)
}

/// Smooth transition: 1 for `s >= 1`, 0 for `s <= 0`, C^∞ in between.
pub(crate) fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Samples catalog function `name` on `grid`.
pub fn sample_catalog(name: &str, params: &Params, grid: &Grid) -> Result<Field> {
    let id: CatalogId = name.parse()?;
    let allowed = id.allowed_params();
    if let Some(bad) = params.0.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(invalid(bad, format!("not a parameter of {id}")));
    }
    let n = grid.n();
    let g = *grid;
    let mut field = match id {
        CatalogId::Gaussian => {
            let sigma = positive(params, "sigma", 1.0)?;
            let amp = params.get_or("amplitude", 1.0);
            let c = center(params);
            Field::from_fn(g, move |x| amp * (-dist2(&x, &c) / (sigma * sigma)).exp())
        }
        CatalogId::BallIndicator => {
            let r = positive(params, "radius", 1.0)?;
            let c = center(params);
            let mut f = Field::from_fn(g, move |x| if dist2(&x, &c) < r * r { 1.0 } else { 0.0 });
            f.support_hint = Some(c.iter().map(|v| v * v).sum::<f64>().sqrt() + r);
            f
        }
        CatalogId::SmoothBump => {
            let r = positive(params, "radius", 1.0)?;
            let plateau = params.get_or("plateau", 0.0);
            if !(0.0..r).contains(&plateau) {
                return Err(invalid(
                    "plateau",
                    format!("{plateau} must lie in [0, radius)"),
                ));
            }
            let amp = params.get_or("amplitude", 1.0);
            let c = center(params);
            let mut f = Field::from_fn(g, move |x| {
                let d = dist2(&x, &c).sqrt();
                amp * smooth_step((r - d) / (r - plateau))
            });
            f.support_hint = Some(c.iter().map(|v| v * v).sum::<f64>().sqrt() + r);
            f
        }
        CatalogId::TruncatedPower => {
            let a = params.get_or("a", 0.5);
            if !(a > 0.0 && a < n as f64) {
                return Err(invalid("a", format!("{a} must lie in (0, {n})")));
            }
            let cutoff = params.get("radius");
            if let Some(r) = cutoff {
                if r <= 0.0 {
                    return Err(invalid("radius", format!("{r} must be positive")));
                }
            }
            let h = g.h();
            let mut f = Field::from_fn(g, move |x| {
                let d = dist2(&x, &[0.0; 3]).sqrt();
                if cutoff.is_some_and(|r| d >= r) {
                    0.0
                } else {
                    d.max(h).powf(-a)
                }
            });
            f.support_hint = cutoff;
            f
        }
        CatalogId::HalfSpace => {
            let axis = params.get_or("axis", 0.0);
            if axis.fract() != 0.0 || axis < 0.0 || axis as usize >= n {
                return Err(invalid(
                    "axis",
                    format!("{axis} is not an axis index below {n}"),
                ));
            }
            let axis = axis as usize;
            let offset = params.get_or("offset", 0.0);
            Field::from_fn(g, move |x| if x[axis] > offset { 1.0 } else { 0.0 })
        }
        CatalogId::RandomBandlimited => random_bandlimited(params, &g)?,
    };
    field.provenance = Some(id);
    Ok(field)
}

/// Random trigonometric polynomial with modes `|k|_∞ <= kmax`, optionally
/// damped by a gaussian envelope. Depends on the seed only, not on the grid.
fn random_bandlimited(params: &Params, g: &Grid) -> Result<Field> {
    let seed = params.get_or("seed", 0.0);
    if seed < 0.0 || seed.fract() != 0.0 {
        return Err(invalid(
            "seed",
            format!("{seed} is not a non-negative integer"),
        ));
    }
    let kmax = params.get_or("kmax", 3.0);
    if !(1.0..=16.0).contains(&kmax) || kmax.fract() != 0.0 {
        return Err(invalid(
            "kmax",
            format!("{kmax} must be an integer in [1, 16]"),
        ));
    }
    let envelope = params.get_or("envelope", 1.0);
    if envelope < 0.0 {
        return Err(invalid("envelope", "must be non-negative"));
    }
    let period = positive(params, "period", 4.0)?;
    let n = g.n();
    let kmax = kmax as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let mut modes: Vec<([f64; 3], f64, f64)> = Vec::new();
    let span = 2 * kmax + 1;
    let total = span.pow(n as u32);
    for code in 0..total {
        let mut k = [0i64; 3];
        let mut rest = code;
        for kk in k.iter_mut().take(n) {
            *kk = rest % span - kmax;
            rest /= span;
        }
        if k.iter().all(|&v| v == 0) {
            continue;
        }
        let k2: i64 = k.iter().map(|v| v * v).sum();
        let damp = 1.0 / (1.0 + k2 as f64);
        let a = rng.random_range(-1.0..1.0) * damp;
        let b = rng.random_range(-1.0..1.0) * damp;
        let w = 2.0 * std::f64::consts::PI / period;
        modes.push(([k[0] as f64 * w, k[1] as f64 * w, k[2] as f64 * w], a, b));
    }
    let f = Field::from_fn(*g, move |x| {
        let mut acc = 0.0;
        for (k, a, b) in &modes {
            let phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            acc += a * phase.cos() + b * phase.sin();
        }
        if envelope > 0.0 {
            acc *= (-dist2(&x, &[0.0; 3]) / (envelope * envelope)).exp();
        }
        acc
    });
    Ok(f)
}
