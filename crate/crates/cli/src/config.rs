//! Run configuration: a TOML file with one table per concern, overlaid by
//! command-line flags, then resolved and validated before any compute.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use maxpot_core::analysis::{ProbeOperator, FAMILY_IDS, ORACLES};
use maxpot_core::operators::{ConvolutionPath, TruncationMode};
use maxpot_core::{sample_catalog, CatalogId, Grid, Params, SphereSymbol, TruncationPolicy};

use crate::error::CliError;

pub const CHECKS: [&str; 7] = [
    "representation",
    "zero_mean",
    "boundary_constants",
    "distributional",
    "domination",
    "gradient_bound",
    "spherical_consistency",
];

pub const APPLY_OPS: [&str; 11] = [
    "truncated_potential",
    "maximal_potential",
    "riesz_potential",
    "truncated_singular",
    "maximal_singular",
    "grad_truncated_potential",
    "grad_majorant",
    "surface_convolution",
    "spherical_average",
    "spherical_maximal",
    "spherical_via_gradient",
];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
    pub res: Option<usize>,
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub mode: Option<TruncationMode>,
    pub subsamples: Option<usize>,
    pub path: Option<ConvolutionPath>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    pub id: Option<String>,
    pub params: Option<Params>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplySection {
    pub op: Option<String>,
    pub t: Option<f64>,
    pub input: Option<PathBuf>,
    pub signed: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub checks: Option<Vec<String>>,
    pub radii: Option<Vec<f64>>,
    /// ε-ladder for the distributional check, in multiples of h.
    pub eps_steps: Option<Vec<f64>>,
    pub refine_res: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub p: Option<f64>,
    pub family: Option<String>,
    pub op: Option<String>,
    pub batch: Option<usize>,
    pub refine_res: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub op: Option<String>,
    pub resolutions: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Everything optional; the same shape is filled from the file and from
/// the flags, and the flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub ladder: LadderSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub symbol: CatalogSection,
    #[serde(default)]
    pub function: CatalogSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub apply: ApplySection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub output: OutputSection,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )+
    };
}

impl PartialConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))
    }

    /// Fields set in `top` replace those of `self`.
    pub fn overlay(mut self, top: PartialConfig) -> Self {
        overlay!(self, top; seed);
        overlay!(self.grid, top.grid; n, res, half_width);
        overlay!(self.ladder, top.ladder; t_min, t_max, ratio);
        overlay!(self.truncation, top.truncation; mode, subsamples, path);
        overlay!(self.symbol, top.symbol; id, params);
        overlay!(self.function, top.function; id, params);
        overlay!(self.quadrature, top.quadrature; order);
        overlay!(self.apply, top.apply; op, t, input, signed);
        overlay!(self.verify, top.verify; checks, radii, eps_steps, refine_res);
        overlay!(self.probe, top.probe; p, family, op, batch, refine_res);
        overlay!(self.study, top.study; op, resolutions);
        overlay!(self.output, top.output; dir);
        self
    }
}

pub fn parse_mode(s: &str) -> Result<TruncationMode, String> {
    match s {
        "overlap_weighted" => Ok(TruncationMode::OverlapWeighted),
        "center_indicator" => Ok(TruncationMode::CenterIndicator),
        other => Err(format!(
            "`{other}` is not overlap_weighted or center_indicator"
        )),
    }
}

pub fn parse_path(s: &str) -> Result<ConvolutionPath, String> {
    match s {
        "fft" => Ok(ConvolutionPath::Fft),
        "direct" => Ok(ConvolutionPath::Direct),
        other => Err(format!("`{other}` is not fft or direct")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogRef {
    pub id: String,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplyConfig {
    pub op: String,
    pub t: Option<f64>,
    pub signed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub checks: Vec<String>,
    pub radii: Vec<f64>,
    pub eps_steps: Vec<f64>,
    pub refine_res: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub p: f64,
    pub family: String,
    pub op: ProbeOperator,
    pub batch: usize,
    pub refine_res: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub op: String,
    pub function: String,
    pub resolutions: Vec<usize>,
}

/// The validated configuration of one run. Output locations are not
/// serialized, so reports from different directories compare equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub res: usize,
    pub half_width: f64,
    pub h: f64,
    pub seed: u64,
    pub ladder: LadderConfig,
    pub truncation: TruncationPolicy,
    pub quad_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<CatalogRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<CatalogRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apply: Option<ApplyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub input: Option<PathBuf>,
    /// The quadrature order was given explicitly rather than defaulted.
    #[serde(skip)]
    pub quad_order_set: bool,
    #[serde(skip)]
    ladder_set: LadderSection,
}

fn usage(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{key}: {reason}"))
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(key, format!("{v} must be positive")))
    }
}

fn default_res(n: usize) -> usize {
    if n == 3 {
        48
    } else {
        64
    }
}

impl RunConfig {
    pub fn resolve(command: &str, c: PartialConfig) -> Result<Self, CliError> {
        let n = c.grid.n.unwrap_or(2);
        if n != 2 && n != 3 {
            return Err(usage("grid.n", format!("{n} is not 2 or 3")));
        }
        let res = c.grid.res.unwrap_or_else(|| default_res(n));
        let half_width = positive("grid.half_width", c.grid.half_width.unwrap_or(2.0))?;
        let grid = Grid::centered(n, res, half_width).map_err(|e| usage("grid", e))?;
        let seed = c.seed.unwrap_or(0);

        let mut truncation = TruncationPolicy::default();
        if let Some(m) = c.truncation.mode {
            truncation.mode = m;
        }
        if let Some(s) = c.truncation.subsamples {
            truncation.subsamples = s;
        }
        if let Some(p) = c.truncation.path {
            truncation.path = p;
        }
        truncation.validate().map_err(|e| usage("truncation", e))?;

        let quad_order = c
            .quadrature
            .order
            .unwrap_or(maxpot_core::sphere::default_order(n));
        maxpot_core::SphereQuadrature::new(n, quad_order)
            .map_err(|e| usage("quadrature.order", e))?;

        let symbol = match c.symbol.id {
            Some(id) => {
                let params = c.symbol.params.unwrap_or_default();
                SphereSymbol::from_catalog(&id, &params, n).map_err(|e| usage("symbol", e))?;
                Some(CatalogRef { id, params })
            }
            None if c.symbol.params.is_some() => {
                return Err(usage("symbol.params", "given without symbol.id"))
            }
            None => None,
        };
        let function = match c.function.id {
            Some(id) => Some(resolve_function(
                id,
                c.function.params.unwrap_or_default(),
                n,
                seed,
            )?),
            None if c.function.params.is_some() => {
                return Err(usage("function.params", "given without function.id"))
            }
            None => None,
        };

        let mut cfg = RunConfig {
            command: command.to_string(),
            n,
            res,
            half_width,
            h: grid.h(),
            seed,
            ladder: LadderConfig {
                t_min: 0.0,
                t_max: 0.0,
                ratio: 0.0,
            },
            truncation,
            quad_order,
            symbol,
            function,
            apply: None,
            verify: None,
            probe: None,
            study: None,
            out_dir: c.output.dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            input: None,
            quad_order_set: c.quadrature.order.is_some(),
            ladder_set: c.ladder.clone(),
        };
        cfg.ladder = cfg.ladder_for(&grid)?;

        match command {
            "apply" => {
                let op = c.apply.op.ok_or_else(|| usage("apply.op", "required"))?;
                if !APPLY_OPS.contains(&op.as_str()) {
                    return Err(usage(
                        "apply.op",
                        format!("`{op}` is not one of {APPLY_OPS:?}"),
                    ));
                }
                if let Some(t) = c.apply.t {
                    positive("apply.t", t)?;
                }
                if c.apply.input.is_none() && cfg.function.is_none() {
                    return Err(usage("apply", "needs an input field file or a function id"));
                }
                cfg.input = c.apply.input;
                cfg.apply = Some(ApplyConfig {
                    op,
                    t: c.apply.t,
                    signed: c.apply.signed.unwrap_or(false),
                });
            }
            "gen" if cfg.function.is_none() => return Err(usage("function.id", "required")),
            "verify" => cfg.verify = Some(resolve_verify(c.verify)?),
            "probe" => cfg.probe = Some(resolve_probe(c.probe)?),
            "study" => cfg.study = Some(resolve_study(c.study, cfg.function.as_ref())?),
            _ => {}
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Grid {
        Grid::centered(self.n, self.res, self.half_width).expect("validated at resolve")
    }

    /// The explicit quadrature order, if one was given.
    pub fn explicit_quad_order(&self) -> Option<usize> {
        self.quad_order_set.then_some(self.quad_order)
    }

    /// The configured ladder on `grid`; unset ends default to h and the box
    /// diameter.
    pub fn ladder_for(&self, grid: &Grid) -> Result<LadderConfig, CliError> {
        let l = &self.ladder_set;
        let t_min = positive("ladder.t_min", l.t_min.unwrap_or(grid.h()))?;
        let t_max = positive("ladder.t_max", l.t_max.unwrap_or(grid.diameter()))?;
        let ratio = l.ratio.unwrap_or(2f64.powf(0.25));
        maxpot_core::RadiusLadder::new(t_min, t_max, ratio).map_err(|e| usage("ladder", e))?;
        Ok(LadderConfig {
            t_min,
            t_max,
            ratio,
        })
    }
}

fn resolve_function(
    id: String,
    mut params: Params,
    n: usize,
    seed: u64,
) -> Result<CatalogRef, CliError> {
    let cid: CatalogId = id.parse().map_err(|e| usage("function.id", e))?;
    if cid == CatalogId::RandomBandlimited && params.get("seed").is_none() {
        params = params.with("seed", seed as f64);
    }
    // parameters are checked by sampling on a small grid
    let probe = Grid::centered(n, 16, 2.0).expect("small grid");
    sample_catalog(&id, &params, &probe).map_err(|e| usage("function", e))?;
    Ok(CatalogRef { id, params })
}

fn resolve_verify(v: VerifySection) -> Result<VerifyConfig, CliError> {
    let requested = v.checks.unwrap_or_else(|| vec!["all".to_string()]);
    if requested.is_empty() {
        return Err(usage("verify.checks", "no checks given"));
    }
    let mut checks = Vec::new();
    for c in requested {
        if c == "all" {
            checks.extend(CHECKS.iter().map(|s| s.to_string()));
        } else if CHECKS.contains(&c.as_str()) {
            checks.push(c);
        } else {
            return Err(usage(
                "verify.checks",
                format!("`{c}` is not one of {CHECKS:?} or all"),
            ));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    checks.retain(|c| seen.insert(c.clone()));
    let radii = v.radii.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    for r in &radii {
        positive("verify.radii", *r)?;
    }
    let eps_steps = v.eps_steps.unwrap_or_else(|| vec![8.0, 4.0, 2.0, 1.0]);
    for e in &eps_steps {
        positive("verify.eps_steps", *e)?;
    }
    Ok(VerifyConfig {
        checks,
        radii,
        eps_steps,
        refine_res: v.refine_res,
    })
}

fn resolve_probe(p: ProbeSection) -> Result<ProbeConfig, CliError> {
    let family = p.family.unwrap_or_else(|| "default".to_string());
    if !FAMILY_IDS.contains(&family.as_str()) {
        return Err(usage(
            "probe.family",
            format!("`{family}` is not one of {FAMILY_IDS:?}"),
        ));
    }
    let op: ProbeOperator =
        p.op.as_deref()
            .unwrap_or("maximal_potential")
            .parse()
            .map_err(|e| usage("probe.op", e))?;
    let batch = p.batch.unwrap_or(5);
    if batch == 0 {
        return Err(usage("probe.batch", "must be at least 1"));
    }
    Ok(ProbeConfig {
        p: p.p.unwrap_or(2.0),
        family,
        op,
        batch,
        refine_res: p.refine_res,
    })
}

fn resolve_study(s: StudySection, function: Option<&CatalogRef>) -> Result<StudyConfig, CliError> {
    let op = s.op.ok_or_else(|| usage("study.op", "required"))?;
    let function = match function {
        Some(f) => f.id.clone(),
        None => ORACLES
            .iter()
            .find(|(o, _)| *o == op)
            .map(|(_, f)| f.to_string())
            .ok_or_else(|| usage("study.op", format!("no oracle for `{op}`")))?,
    };
    if !ORACLES.contains(&(op.as_str(), function.as_str())) {
        return Err(usage(
            "study",
            format!("no oracle for {op} on {function}; known: {ORACLES:?}"),
        ));
    }
    let resolutions = s.resolutions.unwrap_or_else(|| vec![32, 64, 128]);
    if resolutions.is_empty() || resolutions.iter().any(|r| *r < 4) {
        return Err(usage(
            "study.resolutions",
            "need at least one resolution of 4 or more",
        ));
    }
    Ok(StudyConfig {
        op,
        function,
        resolutions,
    })
}
