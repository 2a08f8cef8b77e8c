use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::analysis::family::{FunctionFamily, Member};
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, sobolev_seminorm_pair, Field, Grid, NormSettings};
use crate::operators::{maximal_potential_batch, riesz_potential, RadiusLadder, TruncationPolicy};
use crate::sphere::{KernelSpec, SphereSymbol};

pub const PROBE_CSV_HEADER: &str = "function,params,norm_pstar,norm_grad_p,ratio";

/// Operators whose L^p → Ẇ^{1,p} ratio can be probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOperator {
    /// A*_Ω.
    MaximalPotential,
    /// I₁, bounded L^p → Ẇ^{1,p} for every 1 < p < n; a control.
    Riesz,
}

impl ProbeOperator {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeOperator::MaximalPotential => "maximal_potential",
            ProbeOperator::Riesz => "riesz",
        }
    }
}

impl fmt::Display for ProbeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProbeOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximal_potential" => Ok(ProbeOperator::MaximalPotential),
            "riesz" => Ok(ProbeOperator::Riesz),
            other => Err(invalid(
                "op",
                format!("`{other}` is not maximal_potential or riesz"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub op: ProbeOperator,
    pub symbol: SphereSymbol,
    pub policy: TruncationPolicy,
    /// Members per FFT sweep.
    pub batch: usize,
}

impl ProbeSettings {
    /// A*_Ω with Ω(z) = z₁.
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            op: ProbeOperator::MaximalPotential,
            symbol: SphereSymbol::coordinate(n, 0)?,
            policy: TruncationPolicy::default(),
            batch: 5,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub function: String,
    pub params: String,
    pub group: String,
    pub norm_f_p: f64,
    pub norm_pstar: f64,
    pub norm_grad_p: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub fine_dims: Vec<usize>,
    pub fine_family_max: f64,
    /// |fine max - coarse max| / coarse max.
    pub family_max_change: f64,
    /// Per-member relative change of the ratio.
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub op: ProbeOperator,
    pub symbol: String,
    pub n: usize,
    pub p: f64,
    pub p_star: f64,
    /// p ≤ n/(n-1): outside the range where boundedness is known.
    pub exploratory: bool,
    pub dims: Vec<usize>,
    pub h: f64,
    pub rows: Vec<ProbeRow>,
    pub family_max: f64,
    /// (max - min) / max of the ratio within each tagged group.
    pub group_spread: Vec<(String, f64)>,
    pub refinement: Option<Refinement>,
}

impl ProbeResult {
    pub fn spread(&self, group: &str) -> Option<f64> {
        self.group_spread
            .iter()
            .find(|(g, _)| g == group)
            .map(|(_, s)| *s)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{PROBE_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.function, r.params, r.norm_pstar, r.norm_grad_p, r.ratio
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("probe results serialize")
    }

    /// Records the change of every ratio and of the family max against
    /// `refined`, the same family on a finer grid.
    pub fn with_refinement(mut self, refined: &ProbeResult) -> Self {
        let deltas = self
            .rows
            .iter()
            .zip(&refined.rows)
            .map(|(a, b)| (b.ratio - a.ratio).abs() / a.ratio)
            .collect();
        self.refinement = Some(Refinement {
            fine_dims: refined.dims.clone(),
            fine_family_max: refined.family_max,
            family_max_change: (refined.family_max - self.family_max).abs() / self.family_max,
            deltas,
        });
        self
    }
}

fn apply(
    op: ProbeOperator,
    members: &[Field],
    s: &ProbeSettings,
    ladder: &RadiusLadder,
) -> Result<Vec<Field>> {
    match op {
        ProbeOperator::MaximalPotential => {
            let spec = KernelSpec::potential(s.symbol.clone());
            maximal_potential_batch(members, &spec, ladder, &s.policy)
        }
        ProbeOperator::Riesz => members
            .iter()
            .map(|f| riesz_potential(f, &s.policy))
            .collect(),
    }
}

fn spreads(rows: &[ProbeRow]) -> Vec<(String, f64)> {
    let mut groups: Vec<String> = rows.iter().map(|r| r.group.clone()).collect();
    groups.dedup();
    groups
        .into_iter()
        .map(|g| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.group == g)
                .map(|r| r.ratio)
                .collect();
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            (g, if hi > 0.0 { (hi - lo) / hi } else { 0.0 })
        })
        .collect()
}

/// ‖Tf‖_{p*} + ‖∇Tf‖_p over ‖f‖_p for every family member.
pub fn probe_operator_norm(
    family: &FunctionFamily,
    norms: &NormSettings,
    grid: &Grid,
    ladder: &RadiusLadder,
    s: &ProbeSettings,
) -> Result<ProbeResult> {
    let n = grid.n();
    if s.symbol.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "symbol in ℝ^{} on a grid in ℝ^{n}",
            s.symbol.n()
        )));
    }
    let checked = NormSettings::new(norms.p, n)?;
    if s.batch == 0 {
        return Err(invalid("batch", "must be at least 1"));
    }
    ladder.check_grid(grid)?;
    let members: Vec<Member> = family.members();
    let mut rows = Vec::with_capacity(members.len());
    for chunk in members.chunks(s.batch) {
        let fields: Vec<Field> = chunk
            .iter()
            .map(|m| m.sample(grid))
            .collect::<Result<_>>()?;
        let outs = apply(s.op, &fields, s, ladder)?;
        for ((m, f), out) in chunk.iter().zip(&fields).zip(&outs) {
            out.check_finite()?;
            let (a, b) = sobolev_seminorm_pair(out, &checked)?;
            let fp = lp_norm(f, checked.p);
            let ratio = (a + b) / fp;
            if !ratio.is_finite() {
                return Err(Error::NonFinite(format!("ratio for {} {}", m.id, m.params)));
            }
            info!("probe {} {}: ratio {ratio}", m.id, m.params);
            rows.push(ProbeRow {
                function: m.id.to_string(),
                params: m.params.to_string(),
                group: m.group.clone(),
                norm_f_p: fp,
                norm_pstar: a,
                norm_grad_p: b,
                ratio,
            });
        }
    }
    let family_max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let nf = n as f64;
    Ok(ProbeResult {
        op: s.op,
        symbol: s.symbol.to_string(),
        n,
        p: checked.p,
        p_star: checked.p_star,
        exploratory: checked.p <= nf / (nf - 1.0),
        dims: grid.dims().to_vec(),
        h: grid.h(),
        group_spread: spreads(&rows),
        rows,
        family_max,
        refinement: None,
    })
}

/// Runs the probe on `grid` and on `fine`, keeping the coarse table and
/// recording the change of every ratio and of the family max.
pub fn probe_with_refinement(
    family: &FunctionFamily,
    norms: &NormSettings,
    grid: &Grid,
    fine: &Grid,
    s: &ProbeSettings,
) -> Result<ProbeResult> {
    let coarse = probe_operator_norm(family, norms, grid, &RadiusLadder::for_grid(grid), s)?;
    let refined = probe_operator_norm(family, norms, fine, &RadiusLadder::for_grid(fine), s)?;
    Ok(coarse.with_refinement(&refined))
}
