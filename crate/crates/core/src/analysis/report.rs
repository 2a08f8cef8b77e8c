use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Grid;
use crate::operators::RadiusLadder;

pub const CSV_HEADER: &str = "check,grid,ladder,max_residual,violation_fraction,pass";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n: usize,
    pub dims: Vec<usize>,
    pub h: f64,
    pub half_width: f64,
}

impl GridMeta {
    pub fn of(g: &Grid) -> Self {
        Self {
            n: g.n(),
            dims: g.dims().to_vec(),
            h: g.h(),
            half_width: g.half_width(0),
        }
    }

    fn label(&self) -> String {
        if self.dims.is_empty() {
            return format!("{}d:sphere", self.n);
        }
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        format!("{}d:{}:h={}", self.n, dims.join("x"), self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderMeta {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

impl LadderMeta {
    pub fn of(l: &RadiusLadder) -> Self {
        Self {
            t_min: l.t_min,
            t_max: l.t_max,
            count: l.len(),
        }
    }
}

/// One named residual, e.g. the error at one radius or one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub violation_fraction: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub grid: GridMeta,
    pub ladder: Option<LadderMeta>,
    pub samples: Vec<Sample>,
}

impl CheckReport {
    pub fn new(check: &str, grid: &Grid) -> Self {
        Self {
            check: check.to_string(),
            pass: false,
            max_residual: 0.0,
            mean_residual: 0.0,
            violation_fraction: 0.0,
            tolerances: BTreeMap::new(),
            grid: GridMeta::of(grid),
            ladder: None,
            samples: Vec::new(),
        }
    }

    /// A report for a check that involves no grid, such as a sphere
    /// quadrature identity.
    pub fn gridless(check: &str, n: usize) -> Self {
        Self {
            check: check.to_string(),
            pass: false,
            max_residual: 0.0,
            mean_residual: 0.0,
            violation_fraction: 0.0,
            tolerances: BTreeMap::new(),
            grid: GridMeta {
                n,
                dims: Vec::new(),
                h: 0.0,
                half_width: 0.0,
            },
            ladder: None,
            samples: Vec::new(),
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn push(&mut self, label: impl Into<String>, value: f64) {
        self.samples.push(Sample {
            label: label.into(),
            value,
        });
    }

    /// Value of the sample named `label`.
    pub fn sample(&self, label: &str) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.value)
    }

    /// Fills max and mean from the samples that carry `prefix`.
    pub(crate) fn summarize(&mut self, prefix: &str) {
        let vals: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.label.starts_with(prefix))
            .map(|s| s.value)
            .collect();
        self.max_residual = vals.iter().copied().fold(0.0, f64::max);
        self.mean_residual = if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn csv_row(&self) -> String {
        let ladder = match &self.ladder {
            Some(l) => format!("{}..{}/{}", l.t_min, l.t_max, l.count),
            None => "-".to_string(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.check,
            self.grid.label(),
            ladder,
            self.max_residual,
            self.violation_fraction,
            self.pass
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, reports: &[CheckReport]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// max |a - b| / max |b| over the nodes selected by `mask`.
pub(crate) fn relative_error(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for ((x, y), m) in a.iter().zip(b).zip(mask) {
        if *m {
            num = num.max((x - y).abs());
            den = den.max(y.abs());
        }
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

pub(crate) fn interior_mask(g: &Grid, layers: usize) -> Vec<bool> {
    (0..g.len())
        .map(|i| g.is_interior(g.unravel(i), layers))
        .collect()
}
