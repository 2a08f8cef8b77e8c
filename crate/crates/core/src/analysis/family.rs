use serde::{Deserialize, Serialize};

use crate::catalog::{sample_catalog, CatalogId, Params};
use crate::error::{invalid, Result};
use crate::grid::{Field, Grid};

/// One catalog function over a list of parameter sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub id: CatalogId,
    /// Subfamily tag, e.g. `dilate`; members sharing a tag are compared.
    pub group: String,
    pub params: Vec<Params>,
}

/// Test functions enumerated in a fixed order. Random members without an
/// explicit seed draw `seed + k` for the k-th random member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionFamily {
    pub name: String,
    pub seed: u64,
    pub entries: Vec<FamilyEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub id: CatalogId,
    pub group: String,
    pub params: Params,
}

impl Member {
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        sample_catalog(self.id.as_str(), &self.params, grid)
    }
}

pub const FAMILY_IDS: [&str; 3] = ["default", "dilates", "exploratory"];

fn entry(id: CatalogId, group: &str, params: Vec<Params>) -> FamilyEntry {
    FamilyEntry {
        id,
        group: group.to_string(),
        params,
    }
}

fn dilates() -> FamilyEntry {
    let params = [0.6, 0.7, 0.8, 0.9, 1.0]
        .iter()
        .map(|s| Params::new().with("sigma", *s))
        .collect();
    entry(CatalogId::Gaussian, "dilate", params)
}

impl FunctionFamily {
    /// 20 members: five gaussian dilates, five shifted gaussians, five
    /// smooth bumps and five random band-limited fields with an envelope.
    pub fn default_family(n: usize, seed: u64) -> Self {
        let axis = |k: usize| ["c1", "c2", "c3"][k % n];
        let shifted = (0..5)
            .map(|k| {
                let off = if k % 2 == 0 { 0.5 } else { -0.4 };
                Params::new().with("sigma", 0.7).with(axis(k), off)
            })
            .collect();
        let bumps = [(1.0, 0.0), (1.5, 0.5), (2.0, 1.0), (1.2, 0.9), (2.5, 0.0)]
            .iter()
            .map(|(r, p)| Params::new().with("radius", *r).with("plateau", *p))
            .collect();
        let random = (0..5)
            .map(|_| Params::new().with("kmax", 2.0).with("envelope", 1.0))
            .collect();
        Self {
            name: "default".into(),
            seed,
            entries: vec![
                dilates(),
                entry(CatalogId::Gaussian, "shifted", shifted),
                entry(CatalogId::SmoothBump, "bump", bumps),
                entry(CatalogId::RandomBandlimited, "random", random),
            ],
        }
    }

    pub fn dilate_family() -> Self {
        Self {
            name: "dilates".into(),
            seed: 0,
            entries: vec![dilates()],
        }
    }

    /// Truncated powers |x|^{-a} on the unit ball with a = (n/p)(1 - 2^{-k}),
    /// k = 1..5, concentrating towards the edge of L^p.
    pub fn exploratory(n: usize, p: f64) -> Self {
        let edge = n as f64 / p;
        let params = (1..=5)
            .map(|k| {
                let a = edge * (1.0 - 0.5f64.powi(k));
                Params::new().with("a", a).with("radius", 1.0)
            })
            .collect();
        Self {
            name: "exploratory".into(),
            seed: 0,
            entries: vec![entry(CatalogId::TruncatedPower, "power", params)],
        }
    }

    pub fn by_name(name: &str, n: usize, p: f64, seed: u64) -> Result<Self> {
        match name {
            "default" => Ok(Self::default_family(n, seed)),
            "dilates" => Ok(Self::dilate_family()),
            "exploratory" => Ok(Self::exploratory(n, p)),
            other => Err(invalid(
                "family",
                format!("`{other}` is not one of {FAMILY_IDS:?}"),
            )),
        }
    }

    pub fn members(&self) -> Vec<Member> {
        let mut random = 0u64;
        let mut out = Vec::new();
        for e in &self.entries {
            for p in &e.params {
                let mut params = p.clone();
                if e.id == CatalogId::RandomBandlimited && params.get("seed").is_none() {
                    params = params.with("seed", (self.seed + random) as f64);
                    random += 1;
                }
                out.push(Member {
                    id: e.id,
                    group: e.group.clone(),
                    params,
                });
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(|e| e.params.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
