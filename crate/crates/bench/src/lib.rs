//! Fixtures shared by the benchmarks.

use maxpot_core::{sample_catalog, Field, Grid, Params};

/// A smooth random field on the centered box of half-width 2.
pub fn random_field(n: usize, res: usize) -> Field {
    let g = Grid::centered(n, res, 2.0).expect("bench grid");
    sample_catalog("random_bandlimited", &Params::new().with("seed", 1.0), &g).expect("bench field")
}

pub fn gaussian(n: usize, res: usize) -> Field {
    let g = Grid::centered(n, res, 2.0).expect("bench grid");
    sample_catalog("gaussian", &Params::new(), &g).expect("bench field")
}
