//! Seeded MCAR masking over the continuous block.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::MixedDataset;
use crate::error::{Error, Result};

/// Generator and sampling scheme, recorded in reports.
pub const RNG_ID: &str = "rand_chacha::ChaCha8Rng/seed_from_u64 + SliceRandom::partial_shuffle (rand 0.9)";

const MAX_REDRAWS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskPlan {
    pub rate: f64,
    pub seed: u64,
    /// Continuous column indices; `None` means all of them.
    pub target_columns: Option<Vec<usize>>,
}

impl MaskPlan {
    pub fn new(rate: f64, seed: u64) -> Self {
        Self {
            rate,
            seed,
            target_columns: None,
        }
    }

    pub fn with_targets(mut self, cols: Vec<usize>) -> Self {
        self.target_columns = Some(cols);
        self
    }

    fn targets(&self, p: usize) -> Result<Vec<usize>> {
        if !(self.rate.is_finite() && (0.0..1.0).contains(&self.rate)) {
            return Err(Error::InvalidPlan(format!("rate {} outside [0, 1)", self.rate)));
        }
        let cols = match &self.target_columns {
            None => (0..p).collect(),
            Some(c) => c.clone(),
        };
        let mut seen = vec![false; p];
        for &c in &cols {
            if c >= p {
                return Err(Error::InvalidPlan(format!("target column {c} out of range (p = {p})")));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidPlan(format!("target column {c} listed twice")));
            }
        }
        Ok(cols)
    }

    /// Number of entries the plan masks on an `n`-row block.
    pub fn mask_count(&self, n: usize, targets: usize) -> usize {
        (self.rate * (n * targets) as f64).round() as usize
    }
}

/// Masks exactly `round(rate * N * |targets|)` target cells, drawn uniformly
/// without replacement. Draws that would leave a column with no observed
/// value are discarded and redrawn. Categorical and label columns are not
/// touched. Cells already missing may be drawn again.
pub fn apply_mcar(ds: &MixedDataset, plan: &MaskPlan) -> Result<MixedDataset> {
    let cont = ds.continuous();
    let (n, p) = (cont.nrows(), cont.ncols());
    let targets = plan.targets(p)?;
    let count = plan.mask_count(n, targets.len());
    if count == 0 {
        return Ok(ds.clone());
    }
    if count + targets.len() > n * targets.len() {
        return Err(Error::MaskInfeasible(format!(
            "masking {count} of {} cells leaves some column fully missing",
            n * targets.len()
        )));
    }

    // Candidate cells as column-major indices into the full block.
    let mut cells: Vec<usize> = targets
        .iter()
        .flat_map(|&c| (0..n).map(move |r| c * n + r))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    for _ in 0..MAX_REDRAWS {
        let (chosen, _) = cells.partial_shuffle(&mut rng, count);
        let mut hide = vec![false; n * p];
        for &idx in chosen.iter() {
            hide[idx] = true;
        }
        let fully_missing = targets
            .iter()
            .any(|&c| (0..n).all(|r| hide[c * n + r] || !cont.is_observed(r, c)));
        if !fully_missing {
            return ds.with_continuous(cont.hide(&hide));
        }
        log::debug!("mask draw left a column fully missing; redrawing");
    }
    Err(Error::MaskInfeasible(format!(
        "no admissible mask after {MAX_REDRAWS} draws"
    )))
}

/// Fraction of missing entries in the continuous block.
pub fn observed_rate(ds: &MixedDataset) -> f64 {
    let cont = ds.continuous();
    let total = cont.nrows() * cont.ncols();
    if total == 0 {
        return 0.0;
    }
    cont.missing_count() as f64 / total as f64
}

/// Independent per-run seed for `(seed, rate, repeat)` (SplitMix64 mixing).
pub fn derive_seed(seed: u64, rate: f64, repeat: u64) -> u64 {
    let mut h = splitmix(seed);
    h = splitmix(h ^ rate.to_bits());
    splitmix(h ^ repeat)
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
