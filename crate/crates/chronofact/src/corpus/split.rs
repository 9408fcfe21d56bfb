//! Label-stratified train/validation/test splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::corpus::ClaimInstance;
use crate::error::{Error, Result};
use crate::seed;

/// Split instances per (domain, label) cell with proportional allocation:
/// floor(n * ratio) to validation and test, remainder to train. Each cell is
/// shuffled with its own seed stream, so adding a domain does not reshuffle
/// the others. Output preserves input order within each part.
pub fn stratified_split(
    instances: Vec<ClaimInstance>,
    ratios: (f64, f64, f64),
    split_seed: u64,
) -> Result<(Vec<ClaimInstance>, Vec<ClaimInstance>, Vec<ClaimInstance>)> {
    let (r_train, r_val, r_test) = ratios;
    let sum = r_train + r_val + r_test;
    if !(r_train > 0.0 && r_val >= 0.0 && r_test >= 0.0 && (sum - 1.0).abs() < 1e-9) {
        return Err(Error::Config(format!("split ratios {ratios:?} must sum to 1")));
    }
    if instances.is_empty() {
        return Err(Error::EmptyInput("nothing to split".into()));
    }

    let mut cells: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        cells
            .entry((inst.domain.clone(), inst.label.clone()))
            .or_default()
            .push(i);
    }

    // 0 = train, 1 = val, 2 = test
    let mut assignment = vec![0u8; instances.len()];
    for ((domain, label), mut idxs) in cells {
        let n = idxs.len();
        let mut rng = seed::rng(split_seed, &format!("split/{domain}/{label}"));
        idxs.shuffle(&mut rng);
        let n_val = (n as f64 * r_val).floor() as usize;
        let n_test = (n as f64 * r_test).floor() as usize;
        for (pos, idx) in idxs.into_iter().enumerate() {
            assignment[idx] = if pos < n_val {
                1
            } else if pos < n_val + n_test {
                2
            } else {
                0
            };
        }
    }

    let mut parts: [Vec<ClaimInstance>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (inst, &part) in instances.into_iter().zip(&assignment) {
        parts[part as usize].push(inst);
    }
    let [train, val, test] = parts;
    Ok((train, val, test))
}
