use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Most frequent label; ties go to the smallest code.
pub fn modal_label(codes: &[i64]) -> Option<i64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &c in codes {
        *counts.entry(c).or_default() += 1;
    }
    // max_by_key keeps the last maximum, so iterate in descending code order
    counts.into_iter().rev().max_by_key(|&(_, n)| n).map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub code: i64,
    /// The label in task units.
    pub value: f64,
}
