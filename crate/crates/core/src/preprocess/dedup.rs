use std::collections::HashSet;

use crate::data::{LabeledDataset, PrivacyChoice, PrivacyRecord, Value};

#[derive(Debug, PartialEq, Eq, Hash)]
enum Cell<'a> {
    Cat(&'a str),
    Num(u64),
    Missing,
}

fn cell(v: &Value) -> Cell<'_> {
    match v {
        Value::Cat(t) => Cell::Cat(t),
        // fold -0.0 into 0.0
        Value::Num(x) => Cell::Num(if *x == 0.0 { 0 } else { x.to_bits() }),
        Value::Missing => Cell::Missing,
    }
}

type Key<'a> = (Vec<Cell<'a>>, Option<PrivacyChoice>);

fn key(r: &PrivacyRecord) -> Key<'_> {
    (r.values.iter().map(cell).collect(), r.label)
}

/// Keep the first record of every group equal on all feature values and the
/// label; `record_id` and `persona_id` do not take part. Order is preserved.
pub fn deduplicate(ds: &LabeledDataset) -> LabeledDataset {
    let mut seen: HashSet<Key<'_>> = HashSet::with_capacity(ds.len());
    let kept = ds
        .records
        .iter()
        .filter(|r| seen.insert(key(r)))
        .cloned()
        .collect();
    ds.with_records(kept)
}
