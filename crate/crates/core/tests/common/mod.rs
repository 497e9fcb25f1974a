//! Fixtures and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the library's algorithms; each
//! oracle recomputes its answer from first principles.

#![allow(dead_code)]

use std::collections::BTreeMap;

use privpref::data::{Feature, FeatureKind, FeatureSchema, LabeledDataset, PrivacyChoice, PrivacyRecord, Value};
use privpref::datagen::{default_config, generate, GeneratorConfig};
use privpref::models::MlpParams;
use privpref::rl::{Action, Environment};
use privpref::seed::Rng;
use rand::Rng as _;

pub fn generated(volume: usize, seed: u64) -> LabeledDataset {
    generate(&GeneratorConfig { volume, master_seed: seed, ..default_config() }).unwrap()
}

// ---------------------------------------------------------------------------
// naive Bayes

/// (social, Allow), (social, Allow), (finance, Deny), (social, Deny).
pub fn nb_fixture() -> LabeledDataset {
    use PrivacyChoice::*;
    let schema = FeatureSchema::new(vec![Feature::categorical("context", &["social", "finance"])]).unwrap();
    let rows = [("social", Allow), ("social", Allow), ("finance", Deny), ("social", Deny)];
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, (c, y))| PrivacyRecord::new(i as u64 + 1, vec![Value::cat(c)], Some(*y)))
        .collect();
    LabeledDataset::new(schema, records, "nb-fixture").unwrap()
}

/// Count-and-smooth posterior for categorical-only data, by direct tallies.
pub fn nb_oracle_posterior(train: &LabeledDataset, alpha: f64, query: &[&str]) -> [f64; 3] {
    let n = train.records.len() as f64;
    let mut joint = [0.0; 3];
    for (c, slot) in joint.iter_mut().enumerate() {
        let members: Vec<&PrivacyRecord> =
            train.records.iter().filter(|r| r.label.unwrap().index() == c).collect();
        let ny = members.len() as f64;
        let mut p = (ny + alpha) / (n + alpha * 3.0);
        for (j, token) in query.iter().enumerate() {
            let m = train.schema.features[j].domain().unwrap().len() as f64;
            let count = members.iter().filter(|r| r.values[j].as_cat() == Some(token)).count() as f64;
            p *= (count + alpha) / (ny + alpha * m);
        }
        *slot = p;
    }
    let z: f64 = joint.iter().sum();
    joint.map(|x| x / z)
}

// ---------------------------------------------------------------------------
// preprocessing

fn same_value(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => x == y,
        _ => a == b,
    }
}

/// Record ids kept by pairwise comparison against every earlier record.
pub fn dedup_oracle(ds: &LabeledDataset) -> Vec<u64> {
    let rs = &ds.records;
    let mut keep = Vec::new();
    for i in 0..rs.len() {
        let dup = (0..i).any(|j| {
            rs[i].label == rs[j].label && rs[i].values.iter().zip(&rs[j].values).all(|(a, b)| same_value(a, b))
        });
        if !dup {
            keep.push(rs[i].record_id);
        }
    }
    keep
}

fn oracle_distance(schema: &FeatureSchema, a: &PrivacyRecord, b: &PrivacyRecord) -> f64 {
    let mut d = 0.0;
    for (j, f) in schema.features.iter().enumerate() {
        match (&a.values[j], &b.values[j], &f.kind) {
            (Value::Cat(x), Value::Cat(y), _) => d += if x == y { 0.0 } else { 1.0 },
            (Value::Num(x), Value::Num(y), FeatureKind::Numeric { min, max, .. }) => d += (x - y).abs() / (max - min),
            _ => {}
        }
    }
    d
}

/// Full distance matrix, full sort of every donor list.
pub fn knn_oracle(ds: &LabeledDataset, k: usize) -> LabeledDataset {
    let n = ds.records.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| oracle_distance(&ds.schema, &ds.records[i], &ds.records[j])).collect())
        .collect();
    let mut out = ds.records.clone();
    for i in 0..n {
        for (j, f) in ds.schema.features.iter().enumerate() {
            if !ds.records[i].values[j].is_missing() {
                continue;
            }
            let mut donors: Vec<usize> = (0..n).filter(|&d| !ds.records[d].values[j].is_missing()).collect();
            donors.sort_by(|&a, &b| {
                dist[i][a]
                    .partial_cmp(&dist[i][b])
                    .unwrap()
                    .then(ds.records[a].record_id.cmp(&ds.records[b].record_id))
            });
            donors.truncate(k);
            out[i].values[j] = if f.is_categorical() {
                let mut votes: BTreeMap<String, usize> = BTreeMap::new();
                for &d in &donors {
                    *votes.entry(ds.records[d].values[j].as_cat().unwrap().to_string()).or_default() += 1;
                }
                let best = *votes.values().max().unwrap();
                Value::Cat(votes.into_iter().find(|(_, c)| *c == best).unwrap().0)
            } else {
                let mut sum = 0.0;
                for &d in &donors {
                    sum += ds.records[d].values[j].as_num().unwrap();
                }
                Value::Num(sum / donors.len() as f64)
            };
        }
    }
    ds.with_records(out)
}

/// Generalization of one quasi-identifier used by the k-anonymity oracle.
#[derive(Clone)]
pub enum OracleLevels {
    /// Bucket widths between exact and `*`.
    Numeric(Vec<f64>),
    /// Token maps between exact and `*`.
    Categorical(Vec<BTreeMap<String, String>>),
}

impl OracleLevels {
    fn top(&self) -> usize {
        match self {
            OracleLevels::Numeric(w) => w.len() + 1,
            OracleLevels::Categorical(m) => m.len() + 1,
        }
    }

    /// Published value at `level`.
    fn publish(&self, f: &Feature, v: &Value, level: usize) -> Value {
        if level == 0 || v.is_missing() {
            return v.clone();
        }
        match (self, v) {
            (OracleLevels::Numeric(widths), Value::Num(x)) => {
                let (min, max) = f.range().unwrap();
                if level == self.top() {
                    return Value::Num((min + max) / 2.0);
                }
                let w = widths[level - 1];
                let lo = min + ((x - min) / w).floor() * w;
                Value::Num((lo + w / 2.0).min(max))
            }
            (OracleLevels::Categorical(maps), Value::Cat(t)) => {
                if level == self.top() {
                    Value::cat("*")
                } else {
                    Value::Cat(maps[level - 1][t].clone())
                }
            }
            _ => unreachable!(),
        }
    }
}

fn tuple(ds: &LabeledDataset, r: &PrivacyRecord, qis: &[(usize, OracleLevels)], levels: &[usize]) -> Vec<Value> {
    qis.iter()
        .zip(levels)
        .map(|((j, h), &l)| h.publish(&ds.schema.features[*j], &r.values[*j], l))
        .collect()
}

fn tuples_equal(a: &[Value], b: &[Value]) -> bool {
    a.iter().zip(b).all(|(x, y)| same_value(x, y))
}

/// Exhaustive search over level vectors, smallest total first then
/// lexicographic; class sizes counted pairwise. Returns the kept record ids,
/// their published quasi-identifier tuples and the suppressed count.
pub fn kanon_oracle(
    ds: &LabeledDataset,
    qis: &[(usize, OracleLevels)],
    k: usize,
) -> Option<(Vec<u64>, Vec<Vec<Value>>, usize)> {
    let budget = (0.05 * ds.records.len() as f64).ceil() as usize;
    let mut vectors: Vec<Vec<usize>> = vec![vec![]];
    for (_, h) in qis {
        vectors = vectors
            .into_iter()
            .flat_map(|v| (0..=h.top()).map(move |l| [v.clone(), vec![l]].concat()))
            .collect();
    }
    vectors.sort_by_key(|v| (v.iter().sum::<usize>(), v.clone()));
    for v in vectors {
        let tuples: Vec<Vec<Value>> = ds.records.iter().map(|r| tuple(ds, r, qis, &v)).collect();
        let sizes: Vec<usize> = tuples
            .iter()
            .map(|t| tuples.iter().filter(|u| tuples_equal(t, u)).count())
            .collect();
        let suppressed = sizes.iter().filter(|&&s| s < k).count();
        if suppressed <= budget {
            let kept: Vec<usize> = (0..tuples.len()).filter(|&i| sizes[i] >= k).collect();
            return Some((
                kept.iter().map(|&i| ds.records[i].record_id).collect(),
                kept.iter().map(|&i| tuples[i].clone()).collect(),
                suppressed,
            ));
        }
    }
    None
}

/// Smallest equivalence class over the quasi-identifier columns, by direct
/// enumeration.
pub fn smallest_class(ds: &LabeledDataset) -> usize {
    let qi = ds.schema.quasi_identifier_indices();
    let key = |r: &PrivacyRecord| -> Vec<Value> { qi.iter().map(|&j| r.values[j].clone()).collect() };
    ds.records
        .iter()
        .map(|r| {
            let t = key(r);
            ds.records.iter().filter(|o| tuples_equal(&key(o), &t)).count()
        })
        .min()
        .unwrap_or(usize::MAX)
}

// ---------------------------------------------------------------------------
// reinforcement learning

/// Deterministic three-state chain. SetAllow moves right, SetDeny moves left,
/// SetAsk jumps to the start, Retain stays. Landing on the right end pays +1,
/// anything else -1. Episodes start in a uniformly drawn state.
pub struct ChainEnv;

pub const CHAIN_STATES: usize = 3;

pub fn chain_next(s: usize, a: Action) -> usize {
    match a {
        Action::Retain => s,
        Action::SetAllow => (s + 1).min(CHAIN_STATES - 1),
        Action::SetDeny => s.saturating_sub(1),
        Action::SetAsk => 0,
    }
}

pub fn chain_reward(s: usize, a: Action) -> f64 {
    if chain_next(s, a) == CHAIN_STATES - 1 {
        1.0
    } else {
        -1.0
    }
}

impl Environment for ChainEnv {
    fn num_states(&self) -> usize {
        CHAIN_STATES
    }

    fn reset(&mut self, rng: &mut Rng) -> usize {
        rng.random_range(0..CHAIN_STATES)
    }

    fn step(&mut self, state: usize, action: Action, _rng: &mut Rng) -> (usize, f64) {
        (chain_next(state, action), chain_reward(state, action))
    }
}

const ACTIONS: [Action; 4] = [Action::Retain, Action::SetAllow, Action::SetDeny, Action::SetAsk];

/// Q* of the chain by value iteration until the largest change is below `tol`.
pub fn chain_q_star(gamma: f64, tol: f64) -> Vec<[f64; 4]> {
    let mut q = vec![[0.0; 4]; CHAIN_STATES];
    loop {
        let mut next = q.clone();
        let mut delta: f64 = 0.0;
        for s in 0..CHAIN_STATES {
            for (i, &a) in ACTIONS.iter().enumerate() {
                let s2 = chain_next(s, a);
                let v = q[s2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                next[s][i] = chain_reward(s, a) + gamma * v;
                delta = delta.max((next[s][i] - q[s][i]).abs());
            }
        }
        q = next;
        if delta < tol {
            return q;
        }
    }
}

// ---------------------------------------------------------------------------
// perceptron

/// Central differences of `loss` in every parameter.
pub fn finite_difference(params: &MlpParams, step: f64, loss: impl Fn(&MlpParams) -> f64) -> Vec<f64> {
    let base = params.to_flat();
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut v = base.clone();
        v[i] = base[i] + step;
        probe.set_flat(&v);
        let up = loss(&probe);
        v[i] = base[i] - step;
        probe.set_flat(&v);
        let down = loss(&probe);
        out.push((up - down) / (2.0 * step));
    }
    out
}

/// `|a - b| / max(|a|, |b|, floor)`; the floor keeps exact zeros (dead ReLU
/// units) from dividing rounding noise by zero.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

// ---------------------------------------------------------------------------
// evaluation harness

/// Records labeled in blocks of `counts[c]` per class plus `unlabeled` at the
/// end, with ids scattered so label order and id order differ.
pub fn labeled_blocks(counts: [usize; 3], unlabeled: usize) -> LabeledDataset {
    let schema = FeatureSchema::new(vec![Feature::categorical("c", &["x"])]).unwrap();
    let mut labels: Vec<Option<PrivacyChoice>> = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(Some(PrivacyChoice::from_index(c)), n));
    }
    labels.extend(std::iter::repeat_n(None, unlabeled));
    let records = labels
        .into_iter()
        .enumerate()
        .map(|(i, y)| PrivacyRecord::new((i as u64 * 7919) % 100_003, vec![Value::cat("x")], y))
        .collect();
    LabeledDataset::new(schema, records, "blocks").unwrap()
}

pub fn group_of(r: &PrivacyRecord) -> usize {
    r.label.map_or(3, |l| l.index())
}

pub fn group_counts(ds: &LabeledDataset) -> [usize; 4] {
    let mut out = [0; 4];
    for r in &ds.records {
        out[group_of(r)] += 1;
    }
    out
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

/// Disjoint, covering, 80/10/10 sized, each label group within one record of
/// its share, input order kept, reproducible.
pub fn check_split(ds: &LabeledDataset, seed: u64) -> Result<(), String> {
    use privpref::eval::{make_split, SplitSpec};
    let n = ds.len();
    let spec = SplitSpec { seed, ..SplitSpec::default() };
    let (train, val, test) = make_split(ds, &spec).map_err(|e| e.to_string())?;

    let mut seen: Vec<u64> =
        train.records.iter().chain(&val.records).chain(&test.records).map(|r| r.record_id).collect();
    seen.sort_unstable();
    let mut all: Vec<u64> = ds.records.iter().map(|r| r.record_id).collect();
    all.sort_unstable();
    ensure!(seen == all, "parts do not partition the input");

    let tenth = (n as f64 * 0.1).round() as usize;
    ensure!(test.len() == tenth && val.len() == tenth, "sizes {}/{}/{} for n={n}", train.len(), val.len(), test.len());

    let whole = group_counts(ds);
    let (tr, va, te) = (group_counts(&train), group_counts(&val), group_counts(&test));
    for g in 0..4 {
        let size = whole[g] as f64;
        ensure!((te[g] as f64 - 0.1 * size).abs() <= 1.0, "test group {g}: {} of {size}", te[g]);
        ensure!((va[g] as f64 - 0.1 * size).abs() <= 1.0, "val group {g}: {} of {size}", va[g]);
        ensure!((tr[g] as f64 - 0.8 * size).abs() < 2.0, "train group {g}: {} of {size}", tr[g]);
    }

    let position: BTreeMap<u64, usize> = ds.records.iter().enumerate().map(|(i, r)| (r.record_id, i)).collect();
    for part in [&train, &val, &test] {
        let p: Vec<usize> = part.records.iter().map(|r| position[&r.record_id]).collect();
        ensure!(p.windows(2).all(|w| w[0] < w[1]), "part out of input order");
    }
    ensure!(make_split(ds, &spec).unwrap() == (train, val, test), "split not reproducible");
    Ok(())
}

/// Every record in one fold; fold sizes and per-group fold sizes differ by at
/// most one; reproducible.
pub fn check_kfold(ds: &LabeledDataset, k: usize, seed: u64) -> Result<(), String> {
    use privpref::eval::{fold_members, kfold};
    let assignment = kfold(ds, k, seed).map_err(|e| e.to_string())?;
    ensure!(assignment.len() == ds.len() && assignment.iter().all(|&f| f < k), "bad assignment");
    let folds = fold_members(&assignment, k);
    let covered: std::collections::BTreeSet<usize> = folds.iter().flatten().copied().collect();
    ensure!(covered.len() == ds.len(), "folds do not cover");
    ensure!(folds.iter().map(Vec::len).sum::<usize>() == ds.len(), "folds overlap");
    let spread = |v: &[usize]| v.iter().max().unwrap() - v.iter().min().unwrap();
    let lens: Vec<usize> = folds.iter().map(Vec::len).collect();
    ensure!(spread(&lens) <= 1, "fold sizes {lens:?}");
    for g in 0..4 {
        let per: Vec<usize> =
            folds.iter().map(|f| f.iter().filter(|&&i| group_of(&ds.records[i]) == g).count()).collect();
        ensure!(spread(&per) <= 1, "group {g} fold sizes {per:?}");
    }
    ensure!(kfold(ds, k, seed).unwrap() == assignment, "kfold not reproducible");
    Ok(())
}

/// Expands a row-major 3x3 count table into (truth, predicted) sequences.
pub fn confusion_sequences(cells: &[u64; 9]) -> (Vec<PrivacyChoice>, Vec<PrivacyChoice>) {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for (i, &n) in cells.iter().enumerate() {
        for _ in 0..n {
            truth.push(PrivacyChoice::from_index(i / 3));
            pred.push(PrivacyChoice::from_index(i % 3));
        }
    }
    (truth, pred)
}

/// Accuracy is the trace ratio, every rate lies in [0, 1], F1 sits between
/// precision and recall, and metrics ignore record order.
pub fn check_metric_identities(cells: &[u64; 9], perm_seed: u64) -> Result<(), String> {
    use privpref::eval::compute_metrics;
    use rand::seq::SliceRandom;
    let (truth, pred) = confusion_sequences(cells);
    let (m, cm) = compute_metrics(&truth, &pred).map_err(|e| e.to_string())?;
    let total: u64 = cells.iter().sum();
    let trace = cells[0] + cells[4] + cells[8];
    ensure!(cm.total() == total && cm.trace() == trace, "tallies differ");
    ensure!((m.accuracy - trace as f64 / total as f64).abs() < 1e-15, "accuracy {}", m.accuracy);
    ensure!(m.all_in_unit_interval(), "{m:?}");
    for c in 0..3 {
        let (p, r, f) = (cm.precision(c), cm.recall(c), cm.f1(c));
        ensure!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&r), "class {c}: p={p} r={r}");
        ensure!(f == 0.0 || (f <= p.max(r) + 1e-12 && f >= p.min(r) - 1e-12), "class {c}: f1 {f}");
        ensure!(cm.support(c) == cells[c * 3..c * 3 + 3].iter().sum::<u64>(), "support {c}");
    }
    let mut idx: Vec<usize> = (0..truth.len()).collect();
    idx.shuffle(&mut privpref::seed::stream(perm_seed, "perm", &[]));
    let t2: Vec<_> = idx.iter().map(|&i| truth[i]).collect();
    let p2: Vec<_> = idx.iter().map(|&i| pred[i]).collect();
    ensure!(compute_metrics(&t2, &p2).unwrap() == (m, cm), "order dependent");
    Ok(())
}
