//! k-anonymity by uniform global recoding with bounded suppression.
//!
//! Every quasi-identifier has a generalization hierarchy from the exact value
//! (level 0) to full suppression `*` (top level). Candidate level vectors are
//! tried in order of total level, then lexicographically, and the first whose
//! residual equivalence classes smaller than `k` hold at most
//! `ceil(0.05 * n)` records wins; those records are suppressed.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::PreprocessConfig;
use crate::data::{Feature, FeatureKind, FeatureSchema, LabeledDataset, PrivacyRecord, Value};
use crate::error::{Error, Result};

pub const SUPPRESSION_FRACTION: f64 = 0.05;
pub const SUPPRESSED_TOKEN: &str = "*";

pub fn suppression_budget(n: usize) -> usize {
    (SUPPRESSION_FRACTION * n as f64).ceil() as usize
}

/// Levels strictly between exact and `*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HierarchyLevels {
    /// Buckets of the given widths, aligned at the feature minimum. Each
    /// width must be a multiple of the previous one.
    Numeric { widths: Vec<f64> },
    /// Each level maps every domain token to its group token.
    Categorical { levels: Vec<BTreeMap<String, String>> },
}

impl HierarchyLevels {
    /// Index of the `*` level.
    pub fn top(&self) -> usize {
        match self {
            HierarchyLevels::Numeric { widths } => widths.len() + 1,
            HierarchyLevels::Categorical { levels } => levels.len() + 1,
        }
    }

    /// Group tokens formed by masking trailing characters, e.g. `77001` at
    /// mask 1 becomes `7700*`.
    pub fn suffix_masking(domain: &[String], masks: &[usize]) -> Self {
        let levels = masks
            .iter()
            .map(|&m| {
                domain
                    .iter()
                    .map(|t| {
                        let keep = t.chars().count().saturating_sub(m);
                        let prefix: String = t.chars().take(keep).collect();
                        (t.clone(), format!("{prefix}{}", "*".repeat(m.min(t.chars().count()))))
                    })
                    .collect()
            })
            .collect();
        HierarchyLevels::Categorical { levels }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationHierarchy {
    /// Quasi-identifier name to its intermediate levels. Quasi-identifiers
    /// absent here have only the exact and `*` levels.
    pub features: BTreeMap<String, HierarchyLevels>,
}

impl GeneralizationHierarchy {
    /// Numeric quasi-identifiers get width-4 and width-12 buckets.
    pub fn default_for(schema: &FeatureSchema) -> Self {
        let features = schema
            .features
            .iter()
            .filter(|f| f.quasi_identifier && !f.is_categorical())
            .map(|f| (f.name.clone(), HierarchyLevels::Numeric { widths: vec![4.0, 12.0] }))
            .collect();
        GeneralizationHierarchy { features }
    }

    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        for (name, levels) in &self.features {
            let f = schema
                .feature(name)
                .ok_or_else(|| Error::ConfigInvalid(format!("hierarchy names unknown feature `{name}`")))?;
            let bad = |m: String| Err(Error::ConfigInvalid(format!("hierarchy for `{name}`: {m}")));
            match (&f.kind, levels) {
                (FeatureKind::Numeric { .. }, HierarchyLevels::Numeric { widths }) => {
                    let mut prev: Option<f64> = None;
                    for &w in widths {
                        if !(w > 0.0 && w.is_finite()) {
                            return bad(format!("width {w} must be positive"));
                        }
                        if let Some(p) = prev {
                            let ratio = w / p;
                            if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 {
                                return bad(format!("width {w} is not a multiple of {p}"));
                            }
                        }
                        prev = Some(w);
                    }
                }
                (FeatureKind::Categorical { domain }, HierarchyLevels::Categorical { levels }) => {
                    let mut prev: Option<&BTreeMap<String, String>> = None;
                    for (l, map) in levels.iter().enumerate() {
                        for t in domain {
                            if !map.contains_key(t) {
                                return bad(format!("level {} does not map `{t}`", l + 1));
                            }
                        }
                        if let Some(p) = prev {
                            // tokens grouped together one level down stay together
                            let mut up: HashMap<&str, &str> = HashMap::new();
                            for t in domain {
                                let lower = p[t].as_str();
                                let upper = map[t].as_str();
                                if let Some(seen) = up.insert(lower, upper) {
                                    if seen != upper {
                                        return bad(format!("level {} is not a coarsening of level {l}", l + 1));
                                    }
                                }
                            }
                        }
                        prev = Some(map);
                    }
                }
                _ => return bad("hierarchy kind does not match the feature kind".into()),
            }
        }
        Ok(())
    }

    fn levels_for(&self, f: &Feature) -> Option<&HierarchyLevels> {
        self.features.get(&f.name)
    }

    fn top_for(&self, f: &Feature) -> usize {
        self.levels_for(f).map_or(1, HierarchyLevels::top)
    }
}

/// Equivalence-class key of one generalized cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKey {
    Missing,
    Exact(String),
    Bucket(i64),
    Group(String),
    Suppressed,
}

fn exact_key(v: &Value) -> ClassKey {
    match v {
        Value::Cat(t) => ClassKey::Exact(t.clone()),
        Value::Num(x) => ClassKey::Exact(format!("{:x}", if *x == 0.0 { 0 } else { x.to_bits() })),
        Value::Missing => ClassKey::Missing,
    }
}

fn bucket(x: f64, min: f64, width: f64) -> i64 {
    ((x - min) / width).floor() as i64
}

/// Key of `v` generalized to `level`.
pub fn generalize_key(f: &Feature, levels: Option<&HierarchyLevels>, v: &Value, level: usize) -> ClassKey {
    let top = levels.map_or(1, HierarchyLevels::top);
    if v.is_missing() {
        return ClassKey::Missing;
    }
    if level == 0 {
        return exact_key(v);
    }
    if level >= top {
        return ClassKey::Suppressed;
    }
    match (levels, v, &f.kind) {
        (Some(HierarchyLevels::Numeric { widths }), Value::Num(x), FeatureKind::Numeric { min, .. }) => {
            ClassKey::Bucket(bucket(*x, *min, widths[level - 1]))
        }
        (Some(HierarchyLevels::Categorical { levels }), Value::Cat(t), _) => {
            ClassKey::Group(levels[level - 1][t].clone())
        }
        _ => ClassKey::Suppressed,
    }
}

/// Published value of `v` at `level`: bucket midpoints for numerics (range
/// midpoint at the top level), group tokens for categoricals.
fn generalize_value(f: &Feature, levels: Option<&HierarchyLevels>, v: &Value, level: usize) -> Value {
    if level == 0 || v.is_missing() {
        return v.clone();
    }
    let top = levels.map_or(1, HierarchyLevels::top);
    match (&f.kind, v) {
        (FeatureKind::Numeric { min, max, .. }, Value::Num(x)) => {
            if level >= top {
                return Value::Num((min + max) / 2.0);
            }
            let Some(HierarchyLevels::Numeric { widths }) = levels else { unreachable!() };
            let w = widths[level - 1];
            let lo = min + bucket(*x, *min, w) as f64 * w;
            Value::Num((lo + w / 2.0).min(*max))
        }
        (FeatureKind::Categorical { .. }, Value::Cat(t)) => {
            if level >= top {
                return Value::cat(SUPPRESSED_TOKEN);
            }
            let Some(HierarchyLevels::Categorical { levels }) = levels else { unreachable!() };
            Value::Cat(levels[level - 1][t].clone())
        }
        _ => v.clone(),
    }
}

/// Categorical domain after generalization to `level`, in first-seen order.
fn generalized_domain(domain: &[String], levels: Option<&HierarchyLevels>, level: usize) -> Vec<String> {
    let top = levels.map_or(1, HierarchyLevels::top);
    if level == 0 {
        return domain.to_vec();
    }
    if level >= top {
        return vec![SUPPRESSED_TOKEN.to_string()];
    }
    let Some(HierarchyLevels::Categorical { levels }) = levels else { unreachable!() };
    let mut out: Vec<String> = Vec::new();
    for t in domain {
        let g = &levels[level - 1][t];
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    out
}

/// Every level vector, ordered by total level then lexicographically.
pub fn candidate_vectors(tops: &[usize]) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = vec![Vec::new()];
    for &top in tops {
        all = all
            .into_iter()
            .flat_map(|prefix| {
                (0..=top).map(move |l| {
                    let mut v = prefix.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    all.sort_by(|a, b| a.iter().sum::<usize>().cmp(&b.iter().sum::<usize>()).then_with(|| a.cmp(b)));
    all
}

/// Outcome of a k-anonymization.
#[derive(Debug, Clone, PartialEq)]
pub struct Anonymized {
    pub dataset: LabeledDataset,
    pub suppressed_count: usize,
    /// Chosen level per quasi-identifier, in schema order.
    pub levels: Vec<usize>,
}

pub fn k_anonymize(
    ds: &LabeledDataset,
    hierarchy: &GeneralizationHierarchy,
    cfg: &PreprocessConfig,
) -> Result<(LabeledDataset, usize)> {
    k_anonymize_detailed(ds, hierarchy, cfg).map(|a| (a.dataset, a.suppressed_count))
}

pub fn k_anonymize_detailed(
    ds: &LabeledDataset,
    hierarchy: &GeneralizationHierarchy,
    cfg: &PreprocessConfig,
) -> Result<Anonymized> {
    let k = cfg.anonymity_k;
    if k == 0 {
        return Err(Error::ConfigInvalid("anonymity_k must be at least 1".into()));
    }
    let qi = ds.schema.quasi_identifier_indices();
    if qi.is_empty() {
        return Err(Error::NoQuasiIdentifiers);
    }
    hierarchy.validate(&ds.schema)?;
    let features: Vec<&Feature> = qi.iter().map(|&j| &ds.schema.features[j]).collect();
    let tops: Vec<usize> = features.iter().map(|f| hierarchy.top_for(f)).collect();
    let budget = suppression_budget(ds.len());

    let mut needed_at_top = 0;
    for vector in candidate_vectors(&tops) {
        let keys: Vec<Vec<ClassKey>> = ds
            .records
            .iter()
            .map(|r| {
                features
                    .iter()
                    .zip(&qi)
                    .zip(&vector)
                    .map(|((f, &j), &l)| generalize_key(f, hierarchy.levels_for(f), &r.values[j], l))
                    .collect()
            })
            .collect();
        let mut sizes: HashMap<&[ClassKey], usize> = HashMap::new();
        for key in &keys {
            *sizes.entry(key.as_slice()).or_default() += 1;
        }
        let suppressed: usize = sizes.values().filter(|&&s| s < k).sum();
        if vector == tops {
            needed_at_top = suppressed;
        }
        if suppressed > budget {
            continue;
        }

        let mut schema = ds.schema.clone();
        for ((f, &j), &l) in features.iter().zip(&qi).zip(&vector) {
            if let FeatureKind::Categorical { domain } = &f.kind {
                schema.features[j].kind = FeatureKind::Categorical {
                    domain: generalized_domain(domain, hierarchy.levels_for(f), l),
                };
            }
        }
        let records: Vec<PrivacyRecord> = ds
            .records
            .iter()
            .zip(&keys)
            .filter(|(_, key)| sizes[key.as_slice()] >= k)
            .map(|(r, _)| {
                let mut r = r.clone();
                for ((f, &j), &l) in features.iter().zip(&qi).zip(&vector) {
                    r.values[j] = generalize_value(f, hierarchy.levels_for(f), &r.values[j], l);
                }
                r
            })
            .collect();
        let dataset = LabeledDataset {
            schema,
            records,
            provenance: ds.provenance.clone(),
        };
        return Ok(Anonymized {
            dataset,
            suppressed_count: suppressed,
            levels: vector,
        });
    }
    Err(Error::AnonymizationInfeasible {
        k,
        needed: needed_at_top,
        budget,
    })
}
