//! Entity analytics on top of a fitted model: inventor / company / molecule
//! pertinence by topic, dashboard statistics and multi-patent comparison.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::PatentRecord;
use crate::error::{Error, Result};
use crate::factorization::{ranked_terms, Assignments, TopicDistribution, TopicModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Inventor,
    Company,
    Molecule,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Inventor, EntityKind::Company, EntityKind::Molecule];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Inventor => "inventor",
            EntityKind::Company => "company",
            EntityKind::Molecule => "molecule",
        }
    }
}

/// Entity name -> patents it owns.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityMap {
    pub kind: EntityKind,
    pub owners: BTreeMap<String, BTreeSet<String>>,
}

impl EntityMap {
    pub fn new(kind: EntityKind) -> Self {
        EntityMap {
            kind,
            owners: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, entity: impl Into<String>, patent_id: impl Into<String>) {
        self.owners.entry(entity.into()).or_default().insert(patent_id.into());
    }

    /// Groups the corpus by inventor, company or molecule (drug). Blank
    /// names are skipped.
    pub fn from_corpus(kind: EntityKind, records: &[PatentRecord]) -> Self {
        let mut map = EntityMap::new(kind);
        for r in records {
            for name in entity_names(kind, r) {
                map.insert(name, r.id.clone());
            }
        }
        map
    }
}

fn entity_names(kind: EntityKind, r: &PatentRecord) -> Vec<&str> {
    let names: Vec<&str> = match kind {
        EntityKind::Inventor => r.inventors.iter().map(String::as_str).collect(),
        EntityKind::Company => vec![r.company.as_str()],
        EntityKind::Molecule => vec![r.drug.as_str()],
    };
    names.into_iter().map(str::trim).filter(|n| !n.is_empty()).collect()
}

/// Summed topic mass per entity (rows follow `entities`).
#[derive(Debug, Clone, PartialEq)]
pub struct RawPertinence {
    pub kind: EntityKind,
    pub entities: Vec<String>,
    pub raw: Array2<f64>,
}

/// Entrywise sum of each entity's document-topic rows. Entities owning no
/// patents are left out.
pub fn aggregate_entity_topics(h: &Array2<f64>, row_ids: &[String], map: &EntityMap) -> Result<RawPertinence> {
    let rows: HashMap<&str, usize> = row_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let owned: Vec<(&String, &BTreeSet<String>)> = map.owners.iter().filter(|(_, p)| !p.is_empty()).collect();
    let mut raw = Array2::zeros((owned.len(), h.ncols()));
    for (e, (_, patents)) in owned.iter().enumerate() {
        let mut row = raw.row_mut(e);
        for pid in patents.iter() {
            let r = *rows.get(pid.as_str()).ok_or_else(|| Error::UnknownPatent(pid.clone()))?;
            row += &h.row(r);
        }
    }
    Ok(RawPertinence {
        kind: map.kind,
        entities: owned.into_iter().map(|(name, _)| name.clone()).collect(),
        raw,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRows {
    pub values: Array2<f64>,
    /// Rows with zero total mass; left as zeros.
    pub zero_rows: Vec<bool>,
}

pub fn normalize_pertinence(raw: &Array2<f64>) -> Result<NormalizedRows> {
    if let Some(((row, col), &value)) = raw.indexed_iter().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeEntry { row, col, value });
    }
    let mut values = raw.clone();
    let mut zero_rows = Vec::with_capacity(raw.nrows());
    for mut row in values.rows_mut() {
        let sum = row.sum();
        if sum > 0.0 {
            row /= sum;
            zero_rows.push(false);
        } else {
            zero_rows.push(true);
        }
    }
    Ok(NormalizedRows { values, zero_rows })
}

/// Raw and row-normalized entity x topic pertinence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityPertinence {
    pub kind: EntityKind,
    pub entities: Vec<String>,
    pub raw: Vec<Vec<f64>>,
    pub normalized: Vec<Vec<f64>>,
    pub zero_rows: Vec<bool>,
    /// Patents per entity, aligned with `entities`.
    pub patents: Vec<Vec<String>>,
}

impl EntityPertinence {
    pub fn compute(h: &Array2<f64>, row_ids: &[String], map: &EntityMap) -> Result<Self> {
        let raw = aggregate_entity_topics(h, row_ids, map)?;
        let norm = normalize_pertinence(&raw.raw)?;
        let to_rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
        let patents = raw
            .entities
            .iter()
            .map(|e| map.owners[e].iter().cloned().collect())
            .collect();
        Ok(EntityPertinence {
            kind: raw.kind,
            raw: to_rows(&raw.raw),
            normalized: to_rows(&norm.values),
            zero_rows: norm.zero_rows,
            entities: raw.entities,
            patents,
        })
    }

    pub fn k(&self) -> usize {
        self.raw.first().map_or(0, Vec::len)
    }

    pub fn position(&self, entity: &str) -> Option<usize> {
        self.entities.binary_search_by(|e| e.as_str().cmp(entity)).ok()
    }
}

/// Allowed per-topic entity list sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerTopic(usize);

impl PerTopic {
    pub const ALLOWED: [usize; 4] = [5, 10, 15, 20];

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for PerTopic {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        if Self::ALLOWED.contains(&n) {
            Ok(PerTopic(n))
        } else {
            Err(Error::InvalidParameter(format!(
                "per-topic count must be one of {:?}, got {n}",
                Self::ALLOWED
            )))
        }
    }
}

/// Entities with the largest raw mass in `topic`, descending, ties by name.
pub fn top_entities_per_topic(pert: &EntityPertinence, topic: usize, n: PerTopic) -> Result<Vec<(String, f64)>> {
    if topic >= pert.k() {
        return Err(Error::OutOfRange {
            what: "topic",
            index: topic,
            len: pert.k(),
        });
    }
    let mut ranked: Vec<(&str, f64)> = pert
        .entities
        .iter()
        .zip(&pert.raw)
        .map(|(e, row)| (e.as_str(), row[topic]))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(b.0)));
    Ok(ranked.into_iter().take(n.get()).map(|(e, v)| (e.to_owned(), v)).collect())
}

pub const DEFAULT_SHARE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOverlap {
    pub first: String,
    pub second: String,
    pub topics: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonResult {
    pub patent_ids: Vec<String>,
    pub per_patent: Vec<TopicDistribution>,
    pub threshold: f64,
    /// Topics where every compared patent's share is at least `threshold`.
    pub shared_topics: BTreeSet<usize>,
    /// One entry per unordered pair, `first < second`, sorted.
    pub pairwise_shared: Vec<PairOverlap>,
}

fn above(d: &TopicDistribution, threshold: f64) -> BTreeSet<usize> {
    d.shares
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s >= threshold)
        .map(|(t, _)| t)
        .collect()
}

pub fn compare_patents(distributions: &[TopicDistribution], share_threshold: f64) -> Result<ComparisonResult> {
    if distributions.len() < 2 {
        return Err(Error::InvalidParameter("comparison needs at least 2 patents".into()));
    }
    if !(share_threshold > 0.0 && share_threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "share threshold must be in (0, 1), got {share_threshold}"
        )));
    }
    let mut seen = BTreeSet::new();
    for d in distributions {
        if !seen.insert(d.patent_id.as_str()) {
            return Err(Error::InvalidParameter(format!("duplicate patent id {:?}", d.patent_id)));
        }
    }

    let sets: Vec<BTreeSet<usize>> = distributions.iter().map(|d| above(d, share_threshold)).collect();
    let shared_topics = sets
        .iter()
        .skip(1)
        .fold(sets[0].clone(), |acc, s| acc.intersection(s).copied().collect());

    let mut pairwise_shared = Vec::new();
    for i in 0..distributions.len() {
        for j in i + 1..distributions.len() {
            let (a, b) = (&distributions[i].patent_id, &distributions[j].patent_id);
            let (first, second) = if a < b { (a, b) } else { (b, a) };
            pairwise_shared.push(PairOverlap {
                first: first.clone(),
                second: second.clone(),
                topics: sets[i].intersection(&sets[j]).copied().collect(),
            });
        }
    }
    pairwise_shared.sort_by(|x, y| (&x.first, &x.second).cmp(&(&y.first, &y.second)));

    Ok(ComparisonResult {
        patent_ids: distributions.iter().map(|d| d.patent_id.clone()).collect(),
        per_patent: distributions.to_vec(),
        threshold: share_threshold,
        shared_topics,
        pairwise_shared,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub patents: usize,
    pub companies: usize,
    pub molecules: usize,
    pub inventors: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecentPatent {
    pub id: String,
    pub title: String,
    pub company: String,
    pub year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DashboardStats {
    pub totals: Totals,
    pub patents_per_filed_year: BTreeMap<i32, usize>,
    pub patents_per_granted_year: BTreeMap<i32, usize>,
    pub patents_per_company: BTreeMap<String, usize>,
    pub patents_per_molecule: BTreeMap<String, usize>,
    pub patents_per_topic: Vec<usize>,
    /// Patents with no topic mass (counted under topic 0).
    pub zero_topic_patents: usize,
    pub recent_patents: Vec<RecentPatent>,
}

pub const RECENT_PATENTS: usize = 10;

pub fn corpus_stats(corpus: &[PatentRecord], assignments: &Assignments) -> DashboardStats {
    let distinct = |kind| {
        corpus
            .iter()
            .flat_map(|r| entity_names(kind, r))
            .collect::<BTreeSet<_>>()
            .len()
    };
    let histogram = |key: fn(&PatentRecord) -> Option<i32>| {
        let mut h = BTreeMap::new();
        for y in corpus.iter().filter_map(key) {
            *h.entry(y).or_insert(0) += 1;
        }
        h
    };
    let per_name = |kind| {
        let mut h = BTreeMap::new();
        for r in corpus {
            for name in entity_names(kind, r) {
                *h.entry(name.to_owned()).or_insert(0) += 1;
            }
        }
        h
    };

    let mut recent: Vec<&PatentRecord> = corpus.iter().collect();
    // newest first, undated last, then by id
    recent.sort_by(|a, b| {
        let ya = a.granted_year.or(a.filed_year);
        let yb = b.granted_year.or(b.filed_year);
        yb.cmp(&ya).then_with(|| a.id.cmp(&b.id))
    });

    DashboardStats {
        totals: Totals {
            patents: corpus.len(),
            companies: distinct(EntityKind::Company),
            molecules: distinct(EntityKind::Molecule),
            inventors: distinct(EntityKind::Inventor),
        },
        patents_per_filed_year: histogram(|r| r.filed_year),
        patents_per_granted_year: histogram(|r| r.granted_year),
        patents_per_company: per_name(EntityKind::Company),
        patents_per_molecule: per_name(EntityKind::Molecule),
        patents_per_topic: assignments.counts.clone(),
        zero_topic_patents: assignments.zero_rows.len(),
        recent_patents: recent
            .into_iter()
            .take(RECENT_PATENTS)
            .map(|r| RecentPatent {
                id: r.id.clone(),
                title: r.title.clone(),
                company: r.company.clone(),
                year: r.granted_year.or(r.filed_year),
            })
            .collect(),
    }
}

/// Terms with the largest column sums of W; zero-mass terms are omitted.
pub fn word_cloud(model: &TopicModel, n: usize) -> Result<Vec<(String, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter("word cloud size must be >= 1".into()));
    }
    let sums = model.w.sum_axis(ndarray::Axis(0));
    let mut cloud = ranked_terms(model.vocabulary(), sums.iter().copied(), n);
    cloud.retain(|&(_, w)| w > 0.0);
    Ok(cloud)
}
