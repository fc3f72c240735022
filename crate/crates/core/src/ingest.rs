//! CSV ingestion: group partitioning, one-hot encoding, group-wise
//! centering and standardization.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::error::Result;
use crate::model::{build_gram_set, Group, GroupedDataset};
use crate::solvers::SolverConfig;

/// Category name used for empty cells in a categorical column.
pub const MISSING_CATEGORY: &str = "<missing>";

/// Columns whose within-group variance is below this are centered only.
pub const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("group column `{0}` not found in header")]
    MissingGroupColumn(String),

    #[error("column `{0}` listed for dropping is not in the header")]
    UnknownDropColumn(String),

    #[error("invalid ingest configuration: {0}")]
    InvalidConfig(String),

    #[error("file has a header but no data rows")]
    NoRows,

    #[error("no feature columns remain after removing the group and dropped columns")]
    NoFeatures,

    #[error("line {line}: empty group label in column `{column}`")]
    EmptyGroupLabel { line: u64, column: String },

    #[error("column `{column}` has {found} categories, above the limit of {limit}")]
    Cardinality { column: String, found: usize, limit: usize },

    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    Unparseable { line: u64, column: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestConfig {
    pub group_column: String,
    /// Protected attributes removed before encoding.
    pub drop_columns: Vec<String>,
    pub standardize: bool,
    pub center: bool,
    pub one_hot_max_cardinality: usize,
}

impl IngestConfig {
    pub fn new(group_column: impl Into<String>) -> Self {
        Self {
            group_column: group_column.into(),
            drop_columns: Vec::new(),
            standardize: true,
            center: true,
            one_hot_max_cardinality: 64,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.drop_columns.contains(&self.group_column) {
            return Err(IngestError::InvalidConfig(format!(
                "group column `{}` cannot also be dropped",
                self.group_column
            )));
        }
        if self.one_hot_max_cardinality < 2 {
            return Err(IngestError::InvalidConfig("one_hot_max_cardinality must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub rows: usize,
    /// Eigenvalues of the group Gram above `1e-9 · s_i`.
    pub rank: usize,
}

/// Provenance and statistics of one run, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub input_path: String,
    pub ingest: IngestConfig,
    pub solver: Option<SolverConfig>,
    pub seed: Option<u64>,
    pub total_rows: usize,
    pub groups: Vec<GroupSummary>,
    pub feature_count: usize,
    pub feature_names: Vec<String>,
    pub variance_convention: &'static str,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

enum ColumnKind {
    Numeric,
    Categorical(Vec<String>),
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn category_of(cell: &str) -> &str {
    let t = cell.trim();
    if t.is_empty() {
        MISSING_CATEGORY
    } else {
        t
    }
}

/// Reads, partitions and preprocesses a CSV file.
///
/// A feature column is numeric when its first non-empty cell parses as a
/// finite number; any later cell that does not is an error. Other columns
/// are one-hot encoded in first-appearance order.
pub fn ingest(path: &Path, config: &IngestConfig) -> Result<(GroupedDataset, RunManifest)> {
    let started = std::time::Instant::now();
    config.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(IngestError::from)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(IngestError::from)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let group_idx = headers
        .iter()
        .position(|h| *h == config.group_column)
        .ok_or_else(|| IngestError::MissingGroupColumn(config.group_column.clone()))?;
    for d in &config.drop_columns {
        if !headers.contains(d) {
            return Err(IngestError::UnknownDropColumn(d.clone()).into());
        }
    }

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(IngestError::from)?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(IngestError::NoRows.into());
    }

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != group_idx && !config.drop_columns.contains(&headers[j]))
        .collect();
    if feature_cols.is_empty() {
        return Err(IngestError::NoFeatures.into());
    }

    let mut kinds = Vec::with_capacity(feature_cols.len());
    let mut feature_names = Vec::new();
    for &j in &feature_cols {
        let first = records.iter().map(|(_, r)| r[j].trim()).find(|c| !c.is_empty());
        if first.is_some_and(|c| parse_number(c).is_some()) {
            feature_names.push(headers[j].clone());
            kinds.push(ColumnKind::Numeric);
            continue;
        }
        let mut categories: Vec<String> = Vec::new();
        for (_, r) in &records {
            let c = category_of(&r[j]);
            if !categories.iter().any(|x| x == c) {
                categories.push(c.to_string());
            }
        }
        if categories.len() > config.one_hot_max_cardinality {
            return Err(IngestError::Cardinality {
                column: headers[j].clone(),
                found: categories.len(),
                limit: config.one_hot_max_cardinality,
            }
            .into());
        }
        feature_names.extend(categories.iter().map(|c| format!("{}={}", headers[j], c)));
        kinds.push(ColumnKind::Categorical(categories));
    }
    let n = feature_names.len();

    let mut labels: Vec<String> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut rows_by_group: Vec<Vec<f64>> = Vec::new();
    for (line, r) in &records {
        let label = r[group_idx].trim();
        if label.is_empty() {
            return Err(IngestError::EmptyGroupLabel {
                line: *line,
                column: config.group_column.clone(),
            }
            .into());
        }
        let g = *index_of.entry(label.to_string()).or_insert_with(|| {
            labels.push(label.to_string());
            rows_by_group.push(Vec::new());
            labels.len() - 1
        });
        let out = &mut rows_by_group[g];
        for (&j, kind) in feature_cols.iter().zip(&kinds) {
            match kind {
                ColumnKind::Numeric => {
                    let cell = &r[j];
                    let x = parse_number(cell).ok_or_else(|| IngestError::Unparseable {
                        line: *line,
                        column: headers[j].clone(),
                        value: cell.to_string(),
                    })?;
                    out.push(x);
                }
                ColumnKind::Categorical(categories) => {
                    let c = category_of(&r[j]);
                    out.extend(categories.iter().map(|x| if x == c { 1.0 } else { 0.0 }));
                }
            }
        }
    }

    let groups = labels
        .into_iter()
        .zip(rows_by_group)
        .map(|(label, flat)| Group {
            data: DMatrix::from_row_slice(flat.len() / n, n, &flat),
            label,
        })
        .collect();
    let mut dataset = GroupedDataset::new(groups, feature_names)?;
    standardize_groups(&mut dataset, config.center, config.standardize);

    let ranks = build_gram_set(&dataset).and_then(|gs| gs.estimated_ranks())?;
    let groups = dataset
        .groups()
        .iter()
        .zip(ranks)
        .map(|(g, rank)| GroupSummary {
            label: g.label.clone(),
            rows: g.data.nrows(),
            rank,
        })
        .collect();
    let mut timings = BTreeMap::new();
    timings.insert("ingest".to_string(), started.elapsed().as_secs_f64());
    let manifest = RunManifest {
        schema_version: 1,
        input_path: path.display().to_string(),
        ingest: config.clone(),
        solver: None,
        seed: None,
        total_rows: dataset.total_rows(),
        groups,
        feature_count: n,
        feature_names: dataset.feature_names().to_vec(),
        variance_convention: "population",
        timings,
    };
    Ok((dataset, manifest))
}

/// Per group and column: subtract the mean when `center`, divide by the
/// population standard deviation when `scale` and the variance is at least
/// [`MIN_VARIANCE`].
pub fn standardize_groups(dataset: &mut GroupedDataset, center: bool, scale: bool) {
    for g in dataset.groups_mut() {
        let m = g.data.nrows() as f64;
        for mut col in g.data.column_iter_mut() {
            let mean = col.sum() / m;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
            if center {
                col.add_scalar_mut(-mean);
            }
            if scale && var >= MIN_VARIANCE {
                col /= var.sqrt();
            }
        }
    }
}
