use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use fairpc_core::metrics::{fair_report, standard_report, LossReport};
use fairpc_core::{
    build_gram_set, fit_with, ingest, oracle, FairBasis, FairPcError, FitOptions, GramSet, GroupedDataset,
    IngestConfig, RunManifest, SolverConfig,
};
use serde_json::{json, Value};

use crate::args::{FitArgs, Format, GapArgs, InputArgs, LossesArgs, OracleArgs, SolverArgs};
use crate::json;

/// Failure classes, mapped to exit codes by `main`.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Solver(String),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Output(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Solver(m) | CliError::Output(m) => m,
        }
    }
}

impl From<FairPcError> for CliError {
    fn from(e: FairPcError) -> Self {
        match e {
            FairPcError::Ingest(_)
            | FairPcError::DimensionMismatch { .. }
            | FairPcError::EmptyGroup(_)
            | FairPcError::NoGroups
            | FairPcError::FeatureNames { .. }
            | FairPcError::OutOfRange { .. }
            | FairPcError::GroupCount { .. }
            | FairPcError::InvalidConfig(_) => CliError::Input(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

const SCHEMA_VERSION: u32 = 1;

struct Loaded {
    dataset: GroupedDataset,
    gram_set: GramSet,
    manifest: RunManifest,
    timings: BTreeMap<String, f64>,
}

fn load(input: &InputArgs) -> CliResult<Loaded> {
    let config = IngestConfig {
        group_column: input.group_col.clone(),
        drop_columns: input.drop.clone(),
        standardize: !input.no_standardize,
        center: !input.no_center,
        one_hot_max_cardinality: input.max_categories,
    };
    let (dataset, manifest) = ingest(&input.input, &config)?;
    let mut timings = manifest.timings.clone();
    let started = Instant::now();
    let gram_set = build_gram_set(&dataset)?;
    timings.insert("gram".into(), started.elapsed().as_secs_f64());
    Ok(Loaded {
        dataset,
        gram_set,
        manifest,
        timings,
    })
}

fn solver_config(args: &SolverArgs) -> CliResult<SolverConfig> {
    let mut config = SolverConfig::default().with_solver(args.solver.into());
    if let Some(e) = args.epsilon {
        config.epsilon_fw = e;
    }
    if let Some(m) = args.max_iter {
        config.max_iter_fw = m;
    }
    config.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(config)
}

fn check_rank(rank: usize, loaded: &Loaded) -> CliResult<()> {
    let n = loaded.gram_set.n();
    if rank == 0 || rank > n {
        return Err(CliError::Input(format!(
            "--rank {rank} is outside 1..={n}; the input has {n} features after encoding"
        )));
    }
    Ok(())
}

fn timed_fit(loaded: &mut Loaded, rank: usize, config: &SolverConfig, complete: bool) -> CliResult<FairBasis> {
    let started = Instant::now();
    let basis = fit_with(&loaded.gram_set, rank, config, FitOptions { complete })?;
    loaded.timings.insert("fit".into(), started.elapsed().as_secs_f64());
    Ok(basis)
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    json::to_string(value).map_err(|e| CliError::Output(format!("cannot serialize: {e}")))
}

fn write_manifest(
    loaded: &Loaded,
    input: &InputArgs,
    config: Option<&SolverConfig>,
    seed: Option<u64>,
) -> CliResult<()> {
    let mut manifest = loaded.manifest.clone();
    manifest.schema_version = SCHEMA_VERSION;
    manifest.solver = config.cloned();
    manifest.seed = seed;
    manifest.timings = if input.no_timings {
        BTreeMap::new()
    } else {
        loaded.timings.clone()
    };
    let mut value = serde_json::to_value(&manifest).map_err(|e| CliError::Output(e.to_string()))?;
    if input.no_timings {
        if let Value::Object(map) = &mut value {
            map.remove("timings");
        }
    }
    write(&input.output, "manifest.json", &to_json(&value)?)
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let config = solver_config(&args.solver)?;
    let mut loaded = load(&args.input)?;
    check_rank(args.solver.rank, &loaded)?;
    let basis = timed_fit(&mut loaded, args.solver.rank, &config, args.complete)?;
    let names = loaded.dataset.feature_names().to_vec();
    let out = &args.input.output;

    let started = Instant::now();
    match args.format {
        Format::Json => {
            let rows: Vec<Vec<f64>> = basis.components().iter().map(|v| v.iter().copied().collect()).collect();
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "feature_names": names,
                "group_labels": loaded.dataset.labels(),
                "components": rows,
            });
            write(out, "components.json", &to_json(&doc)?)?;
        }
        Format::Csv => {
            let mut csv = String::from("component");
            for name in &names {
                csv.push(',');
                csv.push_str(&csv_field(name));
            }
            csv.push('\n');
            for (i, v) in basis.components().iter().enumerate() {
                write!(csv, "{}", i + 1).unwrap();
                for x in v.iter() {
                    write!(csv, ",{}", json::float(*x)).unwrap();
                }
                csv.push('\n');
            }
            write(out, "components.csv", &csv)?;
        }
    }

    let iterations: Vec<Value> = basis
        .per_iteration()
        .iter()
        .enumerate()
        .map(|(r, it)| {
            json!({
                "rank": r + 1,
                "solver": it.solver,
                "mu": it.mu,
                "primal": it.primal_value(),
                "dual": it.dual_value,
                "gap": it.duality_gap(),
                "h": it.h,
                "iterations": it.iterations,
                "converged": it.converged,
                "notes": it.notes,
            })
        })
        .collect();
    loaded.timings.insert("write".into(), started.elapsed().as_secs_f64());
    let mut diagnostics = json!({
        "schema_version": SCHEMA_VERSION,
        "requested_rank": basis.requested_rank(),
        "rank_deficient_at": basis.rank_deficient_at(),
        "group_labels": loaded.dataset.labels(),
        "per_iteration": iterations,
    });
    if !args.input.no_timings {
        diagnostics["timings"] = json!(loaded.timings);
    }
    write(out, "diagnostics.json", &to_json(&diagnostics)?)?;
    write_manifest(&loaded, &args.input, Some(&config), args.solver.seed)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn loss_rows(report: &LossReport, csv: &mut String) {
    for (g, label) in report.group_labels.iter().enumerate() {
        for (r, per_group) in report.per_rank.iter().enumerate() {
            let l = &per_group[g];
            let gap = report
                .duality_gaps
                .as_ref()
                .map(|gaps| json::float(gaps[r]))
                .unwrap_or_default();
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                report.method.as_str(),
                csv_field(label),
                r + 1,
                json::float(l.marginal),
                json::float(l.incremental),
                json::float(l.reconstruction),
                gap
            )
            .unwrap();
        }
    }
}

pub fn losses(args: &LossesArgs) -> CliResult<()> {
    let config = solver_config(&args.solver)?;
    let mut loaded = load(&args.input)?;
    let rank = args.solver.rank;
    check_rank(rank, &loaded)?;
    let basis = timed_fit(&mut loaded, rank, &config, false)?;

    let started = Instant::now();
    let labels = loaded.dataset.labels();
    let mut csv = String::from("method,group,rank,marginal,incremental,reconstruction,duality_gap\n");
    loss_rows(&fair_report(&loaded.gram_set, &labels, &basis)?, &mut csv);
    if args.baseline {
        loss_rows(&standard_report(&loaded.gram_set, &labels, rank)?, &mut csv);
    }
    loaded.timings.insert("report".into(), started.elapsed().as_secs_f64());
    write(&args.input.output, "losses.csv", &csv)?;
    write_manifest(&loaded, &args.input, Some(&config), args.solver.seed)
}

pub fn gap(args: &GapArgs) -> CliResult<()> {
    let config = solver_config(&args.solver)?;
    let mut loaded = load(&args.input)?;
    check_rank(args.solver.rank, &loaded)?;
    let basis = timed_fit(&mut loaded, args.solver.rank, &config, false)?;
    let mut csv = String::from("rank,primal,dual,gap\n");
    for (r, it) in basis.per_iteration().iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{}",
            r + 1,
            json::float(it.primal_value()),
            json::float(it.dual_value),
            json::float(it.duality_gap())
        )
        .unwrap();
    }
    write(&args.input.output, "gaps.csv", &csv)?;
    write_manifest(&loaded, &args.input, Some(&config), args.solver.seed)
}

pub fn oracle(args: &OracleArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let (z, v) = match args.grid {
        Some(steps) => oracle::grid_oracle_2d(&loaded.gram_set, steps)?,
        None => oracle::random_oracle(&loaded.gram_set, args.samples, args.refine, args.seed)?,
    };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "method": if args.grid.is_some() { "grid" } else { "random" },
        "samples": args.grid.unwrap_or(args.samples),
        "seed": args.grid.is_none().then_some(args.seed),
        "z": z,
        "v": v.iter().copied().collect::<Vec<f64>>(),
        "feature_names": loaded.dataset.feature_names(),
    });
    print!("{}", to_json(&doc)?);
    Ok(())
}
