//! The four analysis subcommands. Each loads its inputs, runs, and writes
//! its outputs under `<output_dir>/<command>/`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use serde::Serialize;
use timesplit_chem::matrix::{group_pairs, histogram, GroupedValues, Histogram};
use timesplit_chem::paths::{hop_histograms, GroupedHops};
use timesplit_chem::{
    all_pairs_shortest_paths, correlation_distance_matrix, morgan_fingerprint, parse_smiles, pca_embed, pmfg_construct,
    standardize, tanimoto_matrix,
};
use timesplit_core::data::{
    filter_targets_by_positive_ratio, intersect_compounds, load_dates, load_feature_table, load_label_table, load_smiles,
    load_synonyms, DatasetBundle, FeatureTable, LabelTable, MonthDate, Registry, SynonymMap,
};
use timesplit_core::evaluator::{
    build_comparison_report, concatenate_datasets, run_grid, ComparisonReport, GridDataset, GridSpec, RunRecord,
    SplitSchedule,
};
use timesplit_core::filter::{apply_filter_pipeline, FilterReport};
use timesplit_core::importance::{permutation_importance, rank_features, ImportanceReport};
use timesplit_core::leakage::{compute_time_lags, load_approvals, load_publications, top_feature_lag_test, LeakageResult};
use timesplit_core::rng::derive_seed;
use timesplit_core::split::{random_split, time_split, SplitMethod, SplitPlan};

use crate::config::{Command, FixedPositives, FixedPositivesRule, LagScope, RunConfig};
use crate::error::{input, io, CliError, CliResult};

/// Name given to the concatenation of every feature table.
pub const ALL_DATASETS: &str = "all";

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::runtime(e)
}

/// Maps ids through the synonym table. Returns kept row positions and the
/// canonical ids; unmapped ids are dropped.
fn canonical_rows(ids: &[String], synonyms: Option<&SynonymMap>, what: &str) -> CliResult<(Vec<usize>, Vec<String>)> {
    let Some(syn) = synonyms else {
        return Ok(((0..ids.len()).collect(), ids.to_vec()));
    };
    let mut seen: HashMap<String, &str> = HashMap::new();
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (i, raw) in ids.iter().enumerate() {
        let Some(c) = syn.lookup(raw) else { continue };
        if let Some(prev) = seen.insert(c.to_string(), raw) {
            return Err(CliError::config(format!(
                "{what}: {prev:?} and {raw:?} both resolve to {c:?}"
            )));
        }
        rows.push(i);
        out.push(c.to_string());
    }
    Ok((rows, out))
}

fn rename_table(t: FeatureTable, synonyms: Option<&SynonymMap>) -> CliResult<FeatureTable> {
    if synonyms.is_none() {
        return Ok(t);
    }
    let (rows, ids) = canonical_rows(&t.compound_ids, synonyms, &format!("feature table {:?}", t.dataset_name))?;
    FeatureTable::new(t.dataset_name.clone(), ids, t.feature_names.clone(), t.values.select(Axis(0), &rows)).map_err(input)
}

fn rename_labels(l: LabelTable, synonyms: Option<&SynonymMap>) -> CliResult<LabelTable> {
    if synonyms.is_none() {
        return Ok(l);
    }
    let (rows, ids) = canonical_rows(&l.compound_ids, synonyms, "labels")?;
    LabelTable::new(ids, l.target_names.clone(), l.values.select(Axis(0), &rows)).map_err(input)
}

fn rename_pairs<V>(pairs: Vec<(String, V)>, synonyms: Option<&SynonymMap>, what: &str) -> CliResult<Vec<(String, V)>> {
    let ids: Vec<String> = pairs.iter().map(|(id, _)| id.clone()).collect();
    let (rows, canon) = canonical_rows(&ids, synonyms, what)?;
    let mut slots: Vec<Option<V>> = pairs.into_iter().map(|(_, v)| Some(v)).collect();
    Ok(rows
        .into_iter()
        .zip(canon)
        .map(|(r, id)| (id, slots[r].take().expect("each row once")))
        .collect())
}

/// Raw inputs after synonym mapping.
struct Inputs {
    synonyms: Option<SynonymMap>,
    tables: Vec<FeatureTable>,
    dates: Vec<(String, Option<MonthDate>)>,
    smiles: HashMap<String, String>,
}

fn load_inputs(cfg: &RunConfig, need_tables: bool) -> CliResult<Inputs> {
    let synonyms = cfg.inputs.synonyms.as_ref().map(load_synonyms).transpose().map_err(input)?;
    let syn = synonyms.as_ref();
    let mut tables = Vec::new();
    if need_tables {
        for (name, path) in &cfg.inputs.feature_tables {
            tables.push(rename_table(load_feature_table(path, name).map_err(input)?, syn)?);
        }
    }
    let dates = match &cfg.inputs.dates {
        Some(p) => rename_pairs(load_dates(p).map_err(input)?, syn, "dates")?,
        None => Vec::new(),
    };
    let smiles = match &cfg.inputs.smiles {
        Some(p) => {
            let mut v: Vec<(String, String)> = load_smiles(p).map_err(input)?.into_iter().collect();
            v.sort();
            rename_pairs(v, syn, "smiles")?.into_iter().collect()
        }
        None => HashMap::new(),
    };
    Ok(Inputs {
        synonyms,
        tables,
        dates,
        smiles,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InputReport {
    pub n_compounds: usize,
    pub targets_kept: Vec<String>,
    /// Targets outside the positive-ratio window.
    pub targets_dropped: Vec<String>,
    /// Per-table feature filtering; empty when filtering is off.
    pub filters: BTreeMap<String, FilterReport>,
}

/// Labelled, dated compounds shared by every table, with targets and
/// features filtered per the configuration.
pub fn load_bundle(cfg: &RunConfig) -> CliResult<(DatasetBundle, InputReport)> {
    let inputs = load_inputs(cfg, true)?;
    let labels_path = cfg.inputs.labels.as_ref().ok_or_else(|| CliError::config("inputs.labels is required"))?;
    let labels = rename_labels(load_label_table(labels_path).map_err(input)?, inputs.synonyms.as_ref())?;
    if let Some(names) = &cfg.targets.names {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| labels.target_index(n).is_none())
            .map(|n| format!("targets.names: no label column {n:?}"))
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Config(missing));
        }
    }
    let registry = Registry::from_parts(inputs.dates, &inputs.smiles).map_err(input)?;
    let mut bundle = intersect_compounds(&inputs.tables, &labels, &registry).map_err(input)?;

    let wanted: Vec<usize> = match &cfg.targets.names {
        Some(names) => names.iter().map(|n| bundle.labels.target_index(n).expect("checked")).collect(),
        None => (0..bundle.labels.target_names.len()).collect(),
    };
    let candidates = bundle.labels.select_targets(&wanted);
    let kept = filter_targets_by_positive_ratio(&candidates, cfg.targets.min_positive_ratio, cfg.targets.max_positive_ratio)
        .map_err(input)?;
    let targets_dropped = candidates
        .target_names
        .iter()
        .filter(|t| kept.target_index(t).is_none())
        .cloned()
        .collect();
    if kept.target_names.is_empty() {
        return Err(CliError::runtime(format!(
            "no target has a positive ratio in [{}, {}]",
            cfg.targets.min_positive_ratio, cfg.targets.max_positive_ratio
        )));
    }
    bundle.labels = kept;

    let mut filters = BTreeMap::new();
    if cfg.filter.enabled {
        for t in &mut bundle.tables {
            let (filtered, report) = apply_filter_pipeline(t, cfg.filter.cv_threshold, cfg.filter.r2_threshold)
                .map_err(|e| CliError::runtime(format!("dataset {:?}: {e}", t.dataset_name)))?;
            *t = filtered;
            filters.insert(t.dataset_name.clone(), report);
        }
    }
    let report = InputReport {
        n_compounds: bundle.len(),
        targets_kept: bundle.labels.target_names.clone(),
        targets_dropped,
        filters,
    };
    Ok((bundle, report))
}

fn command_dir(cfg: &RunConfig, name: &str) -> CliResult<PathBuf> {
    let dir = cfg.output_dir().join(name);
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    Ok(dir)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    std::fs::write(path, text + "\n").map_err(|e| io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io(path, e))
}

/// The configuration as run, without the output location.
fn write_effective_config(dir: &Path, cfg: &RunConfig) -> CliResult<()> {
    let mut c = cfg.clone();
    c.output_dir = None;
    write_json(&dir.join("effective_config.json"), &c)
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitPlans {
    pub time: Option<SplitPlan>,
    pub random: Vec<SplitPlan>,
    pub random_per_target: BTreeMap<String, Vec<SplitPlan>>,
}

/// Builds the split schedules the configuration asks for.
pub fn plan_splits(cfg: &RunConfig, bundle: &DatasetBundle) -> CliResult<SplitPlans> {
    let s = &cfg.split;
    let seed = cfg.seed();
    let time = s.threshold.map(|t| time_split(bundle, t)).transpose().map_err(runtime)?;
    let mut plans = SplitPlans {
        time: None,
        random: Vec::new(),
        random_per_target: BTreeMap::new(),
    };
    if s.methods.contains(&SplitMethod::Random) {
        let (n_train, n_test) = match (s.n_train, s.n_test, &time) {
            (Some(a), Some(b), _) => (a, b),
            (_, _, Some(t)) => (t.train_ids.len(), t.test_ids.len()),
            _ => return Err(CliError::config("split.threshold or split.n_train/n_test is required")),
        };
        match s.fixed_test_positives {
            None => {
                for r in 0..s.repetitions {
                    let plan = random_split(bundle, n_train, n_test, derive_seed(seed, &format!("random-split{r}")), None)
                        .map_err(runtime)?;
                    plans.random.push(plan);
                }
            }
            Some(fixed) => {
                for (j, target) in bundle.labels.target_names.iter().enumerate() {
                    let y = bundle.labels.target(j);
                    let count = match fixed {
                        FixedPositives::Count(c) => c,
                        FixedPositives::Rule(FixedPositivesRule::MatchTime) => {
                            let t = time.as_ref().ok_or_else(|| CliError::config("split.threshold is required"))?;
                            let test: BTreeSet<&str> = t.test_ids.iter().map(String::as_str).collect();
                            bundle
                                .compound_ids
                                .iter()
                                .zip(&y)
                                .filter(|(id, l)| test.contains(id.as_str()) && **l == Some(true))
                                .count()
                        }
                    };
                    let mut v = Vec::with_capacity(s.repetitions);
                    for r in 0..s.repetitions {
                        let seed = derive_seed(seed, &format!("random-split{r}|{target}"));
                        v.push(
                            random_split(bundle, n_train, n_test, seed, Some((count, &y)))
                                .map_err(|e| CliError::runtime(format!("target {target:?}: {e}")))?,
                        );
                    }
                    plans.random_per_target.insert(target.clone(), v);
                }
                plans.random = plans.random_per_target.values().next().cloned().unwrap_or_default();
            }
        }
    }
    if s.methods.contains(&SplitMethod::Time) {
        plans.time = time;
    }
    Ok(plans)
}

#[derive(Debug, Clone)]
pub struct EvaluateOutput {
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
    pub report: ComparisonReport,
}

pub fn evaluate(cfg: &RunConfig) -> CliResult<EvaluateOutput> {
    cfg.validate(Command::Evaluate)?;
    let (bundle, input_report) = load_bundle(cfg)?;
    let plans = plan_splits(cfg, &bundle)?;

    let mut schedules = Vec::new();
    for method in &cfg.split.methods {
        match method {
            SplitMethod::Time => schedules.push(SplitSchedule::fixed(plans.time.clone().expect("planned"))),
            SplitMethod::Random => {
                let mut s = SplitSchedule::per_repetition(SplitMethod::Random, plans.random.clone());
                s.per_target = plans.random_per_target.clone();
                schedules.push(s);
            }
        }
    }
    let mut spec = GridSpec::new(cfg.learners.clone(), bundle.labels.target_names.clone(), schedules, cfg.seed());
    spec.n_repetitions = cfg.split.repetitions;
    spec.inner_folds = cfg.split.inner_folds;
    spec.threshold = cfg.split.classification_threshold;
    spec.ensemble_across = cfg.ensemble_across_datasets && bundle.tables.len() > 1;
    let datasets: Vec<GridDataset> = bundle
        .tables
        .iter()
        .map(|t| GridDataset {
            name: t.dataset_name.clone(),
            table: t.clone(),
        })
        .collect();
    let records = run_grid(&datasets, &bundle.labels, &spec).map_err(runtime)?;
    let protein: BTreeSet<String> = cfg.protein_datasets.iter().cloned().collect();
    let report = build_comparison_report(&records, &protein).map_err(runtime)?;

    let dir = command_dir(cfg, "evaluate")?;
    write_with(&dir.join("records.jsonl"), |w| {
        for r in &records {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        Ok(())
    })?;
    write_json(&dir.join("comparison.json"), &report)?;
    write_with(&dir.join("comparison.csv"), |w| report.write_csv(w))?;
    write_json(&dir.join("splits.json"), &plans)?;
    write_json(&dir.join("inputs_report.json"), &input_report)?;
    write_effective_config(&dir, cfg)?;
    Ok(EvaluateOutput { dir, records, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct ImportanceOutput {
    pub dataset: String,
    pub target: String,
    pub learner: String,
    pub n_train: usize,
    pub n_test: usize,
    pub top: Vec<(String, f64)>,
    pub report: ImportanceReport,
}

fn importance_table(cfg: &RunConfig, bundle: &DatasetBundle) -> CliResult<FeatureTable> {
    match &cfg.importance.dataset {
        Some(name) => bundle
            .table(name)
            .cloned()
            .ok_or_else(|| CliError::config(format!("importance.dataset: no feature table named {name:?}"))),
        None => concatenate_datasets(&bundle.tables, ALL_DATASETS).map_err(runtime),
    }
}

fn compute_importance(cfg: &RunConfig) -> CliResult<ImportanceOutput> {
    let (bundle, _) = load_bundle(cfg)?;
    let im = &cfg.importance;
    let target = match &im.target {
        Some(t) => t.clone(),
        None => bundle.labels.target_names[0].clone(),
    };
    let j = bundle.labels.target_index(&target).ok_or_else(|| {
        CliError::config(format!(
            "importance.target {target:?} is not among the evaluated targets {:?}",
            bundle.labels.target_names
        ))
    })?;
    let table = importance_table(cfg, &bundle)?;
    let threshold = cfg.split.threshold.ok_or_else(|| CliError::config("split.threshold is required"))?;
    let plan = time_split(&bundle, threshold).map_err(runtime)?;
    let y = bundle.labels.target(j);
    let rows = table.row_index();
    let label_rows: HashMap<&str, usize> =
        bundle.compound_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let side = |ids: &[String]| -> (Array2<f64>, Vec<bool>) {
        let (idx, labels): (Vec<usize>, Vec<bool>) = ids
            .iter()
            .filter_map(|id| y[label_rows[id.as_str()]].map(|l| (rows[id.as_str()], l)))
            .unzip();
        (table.values.select(Axis(0), &idx), labels)
    };
    let (x_train, y_train) = side(&plan.train_ids);
    let (x_test, y_test) = side(&plan.test_ids);
    let report = permutation_importance(
        &im.learner,
        &table.feature_names,
        x_train.view(),
        &y_train,
        x_test.view(),
        &y_test,
        im.folds,
        im.shuffles,
        derive_seed(cfg.seed(), "importance"),
    )
    .map_err(runtime)?;
    Ok(ImportanceOutput {
        dataset: table.dataset_name.clone(),
        target,
        learner: im.learner.label(),
        n_train: y_train.len(),
        n_test: y_test.len(),
        top: rank_features(&report, im.top_n),
        report,
    })
}

pub fn importance(cfg: &RunConfig) -> CliResult<(PathBuf, ImportanceOutput)> {
    cfg.validate(Command::Importance)?;
    let out = compute_importance(cfg)?;
    let dir = command_dir(cfg, "importance")?;
    write_with(&dir.join("importance.csv"), |w| out.report.write_csv(w))?;
    write_json(&dir.join("importance.json"), &out)?;
    write_effective_config(&dir, cfg)?;
    Ok((dir, out))
}

/// `feature,importance` rows; the order is by descending importance, ties
/// keeping file order.
pub fn load_ranking(path: &Path) -> CliResult<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<(String, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let value = rec
            .get(1)
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| !v.is_nan())
            .ok_or_else(|| CliError::config(format!("{}: line {}: expected feature,importance", path.display(), i + 2)))?;
        rows.push((rec[0].trim().to_string(), value));
    }
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(rows.into_iter().map(|(f, _)| f).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct LeakageOutput {
    pub scope: LagScope,
    pub n_compounds: Option<usize>,
    pub skipped_publications: usize,
    pub ranking_source: String,
    pub result: LeakageResult,
}

pub fn leakage(cfg: &RunConfig) -> CliResult<(PathBuf, LeakageOutput)> {
    cfg.validate(Command::Leakage)?;
    let syn = cfg.inputs.synonyms.as_ref().map(load_synonyms).transpose().map_err(input)?;
    let approvals_path = cfg.inputs.approvals.as_ref().expect("validated");
    let mut approvals: Vec<(String, MonthDate)> = load_approvals(approvals_path).map_err(input)?.into_iter().collect();
    approvals.sort();
    let approvals: HashMap<String, MonthDate> = rename_pairs(approvals, syn.as_ref(), "approvals")?.into_iter().collect();
    let publications = load_publications(cfg.inputs.publications.as_ref().expect("validated")).map_err(input)?;
    let publications = match &syn {
        None => publications,
        Some(s) => {
            let mut out = BTreeMap::new();
            for ((c, f), d) in publications {
                if let Some(canon) = s.lookup(&c) {
                    let e = out.entry((canon.to_string(), f)).or_insert(d);
                    *e = (*e).min(d);
                }
            }
            out
        }
    };

    let (ranked, ranking_source) = match &cfg.leakage.ranking_file {
        Some(p) => (load_ranking(p)?, p.display().to_string()),
        None => {
            let out = compute_importance(cfg)?;
            let names = rank_features(&out.report, out.report.features.len()).into_iter().map(|(f, _)| f).collect();
            (names, format!("importance on {:?} for {:?}", out.dataset, out.target))
        }
    };
    // concatenated tables carry `dataset.` prefixes that publications lack
    let known: BTreeSet<&str> = publications.keys().map(|(_, f)| f.as_str()).collect();
    let ranked: Vec<String> = ranked
        .into_iter()
        .map(|f| match f.split_once('.') {
            Some((_, rest)) if !known.contains(f.as_str()) && known.contains(rest) => rest.to_string(),
            _ => f,
        })
        .collect();

    let restrict: Option<BTreeSet<String>> = match cfg.leakage.scope {
        LagScope::AllCompounds => None,
        LagScope::TestCompounds => {
            let threshold = cfg.split.threshold.expect("validated");
            let dates = load_dates(cfg.inputs.dates.as_ref().expect("validated")).map_err(input)?;
            let dates = rename_pairs(dates, syn.as_ref(), "dates")?;
            Some(
                dates
                    .into_iter()
                    .filter(|(_, d)| d.is_some_and(|d| d >= threshold))
                    .map(|(id, _)| id)
                    .collect(),
            )
        }
    };
    let lags = compute_time_lags(&approvals, &publications, restrict.as_ref());
    let result = top_feature_lag_test(
        &lags,
        &ranked,
        cfg.leakage.k,
        cfg.leakage.n_permutations,
        derive_seed(cfg.seed(), "leakage"),
    )
    .map_err(runtime)?;
    let out = LeakageOutput {
        scope: cfg.leakage.scope,
        n_compounds: restrict.as_ref().map(BTreeSet::len),
        skipped_publications: lags.skipped,
        ranking_source,
        result,
    };
    let dir = command_dir(cfg, "leakage")?;
    write_json(&dir.join("leakage.json"), &out)?;
    write_effective_config(&dir, cfg)?;
    Ok((dir, out))
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupCounts {
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChemspaceOutput {
    pub dataset: String,
    pub threshold: MonthDate,
    pub compounds: GroupCounts,
    /// Rows with no feature variance; correlation distance 1 to all others.
    pub constant_rows: Vec<String>,
    pub pca_explained_fraction: Vec<f64>,
    pub pca_degenerate: bool,
    pub pmfg_edges: usize,
    pub hops: GroupedHops,
    pub median_distance: BTreeMap<String, Option<f64>>,
    pub median_tanimoto: BTreeMap<String, Option<f64>>,
}

fn medians(g: &GroupedValues) -> BTreeMap<String, Option<f64>> {
    [("within_train", &g.within_train), ("within_test", &g.within_test), ("cross", &g.cross)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), timesplit_core::stats::median(v)))
        .collect()
}

fn write_histograms(path: &Path, g: &GroupedValues, lo: f64, hi: f64, bins: usize) -> CliResult<()> {
    let h: [Histogram; 3] = [
        histogram(&g.within_train, lo, hi, bins),
        histogram(&g.within_test, lo, hi, bins),
        histogram(&g.cross, lo, hi, bins),
    ];
    write_with(path, |w| {
        writeln!(w, "bin_lo,bin_hi,within_train,within_test,cross")?;
        for b in 0..bins {
            writeln!(
                w,
                "{},{},{},{},{}",
                h[0].edges[b],
                h[0].edges[b + 1],
                h[0].counts[b],
                h[1].counts[b],
                h[2].counts[b]
            )?;
        }
        Ok(())
    })
}

pub fn chemspace(cfg: &RunConfig) -> CliResult<(PathBuf, ChemspaceOutput)> {
    cfg.validate(Command::Chemspace)?;
    let c = &cfg.chemspace;
    let inputs = load_inputs(cfg, true)?;
    let threshold = cfg.split.threshold.expect("validated");
    let mut tables = inputs.tables;
    if cfg.filter.enabled {
        for t in &mut tables {
            *t = apply_filter_pipeline(t, cfg.filter.cv_threshold, cfg.filter.r2_threshold)
                .map_err(|e| CliError::runtime(format!("dataset {:?}: {e}", t.dataset_name)))?
                .0;
        }
    }
    let dated: HashMap<&str, MonthDate> = inputs
        .dates
        .iter()
        .filter_map(|(id, d)| d.map(|d| (id.as_str(), d)))
        .collect();
    let mut shared: BTreeSet<String> = tables[0].compound_ids.iter().cloned().collect();
    for t in &tables[1..] {
        let ids: BTreeSet<&String> = t.compound_ids.iter().collect();
        shared.retain(|id| ids.contains(id));
    }
    shared.retain(|id| dated.contains_key(id.as_str()) && inputs.smiles.contains_key(id));
    let ids: Vec<String> = shared.into_iter().collect();
    if ids.len() < 3 {
        return Err(CliError::runtime(format!(
            "chemical-space analysis needs at least 3 compounds with features, a date and a structure; found {}",
            ids.len()
        )));
    }
    let tables = tables.iter().map(|t| t.select_rows(&ids)).collect::<Result<Vec<_>, _>>().map_err(runtime)?;
    let table = match &c.dataset {
        Some(name) => tables.iter().find(|t| &t.dataset_name == name).cloned().expect("validated"),
        None => concatenate_datasets(&tables, ALL_DATASETS).map_err(runtime)?,
    };
    let is_test: Vec<bool> = ids.iter().map(|id| dated[id.as_str()] >= threshold).collect();

    let mut bad = Vec::new();
    let mut fps = Vec::with_capacity(ids.len());
    for id in &ids {
        match parse_smiles(&inputs.smiles[id]) {
            Ok(m) => fps.push(morgan_fingerprint(&m, c.fingerprint_radius, c.fingerprint_bits)),
            Err(e) => bad.push(format!("smiles for {id:?}: {e}")),
        }
    }
    if !bad.is_empty() {
        return Err(CliError::Config(bad));
    }

    let z = standardize(table.values.view());
    let dist = correlation_distance_matrix(z.view());
    let dist_groups = group_pairs(dist.matrix.view(), &is_test);
    let pca = pca_embed(z.view(), c.pca_components.min(z.nrows().min(z.ncols()))).map_err(runtime)?;
    let tani = tanimoto_matrix(&fps).map_err(|e| CliError::runtime(format!("{e:?}")))?;
    let tani_groups = group_pairs(tani.view(), &is_test);
    let similarity = dist.matrix.mapv(|d| 1.0 - d);
    let graph = pmfg_construct(similarity.view()).map_err(runtime)?;
    let hops = hop_histograms(&all_pairs_shortest_paths(&graph), &is_test);

    let dir = command_dir(cfg, "chemspace")?;
    let bins = c.histogram_bins;
    write_histograms(&dir.join("distance_hist.csv"), &dist_groups, 0.0, 2.0, bins)?;
    write_histograms(&dir.join("tanimoto_hist.csv"), &tani_groups, 0.0, 1.0, bins)?;
    write_with(&dir.join("pca_scores.csv"), |w| {
        write!(w, "compound_id,group")?;
        for k in 1..=pca.scores.ncols() {
            write!(w, ",pc{k}")?;
        }
        writeln!(w)?;
        for (i, id) in ids.iter().enumerate() {
            write!(w, "{id},{}", if is_test[i] { "test" } else { "train" })?;
            for v in pca.scores.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    write_with(&dir.join("pca_variance.csv"), |w| {
        writeln!(w, "component,variance,fraction")?;
        for (k, (v, f)) in pca.explained_variance.iter().zip(&pca.explained_fraction).enumerate() {
            writeln!(w, "pc{},{v},{f}", k + 1)?;
        }
        Ok(())
    })?;
    write_with(&dir.join("pmfg_edges.csv"), |w| graph.write_edge_list(&ids, w))?;
    write_with(&dir.join("shortest_path_hist.csv"), |w| {
        writeln!(w, "hops,within_train,within_test,cross")?;
        let keys: BTreeSet<u32> = [&hops.within_train, &hops.within_test, &hops.cross]
            .iter()
            .flat_map(|h| h.counts.keys().copied())
            .collect();
        let get = |h: &timesplit_chem::paths::HopCounts, k: u32| h.counts.get(&k).copied().unwrap_or(0);
        for k in keys {
            writeln!(
                w,
                "{k},{},{},{}",
                get(&hops.within_train, k),
                get(&hops.within_test, k),
                get(&hops.cross, k)
            )?;
        }
        writeln!(
            w,
            "unreachable,{},{},{}",
            hops.within_train.unreachable, hops.within_test.unreachable, hops.cross.unreachable
        )
    })?;

    let n_test = is_test.iter().filter(|&&t| t).count();
    let out = ChemspaceOutput {
        dataset: table.dataset_name.clone(),
        threshold,
        compounds: GroupCounts {
            train: ids.len() - n_test,
            test: n_test,
        },
        constant_rows: dist.constant_rows.iter().map(|&i| ids[i].clone()).collect(),
        pca_explained_fraction: pca.explained_fraction.clone(),
        pca_degenerate: pca.degenerate,
        pmfg_edges: graph.edges.len(),
        hops,
        median_distance: medians(&dist_groups),
        median_tanimoto: medians(&tani_groups),
    };
    write_json(&dir.join("summary.json"), &out)?;
    write_effective_config(&dir, cfg)?;
    Ok((dir, out))
}

/// Runs `command` and returns its output directory.
pub fn run(command: Command, cfg: &RunConfig) -> CliResult<PathBuf> {
    Ok(match command {
        Command::Evaluate => evaluate(cfg)?.dir,
        Command::Importance => importance(cfg)?.0,
        Command::Chemspace => chemspace(cfg)?.0,
        Command::Leakage => leakage(cfg)?.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synonyms_drop_unmapped_and_reject_collisions() {
        let syn = SynonymMap::new([("Aspirin", "A"), ("acetylsalicylic acid", "A"), ("Ibuprofen", "B")]).unwrap();
        let ids: Vec<String> = ["aspirin", "unknown", "IBUPROFEN"].map(String::from).to_vec();
        let (rows, canon) = canonical_rows(&ids, Some(&syn), "t").unwrap();
        assert_eq!(rows, vec![0, 2]);
        assert_eq!(canon, vec!["A", "B"]);
        let clash: Vec<String> = ["Aspirin", "acetylsalicylic acid"].map(String::from).to_vec();
        assert!(matches!(canonical_rows(&clash, Some(&syn), "t"), Err(CliError::Config(_))));
    }

    #[test]
    fn ranking_file_is_sorted_by_importance() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "feature,importance\na,0.1\nb,0.3\nc,0.1\nd,-0.2\n").unwrap();
        assert_eq!(load_ranking(&p).unwrap(), vec!["b", "a", "c", "d"]);
        std::fs::write(&p, "feature,importance\na,high\n").unwrap();
        assert!(matches!(load_ranking(&p), Err(CliError::Config(_))));
    }
}
