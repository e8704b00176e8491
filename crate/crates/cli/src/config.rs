//! The JSON run configuration shared by every subcommand.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Validation collects every problem before reporting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use timesplit_core::data::MonthDate;
use timesplit_core::learners::LearnerSpec;
use timesplit_core::split::SplitMethod;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub base_seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub inputs: Inputs,
    /// Datasets counted on the protein side of the comparison partition.
    #[serde(default)]
    pub protein_datasets: Vec<String>,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub targets: TargetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default = "default_learners")]
    pub learners: Vec<LearnerSpec>,
    #[serde(default = "yes")]
    pub ensemble_across_datasets: bool,
    #[serde(default)]
    pub importance: ImportanceConfig,
    #[serde(default)]
    pub leakage: LeakageConfig,
    #[serde(default)]
    pub chemspace: ChemspaceConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Dataset name → `compound_id, f1, …` CSV.
    #[serde(default)]
    pub feature_tables: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub dates: Option<PathBuf>,
    #[serde(default)]
    pub smiles: Option<PathBuf>,
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
    #[serde(default)]
    pub approvals: Option<PathBuf>,
    #[serde(default)]
    pub publications: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub enabled: bool,
    pub cv_threshold: f64,
    pub r2_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            enabled: true,
            cv_threshold: timesplit_core::filter::DEFAULT_CV_THRESHOLD,
            r2_threshold: timesplit_core::filter::DEFAULT_R2_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    /// Restrict to these targets; all surviving targets when absent.
    pub names: Option<Vec<String>>,
    pub min_positive_ratio: f64,
    pub max_positive_ratio: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig {
            names: None,
            min_positive_ratio: 0.2,
            max_positive_ratio: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPositivesRule {
    /// Use the positive count of the time split's test set.
    MatchTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixedPositives {
    Count(usize),
    Rule(FixedPositivesRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub methods: Vec<SplitMethod>,
    pub threshold: Option<MonthDate>,
    /// Random-split sizes; default to the time split's sizes.
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub repetitions: usize,
    pub inner_folds: usize,
    pub fixed_test_positives: Option<FixedPositives>,
    pub classification_threshold: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            methods: vec![SplitMethod::Time, SplitMethod::Random],
            threshold: None,
            n_train: None,
            n_test: None,
            repetitions: 20,
            inner_folds: 5,
            fixed_test_positives: None,
            classification_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImportanceConfig {
    /// Feature table to explain; all tables concatenated when absent.
    pub dataset: Option<String>,
    pub learner: LearnerSpec,
    /// Defaults to the first surviving target.
    pub target: Option<String>,
    pub folds: usize,
    pub shuffles: usize,
    pub top_n: usize,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            dataset: None,
            learner: LearnerSpec::gbdt(),
            target: None,
            folds: 4,
            shuffles: 25,
            top_n: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagScope {
    /// Compounds in the time split's test set.
    TestCompounds,
    AllCompounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeakageConfig {
    pub k: usize,
    pub n_permutations: usize,
    pub scope: LagScope,
    /// `feature,importance` CSV; importance is computed in-process when absent.
    pub ranking_file: Option<PathBuf>,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            k: 15,
            n_permutations: 100_000,
            scope: LagScope::TestCompounds,
            ranking_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChemspaceConfig {
    /// Feature table for correlation distances and PCA; all tables
    /// concatenated when absent.
    pub dataset: Option<String>,
    pub fingerprint_radius: usize,
    pub fingerprint_bits: usize,
    pub histogram_bins: usize,
    pub pca_components: usize,
}

impl Default for ChemspaceConfig {
    fn default() -> Self {
        ChemspaceConfig {
            dataset: None,
            fingerprint_radius: timesplit_chem::fingerprint::DEFAULT_RADIUS,
            fingerprint_bits: timesplit_chem::fingerprint::DEFAULT_BITS,
            histogram_bins: 20,
            pca_components: 2,
        }
    }
}

fn default_learners() -> Vec<LearnerSpec> {
    vec![LearnerSpec::elastic_net(), LearnerSpec::naive_bayes(), LearnerSpec::gbdt()]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evaluate,
    Importance,
    Chemspace,
    Leakage,
}

impl RunConfig {
    /// Reads and parses `path`, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = std::path::absolute(path)
            .ok()
            .and_then(|p| p.parent().map(Path::to_path_buf))
            .unwrap_or_default();
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let i = &mut self.inputs;
        i.feature_tables.values_mut().for_each(fix);
        for p in [
            &mut i.labels,
            &mut i.dates,
            &mut i.smiles,
            &mut i.synonyms,
            &mut i.approvals,
            &mut i.publications,
            &mut self.leakage.ranking_file,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        if seed.is_some() {
            self.base_seed = seed;
        }
        if let Some(o) = out {
            self.output_dir = Some(std::path::absolute(&o).unwrap_or(o));
        }
    }

    pub fn seed(&self) -> u64 {
        self.base_seed.expect("validated")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Checks everything `command` needs; reports all problems at once.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        let mut errors = Vec::new();
        let need = |what: &str, p: &Option<PathBuf>, errors: &mut Vec<String>| match p {
            None => errors.push(format!("inputs.{what} is required")),
            Some(p) if !p.is_file() => errors.push(format!("inputs.{what}: file not found: {}", p.display())),
            Some(_) => {}
        };

        if self.base_seed.is_none() {
            errors.push("base_seed is required (or pass --seed)".into());
        }
        let tables_needed = matches!(command, Command::Evaluate | Command::Importance | Command::Chemspace)
            || (command == Command::Leakage && self.leakage.ranking_file.is_none());
        if tables_needed {
            if self.inputs.feature_tables.is_empty() {
                errors.push("inputs.feature_tables must name at least one table".into());
            }
            for (name, p) in &self.inputs.feature_tables {
                if !p.is_file() {
                    errors.push(format!("inputs.feature_tables.{name}: file not found: {}", p.display()));
                }
            }
        }
        let labels_needed = command != Command::Chemspace && tables_needed;
        if labels_needed {
            need("labels", &self.inputs.labels, &mut errors);
        }
        let dates_needed = command != Command::Leakage
            || self.leakage.scope == LagScope::TestCompounds
            || self.leakage.ranking_file.is_none();
        if dates_needed {
            need("dates", &self.inputs.dates, &mut errors);
        }
        if command == Command::Chemspace {
            need("smiles", &self.inputs.smiles, &mut errors);
        }
        if command == Command::Leakage {
            need("approvals", &self.inputs.approvals, &mut errors);
            need("publications", &self.inputs.publications, &mut errors);
            if let Some(p) = &self.leakage.ranking_file {
                if !p.is_file() {
                    errors.push(format!("leakage.ranking_file: file not found: {}", p.display()));
                }
            }
        }
        if let Some(p) = &self.inputs.synonyms {
            if !p.is_file() {
                errors.push(format!("inputs.synonyms: file not found: {}", p.display()));
            }
        }

        let f = &self.filter;
        if !(f.cv_threshold >= 0.0) {
            errors.push(format!("filter.cv_threshold must be non-negative, got {}", f.cv_threshold));
        }
        if !(0.0..=1.0).contains(&f.r2_threshold) {
            errors.push(format!("filter.r2_threshold must lie in [0, 1], got {}", f.r2_threshold));
        }
        let t = &self.targets;
        if !(0.0..=1.0).contains(&t.min_positive_ratio)
            || !(0.0..=1.0).contains(&t.max_positive_ratio)
            || t.min_positive_ratio >= t.max_positive_ratio
        {
            errors.push(format!(
                "targets: need 0 <= min_positive_ratio < max_positive_ratio <= 1, got [{}, {}]",
                t.min_positive_ratio, t.max_positive_ratio
            ));
        }

        let s = &self.split;
        let uses_time = command != Command::Evaluate || s.methods.contains(&SplitMethod::Time);
        let needs_threshold = match command {
            Command::Evaluate => {
                uses_time
                    || s.n_train.is_none()
                    || s.n_test.is_none()
                    || s.fixed_test_positives == Some(FixedPositives::Rule(FixedPositivesRule::MatchTime))
            }
            Command::Leakage => self.leakage.scope == LagScope::TestCompounds || self.leakage.ranking_file.is_none(),
            _ => true,
        };
        if needs_threshold && s.threshold.is_none() {
            errors.push("split.threshold is required".into());
        }
        if command == Command::Evaluate {
            if s.methods.is_empty() {
                errors.push("split.methods must not be empty".into());
            }
            let mut methods = s.methods.clone();
            methods.sort();
            methods.dedup();
            if methods.len() != s.methods.len() {
                errors.push("split.methods lists a method twice".into());
            }
            if s.repetitions == 0 {
                errors.push("split.repetitions must be at least 1".into());
            }
            if s.n_train.is_some() != s.n_test.is_some() {
                errors.push("split.n_train and split.n_test must be given together".into());
            }
            if self.learners.is_empty() {
                errors.push("learners must not be empty".into());
            }
            let mut labels: Vec<String> = self.learners.iter().map(LearnerSpec::label).collect();
            labels.sort();
            if labels.windows(2).any(|w| w[0] == w[1]) {
                errors.push("learners need distinct names".into());
            }
            for (i, l) in self.learners.iter().enumerate() {
                if let Err(e) = l.validate() {
                    errors.push(format!("learners[{i}]: {e}"));
                }
            }
        }
        if s.inner_folds < 2 {
            errors.push(format!("split.inner_folds must be at least 2, got {}", s.inner_folds));
        }
        if !(s.classification_threshold > 0.0 && s.classification_threshold < 1.0) {
            errors.push(format!(
                "split.classification_threshold must lie in (0, 1), got {}",
                s.classification_threshold
            ));
        }

        let im = &self.importance;
        if matches!(command, Command::Importance | Command::Leakage) {
            if im.folds < 2 {
                errors.push(format!("importance.folds must be at least 2, got {}", im.folds));
            }
            if im.shuffles == 0 {
                errors.push("importance.shuffles must be at least 1".into());
            }
            if let Err(e) = im.learner.validate() {
                errors.push(format!("importance.learner: {e}"));
            }
        }
        for (key, dataset) in [("importance.dataset", &im.dataset), ("chemspace.dataset", &self.chemspace.dataset)] {
            if let Some(d) = dataset {
                if tables_needed && !self.inputs.feature_tables.contains_key(d) {
                    errors.push(format!("{key}: no feature table named {d:?}"));
                }
            }
        }
        if command == Command::Leakage {
            if self.leakage.k == 0 {
                errors.push("leakage.k must be at least 1".into());
            }
            if self.leakage.n_permutations == 0 {
                errors.push("leakage.n_permutations must be at least 1".into());
            }
        }
        if command == Command::Chemspace {
            let c = &self.chemspace;
            if c.fingerprint_bits == 0 {
                errors.push("chemspace.fingerprint_bits must be positive".into());
            }
            if c.histogram_bins == 0 {
                errors.push("chemspace.histogram_bins must be positive".into());
            }
            if c.pca_components == 0 {
                errors.push("chemspace.pca_components must be positive".into());
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> RunConfig {
        serde_json::from_str(r#"{"inputs": {}}"#).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = minimal();
        assert_eq!(c.split.repetitions, 20);
        assert_eq!(c.importance.folds, 4);
        assert_eq!(c.importance.shuffles, 25);
        assert_eq!(c.leakage.k, 15);
        assert_eq!(c.learners.len(), 3);
        assert_eq!(c.targets.min_positive_ratio, 0.2);
    }

    #[test]
    fn all_problems_reported_together() {
        let mut c = minimal();
        c.inputs.labels = Some("/no/such/labels.csv".into());
        c.split.repetitions = 0;
        let CliError::Config(errors) = c.validate(Command::Evaluate).unwrap_err() else {
            panic!("expected a config error");
        };
        assert!(errors.iter().any(|e| e.contains("base_seed")));
        assert!(errors.iter().any(|e| e.contains("/no/such/labels.csv")));
        assert!(errors.iter().any(|e| e.contains("repetitions")));
        assert!(errors.iter().any(|e| e.contains("threshold")));
        assert!(errors.len() >= 5, "{errors:?}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"inputs": {}, "sed": 1}"#).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut c: RunConfig =
            serde_json::from_str(r#"{"inputs": {"labels": "l.csv", "feature_tables": {"a": "/abs/a.csv"}}}"#).unwrap();
        c.resolve_paths(Path::new("/base"));
        assert_eq!(c.inputs.labels, Some(PathBuf::from("/base/l.csv")));
        assert_eq!(c.inputs.feature_tables["a"], PathBuf::from("/abs/a.csv"));
    }

    #[test]
    fn fixed_positive_forms() {
        let s: SplitConfig = serde_json::from_str(r#"{"fixed_test_positives": 19}"#).unwrap();
        assert_eq!(s.fixed_test_positives, Some(FixedPositives::Count(19)));
        let s: SplitConfig = serde_json::from_str(r#"{"fixed_test_positives": "match_time"}"#).unwrap();
        assert_eq!(s.fixed_test_positives, Some(FixedPositives::Rule(FixedPositivesRule::MatchTime)));
    }
}
