//! Seeded synthetic benchmark.
//!
//! Compounds are a scaffold with motif fragments hung off a carbon chain.
//! Labels follow a logistic model over motif counts; motifs marked `flips`
//! change the sign of their effect for compounds marketed on or after the
//! drift point. A knowledge table carries, per target, columns that are set
//! mostly for positive compounds and published shortly after approval.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::json;
use timesplit_chem::smiles::parse_smiles;
use timesplit_core::data::{intersect_compounds, DatasetBundle, FeatureTable, LabelTable, MonthDate, Registry};
use timesplit_core::rng::{derive_seed, SeededRng};

use crate::error::{io, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Motif {
    pub name: String,
    /// Fragment attached as a branch, e.g. `C(=O)O`.
    pub smiles: String,
    #[serde(default)]
    pub flips: bool,
}

fn motif(name: &str, smiles: &str, flips: bool) -> Motif {
    Motif {
        name: name.into(),
        smiles: smiles.into(),
        flips,
    }
}

const SCAFFOLDS: [&str; 6] = ["c1ccccc1", "C1CCNCC1", "c1ccncc1", "C1CCCCC1", "c1ccc2ccccc2c1", "C1CCOC1"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_compounds: usize,
    pub start: MonthDate,
    pub end: MonthDate,
    pub drift_point: MonthDate,
    /// Compounds marketed on or after the drift point.
    pub n_post_drift: usize,
    pub motifs: Vec<Motif>,
    /// Chance that a compound carries a given motif.
    pub motif_rate: f64,
    /// 0 keeps every effect; 1 fully reverses flipping motifs after the drift.
    pub drift_strength: f64,
    pub n_targets: usize,
    /// Standard deviation of motif effects on the logit scale.
    pub signal: f64,
    /// Standard deviation of per-compound logit noise.
    pub label_noise: f64,
    /// Target positive rate before the drift.
    pub base_rate: f64,
    pub n_property_features: usize,
    pub n_noise_features: usize,
    pub n_knowledge_features: usize,
    pub leaky_per_target: usize,
    /// Chance that a positive compound carries a leaky column of its target.
    pub leak_rate: f64,
    /// Chance of any other knowledge association.
    pub knowledge_rate: f64,
    /// Inclusive month range from approval to first publication, leaked pairs.
    pub leak_lag: [i32; 2],
    pub background_lag: [i32; 2],
    /// Permute publication dates across all pairs.
    pub shuffle_publication_dates: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_compounds: 451,
            start: MonthDate::new(1960, 1).expect("valid"),
            end: MonthDate::new(2015, 12).expect("valid"),
            drift_point: MonthDate::new(1998, 10).expect("valid"),
            n_post_drift: 90,
            motifs: vec![
                motif("carboxylic_acid", "C(=O)O", true),
                motif("amine", "N", false),
                motif("chloro", "Cl", true),
                motif("fluoro", "F", false),
                motif("methoxy", "OC", true),
                motif("nitrile", "C#N", false),
                motif("sulfonamide", "S(=O)(=O)N", true),
                motif("pyridyl", "c1ccncc1", false),
            ],
            motif_rate: 0.35,
            drift_strength: 1.0,
            n_targets: 3,
            signal: 1.5,
            label_noise: 0.5,
            base_rate: 0.35,
            n_property_features: 6,
            n_noise_features: 4,
            n_knowledge_features: 200,
            leaky_per_target: 15,
            leak_rate: 0.3,
            knowledge_rate: 0.03,
            leak_lag: [0, 24],
            background_lag: [-60, 300],
            shuffle_publication_dates: false,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> CliResult<()> {
        let mut e = Vec::new();
        if !(self.start < self.drift_point && self.drift_point <= self.end) {
            e.push(format!(
                "drift_point {} must lie after start {} and no later than end {}",
                self.drift_point, self.start, self.end
            ));
        }
        if self.n_post_drift == 0 || self.n_post_drift >= self.n_compounds {
            e.push(format!(
                "n_post_drift must leave compounds on both sides: {} of {}",
                self.n_post_drift, self.n_compounds
            ));
        }
        for (name, v) in [
            ("motif_rate", self.motif_rate),
            ("drift_strength", self.drift_strength),
            ("leak_rate", self.leak_rate),
            ("knowledge_rate", self.knowledge_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                e.push(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            e.push(format!("base_rate must lie in (0, 1), got {}", self.base_rate));
        }
        if !(self.signal >= 0.0) || !(self.label_noise >= 0.0) {
            e.push("signal and label_noise must be non-negative".into());
        }
        if self.n_targets == 0 {
            e.push("n_targets must be at least 1".into());
        }
        if self.leaky_per_target * self.n_targets > self.n_knowledge_features {
            e.push(format!(
                "{} leaky columns for each of {} targets exceed {} knowledge features",
                self.leaky_per_target, self.n_targets, self.n_knowledge_features
            ));
        }
        for (name, [lo, hi]) in [("leak_lag", self.leak_lag), ("background_lag", self.background_lag)] {
            if lo > hi {
                e.push(format!("{name} range [{lo}, {hi}] is empty"));
            }
        }
        if self.motifs.is_empty() {
            e.push("at least one motif is required".into());
        }
        let mut names: Vec<&str> = self.motifs.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            e.push("motif names must be distinct".into());
        }
        for m in &self.motifs {
            if let Err(err) = parse_smiles(&format!("CC({})C", m.smiles)) {
                e.push(format!("motif {:?}: {err}", m.name));
            }
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(e))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub spec: SyntheticSpec,
    pub ids: Vec<String>,
    pub smiles: Vec<String>,
    pub dates: Vec<MonthDate>,
    /// `structure`, `property` and `knowledge`.
    pub tables: Vec<FeatureTable>,
    pub labels: LabelTable,
    pub publications: BTreeMap<(String, String), MonthDate>,
    /// Leaky knowledge columns per target.
    pub leaky_features: BTreeMap<String, Vec<String>>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn uniform_month(rng: &mut SeededRng, lo: MonthDate, hi: MonthDate) -> MonthDate {
    MonthDate::from_ordinal(rng.uniform_int(i64::from(lo.ordinal()), i64::from(hi.ordinal())) as i32)
        .expect("inside the timeline")
}

fn shift(d: MonthDate, months: i32) -> MonthDate {
    let lo = MonthDate::new(1800, 1).expect("valid").ordinal();
    let hi = MonthDate::new(2200, 12).expect("valid").ordinal();
    MonthDate::from_ordinal((d.ordinal() + months).clamp(lo, hi)).expect("clamped")
}

pub fn target_name(t: usize) -> String {
    format!("ae_{}", t + 1)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> CliResult<SyntheticData> {
    spec.validate()?;
    let seed = spec.seed;
    let rng = |tag: &str| SeededRng::new(derive_seed(seed, tag));
    let n = spec.n_compounds;
    let n_motifs = spec.motifs.len();
    let ids: Vec<String> = (1..=n).map(|i| format!("C{i:04}")).collect();

    let mut r = rng("dates");
    let before = MonthDate::from_ordinal(spec.drift_point.ordinal() - 1).expect("after start");
    let mut dates: Vec<MonthDate> = (0..n)
        .map(|i| {
            if i < n - spec.n_post_drift {
                uniform_month(&mut r, spec.start, before)
            } else {
                uniform_month(&mut r, spec.drift_point, spec.end)
            }
        })
        .collect();
    r.shuffle(&mut dates);
    let drifted: Vec<bool> = dates.iter().map(|&d| d >= spec.drift_point).collect();

    let mut r = rng("motifs");
    let mut counts = Array2::<f64>::zeros((n, n_motifs));
    let mut smiles = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = SCAFFOLDS[r.index(SCAFFOLDS.len())].to_string();
        for (m, mo) in spec.motifs.iter().enumerate() {
            let c = if r.bernoulli(spec.motif_rate) {
                1 + usize::from(r.bernoulli(0.25))
            } else {
                0
            };
            counts[[i, m]] = c as f64;
            for _ in 0..c {
                s.push_str(&format!("C({})", mo.smiles));
            }
        }
        s.push('C');
        smiles.push(s);
    }

    let mut r = rng("weights");
    let weights: Vec<Vec<f64>> = (0..spec.n_targets)
        .map(|_| (0..n_motifs).map(|_| spec.signal * r.normal()).collect())
        .collect();
    let score = |t: usize, i: usize, after: bool| -> f64 {
        (0..n_motifs)
            .map(|m| {
                let w = weights[t][m];
                let w = if after && spec.motifs[m].flips {
                    w * (1.0 - 2.0 * spec.drift_strength)
                } else {
                    w
                };
                w * counts[[i, m]]
            })
            .sum()
    };
    let mut r = rng("labels");
    let logit_base = (spec.base_rate / (1.0 - spec.base_rate)).ln();
    let mut labels = Array2::<Option<bool>>::from_elem((n, spec.n_targets), None);
    for t in 0..spec.n_targets {
        let pre: Vec<f64> = (0..n).filter(|&i| !drifted[i]).map(|i| score(t, i, false)).collect();
        let bias = logit_base - pre.iter().sum::<f64>() / pre.len() as f64;
        for i in 0..n {
            let z = bias + score(t, i, drifted[i]) + spec.label_noise * r.normal();
            labels[[i, t]] = Some(r.bernoulli(sigmoid(z)));
        }
    }

    let structure = structure_table(spec, &ids, &smiles, &counts)?;

    let mut r = rng("properties");
    let loadings: Vec<Vec<f64>> = (0..spec.n_property_features)
        .map(|_| (0..n_motifs).map(|_| 0.7 * r.normal()).collect())
        .collect();
    let property = Array2::from_shape_fn((n, spec.n_property_features), |(i, j)| {
        (0..n_motifs).map(|m| loadings[j][m] * counts[[i, m]]).sum::<f64>() + r.normal()
    });
    let property = FeatureTable::new(
        "property",
        ids.clone(),
        (1..=spec.n_property_features).map(|j| format!("prop_{j}")).collect(),
        property,
    )
    .map_err(CliError::runtime)?;

    let knowledge_names: Vec<String> = (1..=spec.n_knowledge_features).map(|j| format!("P{j:03}")).collect();
    let mut r = rng("knowledge");
    let mut knowledge = Array2::<f64>::zeros((n, spec.n_knowledge_features));
    let mut publications = BTreeMap::new();
    for i in 0..n {
        for (j, name) in knowledge_names.iter().enumerate() {
            let t = j / spec.leaky_per_target.max(1);
            let leaky_for = (spec.leaky_per_target > 0 && t < spec.n_targets).then_some(t);
            let leaked = leaky_for.is_some_and(|t| labels[[i, t]] == Some(true)) && r.bernoulli(spec.leak_rate);
            let present = leaked || r.bernoulli(spec.knowledge_rate);
            if !present {
                continue;
            }
            knowledge[[i, j]] = 1.0;
            let [lo, hi] = if leaked { spec.leak_lag } else { spec.background_lag };
            let lag = r.uniform_int(i64::from(lo), i64::from(hi)) as i32;
            publications.insert((ids[i].clone(), name.clone()), shift(dates[i], lag));
        }
    }
    if spec.shuffle_publication_dates {
        let mut pool: Vec<MonthDate> = publications.values().copied().collect();
        rng("publication-shuffle").shuffle(&mut pool);
        for (v, d) in publications.values_mut().zip(pool) {
            *v = d;
        }
    }
    let knowledge = FeatureTable::new("knowledge", ids.clone(), knowledge_names.clone(), knowledge)
        .map_err(CliError::runtime)?;
    let leaky_features = (0..spec.n_targets)
        .map(|t| {
            let cols = knowledge_names[t * spec.leaky_per_target..(t + 1) * spec.leaky_per_target].to_vec();
            (target_name(t), cols)
        })
        .collect();

    let labels = LabelTable::new(ids.clone(), (0..spec.n_targets).map(target_name).collect(), labels)
        .map_err(CliError::runtime)?;
    Ok(SyntheticData {
        spec: spec.clone(),
        ids,
        smiles,
        dates,
        tables: vec![structure, property, knowledge],
        labels,
        publications,
        leaky_features,
    })
}

fn structure_table(spec: &SyntheticSpec, ids: &[String], smiles: &[String], counts: &Array2<f64>) -> CliResult<FeatureTable> {
    const DESCRIPTORS: [&str; 8] = [
        "heavy_atoms",
        "carbon",
        "nitrogen",
        "oxygen",
        "halogen",
        "sulfur",
        "ring_atoms",
        "aromatic_atoms",
    ];
    let n = ids.len();
    let n_motifs = spec.motifs.len();
    let width = n_motifs + DESCRIPTORS.len() + spec.n_noise_features;
    let mut values = Array2::<f64>::zeros((n, width));
    let mut r = SeededRng::new(derive_seed(spec.seed, "noise"));
    for i in 0..n {
        let m = parse_smiles(&smiles[i]).map_err(|e| CliError::runtime(format!("{}: {e}", smiles[i])))?;
        let count = |f: &dyn Fn(&timesplit_chem::smiles::Atom) -> bool| m.atoms.iter().filter(|a| f(a)).count() as f64;
        let desc = [
            m.atoms.len() as f64,
            count(&|a| a.element == "C"),
            count(&|a| a.element == "N"),
            count(&|a| a.element == "O"),
            count(&|a| matches!(a.element.as_str(), "F" | "Cl" | "Br" | "I")),
            count(&|a| a.element == "S"),
            count(&|a| a.in_ring),
            count(&|a| a.aromatic),
        ];
        for k in 0..n_motifs {
            values[[i, k]] = counts[[i, k]];
        }
        for (k, d) in desc.into_iter().enumerate() {
            values[[i, n_motifs + k]] = d;
        }
        for k in 0..spec.n_noise_features {
            values[[i, n_motifs + DESCRIPTORS.len() + k]] = r.normal();
        }
    }
    let names = spec
        .motifs
        .iter()
        .map(|m| format!("motif_{}", m.name))
        .chain(DESCRIPTORS.iter().map(|d| d.to_string()))
        .chain((1..=spec.n_noise_features).map(|k| format!("noise_{k}")))
        .collect();
    FeatureTable::new("structure", ids.to_vec(), names, values).map_err(CliError::runtime)
}

impl SyntheticData {
    pub fn registry(&self) -> Registry {
        let smiles: HashMap<String, String> = self.ids.iter().cloned().zip(self.smiles.iter().cloned()).collect();
        let dates = self.ids.iter().cloned().zip(self.dates.iter().map(|&d| Some(d))).collect();
        Registry::from_parts(dates, &smiles).expect("unique ids")
    }

    pub fn bundle(&self) -> DatasetBundle {
        intersect_compounds(&self.tables, &self.labels, &self.registry()).expect("aligned by construction")
    }

    pub fn approvals(&self) -> HashMap<String, MonthDate> {
        self.ids.iter().cloned().zip(self.dates.iter().copied()).collect()
    }

    /// Writes the input files plus a `config.json` that runs every command
    /// on them.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let file = |name: &str| -> CliResult<std::io::BufWriter<std::fs::File>> {
            let p = dir.join(name);
            Ok(std::io::BufWriter::new(std::fs::File::create(&p).map_err(|e| io(&p, e))?))
        };
        let fail = |name: &str| {
            let p = dir.join(name);
            move |e: std::io::Error| io(&p, e)
        };
        for t in &self.tables {
            let name = format!("features_{}.csv", t.dataset_name);
            t.write_csv(file(&name)?).map_err(fail(&name))?;
        }

        let mut w = file("labels.csv")?;
        (|| -> std::io::Result<()> {
            write!(w, "compound_id")?;
            for t in &self.labels.target_names {
                write!(w, ",{t}")?;
            }
            writeln!(w)?;
            for (i, id) in self.labels.compound_ids.iter().enumerate() {
                write!(w, "{id}")?;
                for v in self.labels.values.row(i) {
                    match v {
                        Some(true) => write!(w, ",1")?,
                        Some(false) => write!(w, ",0")?,
                        None => write!(w, ",")?,
                    }
                }
                writeln!(w)?;
            }
            w.flush()
        })()
        .map_err(fail("labels.csv"))?;

        let pairs = |name: &str, header: &str, rows: Vec<String>| -> CliResult<()> {
            let mut w = file(name)?;
            (|| -> std::io::Result<()> {
                writeln!(w, "{header}")?;
                for r in rows {
                    writeln!(w, "{r}")?;
                }
                w.flush()
            })()
            .map_err(fail(name))
        };
        let dated: Vec<String> = self.ids.iter().zip(&self.dates).map(|(id, d)| format!("{id},{d}")).collect();
        pairs("dates.csv", "compound_id,market_date", dated.clone())?;
        pairs("approvals.csv", "compound_id,approval_date", dated)?;
        pairs(
            "smiles.csv",
            "compound_id,smiles",
            self.ids.iter().zip(&self.smiles).map(|(id, s)| format!("{id},{s}")).collect(),
        )?;
        pairs(
            "publications.csv",
            "compound_id,feature_id,first_pub_date",
            self.publications
                .iter()
                .map(|((c, f), d)| format!("{c},{f},{d}"))
                .collect(),
        )?;

        let config = json!({
            "base_seed": self.spec.seed,
            "inputs": {
                "feature_tables": self
                    .tables
                    .iter()
                    .map(|t| (t.dataset_name.clone(), format!("features_{}.csv", t.dataset_name)))
                    .collect::<BTreeMap<_, _>>(),
                "labels": "labels.csv",
                "dates": "dates.csv",
                "smiles": "smiles.csv",
                "approvals": "approvals.csv",
                "publications": "publications.csv",
            },
            "protein_datasets": ["knowledge"],
            "split": {"threshold": self.spec.drift_point},
            "importance": {
                "dataset": "knowledge",
                "target": target_name(0),
                "learner": {"kind": "elastic_net"},
            },
            "chemspace": {"dataset": "structure"},
        });
        let spec = serde_json::to_string_pretty(&self.spec).expect("serializable");
        let config = serde_json::to_string_pretty(&config).expect("serializable");
        for (name, text) in [("synthetic_spec.json", spec), ("config.json", config)] {
            std::fs::write(dir.join(name), text + "\n").map_err(fail(name))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_matches_the_reference_split() {
        let d = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let threshold = MonthDate::new(1998, 10).unwrap();
        let before = d.dates.iter().filter(|&&x| x < threshold).count();
        assert_eq!((before, d.dates.len() - before), (361, 90));
        for s in &d.smiles {
            parse_smiles(s).unwrap();
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let b = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(a.smiles, b.smiles);
        assert_eq!(a.tables, b.tables);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.publications, b.publications);
        let c = generate_synthetic(&SyntheticSpec { seed: 1, ..Default::default() }).unwrap();
        assert_ne!(a.smiles, c.smiles);
    }

    #[test]
    fn leaky_columns_are_published_soon_after_approval() {
        let d = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let approvals = d.approvals();
        let leaky = &d.leaky_features["ae_1"];
        let positives: Vec<&String> = d
            .ids
            .iter()
            .enumerate()
            .filter(|(i, _)| d.labels.values[[*i, 0]] == Some(true))
            .map(|(_, id)| id)
            .collect();
        let mut near = 0;
        let mut total = 0;
        for ((c, f), date) in &d.publications {
            if leaky.contains(f) && positives.contains(&c) {
                total += 1;
                let lag = approvals[c].months_until(*date);
                near += usize::from((0..=24).contains(&lag));
            }
        }
        assert!(total > 100);
        assert!(near as f64 / total as f64 > 0.8);
    }

    #[test]
    fn infeasible_specs_list_every_problem() {
        let spec = SyntheticSpec {
            n_post_drift: 0,
            leak_rate: 2.0,
            leaky_per_target: 100,
            ..Default::default()
        };
        let CliError::Config(errors) = spec.validate().unwrap_err() else {
            panic!("expected a config error");
        };
        assert_eq!(errors.len(), 3, "{errors:?}");
    }
}
