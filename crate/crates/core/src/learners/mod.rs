//! Built-in binary probabilistic classifiers behind one interface.
//!
//! All learners take a dense matrix without missing cells and boolean labels
//! containing both classes, and return probabilities of the positive class.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod elastic_net;
pub mod gbdt;
pub mod naive_bayes;

pub use elastic_net::{ElasticNetModel, ElasticNetParams};
pub use gbdt::{GbdtModel, GbdtParams};
pub use naive_bayes::{NaiveBayesModel, NaiveBayesParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    ElasticNet,
    NaiveBayes,
    Gbdt,
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LearnerKind::ElasticNet => "elastic_net",
            LearnerKind::NaiveBayes => "naive_bayes",
            LearnerKind::Gbdt => "gbdt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    ElasticNet(ElasticNetParams),
    NaiveBayes(NaiveBayesParams),
    Gbdt(GbdtParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    /// Label used in reports; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub training_seed: u64,
}

impl LearnerSpec {
    pub fn new(hyperparameters: Hyperparameters) -> Self {
        LearnerSpec {
            name: None,
            hyperparameters,
            training_seed: 0,
        }
    }

    pub fn elastic_net() -> Self {
        Self::new(Hyperparameters::ElasticNet(ElasticNetParams::default()))
    }

    pub fn naive_bayes() -> Self {
        Self::new(Hyperparameters::NaiveBayes(NaiveBayesParams::default()))
    }

    pub fn gbdt() -> Self {
        Self::new(Hyperparameters::Gbdt(GbdtParams::default()))
    }

    pub fn kind(&self) -> LearnerKind {
        match self.hyperparameters {
            Hyperparameters::ElasticNet(_) => LearnerKind::ElasticNet,
            Hyperparameters::NaiveBayes(_) => LearnerKind::NaiveBayes,
            Hyperparameters::Gbdt(_) => LearnerKind::Gbdt,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind().to_string())
    }

    pub fn with_seed(&self, training_seed: u64) -> Self {
        LearnerSpec {
            training_seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.hyperparameters {
            Hyperparameters::ElasticNet(p) => p.validate(),
            Hyperparameters::NaiveBayes(p) => p.validate(),
            Hyperparameters::Gbdt(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum TrainedModel {
    ElasticNet(ElasticNetModel),
    NaiveBayes(NaiveBayesModel),
    Gbdt(GbdtModel),
}

#[derive(Serialize)]
struct ModelDocument<'a> {
    version: u32,
    hyperparameters: &'a Hyperparameters,
    training_seed: u64,
    model: &'a TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        match self {
            TrainedModel::ElasticNet(_) => LearnerKind::ElasticNet,
            TrainedModel::NaiveBayes(_) => LearnerKind::NaiveBayes,
            TrainedModel::Gbdt(_) => LearnerKind::Gbdt,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::ElasticNet(m) => m.coefficients.len(),
            TrainedModel::NaiveBayes(m) => m.n_features(),
            TrainedModel::Gbdt(m) => m.n_features,
        }
    }

    /// Probability of the positive class for each row of `x`.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.nrows() > 0 && x.ncols() != self.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, input has {}",
                self.n_features(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction input"));
        }
        Ok(match self {
            TrainedModel::ElasticNet(m) => m.predict_proba(x),
            TrainedModel::NaiveBayes(m) => m.predict_proba(x),
            TrainedModel::Gbdt(m) => m.predict_proba(x),
        })
    }

    /// Versioned audit document: kind, hyperparameters and fitted parameters.
    pub fn to_json(&self, spec: &LearnerSpec) -> serde_json::Value {
        serde_json::to_value(ModelDocument {
            version: MODEL_FORMAT_VERSION,
            hyperparameters: &spec.hyperparameters,
            training_seed: spec.training_seed,
            model: self,
        })
        .expect("model serializes")
    }
}

pub fn train(spec: &LearnerSpec, x: ArrayView2<f64>, y: &[bool]) -> Result<TrainedModel> {
    spec.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training input"));
    }
    let positives = y.iter().filter(|&&l| l).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::OneClass);
    }
    Ok(match &spec.hyperparameters {
        Hyperparameters::ElasticNet(p) => TrainedModel::ElasticNet(elastic_net::fit(p, x, y)),
        Hyperparameters::NaiveBayes(p) => TrainedModel::NaiveBayes(naive_bayes::fit(p, x, y)),
        Hyperparameters::Gbdt(p) => TrainedModel::Gbdt(gbdt::fit(p, x, y)),
    })
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn spec_json_shape() {
        let spec: LearnerSpec =
            serde_json::from_str(r#"{"kind":"gbdt","n_trees":3,"training_seed":4}"#).unwrap();
        assert_eq!(spec.kind(), LearnerKind::Gbdt);
        assert_eq!(spec.training_seed, 4);
        match &spec.hyperparameters {
            Hyperparameters::Gbdt(p) => {
                assert_eq!(p.n_trees, 3);
                assert_eq!(p.max_depth, 3);
            }
            _ => unreachable!(),
        }
        let back: LearnerSpec = serde_json::from_value(serde_json::to_value(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn one_class_and_non_finite_rejected() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(
            train(&LearnerSpec::naive_bayes(), x.view(), &[true, true]),
            Err(Error::OneClass)
        ));
        let x = array![[1.0], [f64::NAN]];
        assert!(matches!(
            train(&LearnerSpec::naive_bayes(), x.view(), &[true, false]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn shape_mismatch_and_empty_input() {
        let x = array![[1.0, 0.0], [2.0, 1.0], [3.0, 0.0], [4.0, 1.0]];
        let y = [false, false, true, true];
        for spec in [LearnerSpec::elastic_net(), LearnerSpec::naive_bayes(), LearnerSpec::gbdt()] {
            let m = train(&spec, x.view(), &y).unwrap();
            assert!(m.predict_proba(array![[1.0]].view()).is_err());
            assert!(m.predict_proba(ndarray::Array2::zeros((0, 2)).view()).unwrap().is_empty());
            let doc = m.to_json(&spec);
            assert_eq!(doc["version"], 1);
            assert_eq!(doc["model"]["kind"], spec.kind().to_string());
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
