//! Classification models: the incremental multinomial logistic regression
//! used for node potentials, plus the linear SVM and kNN members of the
//! voting ensemble.

mod ensemble;
mod knn;
mod mlr;
mod svm;

pub use ensemble::{aux_predictions, train_aux, AuxConfig, AuxEnsemble};
pub use knn::Knn;
pub use mlr::{objective, read_checkpoint, train_mlr, train_mlr_traced, write_checkpoint, MlrConfig, MlrModel};
pub use svm::{LinearSvm, SvmConfig};

use crate::error::{Error, Result};
use crate::prob::argmax;

/// A model producing a distribution over classes for a feature vector.
pub trait Classifier: Sync {
    fn n_classes(&self) -> usize;

    fn dim(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

pub(crate) fn check_training_input(features: &[&[f64]], labels: &[usize], n_classes: usize) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let dim = features[0].len();
    for x in features {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidLabel { label, n_classes });
    }
    Ok(dim)
}
