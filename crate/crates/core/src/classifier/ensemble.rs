use super::{train_mlr, Classifier, Knn, LinearSvm, MlrConfig, MlrModel, SvmConfig};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct AuxConfig {
    pub mlr: MlrConfig,
    pub svm: SvmConfig,
    pub k: usize,
    pub standardize_knn: bool,
}

impl Default for AuxConfig {
    fn default() -> Self {
        Self {
            mlr: MlrConfig::default(),
            svm: SvmConfig::default(),
            k: 5,
            standardize_knn: true,
        }
    }
}

/// Logistic regression, linear SVM and kNN trained on the same labels; the
/// voting baselines compare their predictions with assigned labels.
#[derive(Debug, Clone)]
pub struct AuxEnsemble {
    pub mlr: MlrModel,
    pub svm: LinearSvm,
    pub knn: Knn,
}

pub fn train_aux(features: &[&[f64]], labels: &[usize], n_classes: usize, config: &AuxConfig) -> Result<AuxEnsemble> {
    Ok(AuxEnsemble {
        mlr: train_mlr(None, features, labels, n_classes, &config.mlr)?,
        svm: LinearSvm::train(features, labels, n_classes, &config.svm)?,
        knn: Knn::fit(features, labels, n_classes, config.k, config.standardize_knn)?,
    })
}

/// Predicted class of each member, in the order MLR, SVM, kNN.
pub fn aux_predictions(ensemble: &AuxEnsemble, x: &[f64]) -> Result<[usize; 3]> {
    Ok([
        ensemble.mlr.predict(x)?,
        ensemble.svm.predict(x)?,
        ensemble.knn.predict(x)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_agree_on_separable_training_set() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for c in 0..3 {
            for k in 0..8 {
                let mut v = vec![0.0; 3];
                v[c] = 5.0 + 0.1 * k as f64;
                v[(c + 1) % 3] = 0.05 * k as f64;
                x.push(v);
                y.push(c);
            }
        }
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let ens = train_aux(&refs, &y, 3, &AuxConfig::default()).unwrap();
        for (xi, &yi) in refs.iter().zip(&y) {
            assert_eq!(aux_predictions(&ens, xi).unwrap(), [yi; 3]);
        }
    }
}
