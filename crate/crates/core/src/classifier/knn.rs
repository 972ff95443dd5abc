use super::check_training_input;
use crate::error::{Error, Result};

/// k-nearest-neighbor vote under Euclidean distance, optionally on
/// z-scored features. Distance ties go to the earlier stored point, vote
/// ties to the smaller class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
    k: usize,
    /// Per-feature `(mean, std)` when standardizing.
    scaling: Option<Vec<(f64, f64)>>,
}

impl Knn {
    pub fn fit(features: &[&[f64]], labels: &[usize], n_classes: usize, k: usize, standardize: bool) -> Result<Self> {
        let dim = check_training_input(features, labels, n_classes)?;
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if k > features.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds the {} stored points",
                features.len()
            )));
        }
        let scaling = standardize.then(|| {
            (0..dim)
                .map(|j| {
                    let len = features.len() as f64;
                    let mean = features.iter().map(|x| x[j]).sum::<f64>() / len;
                    let var = features.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / len;
                    (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
                })
                .collect::<Vec<_>>()
        });
        let mut knn = Self {
            points: Vec::new(),
            labels: labels.to_vec(),
            n_classes,
            k,
            scaling,
        };
        knn.points = features.iter().map(|x| knn.transform(x)).collect();
        Ok(knn)
    }

    fn transform(&self, x: &[f64]) -> Vec<f64> {
        match &self.scaling {
            Some(s) => x.iter().zip(s).map(|(v, (m, sd))| (v - m) / sd).collect(),
            None => x.to_vec(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let dim = self.points[0].len();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        let q = self.transform(x);
        let mut dists: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; self.n_classes];
        for &(_, i) in &dists[..self.k] {
            votes[self.labels[i]] += 1;
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_with_k_one() {
        let x = [vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0]];
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let knn = Knn::fit(&refs, &[2, 0, 1], 3, 1, false).unwrap();
        assert_eq!(knn.predict(&[1.0, 1.0]).unwrap(), 0);
        assert_eq!(knn.predict(&[5.0, 5.0]).unwrap(), 1);
    }

    #[test]
    fn vote_tie_goes_to_smaller_class() {
        let x = [vec![-1.0], vec![1.0], vec![10.0]];
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let knn = Knn::fit(&refs, &[1, 0, 1], 2, 2, false).unwrap();
        assert_eq!(knn.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn k_larger_than_store_rejected() {
        let x = [vec![0.0], vec![1.0]];
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        assert!(Knn::fit(&refs, &[0, 1], 2, 3, false).is_err());
    }
}
