//! Single-layer multiclass perceptron with the bias folded into the last
//! weight column.

use super::{check_dim, BipolarPattern, NetworkFile};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Perceptron {
    classes: usize,
    dimension: usize,
    /// Row-major C×(D+1).
    weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerceptronFit {
    pub model: Perceptron,
    pub converged: bool,
    /// Total updates made across all epochs.
    pub mistakes: usize,
    pub epochs_run: usize,
}

impl Perceptron {
    pub fn zeros(classes: usize, dimension: usize) -> Self {
        Self {
            classes,
            dimension,
            weights: vec![0.0; classes * (dimension + 1)],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn row(&self, class: usize) -> &[f64] {
        let w = self.dimension + 1;
        &self.weights[class * w..(class + 1) * w]
    }

    /// Per-class scores w_c · [x; 1].
    pub fn margins(&self, input: &BipolarPattern) -> Result<Vec<f64>> {
        check_dim(self.dimension, input.dimension())?;
        Ok((0..self.classes)
            .map(|c| {
                let row = self.row(c);
                row[self.dimension]
                    + row[..self.dimension]
                        .iter()
                        .zip(input.values())
                        .map(|(w, &x)| w * f64::from(x))
                        .sum::<f64>()
            })
            .collect())
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn predict(&self, input: &BipolarPattern) -> Result<usize> {
        let margins = self.margins(input)?;
        let mut best = 0;
        for (c, &m) in margins.iter().enumerate() {
            if m > margins[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// On each mistake add the input to the true row and subtract it from the
    /// predicted row. Examples are presented in input order every epoch.
    pub fn train(data: &[(BipolarPattern, usize)], epochs: usize, learning_rate: f64) -> Result<PerceptronFit> {
        let first = data
            .first()
            .ok_or_else(|| Error::Training("no training examples".into()))?;
        let d = first.0.dimension();
        for (x, _) in data {
            check_dim(d, x.dimension())?;
        }
        let classes = data.iter().map(|(_, c)| c + 1).max().unwrap_or(1);
        let mut model = Perceptron::zeros(classes, d);
        let width = d + 1;
        let mut mistakes = 0;
        let mut converged = false;
        let mut epochs_run = 0;
        for _ in 0..epochs {
            epochs_run += 1;
            let mut epoch_mistakes = 0;
            for (x, y) in data {
                let predicted = model.predict(x)?;
                if predicted == *y {
                    continue;
                }
                epoch_mistakes += 1;
                for (i, &v) in x.values().iter().enumerate() {
                    let step = learning_rate * f64::from(v);
                    model.weights[y * width + i] += step;
                    model.weights[predicted * width + i] -= step;
                }
                model.weights[y * width + d] += learning_rate;
                model.weights[predicted * width + d] -= learning_rate;
            }
            mistakes += epoch_mistakes;
            if model.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Divergence("non-finite perceptron weight".into()));
            }
            if epoch_mistakes == 0 {
                converged = true;
                break;
            }
        }
        Ok(PerceptronFit {
            model,
            converged,
            mistakes,
            epochs_run,
        })
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile::Perceptron {
            classes: self.classes,
            dimension: self.dimension,
            weights: self.weights.clone(),
        }
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self> {
        let NetworkFile::Perceptron {
            classes,
            dimension,
            weights,
        } = file
        else {
            return Err(Error::Usage("not a perceptron network file".into()));
        };
        check_dim(classes * (dimension + 1), weights.len())?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Usage("non-finite weight".into()));
        }
        Ok(Self {
            classes: *classes,
            dimension: *dimension,
            weights: weights.clone(),
        })
    }
}
