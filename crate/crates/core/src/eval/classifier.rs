use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::backends::{Image, LabeledDataset};
use crate::error::{Error, Result};
use crate::latentmath::argmax;
use crate::rng::Stream;

/// Pixels are centered by this value before the first layer.
pub const INPUT_CENTER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { hidden: 32, epochs: 100, learning_rate: 0.05, seed: 0 }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Parameter("hidden units must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// One-hidden-layer tanh perceptron on raw pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DMatrix<f64>,
    b2: DVector<f64>,
    input_shape: (usize, usize, usize),
    /// Mean cross-entropy before each update.
    pub loss_curve: Vec<f64>,
}

fn design_matrix(images: &[Image]) -> DMatrix<f64> {
    let p = images[0].len();
    DMatrix::from_fn(images.len(), p, |i, j| f64::from(images[i].pixels()[j]) - INPUT_CENTER)
}

fn forward(
    x: &DMatrix<f64>,
    w1: &DMatrix<f64>,
    b1: &DVector<f64>,
    w2: &DMatrix<f64>,
    b2: &DVector<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut a = x * w1.transpose();
    for mut row in a.row_iter_mut() {
        for (v, b) in row.iter_mut().zip(b1.iter()) {
            *v = (*v + b).tanh();
        }
    }
    let mut logits = &a * w2.transpose();
    for mut row in logits.row_iter_mut() {
        for (v, b) in row.iter_mut().zip(b2.iter()) {
            *v += b;
        }
        let m = row.max();
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        row /= z;
    }
    (a, logits)
}

/// Full-batch gradient descent on mean cross-entropy.
pub fn train_classifier(train: &LabeledDataset, config: &ClassifierConfig) -> Result<Classifier> {
    config.validate()?;
    let shape = train.image_shape().ok_or_else(|| Error::Input("training set is empty".into()))?;
    let present = train.class_counts().iter().filter(|&&n| n > 0).count();
    if present < 2 {
        return Err(Error::Input(format!("training set has {present} class present, need at least 2")));
    }
    let x = design_matrix(train.images());
    let (n, p) = x.shape();
    let (h, c) = (config.hidden, train.classes());

    let mut rng = Stream::root(config.seed).derive("classifier", 0).rng();
    let n1 = Normal::new(0.0, 1.0 / (p as f64).sqrt()).map_err(|e| Error::Parameter(e.to_string()))?;
    let n2 = Normal::new(0.0, 1.0 / (h as f64).sqrt()).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut w1 = DMatrix::from_fn(h, p, |_, _| n1.sample(&mut rng));
    let mut w2 = DMatrix::from_fn(c, h, |_, _| n2.sample(&mut rng));
    let mut b1 = DVector::zeros(h);
    let mut b2 = DVector::zeros(c);

    let mut loss_curve = Vec::with_capacity(config.epochs);
    let rate = config.learning_rate;
    for _ in 0..config.epochs {
        let (a, mut probs) = forward(&x, &w1, &b1, &w2, &b2);
        let mut loss = 0.0;
        for (i, &y) in train.labels().iter().enumerate() {
            loss -= probs[(i, y)].max(1e-300).ln();
            probs[(i, y)] -= 1.0;
        }
        loss_curve.push(loss / n as f64);
        let d_logits = probs / n as f64;
        let g_w2 = d_logits.transpose() * &a;
        let g_b2 = d_logits.row_sum().transpose();
        let mut d_hidden = &d_logits * &w2;
        d_hidden.zip_apply(&a, |d, a| *d *= 1.0 - a * a);
        let g_w1 = d_hidden.transpose() * &x;
        let g_b1 = d_hidden.row_sum().transpose();
        w1 -= g_w1 * rate;
        b1 -= g_b1 * rate;
        w2 -= g_w2 * rate;
        b2 -= g_b2 * rate;
    }
    if loss_curve.iter().any(|l| !l.is_finite()) {
        return Err(Error::Divergence { step: loss_curve.iter().position(|l| !l.is_finite()).unwrap_or(0) });
    }
    Ok(Classifier { w1, b1, w2, b2, input_shape: shape, loss_curve })
}

impl Classifier {
    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn classes(&self) -> usize {
        self.b2.len()
    }

    /// Class probabilities for each image.
    pub fn predict_proba(&self, images: &[Image]) -> Result<Vec<Vec<f64>>> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(im) = images.iter().find(|im| im.shape() != self.input_shape) {
            return Err(Error::Shape(format!(
                "image {:?} does not match classifier input {:?}",
                im.shape(),
                self.input_shape
            )));
        }
        let (_, probs) = forward(&design_matrix(images), &self.w1, &self.b1, &self.w2, &self.b2);
        Ok(probs.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// Predicted classes; ties go to the lowest index.
    pub fn predict(&self, images: &[Image]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(images)?.iter().map(|p| argmax(p)).collect())
    }
}
