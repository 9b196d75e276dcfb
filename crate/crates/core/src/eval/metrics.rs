use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::backends::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Mean recall over classes present in the test set.
    pub macro_accuracy: f64,
    /// `None` for classes absent from the test set.
    pub per_class_recall: Vec<Option<f64>>,
    pub absent_classes: Vec<usize>,
    pub train_loss_curve: Vec<f64>,
}

pub fn metrics_from_predictions(predicted: &[usize], labels: &[usize], classes: usize) -> Result<Metrics> {
    if predicted.len() != labels.len() {
        return Err(Error::Shape(format!("{} predictions for {} labels", predicted.len(), labels.len())));
    }
    if labels.is_empty() {
        return Err(Error::Input("test set is empty".into()));
    }
    if let Some(&l) = labels.iter().chain(predicted).find(|&&l| l >= classes) {
        return Err(Error::Input(format!("class {l} exceeds class count {classes}")));
    }
    let mut hits = vec![0usize; classes];
    let mut totals = vec![0usize; classes];
    for (&p, &y) in predicted.iter().zip(labels) {
        totals[y] += 1;
        hits[y] += usize::from(p == y);
    }
    let per_class_recall: Vec<Option<f64>> =
        (0..classes).map(|k| (totals[k] > 0).then(|| hits[k] as f64 / totals[k] as f64)).collect();
    let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    Ok(Metrics {
        accuracy: hits.iter().sum::<usize>() as f64 / labels.len() as f64,
        macro_accuracy: present.iter().sum::<f64>() / present.len() as f64,
        absent_classes: (0..classes).filter(|&k| totals[k] == 0).collect(),
        per_class_recall,
        train_loss_curve: Vec::new(),
    })
}

pub fn evaluate(model: &Classifier, test: &LabeledDataset) -> Result<Metrics> {
    if test.classes() != model.classes() {
        return Err(Error::Shape(format!("test set has {} classes, model {}", test.classes(), model.classes())));
    }
    let predicted = model.predict(test.images())?;
    let mut m = metrics_from_predictions(&predicted, test.labels(), test.classes())?;
    m.train_loss_curve = model.loss_curve.clone();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_constant_and_imbalanced() {
        let m = metrics_from_predictions(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!((m.accuracy, m.macro_accuracy), (1.0, 1.0));
        let m = metrics_from_predictions(&[0, 0, 0, 0], &[0, 1, 0, 1], 2).unwrap();
        assert_eq!((m.accuracy, m.macro_accuracy), (0.5, 0.5));
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        let m = metrics_from_predictions(&[0; 100], &labels, 2).unwrap();
        assert!((m.accuracy - 0.9).abs() < 1e-12);
        assert!((m.macro_accuracy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn absent_class_is_flagged_and_excluded() {
        let m = metrics_from_predictions(&[0, 1, 1], &[0, 1, 1], 3).unwrap();
        assert_eq!(m.per_class_recall, vec![Some(1.0), Some(1.0), None]);
        assert_eq!(m.absent_classes, vec![2]);
        assert_eq!(m.macro_accuracy, 1.0);
    }
}
