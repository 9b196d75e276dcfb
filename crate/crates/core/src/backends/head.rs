//! Zero-shot head: unit-norm class prototypes scored by cosine affinity.

use super::embedder::Embedder;
use super::image::LabeledDataset;
use crate::error::{Error, Result};
use crate::latentmath::{cosine, norm, Prediction};

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotHead {
    classes: usize,
    dim: usize,
    prototypes: Vec<f64>,
    tau: f64,
}

impl ZeroShotHead {
    /// Normalize `classes × dim` prototype rows.
    pub fn from_rows(classes: usize, dim: usize, mut rows: Vec<f64>, tau: f64) -> Result<Self> {
        if classes < 2 || dim == 0 || rows.len() != classes * dim {
            return Err(Error::Shape(format!("{} prototype values for {classes} classes of dim {dim}", rows.len())));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::Parameter(format!("temperature must be positive, got {tau}")));
        }
        for (c, row) in rows.chunks_mut(dim).enumerate() {
            let n = norm(row);
            if !n.is_finite() || n <= 1e-12 {
                return Err(Error::DegenerateVector(format!("prototype of class {c} has norm {n:e}")));
            }
            row.iter_mut().for_each(|v| *v /= n);
        }
        Ok(ZeroShotHead { classes, dim, prototypes: rows, tau })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn embed_dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn prototype(&self, class: usize) -> &[f64] {
        &self.prototypes[class * self.dim..(class + 1) * self.dim]
    }

    pub fn predict(&self, embedding: &[f64]) -> Result<Prediction> {
        let affinities = (0..self.classes).map(|c| cosine(embedding, self.prototype(c))).collect::<Result<Vec<_>>>()?;
        Prediction::from_affinities(affinities, self.tau)
    }
}

/// Prototype of class `y` = normalized mean embedding of its exemplars.
pub fn fit_prototype_head(exemplars: &LabeledDataset, embedder: &Embedder, tau: f64) -> Result<ZeroShotHead> {
    let classes = exemplars.classes();
    let dim = embedder.embed_dim();
    let mut sums = vec![0.0; classes * dim];
    let mut counts = vec![0usize; classes];
    for (im, label) in exemplars.iter() {
        let e = embedder.embed(im)?;
        for (s, v) in sums[label * dim..(label + 1) * dim].iter_mut().zip(&e) {
            *s += v;
        }
        counts[label] += 1;
    }
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Coverage { class, name: exemplars.class_names()[class].clone() });
    }
    for (row, &c) in sums.chunks_mut(dim).zip(&counts) {
        row.iter_mut().for_each(|v| *v /= c as f64);
    }
    ZeroShotHead::from_rows(classes, dim, sums, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{gen_toy_dataset, make_embedder};

    #[test]
    fn single_exemplar_prototypes() {
        let ds = gen_toy_dataset(3, 1, 16, 4).unwrap();
        let emb = make_embedder((16, 16, 1), 24, 2).unwrap();
        let head = fit_prototype_head(&ds, &emb, 1.0).unwrap();
        for (im, label) in ds.iter() {
            let e = emb.embed(im).unwrap();
            let n = norm(&e);
            for (p, v) in head.prototype(label).iter().zip(&e) {
                assert!((p - v / n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rows_unit_norm() {
        let ds = gen_toy_dataset(8, 3, 16, 4).unwrap();
        let emb = make_embedder((16, 16, 1), 32, 2).unwrap();
        let head = fit_prototype_head(&ds, &emb, 1.0).unwrap();
        for c in 0..8 {
            assert!((norm(head.prototype(c)) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn missing_class_is_named() {
        let ds = gen_toy_dataset(3, 2, 16, 4).unwrap();
        let only_two = ds.select(&[0, 1, 3, 4]).unwrap();
        let emb = make_embedder((16, 16, 1), 8, 2).unwrap();
        match fit_prototype_head(&only_two, &emb, 1.0) {
            Err(Error::Coverage { class, name }) => {
                assert_eq!(class, 2);
                assert_eq!(name, "triangle");
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn zero_embedding_is_degenerate() {
        let head = ZeroShotHead::from_rows(2, 2, vec![1.0, 0.0, 0.0, 1.0], 1.0).unwrap();
        assert!(matches!(head.predict(&[0.0, 0.0]), Err(Error::DegenerateVector(_))));
    }
}
