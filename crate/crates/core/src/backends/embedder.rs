//! Seeded orthonormal projection used as the scoring image encoder.

use rand_distr::{Distribution, StandardNormal};

use super::image::Image;
use super::linalg::{orthonormality_error, orthonormalize_rows};
use crate::error::{Error, Result};
use crate::latentmath::dot;
use crate::rng::Stream;

/// Pixel level subtracted before projection.
pub const EMBED_CENTER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    projection: Vec<Vec<f64>>,
    input_shape: (usize, usize, usize),
}

impl Embedder {
    pub fn new(input_shape: (usize, usize, usize), embed_dim: usize, seed: u64) -> Result<Self> {
        let pix = input_shape.0 * input_shape.1 * input_shape.2;
        if embed_dim == 0 || embed_dim > pix {
            return Err(Error::Parameter(format!("embed_dim must be in [1, {pix}], got {embed_dim}")));
        }
        let mut rng = Stream::root(seed).derive("embedder", 0).rng();
        let mut projection: Vec<Vec<f64>> =
            (0..embed_dim).map(|_| (0..pix).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        if !orthonormalize_rows(&mut projection) {
            return Err(Error::Parameter("seeded projection is rank deficient".into()));
        }
        Ok(Embedder { projection, input_shape })
    }

    pub fn embed_dim(&self) -> usize {
        self.projection.len()
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn projection(&self) -> &[Vec<f64>] {
        &self.projection
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.projection)
    }

    /// `projection · (x − 0.5)` on flattened pixels.
    pub fn embed_pixels(&self, pixels: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = pixels.iter().map(|p| p - EMBED_CENTER).collect();
        self.projection.iter().map(|row| dot(row, &centered)).collect()
    }

    pub fn embed(&self, image: &Image) -> Result<Vec<f64>> {
        if image.shape() != self.input_shape {
            return Err(Error::Shape(format!("image {:?} vs embedder {:?}", image.shape(), self.input_shape)));
        }
        Ok(self.embed_pixels(&image.to_f64()))
    }

    /// `projectionᵀ · e`, the minimum-norm pixel offset with embedding `e`.
    pub fn lift(&self, embedding: &[f64]) -> Vec<f64> {
        let pix = self.projection.first().map_or(0, Vec::len);
        let mut out = vec![0.0; pix];
        for (row, &e) in self.projection.iter().zip(embedding) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += e * r;
            }
        }
        out
    }
}

/// Convenience wrapper matching the other backend constructors.
pub fn make_embedder(input_shape: (usize, usize, usize), embed_dim: usize, seed: u64) -> Result<Embedder> {
    Embedder::new(input_shape, embed_dim, seed)
}
