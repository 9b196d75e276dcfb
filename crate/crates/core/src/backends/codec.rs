//! Closed-form linear autoencoder: top principal directions of the training
//! images, with a transpose decoder.

use nalgebra::{DMatrix, SymmetricEigen};

use super::image::{Image, LabeledDataset};
use super::linalg::{orthonormality_error, orthonormalize_rows};
use crate::error::{Error, Result};
use crate::latentmath::{dot, Latent};

/// Eigenvalues below `RANK_TOL · λ_max` count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LinearCodec {
    mean_image: Vec<f64>,
    basis: Vec<Vec<f64>>,
    latent_shape: (usize, usize),
    image_shape: (usize, usize, usize),
}

impl LinearCodec {
    /// Fit the top `latent_dim` principal directions of `dataset`.
    ///
    /// Basis rows are sign-normalized so their first nonzero coordinate is positive.
    pub fn fit(dataset: &LabeledDataset, latent_dim: usize, latent_shape: (usize, usize)) -> Result<Self> {
        let image_shape =
            dataset.image_shape().ok_or_else(|| Error::Input("cannot fit a codec on an empty dataset".into()))?;
        let n = dataset.len();
        let pix = image_shape.0 * image_shape.1 * image_shape.2;
        if latent_shape.0 * latent_shape.1 != latent_dim || latent_dim == 0 {
            return Err(Error::Parameter(format!(
                "latent shape {}x{} does not hold {latent_dim} values",
                latent_shape.0, latent_shape.1
            )));
        }
        if latent_dim > n.min(pix) {
            return Err(Error::Parameter(format!("latent_dim {latent_dim} exceeds min(samples {n}, pixels {pix})")));
        }

        let mut mean_image = vec![0.0; pix];
        for im in dataset.images() {
            for (m, p) in mean_image.iter_mut().zip(im.pixels()) {
                *m += f64::from(*p);
            }
        }
        for m in &mut mean_image {
            *m /= n as f64;
        }
        let centered = DMatrix::from_fn(n, pix, |i, j| f64::from(dataset.images()[i].pixels()[j]) - mean_image[j]);

        // Diagonalize the smaller of the Gram and covariance matrices.
        let gram_route = n < pix;
        let sym = if gram_route { &centered * centered.transpose() } else { centered.transpose() * &centered };
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let achievable = order.iter().filter(|&&i| top > 0.0 && eig.eigenvalues[i] > RANK_TOL * top).count();
        if latent_dim > achievable {
            return Err(Error::Rank { requested: latent_dim, achievable });
        }

        let mut basis: Vec<Vec<f64>> = order[..latent_dim]
            .iter()
            .map(|&i| {
                let v = eig.eigenvectors.column(i);
                if gram_route {
                    // Right singular vector: Xᵀv / |Xᵀv|
                    (0..pix).map(|j| (0..n).map(|r| centered[(r, j)] * v[r]).sum()).collect()
                } else {
                    v.iter().copied().collect()
                }
            })
            .collect();
        if !orthonormalize_rows(&mut basis) {
            return Err(Error::Rank { requested: latent_dim, achievable: latent_dim - 1 });
        }
        for row in &mut basis {
            if let Some(first) = row.iter().find(|v| v.abs() > 1e-12) {
                if *first < 0.0 {
                    row.iter_mut().for_each(|v| *v = -*v);
                }
            }
        }
        Ok(LinearCodec { mean_image, basis, latent_shape, image_shape })
    }

    pub fn latent_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn latent_shape(&self) -> (usize, usize) {
        self.latent_shape
    }

    pub fn image_shape(&self) -> (usize, usize, usize) {
        self.image_shape
    }

    pub fn pixel_count(&self) -> usize {
        self.mean_image.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn mean_image(&self) -> &[f64] {
        &self.mean_image
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.basis)
    }

    fn check_image(&self, image: &Image) -> Result<()> {
        if image.shape() != self.image_shape {
            return Err(Error::Shape(format!("image {:?} vs codec {:?}", image.shape(), self.image_shape)));
        }
        Ok(())
    }

    /// `basis · (x − mean)` for flattened pixels.
    pub fn encode_pixels(&self, pixels: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = pixels.iter().zip(&self.mean_image).map(|(p, m)| p - m).collect();
        self.basis.iter().map(|row| dot(row, &centered)).collect()
    }

    /// `mean + basisᵀ · latent`, without clamping.
    pub fn decode_pixels(&self, latent: &[f64]) -> Vec<f64> {
        let mut out = self.mean_image.clone();
        for (row, &l) in self.basis.iter().zip(latent) {
            for (o, b) in out.iter_mut().zip(row) {
                *o += l * b;
            }
        }
        out
    }

    /// `basis · g` for a pixel-space gradient.
    pub fn pull_pixels(&self, grad: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|row| dot(row, grad)).collect()
    }

    pub fn encode(&self, image: &Image) -> Result<Latent> {
        self.check_image(image)?;
        let (t, d) = self.latent_shape;
        Latent::new(t, d, self.encode_pixels(&image.to_f64()))
    }

    pub fn decode(&self, latent: &Latent) -> Result<Image> {
        if latent.shape() != self.latent_shape {
            return Err(Error::Shape(format!("latent {:?} vs codec {:?}", latent.shape(), self.latent_shape)));
        }
        let (h, w, c) = self.image_shape;
        Image::from_f64_clamped(h, w, c, &self.decode_pixels(latent.values()))
    }

    /// `decode(encode(x))`.
    pub fn reconstruct(&self, image: &Image) -> Result<Image> {
        self.decode(&self.encode(image)?)
    }

    pub fn reconstruction_mse(&self, dataset: &LabeledDataset) -> Result<f64> {
        let mut total = 0.0;
        for im in dataset.images() {
            total += im.mse(&self.reconstruct(im)?);
        }
        Ok(total / dataset.len() as f64)
    }
}
