use crate::error::{Error, Result};

/// A raster of `height × width × channels` pixels in `[0, 1]`, row-major with
/// interleaved channels.
///
/// Pixels are stored as `f32`, the precision of the on-disk container, so a
/// write/read round trip is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Shape(format!("image shape {height}x{width}x{channels} is empty")));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "image {height}x{width}x{channels} needs {} pixels, got {}",
                height * width * channels,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Input(format!("pixel {i} = {} outside [0, 1]", pixels[i])));
        }
        Ok(Image { height, width, channels, pixels })
    }

    /// Build from reals, clamping into `[0, 1]` (NaN becomes 0.5).
    pub fn from_f64_clamped(height: usize, width: usize, channels: usize, values: &[f64]) -> Result<Self> {
        let pixels = values.iter().map(|&v| if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) as f32 }).collect();
        Image::new(height, width, channels, pixels)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        Image::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p)).collect()
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    pub(crate) fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        self.pixels[(y * self.width + x) * self.channels + c] = v;
    }

    /// Little-endian bytes of the pixels, used for content digests.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.to_le_bytes()).collect()
    }

    pub fn squared_distance(&self, other: &Image) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| {
                let d = f64::from(*a) - f64::from(*b);
                d * d
            })
            .sum()
    }

    pub fn mse(&self, other: &Image) -> f64 {
        self.squared_distance(other) / self.pixels.len() as f64
    }
}

/// Images with class labels and class names.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    images: Vec<Image>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(images: Vec<Image>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Input(format!("{} images but {} labels", images.len(), labels.len())));
        }
        if class_names.len() < 2 {
            return Err(Error::Input(format!("need at least 2 classes, got {}", class_names.len())));
        }
        if let Some(i) = labels.iter().position(|&l| l >= class_names.len()) {
            return Err(Error::Input(format!(
                "label {} of sample {i} exceeds class count {}",
                labels[i],
                class_names.len()
            )));
        }
        if let Some(first) = images.first() {
            if let Some(i) = images.iter().position(|im| im.shape() != first.shape()) {
                return Err(Error::Shape(format!(
                    "sample {i} has shape {:?}, expected {:?}",
                    images[i].shape(),
                    first.shape()
                )));
            }
        }
        Ok(LabeledDataset { images, labels, class_names })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    /// `(height, width, channels)` of the samples, if any.
    pub fn image_shape(&self) -> Option<(usize, usize, usize)> {
        self.images.first().map(Image::shape)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Image, usize)> {
        self.images.iter().zip(self.labels.iter().copied())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Subset by sample indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let images = indices.iter().map(|&i| self.images[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset::new(images, labels, self.class_names.clone())
    }

    /// Append samples; shapes and class names must agree.
    pub fn extended(&self, images: Vec<Image>, labels: Vec<usize>) -> Result<Self> {
        let mut all_images = self.images.clone();
        all_images.extend(images);
        let mut all_labels = self.labels.clone();
        all_labels.extend(labels);
        LabeledDataset::new(all_images, all_labels, self.class_names.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_validation() {
        assert!(Image::new(2, 2, 1, vec![0.0; 4]).is_ok());
        assert!(matches!(Image::new(2, 2, 1, vec![0.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(Image::new(1, 1, 1, vec![1.5]), Err(Error::Input(_))));
        let im = Image::from_f64_clamped(1, 3, 1, &[-1.0, 0.25, 9.0]).unwrap();
        assert_eq!(im.pixels(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn dataset_validation() {
        let im = Image::filled(2, 2, 1, 0.5).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(LabeledDataset::new(vec![im.clone()], vec![1], names.clone()).is_ok());
        assert!(LabeledDataset::new(vec![im.clone()], vec![2], names.clone()).is_err());
        assert!(LabeledDataset::new(vec![im.clone()], vec![], names.clone()).is_err());
        assert!(LabeledDataset::new(vec![im.clone()], vec![0], vec!["a".into()]).is_err());
        let other = Image::filled(3, 2, 1, 0.5).unwrap();
        assert!(matches!(LabeledDataset::new(vec![im, other], vec![0, 1], names), Err(Error::Shape(_))));
    }
}
