//! Procedural grayscale shapes standing in for a small natural-image dataset.

use rand::Rng;

use super::image::{Image, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Shape family rendered for each class index.
pub const TOY_CLASS_NAMES: [&str; 8] =
    ["disc", "square", "triangle", "hstripes", "vstripes", "ring", "cross", "checker"];

/// Background level; shapes are drawn brighter than it.
const BACKGROUND: f64 = 0.5;
/// Half-width of the uniform per-pixel noise.
const NOISE: f64 = 0.12;
/// Center offset range as a fraction of the side.
const JITTER: f64 = 0.0625;
/// Shape radius range as a fraction of the side.
const RADIUS: (f64, f64) = (0.28, 0.36);

/// `classes × per_class` grayscale `side × side` images, classes interleaved
/// (sample `i` has label `i % classes`).
pub fn gen_toy_dataset(classes: usize, per_class: usize, side: usize, seed: u64) -> Result<LabeledDataset> {
    if !(2..=TOY_CLASS_NAMES.len()).contains(&classes) {
        return Err(Error::Parameter(format!("classes must be in [2, 8], got {classes}")));
    }
    if per_class == 0 {
        return Err(Error::Parameter("per_class must be at least 1".into()));
    }
    if !(8..=64).contains(&side) {
        return Err(Error::Parameter(format!("side must be in [8, 64], got {side}")));
    }
    let root = Stream::root(seed).derive("toy", 0);
    let n = classes * per_class;
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        images.push(render(class, side, root.derive("sample", i as u64))?);
        labels.push(class);
    }
    let names = TOY_CLASS_NAMES[..classes].iter().map(|s| s.to_string()).collect();
    LabeledDataset::new(images, labels, names)
}

fn inside(class: usize, dx: f64, dy: f64, r: f64) -> bool {
    let box_dist = dx.abs().max(dy.abs());
    let period = (r / 2.0).max(2.0);
    match class {
        0 => dx * dx + dy * dy <= r * r,
        1 => box_dist <= 0.95 * r && box_dist >= 0.45 * r,
        2 => {
            // Upward triangle with its apex at dy = -r.
            (-r..=0.8 * r).contains(&dy) && dx.abs() <= (dy + r) / 1.8
        }
        3 => box_dist <= r && ((dy + r) / period).floor() as i64 % 2 == 0,
        4 => box_dist <= r && ((dx + r) / period).floor() as i64 % 2 == 0,
        5 => {
            let d2 = dx * dx + dy * dy;
            d2 <= r * r && d2 >= 0.3 * r * r
        }
        6 => box_dist <= r && (dx.abs() <= 0.3 * r || dy.abs() <= 0.3 * r),
        7 => {
            let cell = ((dx + r) / period).floor() as i64 + ((dy + r) / period).floor() as i64;
            box_dist <= r && cell % 2 == 0
        }
        _ => unreachable!("class index validated by caller"),
    }
}

fn render(class: usize, side: usize, stream: Stream) -> Result<Image> {
    let mut rng = stream.rng();
    let s = side as f64;
    let jitter = s * JITTER;
    let cx = s / 2.0 + rng.random_range(-jitter..jitter);
    let cy = s / 2.0 + rng.random_range(-jitter..jitter);
    let r = s * rng.random_range(RADIUS.0..RADIUS.1);
    let brightness = rng.random_range(0.2..0.45);
    let mut pixels = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let mut v = BACKGROUND + rng.random_range(-NOISE..NOISE);
            if inside(class, dx, dy, r) {
                v += brightness;
            }
            pixels.push(v.clamp(0.0, 1.0) as f32);
        }
    }
    Image::new(side, side, 1, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_labels() {
        let ds = gen_toy_dataset(2, 10, 16, 1).unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(ds.class_counts(), vec![10, 10]);
        assert_eq!(ds.image_shape(), Some((16, 16, 1)));
        assert_eq!(ds.class_names()[1], "square");
    }

    #[test]
    fn deterministic_in_seed() {
        let a = gen_toy_dataset(8, 3, 12, 99).unwrap();
        let b = gen_toy_dataset(8, 3, 12, 99).unwrap();
        assert_eq!(a, b);
        let c = gen_toy_dataset(8, 3, 12, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pixels_in_unit_interval() {
        let ds = gen_toy_dataset(8, 4, 20, 5).unwrap();
        assert!(ds.images().iter().flat_map(|im| im.pixels()).all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn parameter_ranges() {
        assert!(gen_toy_dataset(1, 10, 16, 0).is_err());
        assert!(gen_toy_dataset(9, 10, 16, 0).is_err());
        assert!(gen_toy_dataset(2, 0, 16, 0).is_err());
        assert!(gen_toy_dataset(2, 1, 7, 0).is_err());
        assert!(gen_toy_dataset(2, 1, 65, 0).is_err());
    }

    #[test]
    fn every_shape_draws_something() {
        let ds = gen_toy_dataset(8, 2, 16, 3).unwrap();
        for (im, label) in ds.iter() {
            let bright = im.pixels().iter().filter(|&&p| p > 0.65).count();
            assert!(bright > 5, "class {label} drew {bright} pixels");
        }
    }
}
