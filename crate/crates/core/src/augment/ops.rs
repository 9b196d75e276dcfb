//! Pixel-space augmentations. Every op preserves shape and the `[0, 1]` range.

use rand::Rng;

use crate::backends::Image;
use crate::rng::Stream;

/// Value written into masked or vacated pixels.
pub const FILL: f32 = 0.5;

/// One square of side `round(frac·min(H, W))`, placed uniformly inside the image, set to [`FILL`].
pub fn cutout(image: &Image, frac: f64, stream: Stream) -> Image {
    let (h, w, c) = image.shape();
    let side = (frac.clamp(0.0, 1.0) * h.min(w) as f64).round() as usize;
    let mut out = image.clone();
    if side == 0 {
        return out;
    }
    let mut rng = stream.rng();
    let top = rng.random_range(0..=h - side);
    let left = rng.random_range(0..=w - side);
    for y in top..top + side {
        for x in left..left + side {
            for ch in 0..c {
                out.set(y, x, ch, FILL);
            }
        }
    }
    out
}

/// Square holes of side `round((1 − keep_ratio)·period)` repeating every
/// `period` pixels, offset by `phase = (dx, dy)`.
pub fn gridmask(image: &Image, period: usize, keep_ratio: f64, phase: (usize, usize)) -> Image {
    let (h, w, c) = image.shape();
    let period = period.max(2);
    let hole = ((1.0 - keep_ratio.clamp(0.0, 1.0)) * period as f64).round() as usize;
    let mut out = image.clone();
    if hole == 0 {
        return out;
    }
    let (dx, dy) = (phase.0 % period, phase.1 % period);
    for y in 0..h {
        let in_row = (y + period - dy) % period < hole;
        if !in_row {
            continue;
        }
        for x in 0..w {
            if (x + period - dx) % period < hole {
                for ch in 0..c {
                    out.set(y, x, ch, FILL);
                }
            }
        }
    }
    out
}

pub fn hflip(image: &Image) -> Image {
    let (h, w, c) = image.shape();
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                out.set(y, x, ch, image.get(y, w - 1 - x, ch));
            }
        }
    }
    out
}

/// Quarter turn clockwise. Non-square images get a half turn instead so the shape is kept.
pub fn rot90(image: &Image) -> Image {
    let (h, w, c) = image.shape();
    let mut out = image.clone();
    if h != w {
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    out.set(y, x, ch, image.get(h - 1 - y, w - 1 - x, ch));
                }
            }
        }
        return out;
    }
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                out.set(y, x, ch, image.get(h - 1 - x, y, ch));
            }
        }
    }
    out
}

pub fn brightness(image: &Image, alpha: f64) -> Image {
    let mut out = image.clone();
    let (h, w, c) = image.shape();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v = (f64::from(image.get(y, x, ch)) * alpha).clamp(0.0, 1.0);
                out.set(y, x, ch, v as f32);
            }
        }
    }
    out
}

/// Integer shift; vacated pixels become [`FILL`].
pub fn translate(image: &Image, dx: isize, dy: isize) -> Image {
    let (h, w, c) = image.shape();
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let sy = y as isize - dy;
            let sx = x as isize - dx;
            for ch in 0..c {
                let v = if (0..h as isize).contains(&sy) && (0..w as isize).contains(&sx) {
                    image.get(sy as usize, sx as usize, ch)
                } else {
                    FILL
                };
                out.set(y, x, ch, v);
            }
        }
    }
    out
}

/// One or two ops drawn from {flip, rotate, brightness ∈ [0.7, 1.3], translate ≤ 25%}.
pub fn rand_lite(image: &Image, stream: Stream) -> Image {
    let mut rng = stream.rng();
    let ops = rng.random_range(1..=2);
    let mut out = image.clone();
    for _ in 0..ops {
        out = match rng.random_range(0..4) {
            0 => hflip(&out),
            1 => rot90(&out),
            2 => brightness(&out, rng.random_range(0.7..=1.3)),
            _ => {
                let max_x = (out.width() / 4) as i64;
                let max_y = (out.height() / 4) as i64;
                let dx = rng.random_range(-max_x..=max_x) as isize;
                let dy = rng.random_range(-max_y..=max_y) as isize;
                translate(&out, dx, dy)
            }
        };
    }
    out
}
