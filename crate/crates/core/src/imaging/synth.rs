//! Seeded synthetic test images: smooth gradients and blobs with mild noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ImageChannel, RgbImage};

pub const SYNTH_WIDTH: u32 = 400;
pub const SYNTH_HEIGHT: u32 = 250;

/// Per-channel recipe; all terms are in [0, 1].
struct Recipe {
    angle: f64,
    freq: f64,
    phase: f64,
    cx: f64,
    cy: f64,
    radius: f64,
    mix: f64,
    lo: f64,
    hi: f64,
}

impl Recipe {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let lo = rng.gen_range(0.0..0.35);
        Recipe {
            angle: rng.gen_range(0.0..std::f64::consts::TAU),
            freq: rng.gen_range(0.5..3.0),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            cx: rng.gen_range(0.2..0.8),
            cy: rng.gen_range(0.2..0.8),
            radius: rng.gen_range(0.2..0.6),
            mix: rng.gen_range(0.2..0.8),
            lo,
            hi: rng.gen_range(lo + 0.5..1.0),
        }
    }

    fn at(&self, u: f64, v: f64) -> f64 {
        let (s, c) = self.angle.sin_cos();
        let ramp = (u * c + v * s).rem_euclid(1.0);
        let wave =
            0.5 + 0.5 * (std::f64::consts::TAU * self.freq * (u * s - v * c) + self.phase).sin();
        let d = ((u - self.cx).powi(2) + (v - self.cy).powi(2)).sqrt() / self.radius;
        let blob = (-d * d).exp();
        let t = self.mix * ramp + (1.0 - self.mix) * 0.5 * (wave + blob);
        self.lo + (self.hi - self.lo) * t
    }
}

fn synth_image(rng: &mut ChaCha8Rng, width: u32, height: u32) -> RgbImage {
    let channels = [0, 1, 2].map(|_| {
        let r = Recipe::random(rng);
        let noise = rng.gen_range(2.0..8.0);
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| {
                let u = x as f64 / width.max(2) as f64;
                let v = y as f64 / height.max(2) as f64;
                let n: f64 = rng.gen_range(-noise..=noise);
                (255.0 * r.at(u, v) + n).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        ImageChannel::new(width, height, data).expect("size matches")
    });
    RgbImage::from_channels(channels).expect("same shapes")
}

/// Deterministic pair number `index` of the suite drawn from `seed`.
pub fn synthetic_pair(seed: u64, index: u32, width: u32, height: u32) -> (RgbImage, RgbImage) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    let a = synth_image(&mut rng, width, height);
    let b = synth_image(&mut rng, width, height);
    (a, b)
}

/// `count` pairs at the default 400x250 size.
pub fn synthetic_suite(seed: u64, count: u32) -> Vec<(RgbImage, RgbImage)> {
    (0..count)
        .map(|i| synthetic_pair(seed, i, SYNTH_WIDTH, SYNTH_HEIGHT))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        let (a1, b1) = synthetic_pair(2019, 3, 64, 32);
        let (a2, b2) = synthetic_pair(2019, 3, 64, 32);
        assert_eq!((&a1, &b1), (&a2, &b2));
        let (a3, _) = synthetic_pair(2019, 4, 64, 32);
        assert_ne!(a1, a3);
        assert_ne!(a1, b1);
        assert_eq!((a1.width(), a1.height()), (64, 32));
    }

    #[test]
    fn suite_uses_default_size() {
        let s = synthetic_suite(1, 2);
        assert_eq!(s.len(), 2);
        assert_eq!(
            (s[0].0.width(), s[0].0.height()),
            (SYNTH_WIDTH, SYNTH_HEIGHT)
        );
    }

    #[test]
    fn pixels_span_a_useful_range() {
        let (a, _) = synthetic_pair(5, 0, 100, 100);
        for c in a.channels() {
            let min = *c.data().iter().min().unwrap();
            let max = *c.data().iter().max().unwrap();
            assert!(max - min > 60, "range {min}..{max}");
        }
    }
}
