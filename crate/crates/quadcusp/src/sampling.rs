//! Seeded random streams and uniform sampling in Euclidean balls and boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent stream `stream` of the generator seeded by `seed`. Work split into chunks uses
/// one stream per chunk, so results do not depend on the thread count.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Volume of the Euclidean ball of radius `r` in dimension `d`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let mut v = [1.0, 2.0];
    let unit = if d < 2 {
        v[d]
    } else {
        for k in 2..=d {
            let next = v[k % 2] * 2.0 * std::f64::consts::PI / k as f64;
            v[k % 2] = next;
        }
        v[d % 2]
    };
    unit * r.powi(d as i32)
}

/// A uniform point of the ball `B(center, r)`.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, center: &[f64], r: f64) -> Vec<f64> {
    let d = center.len();
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            continue;
        }
        let rad = r * rng.random::<f64>().powf(1.0 / d as f64);
        return center.iter().zip(&g).map(|(c, x)| c + rad * x / n).collect();
    }
}

/// A uniform point of the box `[lo, hi)`.
pub fn uniform_in_box<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter().zip(hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes() {
        use std::f64::consts::PI;
        assert_eq!(ball_volume(0, 3.0), 1.0);
        assert!((ball_volume(1, 1.5) - 3.0).abs() < 1e-15);
        assert!((ball_volume(2, 2.0) - 4.0 * PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((ball_volume(4, 1.0) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn ball_samples_stay_inside_and_fill() {
        let mut rng = stream_rng(7, 0);
        let c = [1.0, -2.0];
        let mut inner = 0;
        for _ in 0..20000 {
            let p = uniform_in_ball(&mut rng, &c, 0.5);
            let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
            assert!(r <= 0.5 + 1e-12);
            if r < 0.25 {
                inner += 1;
            }
        }
        // A quarter of the area lies within half the radius.
        assert!((inner as f64 / 20000.0 - 0.25).abs() < 0.02);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(1, 3).random();
        let b: u64 = stream_rng(1, 3).random();
        let c: u64 = stream_rng(1, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
