//! Hit-and-run random walk on a convex body.

use super::body::ConvexBody;
use crate::error::{Error, Result};
use rand::Rng;

/// An isotropic unit direction, from Gaussian coordinates (Box–Muller).
pub(crate) fn random_unit_direction<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut u = Vec::with_capacity(d);
        while u.len() < d {
            let a: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let b: f64 = rng.gen();
            let radius = (-2.0 * a.ln()).sqrt();
            let angle = std::f64::consts::TAU * b;
            u.push(radius * angle.cos());
            if u.len() < d {
                u.push(radius * angle.sin());
            }
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in &mut u {
                *v /= norm;
            }
            return u;
        }
    }
}

/// Runs `steps` hit-and-run moves from `start` and returns the endpoint.
///
/// Each move picks an isotropic direction, computes the body's chord
/// through the current point, and jumps to a uniform point of the chord
/// (nudged off the endpoints to stay strictly inside). Degenerate chords
/// are retried with fresh directions; a full sweep of failures is
/// [`Error::WalkStuck`].
pub(crate) fn hit_and_run<B: ConvexBody + ?Sized, R: Rng>(
    body: &B,
    start: &[f64],
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = body.dim();
    let (_, scale) = body.bounding_ball();
    let min_width = 1e-13 * scale.max(1e-300);
    let mut x = start.to_vec();
    let mut done = 0usize;
    let mut stale = 0usize;
    while done < steps {
        let u = random_unit_direction(d, rng);
        let (lo, hi) = body.chord(&x, &u)?;
        let width = hi - lo;
        if !(width > min_width) || !width.is_finite() {
            stale += 1;
            if stale > 64 {
                return Err(Error::WalkStuck);
            }
            continue;
        }
        stale = 0;
        let margin = 1e-9 * width;
        let t = (lo + width * rng.gen::<f64>()).clamp(lo + margin, hi - margin);
        for (xi, ui) in x.iter_mut().zip(&u) {
            *xi += t * ui;
        }
        done += 1;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::body::MembershipBody;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn directions_are_unit_and_cover_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut neg = 0usize;
        for _ in 0..200 {
            let u = random_unit_direction(3, &mut rng);
            let n: f64 = u.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
            if u[0] < 0.0 {
                neg += 1;
            }
        }
        assert!(neg > 50 && neg < 150);
    }

    #[test]
    fn walk_stays_inside_square() {
        let square = MembershipBody::new(
            2,
            |p: &[f64]| p.iter().all(|v| (0.0..=1.0).contains(v)),
            vec![0.9, 0.9],
            (vec![0.0, 0.0], vec![1.0, 1.0]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let z = hit_and_run(&square, &[0.9, 0.9], 30, &mut rng).unwrap();
            assert!(square.contains(&z).unwrap(), "escaped to {z:?}");
        }
    }

    #[test]
    fn walk_mean_approaches_center() {
        let square = MembershipBody::new(
            2,
            |p: &[f64]| p.iter().all(|v| (0.0..=1.0).contains(v)),
            vec![0.05, 0.05],
            (vec![0.0, 0.0], vec![1.0, 1.0]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 2000usize;
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let z = hit_and_run(&square, &[0.05, 0.05], 60, &mut rng).unwrap();
            mean[0] += z[0];
            mean[1] += z[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        // 3 sigma of the mean of Uniform[0,1] over 2000 draws is ~0.019;
        // allow extra for residual walk correlation from the corner start.
        assert!((mean[0] - 0.5).abs() < 0.03, "mean {mean:?}");
        assert!((mean[1] - 0.5).abs() < 0.03, "mean {mean:?}");
    }
}
