use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::{DiscretePath, Grid, PointInTheta};
use crate::error::Result;

/// Gaussian random walk on `grid` with per-step standard deviation
/// `scale · √h`, started at zero.
pub fn random_walk_path(grid: Grid, dim: usize, scale: f64, rng: &mut impl Rng) -> Result<DiscretePath> {
    let sd = scale * grid.step().sqrt();
    let mut values = vec![0.0; dim];
    for k in 1..=grid.steps() {
        for a in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            values.push(values[(k - 1) * dim + a] + sd * z);
        }
    }
    DiscretePath::new(grid, dim, values)
}

/// A random-walk path stopped at a uniformly drawn grid time in `[0, t_max]`.
pub fn random_point(grid: Grid, dim: usize, scale: f64, t_max: f64, rng: &mut impl Rng) -> Result<PointInTheta> {
    let path = random_walk_path(grid, dim, scale, rng)?;
    let last = ((t_max / grid.step()).floor() as usize).min(grid.steps());
    let k = rng.random_range(0..=last);
    PointInTheta::new(grid.time(k), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn starts_at_zero_and_is_seeded() {
        let g = Grid::new(1.0, 16).unwrap();
        let a = random_walk_path(g, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = random_walk_path(g, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.node(0), &[0.0, 0.0]);
        let th = random_point(g, 1, 1.0, 0.5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(th.t() <= 0.5);
    }
}
