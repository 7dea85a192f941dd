use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::StatsError;

/// Linear map from `in_dim` to `out_dim` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub in_dim: usize,
    pub out_dim: usize,
    pub seed: Option<u64>,
    #[serde(skip)]
    matrix: Option<Vec<f64>>,
}

impl Projection {
    /// Pass-through map, useful when no reduction is wanted.
    pub fn identity(dim: usize) -> Self {
        Self {
            in_dim: dim,
            out_dim: dim,
            seed: None,
            matrix: None,
        }
    }

    /// Gaussian matrix with entries N(0, 1) / sqrt(out_dim), drawn row-major from
    /// a ChaCha8 stream seeded with `seed`.
    pub fn gaussian(in_dim: usize, out_dim: usize, seed: u64) -> Result<Self, StatsError> {
        if out_dim == 0 || out_dim > in_dim {
            return Err(StatsError::ProjectionTooLarge { in_dim, out_dim });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (out_dim as f64).sqrt();
        let matrix = (0..in_dim * out_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        Ok(Self {
            in_dim,
            out_dim,
            seed: Some(seed),
            matrix: Some(matrix),
        })
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, StatsError> {
        if v.len() != self.in_dim {
            return Err(StatsError::RaggedInput);
        }
        let Some(m) = &self.matrix else {
            return Ok(v.to_vec());
        };
        let mut out = vec![0.0; self.out_dim];
        for (i, x) in v.iter().enumerate() {
            let row = &m[i * self.out_dim..(i + 1) * self.out_dim];
            for (o, r) in out.iter_mut().zip(row) {
                *o += x * r;
            }
        }
        Ok(out)
    }

    pub fn apply_all<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>, StatsError> {
        rows.iter().map(|r| self.apply(r.as_ref())).collect()
    }
}

/// `floor(sqrt(n))`, at least 1.
pub fn default_projection_dim(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// Projects every row of `vectors` with a fresh Gaussian matrix.
pub fn random_projection<R: AsRef<[f64]>>(
    vectors: &[R],
    out_dim: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, StatsError> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let d = first.as_ref().len();
    if vectors.iter().any(|v| v.as_ref().len() != d) {
        return Err(StatsError::RaggedInput);
    }
    Projection::gaussian(d, out_dim, seed)?.apply_all(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::euclidean;
    use proptest::prelude::*;
    use rand::Rng;

    fn ranks(xs: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let mut r = vec![0.0; xs.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }

    fn spearman(a: &[f64], b: &[f64]) -> f64 {
        let (ra, rb) = (ranks(a), ranks(b));
        let n = a.len() as f64;
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    }

    #[test]
    fn identity_leaves_input_unchanged() {
        let v = vec![vec![1.0, -2.0, 3.5]];
        assert_eq!(Projection::identity(3).apply_all(&v).unwrap(), v);
    }

    #[test]
    fn same_seed_same_bits() {
        let v = vec![vec![0.3; 20], vec![-1.0; 20]];
        let a = random_projection(&v, 5, 9).unwrap();
        let b = random_projection(&v, 5, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_projection(&v, 5, 10).unwrap());
    }

    #[test]
    fn default_dim_is_floor_sqrt() {
        assert_eq!(default_projection_dim(100), 10);
        assert_eq!(default_projection_dim(99), 9);
        assert_eq!(default_projection_dim(0), 1);
    }

    #[test]
    fn too_large_rejected() {
        assert_eq!(
            random_projection(&[vec![1.0; 3]], 4, 0),
            Err(StatsError::ProjectionTooLarge { in_dim: 3, out_dim: 4 })
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn preserves_distance_ordering(seed in any::<u64>(), out_dim in 16usize..48) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = 128;
            // per-vector scales spread the pairwise distances; isotropic
            // vectors of equal norm are all nearly equidistant in 128-d
            let vs: Vec<Vec<f64>> = (0..50)
                .map(|_| {
                    let s = rng.random_range(-1.5f64..1.5).exp();
                    (0..d).map(|_| s * rng.random_range(-1.0..1.0)).collect()
                })
                .collect();
            let ps = random_projection(&vs, out_dim, seed ^ 0x55).unwrap();
            let mut orig = Vec::new();
            let mut proj = Vec::new();
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    orig.push(euclidean(&vs[i], &vs[j]));
                    proj.push(euclidean(&ps[i], &ps[j]));
                }
            }
            prop_assert!(spearman(&orig, &proj) >= 0.7);
        }
    }
}
