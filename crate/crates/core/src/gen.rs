//! Instance generators: small named fixtures and seeded random families.

use crate::tree::{Instance, VertexId};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Path `0 - 1 - ... - n-1` with unit travel times, capacities, and
/// weights.
pub fn path(n: usize, k: usize) -> Instance {
    let edges = (1..n).map(|i| (i - 1, i, 1, 1)).collect();
    Instance::new(n, k, edges, vec![1; n]).expect("valid path")
}

/// Star with center `0` and leaves `1, 2, 3`; two people per leaf, none at
/// the center, unit edges.
pub fn star3() -> Instance {
    let edges = vec![(0, 1, 1, 1), (0, 2, 1, 1), (0, 3, 1, 1)];
    Instance::new(4, 1, edges, vec![0, 2, 2, 2]).expect("valid star")
}

/// Tree shapes for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Random,
    Path,
    Star,
    Caterpillar,
}

impl std::str::FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Shape::Random),
            "path" => Ok(Shape::Path),
            "star" => Ok(Shape::Star),
            "caterpillar" => Ok(Shape::Caterpillar),
            other => Err(format!("unknown shape `{other}`")),
        }
    }
}

/// Bounds for randomly drawn edge and vertex attributes (all inclusive).
#[derive(Debug, Clone, Copy)]
pub struct AttrRanges {
    pub max_tau: u64,
    pub max_cap: u64,
    pub max_weight: u64,
}

impl Default for AttrRanges {
    fn default() -> Self {
        AttrRanges {
            max_tau: 4,
            max_cap: 3,
            max_weight: 4,
        }
    }
}

/// Seeded random instance of a given shape; identical arguments always
/// produce the identical instance.
pub fn random_instance(n: usize, k: usize, shape: Shape, seed: u64, attrs: AttrRanges) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(VertexId, VertexId, u64, u64)> = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let parent = match shape {
            Shape::Path => i - 1,
            Shape::Star => 0,
            Shape::Caterpillar => {
                // Odd vertices form the spine; even ones hang off it.
                if i % 2 == 1 || i == 1 {
                    i.saturating_sub(2).max(0)
                } else {
                    i - 1
                }
            }
            Shape::Random => rng.gen_range(0..i),
        };
        let tau = rng.gen_range(0..=attrs.max_tau);
        let cap = rng.gen_range(1..=attrs.max_cap);
        edges.push((parent, i, tau, cap));
    }
    let weights = (0..n).map(|_| rng.gen_range(0..=attrs.max_weight)).collect();
    Instance::new(n.max(1), k, edges, weights).expect("generated tree is valid")
}
