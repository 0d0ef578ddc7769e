use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::KdeError;
use crate::points::PointSet;
use crate::rng::{self, Stream};

/// Built-in seeded point generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// Isotropic `N(0, I_d)` cloud.
    GaussianCluster,
    /// Equal mixture of `N(+-1.5 e_1, 0.5^2 I_d)`.
    TwoClusters,
    /// Uniform on `[-1, 1]^d`.
    UniformCube,
    /// Uniform on the segment `t (1, ..., 1) / sqrt(d)`, `t in [-2, 2]`.
    Line,
}

impl Generator {
    pub const ALL: [Generator; 4] = [
        Generator::GaussianCluster,
        Generator::TwoClusters,
        Generator::UniformCube,
        Generator::Line,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Generator::GaussianCluster => "gaussian-cluster",
            Generator::TwoClusters => "two-clusters",
            Generator::UniformCube => "uniform-cube",
            Generator::Line => "line",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Generator {
    type Err = KdeError;

    fn from_str(s: &str) -> Result<Self, KdeError> {
        Generator::ALL
            .into_iter()
            .find(|g| g.as_str() == s.trim())
            .ok_or_else(|| KdeError::Parameter(format!("unknown generator '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub generator: Generator,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Multiplies every coordinate.
    pub scale: f64,
}

impl DatasetSpec {
    pub fn new(generator: Generator, n: usize, d: usize, seed: u64) -> Self {
        Self {
            generator,
            n,
            d,
            seed,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn generate(&self) -> PointSet {
        let d = self.d.max(1);
        let mut rng = rng::chacha(rng::derive(self.seed, Stream::Dataset, &[self.generator as u64]));
        let mut coords = Vec::with_capacity(self.n * d);
        let diag = 1.0 / (d as f64).sqrt();
        for _ in 0..self.n {
            match self.generator {
                Generator::GaussianCluster => {
                    coords.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                }
                Generator::TwoClusters => {
                    let center = if rng.gen::<bool>() { 1.5 } else { -1.5 };
                    for j in 0..d {
                        let z: f64 = rng.sample(StandardNormal);
                        coords.push(if j == 0 { center } else { 0.0 } + 0.5 * z);
                    }
                }
                Generator::UniformCube => {
                    coords.extend((0..d).map(|_| rng.gen_range(-1.0..1.0)));
                }
                Generator::Line => {
                    let t: f64 = rng.gen_range(-2.0..2.0);
                    coords.extend(std::iter::repeat(t * diag).take(d));
                }
            }
        }
        for c in &mut coords {
            *c *= self.scale;
        }
        PointSet::from_flat(d, coords).expect("generated coordinates are finite")
    }
}
