use std::borrow::Borrow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::model::PinEntry;

pub const DEFAULT_SAMPLE: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0;

/// Linear binning of both axes. Values above an axis maximum land in the
/// last bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpec {
    pub image_bins: usize,
    pub image_max: u64,
    pub token_bins: usize,
    pub token_max: u64,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self { image_bins: 21, image_max: 20, token_bins: 50, token_max: 9_999 }
    }
}

impl BinSpec {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.image_bins == 0 || self.token_bins == 0 {
            return Err(StatsError::InvalidBins("bin counts must be positive".into()));
        }
        Ok(())
    }

    fn index(v: u64, bins: usize, max: u64) -> usize {
        let scaled = u128::from(v.min(max)) * bins as u128 / (u128::from(max) + 1);
        (scaled as usize).min(bins - 1)
    }

    pub fn image_index(&self, images: u64) -> usize {
        Self::index(images, self.image_bins, self.image_max)
    }

    pub fn token_index(&self, tokens: u64) -> usize {
        Self::index(tokens, self.token_bins, self.token_max)
    }
}

/// Uniform sample of at most `capacity` items from a stream of unknown
/// length (Algorithm R), driven by a seeded generator.
#[derive(Debug, Clone)]
pub struct Reservoir<T> {
    capacity: usize,
    seen: u64,
    items: Vec<T>,
    rng: ChaCha8Rng,
}

impl<T> Reservoir<T> {
    pub fn new(capacity: usize, seed: u64) -> Self {
        Self {
            capacity,
            seen: 0,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn offer(&mut self, item: T) {
        let i = self.seen;
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else if self.capacity > 0 {
            let j = self.rng.gen_range(0..=i);
            if j < self.capacity as u64 {
                self.items[j as usize] = item;
            }
        }
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn into_sample(self) -> Vec<T> {
        self.items
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub spec: BinSpec,
    /// `bins[image_bin][token_bin]`
    pub bins: Vec<Vec<u64>>,
    pub sample_size: u64,
    pub population: u64,
    /// Sampled (content images, tokens) pairs.
    pub points: Vec<(u64, u64)>,
}

impl JointDistribution {
    pub fn from_points(points: Vec<(u64, u64)>, population: u64, spec: BinSpec) -> Result<Self, StatsError> {
        spec.validate()?;
        let mut bins = vec![vec![0u64; spec.token_bins]; spec.image_bins];
        for &(images, tokens) in &points {
            bins[spec.image_index(images)][spec.token_index(tokens)] += 1;
        }
        Ok(Self { spec, bins, sample_size: points.len() as u64, population, points })
    }
}

/// Sample up to `sample_n` entries and bin their (content image count,
/// token count) pairs. Subsets no larger than `sample_n` are used whole.
pub fn joint_distribution<I>(
    entries: I,
    sample_n: usize,
    spec: BinSpec,
    seed: u64,
) -> Result<JointDistribution, StatsError>
where
    I: IntoIterator,
    I::Item: Borrow<PinEntry>,
{
    spec.validate()?;
    let mut reservoir = Reservoir::new(sample_n, seed);
    for e in entries {
        let e = e.borrow();
        let s = e.quality_signals.as_ref().ok_or(StatsError::MissingSignals(e.id))?;
        reservoir.offer((e.content_image.len() as u64, s.total_token_count));
    }
    let population = reservoir.seen();
    JointDistribution::from_points(reservoir.into_sample(), population, spec)
}
