//! Deterministic minibatch composition: every window of Σparts consecutive
//! slots carries the datasets in their exact declared ratio, sample indices
//! cycle through per-epoch seeded shuffles, and each slot independently
//! draws a grayscale flag.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetPart {
    pub name: String,
    pub parts: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub datasets: Vec<DatasetPart>,
    pub batch_size: usize,
    /// Probability that a slot is marked grayscale, in [0, 1].
    pub grayscale_fraction: f64,
    pub seed: u64,
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::config("mix spec lists no datasets"));
        }
        for d in &self.datasets {
            if d.parts == 0 {
                return Err(Error::config(format!("dataset {:?} has zero parts", d.name)));
            }
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.datasets.len() {
            return Err(Error::config("duplicate dataset name in mix spec"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.grayscale_fraction) {
            return Err(Error::config("grayscale_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// One training slot: which dataset, which sample, and whether the image is
/// converted to grayscale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    /// Index into [`MixPlan::dataset_names`].
    pub dataset: u32,
    pub sample_index: usize,
    pub grayscale: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixPlan {
    pub dataset_names: Vec<String>,
    pub batch_size: usize,
    pub slots: Vec<Slot>,
}

impl MixPlan {
    pub fn n_batches(&self) -> usize {
        self.slots.len() / self.batch_size
    }

    pub fn batch(&self, i: usize) -> &[Slot] {
        &self.slots[i * self.batch_size..(i + 1) * self.batch_size]
    }

    pub fn dataset_name(&self, slot: &Slot) -> &str {
        &self.dataset_names[slot.dataset as usize]
    }

    /// Writes the plan as `batch,slot,dataset,index,grayscale` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "batch,slot,dataset,index,grayscale")?;
        for (i, slot) in self.slots.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                i / self.batch_size,
                i,
                self.dataset_name(slot),
                slot.sample_index,
                slot.grayscale
            )?;
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ tag) ^ index)
}

const TAG_SHUFFLE: u64 = 0x5348_5546; // "SHUF"
const TAG_GRAY: u64 = 0x4752_4159; // "GRAY"

/// Fixed repeating slot template of length Σparts, interleaved by largest
/// remainder so every aligned or sliding window of Σparts slots holds each
/// dataset exactly `parts` times.
fn interleave_template(parts: &[u32]) -> Vec<usize> {
    let total: u64 = parts.iter().map(|&p| p as u64).sum();
    let mut placed = vec![0u64; parts.len()];
    let mut template = Vec::with_capacity(total as usize);
    for k in 0..total {
        let mut best = 0usize;
        let mut best_score = i128::MIN;
        for (d, &p) in parts.iter().enumerate() {
            let score = p as i128 * (k + 1) as i128 - placed[d] as i128 * total as i128;
            if score > best_score {
                best_score = score;
                best = d;
            }
        }
        template.push(best);
        placed[best] += 1;
    }
    debug_assert!(placed
        .iter()
        .zip(parts)
        .all(|(&c, &p)| c == p as u64));
    template
}

/// Per-dataset sample stream: a fresh seeded shuffle of `0..size` every
/// epoch, consumed in order.
struct IndexStream {
    size: usize,
    seed: u64,
    epoch: u64,
    order: Vec<usize>,
    pos: usize,
}

impl IndexStream {
    fn new(size: usize, seed: u64) -> Self {
        let mut s = Self {
            size,
            seed,
            epoch: 0,
            order: Vec::new(),
            pos: 0,
        };
        s.reshuffle();
        s
    }

    fn reshuffle(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, TAG_SHUFFLE, self.epoch));
        self.order = (0..self.size).collect();
        self.order.shuffle(&mut rng);
        self.pos = 0;
    }

    fn next(&mut self) -> usize {
        if self.pos == self.order.len() {
            self.epoch += 1;
            self.reshuffle();
        }
        let i = self.order[self.pos];
        self.pos += 1;
        i
    }
}

/// Builds the deterministic slot schedule for `n_batches` batches.
///
/// `dataset_sizes` maps each declared dataset to its sample count; a
/// dataset in the spec without a size entry is a config error.
pub fn build_mix_plan(
    spec: &MixSpec,
    dataset_sizes: &BTreeMap<String, usize>,
    n_batches: usize,
) -> Result<MixPlan> {
    spec.validate()?;
    let mut streams = Vec::with_capacity(spec.datasets.len());
    for (d, part) in spec.datasets.iter().enumerate() {
        let size = *dataset_sizes
            .get(&part.name)
            .ok_or_else(|| Error::config(format!("unknown dataset {:?}", part.name)))?;
        if size == 0 {
            return Err(Error::config(format!("dataset {:?} is empty", part.name)));
        }
        streams.push(IndexStream::new(size, derive_seed(spec.seed, 1, d as u64)));
    }
    let parts: Vec<u32> = spec.datasets.iter().map(|d| d.parts).collect();
    let template = interleave_template(&parts);
    let mut gray_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, TAG_GRAY, 0));

    let n_slots = n_batches * spec.batch_size;
    let mut slots = Vec::with_capacity(n_slots);
    for i in 0..n_slots {
        let dataset = template[i % template.len()];
        let sample_index = streams[dataset].next();
        let grayscale = gray_rng.random::<f64>() < spec.grayscale_fraction;
        slots.push(Slot {
            dataset: dataset as u32,
            sample_index,
            grayscale,
        });
    }
    Ok(MixPlan {
        dataset_names: spec.datasets.iter().map(|d| d.name.clone()).collect(),
        batch_size: spec.batch_size,
        slots,
    })
}

/// Luma conversion replicated to all three channels:
/// `Y = round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_grayscale(rgb: [u8; 3]) -> [u8; 3] {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    let y = y.round().clamp(0.0, 255.0) as u8;
    [y, y, y]
}
