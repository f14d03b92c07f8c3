//! SMOTE for regression: synthesize new spectra on the segments between a
//! source sample and one of its k nearest neighbours, with the target value
//! interpolated by the distances to both endpoints. Runs on raw spectra;
//! pretreatment is applied afterwards.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::spectra::{DatasetTag, LabeledSet, Spectrum};
use crate::{Error, Result};

/// Oversampling parameters. `n_percent` is the amount of SMOTE in percent
/// of the source set (ng = N/100 samples per source sample); `k` the
/// neighbour count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteParams {
    pub n_percent: u32,
    pub k: usize,
    pub seed: u64,
}

impl SmoteParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_percent < 1 {
            return Err(Error::Usage("smote.n must be >= 1".into()));
        }
        if self.n_percent >= 100 && self.n_percent % 100 != 0 {
            return Err(Error::Usage(format!(
                "smote.n = {} invalid: N >= 100 must be a multiple of 100",
                self.n_percent
            )));
        }
        if self.k < 1 {
            return Err(Error::Usage("smote.k must be >= 1".into()));
        }
        Ok(())
    }
}

/// A synthetic sample with its provenance.
#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub spectrum: Spectrum,
    pub target: f64,
    pub parent_id: String,
    pub neighbor_id: String,
    pub weight: f64,
    /// Distance new -> parent.
    pub d1: f64,
    /// Distance new -> neighbour.
    pub d2: f64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The k indices (excluding `i`) with smallest Euclidean distance to
/// spectrum `i`, ordered by (distance, index).
pub fn nearest_neighbours(set: &LabeledSet, i: usize, k: usize) -> Result<Vec<usize>> {
    let t = set.len();
    if t < 2 {
        return Err(Error::Data("need at least 2 samples for neighbours".into()));
    }
    if i >= t {
        return Err(Error::Usage(format!("sample index {i} out of range")));
    }
    if k >= t {
        return Err(Error::Usage(format!(
            "k = {k} must be smaller than the dataset size {t}"
        )));
    }
    let query = &set.spectra[i].values;
    let mut dists: Vec<(f64, usize)> = (0..t)
        .filter(|&j| j != i)
        .map(|j| (euclidean(query, &set.spectra[j].values), j))
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(dists.into_iter().take(k).map(|(_, j)| j).collect())
}

/// Build one synthetic sample on the segment parent -> neighbour at the
/// given interpolation weight. The target is the distance-weighted average
/// of the endpoint targets.
pub fn synthesize_one(
    parent: &Spectrum,
    parent_target: f64,
    neighbor: &Spectrum,
    neighbor_target: f64,
    weight: f64,
) -> Result<SyntheticSample> {
    if parent.grid != neighbor.grid {
        return Err(Error::Data(format!(
            "grid mismatch between '{}' and '{}'",
            parent.id, neighbor.id
        )));
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::Usage(format!("weight {weight} outside [0, 1]")));
    }
    let values: Vec<f64> = parent
        .values
        .iter()
        .zip(&neighbor.values)
        .map(|(p, q)| p + weight * (q - p))
        .collect();
    let d1 = euclidean(&values, &parent.values);
    let d2 = euclidean(&values, &neighbor.values);
    let target = if d1 + d2 == 0.0 {
        parent_target
    } else {
        (d2 * parent_target + d1 * neighbor_target) / (d1 + d2)
    };
    Ok(SyntheticSample {
        spectrum: Spectrum::new(String::new(), values, parent.grid)?,
        target,
        parent_id: parent.id.clone(),
        neighbor_id: neighbor.id.clone(),
        weight,
        d1,
        d2,
    })
}

/// Generate (N/100) x T synthetic samples (floor((N/100) x T) when N < 100,
/// in which case a random subset of the sources is used with one round
/// each). Fully reproducible from the seed; output ordered parent-outer,
/// round-inner.
pub fn generate_samples(source: &LabeledSet, params: &SmoteParams) -> Result<Vec<SyntheticSample>> {
    params.validate()?;
    let t = source.len();
    if t < 2 {
        return Err(Error::Data(format!(
            "SMOTE needs at least 2 source samples, got {t}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let (parents, ng): (Vec<usize>, usize) = if params.n_percent < 100 {
        let keep = (params.n_percent as usize * t) / 100;
        if keep < 1 {
            return Err(Error::Usage(format!(
                "smote.n = {}% of {} samples floors to zero outputs",
                params.n_percent, t
            )));
        }
        let mut idx = rand::seq::index::sample(&mut rng, t, keep).into_vec();
        idx.sort_unstable();
        (idx, 1)
    } else {
        ((0..t).collect(), (params.n_percent / 100) as usize)
    };

    let tw = parents.len();
    if params.k >= tw {
        return Err(Error::Usage(format!(
            "k = {} must be smaller than the working set size {}",
            params.k, tw
        )));
    }

    // k nearest neighbours within the working set, computed once per parent
    let mut out = Vec::with_capacity(tw * ng);
    for (pos, &pi) in parents.iter().enumerate() {
        let query = &source.spectra[pi].values;
        let mut dists: Vec<(f64, usize)> = parents
            .iter()
            .enumerate()
            .filter(|(q, _)| *q != pos)
            .map(|(_, &j)| (euclidean(query, &source.spectra[j].values), j))
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let nns: Vec<usize> = dists.into_iter().take(params.k).map(|(_, j)| j).collect();

        for round in 1..=ng {
            let choice = rng.gen_range(0..params.k);
            let nb = nns[choice];
            let weight: f64 = rng.gen(); // uniform on [0, 1)
            let mut sample = synthesize_one(
                &source.spectra[pi],
                source.targets[pi],
                &source.spectra[nb],
                source.targets[nb],
                weight,
            )?;
            sample.spectrum.id = format!("S{}_{}", source.spectra[pi].id, round);
            out.push(sample);
        }
    }
    Ok(out)
}

/// Generate a synthetic LabeledSet (tag S) from a source set.
pub fn generate_set(source: &LabeledSet, params: &SmoteParams) -> Result<LabeledSet> {
    let samples = generate_samples(source, params)?;
    let spectra = samples.iter().map(|s| s.spectrum.clone()).collect();
    let targets = samples.iter().map(|s| s.target).collect();
    LabeledSet::new(spectra, targets, DatasetTag::Synthetic)
}
