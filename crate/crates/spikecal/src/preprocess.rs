//! Spectral pretreatment chain, applied identically to calibration,
//! validation and synthetic spectra: detector offset correction, trimming
//! to the high-SNR range, absorbance transform, SSA smoothing,
//! max-normalization and first derivative, in that fixed order.

use rayon::prelude::*;

use crate::spectra::{LabeledSet, Spectrum, WavelengthGrid};
use crate::ssa::{self, SsaConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Detector splice wavelengths; the jump between w and w+step is removed.
    pub splice_wavelengths_nm: Vec<u32>,
    pub trim_lo_nm: u32,
    pub trim_hi_nm: u32,
    pub ssa: SsaConfig,
    pub offset_enabled: bool,
    pub trim_enabled: bool,
    pub absorbance_enabled: bool,
    pub ssa_enabled: bool,
    pub normalize_enabled: bool,
    pub derivative_enabled: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            splice_wavelengths_nm: vec![1000, 1830],
            trim_lo_nm: 450,
            trim_hi_nm: 2400,
            ssa: SsaConfig::default(),
            offset_enabled: true,
            trim_enabled: true,
            absorbance_enabled: true,
            ssa_enabled: true,
            normalize_enabled: true,
            derivative_enabled: true,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self, grid: &WavelengthGrid) -> Result<()> {
        if self.offset_enabled {
            for w in self.splice_wavelengths_nm.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Usage(
                        "splice wavelengths must be strictly increasing".into(),
                    ));
                }
            }
            for &w in &self.splice_wavelengths_nm {
                validate_splice(grid, w)?;
            }
        }
        if self.trim_enabled {
            if self.trim_lo_nm >= self.trim_hi_nm {
                return Err(Error::Usage(format!(
                    "trim range {}..{} is empty",
                    self.trim_lo_nm, self.trim_hi_nm
                )));
            }
            if grid.index_of(self.trim_lo_nm).is_none() || grid.index_of(self.trim_hi_nm).is_none()
            {
                return Err(Error::Usage(format!(
                    "trim bounds {}..{} not on grid {}",
                    self.trim_lo_nm, self.trim_hi_nm, grid
                )));
            }
        }
        if self.ssa_enabled {
            self.ssa.validate()?;
        }
        Ok(())
    }
}

fn validate_splice(grid: &WavelengthGrid, w: u32) -> Result<usize> {
    let idx = grid
        .index_of(w)
        .ok_or_else(|| Error::Usage(format!("splice wavelength {w} nm not on grid {grid}")))?;
    if idx == 0 || idx + 1 >= grid.len() {
        return Err(Error::Usage(format!(
            "splice wavelength {w} nm sits at the edge of grid {grid}"
        )));
    }
    Ok(idx)
}

/// Remove additive detector jumps at the splice wavelengths.
///
/// Segments are delimited by the splices; the segment just right of the
/// first splice is held fixed when there are two or more splices (the
/// left segment with a single splice). Each remaining segment is shifted
/// by a constant so that the value step across every splice vanishes.
pub fn correct_detector_offsets(s: &Spectrum, splices: &[u32]) -> Result<Spectrum> {
    if splices.is_empty() {
        return Ok(s.clone());
    }
    for w in splices.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Usage(
                "splice wavelengths must be strictly increasing".into(),
            ));
        }
    }
    let grid = s.grid;
    let mut cut_idx = Vec::with_capacity(splices.len());
    for &w in splices {
        cut_idx.push(validate_splice(&grid, w)?);
    }

    // segment j covers [seg_start[j] .. seg_end[j]] inclusive
    let k = cut_idx.len();
    let n = s.values.len();
    let mut seg_start = Vec::with_capacity(k + 1);
    let mut seg_end = Vec::with_capacity(k + 1);
    seg_start.push(0);
    for &c in &cut_idx {
        seg_end.push(c);
        seg_start.push(c + 1);
    }
    seg_end.push(n - 1);

    let anchor = if k == 1 { 0 } else { 1 };
    let v = &s.values;
    let mut shift = vec![0.0; k + 1];
    // The offset at a splice is the boundary step minus a local slope
    // estimate taken just inside the already-fixed segment, so a spectrum
    // that is continuous across the splice (e.g. a ramp) is left alone.
    // Leftwards from the anchor: the right-hand segment is fixed.
    for j in (0..anchor).rev() {
        let c = cut_idx[j];
        let slope = if c + 2 <= seg_end[j + 1] {
            v[c + 2] - v[c + 1]
        } else {
            0.0
        };
        shift[j] = shift[j + 1] + (v[c + 1] - v[c] - slope);
    }
    // Rightwards from the anchor: the left-hand segment is fixed.
    for j in anchor..k {
        let c = cut_idx[j];
        let slope = if c >= seg_start[j] + 1 {
            v[c] - v[c - 1]
        } else {
            0.0
        };
        shift[j + 1] = shift[j] - (v[c + 1] - v[c] - slope);
    }

    let mut out = v.clone();
    for j in 0..=k {
        if shift[j] != 0.0 {
            for t in seg_start[j]..=seg_end[j] {
                out[t] += shift[j];
            }
        }
    }
    Spectrum::new(s.id.clone(), out, grid)
}

/// Keep the inclusive subrange [lo_nm, hi_nm].
pub fn trim(s: &Spectrum, lo_nm: u32, hi_nm: u32) -> Result<Spectrum> {
    let grid = s.grid;
    let lo = grid
        .index_of(lo_nm)
        .ok_or_else(|| Error::Usage(format!("trim bound {lo_nm} nm not on grid {grid}")))?;
    let hi = grid
        .index_of(hi_nm)
        .ok_or_else(|| Error::Usage(format!("trim bound {hi_nm} nm not on grid {grid}")))?;
    if lo >= hi {
        return Err(Error::Usage(format!("trim range {lo_nm}..{hi_nm} is empty")));
    }
    let new_grid = WavelengthGrid::new(lo_nm, hi_nm, grid.step_nm())?;
    Spectrum::new(s.id.clone(), s.values[lo..=hi].to_vec(), new_grid)
}

/// Absorbance transform log10(1/reflectance).
pub fn to_absorbance(s: &Spectrum) -> Result<Spectrum> {
    let grid = s.grid;
    let mut out = Vec::with_capacity(s.values.len());
    for (i, &v) in s.values.iter().enumerate() {
        if v <= 0.0 {
            let w = grid.start_nm() + i as u32 * grid.step_nm();
            return Err(Error::Data(format!(
                "sample '{}': reflectance {v} at {w} nm is not positive",
                s.id
            )));
        }
        out.push(-v.log10());
    }
    Spectrum::new(s.id.clone(), out, grid)
}

/// Divide by the spectrum maximum; the new maximum is exactly 1.
pub fn max_normalize(s: &Spectrum) -> Result<Spectrum> {
    let max = s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(Error::Data(format!(
            "sample '{}': maximum {max} is not positive, cannot normalize",
            s.id
        )));
    }
    let out = s.values.iter().map(|v| v / max).collect();
    Spectrum::new(s.id.clone(), out, s.grid)
}

/// Forward difference (v[i+1]-v[i])/step; output keeps the left endpoint
/// of each interval and is one point shorter.
pub fn first_derivative(s: &Spectrum) -> Result<Spectrum> {
    let n = s.values.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "sample '{}': need at least 2 points for a derivative",
            s.id
        )));
    }
    let grid = s.grid;
    let step = grid.step_nm() as f64;
    let out: Vec<f64> = s.values.windows(2).map(|w| (w[1] - w[0]) / step).collect();
    let new_grid = WavelengthGrid::new(
        grid.start_nm(),
        grid.end_nm() - grid.step_nm(),
        grid.step_nm(),
    )?;
    Spectrum::new(s.id.clone(), out, new_grid)
}

fn stage<F>(s: Spectrum, name: &'static str, f: F) -> Result<Spectrum>
where
    F: FnOnce(&Spectrum) -> Result<Spectrum>,
{
    f(&s).map_err(|e| Error::Stage {
        id: s.id.clone(),
        stage: name,
        source: Box::new(e),
    })
}

fn preprocess_one(s: &Spectrum, cfg: &PreprocessConfig) -> Result<Spectrum> {
    let mut s = s.clone();
    if cfg.offset_enabled {
        s = stage(s, "offset", |x| {
            correct_detector_offsets(x, &cfg.splice_wavelengths_nm)
        })?;
    }
    if cfg.trim_enabled {
        s = stage(s, "trim", |x| trim(x, cfg.trim_lo_nm, cfg.trim_hi_nm))?;
    }
    if cfg.absorbance_enabled {
        s = stage(s, "absorbance", to_absorbance)?;
    }
    if cfg.ssa_enabled {
        s = stage(s, "ssa", |x| {
            let smoothed = ssa::smooth(&x.values, &cfg.ssa)?;
            Spectrum::new(x.id.clone(), smoothed, x.grid)
        })?;
    }
    if cfg.normalize_enabled {
        s = stage(s, "normalize", max_normalize)?;
    }
    if cfg.derivative_enabled {
        s = stage(s, "derivative", first_derivative)?;
    }
    Ok(s)
}

/// Apply the enabled stages, in the fixed chain order, to every spectrum.
/// Targets and sample order are unchanged. Spectra are processed in
/// parallel; the result does not depend on the schedule.
pub fn run_pipeline(set: &LabeledSet, cfg: &PreprocessConfig) -> Result<LabeledSet> {
    cfg.validate(&set.grid())?;
    let spectra: Vec<Spectrum> = set
        .spectra
        .par_iter()
        .map(|s| preprocess_one(s, cfg))
        .collect::<Result<_>>()?;
    LabeledSet::new(spectra, set.targets.clone(), set.tag)
}
