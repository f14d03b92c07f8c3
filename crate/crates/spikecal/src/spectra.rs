//! Domain types for wavelength-gridded spectra and labeled datasets, plus
//! CSV ingestion and validation.
//!
//! Labeled CSV layout: header `id,target,350,351,...,2500`, one row per
//! sample, `.` decimal separator. Unlabeled spectra use the same layout
//! without the `target` column.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Arithmetic wavelength grid in integer nanometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavelengthGrid {
    start_nm: u32,
    end_nm: u32,
    step_nm: u32,
}

impl WavelengthGrid {
    pub fn new(start_nm: u32, end_nm: u32, step_nm: u32) -> Result<Self> {
        if start_nm >= end_nm {
            return Err(Error::Data(format!(
                "wavelength grid start {start_nm} must be < end {end_nm}"
            )));
        }
        if step_nm < 1 {
            return Err(Error::Data("wavelength grid step must be >= 1 nm".into()));
        }
        if (end_nm - start_nm) % step_nm != 0 {
            return Err(Error::Data(format!(
                "grid span {}..{} not divisible by step {}",
                start_nm, end_nm, step_nm
            )));
        }
        Ok(Self {
            start_nm,
            end_nm,
            step_nm,
        })
    }

    pub fn start_nm(&self) -> u32 {
        self.start_nm
    }

    pub fn end_nm(&self) -> u32 {
        self.end_nm
    }

    pub fn step_nm(&self) -> u32 {
        self.step_nm
    }

    pub fn len(&self) -> usize {
        ((self.end_nm - self.start_nm) / self.step_nm) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len()).map(move |i| self.start_nm + i as u32 * self.step_nm)
    }

    /// Grid index of a wavelength, if it lies exactly on the grid.
    pub fn index_of(&self, nm: u32) -> Option<usize> {
        if nm < self.start_nm || nm > self.end_nm || (nm - self.start_nm) % self.step_nm != 0 {
            None
        } else {
            Some(((nm - self.start_nm) / self.step_nm) as usize)
        }
    }
}

impl fmt::Display for WavelengthGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{} nm step {}",
            self.start_nm, self.end_nm, self.step_nm
        )
    }
}

/// One spectrum on a wavelength grid. Raw data are reflectance fractions;
/// after pretreatment the values are unitless transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub id: String,
    pub values: Vec<f64>,
    pub grid: WavelengthGrid,
}

impl Spectrum {
    pub fn new(id: impl Into<String>, values: Vec<f64>, grid: WavelengthGrid) -> Result<Self> {
        let id = id.into();
        if values.len() != grid.len() {
            return Err(Error::Data(format!(
                "spectrum '{}': {} values on a grid of length {}",
                id,
                values.len(),
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "spectrum '{}': non-finite value at {} nm",
                id,
                grid.start_nm() + pos as u32 * grid.step_nm()
            )));
        }
        Ok(Self { id, values, grid })
    }
}

/// Which dataset a set belongs to: L (lab calibration), F (field
/// validation), S (synthetic).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetTag {
    Lab,
    Field,
    Synthetic,
}

impl DatasetTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetTag::Lab => "L",
            DatasetTag::Field => "F",
            DatasetTag::Synthetic => "S",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "L" => Ok(DatasetTag::Lab),
            "F" => Ok(DatasetTag::Field),
            "S" => Ok(DatasetTag::Synthetic),
            other => Err(Error::Usage(format!(
                "unknown dataset tag '{other}' (expected L, F or S)"
            ))),
        }
    }
}

/// Spectra paired with scalar target values (concentration, mg/g).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub spectra: Vec<Spectrum>,
    pub targets: Vec<f64>,
    pub tag: DatasetTag,
}

impl LabeledSet {
    pub fn new(spectra: Vec<Spectrum>, targets: Vec<f64>, tag: DatasetTag) -> Result<Self> {
        if spectra.is_empty() {
            return Err(Error::Data("empty dataset".into()));
        }
        if spectra.len() != targets.len() {
            return Err(Error::Data(format!(
                "{} spectra but {} targets",
                spectra.len(),
                targets.len()
            )));
        }
        let grid = spectra[0].grid;
        for s in &spectra[1..] {
            if s.grid != grid {
                return Err(Error::Data(format!(
                    "spectrum '{}' has grid {} but the set uses {}",
                    s.id, s.grid, grid
                )));
            }
        }
        for (i, t) in targets.iter().enumerate() {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::Data(format!(
                    "target for sample '{}' is {} (must be finite and >= 0)",
                    spectra[i].id, t
                )));
            }
        }
        Ok(Self {
            spectra,
            targets,
            tag,
        })
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.spectra[0].grid
    }

    /// Row-per-sample matrix of spectral values.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let m = self.grid().len();
        DMatrix::from_fn(n, m, |i, j| self.spectra[i].values[j])
    }

    pub fn target_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.targets.clone())
    }

    /// Concatenate two sets sharing a grid. Row order: `a` then `b`.
    pub fn concat(a: &LabeledSet, b: &LabeledSet, tag: DatasetTag) -> Result<LabeledSet> {
        assert_same_grid(a, b)?;
        let mut spectra = a.spectra.clone();
        spectra.extend(b.spectra.iter().cloned());
        let mut targets = a.targets.clone();
        targets.extend_from_slice(&b.targets);
        LabeledSet::new(spectra, targets, tag)
    }
}

/// Succeeds iff both sets are nonempty and share an identical grid.
pub fn assert_same_grid(a: &LabeledSet, b: &LabeledSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let (ga, gb) = (a.grid(), b.grid());
    if ga != gb {
        return Err(Error::Data(format!("grid mismatch: {ga} vs {gb}")));
    }
    Ok(())
}

fn parse_grid_header(cols: &[&str], path: &Path, offset: usize) -> Result<WavelengthGrid> {
    if cols.is_empty() {
        return Err(Error::csv(path, 1, "no wavelength columns in header"));
    }
    let mut nm = Vec::with_capacity(cols.len());
    for (j, c) in cols.iter().enumerate() {
        let w: u32 = c.trim().parse().map_err(|_| {
            Error::csv(
                path,
                1,
                format!(
                    "wavelength header column {} is '{}', not an integer nm",
                    j + offset + 1,
                    c
                ),
            )
        })?;
        nm.push(w);
    }
    if nm.len() < 2 {
        return Err(Error::csv(path, 1, "need at least 2 wavelength columns"));
    }
    let step = nm[1].checked_sub(nm[0]).filter(|s| *s >= 1).ok_or_else(|| {
        Error::csv(path, 1, "wavelength headers must be strictly increasing")
    })?;
    for w in nm.windows(2) {
        if w[1].checked_sub(w[0]) != Some(step) {
            return Err(Error::csv(
                path,
                1,
                format!(
                    "wavelength headers are not an arithmetic sequence ({} -> {} vs step {})",
                    w[0], w[1], step
                ),
            ));
        }
    }
    WavelengthGrid::new(nm[0], *nm.last().unwrap(), step)
}

fn parse_value(cell: &str, path: &Path, line: usize, what: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| Error::csv(path, line, format!("non-numeric {what} '{cell}'")))
}

/// Load a labeled CSV (`id,target,<wavelengths...>`). Row order preserved.
///
/// `reflectance_percent` divides all spectral values by 100 on ingestion.
pub fn load_labeled_csv(path: &Path, tag: DatasetTag, reflectance_percent: bool) -> Result<LabeledSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::csv(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0].trim() != "id" || cols[1].trim() != "target" {
        return Err(Error::csv(
            path,
            1,
            "expected header 'id,target,<wavelengths...>'",
        ));
    }
    let grid = parse_grid_header(&cols[2..], path, 2)?;
    let m = grid.len();

    let mut spectra = Vec::new();
    let mut targets = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != m + 2 {
            return Err(Error::csv(
                path,
                lineno,
                format!("row has {} cells, expected {}", cells.len(), m + 2),
            ));
        }
        let id = cells[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::csv(path, lineno, format!("duplicate sample id '{id}'")));
        }
        let target = parse_value(cells[1], path, lineno, "target")?;
        let scale = if reflectance_percent { 0.01 } else { 1.0 };
        let values: Vec<f64> = cells[2..]
            .iter()
            .map(|c| parse_value(c, path, lineno, "value").map(|v| v * scale))
            .collect::<Result<_>>()?;
        spectra.push(Spectrum::new(id, values, grid)?);
        targets.push(target);
    }
    LabeledSet::new(spectra, targets, tag)
}

/// Load an unlabeled spectra CSV (`id,<wavelengths...>`).
pub fn load_spectra_csv(path: &Path, reflectance_percent: bool) -> Result<Vec<Spectrum>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::csv(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0].trim() != "id" {
        return Err(Error::csv(path, 1, "expected header 'id,<wavelengths...>'"));
    }
    let grid = parse_grid_header(&cols[1..], path, 1)?;
    let m = grid.len();

    let mut spectra = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != m + 1 {
            return Err(Error::csv(
                path,
                lineno,
                format!("row has {} cells, expected {}", cells.len(), m + 1),
            ));
        }
        let id = cells[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::csv(path, lineno, format!("duplicate sample id '{id}'")));
        }
        let scale = if reflectance_percent { 0.01 } else { 1.0 };
        let values: Vec<f64> = cells[1..]
            .iter()
            .map(|c| parse_value(c, path, lineno, "value").map(|v| v * scale))
            .collect::<Result<_>>()?;
        spectra.push(Spectrum::new(id, values, grid)?);
    }
    Ok(spectra)
}

/// Serialize a labeled set back to CSV. Floats use the shortest
/// round-tripping decimal representation, so load(write(x)) == x.
pub fn write_labeled_csv(set: &LabeledSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("id,target");
    for w in set.grid().wavelengths() {
        out.push(',');
        out.push_str(&w.to_string());
    }
    out.push('\n');
    for (s, t) in set.spectra.iter().zip(&set.targets) {
        out.push_str(&s.id);
        out.push(',');
        out.push_str(&t.to_string());
        for v in &s.values {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
