//! Run configuration: flat `key = value` config files, CLI overrides and
//! the effective-config echo.

use std::fs;
use std::path::{Path, PathBuf};

use crate::preprocess::PreprocessConfig;
use crate::smoter::SmoteParams;
use crate::{Error, Result};

/// Whether PCA is fit on the lab set alone or on lab and field jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaFitOn {
    LabOnly,
    LabAndField,
}

impl PcaFitOn {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "L" => Ok(PcaFitOn::LabOnly),
            "LF" => Ok(PcaFitOn::LabAndField),
            other => Err(Error::Usage(format!(
                "pca.fit_on must be 'L' or 'LF', got '{other}'"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PcaFitOn::LabOnly => "L",
            PcaFitOn::LabAndField => "LF",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lab_csv: Option<PathBuf>,
    pub field_csv: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub preprocess: PreprocessConfig,
    pub smote: SmoteParams,
    pub p_min: usize,
    pub p_max: usize,
    pub reps: usize,
    pub pca_fit_on: PcaFitOn,
    pub pca_components: usize,
    pub reflectance_percent: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lab_csv: None,
            field_csv: None,
            out_dir: PathBuf::from("out"),
            preprocess: PreprocessConfig::default(),
            smote: SmoteParams {
                n_percent: 200,
                k: 5,
                seed: 0,
            },
            p_min: 1,
            p_max: 15,
            reps: 100,
            pca_fit_on: PcaFitOn::LabAndField,
            pca_components: 2,
            reflectance_percent: false,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "lab",
    "field",
    "out",
    "smote.n",
    "smote.k",
    "smote.seed",
    "mc.reps",
    "components.min",
    "components.max",
    "preprocess.splices",
    "preprocess.trim_lo",
    "preprocess.trim_hi",
    "preprocess.offset",
    "preprocess.trim",
    "preprocess.absorbance",
    "preprocess.ssa",
    "preprocess.normalize",
    "preprocess.derivative",
    "ssa.window_len",
    "ssa.rank",
    "ssa.energy_threshold",
    "pca.fit_on",
    "pca.components",
    "reflectance_percent",
];

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn nearest_key(key: &str) -> &'static str {
    KNOWN_KEYS
        .iter()
        .min_by_key(|k| edit_distance(key, k))
        .unwrap()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Usage(format!(
            "key '{key}': expected a boolean, got '{value}'"
        ))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("key '{key}': expected {what}, got '{value}'")))
}

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lab" => self.lab_csv = Some(PathBuf::from(value)),
            "field" => self.field_csv = Some(PathBuf::from(value)),
            "out" => self.out_dir = PathBuf::from(value),
            "smote.n" => self.smote.n_percent = parse_num(key, value, "an integer")?,
            "smote.k" => self.smote.k = parse_num(key, value, "an integer")?,
            "smote.seed" => self.smote.seed = parse_num(key, value, "a u64 seed")?,
            "mc.reps" => self.reps = parse_num(key, value, "an integer")?,
            "components.min" => self.p_min = parse_num(key, value, "an integer")?,
            "components.max" => self.p_max = parse_num(key, value, "an integer")?,
            "preprocess.splices" => {
                self.preprocess.splice_wavelengths_nm = value
                    .split(',')
                    .map(|s| parse_num(key, s.trim(), "integer nm"))
                    .collect::<Result<_>>()?;
            }
            "preprocess.trim_lo" => {
                self.preprocess.trim_lo_nm = parse_num(key, value, "integer nm")?
            }
            "preprocess.trim_hi" => {
                self.preprocess.trim_hi_nm = parse_num(key, value, "integer nm")?
            }
            "preprocess.offset" => self.preprocess.offset_enabled = parse_bool(key, value)?,
            "preprocess.trim" => self.preprocess.trim_enabled = parse_bool(key, value)?,
            "preprocess.absorbance" => {
                self.preprocess.absorbance_enabled = parse_bool(key, value)?
            }
            "preprocess.ssa" => self.preprocess.ssa_enabled = parse_bool(key, value)?,
            "preprocess.normalize" => self.preprocess.normalize_enabled = parse_bool(key, value)?,
            "preprocess.derivative" => {
                self.preprocess.derivative_enabled = parse_bool(key, value)?
            }
            "ssa.window_len" => self.preprocess.ssa.window_len = parse_num(key, value, "an integer")?,
            "ssa.rank" => self.preprocess.ssa.rank = parse_num(key, value, "an integer")?,
            "ssa.energy_threshold" => {
                self.preprocess.ssa.energy_threshold =
                    Some(parse_num(key, value, "a fraction in (0,1]")?)
            }
            "pca.fit_on" => self.pca_fit_on = PcaFitOn::parse(value)?,
            "pca.components" => self.pca_components = parse_num(key, value, "an integer")?,
            "reflectance_percent" => self.reflectance_percent = parse_bool(key, value)?,
            _ => {
                return Err(Error::Usage(format!(
                    "unknown config key '{key}' (did you mean '{}'?)",
                    nearest_key(key)
                )))
            }
        }
        Ok(())
    }

    /// Load a flat `key = value` config file ('#' starts a comment).
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!(
                    "{}:{}: expected 'key = value', got '{raw}'",
                    path.display(),
                    idx + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.smote.validate()?;
        if self.p_min < 1 || self.p_min > self.p_max {
            return Err(Error::Usage(format!(
                "component range {}..{} is empty",
                self.p_min, self.p_max
            )));
        }
        if self.reps < 1 {
            return Err(Error::Usage("mc.reps must be >= 1".into()));
        }
        for p in [&self.lab_csv, &self.field_csv].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Usage(format!(
                    "input path '{}' does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// Render the effective configuration as key = value text, one line
    /// per known key, in a fixed order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line(
            "lab",
            self.lab_csv
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        line(
            "field",
            self.field_csv
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        line("out", self.out_dir.display().to_string());
        line("smote.n", self.smote.n_percent.to_string());
        line("smote.k", self.smote.k.to_string());
        line("smote.seed", self.smote.seed.to_string());
        line("mc.reps", self.reps.to_string());
        line("components.min", self.p_min.to_string());
        line("components.max", self.p_max.to_string());
        line(
            "preprocess.splices",
            self.preprocess
                .splice_wavelengths_nm
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        line("preprocess.trim_lo", self.preprocess.trim_lo_nm.to_string());
        line("preprocess.trim_hi", self.preprocess.trim_hi_nm.to_string());
        line("preprocess.offset", self.preprocess.offset_enabled.to_string());
        line("preprocess.trim", self.preprocess.trim_enabled.to_string());
        line(
            "preprocess.absorbance",
            self.preprocess.absorbance_enabled.to_string(),
        );
        line("preprocess.ssa", self.preprocess.ssa_enabled.to_string());
        line(
            "preprocess.normalize",
            self.preprocess.normalize_enabled.to_string(),
        );
        line(
            "preprocess.derivative",
            self.preprocess.derivative_enabled.to_string(),
        );
        line("ssa.window_len", self.preprocess.ssa.window_len.to_string());
        line("ssa.rank", self.preprocess.ssa.rank.to_string());
        line(
            "ssa.energy_threshold",
            self.preprocess
                .ssa
                .energy_threshold
                .map(|t| t.to_string())
                .unwrap_or_default(),
        );
        line("pca.fit_on", self.pca_fit_on.as_str().to_string());
        line("pca.components", self.pca_components.to_string());
        line("reflectance_percent", self.reflectance_percent.to_string());
        out
    }

    /// Write the effective configuration to `<out>/effective_config.txt`.
    pub fn write_effective(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        let path = self.out_dir.join("effective_config.txt");
        fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))
    }
}
