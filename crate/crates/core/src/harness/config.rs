//! Experiment configuration in a `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Unknown keys are rejected so typos cannot silently fall
//! back to defaults.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::classifier::{AuxConfig, MlrConfig, SvmConfig};
use crate::dataset::SyntheticConfig;
use crate::detector::DEFAULT_BETA;
use crate::error::{Error, Result};
use crate::relationship::RelationshipConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// Regenerated per run; the generator seed is `synthetic.seed` when set,
    /// otherwise the run seed.
    Synthetic {
        config: SyntheticConfig,
        fixed_seed: Option<u64>,
    },
    Cora {
        content: PathBuf,
        cites: PathBuf,
    },
    /// A dataset written by `gen-data`.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Update with every queried label.
    Sn,
    /// Drop labels flagged by the probabilistic detector.
    Pb,
    /// Drop labels known to be wrong.
    Cl,
    Cnld,
    Manual,
    ManualPseudo,
    ManualPseudoCnld,
}

impl Mode {
    pub const ACTIVE: [Mode; 4] = [Mode::Sn, Mode::Pb, Mode::Cl, Mode::Cnld];
    pub const PSEUDO: [Mode; 3] = [Mode::Manual, Mode::ManualPseudo, Mode::ManualPseudoCnld];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sn => "SN",
            Mode::Pb => "PB",
            Mode::Cl => "CL",
            Mode::Cnld => "CNLD",
            Mode::Manual => "Manual",
            Mode::ManualPseudo => "ManualPseudo",
            Mode::ManualPseudoCnld => "ManualPseudoCNLD",
        }
    }

    pub fn is_pseudo(self) -> bool {
        Mode::PSEUDO.contains(&self)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl serde::Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::ACTIVE.as_slice(), Mode::PSEUDO.as_slice()]
            .concat()
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Entropy,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    Ncar,
    Nar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Held-out share of a synthetic or file dataset.
    pub test_fraction: f64,
    /// Cross-validation folds for CORA; run seed `s` uses fold `s % cv_folds`.
    pub cv_folds: usize,
    pub n_batches: usize,
    /// Batches the detection suite splits the training set into; batch 0
    /// trains the models.
    pub suite_batches: usize,
    /// Share of each batch sent to the annotator.
    pub query_fraction: f64,
    pub selection: Selection,
    /// Modes to run; `None` means every mode of the chosen protocol.
    pub modes: Option<Vec<Mode>>,
    pub noise: NoiseModel,
    pub omega: f64,
    pub omegas: Vec<f64>,
    pub beta: f64,
    pub betas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mlr: MlrConfig,
    /// Warm-start epochs for each model update after the initial batch.
    pub update_epochs: usize,
    /// Retrain on every accepted label at each update instead of only the
    /// newly accepted ones.
    pub replay: bool,
    pub svm: SvmConfig,
    pub knn_k: usize,
    pub relationship: RelationshipConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::Synthetic {
                config: SyntheticConfig::default(),
                fixed_seed: None,
            },
            test_fraction: 0.3,
            cv_folds: 10,
            n_batches: 10,
            suite_batches: 10,
            query_fraction: 0.3,
            selection: Selection::Entropy,
            modes: None,
            noise: NoiseModel::Ncar,
            omega: 0.4,
            omegas: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            beta: DEFAULT_BETA,
            betas: vec![0.80, 0.85, 0.90],
            seeds: vec![0, 1, 2, 3, 4],
            mlr: MlrConfig::default(),
            update_epochs: 50,
            replay: false,
            svm: SvmConfig::default(),
            knn_k: 5,
            relationship: RelationshipConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("`{key}` needs at least one value")));
    }
    Ok(items)
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_text(&text, path)
    }

    /// Parses the text format; relative dataset paths resolve against the
    /// directory of `path`.
    pub fn parse_text(text: &str, path: &Path) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_entries(entries, base)
    }

    fn from_entries(mut e: BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let mut take = |key: &str| e.remove(key);

        let kind = take("dataset").ok_or_else(|| Error::MissingKey("dataset".into()))?;
        let mut synth = SyntheticConfig::default();
        let mut fixed_seed = None;
        macro_rules! synth_field {
            ($($field:ident),*) => {
                $(if let Some(v) = take(concat!("synthetic.", stringify!($field))) {
                    synth.$field = parse(concat!("synthetic.", stringify!($field)), &v)?;
                })*
            };
        }
        synth_field!(
            n_classes,
            m_attribute_classes,
            feature_dim,
            per_class,
            concentration,
            separation,
            feature_noise,
            links_per_instance,
            attributes_per_instance
        );
        if let Some(v) = take("synthetic.seed") {
            fixed_seed = Some(parse("synthetic.seed", &v)?);
        }
        let content = take("cora_content");
        let cites = take("cora_cites");
        let dataset_path = take("dataset_path");
        cfg.dataset = match kind.as_str() {
            "synthetic" => {
                synth.validate()?;
                DatasetSpec::Synthetic {
                    config: synth,
                    fixed_seed,
                }
            }
            "cora" => DatasetSpec::Cora {
                content: resolve(&content.ok_or_else(|| Error::MissingKey("cora_content".into()))?),
                cites: resolve(&cites.ok_or_else(|| Error::MissingKey("cora_cites".into()))?),
            },
            "file" => DatasetSpec::File(resolve(
                &dataset_path.ok_or_else(|| Error::MissingKey("dataset_path".into()))?,
            )),
            other => return Err(Error::Config(format!("unknown dataset kind `{other}`"))),
        };

        macro_rules! field {
            ($key:literal => $target:expr) => {
                if let Some(v) = take($key) {
                    $target = parse($key, &v)?;
                }
            };
        }
        field!("test_fraction" => cfg.test_fraction);
        field!("cv_folds" => cfg.cv_folds);
        field!("n_batches" => cfg.n_batches);
        field!("suite_batches" => cfg.suite_batches);
        field!("query_fraction" => cfg.query_fraction);
        field!("omega" => cfg.omega);
        field!("beta" => cfg.beta);
        field!("mlr.learning_rate" => cfg.mlr.learning_rate);
        field!("mlr.l2" => cfg.mlr.l2);
        field!("mlr.epochs" => cfg.mlr.epochs);
        field!("mlr.batch_size" => cfg.mlr.batch_size);
        field!("mlr.update_epochs" => cfg.update_epochs);
        field!("mlr.replay" => cfg.replay);
        field!("svm.learning_rate" => cfg.svm.learning_rate);
        field!("svm.lambda" => cfg.svm.lambda);
        field!("svm.epochs" => cfg.svm.epochs);
        field!("knn.k" => cfg.knn_k);
        field!("epsilon" => cfg.relationship.epsilon);
        field!("hard_attributes" => cfg.relationship.hard_attributes);
        if let Some(v) = take("selection") {
            cfg.selection = match v.as_str() {
                "entropy" => Selection::Entropy,
                "random" => Selection::Random,
                _ => return Err(Error::Config(format!("unknown selection `{v}`"))),
            };
        }
        if let Some(v) = take("noise") {
            cfg.noise = match v.as_str() {
                "ncar" => NoiseModel::Ncar,
                "nar" => NoiseModel::Nar,
                _ => return Err(Error::Config(format!("unknown noise model `{v}`"))),
            };
        }
        if let Some(v) = take("modes") {
            cfg.modes = Some(parse_list("modes", &v)?);
        }
        if let Some(v) = take("omegas") {
            cfg.omegas = parse_list("omegas", &v)?;
        }
        if let Some(v) = take("betas") {
            cfg.betas = parse_list("betas", &v)?;
        }
        if let Some(v) = take("seeds") {
            cfg.seeds = parse_list("seeds", &v)?;
        }
        if let Some(key) = e.keys().next() {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.query_fraction) {
            return bad(format!("query_fraction {} outside (0, 1]", self.query_fraction));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} outside (0, 1)", self.test_fraction));
        }
        if self.n_batches < 2 || self.suite_batches < 2 {
            return bad("n_batches and suite_batches must be at least 2".into());
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be at least 2".into());
        }
        for &o in std::iter::once(&self.omega).chain(&self.omegas) {
            if !(0.0..=1.0).contains(&o) {
                return bad(format!("noise rate {o} outside [0, 1]"));
            }
        }
        for &b in std::iter::once(&self.beta).chain(&self.betas) {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("beta {b} outside [0, 1)"));
            }
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.knn_k == 0 {
            return bad("knn.k must be positive".into());
        }
        if self.relationship.epsilon.is_nan() || self.relationship.epsilon <= 0.0 {
            return bad("epsilon must be positive".into());
        }
        Ok(())
    }

    pub fn modes_or(&self, default: &[Mode]) -> Vec<Mode> {
        self.modes.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn aux_config(&self, seed: u64) -> AuxConfig {
        AuxConfig {
            mlr: MlrConfig {
                seed,
                ..self.mlr.clone()
            },
            svm: SvmConfig {
                seed,
                ..self.svm.clone()
            },
            k: self.knn_k,
            standardize_knn: true,
        }
    }

    /// Every setting in the text format with keys sorted; the basis of
    /// [`ExperimentConfig::hash`].
    pub fn canonical_text(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        match &self.dataset {
            DatasetSpec::Synthetic { config: s, fixed_seed } => {
                kv.insert("dataset", "synthetic".into());
                kv.insert("synthetic.n_classes", s.n_classes.to_string());
                kv.insert("synthetic.m_attribute_classes", s.m_attribute_classes.to_string());
                kv.insert("synthetic.feature_dim", s.feature_dim.to_string());
                kv.insert("synthetic.per_class", s.per_class.to_string());
                kv.insert("synthetic.concentration", s.concentration.to_string());
                kv.insert("synthetic.separation", s.separation.to_string());
                kv.insert("synthetic.feature_noise", s.feature_noise.to_string());
                kv.insert("synthetic.links_per_instance", s.links_per_instance.to_string());
                kv.insert(
                    "synthetic.attributes_per_instance",
                    s.attributes_per_instance.to_string(),
                );
                if let Some(seed) = fixed_seed {
                    kv.insert("synthetic.seed", seed.to_string());
                }
            }
            DatasetSpec::Cora { content, cites } => {
                kv.insert("dataset", "cora".into());
                kv.insert("cora_content", content.display().to_string());
                kv.insert("cora_cites", cites.display().to_string());
            }
            DatasetSpec::File(p) => {
                kv.insert("dataset", "file".into());
                kv.insert("dataset_path", p.display().to_string());
            }
        }
        kv.insert("test_fraction", self.test_fraction.to_string());
        kv.insert("cv_folds", self.cv_folds.to_string());
        kv.insert("n_batches", self.n_batches.to_string());
        kv.insert("suite_batches", self.suite_batches.to_string());
        kv.insert("query_fraction", self.query_fraction.to_string());
        kv.insert(
            "selection",
            match self.selection {
                Selection::Entropy => "entropy",
                Selection::Random => "random",
            }
            .into(),
        );
        if let Some(modes) = &self.modes {
            kv.insert("modes", join(modes));
        }
        kv.insert(
            "noise",
            match self.noise {
                NoiseModel::Ncar => "ncar",
                NoiseModel::Nar => "nar",
            }
            .into(),
        );
        kv.insert("omega", self.omega.to_string());
        kv.insert("omegas", join(&self.omegas));
        kv.insert("beta", self.beta.to_string());
        kv.insert("betas", join(&self.betas));
        kv.insert("seeds", join(&self.seeds));
        kv.insert("mlr.learning_rate", self.mlr.learning_rate.to_string());
        kv.insert("mlr.l2", self.mlr.l2.to_string());
        kv.insert("mlr.epochs", self.mlr.epochs.to_string());
        kv.insert("mlr.batch_size", self.mlr.batch_size.to_string());
        kv.insert("mlr.update_epochs", self.update_epochs.to_string());
        kv.insert("mlr.replay", self.replay.to_string());
        kv.insert("svm.learning_rate", self.svm.learning_rate.to_string());
        kv.insert("svm.lambda", self.svm.lambda.to_string());
        kv.insert("svm.epochs", self.svm.epochs.to_string());
        kv.insert("knn.k", self.knn_k.to_string());
        kv.insert("epsilon", self.relationship.epsilon.to_string());
        kv.insert("hard_attributes", self.relationship.hard_attributes.to_string());
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
