use std::path::{Path, PathBuf};

use anyhow::Context;
use lacboost::cascade::Exit;
use lacboost::weak::{load_window, GrayImage, HaarFeatureSet};
use lacboost::{CascadeModel, Dataset, ModelFile, NodeTargets};
use serde_json::Value;

use crate::args::InputArgs;
use crate::error::usage;

pub fn ensure_file(path: &Path) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(usage(format!("no such file: {}", path.display())));
    }
    Ok(())
}

/// Fails early when an output could not be written, before any training.
pub fn ensure_writable(path: &Path) -> anyhow::Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(usage(format!("output directory does not exist: {}", parent.display())));
    }
    Ok(())
}

pub fn load_csv(path: &Path) -> anyhow::Result<Dataset> {
    ensure_file(path)?;
    Dataset::load_csv(path).with_context(|| format!("loading {}", path.display()))
}

/// Files of a directory in name order.
pub fn list_dir(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(usage(format!("no such directory: {}", dir.display())));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_images(dir: &Path) -> anyhow::Result<Vec<GrayImage<f64>>> {
    list_dir(dir)?
        .iter()
        .map(|p| load_window(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

/// Haar responses of whole windows, which must match the feature set's size.
pub fn window_rows(dir: &Path, haar: &HaarFeatureSet) -> anyhow::Result<Vec<Vec<f64>>> {
    let images = load_images(dir)?;
    if images.is_empty() {
        return Err(usage(format!("no windows in {}", dir.display())));
    }
    responses(&images, haar)
}

pub fn responses(images: &[GrayImage<f64>], haar: &HaarFeatureSet) -> anyhow::Result<Vec<Vec<f64>>> {
    images
        .iter()
        .map(|img| {
            if (img.width, img.height) != (haar.window_width, haar.window_height) {
                return Err(usage(format!(
                    "window is {}x{}, expected {}x{}",
                    img.width, img.height, haar.window_width, haar.window_height
                )));
            }
            Ok(haar.responses(&img.integral())?)
        })
        .collect()
}

impl InputArgs {
    /// Labelled data: the CSV, or Haar responses of `pos/` and `neg/` windows.
    pub fn load(&self, haar: Option<&HaarFeatureSet>) -> anyhow::Result<Dataset> {
        match (&self.data, &self.windows) {
            (Some(path), None) => load_csv(path),
            (None, Some(dir)) => {
                let haar = haar.ok_or_else(|| usage("--windows needs a model trained on Haar features"))?;
                let pos = window_rows(&dir.join("pos"), haar)?;
                let neg = window_rows(&dir.join("neg"), haar)?;
                Ok(Dataset::from_classes(&pos, &neg)?)
            }
            _ => Err(usage("give exactly one of --data and --windows")),
        }
    }
}

/// A saved single classifier or cascade. Single classifiers are handled as
/// one-exit cascades.
pub struct LoadedModel {
    pub cascade: CascadeModel,
    pub metadata: Value,
    pub is_cascade: bool,
}

impl LoadedModel {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        ensure_file(path)?;
        let raw: Value = lacboost::io::read_json(path).with_context(|| format!("reading {}", path.display()))?;
        match raw.get("kind").and_then(Value::as_str) {
            Some(CascadeModel::KIND) => {
                let cascade = CascadeModel::load(path)?;
                let metadata = cascade.metadata.clone();
                Ok(Self { cascade, metadata, is_cascade: true })
            }
            Some(ModelFile::KIND) => {
                let file = ModelFile::load(path)?;
                let n_t = file.weak_classifiers.len();
                let exit = Exit { n_t, first: 0, w: file.w.clone(), b: file.b };
                let cascade = CascadeModel::new(file.weak_classifiers.clone(), vec![exit], 1, NodeTargets::default())?;
                Ok(Self { cascade, metadata: file.metadata, is_cascade: false })
            }
            other => Err(usage(format!("{} is not a model file (kind {other:?})", path.display()))),
        }
    }

    pub fn haar(&self) -> anyhow::Result<Option<HaarFeatureSet>> {
        match self.metadata.get("haar") {
            None | Some(Value::Null) => Ok(None),
            Some(v) => Ok(Some(serde_json::from_value(v.clone())?)),
        }
    }

    /// Rejects data with fewer columns than the model reads.
    pub fn check_features(&self, data: &Dataset) -> anyhow::Result<()> {
        let need = self.cascade.classifiers.iter().map(|h| h.feature_index + 1).max().unwrap_or(0);
        if data.n_features() < need {
            return Err(lacboost::Error::DimensionMismatch { expected: need, got: data.n_features() }.into());
        }
        Ok(())
    }
}
