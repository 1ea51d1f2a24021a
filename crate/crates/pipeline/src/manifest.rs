use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crn_agents::Stimulus;

use crate::error::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => f.write_str("train"),
            Split::Val => f.write_str("val"),
            Split::Test => f.write_str("test"),
        }
    }
}

impl std::str::FromStr for Split {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(PipelineError::ManifestInvalid(format!(
                "split {other:?} is not one of train/val/test"
            ))),
        }
    }
}

/// One dataset item. Paths beginning with `synth:` point at a synthetic
/// image record instead of a file on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    pub path: String,
    pub label: String,
    pub split: Split,
}

/// The visual part an item contributes to a stimulus.
#[derive(Debug, Clone, PartialEq)]
pub enum VisualInput {
    Image(PathBuf),
    Synth(String),
}

impl VisualInput {
    pub fn stimulus(&self, text: impl Into<String>) -> Stimulus {
        match self {
            VisualInput::Image(path) => Stimulus::with_image(text, path.clone()),
            VisualInput::Synth(id) => Stimulus::with_synth(text, id.clone()),
        }
    }
}

impl ManifestItem {
    pub fn visual(&self) -> VisualInput {
        match self.path.strip_prefix("synth:") {
            Some(id) => VisualInput::Synth(id.to_string()),
            None => VisualInput::Image(PathBuf::from(&self.path)),
        }
    }
}

/// Dataset manifest: `{name, task, classes, items}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub task: String,
    pub classes: Vec<String>,
    pub items: Vec<ManifestItem>,
}

impl Manifest {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::ManifestInvalid(m));
        if self.name.is_empty() {
            return fail("field \"name\" is empty".into());
        }
        if self.task.is_empty() {
            return fail("field \"task\" is empty".into());
        }
        if self.classes.is_empty() {
            return fail("field \"classes\" is empty".into());
        }
        let mut seen_classes = std::collections::BTreeSet::new();
        for class in &self.classes {
            if !seen_classes.insert(class) {
                return fail(format!("field \"classes\" repeats {class:?}"));
            }
        }
        let mut seen_ids = std::collections::BTreeSet::new();
        for (i, item) in self.items.iter().enumerate() {
            if item.id.is_empty() {
                return fail(format!("items[{i}]: field \"id\" is empty"));
            }
            if !seen_ids.insert(&item.id) {
                return fail(format!("items[{i}]: field \"id\" repeats {:?}", item.id));
            }
            if !self.classes.contains(&item.label) {
                return fail(format!(
                    "items[{i}] (id {:?}): field \"label\" value {:?} is not in classes",
                    item.id, item.label
                ));
            }
            if item.path.is_empty() {
                return fail(format!("items[{i}] (id {:?}): field \"path\" is empty", item.id));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Manifest, PipelineError> {
        let manifest: Manifest = serde_json::from_str(text)
            .map_err(|e| PipelineError::ManifestInvalid(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    /// Items of one split and label, sorted by id.
    pub fn items_for(&self, label: &str, split: Split) -> Vec<&ManifestItem> {
        let mut items: Vec<&ManifestItem> = self
            .items
            .iter()
            .filter(|i| i.label == label && i.split == split)
            .collect();
        items.sort_by(|a, b| a.id.cmp(&b.id));
        items
    }

    /// Items of one split across classes, sorted by id.
    pub fn split_items(&self, split: Split) -> Vec<&ManifestItem> {
        let mut items: Vec<&ManifestItem> =
            self.items.iter().filter(|i| i.split == split).collect();
        items.sort_by(|a, b| a.id.cmp(&b.id));
        items
    }
}
