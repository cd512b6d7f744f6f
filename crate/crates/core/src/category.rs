//! Organ categories, vocabularies and the display color scheme.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based position of a category inside a [`CategoryVocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryId(pub u32);

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The six annotated plant organs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Organ {
    Leaf,
    Flower,
    Fruit,
    Seed,
    Stem,
    Root,
}

impl Organ {
    pub const ALL: [Organ; 6] = [
        Organ::Leaf,
        Organ::Flower,
        Organ::Fruit,
        Organ::Seed,
        Organ::Stem,
        Organ::Root,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Organ::Leaf => "Leaf",
            Organ::Flower => "Flower",
            Organ::Fruit => "Fruit",
            Organ::Seed => "Seed",
            Organ::Stem => "Stem",
            Organ::Root => "Root",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name)
    }

    pub fn color(self) -> DisplayColor {
        match self {
            Organ::Leaf => DisplayColor::new("blue", "#0000FF"),
            Organ::Flower => DisplayColor::new("maroon", "#800000"),
            Organ::Fruit => DisplayColor::new("magenta", "#FF00FF"),
            Organ::Seed => DisplayColor::new("yellow", "#FFFF00"),
            Organ::Stem => DisplayColor::new("green", "#008000"),
            Organ::Root => DisplayColor::new("gray", "#808080"),
        }
    }
}

impl fmt::Display for Organ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Stroke color used when drawing boxes of one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DisplayColor {
    pub name: &'static str,
    pub hex: &'static str,
}

impl DisplayColor {
    const fn new(name: &'static str, hex: &'static str) -> Self {
        Self { name, hex }
    }
}

/// Color for a category name; categories outside the six organs get none.
pub fn color_for(category: &str) -> Option<DisplayColor> {
    Organ::from_name(category).map(Organ::color)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabularyError {
    #[error("category names must be non-empty")]
    EmptyName,
    #[error("duplicate category name {0:?}")]
    Duplicate(String),
}

/// Ordered category names; ids are positions counted from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct CategoryVocabulary {
    names: Vec<String>,
}

impl Default for CategoryVocabulary {
    fn default() -> Self {
        Self::organs()
    }
}

impl CategoryVocabulary {
    /// Leaf, Flower, Fruit, Seed, Stem, Root.
    pub fn organs() -> Self {
        Self {
            names: Organ::ALL.iter().map(|o| o.name().to_owned()).collect(),
        }
    }

    pub fn new<I, S>(names: I) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self { names: Vec::new() };
        for n in names {
            v.push(n)?;
        }
        Ok(v)
    }

    /// Appends a new category and returns its id.
    pub fn push(&mut self, name: impl Into<String>) -> Result<CategoryId, VocabularyError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(VocabularyError::EmptyName);
        }
        if self.names.contains(&name) {
            return Err(VocabularyError::Duplicate(name));
        }
        self.names.push(name);
        Ok(CategoryId(self.names.len() as u32))
    }

    pub fn id_of(&self, name: &str) -> Option<CategoryId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| CategoryId(i as u32 + 1))
    }

    pub fn name_of(&self, id: CategoryId) -> Option<&str> {
        let idx = (id.0 as usize).checked_sub(1)?;
        self.names.get(idx).map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `(id, name)` pairs in vocabulary order.
    pub fn iter(&self) -> impl Iterator<Item = (CategoryId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (CategoryId(i as u32 + 1), n.as_str()))
    }
}

impl TryFrom<Vec<String>> for CategoryVocabulary {
    type Error = VocabularyError;

    fn try_from(names: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(names)
    }
}

impl From<CategoryVocabulary> for Vec<String> {
    fn from(v: CategoryVocabulary) -> Self {
        v.names
    }
}
