use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FORMAT_VERSION: u32 = 1;

/// Per-seed cache from state description to per-action scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingDictionary {
    pub seed: u64,
    pub action_names: Vec<String>,
    entries: BTreeMap<String, Vec<f64>>,
    pub hit_count: u64,
    pub miss_count: u64,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    version: u32,
    #[serde(flatten)]
    dictionary: RatingDictionary,
}

impl RatingDictionary {
    pub fn new(seed: u64, action_names: Vec<String>) -> Self {
        Self {
            seed,
            action_names,
            entries: BTreeMap::new(),
            hit_count: 0,
            miss_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Plain lookup; does not touch the counters.
    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn insert(&mut self, key: String, scores: Vec<f64>) -> Result<()> {
        self.check_entry(&key, &scores)?;
        self.entries.insert(key, scores);
        Ok(())
    }

    fn check_entry(&self, key: &str, scores: &[f64]) -> Result<()> {
        if scores.len() != self.action_names.len() {
            return Err(Error::Dimension(format!(
                "entry {key:?} has {} scores for {} actions",
                scores.len(),
                self.action_names.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Parse(format!("entry {key:?} has score {bad} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.entries.iter().try_for_each(|(k, v)| self.check_entry(k, v))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DictionaryFile {
            version: FORMAT_VERSION,
            dictionary: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DictionaryFile = serde_json::from_str(text)?;
        if file.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "dictionary version {} is not supported (expected {FORMAT_VERSION})",
                file.version
            )));
        }
        file.dictionary.validate()?;
        Ok(file.dictionary)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Io { .. } => e,
            other => Error::Parse(format!("{}: {other}", path.display())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["down".into(), "down_right".into()]
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dictionary.json");
        let mut d = RatingDictionary::new(4, names());
        d.insert("a".into(), vec![0.0, 1.0]).unwrap();
        d.insert("b".into(), vec![0.25, 0.1]).unwrap();
        d.hit_count = 9;
        d.miss_count = 2;
        d.save(&path).unwrap();
        assert_eq!(RatingDictionary::load(&path).unwrap(), d);

        let empty = RatingDictionary::new(0, names());
        empty.save(&path).unwrap();
        assert!(RatingDictionary::load(&path).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_score_names_the_key() {
        let text = r#"{"version":1,"seed":0,"action_names":["down","down_right"],
            "entries":{"Agent at column 3, row 3. Goal at column 7, row 7.":[0.0,2.0]},
            "hit_count":0,"miss_count":1}"#;
        let err = RatingDictionary::from_json(text).unwrap_err().to_string();
        assert!(err.contains("Agent at column 3, row 3"), "{err}");
        assert!(err.contains('2'), "{err}");
    }

    #[test]
    fn wrong_length_and_garbage_are_rejected() {
        let text = r#"{"version":1,"seed":0,"action_names":["down","down_right"],
            "entries":{"k":[0.5]},"hit_count":0,"miss_count":0}"#;
        assert!(matches!(RatingDictionary::from_json(text), Err(Error::Dimension(_))));
        assert!(RatingDictionary::from_json("{not json").is_err());
        let future = r#"{"version":9,"seed":0,"action_names":[],"entries":{},"hit_count":0,"miss_count":0}"#;
        assert!(RatingDictionary::from_json(future).is_err());
        let mut d = RatingDictionary::new(0, names());
        assert!(d.insert("x".into(), vec![0.5, -0.1]).is_err());
    }
}
