//! Difficulty-leveled word lists.
//!
//! A catalog is loaded from a JSON document of the form
//! `{"lists":[{"id":..,"name":..,"level":..,"words":[..]}, ..]}`. Every word is
//! normalized to lowercase `a`-`z`, lists are sorted by level, and levels must
//! form the contiguous range `1..=n`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Longest accepted word, in letters.
pub const MAX_WORD_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("character {found:?} at offset {offset} is not a letter a-z")]
    NonAlphabetic { found: char, offset: usize },
    #[error("word has {len} letters, expected 1..={MAX_WORD_LEN}")]
    LengthOutOfRange { len: usize },
}

/// A normalized word: 1 to [`MAX_WORD_LEN`] lowercase ASCII letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(String);

impl Word {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letter at `index`. Panics when out of range.
    pub fn letter(&self, index: usize) -> Letter {
        Letter(self.0.as_bytes()[index])
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.0.bytes().map(Letter)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_word(s)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        let word = normalize_word(&raw).map_err(serde::de::Error::custom)?;
        if word.0 != raw {
            return Err(serde::de::Error::custom(format!(
                "word {raw:?} is not normalized"
            )));
        }
        Ok(word)
    }
}

/// Case-folds `raw` and checks it against the word alphabet and length limits.
pub fn normalize_word(raw: &str) -> Result<Word, WordError> {
    let folded = raw.to_lowercase();
    if let Some((offset, found)) = folded.char_indices().find(|(_, c)| !c.is_ascii_lowercase()) {
        return Err(WordError::NonAlphabetic { found, offset });
    }
    let len = folded.len();
    if !(1..=MAX_WORD_LEN).contains(&len) {
        return Err(WordError::LengthOutOfRange { len });
    }
    Ok(Word(folded))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{0:?} is not a letter a-z")]
pub struct InvalidLetter(pub char);

/// One key of the letter keyboard, `a`-`z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub const COUNT: usize = 26;

    /// All letters in alphabetical order.
    pub fn all() -> impl Iterator<Item = Letter> {
        (b'a'..=b'z').map(Letter)
    }

    /// Zero-based alphabet index (`a` = 0).
    pub fn index(self) -> usize {
        usize::from(self.0 - b'a')
    }

    pub fn from_index(index: usize) -> Option<Letter> {
        (index < Self::COUNT).then(|| Letter(b'a' + index as u8))
    }

    pub fn as_char(self) -> char {
        char::from(self.0)
    }
}

impl TryFrom<char> for Letter {
    type Error = InvalidLetter;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        let lower = c.to_ascii_lowercase();
        if lower.is_ascii_lowercase() {
            Ok(Letter(lower as u8))
        } else {
            Err(InvalidLetter(c))
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl Serialize for Letter {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut buf = [0u8; 4];
        serializer.serialize_str(self.as_char().encode_utf8(&mut buf))
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        let mut chars = raw.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_lowercase() => Ok(Letter(c as u8)),
            _ => Err(serde::de::Error::custom(format!(
                "expected a single letter a-z, got {raw:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordList {
    pub id: String,
    pub name: String,
    pub level: u32,
    pub words: Vec<Word>,
}

impl WordList {
    pub fn contains(&self, word: &Word) -> bool {
        self.words.contains(word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("document contains no word lists")]
    EmptyList,
    #[error("list {list_id:?} has no words")]
    EmptyWords { list_id: String },
    #[error("list id {list_id:?} must be a non-empty token without whitespace")]
    InvalidListId { list_id: String },
    #[error("list id {list_id:?} is used more than once")]
    DuplicateListId { list_id: String },
    #[error("list {list_id:?} word {position}: {source}")]
    Word {
        list_id: String,
        position: usize,
        #[source]
        source: WordError,
    },
    #[error("list {list_id:?} word {position}: {word:?} already appears at position {first}")]
    DuplicateWordInList {
        list_id: String,
        word: String,
        position: usize,
        first: usize,
    },
    #[error("level {level} is used by more than one list")]
    DuplicateLevel { level: i64 },
    #[error("levels {levels:?} are not contiguous from 1")]
    NonContiguousLevels { levels: Vec<i64> },
    #[error("no list at level {level}")]
    LevelNotFound { level: u32 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    lists: Vec<RawList>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawList {
    id: String,
    name: String,
    level: i64,
    words: Vec<String>,
}

/// An immutable, validated set of word lists ordered by ascending level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Catalog {
    lists: Vec<WordList>,
}

impl Catalog {
    /// Builds a catalog from already-constructed lists, applying the same
    /// invariants as [`load_catalog`].
    pub fn from_lists(lists: Vec<WordList>) -> Result<Catalog, CatalogError> {
        let raw = RawDocument {
            lists: lists
                .into_iter()
                .map(|l| RawList {
                    id: l.id,
                    name: l.name,
                    level: i64::from(l.level),
                    words: l.words.into_iter().map(|w| w.0).collect(),
                })
                .collect(),
        };
        build(raw).map_err(|mut errs| errs.remove(0))
    }

    pub fn lists(&self) -> &[WordList] {
        &self.lists
    }

    /// Highest level; levels are always `1..=max_level()`.
    pub fn max_level(&self) -> u32 {
        self.lists.len() as u32
    }

    pub fn list_at_level(&self, level: u32) -> Result<&WordList, CatalogError> {
        level
            .checked_sub(1)
            .and_then(|i| self.lists.get(i as usize))
            .ok_or(CatalogError::LevelNotFound { level })
    }

    /// Level of the first list containing `word`.
    pub fn level_of(&self, word: &Word) -> Option<u32> {
        self.lists
            .iter()
            .find(|l| l.contains(word))
            .map(|l| l.level)
    }

    pub fn word_count(&self) -> usize {
        self.lists.iter().map(|l| l.words.len()).sum()
    }
}

/// Parses and validates a word-list document, returning the first problem found.
pub fn load_catalog(document: &[u8]) -> Result<Catalog, CatalogError> {
    parse(document).map_err(|mut errs| errs.remove(0))
}

/// Parses and validates a word-list document, reporting every problem found.
pub fn validate_document(document: &[u8]) -> Result<Catalog, Vec<CatalogError>> {
    parse(document)
}

fn parse(document: &[u8]) -> Result<Catalog, Vec<CatalogError>> {
    if document.starts_with(&[0xEF, 0xBB, 0xBF]) {
        return Err(vec![CatalogError::Parse(
            "document starts with a UTF-8 byte order mark".into(),
        )]);
    }
    let text = std::str::from_utf8(document)
        .map_err(|e| vec![CatalogError::Parse(format!("invalid UTF-8: {e}"))])?;
    let raw: RawDocument =
        serde_json::from_str(text).map_err(|e| vec![CatalogError::Parse(e.to_string())])?;
    build(raw)
}

fn build(raw: RawDocument) -> Result<Catalog, Vec<CatalogError>> {
    let mut errors = Vec::new();
    if raw.lists.is_empty() {
        return Err(vec![CatalogError::EmptyList]);
    }

    let mut ids = HashSet::new();
    let mut by_level: BTreeMap<i64, usize> = BTreeMap::new();
    let mut lists = Vec::with_capacity(raw.lists.len());

    for list in raw.lists {
        if list.id.is_empty() || list.id.chars().any(char::is_whitespace) {
            errors.push(CatalogError::InvalidListId {
                list_id: list.id.clone(),
            });
        } else if !ids.insert(list.id.clone()) {
            errors.push(CatalogError::DuplicateListId {
                list_id: list.id.clone(),
            });
        }
        if list.words.is_empty() {
            errors.push(CatalogError::EmptyWords {
                list_id: list.id.clone(),
            });
        }
        *by_level.entry(list.level).or_default() += 1;

        let mut words = Vec::with_capacity(list.words.len());
        let mut first_seen: BTreeMap<Word, usize> = BTreeMap::new();
        for (position, raw_word) in list.words.iter().enumerate() {
            match normalize_word(raw_word) {
                Ok(word) => {
                    if let Some(&first) = first_seen.get(&word) {
                        errors.push(CatalogError::DuplicateWordInList {
                            list_id: list.id.clone(),
                            word: word.0.clone(),
                            position,
                            first,
                        });
                    } else {
                        first_seen.insert(word.clone(), position);
                        words.push(word);
                    }
                }
                Err(source) => errors.push(CatalogError::Word {
                    list_id: list.id.clone(),
                    position,
                    source,
                }),
            }
        }
        lists.push((list.level, list.id, list.name, words));
    }

    for (&level, &count) in &by_level {
        if count > 1 {
            errors.push(CatalogError::DuplicateLevel { level });
        }
    }
    let levels: BTreeSet<i64> = by_level.keys().copied().collect();
    let contiguous = levels.iter().copied().eq(1..=levels.len() as i64);
    if !contiguous {
        errors.push(CatalogError::NonContiguousLevels {
            levels: levels.into_iter().collect(),
        });
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    lists.sort_by_key(|(level, ..)| *level);
    Ok(Catalog {
        lists: lists
            .into_iter()
            .map(|(level, id, name, words)| WordList {
                id,
                name,
                level: level as u32,
                words,
            })
            .collect(),
    })
}
