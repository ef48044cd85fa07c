//! Scenarios and the symbolic algebra of projector words.
//!
//! A [`Word`] is a sequence of `(outcome, setting)` letters written in the order the
//! measurements are performed. The word `[a, b, c]` stands for the operator
//! `Π_c Π_b Π_a`. Only the reduced outcome set `0..o-1` appears in words; the last
//! outcome of every setting is recovered through completeness.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("invalid scenario `{0}`: expected `m-l-o` with m >= 1, l >= 1, o >= 2")]
    InvalidScenario(String),
    #[error("setting {setting} out of range for {scenario} (settings 0..{max})")]
    SettingOutOfRange {
        setting: usize,
        max: usize,
        scenario: Scenario,
    },
    #[error("outcome {outcome} out of range for {scenario} (outcomes 0..{max})")]
    OutcomeOutOfRange {
        outcome: usize,
        max: usize,
        scenario: Scenario,
    },
    #[error("cannot parse word `{0}`")]
    Parse(String),
    #[error("hierarchy level must be at least 1")]
    InvalidLevel,
}

/// A sequential measurement scenario: `m` settings, sequences of length up to `l`,
/// `o` outcomes per measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scenario {
    m: usize,
    l: usize,
    o: usize,
}

impl Scenario {
    pub fn new(m: usize, l: usize, o: usize) -> Result<Self, WordError> {
        if m == 0 || l == 0 || o < 2 {
            return Err(WordError::InvalidScenario(format!("{m}-{l}-{o}")));
        }
        Ok(Self { m, l, o })
    }

    /// Number of measurement settings.
    pub fn settings(&self) -> usize {
        self.m
    }

    /// Maximal length of an experimental sequence.
    pub fn length(&self) -> usize {
        self.l
    }

    /// Number of outcomes per measurement.
    pub fn outcomes(&self) -> usize {
        self.o
    }

    fn check_letter(&self, letter: Letter, full_outcomes: bool) -> Result<(), WordError> {
        if letter.setting >= self.m {
            return Err(WordError::SettingOutOfRange {
                setting: letter.setting,
                max: self.m - 1,
                scenario: *self,
            });
        }
        let max = if full_outcomes {
            self.o - 1
        } else {
            self.o - 2
        };
        if letter.outcome > max {
            return Err(WordError::OutcomeOutOfRange {
                outcome: letter.outcome,
                max,
                scenario: *self,
            });
        }
        Ok(())
    }

    /// Checks that every letter of `word` belongs to this scenario.
    pub fn validate(&self, word: &Word) -> Result<(), WordError> {
        word.letters()
            .iter()
            .try_for_each(|&l| self.check_letter(l, false))
    }

    /// Reduces a raw letter sequence using idempotency and orthogonality of projectors
    /// belonging to the same setting.
    pub fn simplify(&self, raw: &[Letter]) -> Result<Word, WordError> {
        raw.iter().try_for_each(|&l| self.check_letter(l, false))?;
        Ok(simplify_unchecked(raw.iter().copied()))
    }

    /// Symbolic form of `Π_{w1}† Π_{w2}` as a word in measurement order.
    ///
    /// `Π_{w1}† Π_{w2}` applies the letters of `w2` first and then those of `w1`
    /// in reverse, so the result is `simplify(w2 ++ reverse(w1))`.
    pub fn product(&self, w1: &Word, w2: &Word) -> Result<Word, WordError> {
        self.validate(w1)?;
        self.validate(w2)?;
        Ok(product_unchecked(w1, w2))
    }

    /// All canonical words of length at most `l + k - 1`, identity first, ordered by
    /// length and then lexicographically on `(setting, outcome)`.
    pub fn enumerate_words(&self, k: usize) -> Result<WordIndex, WordError> {
        if k == 0 {
            return Err(WordError::InvalidLevel);
        }
        let max_len = self.l + k - 1;
        let mut letters: Vec<Letter> = (0..self.m)
            .flat_map(|s| (0..self.o - 1).map(move |r| Letter::new(r, s)))
            .collect();
        letters.sort();

        let mut words = vec![Word::identity()];
        let mut frontier = vec![Vec::<Letter>::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for prefix in &frontier {
                for &letter in &letters {
                    if prefix
                        .last()
                        .is_some_and(|last| last.setting == letter.setting)
                    {
                        continue;
                    }
                    let mut w = prefix.clone();
                    w.push(letter);
                    next.push(w);
                }
            }
            words.extend(next.iter().cloned().map(Word::Seq));
            frontier = next;
        }
        Ok(WordIndex::new(*self, k, max_len, words))
    }

    /// Closed-form count of canonical words of length at most `max_len`.
    pub fn word_count(&self, max_len: usize) -> usize {
        let (m, o) = (self.m, self.o);
        let mut total = 1;
        let mut term = m * (o - 1);
        for _ in 0..max_len {
            total += term;
            term = term * (m - 1) * (o - 1);
        }
        total
    }

    /// Expands an event written with full outcomes `0..o` into a signed sum of
    /// canonical words, replacing the omitted outcome by `1 - Σ` of the others.
    pub fn expand_event(&self, event: &[Letter]) -> Result<Vec<(f64, Word)>, WordError> {
        event.iter().try_for_each(|&l| self.check_letter(l, true))?;
        let mut terms: Vec<(f64, Vec<Letter>)> = vec![(1.0, Vec::new())];
        for &letter in event {
            let options: Vec<(f64, Option<Letter>)> = if letter.outcome < self.o - 1 {
                vec![(1.0, Some(letter))]
            } else {
                std::iter::once((1.0, None))
                    .chain((0..self.o - 1).map(|r| (-1.0, Some(Letter::new(r, letter.setting)))))
                    .collect()
            };
            let mut next = Vec::with_capacity(terms.len() * options.len());
            for (c, w) in &terms {
                for &(c2, l) in &options {
                    let mut raw = w.clone();
                    raw.extend(l);
                    if let Word::Seq(v) = simplify_unchecked(raw.into_iter()) {
                        next.push((c * c2, v));
                    }
                }
            }
            terms = next;
        }
        let mut merged: Vec<(f64, Word)> = Vec::new();
        for (c, w) in terms {
            let w = Word::Seq(w);
            match merged.iter_mut().find(|(_, x)| *x == w) {
                Some(entry) => entry.0 += c,
                None => merged.push((c, w)),
            }
        }
        merged.retain(|(c, _)| *c != 0.0);
        merged.sort_by(|a, b| a.1.cmp(&b.1));
        Ok(merged)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.m, self.l, self.o)
    }
}

impl FromStr for Scenario {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        let bad = || WordError::InvalidScenario(s.to_string());
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<usize> = parts
            .iter()
            .map(|p| p.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        Scenario::new(nums[0], nums[1], nums[2]).map_err(|_| bad())
    }
}

impl Serialize for Scenario {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One measurement event: `outcome` obtained for `setting`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub outcome: usize,
    pub setting: usize,
}

impl Letter {
    pub const fn new(outcome: usize, setting: usize) -> Self {
        Self { outcome, setting }
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.setting, self.outcome).cmp(&(other.setting, other.outcome))
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A product of projectors in measurement order, or the annihilated product.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Word {
    Zero,
    Seq(Vec<Letter>),
}

impl Word {
    pub fn identity() -> Self {
        Word::Seq(Vec::new())
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        Word::Seq(pairs.iter().map(|&(r, s)| Letter::new(r, s)).collect())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Word::Zero)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Word::Seq(v) if v.is_empty())
    }

    /// Letters of the word; empty for both the identity and `Zero`.
    pub fn letters(&self) -> &[Letter] {
        match self {
            Word::Zero => &[],
            Word::Seq(v) => v,
        }
    }

    pub fn len(&self) -> usize {
        self.letters().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reversed(&self) -> Word {
        match self {
            Word::Zero => Word::Zero,
            Word::Seq(v) => Word::Seq(v.iter().rev().copied().collect()),
        }
    }

    /// Concatenation followed by simplification; `Zero` absorbs.
    pub fn concat(&self, other: &Word) -> Word {
        match (self, other) {
            (Word::Seq(a), Word::Seq(b)) => simplify_unchecked(a.iter().chain(b).copied()),
            _ => Word::Zero,
        }
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Word::Zero, Word::Zero) => Ordering::Equal,
            (Word::Zero, _) => Ordering::Less,
            (_, Word::Zero) => Ordering::Greater,
            (Word::Seq(a), Word::Seq(b)) => a.len().cmp(&b.len()).then_with(|| a.cmp(b)),
        }
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Word::Zero => f.write_str("0"),
            Word::Seq(v) if v.is_empty() => f.write_str("1"),
            Word::Seq(v) => {
                for (i, l) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}|{}", l.outcome, l.setting)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "0" => return Ok(Word::Zero),
            "1" => return Ok(Word::identity()),
            _ => {}
        }
        let bad = || WordError::Parse(s.to_string());
        let letters = s
            .split(',')
            .map(|tok| {
                let (r, st) = tok.trim().split_once('|').ok_or_else(bad)?;
                Ok(Letter::new(
                    r.trim().parse().map_err(|_| bad())?,
                    st.trim().parse().map_err(|_| bad())?,
                ))
            })
            .collect::<Result<Vec<_>, WordError>>()?;
        Ok(Word::Seq(letters))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn simplify_unchecked(raw: impl Iterator<Item = Letter>) -> Word {
    let mut out: Vec<Letter> = Vec::new();
    for letter in raw {
        match out.last() {
            Some(top) if top.setting == letter.setting => {
                if top.outcome != letter.outcome {
                    return Word::Zero;
                }
            }
            _ => out.push(letter),
        }
    }
    Word::Seq(out)
}

pub(crate) fn product_unchecked(w1: &Word, w2: &Word) -> Word {
    match (w1, w2) {
        (Word::Seq(a), Word::Seq(b)) => simplify_unchecked(b.iter().chain(a.iter().rev()).copied()),
        _ => Word::Zero,
    }
}

/// The ordered index set of a moment matrix at hierarchy level `k`. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct WordIndex {
    inner: Arc<IndexData>,
}

#[derive(Debug)]
struct IndexData {
    scenario: Scenario,
    level: usize,
    max_len: usize,
    words: Vec<Word>,
    lookup: HashMap<Word, usize>,
}

impl WordIndex {
    fn new(scenario: Scenario, level: usize, max_len: usize, words: Vec<Word>) -> Self {
        let lookup = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self {
            inner: Arc::new(IndexData {
                scenario,
                level,
                max_len,
                words,
                lookup,
            }),
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.inner.scenario
    }

    pub fn level(&self) -> usize {
        self.inner.level
    }

    pub fn max_len(&self) -> usize {
        self.inner.max_len
    }

    pub fn words(&self) -> &[Word] {
        &self.inner.words
    }

    pub fn len(&self) -> usize {
        self.inner.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.words.is_empty()
    }

    pub fn position(&self, word: &Word) -> Option<usize> {
        self.inner.lookup.get(word).copied()
    }

    /// Positions of the experimentally observable words (length `1..=l`).
    pub fn behavior_positions(&self) -> Vec<usize> {
        let l = self.inner.scenario.length();
        self.inner
            .words
            .iter()
            .enumerate()
            .filter(|(_, w)| (1..=l).contains(&w.len()))
            .map(|(i, _)| i)
            .collect()
    }

    /// Symbolic product for every ordered pair of positions, row-major.
    pub fn product_table(&self) -> Vec<Word> {
        let n = self.inner.words.len();
        let mut table = Vec::with_capacity(n * n);
        for a in &self.inner.words {
            for b in &self.inner.words {
                table.push(product_unchecked(a, b));
            }
        }
        table
    }
}
