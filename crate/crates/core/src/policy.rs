//! Policy tables: the probability of producing word A from every memory state.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{
    check_history_len, enumerate_states, state_count, swap_index, StateIndex, Word,
};

pub const POLICY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPair {
    word_a: String,
    word_b: String,
}

impl WordPair {
    pub fn new(word_a: impl Into<String>, word_b: impl Into<String>) -> Result<Self> {
        let (word_a, word_b) = (word_a.into(), word_b.into());
        if word_a.is_empty() || word_b.is_empty() {
            return Err(Error::InvalidWordPair("words must be non-empty".into()));
        }
        if word_a == word_b {
            return Err(Error::InvalidWordPair(format!("both words are {word_a:?}")));
        }
        Ok(WordPair { word_a, word_b })
    }

    pub fn word_a(&self) -> &str {
        &self.word_a
    }

    pub fn word_b(&self) -> &str {
        &self.word_b
    }

    pub fn label(&self, w: Word) -> &str {
        match w {
            Word::A => &self.word_a,
            Word::B => &self.word_b,
        }
    }

    pub fn swapped(&self) -> Self {
        WordPair {
            word_a: self.word_b.clone(),
            word_b: self.word_a.clone(),
        }
    }
}

impl Default for WordPair {
    fn default() -> Self {
        WordPair {
            word_a: "A".into(),
            word_b: "B".into(),
        }
    }
}

/// Provenance of a policy table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetadata {
    #[serde(skip)]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template_version: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTable {
    word_pair: WordPair,
    history_len: usize,
    temperature: f64,
    probs: Vec<f64>,
    pub metadata: PolicyMetadata,
}

/// On-disk layout of a policy file.
#[derive(Serialize, Deserialize)]
struct PolicyFile {
    schema_version: u32,
    model: String,
    word_a: String,
    word_b: String,
    temperature: f64,
    #[serde(rename = "H")]
    history_len: usize,
    probs: Vec<f64>,
    #[serde(default)]
    metadata: PolicyMetadata,
}

impl PolicyTable {
    pub fn new(
        word_pair: WordPair,
        history_len: usize,
        temperature: f64,
        probs: Vec<f64>,
        metadata: PolicyMetadata,
    ) -> Result<Self> {
        check_history_len(history_len, 1)?;
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let expected = state_count(history_len);
        if probs.len() != expected {
            return Err(Error::PolicyLength {
                expected,
                found: probs.len(),
            });
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::ProbabilityOutOfRange { index, value });
        }
        Ok(PolicyTable {
            word_pair,
            history_len,
            temperature,
            probs,
            metadata,
        })
    }

    pub fn word_pair(&self) -> &WordPair {
        &self.word_pair
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn state_count(&self) -> usize {
        self.probs.len()
    }

    /// Probability of producing word A from state `i`.
    #[inline]
    pub fn prob_a(&self, i: StateIndex) -> f64 {
        self.probs[i.0]
    }

    /// Word produced from state `i` given a uniform draw `u` in `[0, 1)`.
    #[inline]
    pub fn produce_word(&self, i: StateIndex, u: f64) -> Word {
        if u < self.probs[i.0] {
            Word::A
        } else {
            Word::B
        }
    }

    /// The same policy with the two words relabelled:
    /// `swapped[swap(i)] = 1 - probs[i]`.
    pub fn swapped(&self) -> PolicyTable {
        let h = self.history_len;
        let mut probs = vec![0.0; self.probs.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            let j = swap_index(StateIndex(i), h).expect("valid index");
            probs[j.0] = 1.0 - p;
        }
        PolicyTable {
            word_pair: self.word_pair.swapped(),
            history_len: h,
            temperature: self.temperature,
            probs,
            metadata: self.metadata.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PolicyFile {
            schema_version: POLICY_SCHEMA_VERSION,
            model: self.metadata.model.clone(),
            word_a: self.word_pair.word_a.clone(),
            word_b: self.word_pair.word_b.clone(),
            temperature: self.temperature,
            history_len: self.history_len,
            probs: self.probs.clone(),
            metadata: self.metadata.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PolicyFile = serde_json::from_str(text)?;
        if file.schema_version != POLICY_SCHEMA_VERSION {
            return Err(Error::SchemaVersion(file.schema_version));
        }
        let mut metadata = file.metadata;
        metadata.model = file.model;
        PolicyTable::new(
            WordPair::new(file.word_a, file.word_b)?,
            file.history_len,
            file.temperature,
            file.probs,
            metadata,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        std::io::Read::read_to_string(&mut BufReader::new(file), &mut text)
            .map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Writes `state_index,state_string,prob_a` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state_index", "state_string", "prob_a"])?;
        for (idx, m) in enumerate_states(self.history_len) {
            w.write_record([
                idx.to_string(),
                m.to_string(),
                format!("{:.16e}", self.probs[idx.0]),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(f))
    }
}

/// Synthetic policies used as fixtures and baselines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthKind {
    /// Every state produces A with probability 0.5.
    Uniform,
    Constant(f64),
    /// Empty memory produces A with the given probability, every other state 0.5.
    BiasedEmpty(f64),
    /// Random table invariant under relabelling A and B.
    WordSwapSymmetric { seed: u64 },
    /// Repeats the word partners used most often in memory; ties, including
    /// the empty memory, produce A with probability `tie`.
    Majority { tie: f64 },
    /// Independent uniform draws per state.
    Random { seed: u64 },
}

impl SynthKind {
    fn name(&self) -> String {
        match self {
            SynthKind::Uniform => "uniform".into(),
            SynthKind::Constant(q) => format!("constant({q})"),
            SynthKind::BiasedEmpty(q) => format!("biased-empty({q})"),
            SynthKind::WordSwapSymmetric { seed } => format!("word-swap-symmetric({seed})"),
            SynthKind::Majority { tie } => format!("majority({tie})"),
            SynthKind::Random { seed } => format!("random({seed})"),
        }
    }
}

pub fn synth_policy(kind: SynthKind, h: usize) -> Result<PolicyTable> {
    check_history_len(h, 1)?;
    let n = state_count(h);
    let probs = match kind {
        SynthKind::Uniform => vec![0.5; n],
        SynthKind::Constant(q) => vec![q; n],
        SynthKind::BiasedEmpty(q) => {
            let mut p = vec![0.5; n];
            p[0] = q;
            p
        }
        SynthKind::Majority { tie } => enumerate_states(h)
            .map(|(_, m)| {
                let a = m.pairs().iter().filter(|p| p.partner == Word::A).count();
                match (2 * a).cmp(&m.len()) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => tie,
                }
            })
            .collect(),
        SynthKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random::<f64>()).collect()
        }
        SynthKind::WordSwapSymmetric { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = vec![f64::NAN; n];
            for i in 0..n {
                let j = swap_index(StateIndex(i), h)?.0;
                if j == i {
                    p[i] = 0.5;
                } else if i < j {
                    // Multiples of 2^-53, so 1 - q is exact.
                    let q: f64 = rng.random();
                    p[i] = q;
                    p[j] = 1.0 - q;
                }
            }
            p
        }
    };
    let metadata = PolicyMetadata {
        model: format!("synthetic:{}", kind.name()),
        ..Default::default()
    };
    PolicyTable::new(WordPair::default(), h, 1.0, probs, metadata)
}
