//! Deterministic synthetic corpus with planted topic/gender co-occurrence
//! structure, sized for running the full protocol on one machine.
//!
//! Documents are about science, the arts, or nothing in particular. A topic
//! document centres on one primary target word from its topic's set and
//! leans towards the male or female attribute words with that word's male
//! affinity. Affinities are spread evenly within each set, with the `S`
//! words more male on average than the `T` words, so target words differ in
//! how gendered they are and the effect size stays away from saturation.
//! Everything else is Zipf-distributed filler plus a per-topic jargon
//! cluster.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::glove::Hyperparams;
use crate::metrics::WeatSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub seed: u64,
    pub filler_words: usize,
    pub topic_words: usize,
    pub zipf_exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Share of documents on each of the two topics.
    pub topic_share: f64,
    /// Share of a topic document's target mentions that are its primary word.
    pub primary_share: f64,
    /// Probability that a gendered token follows the document's lean.
    pub lean: f64,
    pub target_rate: f64,
    pub jargon_rate: f64,
    /// Gendered-token rate is drawn uniformly from this range per document.
    pub gender_rate: (f64, f64),
    /// Target and gendered-token rate in untopical documents.
    pub background_rate: f64,
    /// Mean male affinity of `S` words is `0.5 + affinity_shift`, of `T`
    /// words `0.5 − affinity_shift`.
    pub affinity_shift: f64,
    /// Affinities within a target set are spread evenly over this width.
    pub affinity_spread: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 2000,
            seed: 7,
            filler_words: 3000,
            topic_words: 120,
            zipf_exponent: 1.0,
            min_len: 60,
            max_len: 160,
            topic_share: 0.4,
            primary_share: 0.4,
            lean: 0.85,
            target_rate: 0.08,
            jargon_rate: 0.15,
            gender_rate: (0.01, 0.15),
            background_rate: 0.01,
            affinity_shift: 0.07,
            affinity_spread: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let ok = self.n_docs > 0
            && self.filler_words > 0
            && self.topic_words > 0
            && self.min_len > 0
            && self.min_len <= self.max_len
            && self.zipf_exponent >= 0.0
            && prob(self.topic_share * 2.0)
            && prob(self.primary_share)
            && prob(self.lean)
            && prob(self.gender_rate.0)
            && prob(self.gender_rate.1)
            && self.gender_rate.0 <= self.gender_rate.1
            && prob(self.background_rate * 2.0)
            && prob(self.target_rate + self.jargon_rate + self.gender_rate.1)
            && self.affinity_spread >= 0.0
            && self.affinity_shift.abs() + self.affinity_spread / 2.0 <= 0.5;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid synthetic corpus configuration: {self:?}")))
        }
    }

    /// Male affinity of each word in a target set of `n` words centred on `centre`.
    pub fn affinities(&self, n: usize, centre: f64) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let pos = if n > 1 { k as f64 / (n - 1) as f64 - 0.5 } else { 0.0 };
                centre + self.affinity_spread * pos
            })
            .collect()
    }
}

/// Training settings for the default synthetic corpus: `x_max` is lowered
/// to suit its small counts, and 40 epochs at a higher rate keep one
/// training run to seconds.
pub fn desk_hyperparams() -> Hyperparams {
    Hyperparams {
        dim: 25,
        x_max: 10.0,
        epochs: 40,
        learning_rate: 0.1,
        ..Hyperparams::default()
    }
}

/// Vocabulary threshold used with the synthetic corpus.
pub const DESK_MIN_COUNT: u64 = 5;

/// What a generated document was built to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocTopic {
    Science,
    Arts,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lean {
    Male,
    Female,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocLabel {
    pub topic: DocTopic,
    pub primary: Option<String>,
    pub lean: Lean,
    pub gender_rate: f64,
}

pub struct SynthCorpus {
    pub corpus: Corpus,
    pub labels: Vec<DocLabel>,
}

impl SynthCorpus {
    /// Documents separated by blank lines, loadable with the default options.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in self.corpus.documents() {
            out.push_str(&d.tokens.join(" "));
            out.push_str("\n\n");
        }
        out
    }
}

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Distinct pronounceable nonsense words, skipping anything in `avoid`.
fn pseudo_words(n: usize, prefix: &str, avoid: &[&str]) -> Vec<String> {
    let base = ONSETS.len() * VOWELS.len();
    let mut out = Vec::with_capacity(n);
    let mut k = 0usize;
    while out.len() < n {
        let mut w = String::from(prefix);
        let mut m = k;
        loop {
            w.push_str(ONSETS[m % ONSETS.len()]);
            w.push_str(VOWELS[(m / ONSETS.len()) % VOWELS.len()]);
            m /= base;
            if m == 0 {
                break;
            }
            m -= 1;
        }
        if !avoid.contains(&w.as_str()) {
            out.push(w);
        }
        k += 1;
    }
    out
}

fn zipf(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-s))).expect("nonempty positive weights")
}

/// Generates the corpus for the word sets of `spec`: `S` plays the role of
/// the male-leaning topic and `T` the female-leaning one, `A` and `B` the
/// male and female attribute words.
pub fn generate(config: &SynthConfig, spec: &WeatSpec) -> Result<SynthCorpus> {
    config.validate()?;
    spec.validate()?;
    let avoid: Vec<&str> = spec.s.iter().chain(&spec.t).chain(&spec.a).chain(&spec.b).map(String::as_str).collect();
    let filler = pseudo_words(config.filler_words, "", &avoid);
    let jargon_s = pseudo_words(config.topic_words, "sci", &avoid);
    let jargon_t = pseudo_words(config.topic_words, "art", &avoid);
    let filler_dist = zipf(filler.len(), config.zipf_exponent);
    let jargon_dist = zipf(config.topic_words, config.zipf_exponent);
    let aff_s = config.affinities(spec.s.len(), 0.5 + config.affinity_shift);
    let aff_t = config.affinities(spec.t.len(), 0.5 - config.affinity_shift);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut docs = Vec::with_capacity(config.n_docs);
    let mut labels = Vec::with_capacity(config.n_docs);
    for _ in 0..config.n_docs {
        let u: f64 = rng.gen();
        let (topic, targets, affinities, jargon) = if u < config.topic_share {
            (DocTopic::Science, &spec.s, &aff_s, &jargon_s)
        } else if u < 2.0 * config.topic_share {
            (DocTopic::Arts, &spec.t, &aff_t, &jargon_t)
        } else {
            (DocTopic::General, &spec.s, &aff_s, &jargon_s)
        };
        let topical = topic != DocTopic::General;
        let primary = rng.gen_range(0..targets.len());
        let p_male = if topical { affinities[primary] } else { 0.5 };
        let lean = if rng.gen_bool(p_male) { Lean::Male } else { Lean::Female };
        let (target_rate, gender_rate, jargon_rate, lean_p) = if topical {
            let g = rng.gen_range(config.gender_rate.0..=config.gender_rate.1);
            (config.target_rate, g, config.jargon_rate, config.lean)
        } else {
            (config.background_rate, config.background_rate, 0.0, 0.5)
        };
        let len = rng.gen_range(config.min_len..=config.max_len);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let r: f64 = rng.gen();
            let word = if r < target_rate {
                if topical {
                    if rng.gen_bool(config.primary_share) {
                        targets[primary].clone()
                    } else {
                        targets.choose(&mut rng).unwrap().clone()
                    }
                } else {
                    let set = if rng.gen_bool(0.5) { &spec.s } else { &spec.t };
                    set.choose(&mut rng).unwrap().clone()
                }
            } else if r < target_rate + gender_rate {
                let male = (lean == Lean::Male) == rng.gen_bool(lean_p);
                let words = if male { &spec.a } else { &spec.b };
                words.choose(&mut rng).unwrap().clone()
            } else if r < target_rate + gender_rate + jargon_rate {
                jargon[jargon_dist.sample(&mut rng)].clone()
            } else {
                filler[filler_dist.sample(&mut rng)].clone()
            };
            tokens.push(word);
        }
        docs.push(tokens);
        labels.push(DocLabel {
            topic,
            primary: topical.then(|| targets[primary].clone()),
            lean,
            gender_rate,
        });
    }
    Ok(SynthCorpus {
        corpus: Corpus::from_documents(docs),
        labels,
    })
}
