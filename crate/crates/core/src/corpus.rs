//! Corpus ingestion: tokenization, document splitting and length filtering,
//! and the frequency-ordered vocabulary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token emitted for every run of digits.
pub const NUM_TOKEN: &str = "<num>";

/// Lowercases, keeps alphabetic runs, drops punctuation and maps each number
/// (digits, optionally with inner `.`/`,` groups) to [`NUM_TOKEN`].
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut chars = text.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        if c.is_alphabetic() {
            // Some lowercase mappings append combining marks; keep letters only.
            let mut word: String = c.to_lowercase().filter(|l| l.is_alphabetic()).collect();
            while let Some(&(_, n)) = chars.peek() {
                if !n.is_alphabetic() {
                    break;
                }
                word.extend(n.to_lowercase().filter(|l| l.is_alphabetic()));
                chars.next();
            }
            if !word.is_empty() {
                tokens.push(word);
            }
        } else if c.is_ascii_digit() {
            while let Some(&(p, n)) = chars.peek() {
                let grouped = (n == '.' || n == ',')
                    && bytes.get(p + 1).is_some_and(|b| b.is_ascii_digit());
                if !(n.is_ascii_digit() || grouped) {
                    break;
                }
                chars.next();
            }
            tokens.push(NUM_TOKEN.to_string());
        } else if c == '<' && text[pos..].starts_with(NUM_TOKEN) {
            // Re-tokenizing our own output must be a no-op.
            for _ in 1..NUM_TOKEN.len() {
                chars.next();
            }
            tokens.push(NUM_TOKEN.to_string());
        }
    }
    tokens
}

/// How documents are delimited in a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordSeparator {
    /// Documents are separated by one or more blank lines.
    #[default]
    BlankLine,
    /// One document per line.
    Line,
}

impl std::str::FromStr for RecordSeparator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blank-line" | "blank" => Ok(RecordSeparator::BlankLine),
            "line" => Ok(RecordSeparator::Line),
            other => Err(Error::InvalidArgument(format!(
                "unknown record separator '{other}' (expected blank-line or line)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub min_len: usize,
    pub max_len: usize,
    pub separator: RecordSeparator,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            min_len: 1,
            max_len: usize::MAX,
            separator: RecordSeparator::BlankLine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteSpan {
    pub start: usize,
    pub len: usize,
}

impl ByteSpan {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: usize,
    pub tokens: Vec<String>,
    pub span: ByteSpan,
    pub metadata: Option<String>,
}

/// An ordered, densely indexed collection of documents.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    source: Option<PathBuf>,
}

/// Splits raw bytes into record spans, without any filtering.
fn split_records(bytes: &[u8], separator: RecordSeparator) -> Vec<ByteSpan> {
    let mut spans = Vec::new();
    let mut line_start = 0;
    let mut current: Option<(usize, usize)> = None;
    let mut lines = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            lines.push((line_start, i));
            line_start = i + 1;
        }
    }
    if line_start < bytes.len() {
        lines.push((line_start, bytes.len()));
    }
    for (start, mut end) in lines {
        if end > start && bytes[end - 1] == b'\r' {
            end -= 1;
        }
        let blank = bytes[start..end].iter().all(|b| b.is_ascii_whitespace());
        match separator {
            RecordSeparator::Line => {
                if !blank {
                    spans.push(ByteSpan { start, len: end - start });
                }
            }
            RecordSeparator::BlankLine => {
                if blank {
                    if let Some((s, e)) = current.take() {
                        spans.push(ByteSpan { start: s, len: e - s });
                    }
                } else {
                    current = Some(match current {
                        Some((s, _)) => (s, end),
                        None => (start, end),
                    });
                }
            }
        }
    }
    if let Some((s, e)) = current {
        spans.push(ByteSpan { start: s, len: e - s });
    }
    spans
}

impl Corpus {
    /// Parses an in-memory corpus. Invalid UTF-8 is replaced, never fatal.
    pub fn parse(bytes: &[u8], opts: &LoadOptions) -> Corpus {
        let spans = split_records(bytes, opts.separator);
        let tokenized: Vec<(ByteSpan, Vec<String>)> = spans
            .into_par_iter()
            .map(|span| {
                let text = String::from_utf8_lossy(&bytes[span.range()]);
                (span, tokenize(&text))
            })
            .collect();
        let documents = tokenized
            .into_iter()
            .filter(|(_, t)| t.len() >= opts.min_len && t.len() <= opts.max_len)
            .enumerate()
            .map(|(doc_id, (span, tokens))| Document {
                doc_id,
                tokens,
                span,
                metadata: None,
            })
            .collect();
        Corpus {
            documents,
            source: None,
        }
    }

    pub fn from_documents(tokens: Vec<Vec<String>>) -> Corpus {
        let documents = tokens
            .into_iter()
            .enumerate()
            .map(|(doc_id, tokens)| Document {
                doc_id,
                tokens,
                span: ByteSpan { start: 0, len: 0 },
                metadata: None,
            })
            .collect();
        Corpus {
            documents,
            source: None,
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: usize) -> Result<&Document> {
        self.documents.get(doc_id).ok_or(Error::DocOutOfRange {
            doc_id,
            n_docs: self.documents.len(),
        })
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// The corpus with the given documents removed, re-indexed densely.
    /// Byte spans keep pointing into the original source.
    pub fn without(&self, removed: &[usize]) -> Result<Corpus> {
        let mut drop = vec![false; self.len()];
        for &id in removed {
            self.get(id)?;
            drop[id] = true;
        }
        let documents = self
            .documents
            .iter()
            .filter(|d| !drop[d.doc_id])
            .enumerate()
            .map(|(doc_id, d)| Document {
                doc_id,
                ..d.clone()
            })
            .collect();
        Ok(Corpus {
            documents,
            source: self.source.clone(),
        })
    }

    /// Document index lines: `doc_id<TAB>byte_start<TAB>byte_len<TAB>token_count`.
    pub fn index_string(&self) -> String {
        let mut out = String::new();
        for d in &self.documents {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                d.doc_id,
                d.span.start,
                d.span.len,
                d.tokens.len()
            );
        }
        out
    }

    pub fn write_index(&self, path: &Path) -> Result<()> {
        fs::write(path, self.index_string()).map_err(|e| Error::io(path, e))
    }
}

/// One parsed line of a document index file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexEntry {
    pub doc_id: usize,
    pub span: ByteSpan,
    pub token_count: usize,
}

pub fn parse_index(text: &str) -> Result<Vec<IndexEntry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse = |k: usize| -> Result<usize> {
            fields
                .get(k)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Parse {
                    what: "document index",
                    line: n + 1,
                    reason: format!("expected 4 tab-separated integers, got '{line}'"),
                })
        };
        if fields.len() != 4 {
            parse(99)?;
        }
        out.push(IndexEntry {
            doc_id: parse(0)?,
            span: ByteSpan {
                start: parse(1)?,
                len: parse(2)?,
            },
            token_count: parse(3)?,
        });
    }
    Ok(out)
}

/// Reads and filters a corpus file.
pub fn load_corpus(path: &Path, opts: &LoadOptions) -> Result<Corpus> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = Corpus::parse(&bytes, opts);
    if corpus.is_empty() {
        return Err(Error::NoDocuments {
            path: path.to_path_buf(),
            min_len: opts.min_len,
            max_len: opts.max_len,
        });
    }
    corpus.source = Some(path.to_path_buf());
    log::info!(
        "{}: {} documents, {} tokens",
        path.display(),
        corpus.len(),
        corpus.token_count()
    );
    Ok(corpus)
}

/// Word ↔ id mapping ordered by descending frequency, ties lexicographic.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit `(word, count)` pairs, re-sorting
    /// them into canonical order.
    pub fn from_counts(mut pairs: Vec<(String, u64)>) -> Result<Vocabulary> {
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!("duplicate word '{}'", w[0].0)));
            }
        }
        let (words, counts): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            words,
            counts,
            index,
        })
    }

    /// A vocabulary with the given word order and unknown counts (as read
    /// back from an embedding file).
    pub fn from_ordered_words(words: Vec<String>) -> Result<Vocabulary> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate word '{w}'")));
            }
        }
        let counts = vec![0; words.len()];
        Ok(Vocabulary {
            words,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<Option<u32>> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// FNV-1a over the ordered word list; binds models to vocabularies.
    pub fn checksum(&self) -> u64 {
        words_checksum(&self.words)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (w, c) in self.words.iter().zip(&self.counts) {
            let _ = writeln!(out, "{w} {c}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str) -> Result<Vocabulary> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(' ');
            let (Some(w), Some(c), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse {
                    what: "vocabulary",
                    line: n + 1,
                    reason: format!("expected 'word count', got '{line}'"),
                });
            };
            let c = c.parse().map_err(|_| Error::Parse {
                what: "vocabulary",
                line: n + 1,
                reason: format!("bad count '{c}'"),
            })?;
            pairs.push((w.to_string(), c));
        }
        Vocabulary::from_counts(pairs)
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::parse(&text)
    }
}

pub(crate) fn words_checksum(words: &[String]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for &b in w.as_bytes().iter().chain(std::iter::once(&b'\n')) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Counts tokens over the corpus and keeps those with frequency ≥ `min_count`.
pub fn build_vocabulary(corpus: &Corpus, min_count: u64) -> Result<Vocabulary> {
    let counts = corpus
        .documents()
        .par_iter()
        .fold(HashMap::<&str, u64>::new, |mut acc, doc| {
            for t in &doc.tokens {
                *acc.entry(t.as_str()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let pairs: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    Vocabulary::from_counts(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat, the hat."), toks(&["the", "cat", "the", "hat"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("In 1987 NASA flew"), toks(&["in", "<num>", "nasa", "flew"]));
        assert_eq!(tokenize("pi is 3.14, about 1,000x"), toks(&["pi", "is", "<num>", "about", "<num>", "x"]));
        assert_eq!(tokenize("Éclair café"), toks(&["éclair", "café"]));
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        let bytes = b"good \xff\xfe words\n";
        let c = Corpus::parse(bytes, &LoadOptions::default());
        assert_eq!(c.documents()[0].tokens, toks(&["good", "words"]));
    }

    #[test]
    fn length_filter_reindexes() {
        let doc = |n: usize| vec!["w"; n].join(" ");
        let text = format!("{}\n\n{}\n\n{}\n", doc(50), doc(300), doc(20000));
        let opts = LoadOptions {
            min_len: 200,
            max_len: 10000,
            separator: RecordSeparator::BlankLine,
        };
        let c = Corpus::parse(text.as_bytes(), &opts);
        assert_eq!(c.len(), 1);
        assert_eq!(c.documents()[0].doc_id, 0);
        assert_eq!(c.documents()[0].tokens.len(), 300);
    }

    #[test]
    fn separators() {
        let text = "a b\nc d\n\n\n e f \r\n\ng";
        let blank = Corpus::parse(text.as_bytes(), &LoadOptions::default());
        assert_eq!(blank.len(), 3);
        assert_eq!(blank.documents()[0].tokens, toks(&["a", "b", "c", "d"]));
        let line = Corpus::parse(
            text.as_bytes(),
            &LoadOptions {
                separator: RecordSeparator::Line,
                ..LoadOptions::default()
            },
        );
        assert_eq!(line.len(), 4);
    }

    #[test]
    fn load_errors() {
        let missing = Path::new("/definitely/not/here.txt");
        let err = load_corpus(missing, &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.txt"));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("short.txt");
        fs::write(&p, "tiny doc\n").unwrap();
        let opts = LoadOptions {
            min_len: 10,
            ..LoadOptions::default()
        };
        assert!(matches!(load_corpus(&p, &opts), Err(Error::NoDocuments { .. })));
    }

    #[test]
    fn load_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, "one two\n\nthree four five\n\nsix\n").unwrap();
        let a = load_corpus(&p, &LoadOptions::default()).unwrap();
        let b = load_corpus(&p, &LoadOptions::default()).unwrap();
        assert_eq!(a.documents(), b.documents());
        assert_eq!(a.source(), Some(p.as_path()));
    }

    #[test]
    fn vocabulary_threshold_and_order() {
        let c = Corpus::from_documents(vec![toks(&["a", "a", "a", "b", "b", "c"])]);
        let v = build_vocabulary(&c, 2).unwrap();
        assert_eq!(v.words(), &toks(&["a", "b"])[..]);
        assert_eq!(v.counts(), &[3, 2]);
        let v1 = build_vocabulary(&c, 1).unwrap();
        assert_eq!(v1.words(), &toks(&["a", "b", "c"])[..]);
        for (i, w) in v1.words().iter().enumerate() {
            assert_eq!(v1.id(w), Some(i as u32));
        }
        assert!(matches!(build_vocabulary(&c, 4), Err(Error::EmptyVocabulary { .. })));
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = Corpus::from_documents(vec![toks(&["zeta", "alpha", "mid", "mid"])]);
        let v = build_vocabulary(&c, 1).unwrap();
        assert_eq!(v.words(), &toks(&["mid", "alpha", "zeta"])[..]);
    }

    #[test]
    fn vocabulary_file_roundtrip() {
        let v = Vocabulary::from_counts(vec![("x".into(), 5), ("y".into(), 9)]).unwrap();
        assert_eq!(v.to_file_string(), "y 9\nx 5\n");
        assert_eq!(Vocabulary::parse(&v.to_file_string()).unwrap(), v);
        assert!(Vocabulary::parse("only-one-field\n").is_err());
    }

    #[test]
    fn index_roundtrip_and_spans() {
        let text = "Alpha beta.\n\nGamma, 42 delta!\n\nepsilon\n";
        let c = Corpus::parse(text.as_bytes(), &LoadOptions::default());
        let idx = parse_index(&c.index_string()).unwrap();
        assert_eq!(idx.len(), 3);
        for (e, d) in idx.iter().zip(c.documents()) {
            assert_eq!(e.doc_id, d.doc_id);
            assert_eq!(e.token_count, d.tokens.len());
            assert_eq!(tokenize(&text[e.span.range()]), d.tokens);
        }
        assert!(parse_index("1\t2\n").is_err());
    }

    #[test]
    fn without_reindexes() {
        let c = Corpus::from_documents(vec![toks(&["a"]), toks(&["b"]), toks(&["c"])]);
        let r = c.without(&[1]).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.documents()[1].doc_id, 1);
        assert_eq!(r.documents()[1].tokens, toks(&["c"]));
        assert!(c.without(&[3]).is_err());
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(s in "\\PC{0,80}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn doubling_corpus_doubles_counts(docs in proptest::collection::vec("[a-e ]{1,30}", 1..6)) {
            let c = Corpus::from_documents(docs.iter().map(|d| tokenize(d)).collect());
            prop_assume!(c.token_count() > 0);
            let doubled = Corpus::from_documents(
                docs.iter().chain(docs.iter()).map(|d| tokenize(d)).collect(),
            );
            let v = build_vocabulary(&c, 1).unwrap();
            let v2 = build_vocabulary(&doubled, 1).unwrap();
            prop_assert_eq!(v.words(), v2.words());
            for (a, b) in v.counts().iter().zip(v2.counts()) {
                prop_assert_eq!(2 * a, *b);
            }
        }

        #[test]
        fn spans_roundtrip(docs in proptest::collection::vec("[A-Za-z0-9 ,.!]{1,40}", 1..8)) {
            let text = docs.join("\n\n");
            let c = Corpus::parse(text.as_bytes(), &LoadOptions::default());
            for d in c.documents() {
                let back = String::from_utf8_lossy(&text.as_bytes()[d.span.range()]);
                prop_assert_eq!(tokenize(&back), d.tokens.clone());
            }
        }
    }
}
