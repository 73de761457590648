use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::conllu::{ConlluError, ConlluReader, Sentence};
use super::{MiningError, PairLexicon};
use crate::data::{tokens, write_atomic, Dataset, Instance, MetonymyCategory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSentence {
    pub sentence: String,
    /// 0-based index into the sentence's word lines.
    pub noun_token: usize,
    pub verb_token: usize,
    /// Surface form of the noun token.
    pub noun_form: String,
    /// How many earlier words share the noun's surface form (case-insensitive).
    pub noun_occurrence: usize,
    pub relation: String,
    pub noun: String,
    pub verb: String,
    pub category: MetonymyCategory,
    /// `<file>#<sent_id>`, or the 1-based block number when the block has no id.
    pub source: String,
}

impl CandidateSentence {
    /// Stable identifier used when exporting to the dataset schema.
    pub fn id(&self) -> String {
        format!("{}:{}:{}:{}", self.source, self.noun, self.verb, self.category)
    }
}

/// Lexicon keyed for lookup by lemma pair.
#[derive(Debug, Clone, Default)]
pub struct LexiconIndex {
    by_pair: HashMap<(String, String), Vec<MetonymyCategory>>,
}

impl LexiconIndex {
    pub fn new(lex: &PairLexicon) -> Self {
        let mut by_pair: HashMap<(String, String), Vec<MetonymyCategory>> = HashMap::new();
        for (noun, verb, cat, _) in lex.iter() {
            by_pair
                .entry((noun.to_string(), verb.to_string()))
                .or_default()
                .push(cat);
        }
        LexiconIndex { by_pair }
    }

    fn categories(&self, noun: &str, verb: &str) -> &[MetonymyCategory] {
        self.by_pair
            .get(&(noun.to_string(), verb.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// One candidate per (noun, verb, category) found on a head-dependent edge
/// between a NOUN and a VERB. When a pair occurs on several edges the one with
/// the lowest (noun, verb) token positions is reported.
pub fn candidates_in_sentence(sent: &Sentence, index: &LexiconIndex, source: &str) -> Vec<CandidateSentence> {
    let mut best: BTreeMap<(String, String, MetonymyCategory), (usize, usize, String)> = BTreeMap::new();
    for (d, dep) in sent.words.iter().enumerate() {
        if dep.head == 0 {
            continue;
        }
        let h = dep.head - 1;
        let head = &sent.words[h];
        let (n, v) = match (dep.upos.as_str(), head.upos.as_str()) {
            ("NOUN", "VERB") => (d, h),
            ("VERB", "NOUN") => (h, d),
            _ => continue,
        };
        let noun = sent.words[n].lemma.to_lowercase();
        let verb = sent.words[v].lemma.to_lowercase();
        for &cat in index.categories(&noun, &verb) {
            let slot = best
                .entry((noun.clone(), verb.clone(), cat))
                .or_insert((n, v, dep.deprel.clone()));
            if (n, v) < (slot.0, slot.1) {
                *slot = (n, v, dep.deprel.clone());
            }
        }
    }
    let mut out: Vec<CandidateSentence> = best
        .into_iter()
        .map(|((noun, verb, category), (n, v, relation))| CandidateSentence {
            sentence: sent.text.clone(),
            noun_token: n,
            verb_token: v,
            noun_form: sent.words[n].form.clone(),
            noun_occurrence: {
                let f = sent.words[n].form.to_lowercase();
                sent.words[..n].iter().filter(|w| w.form.to_lowercase() == f).count()
            },
            relation,
            noun,
            verb,
            category,
            source: source.to_string(),
        })
        .collect();
    out.sort_by_key(|a| (a.noun_token, a.verb_token, a.category));
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    pub files: usize,
    pub sentences: usize,
    pub malformed_blocks: usize,
    /// `file:line` of each skipped block.
    pub malformed_at: Vec<String>,
    pub sentences_with_candidates: usize,
    pub candidates: usize,
    pub per_category: BTreeMap<MetonymyCategory, usize>,
    pub distinct_pairs: usize,
    pub distinct_nouns: usize,
    pub distinct_verbs: usize,
    /// Candidates that could not be exported to the dataset schema.
    pub export_skipped: usize,
}

impl ScanStats {
    fn finish(&mut self, cands: &[CandidateSentence]) {
        let pairs: BTreeSet<(&str, &str)> = cands.iter().map(|c| (c.noun.as_str(), c.verb.as_str())).collect();
        self.distinct_pairs = pairs.len();
        self.distinct_nouns = pairs.iter().map(|p| p.0).collect::<BTreeSet<_>>().len();
        self.distinct_verbs = pairs.iter().map(|p| p.1).collect::<BTreeSet<_>>().len();
        self.candidates = cands.len();
        self.per_category.clear();
        for c in cands {
            *self.per_category.entry(c.category).or_default() += 1;
        }
    }
}

/// Streams candidates from one CoNLL-U source into `sink`. Malformed blocks
/// are skipped and recorded in `stats`.
pub fn scan_reader(
    reader: impl BufRead,
    source_name: &str,
    index: &LexiconIndex,
    stats: &mut ScanStats,
    mut sink: impl FnMut(CandidateSentence),
) -> std::io::Result<()> {
    stats.files += 1;
    for (i, block) in ConlluReader::new(reader).enumerate() {
        match block {
            Ok(sent) => {
                stats.sentences += 1;
                let source = format!(
                    "{source_name}#{}",
                    sent.sent_id.clone().unwrap_or_else(|| (i + 1).to_string())
                );
                let found = candidates_in_sentence(&sent, index, &source);
                if !found.is_empty() {
                    stats.sentences_with_candidates += 1;
                }
                found.into_iter().for_each(&mut sink);
            }
            Err(ConlluError::Malformed { line, message }) => {
                log::warn!("{source_name}:{line}: skipping block: {message}");
                stats.malformed_blocks += 1;
                stats.malformed_at.push(format!("{source_name}:{line}"));
            }
            Err(ConlluError::Io(e)) => return Err(e),
        }
    }
    Ok(())
}

/// Scans each file in order and returns all candidates with accounting.
pub fn scan_conllu(paths: &[&Path], lexicon: &PairLexicon) -> Result<(Vec<CandidateSentence>, ScanStats), MiningError> {
    if lexicon.is_empty() {
        return Err(MiningError::EmptyLexicon);
    }
    let index = LexiconIndex::new(lexicon);
    let mut stats = ScanStats::default();
    let mut out = Vec::new();
    for path in paths {
        let f = std::fs::File::open(path).map_err(|e| MiningError::io(*path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        scan_reader(BufReader::new(f), &name, &index, &mut stats, |c| out.push(c))
            .map_err(|e| MiningError::io(*path, e))?;
    }
    stats.finish(&out);
    Ok((out, stats))
}

/// Converts candidates to unlabeled dataset instances. Candidates whose noun
/// form cannot be located as a whole token in the sentence text are skipped.
pub fn export_candidates(name: &str, cands: &[CandidateSentence]) -> (Dataset, usize) {
    let mut skipped = 0;
    let mut instances = Vec::with_capacity(cands.len());
    for c in cands {
        match occurrence_of(c) {
            Some(k) => instances.push(
                Instance::new(c.id(), c.sentence.clone(), c.noun_form.clone())
                    .with_occurrence(k)
                    .with_category(c.category),
            ),
            None => skipped += 1,
        }
    }
    (Dataset::new(name, instances), skipped)
}

fn occurrence_of(c: &CandidateSentence) -> Option<usize> {
    let found = tokens::find_occurrences(&c.sentence, &c.noun_form).len();
    (c.noun_occurrence < found).then_some(c.noun_occurrence)
}

pub fn write_candidates(cands: &[CandidateSentence], path: &Path) -> Result<(), MiningError> {
    let mut s = String::new();
    for c in cands {
        s.push_str(&serde_json::to_string(c).expect("serializable"));
        s.push('\n');
    }
    Ok(write_atomic(path, s.as_bytes())?)
}

pub fn read_candidates(path: &Path) -> Result<Vec<CandidateSentence>, MiningError> {
    let text = std::fs::read_to_string(path).map_err(|e| MiningError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MiningError::Corrupt {
                path: path.into(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}
