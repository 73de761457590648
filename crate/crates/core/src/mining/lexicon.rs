use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::MiningError;
use crate::data::{tokens, write_atomic, MetonymyCategory};
use crate::llm::{ChatBackend, ChatRequest, Message};

/// Noun-replacement prompt. Project wording, not a published prompt.
pub const NOUN_PROMPT: &str = include_str!("../../prompts/augment_noun.txt");
/// Verb-replacement prompt. Project wording, not a published prompt.
pub const VERB_PROMPT: &str = include_str!("../../prompts/augment_verb.txt");

static LEMMA: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[a-z]+(?:-[a-z]+)*$").unwrap());
static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:\d+[.)]|[-*•])\s*").unwrap());
static SEPARATOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)[,;\n]|\band\b|\bor\b").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPair {
    pub noun: String,
    pub verb: String,
    #[serde(rename = "sentence")]
    pub template_sentence: String,
    pub category: MetonymyCategory,
}

impl SeedPair {
    pub fn new(
        noun: impl Into<String>,
        verb: impl Into<String>,
        template_sentence: impl Into<String>,
        category: MetonymyCategory,
    ) -> Result<Self, String> {
        let s = SeedPair {
            noun: noun.into(),
            verb: verb.into(),
            template_sentence: template_sentence.into(),
            category,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (what, w) in [("noun", &self.noun), ("verb", &self.verb)] {
            if !LEMMA.is_match(w) {
                return Err(format!("{what} {w:?} is not a lowercase single lemma"));
            }
        }
        if tokens::find_occurrences(&self.template_sentence, &self.noun).is_empty() {
            return Err(format!("sentence does not contain the noun {:?}", self.noun));
        }
        Ok(())
    }

    fn key(&self) -> String {
        format!("{}|{}|{}", self.noun, self.verb, self.category)
    }
}

/// Reads one seed per JSONL line: `{"noun", "verb", "sentence", "category"}`.
pub fn read_seeds(path: &Path) -> Result<Vec<SeedPair>, MiningError> {
    let f = std::fs::File::open(path).map_err(|e| MiningError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| MiningError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| MiningError::InvalidSeed { line: i + 1, message };
        let seed: SeedPair = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        seed.validate().map_err(bad)?;
        out.push(seed);
    }
    Ok(out)
}

/// The seed sentence with its first occurrence of the seed noun replaced.
pub fn substitute_noun(seed: &SeedPair, noun: &str) -> String {
    match tokens::find_occurrences(&seed.template_sentence, &seed.noun).first() {
        Some(span) => {
            let chars: Vec<char> = seed.template_sentence.chars().collect();
            let before: String = chars[..span.start].iter().collect();
            let after: String = chars[span.end..].iter().collect();
            format!("{before}{noun}{after}")
        }
        None => seed.template_sentence.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairProvenance {
    Seed,
    Augmented,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PairRow {
    noun: String,
    verb: String,
    category: MetonymyCategory,
    provenance: PairProvenance,
}

/// Set of (noun, verb, category) triples. A seed triple stays `Seed` even if
/// augmentation produces it again.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairLexicon {
    pairs: BTreeMap<(String, String, MetonymyCategory), PairProvenance>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LexiconStats {
    pub pairs: usize,
    pub seed_pairs: usize,
    pub augmented_pairs: usize,
    pub nouns: usize,
    pub verbs: usize,
    pub noun_verb_pairs: usize,
}

impl PairLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, noun: &str, verb: &str, category: MetonymyCategory, provenance: PairProvenance) {
        let e = self
            .pairs
            .entry((noun.to_string(), verb.to_string(), category))
            .or_insert(provenance);
        *e = (*e).min(provenance);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, noun: &str, verb: &str, category: MetonymyCategory) -> bool {
        self.pairs.contains_key(&(noun.to_string(), verb.to_string(), category))
    }

    pub fn provenance(&self, noun: &str, verb: &str, category: MetonymyCategory) -> Option<PairProvenance> {
        self.pairs.get(&(noun.to_string(), verb.to_string(), category)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, MetonymyCategory, PairProvenance)> {
        self.pairs.iter().map(|((n, v, c), p)| (n.as_str(), v.as_str(), *c, *p))
    }

    pub fn stats(&self) -> LexiconStats {
        let nouns: BTreeSet<&str> = self.iter().map(|t| t.0).collect();
        let verbs: BTreeSet<&str> = self.iter().map(|t| t.1).collect();
        let nv: BTreeSet<(&str, &str)> = self.iter().map(|t| (t.0, t.1)).collect();
        let seed_pairs = self.iter().filter(|t| t.3 == PairProvenance::Seed).count();
        LexiconStats {
            pairs: self.len(),
            seed_pairs,
            augmented_pairs: self.len() - seed_pairs,
            nouns: nouns.len(),
            verbs: verbs.len(),
            noun_verb_pairs: nv.len(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for (noun, verb, category, provenance) in self.iter() {
            let row = PairRow {
                noun: noun.into(),
                verb: verb.into(),
                category,
                provenance,
            };
            s.push_str(&serde_json::to_string(&row).expect("serializable"));
            s.push('\n');
        }
        s
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, String> {
        let mut lex = PairLexicon::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: PairRow = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            lex.insert(&r.noun, &r.verb, r.category, r.provenance);
        }
        Ok(lex)
    }

    pub fn write(&self, path: &Path) -> Result<(), MiningError> {
        Ok(write_atomic(path, self.to_jsonl().as_bytes())?)
    }

    pub fn read(path: &Path) -> Result<Self, MiningError> {
        let text = std::fs::read_to_string(path).map_err(|e| MiningError::io(path, e))?;
        Self::parse_jsonl(&text).map_err(|message| MiningError::Corrupt {
            path: path.into(),
            message,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentOptions {
    /// Items requested per call.
    pub k: usize,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    #[serde(skip)]
    pub noun_prompt: String,
    #[serde(skip)]
    pub verb_prompt: String,
    /// Progress file rewritten after each seed; reruns skip finished seeds.
    pub checkpoint: Option<PathBuf>,
}

impl AugmentOptions {
    pub fn new(model: impl Into<String>) -> Self {
        AugmentOptions {
            k: 3,
            model: model.into(),
            temperature: 0.7,
            top_p: 0.9,
            max_tokens: 64,
            noun_prompt: NOUN_PROMPT.trim_end().to_string(),
            verb_prompt: VERB_PROMPT.trim_end().to_string(),
            checkpoint: None,
        }
    }

    fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages: vec![Message::user(prompt)],
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
            vote_index: 0,
        }
    }
}

/// Items parsed from one augmentation completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Augmented {
    pub items: Vec<String>,
    pub warning: Option<String>,
}

fn fill(template: &str, sentence: &str, noun: &str, verb: &str, k: usize) -> String {
    template
        .replace("{sentence}", sentence)
        .replace("{noun}", noun)
        .replace("{verb}", verb)
        .replace("{k}", &k.to_string())
}

/// Splits a list-style completion into at most `k` distinct lemmas, dropping `exclude`.
fn parse_items(text: &str, exclude: &str, k: usize) -> Augmented {
    let mut items: Vec<String> = Vec::new();
    let mut rejected = 0;
    for piece in SEPARATOR.split(text) {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let piece = piece.rsplit(':').next().unwrap_or(piece).trim();
        let piece = BULLET.replace(piece, "");
        let w = piece
            .trim_matches(|c: char| c.is_ascii_punctuation() && c != '-' || c.is_whitespace())
            .to_lowercase();
        if !LEMMA.is_match(&w) {
            rejected += 1;
            continue;
        }
        if w != exclude && !items.contains(&w) && items.len() < k {
            items.push(w);
        }
    }
    let warning = (items.len() < k).then(|| {
        format!(
            "wanted {k} items, kept {} ({rejected} unparsable pieces) from {:?}",
            items.len(),
            text.chars().take(120).collect::<String>()
        )
    });
    Augmented { items, warning }
}

fn ask(backend: &dyn ChatBackend, seed: &SeedPair, req: ChatRequest) -> Result<String, MiningError> {
    backend
        .complete(&req)
        .map(|r| r.text)
        .map_err(|source| MiningError::Backend {
            noun: seed.noun.clone(),
            verb: seed.verb.clone(),
            source,
        })
}

/// Nouns that could stand in for the seed noun in its template sentence.
pub fn augment_nouns(
    seed: &SeedPair,
    backend: &dyn ChatBackend,
    opts: &AugmentOptions,
) -> Result<Augmented, MiningError> {
    let prompt = fill(
        &opts.noun_prompt,
        &seed.template_sentence,
        &seed.noun,
        &seed.verb,
        opts.k,
    );
    let text = ask(backend, seed, opts.request(prompt))?;
    Ok(parse_items(&text, &seed.noun, opts.k))
}

/// Activity verbs for `noun` in `sentence`, other than `verb`.
pub fn augment_verbs(
    sentence: &str,
    noun: &str,
    seed: &SeedPair,
    backend: &dyn ChatBackend,
    opts: &AugmentOptions,
) -> Result<Augmented, MiningError> {
    let prompt = fill(&opts.verb_prompt, sentence, noun, &seed.verb, opts.k);
    let text = ask(backend, seed, opts.request(prompt))?;
    Ok(parse_items(&text, &seed.verb, opts.k))
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Checkpoint {
    done: Vec<String>,
    pairs: String,
}

fn load_checkpoint(path: &Path) -> Result<Option<Checkpoint>, MiningError> {
    match std::fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| MiningError::Corrupt {
            path: path.into(),
            message: e.to_string(),
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(MiningError::io(path, e)),
    }
}

/// Seed pairs plus, per seed, augmented nouns crossed with the seed verb and
/// every verb proposed for any of those nouns. With no backend the lexicon is
/// the seeds alone.
pub fn build_pair_lexicon(
    seeds: &[SeedPair],
    backend: Option<&dyn ChatBackend>,
    opts: &AugmentOptions,
) -> Result<PairLexicon, MiningError> {
    if seeds.is_empty() {
        return Err(MiningError::NoSeeds);
    }
    let mut lex = PairLexicon::new();
    let mut done: BTreeSet<String> = BTreeSet::new();
    if let Some(cp) = opts.checkpoint.as_deref().map(load_checkpoint).transpose()?.flatten() {
        lex = PairLexicon::parse_jsonl(&cp.pairs).map_err(|message| MiningError::Corrupt {
            path: opts.checkpoint.clone().unwrap_or_default(),
            message,
        })?;
        done = cp.done.into_iter().collect();
        log::info!("resuming augmentation: {} seeds already done", done.len());
    }
    for s in seeds {
        lex.insert(&s.noun, &s.verb, s.category, PairProvenance::Seed);
    }
    let Some(backend) = backend else {
        return Ok(lex);
    };
    for seed in seeds {
        if done.contains(&seed.key()) {
            continue;
        }
        let nouns = augment_nouns(seed, backend, opts)?;
        if let Some(w) = &nouns.warning {
            log::warn!("<{}, {}> nouns: {w}", seed.noun, seed.verb);
        }
        let mut verbs: BTreeSet<String> = BTreeSet::from([seed.verb.clone()]);
        for noun in &nouns.items {
            let sentence = substitute_noun(seed, noun);
            let got = augment_verbs(&sentence, noun, seed, backend, opts)?;
            if let Some(w) = &got.warning {
                log::warn!("<{}, {}> verbs for {noun}: {w}", seed.noun, seed.verb);
            }
            verbs.extend(got.items);
        }
        for noun in &nouns.items {
            for verb in &verbs {
                lex.insert(noun, verb, seed.category, PairProvenance::Augmented);
            }
        }
        done.insert(seed.key());
        if let Some(path) = &opts.checkpoint {
            let cp = Checkpoint {
                done: done.iter().cloned().collect(),
                pairs: lex.to_jsonl(),
            };
            write_atomic(path, serde_json::to_string(&cp).expect("serializable").as_bytes())?;
        }
    }
    Ok(lex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{FnBackend, LlmError, LlmErrorKind, ScriptRule, ScriptedBackend};
    use MetonymyCategory::Container;

    fn glass() -> SeedPair {
        SeedPair::new("glass", "sip", "the man sips the glass", Container).unwrap()
    }

    fn script() -> ScriptedBackend {
        ScriptedBackend::new(vec![
            ScriptRule::new("other nouns", "mug, cup and tankard"),
            ScriptRule::new("the man sips the mug", "taste, drink, gulp"),
            ScriptRule::new("the man sips the cup", "1. drink\n2. sip\n3. fill\n"),
            ScriptRule::new("the man sips the tankard", "Raise, drink, quaff."),
        ])
    }

    #[test]
    fn nouns_and_verbs() {
        let opts = AugmentOptions::new("m");
        let b = script();
        assert_eq!(
            augment_nouns(&glass(), &b, &opts).unwrap().items,
            ["mug", "cup", "tankard"]
        );
        let v = augment_verbs("the man sips the mug", "mug", &glass(), &b, &opts).unwrap();
        assert_eq!(v.items, ["taste", "drink", "gulp"]);
        assert_eq!(v.warning, None);
    }

    #[test]
    fn dedup_and_warnings() {
        let a = parse_items("glass, glass, glass", "glass", 3);
        assert!(a.items.is_empty());
        assert!(a.warning.is_some());
        let a = parse_items("drink, sip, gulp", "sip", 3);
        assert_eq!(a.items, ["drink", "gulp"]);
        let a = parse_items("", "sip", 3);
        assert!(a.items.is_empty() && a.warning.is_some());
        let a = parse_items("Sure! Here you go: beaker", "sip", 3);
        assert_eq!(a.items, ["beaker"]);
    }

    #[test]
    fn backend_error_names_seed() {
        let b = FnBackend(|r: &ChatRequest| Err(LlmError::new(r, LlmErrorKind::Timeout)));
        let e = augment_nouns(&glass(), &b, &AugmentOptions::new("m")).unwrap_err();
        assert!(e.to_string().contains("<glass, sip>"), "{e}");
    }

    #[test]
    fn hand_enumerated_lexicon() {
        // nouns: mug, cup, tankard
        // verbs: sip (seed) + taste drink gulp (mug) + drink fill (cup, sip dropped)
        //        + raise drink quaff (tankard) = {sip taste drink gulp fill raise quaff}
        // 3 nouns x 7 verbs = 21 augmented, plus the seed pair: 22.
        let lex = build_pair_lexicon(&[glass()], Some(&script()), &AugmentOptions::new("m")).unwrap();
        let st = lex.stats();
        assert_eq!((st.pairs, st.seed_pairs, st.augmented_pairs), (22, 1, 21));
        assert_eq!((st.nouns, st.verbs), (4, 7));
        assert_eq!(lex.provenance("glass", "sip", Container), Some(PairProvenance::Seed));
        assert_eq!(
            lex.provenance("tankard", "fill", Container),
            Some(PairProvenance::Augmented)
        );
        assert!(!lex.contains("glass", "quaff", Container));
    }

    #[test]
    fn seeds_only_without_backend() {
        let seeds = vec![
            glass(),
            SeedPair::new("kettle", "boil", "she boiled the kettle", Container).unwrap(),
        ];
        let lex = build_pair_lexicon(&seeds, None, &AugmentOptions::new("m")).unwrap();
        assert_eq!(lex.len(), 2);
        assert!(matches!(
            build_pair_lexicon(&[], None, &AugmentOptions::new("m")),
            Err(MiningError::NoSeeds)
        ));
    }

    #[test]
    fn checkpoint_resume_skips_done_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let mut opts = AugmentOptions::new("m");
        opts.checkpoint = Some(dir.path().join("cp.json"));
        let first = build_pair_lexicon(&[glass()], Some(&script()), &opts).unwrap();
        let refuse = FnBackend(|r: &ChatRequest| Err(LlmError::new(r, LlmErrorKind::ReplayMiss)));
        let again = build_pair_lexicon(&[glass()], Some(&refuse), &opts).unwrap();
        assert_eq!(first, again);
        let text = first.to_jsonl();
        assert_eq!(PairLexicon::parse_jsonl(&text).unwrap(), first);
    }

    #[test]
    fn seed_validation() {
        assert!(SeedPair::new("Glass", "sip", "the glass", Container).is_err());
        assert!(SeedPair::new("glass", "sip", "the glasses", Container).is_err());
        assert_eq!(substitute_noun(&glass(), "mug"), "the man sips the mug");
    }
}
