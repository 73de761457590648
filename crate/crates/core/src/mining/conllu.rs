//! Minimal CoNLL-U reader: word lines only, multiword ranges and empty nodes dropped.

use std::io::BufRead;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    /// 1-based position within the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub space_after: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub sent_id: Option<String>,
    pub text: String,
    pub words: Vec<Word>,
    /// Line of the first line of the block.
    pub line: usize,
}

#[derive(Debug)]
pub enum ConlluError {
    Io(std::io::Error),
    Malformed { line: usize, message: String },
}

impl std::fmt::Display for ConlluError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConlluError::Io(e) => write!(f, "{e}"),
            ConlluError::Malformed { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

/// Iterates over the sentence blocks of a CoNLL-U stream.
///
/// A malformed block yields one `Malformed` item and reading resumes at the next
/// block. I/O errors end the iteration.
pub struct ConlluReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    done: bool,
}

impl<R: BufRead> ConlluReader<R> {
    pub fn new(reader: R) -> Self {
        ConlluReader {
            lines: reader.lines(),
            line_no: 0,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for ConlluReader<R> {
    type Item = Result<Sentence, ConlluError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut block: Vec<(usize, String)> = Vec::new();
        loop {
            match self.lines.next() {
                None => {
                    self.done = true;
                    break;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(ConlluError::Io(e)));
                }
                Some(Ok(l)) => {
                    self.line_no += 1;
                    let l = l.trim_end_matches('\r').to_string();
                    if l.trim().is_empty() {
                        if block.is_empty() {
                            continue;
                        }
                        break;
                    }
                    block.push((self.line_no, l));
                }
            }
        }
        if block.is_empty() {
            return None;
        }
        Some(parse_block(&block))
    }
}

fn parse_block(block: &[(usize, String)]) -> Result<Sentence, ConlluError> {
    let start = block[0].0;
    let mut sent_id = None;
    let mut text = None;
    let mut words: Vec<Word> = Vec::new();
    for (line, l) in block {
        let bad = |message: String| ConlluError::Malformed { line: *line, message };
        if let Some(comment) = l.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                match k.trim() {
                    "sent_id" => sent_id = Some(v.trim().to_string()),
                    "text" => text = Some(v.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 10 {
            return Err(bad(format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| bad(format!("bad ID {:?}", cols[0])))?;
        if id != words.len() + 1 {
            return Err(bad(format!("ID {id} out of sequence")));
        }
        let head: usize = cols[6].parse().map_err(|_| bad(format!("bad HEAD {:?}", cols[6])))?;
        words.push(Word {
            id,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
            space_after: !cols[9].split('|').any(|m| m == "SpaceAfter=No"),
        });
    }
    if words.is_empty() {
        return Err(ConlluError::Malformed {
            line: start,
            message: "block has no word lines".into(),
        });
    }
    let n = words.len();
    if let Some(w) = words.iter().find(|w| w.head > n || w.head == w.id) {
        return Err(ConlluError::Malformed {
            line: start,
            message: format!("word {} has invalid HEAD {}", w.id, w.head),
        });
    }
    let text = text.unwrap_or_else(|| {
        let mut s = String::new();
        for w in &words {
            s.push_str(&w.form);
            if w.space_after {
                s.push(' ');
            }
        }
        s.trim_end().to_string()
    });
    Ok(Sentence {
        sent_id,
        text,
        words,
        line: start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIPS: &str = "# sent_id = s1\n# text = The man sips the glass.\n\
1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n\
2\tman\tman\tNOUN\t_\t_\t3\tnsubj\t_\t_\n\
3\tsips\tsip\tVERB\t_\t_\t0\troot\t_\t_\n\
4\tthe\tthe\tDET\t_\t_\t5\tdet\t_\t_\n\
5\tglass\tglass\tNOUN\t_\t_\t3\tobj\t_\tSpaceAfter=No\n\
6\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n\n";

    #[test]
    fn reads_block() {
        let s: Vec<_> = ConlluReader::new(SIPS.as_bytes()).collect();
        let s = s.into_iter().next().unwrap().unwrap();
        assert_eq!(s.sent_id.as_deref(), Some("s1"));
        assert_eq!(s.text, "The man sips the glass.");
        assert_eq!(s.words[4].head, 3);
        assert_eq!(s.words[4].deprel, "obj");
    }

    #[test]
    fn reconstructs_text_and_skips_ranges() {
        let src = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\tSpaceAfter=No\n\
2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n\
2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n\
3\tdrink\tdrink\tVERB\t_\t_\t0\troot\t_\t_\n";
        let s = ConlluReader::new(src.as_bytes()).next().unwrap().unwrap();
        assert_eq!(s.words.len(), 3);
        assert_eq!(s.text, "don't drink");
    }

    #[test]
    fn malformed_block_is_reported_and_skipped() {
        let bad = "1\tbroken\tline\n\n";
        let src = format!("{bad}{SIPS}2\tx\tx\tX\t_\t_\t0\troot\t_\t_\n");
        let out: Vec<_> = ConlluReader::new(src.as_bytes()).collect();
        assert_eq!(out.len(), 3);
        assert!(matches!(out[0], Err(ConlluError::Malformed { line: 1, .. })));
        assert!(out[1].is_ok());
        assert!(matches!(out[2], Err(ConlluError::Malformed { line: 12, .. })));
    }

    #[test]
    fn bad_head() {
        let src = "1\ta\ta\tX\t_\t_\t5\tdep\t_\t_\n";
        assert!(matches!(
            ConlluReader::new(src.as_bytes()).next(),
            Some(Err(ConlluError::Malformed { .. }))
        ));
    }
}
