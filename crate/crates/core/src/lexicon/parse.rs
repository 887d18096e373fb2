use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use super::{
    AdjectiveEntry, AssociationTable, Category, EmbeddingTable, Lexicon, LexiconError,
    LexiconParts, NounEntry, Preposition, VerbEntry, VerbKind,
};

/// Locations of the seven lexicon files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconPaths {
    pub nouns: PathBuf,
    pub verbs: PathBuf,
    pub adjectives: PathBuf,
    pub function_words: PathBuf,
    pub associations: PathBuf,
    pub embeddings: PathBuf,
    pub frequency: PathBuf,
}

impl LexiconPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        Self {
            nouns: d.join("nouns.tsv"),
            verbs: d.join("verbs.tsv"),
            adjectives: d.join("adjectives.tsv"),
            function_words: d.join("function_words.tsv"),
            associations: d.join("associations.tsv"),
            embeddings: d.join("embeddings.txt"),
            frequency: d.join("frequency.txt"),
        }
    }

    pub fn all(&self) -> [&Path; 7] {
        [
            &self.nouns,
            &self.verbs,
            &self.adjectives,
            &self.function_words,
            &self.associations,
            &self.embeddings,
            &self.frequency,
        ]
    }
}

fn read(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            LexiconError::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            LexiconError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

struct Rows<'a> {
    file: String,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Rows<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Self {
            file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            lines: text.lines().enumerate(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> LexiconError {
        LexiconError::Malformed {
            file: self.file.clone(),
            line,
            message: message.into(),
        }
    }
}

impl<'a> Iterator for Rows<'a> {
    /// (1-based line number, tab-separated columns)
    type Item = (usize, Vec<&'a str>);

    fn next(&mut self) -> Option<Self::Item> {
        for (i, line) in self.lines.by_ref() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            return Some((i + 1, line.split('\t').map(str::trim).collect()));
        }
        None
    }
}

fn lemma<'a>(rows: &Rows, line: usize, s: &'a str) -> Result<&'a str, LexiconError> {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c.is_uppercase()) {
        return Err(rows.err(line, format!("invalid lemma `{s}`")));
    }
    Ok(s)
}

fn annotations<'a>(
    rows: &Rows,
    line: usize,
    cols: &[&'a str],
    allowed: &[&str],
) -> Result<HashMap<&'a str, &'a str>, LexiconError> {
    let mut out = HashMap::new();
    for col in cols {
        let (k, v) = col
            .split_once('=')
            .ok_or_else(|| rows.err(line, format!("expected key=value, found `{col}`")))?;
        if !allowed.contains(&k) {
            return Err(rows.err(line, format!("unknown annotation `{k}`")));
        }
        if out.insert(k, v).is_some() {
            return Err(rows.err(line, format!("repeated annotation `{k}`")));
        }
    }
    Ok(out)
}

fn categories(rows: &Rows, line: usize, v: Option<&&str>) -> Result<BTreeSet<Category>, LexiconError> {
    let Some(v) = v else {
        return Ok(BTreeSet::new());
    };
    v.split(';')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Category>().map_err(|m| rows.err(line, m)))
        .collect()
}

fn parse_frequency(path: &Path) -> Result<HashMap<String, u32>, LexiconError> {
    let text = read(path)?;
    let mut ranks = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let w = line.trim();
        if !w.is_empty() {
            ranks.entry(w.to_string()).or_insert(i as u32 + 1);
        }
    }
    Ok(ranks)
}

fn parse_nouns(path: &Path, ranks: &HashMap<String, u32>) -> Result<Vec<NounEntry>, LexiconError> {
    let text = read(path)?;
    let rows = Rows::new(path, &text);
    let mut out = Vec::new();
    for (line, cols) in Rows::new(path, &text) {
        if cols.len() < 2 || cols[1] != "noun" {
            return Err(rows.err(line, "expected `lemma<TAB>noun<TAB>annotations`"));
        }
        let lemma = lemma(&rows, line, cols[0])?;
        let ann = annotations(&rows, line, &cols[2..], &["countable", "categories"])?;
        let countable = match ann.get("countable") {
            Some(&"yes") => true,
            Some(&"no") => false,
            Some(other) => return Err(rows.err(line, format!("countable must be yes|no, found `{other}`"))),
            None => return Err(rows.err(line, format!("noun `{lemma}` lacks `countable`"))),
        };
        out.push(NounEntry {
            lemma: lemma.to_string(),
            categories: categories(&rows, line, ann.get("categories"))?,
            countable,
            frequency_rank: ranks.get(lemma).copied(),
        });
    }
    Ok(out)
}

fn parse_verbs(path: &Path, ranks: &HashMap<String, u32>) -> Result<Vec<VerbEntry>, LexiconError> {
    let text = read(path)?;
    let rows = Rows::new(path, &text);
    let mut out = Vec::new();
    for (line, cols) in Rows::new(path, &text) {
        if cols.len() < 2 {
            return Err(rows.err(line, "expected `lemma<TAB>kind<TAB>annotations`"));
        }
        let lemma = lemma(&rows, line, cols[0])?;
        let kind = match cols[1] {
            "transitive" => VerbKind::Transitive,
            "ditransitive" => VerbKind::Ditransitive,
            "intransitive_padding" => VerbKind::IntransitivePadding,
            other => return Err(rows.err(line, format!("unknown verb kind `{other}`"))),
        };
        let ann = annotations(
            &rows,
            line,
            &cols[2..],
            &["past", "participle", "third", "prep", "agent", "patient", "recipient"],
        )?;
        let po_preposition = match ann.get("prep") {
            None => None,
            Some(&"to") => Some(Preposition::To),
            Some(&"for") => Some(Preposition::For),
            Some(other) => return Err(rows.err(line, format!("prep must be to|for, found `{other}`"))),
        };
        let form = |k: &str| ann.get(k).map(|s| s.to_string()).unwrap_or_default();
        out.push(VerbEntry {
            lemma: lemma.to_string(),
            kind,
            past: form("past"),
            past_participle: ann.get("participle").map(|s| s.to_string()),
            third_singular: form("third"),
            po_preposition,
            agent_categories: categories(&rows, line, ann.get("agent"))?,
            patient_categories: categories(&rows, line, ann.get("patient"))?,
            recipient_categories: categories(&rows, line, ann.get("recipient"))?,
            frequency_rank: ranks.get(lemma).copied(),
        });
    }
    Ok(out)
}

fn parse_adjectives(
    path: &Path,
    ranks: &HashMap<String, u32>,
) -> Result<Vec<AdjectiveEntry>, LexiconError> {
    let text = read(path)?;
    let rows = Rows::new(path, &text);
    let mut out = Vec::new();
    for (line, cols) in Rows::new(path, &text) {
        if cols.len() < 2 || cols[1] != "adjective" {
            return Err(rows.err(line, "expected `lemma<TAB>adjective<TAB>annotations`"));
        }
        let lemma = lemma(&rows, line, cols[0])?;
        let ann = annotations(&rows, line, &cols[2..], &["compatible"])?;
        out.push(AdjectiveEntry {
            lemma: lemma.to_string(),
            compatible_categories: categories(&rows, line, ann.get("compatible"))?,
            frequency_rank: ranks.get(lemma).copied(),
        });
    }
    Ok(out)
}

fn parse_function_words(path: &Path) -> Result<(Vec<String>, Vec<String>), LexiconError> {
    let text = read(path)?;
    let rows = Rows::new(path, &text);
    let (mut pronouns, mut auxiliaries) = (Vec::new(), Vec::new());
    for (line, cols) in Rows::new(path, &text) {
        if cols.len() != 2 {
            return Err(rows.err(line, "expected `lemma<TAB>pronoun|auxiliary`"));
        }
        let w = lemma(&rows, line, cols[0])?.to_string();
        match cols[1] {
            "pronoun" => pronouns.push(w),
            "auxiliary" => auxiliaries.push(w),
            other => return Err(rows.err(line, format!("unknown function-word class `{other}`"))),
        }
    }
    Ok((pronouns, auxiliaries))
}

fn parse_associations(path: &Path) -> Result<AssociationTable, LexiconError> {
    let text = read(path)?;
    let rows = Rows::new(path, &text);
    let mut table = AssociationTable::new();
    for (line, cols) in Rows::new(path, &text) {
        if cols.len() != 3 {
            return Err(rows.err(line, "expected `cue<TAB>target<TAB>strength`"));
        }
        let strength: f64 = cols[2]
            .parse()
            .map_err(|_| rows.err(line, format!("invalid strength `{}`", cols[2])))?;
        if !(0.0..=1.0).contains(&strength) {
            return Err(rows.err(line, format!("strength {strength} outside [0, 1]")));
        }
        table.insert(cols[0], cols[1], strength);
    }
    Ok(table)
}

fn parse_embeddings(path: &Path) -> Result<EmbeddingTable, LexiconError> {
    let text = read(path)?;
    let rows = Rows::new(path, &text);
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| rows.err(1, "missing header"))?;
    let header: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| rows.err(1, "header must be `count dimension`"))?;
    let [count, dim] = header[..] else {
        return Err(rows.err(1, "header must be `count dimension`"));
    };
    if dim == 0 {
        return Err(rows.err(1, "dimension must be positive"));
    }
    let mut table = EmbeddingTable::new(dim);
    for (i, l) in lines {
        let mut parts = l.split_whitespace();
        let word = parts.next().unwrap_or_default();
        let v: Vec<f64> = parts
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| rows.err(i + 1, "non-numeric vector component"))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(rows.err(i + 1, "non-finite vector component"));
        }
        table.insert(word, v).map_err(|m| rows.err(i + 1, m))?;
    }
    if table.len() != count {
        return Err(rows.err(1, format!("header declares {count} vectors, found {}", table.len())));
    }
    Ok(table)
}

pub(super) fn load(paths: &LexiconPaths, frequency_cutoff: u32) -> Result<Lexicon, LexiconError> {
    for p in paths.all() {
        if !p.exists() {
            return Err(LexiconError::MissingFile { path: p.to_path_buf() });
        }
    }
    let ranks = parse_frequency(&paths.frequency)?;
    let (pronouns, auxiliaries) = parse_function_words(&paths.function_words)?;
    Lexicon::from_parts(LexiconParts {
        nouns: parse_nouns(&paths.nouns, &ranks)?,
        verbs: parse_verbs(&paths.verbs, &ranks)?,
        adjectives: parse_adjectives(&paths.adjectives, &ranks)?,
        pronouns,
        auxiliaries,
        associations: parse_associations(&paths.associations)?,
        embeddings: parse_embeddings(&paths.embeddings)?,
        frequency_cutoff,
    })
}
