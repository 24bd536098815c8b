//! Tokenization and string comparison shared across the pipeline.

/// A token of some source text, with byte offsets into that text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '.' | ',')
}

/// Splits text into word tokens.
///
/// A token is a maximal run of alphanumeric characters. Joining
/// punctuation is kept inside a token only when it sits between two
/// alphanumerics, so dates like `1978-04-09` stay whole while sentence
/// punctuation is dropped.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &(offset, c)) in chars.iter().enumerate() {
        let inside = if c.is_alphanumeric() {
            true
        } else if is_joiner(c) && start.is_some() {
            chars.get(i + 1).is_some_and(|&(_, n)| n.is_alphanumeric())
        } else {
            false
        };
        match (inside, start) {
            (true, None) => start = Some(offset),
            (false, Some(s)) => {
                tokens.push(Token {
                    text: &text[s..offset],
                    start: s,
                    end: offset,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &text[s..],
            start: s,
            end: text.len(),
        });
    }
    tokens
}

/// Lowercased word tokens.
pub fn words(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| t.text.to_lowercase()).collect()
}

/// Canonical comparison form: lowercase words joined by single spaces.
pub fn normalize(text: &str) -> String {
    words(text).join(" ")
}

/// The local name of an IRI: whatever follows the last `/` or `#`.
pub fn local_name(iri: &str) -> &str {
    let iri = iri.trim_start_matches('<').trim_end_matches('>');
    match iri.rfind(['/', '#']) {
        Some(i) => &iri[i + 1..],
        None => iri,
    }
}

/// Splits an identifier such as `dateOfBirth` or `Rashid_Behbudov_State`
/// into lowercase words. Boundaries are non-alphanumerics, lower-to-upper
/// case changes, the end of an acronym (`XMLHttp` → `xml http`) and
/// letter/digit changes.
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = ident.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some(&prev) = current.chars().last().as_ref() {
            let next = chars.get(i + 1).copied();
            let boundary = (prev.is_lowercase() && c.is_uppercase())
                || (prev.is_uppercase()
                    && c.is_uppercase()
                    && next.is_some_and(|n| n.is_lowercase()))
                || (prev.is_alphabetic() && c.is_numeric())
                || (prev.is_numeric() && c.is_alphabetic());
            if boundary {
                out.push(std::mem::take(&mut current));
            }
        }
        current.push(c);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out.into_iter().map(|w| w.to_lowercase()).collect()
}

/// Label derived from an IRI local name, e.g.
/// `http://x/Rashid_Behbudov_State_Song_Theatre` → `rashid behbudov state song theatre`.
pub fn label_from_iri(iri: &str) -> String {
    split_identifier(local_name(iri)).join(" ")
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Crude English singular form used for gazetteer and lexicon lookups.
pub fn singular(word: &str) -> String {
    if word.len() > 4 && word.ends_with("ies") {
        format!("{}y", &word[..word.len() - 3])
    } else if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        word[..word.len() - 1].to_string()
    } else {
        word.to_string()
    }
}

pub const WH_WORDS: &[&str] = &["who", "whom", "whose", "what", "which", "where", "when", "how", "why"];

pub const ARTICLES: &[&str] = &["a", "an", "the"];

pub const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "has", "have",
    "had", "can", "could", "will", "would", "shall", "should", "may", "might", "must",
];

pub const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "as", "about", "after",
    "before", "during", "under", "over", "between", "through", "since", "within", "near",
];

pub const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor", "both", "either", "also"];

pub const PRONOUNS: &[&str] = &[
    "i", "me", "you", "he", "she", "it", "we", "they", "him", "her", "them", "his", "its", "their",
    "this", "that", "these", "those", "there",
];

/// Sentence-initial verbs of imperative questions ("Give me ...").
pub const IMPERATIVES: &[&str] = &["give", "list", "name", "show", "tell", "find", "count"];

/// Particles allowed inside a capitalized name ("Benicio del Toro").
pub const NAME_PARTICLES: &[&str] = &["of", "the", "de", "del", "der", "da", "di", "von", "van", "le", "la"];

pub fn is_function_word(w: &str) -> bool {
    let w = w.to_lowercase();
    let w = w.as_str();
    WH_WORDS.contains(&w)
        || ARTICLES.contains(&w)
        || AUXILIARIES.contains(&w)
        || PREPOSITIONS.contains(&w)
        || CONJUNCTIONS.contains(&w)
        || PRONOUNS.contains(&w)
}

fn starts_upper(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

/// Token index ranges `[start, end)` of maximal capitalized runs.
///
/// A sentence-initial token is skipped when it is a function word or an
/// imperative verb, which are capitalized only by position. Lowercase name
/// particles may join two capitalized tokens.
pub fn capitalized_runs(tokens: &[Token<'_>]) -> Vec<(usize, usize)> {
    let is_cap = |i: usize| {
        let w = tokens[i].text;
        if !starts_upper(w) {
            return false;
        }
        if i == 0 {
            let lw = w.to_lowercase();
            return !(is_function_word(&lw) || IMPERATIVES.contains(&lw.as_str()));
        }
        true
    };
    let mut runs = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !is_cap(i) {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        loop {
            if end < tokens.len() && is_cap(end) {
                end += 1;
                continue;
            }
            // particle bridge: Cap particle+ Cap
            let mut j = end;
            while j < tokens.len() && NAME_PARTICLES.contains(&tokens[j].text) {
                j += 1;
            }
            if j > end && j < tokens.len() && is_cap(j) {
                end = j + 1;
                continue;
            }
            break;
        }
        runs.push((start, end));
        i = end;
    }
    runs
}
