//! Regular English inflection rules.
//!
//! These cover the productive patterns only; anything irregular is listed in
//! the lexicon and overrides the rule output.

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn chars(word: &str) -> Vec<char> {
    word.chars().collect()
}

/// Number of vowel groups, treating a non-initial `y` as a vowel and
/// ignoring a silent final `e`.
pub fn syllable_count(word: &str) -> usize {
    let cs = chars(word);
    let mut count = 0;
    let mut prev_vowel = false;
    for (i, &c) in cs.iter().enumerate() {
        let vowel = is_vowel(c) || (c == 'y' && i > 0);
        if vowel && !prev_vowel {
            count += 1;
        }
        prev_vowel = vowel;
    }
    if count > 1 && word.ends_with('e') && !word.ends_with("le") && !word.ends_with("ee") {
        count -= 1;
    }
    count.max(1)
}

/// consonant-vowel-consonant ending, final consonant not w/x/y
fn ends_cvc(word: &str) -> bool {
    let cs = chars(word);
    if cs.len() < 3 {
        return false;
    }
    let (a, b, c) = (cs[cs.len() - 3], cs[cs.len() - 2], cs[cs.len() - 1]);
    !is_vowel(a) && is_vowel(b) && !is_vowel(c) && !matches!(c, 'w' | 'x' | 'y')
}

fn ends_consonant_y(word: &str) -> bool {
    let cs = chars(word);
    cs.len() >= 2 && cs[cs.len() - 1] == 'y' && !is_vowel(cs[cs.len() - 2])
}

fn sibilant_ending(word: &str) -> bool {
    ["s", "x", "z", "ch", "sh"]
        .iter()
        .any(|s| word.ends_with(s))
}

/// Whether the final consonant doubles before a vowel suffix.
///
/// Monosyllabic CVC words double automatically (stop, plan); polysyllabic
/// words only when the lexicon says so (occur, refer), since that depends on
/// stress.
pub fn doubles_final(word: &str, lexicon_flag: bool) -> bool {
    lexicon_flag || (syllable_count(word) == 1 && ends_cvc(word))
}

fn with_doubled(word: &str, suffix: &str) -> String {
    let last = word.chars().last().unwrap_or_default();
    format!("{word}{last}{suffix}")
}

fn strip_last(word: &str) -> &str {
    let end = word.char_indices().last().map(|(i, _)| i).unwrap_or(0);
    &word[..end]
}

pub fn noun_plural(word: &str) -> String {
    if sibilant_ending(word) {
        format!("{word}es")
    } else if ends_consonant_y(word) {
        format!("{}ies", strip_last(word))
    } else {
        format!("{word}s")
    }
}

pub fn verb_third_person(word: &str) -> String {
    let cs = chars(word);
    let consonant_o = cs.len() >= 2 && cs[cs.len() - 1] == 'o' && !is_vowel(cs[cs.len() - 2]);
    if consonant_o {
        format!("{word}es")
    } else {
        noun_plural(word)
    }
}

pub fn verb_past(word: &str, double: bool) -> String {
    if word.ends_with('e') {
        format!("{word}d")
    } else if ends_consonant_y(word) {
        format!("{}ied", strip_last(word))
    } else if doubles_final(word, double) {
        with_doubled(word, "ed")
    } else {
        format!("{word}ed")
    }
}

pub fn verb_gerund(word: &str, double: bool) -> String {
    if let Some(stem) = word.strip_suffix("ie") {
        format!("{stem}ying")
    } else if word.ends_with('e')
        && !word.ends_with("ee")
        && !word.ends_with("ye")
        && !word.ends_with("oe")
        && word.len() > 2
    {
        format!("{}ing", strip_last(word))
    } else if doubles_final(word, double) {
        with_doubled(word, "ing")
    } else {
        format!("{word}ing")
    }
}

fn graded(word: &str, suffix: &str) -> String {
    if word.ends_with('e') {
        format!("{word}{}", &suffix[1..])
    } else if ends_consonant_y(word) {
        format!("{}i{suffix}", strip_last(word))
    } else if doubles_final(word, false) {
        with_doubled(word, suffix)
    } else {
        format!("{word}{suffix}")
    }
}

pub fn comparative(word: &str) -> String {
    graded(word, "er")
}

pub fn superlative(word: &str) -> String {
    graded(word, "est")
}

/// Latin plural that has a standard English alternative (`formulae`,
/// `foci`); these are never emitted.
pub fn is_latin_plural(headword: &str, plural: &str) -> bool {
    (headword.ends_with('a') && (plural.ends_with("ae") || plural.ends_with('æ')))
        || (headword.ends_with("us") && plural.ends_with('i'))
}

/// Candidate base forms for an inflected surface, most specific first.
/// Used by the rule lemmatizer for words outside the lexicon.
pub fn candidate_bases(surface: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |s: String| {
        if !s.is_empty() && !out.contains(&s) {
            out.push(s);
        }
    };
    push(surface.to_string());
    for (suffix, replacement) in [
        ("ies", "y"),
        ("ied", "y"),
        ("ying", "ie"),
        ("iest", "y"),
        ("ier", "y"),
        ("es", ""),
        ("s", ""),
        ("ed", ""),
        ("ed", "e"),
        ("d", ""),
        ("ing", ""),
        ("ing", "e"),
        ("est", ""),
        ("est", "e"),
        ("er", ""),
        ("er", "e"),
    ] {
        if let Some(stem) = surface.strip_suffix(suffix) {
            push(format!("{stem}{replacement}"));
            // undo consonant doubling: stopped -> stop
            let cs: Vec<char> = stem.chars().collect();
            if replacement.is_empty() && cs.len() >= 2 && cs[cs.len() - 1] == cs[cs.len() - 2] {
                push(strip_last(stem).to_string());
            }
        }
    }
    out
}
