//! Rule-based sentence segmentation.

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "e.g", "i.e", "inc", "ltd", "co", "corp", "no",
    "fig", "gen", "col", "lt", "sgt", "capt", "rev", "hon", "u.s", "u.k", "approx", "dept", "est", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}'];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// True when the word ending just before a period is a known abbreviation.
fn ends_with_abbreviation(before_period: &str) -> bool {
    let word = before_period
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() {
        return false;
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Splits prose into sentences on terminal punctuation.
///
/// A boundary is a run of `.`, `?` or `!` (plus any closing quotes or
/// brackets) followed by whitespace, unless the run is a single period after
/// a known abbreviation or the next word starts with a lowercase letter.
/// Sentences are trimmed slices of the input, so joining them with single
/// spaces reproduces the input up to whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && is_terminal(chars[i].1) {
            i += 1;
        }
        let single_period = c == '.' && i - run_start == 1;
        while i < chars.len() && CLOSERS.contains(&chars[i].1) {
            i += 1;
        }
        let end_byte = chars.get(i).map_or(text.len(), |&(b, _)| b);
        let at_end = i == chars.len();
        if !at_end && !chars[i].1.is_whitespace() {
            continue;
        }
        if single_period && ends_with_abbreviation(&text[start..pos]) {
            continue;
        }
        if !at_end {
            let next = chars[i..].iter().map(|&(_, ch)| ch).find(|ch| !ch.is_whitespace());
            if next.is_some_and(|ch| ch.is_lowercase()) {
                continue;
            }
        }
        push_trimmed(&mut out, &text[start..end_byte]);
        start = end_byte;
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}
