//! Line-oriented template grammar for single atomic steps.
//!
//! ```text
//! Add the sound of <label> [at <dir>] [(with|by) <n> dB]
//! Remove the sound of <label> [at [the] <dir>]
//! Extract the sound of <label> [at [the] <dir>]
//! Turn (up|down) the sound of <label> by <n> dB
//! Change the sound of <label> [from <dir>] to <dir>
//! ```
//!
//! Keywords are case-insensitive. Optional clauses are recognized at the end
//! of the line, and everything between `the sound of` and the first clause is
//! the label, kept verbatim. A label that itself ends in a clause-shaped
//! suffix (say `... at left`) is therefore read as that clause.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::AtomicStep;
use crate::spatial::{Direction, GainDb};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the parsed text.
    pub position: usize,
    pub expected: String,
    pub found: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: expected {}, found ", self.position, self.expected)?;
        match &self.found {
            Some(tok) => write!(f, "{tok:?}"),
            None => f.write_str("end of input"),
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, Copy)]
struct Word<'a> {
    start: usize,
    end: usize,
    text: &'a str,
}

impl Word<'_> {
    fn is(&self, keyword: &str) -> bool {
        self.text.eq_ignore_ascii_case(keyword)
    }
}

fn split_words(text: &str) -> Vec<Word<'_>> {
    let mut words = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                words.push(Word { start: s, end: i, text: &text[s..i] });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        words.push(Word { start: s, end: text.len(), text: &text[s..] });
    }
    words
}

fn error_at(words: &[Word<'_>], index: usize, text_len: usize, expected: impl Into<String>) -> ParseError {
    match words.get(index) {
        Some(w) => ParseError { position: w.start, expected: expected.into(), found: Some(w.text.to_string()) },
        None => ParseError { position: text_len, expected: expected.into(), found: None },
    }
}

/// Plain decimal: optional minus, digits, optional fraction.
pub(super) fn parse_number(s: &str) -> Option<f64> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let all_digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int) || frac.is_some_and(|f| !all_digits(f)) {
        return None;
    }
    s.parse().ok()
}

pub(super) fn strip_db_suffix(s: &str) -> Option<&str> {
    let n = s.len();
    (n > 2 && s.is_char_boundary(n - 2) && s[n - 2..].eq_ignore_ascii_case("db")).then(|| &s[..n - 2])
}

/// `<kw> <n> dB` or `<kw> <n>dB` ending at `end`; returns value and word count.
fn gain_clause(words: &[Word<'_>], end: usize, keywords: &[&str]) -> Option<(f64, usize)> {
    if end >= 3 && words[end - 1].is("db") && keywords.iter().any(|k| words[end - 3].is(k)) {
        if let Some(v) = parse_number(words[end - 2].text) {
            return Some((v, 3));
        }
    }
    if end >= 2 && keywords.iter().any(|k| words[end - 2].is(k)) {
        if let Some(v) = strip_db_suffix(words[end - 1].text).and_then(parse_number) {
            return Some((v, 2));
        }
    }
    None
}

/// `<kw> [the] <dir>` ending at `end`.
fn direction_clause(words: &[Word<'_>], end: usize, keyword: &str, allow_article: bool) -> Option<(Direction, usize)> {
    let dir = words.get(end.checked_sub(1)?)?.text.parse::<Direction>().ok()?;
    if end >= 2 && words[end - 2].is(keyword) {
        return Some((dir, 2));
    }
    if allow_article && end >= 3 && words[end - 2].is("the") && words[end - 3].is(keyword) {
        return Some((dir, 3));
    }
    None
}

pub fn parse_step(text: &str) -> Result<AtomicStep, ParseError> {
    let words = split_words(text);
    let len = text.len();
    let head = words
        .first()
        .ok_or_else(|| error_at(&words, 0, len, "step keyword (add, remove, extract, turn, change)"))?;

    #[derive(Clone, Copy)]
    enum Verb {
        Add,
        Remove,
        Extract,
        Up,
        Down,
        Change,
    }
    let (verb, mut i) = if head.is("add") {
        (Verb::Add, 1)
    } else if head.is("remove") {
        (Verb::Remove, 1)
    } else if head.is("extract") {
        (Verb::Extract, 1)
    } else if head.is("change") {
        (Verb::Change, 1)
    } else if head.is("turn") {
        match words.get(1) {
            Some(w) if w.is("up") => (Verb::Up, 2),
            Some(w) if w.is("down") => (Verb::Down, 2),
            _ => return Err(error_at(&words, 1, len, "\"up\" or \"down\"")),
        }
    } else {
        return Err(error_at(&words, 0, len, "step keyword (add, remove, extract, turn, change)"));
    };
    for kw in ["the", "sound", "of"] {
        if !words.get(i).is_some_and(|w| w.is(kw)) {
            return Err(error_at(&words, i, len, format!("{kw:?}")));
        }
        i += 1;
    }
    let body = &words[i..];
    let mut end = body.len();

    let mut direction = None;
    let mut from = None;
    let mut to = None;
    let mut gain = None;
    match verb {
        Verb::Add => {
            if let Some((v, n)) = gain_clause(body, end, &["with", "by"]) {
                gain = Some(v);
                end -= n;
            }
            if let Some((d, n)) = direction_clause(body, end, "at", false) {
                direction = Some(d);
                end -= n;
            }
        }
        Verb::Remove | Verb::Extract => {
            if let Some((d, n)) = direction_clause(body, end, "at", true) {
                direction = Some(d);
                end -= n;
            }
        }
        Verb::Up | Verb::Down => match gain_clause(body, end, &["by"]) {
            Some((v, n)) => {
                gain = Some(v);
                end -= n;
            }
            None => {
                let at = i + end.saturating_sub(3);
                return Err(error_at(&words, at.max(i), len, "\"by <n> dB\" at end of step"));
            }
        },
        Verb::Change => {
            match direction_clause(body, end, "to", false) {
                Some((d, n)) => {
                    to = Some(d);
                    end -= n;
                }
                None => {
                    let expected = if end >= 2 && body[end - 2].is("to") {
                        "direction (left, front, right)"
                    } else {
                        "\"to <direction>\" at end of step"
                    };
                    let at = if end >= 2 && body[end - 2].is("to") { i + end - 1 } else { i + end.saturating_sub(2) };
                    return Err(error_at(&words, at.max(i), len, expected));
                }
            }
            if let Some((d, n)) = direction_clause(body, end, "from", false) {
                from = Some(d);
                end -= n;
            }
        }
    }
    if end == 0 {
        return Err(error_at(&words, i, len, "sound label"));
    }
    let label = text[body[0].start..body[end - 1].end].to_string();

    Ok(match verb {
        Verb::Add => AtomicStep::Add { label, direction, gain_db: gain.map(GainDb) },
        Verb::Remove => AtomicStep::Remove { label, direction },
        Verb::Extract => AtomicStep::Extract { label, direction },
        Verb::Up => AtomicStep::TurnUp { label, delta_db: GainDb(gain.expect("required clause")) },
        Verb::Down => AtomicStep::TurnDown { label, delta_db: GainDb(gain.expect("required clause")) },
        Verb::Change => AtomicStep::Change { label, from, to: to.expect("required clause") },
    })
}

/// One step per non-blank line; lines starting with `#` are comments.
pub fn parse_steps(text: &str) -> Result<Vec<AtomicStep>, ParseError> {
    let mut steps = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            steps.push(parse_step(line).map_err(|e| ParseError { position: offset + e.position, ..e })?);
        }
        offset += line.len();
    }
    Ok(steps)
}

pub fn serialize_step(step: &AtomicStep) -> String {
    let mut out = String::new();
    let push_dir = |out: &mut String, kw: &str, d: &Option<Direction>| {
        if let Some(d) = d {
            out.push_str(&format!(" {kw} {d}"));
        }
    };
    match step {
        AtomicStep::Add { label, direction, gain_db } => {
            out.push_str(&format!("Add the sound of {label}"));
            push_dir(&mut out, "at", direction);
            if let Some(g) = gain_db {
                out.push_str(&format!(" with {g} db"));
            }
        }
        AtomicStep::Remove { label, direction } => {
            out.push_str(&format!("Remove the sound of {label}"));
            push_dir(&mut out, "at", direction);
        }
        AtomicStep::Extract { label, direction } => {
            out.push_str(&format!("Extract the sound of {label}"));
            push_dir(&mut out, "at", direction);
        }
        AtomicStep::TurnUp { label, delta_db } => out.push_str(&format!("Turn up the sound of {label} by {delta_db} dB")),
        AtomicStep::TurnDown { label, delta_db } => out.push_str(&format!("Turn down the sound of {label} by {delta_db} dB")),
        AtomicStep::Change { label, from, to } => {
            out.push_str(&format!("Change the sound of {label}"));
            push_dir(&mut out, "from", from);
            out.push_str(&format!(" to {to}"));
        }
    }
    out
}
