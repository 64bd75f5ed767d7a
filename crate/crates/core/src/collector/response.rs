use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::gate::ngram_tokens;
use crate::fol::{camel_words, parse};
use crate::forge::NlFolPair;

/// A block of generator output that did not yield a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalformedBlock {
    pub reason: String,
    pub text: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Nl,
    Fol,
}

fn marker(line: &str) -> Option<(Field, &str)> {
    let t = line.trim_start();
    for (prefix, field) in [
        ("--- NL:", Field::Nl),
        ("### NL:", Field::Nl),
        ("--- FOL:", Field::Fol),
        ("### FOL:", Field::Fol),
    ] {
        if let Some(rest) = t.strip_prefix(prefix) {
            return Some((field, rest.trim()));
        }
    }
    None
}

#[derive(Default)]
struct Pending {
    nl: Option<Vec<String>>,
    fol: Option<Vec<String>>,
}

impl Pending {
    fn text(lines: &Option<Vec<String>>) -> String {
        lines.as_ref().map(|l| l.join(" ").trim().to_string()).unwrap_or_default()
    }

    fn raw(&self) -> String {
        format!("NL: {} | FOL: {}", Pending::text(&self.nl), Pending::text(&self.fol))
    }
}

/// Extracts NL/FOL pairs from generator output. Both `--- NL:` / `--- FOL:`
/// blocks closed by `---` lines and `### NL:` / `### FOL:` sections are
/// accepted. Incomplete blocks are returned with a reason.
pub fn parse_response(text: &str) -> (Vec<NlFolPair>, Vec<MalformedBlock>) {
    let mut pairs = Vec::new();
    let mut bad = Vec::new();
    let mut cur = Pending::default();
    let mut open: Option<Field> = None;

    let flush = |cur: &mut Pending, pairs: &mut Vec<NlFolPair>, bad: &mut Vec<MalformedBlock>| {
        let taken = std::mem::take(cur);
        let nl = Pending::text(&taken.nl);
        let fol = Pending::text(&taken.fol);
        match (taken.nl.is_some(), taken.fol.is_some()) {
            (false, false) => {}
            (true, true) if !nl.is_empty() && !fol.is_empty() => pairs.push(NlFolPair::new(nl, fol)),
            (true, false) => bad.push(MalformedBlock {
                reason: "missing FOL".into(),
                text: taken.raw(),
            }),
            (false, true) => bad.push(MalformedBlock {
                reason: "missing NL".into(),
                text: taken.raw(),
            }),
            _ => bad.push(MalformedBlock {
                reason: "empty field".into(),
                text: taken.raw(),
            }),
        }
    };

    for line in text.lines() {
        if let Some((field, rest)) = marker(line) {
            // A new NL, or a second FOL, starts a new block.
            let starts_new = match field {
                Field::Nl => cur.nl.is_some(),
                Field::Fol => cur.fol.is_some(),
            };
            if starts_new {
                flush(&mut cur, &mut pairs, &mut bad);
            }
            let body = if rest.is_empty() { Vec::new() } else { vec![rest.to_string()] };
            match field {
                Field::Nl => cur.nl = Some(body),
                Field::Fol => cur.fol = Some(body),
            }
            open = Some(field);
            continue;
        }
        let t = line.trim();
        if t == "---" || t == "\"\"\"" {
            if open == Some(Field::Fol) {
                flush(&mut cur, &mut pairs, &mut bad);
            }
            open = None;
            continue;
        }
        if t.is_empty() {
            continue;
        }
        match open {
            Some(Field::Nl) => cur.nl.get_or_insert_with(Vec::new).push(t.to_string()),
            Some(Field::Fol) => cur.fol.get_or_insert_with(Vec::new).push(t.to_string()),
            None => {}
        }
    }
    flush(&mut cur, &mut pairs, &mut bad);
    (pairs, bad)
}

/// Fraction of the FOL's term words (CamelCase-split predicate and constant
/// names, lowercased, deduplicated) that occur among the NL tokens, which
/// are split the same way. Zero
/// when the FOL does not parse.
pub fn alignment_score(nl: &str, fol: &str) -> f64 {
    let Ok(rule) = parse(fol) else {
        return 0.0;
    };
    let nl_tokens: HashSet<String> = ngram_tokens(nl)
        .into_iter()
        .flat_map(|t| {
            let mut parts = camel_words(&t);
            parts.push(t);
            parts
        })
        .collect();
    let words: HashSet<String> = crate::forge::rule_terms(&rule)
        .iter()
        .flat_map(|t| camel_words(t))
        .map(|w| w.to_lowercase())
        .collect();
    if words.is_empty() {
        return 0.0;
    }
    words.iter().filter(|w| nl_tokens.contains(*w)).count() as f64 / words.len() as f64
}
