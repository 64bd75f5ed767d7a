use serde::{Deserialize, Serialize};

use super::{CorrectionRecord, Task};
use crate::perturb::NO_CHANGES;

pub const NL_MARKER: &str = "### NL:";
pub const FOL_MARKER: &str = "### FOL:";
pub const PREV_MARKER: &str = "### Previous steps:";
pub const CORR_MARKER: &str = "### Corrections:";

const MARKERS: [&str; 4] = [NL_MARKER, FOL_MARKER, PREV_MARKER, CORR_MARKER];

fn section(marker: &str, body: &str) -> String {
    if body.is_empty() {
        marker.to_string()
    } else {
        format!("{marker}\n{body}")
    }
}

/// T3 model input: NL, the initial FOL and the steps already taken.
pub fn t3_input(nl: &str, fol: &str, prev_steps: &[String]) -> String {
    [
        section(NL_MARKER, nl),
        section(FOL_MARKER, fol),
        section(PREV_MARKER, &prev_steps.join("\n")),
    ]
    .join("\n")
}

/// T3 model output: the next steps (or "No changes needed") and the FOL
/// after them.
pub fn t3_output(steps: &[String], fol: &str) -> String {
    let steps = if steps.is_empty() {
        NO_CHANGES.to_string()
    } else {
        steps.join("\n")
    };
    [section(CORR_MARKER, &steps), section(FOL_MARKER, fol)].join("\n")
}

/// T2 model input: NL plus the prediction to repair.
pub fn t2_input(nl: &str, fol: &str) -> String {
    [section(NL_MARKER, nl), section(FOL_MARKER, fol)].join("\n")
}

/// (input, output) training text for a record.
pub fn format_prompt(record: &CorrectionRecord, task: Task) -> (String, String) {
    let gold = section(FOL_MARKER, &record.fol_gold);
    match task {
        Task::T1 => (section(NL_MARKER, &record.nl), gold),
        Task::T2 => (t2_input(&record.nl, &record.fol_input), gold),
        Task::T3 => (
            t3_input(&record.nl, &record.fol_input, &record.prev_texts()),
            t3_output(&record.target_texts(), &record.fol_gold),
        ),
    }
}

/// Marker sections of a prompt or response, in order. Text before the
/// first marker is ignored; a marker may share its line with content.
pub fn split_sections(text: &str) -> Vec<(&'static str, String)> {
    let mut out: Vec<(&'static str, Vec<&str>)> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(marker) = MARKERS.iter().find(|m| trimmed.starts_with(**m)) {
            let rest = trimmed[marker.len()..].trim();
            out.push((marker, if rest.is_empty() { Vec::new() } else { vec![rest] }));
        } else if let Some((_, body)) = out.last_mut() {
            body.push(line);
        }
    }
    out.into_iter()
        .map(|(m, body)| (m, body.join("\n").trim().to_string()))
        .collect()
}

fn lines_of(body: &str) -> Vec<String> {
    body.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
}

/// Fields recovered from formatted prompt text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedPrompt {
    pub nl: String,
    pub fol_input: Option<String>,
    pub prev_steps: Vec<String>,
    pub corrections: Vec<String>,
    pub fol_output: String,
}

/// Inverse of [`format_prompt`] on its text fields.
pub fn parse_prompt(task: Task, input: &str, output: &str) -> Option<ParsedPrompt> {
    let inp = split_sections(input);
    let out = split_sections(output);
    let get = |secs: &[(&str, String)], m: &str| secs.iter().find(|(k, _)| *k == m).map(|(_, b)| b.clone());
    let mut parsed = ParsedPrompt {
        nl: get(&inp, NL_MARKER)?,
        fol_output: get(&out, FOL_MARKER)?,
        ..ParsedPrompt::default()
    };
    if matches!(task, Task::T2 | Task::T3) {
        parsed.fol_input = Some(get(&inp, FOL_MARKER)?);
    }
    if task == Task::T3 {
        parsed.prev_steps = lines_of(&get(&inp, PREV_MARKER)?);
        parsed.corrections = lines_of(&get(&out, CORR_MARKER)?);
    }
    Some(parsed)
}

/// Steps and FOL from a T3-style generator response. `None` when the
/// corrections section is missing.
pub fn parse_t3_output(text: &str) -> Option<(Vec<String>, Option<String>)> {
    let secs = split_sections(text);
    let steps = secs.iter().find(|(m, _)| *m == CORR_MARKER).map(|(_, b)| lines_of(b))?;
    let fol = secs.iter().rev().find(|(m, _)| *m == FOL_MARKER).map(|(_, b)| b.clone());
    Some((steps, fol.filter(|f| !f.is_empty())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t3_layout() {
        let i = t3_input("All x.", "∀x P(x)", &["a".into(), "b".into()]);
        assert_eq!(i, "### NL:\nAll x.\n### FOL:\n∀x P(x)\n### Previous steps:\na\nb");
        assert_eq!(t3_output(&[], "∀x P(x)"), "### Corrections:\nNo changes needed\n### FOL:\n∀x P(x)");
        let (steps, fol) = parse_t3_output(&t3_output(&["c".into()], "Q(A)")).unwrap();
        assert_eq!((steps, fol), (vec!["c".to_string()], Some("Q(A)".to_string())));
    }

    #[test]
    fn empty_previous_steps_section() {
        let i = t3_input("n", "P(A)", &[]);
        assert!(i.ends_with(PREV_MARKER));
        let secs = split_sections(&i);
        assert_eq!(secs[2], (PREV_MARKER, String::new()));
    }

    #[test]
    fn inline_marker_content() {
        let secs = split_sections("### NL: Every cat sleeps. ### ignored\n### FOL: ∀x Cat(x)");
        assert_eq!(secs[0].0, NL_MARKER);
        assert_eq!(secs[1], (FOL_MARKER, "∀x Cat(x)".to_string()));
    }
}
