//! Chat prompt construction for environment generators.
//!
//! One prompt layout serves both backends: the remote client sends it over
//! the wire, the mock generator stores it in transcripts so ablation behavior
//! is auditable offline.

use serde::{Deserialize, Serialize};

use crate::compile::TerrainStats;
use crate::train::PerfTriple;

/// A chat message in wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: "system".to_string(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: "user".to_string(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: "assistant".to_string(),
            content: content.into(),
        }
    }
}

/// What kind of sample is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Initial,
    Evolve,
}

/// Statistics bundle rendered into evolution prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackBundle {
    pub terrain_stats: TerrainStats,
    pub train_before: PerfTriple,
    pub train_after: PerfTriple,
    /// Docstrings of the terrains in the current training library.
    pub library_docs: Vec<String>,
}

/// One generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRequest {
    pub kind: RequestKind,
    /// The in-context example program, canonical DSL text.
    pub incontext_program: String,
    /// The program being evolved; required for `Evolve`.
    pub parent_program: Option<String>,
    /// Training feedback; required for `Evolve` unless `no_feedback`.
    pub feedback: Option<FeedbackBundle>,
    /// Docstrings of previously generated terrains, for sequential
    /// diversity-conditioned generation.
    pub prior_docs: Vec<String>,
    /// Replace the feedback section with a fixed make-it-harder instruction.
    pub no_feedback: bool,
    pub temperature: f64,
    pub max_attempts: u32,
}

impl GeneratorRequest {
    pub fn initial(incontext: &str, temperature: f64, max_attempts: u32) -> GeneratorRequest {
        GeneratorRequest {
            kind: RequestKind::Initial,
            incontext_program: incontext.to_string(),
            parent_program: None,
            feedback: None,
            prior_docs: Vec::new(),
            no_feedback: false,
            temperature,
            max_attempts,
        }
    }

    pub fn evolve(
        incontext: &str,
        parent: &str,
        feedback: Option<FeedbackBundle>,
        no_feedback: bool,
        temperature: f64,
        max_attempts: u32,
    ) -> GeneratorRequest {
        assert!(
            no_feedback || feedback.is_some(),
            "evolve requests carry feedback unless the no-feedback ablation is active"
        );
        GeneratorRequest {
            kind: RequestKind::Evolve,
            incontext_program: incontext.to_string(),
            parent_program: Some(parent.to_string()),
            feedback,
            prior_docs: Vec::new(),
            no_feedback,
            temperature,
            max_attempts,
        }
    }
}

/// The fixed instruction used when the no-feedback ablation is active.
pub const NO_FEEDBACK_INSTRUCTION: &str =
    "Make the next terrain strictly more challenging than the previous one.";

const SYSTEM_PROMPT: &str = r#"You design obstacle course terrains for a small walking robot by writing programs in a tiny declarative language. A program lays out segments front to back and places eight goal waypoints. Every numeric field is an arithmetic expression over the difficulty variable d, which sweeps 0 (easiest) to 1 (hardest), so one program describes a graded family of courses.

Grammar:
  program   := "terrain" STRING "{" doc? param? segment+ goals "}"
  doc       := "doc" STRING
  param     := "param" "d" ":" NUMBER ".." NUMBER
  segment   := KIND "{" field ("," field)* "}"
  field     := IDENT ":" expr
  goals     := "goals" ("auto" | "[" goal ("," goal)* "]")
  goal      := "(" expr "," expr ")"
  expr      := term (("+"|"-") term)*  ;  term := factor (("*"|"/") factor)*
  factor    := NUMBER | "d" | "(" expr ")" | ("min"|"max") "(" expr "," expr ")" | "round" "(" expr ")"

Segment kinds and required fields (meters unless noted):
  platform { length, height }              flat ground
  gap      { length, depth }               a pit to jump across
  ramp     { length, start_height, end_height }
  stairs   { steps, step_length, step_height }
  box      { length, height }              a raised block
  beam     { length, height, width }       narrow walkable strip over a fall zone
  poles    { count, spacing, pole_width }  columns to weave between
Optional fields on any segment: width, lateral_offset.

Rules:
- The first segment must be a platform (the spawn area).
- The course is 18 m long and 4 m wide; keep the summed segment lengths within 18 m at every d in [0, 1].
- Keep the maximum height below 3 m and height differences between consecutive goals below 0.8 m at every difficulty.
- `goals auto` distributes the eight goals over the segments; explicit goal lists need exactly eight (x, y) pairs.

Respond with exactly one terrain program inside a single fenced code block and nothing else."#;

/// Assemble the ordered message list for a request. Deterministic.
pub fn build_prompt(req: &GeneratorRequest) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(SYSTEM_PROMPT)];

    let mut example = format!(
        "Here is an example terrain program:\n```terrain\n{}```\n",
        req.incontext_program
    );
    match req.kind {
        RequestKind::Initial => {
            if req.prior_docs.is_empty() {
                example.push_str(
                    "Design one new training terrain as a single fenced code block. \
                     Vary the obstacle mix and keep every difficulty traversable.",
                );
            } else {
                example.push_str("Terrains generated so far:\n");
                for doc in &req.prior_docs {
                    example.push_str(&format!("- {doc}\n"));
                }
                example.push_str(
                    "Design one new training terrain that is as different as possible \
                     from all of the above. Respond with a single fenced code block.",
                );
            }
            messages.push(ChatMessage::user(example));
        }
        RequestKind::Evolve => {
            messages.push(ChatMessage::user(example));
            let parent = req
                .parent_program
                .as_deref()
                .expect("evolve request carries a parent program");
            messages.push(ChatMessage::assistant(format!("```terrain\n{parent}```")));

            let mut fb = String::new();
            if req.no_feedback {
                fb.push_str(NO_FEEDBACK_INSTRUCTION);
                fb.push('\n');
            } else {
                let f = req.feedback.as_ref().expect("feedback present");
                fb.push_str("Statistics for the terrain above:\n");
                fb.push_str(&format!("max_height: {:.3}\n", f.terrain_stats.max_height));
                fb.push_str(&format!(
                    "max_consecutive_diff: {:.3}\n",
                    f.terrain_stats.max_consecutive_diff
                ));
                fb.push_str(&format!("height_std: {:.3}\n", f.terrain_stats.height_std));
                fb.push_str(&format!(
                    "max_goal_step: {:.3}\n",
                    f.terrain_stats.max_goal_step
                ));
                fb.push_str("Policy training results on it, before and after training:\n");
                fb.push_str(&format!("goals_before: {:.2}\n", f.train_before.goals));
                fb.push_str(&format!("goals_after: {:.2}\n", f.train_after.goals));
                fb.push_str(&format!("steps_before: {:.0}\n", f.train_before.steps));
                fb.push_str(&format!("steps_after: {:.0}\n", f.train_after.steps));
                fb.push_str(&format!(
                    "edge_violations_before: {:.0}\n",
                    f.train_before.edge_violations
                ));
                fb.push_str(&format!(
                    "edge_violations_after: {:.0}\n",
                    f.train_after.edge_violations
                ));
                if !f.library_docs.is_empty() {
                    fb.push_str("Docstrings of the terrains used for training:\n");
                    for doc in &f.library_docs {
                        fb.push_str(&format!("- {doc}\n"));
                    }
                }
            }
            fb.push_str(
                "Produce a variation of the terrain above, adjusted to these results. \
                 Respond with a single fenced code block.",
            );
            messages.push(ChatMessage::user(fb));
        }
    }
    messages
}

/// Pull the first fenced code block out of a chat response; the fence's
/// language tag is ignored.
pub fn extract_fenced_block(text: &str) -> Option<String> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> TerrainStats {
        TerrainStats {
            max_height: 0.5,
            max_consecutive_diff: 0.5,
            height_std: 0.12,
            max_goal_step: 0.3,
        }
    }

    fn triple(goals: f64) -> PerfTriple {
        PerfTriple {
            goals,
            steps: 200.0,
            edge_violations: 3.0,
        }
    }

    #[test]
    fn initial_prompt_has_two_blocks() {
        let req = GeneratorRequest::initial("terrain \"x\" { ... }", 0.8, 4);
        let messages = build_prompt(&req);
        assert_eq!(messages.len(), 2);
        assert_eq!(messages[0].role, "system");
        assert_eq!(messages[1].role, "user");
        assert!(messages[1].content.contains("terrain \"x\""));
    }

    #[test]
    fn evolve_prompt_carries_all_feedback_labels() {
        let req = GeneratorRequest::evolve(
            "terrain \"e\" {}",
            "terrain \"p\" {}",
            Some(FeedbackBundle {
                terrain_stats: stats(),
                train_before: triple(2.0),
                train_after: triple(7.0),
                library_docs: vec!["gaps and boxes".to_string()],
            }),
            false,
            0.8,
            4,
        );
        let messages = build_prompt(&req);
        assert_eq!(messages.len(), 4);
        assert_eq!(messages[2].role, "assistant");
        let feedback = &messages[3].content;
        for label in [
            "max_height",
            "max_consecutive_diff",
            "height_std",
            "goals_before",
            "goals_after",
            "steps_before",
            "steps_after",
            "edge_violations_before",
            "edge_violations_after",
        ] {
            assert!(feedback.contains(label), "missing label {label}");
        }
        assert!(feedback.contains("gaps and boxes"));
    }

    #[test]
    fn no_feedback_replaces_statistics_with_instruction() {
        let req = GeneratorRequest::evolve("terrain \"e\" {}", "terrain \"p\" {}", None, true, 0.8, 4);
        let messages = build_prompt(&req);
        let feedback = &messages[3].content;
        assert!(feedback.contains(NO_FEEDBACK_INSTRUCTION));
        assert!(!feedback.contains("goals_after"));
    }

    #[test]
    fn prompt_is_deterministic() {
        let req = GeneratorRequest::initial("terrain \"x\" {}", 0.8, 4);
        assert_eq!(build_prompt(&req), build_prompt(&req));
    }

    #[test]
    fn fenced_extraction_takes_first_block() {
        let text = "Sure! Here you go:\n```terrain\nterrain \"a\" { }\n```\nand ```second```";
        assert_eq!(
            extract_fenced_block(text).unwrap(),
            "terrain \"a\" { }\n"
        );
        assert!(extract_fenced_block("no fence here").is_none());
    }

    #[test]
    fn diversity_request_lists_prior_docs() {
        let mut req = GeneratorRequest::initial("terrain \"x\" {}", 0.8, 4);
        req.prior_docs = vec!["a gap course".to_string(), "stairs".to_string()];
        let messages = build_prompt(&req);
        assert!(messages[1].content.contains("a gap course"));
        assert!(messages[1].content.contains("as different as possible"));
    }
}
