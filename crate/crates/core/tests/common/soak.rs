use neurosym::scoring::AnswerType;
use neurosym::service::{LimitOverrides, ScoreRequest};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Malformed,
    LimitHit,
    Trivial,
}

/// 10,000 request lines: 1% malformed, 1% exhausting a limit, the rest
/// trivial. Returns the input and, per line, the id and expected kind.
pub fn soak_input() -> (String, Vec<(String, Expect)>) {
    let mut lines = Vec::new();
    let mut expected = Vec::new();
    for i in 0..10_000 {
        if i % 100 == 37 {
            lines.push(format!("{{\"id\": \"m{i}\", \"completion\": "));
            expected.push(("?".to_string(), Expect::Malformed));
            continue;
        }
        let id = format!("r{i}");
        let (request, kind) = if i % 100 == 71 {
            let program = if i % 200 == 71 { "g := g + 1; g" } else { "Total[Map[# + 1 &, {1, 2, 3, 4, 5, 6, 7, 8}]]" };
            let request = ScoreRequest {
                limits: Some(LimitOverrides { max_steps: Some(40), ..Default::default() }),
                ..ScoreRequest::new(&id, format!("<neurosymtag>{program}</neurosymtag>"), AnswerType::Exact, "1")
            };
            (request, Expect::LimitHit)
        } else {
            let text = format!("<neurosymtag>{} + 1</neurosymtag>", i % 7);
            (ScoreRequest::new(&id, text, AnswerType::Exact, "3"), Expect::Trivial)
        };
        lines.push(serde_json::to_string(&request).unwrap());
        expected.push((id, kind));
    }
    (lines.join("\n") + "\n", expected)
}

/// Checks one reply per line in order; returns the trivial requests' wall
/// times in milliseconds.
pub fn check_replies(replies: &[serde_json::Value], expected: &[(String, Expect)]) -> Result<Vec<u64>, String> {
    if replies.len() != expected.len() {
        return Err(format!("{} replies for {} requests", replies.len(), expected.len()));
    }
    let mut trivial_ms = Vec::new();
    for (i, (reply, (id, kind))) in replies.iter().zip(expected).enumerate() {
        if reply["id"] != id.as_str() {
            return Err(format!("line {i}: id {} where {id} was expected", reply["id"]));
        }
        let ok = match kind {
            Expect::Malformed => reply["error"].is_string(),
            Expect::LimitHit => {
                reply["classification"] == "runtime_error"
                    && reply["error_message"].as_str().is_some_and(|m| m.contains("limit"))
            }
            Expect::Trivial => {
                trivial_ms.push(reply["wall_ms"].as_u64().unwrap_or(u64::MAX));
                reply["classification"] == "executed" && reply["correct"] == (i % 7 == 2)
            }
        };
        if !ok {
            return Err(format!("line {i}: unexpected reply {reply}"));
        }
    }
    Ok(trivial_ms)
}
