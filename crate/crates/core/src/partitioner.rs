//! Input space partitioning stage.
//!
//! Asks the model to split a method's input space into behaviorally distinct
//! partitions, then parses the numbered list it returns. Parsing and
//! rendering are inverse on canonical lists, which keeps recorded sessions
//! replayable through the same code path.

use crate::frontend::collect_callee_sources;
use crate::frontend::Extraction;
use crate::gateway::{FewShot, Gateway, GatewayError, Stage};
use crate::model::MethodUnderTest;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Partition {
    pub ordinal: usize,
    pub name: String,
    pub constraints: Vec<String>,
    /// The characterization as one line: "name: c1; c2" or "c1; c2".
    pub raw_text: String,
}

impl Partition {
    pub fn new(ordinal: usize, name: &str, constraints: Vec<String>) -> Partition {
        let joined = constraints.join("; ");
        let raw_text = if name.is_empty() {
            joined
        } else {
            format!("{name}: {joined}")
        };
        Partition {
            ordinal,
            name: name.to_string(),
            constraints,
            raw_text,
        }
    }

    fn from_body(ordinal: usize, body: &str) -> Partition {
        let (name, rest) = match body.split_once(':') {
            Some((n, r)) if is_simple_name(n.trim()) => (n.trim().to_string(), r),
            _ => (String::new(), body),
        };
        let constraints: Vec<String> = rest
            .split(';')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        Partition::new(ordinal, &name, constraints)
    }

    /// The single partition used when partitioning is disabled.
    pub fn unconstrained() -> Partition {
        Partition::new(1, "", vec!["(unconstrained)".to_string()])
    }

    pub fn spec_text(&self) -> &str {
        &self.raw_text
    }
}

fn is_simple_name(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 40
        && s.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_')
}

/// Parses a numbered partition list. Accepts "(1) ..." and "1. ..." item
/// markers; everything else is ignored.
pub fn parse_partitions(text: &str) -> Vec<Partition> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let body = if let Some(rest) = line.strip_prefix('(') {
            let Some((num, body)) = rest.split_once(')') else {
                continue;
            };
            if num.chars().all(|c| c.is_ascii_digit()) && !num.is_empty() {
                Some(body)
            } else {
                None
            }
        } else if let Some((num, body)) = line.split_once('.') {
            if num.chars().all(|c| c.is_ascii_digit()) && !num.is_empty() {
                Some(body)
            } else {
                None
            }
        } else {
            None
        };
        if let Some(body) = body {
            let body = body.trim();
            if !body.is_empty() {
                out.push(Partition::from_body(out.len() + 1, body));
            }
        }
    }
    out
}

/// Renders partitions back into the canonical list format.
pub fn render_partitions(partitions: &[Partition]) -> String {
    partitions
        .iter()
        .map(|p| format!("({}) {}", p.ordinal, p.raw_text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Builds the partitioning prompt. Callee sources, when given, are shown
/// under their own section so behavior hidden in helpers is visible.
pub fn build_isp_prompt(
    method: &MethodUnderTest,
    callee_sources: Option<&[(String, String)]>,
) -> String {
    let mut prompt = String::from(
        "Apply input space partitioning to the method under test: divide the \
         possible argument values (and receiver state, when relevant) into \
         partitions that each exercise a distinct behavior of the method.\n\n",
    );
    prompt.push_str("Code:\n");
    prompt.push_str(&method.source);
    prompt.push_str("\n\n");
    prompt.push_str(&format!("Type: {}\n", method.owner_fqn));
    if !method.is_static {
        prompt.push_str(&format!(
            "Parameter: this ({}), the receiver\n",
            method.owner_fqn
        ));
    }
    for p in &method.params {
        prompt.push_str(&format!("Parameter: {} ({})\n", p.name, p.type_name));
    }
    if let Some(callees) = callee_sources {
        if !callees.is_empty() {
            prompt.push_str("\nCalled methods:\n");
            for (id, src) in callees {
                prompt.push_str(&format!("// {id}\n{src}\n\n"));
            }
        }
    }
    prompt.push_str(
        "\nRespond with one partition per line in the form:\n\
         (1) short-name: characterization of the inputs\n\
         Separate multiple constraints inside one partition with semicolons.\n",
    );
    prompt
}

const RETRY_REMINDER: &str = "\n\nYour previous answer did not follow the expected \
format. Respond only with the numbered list, one partition per line, each line \
starting with its number in parentheses, for example:\n(1) zero: x == 0";

pub struct PartitionOutcome {
    pub partitions: Vec<Partition>,
    /// Set when the model never produced a parseable list.
    pub fallback: bool,
    pub attempts: u32,
}

/// Runs the partitioning stage with a single stricter-format retry. If both
/// attempts fail to parse, falls back to the unconstrained partition.
pub fn partition(
    gateway: &Gateway,
    method: &MethodUnderTest,
    callee_sources: Option<&[(String, String)]>,
    few_shot: &[FewShot],
) -> Result<PartitionOutcome, GatewayError> {
    let prompt = build_isp_prompt(method, callee_sources);
    let first = gateway.complete(Stage::Isp, &method.method_id, few_shot, &prompt)?;
    let parsed = parse_partitions(&first.text);
    if !parsed.is_empty() {
        return Ok(PartitionOutcome {
            partitions: parsed,
            fallback: false,
            attempts: 1,
        });
    }
    let retry_prompt = format!("{prompt}{RETRY_REMINDER}");
    let second = gateway.complete(Stage::Isp, &method.method_id, few_shot, &retry_prompt)?;
    let parsed = parse_partitions(&second.text);
    if !parsed.is_empty() {
        return Ok(PartitionOutcome {
            partitions: parsed,
            fallback: false,
            attempts: 2,
        });
    }
    Ok(PartitionOutcome {
        partitions: vec![Partition::unconstrained()],
        fallback: true,
        attempts: 2,
    })
}

/// Convenience wrapper that also gathers depth-1 callee sources when the
/// prompt should include them.
pub fn partition_with_context(
    gateway: &Gateway,
    extraction: &Extraction,
    method: &MethodUnderTest,
    include_callees: bool,
    few_shot: &[FewShot],
) -> Result<(PartitionOutcome, Vec<String>), GatewayError> {
    if include_callees {
        let (sources, notes) = collect_callee_sources(extraction, method);
        let outcome = partition(gateway, method, Some(&sources), few_shot)?;
        Ok((outcome, notes))
    } else {
        let outcome = partition(gateway, method, None, few_shot)?;
        Ok((outcome, Vec::new()))
    }
}

/// Worked example shown before every partitioning prompt.
pub fn isp_few_shot() -> Vec<FewShot> {
    let example = MethodUnderTest {
        method_id: "demo.Guard::clamp(int)".into(),
        owner_fqn: "demo.Guard".into(),
        name: "clamp".into(),
        is_static: true,
        return_type: "int".into(),
        params: vec![crate::model::ParameterDescriptor {
            name: "v".into(),
            type_name: "int".into(),
            is_reference: false,
        }],
        throws: vec![],
        doc_throws: vec![],
        source: "public static int clamp(int v) {\n    if (v < 0) { return 0; }\n    if (v > 100) { return 100; }\n    return v;\n}"
            .into(),
        line: 1,
        branch_sites: 2,
    };
    vec![FewShot {
        user: build_isp_prompt(&example, None),
        assistant: "(1) below-range: v < 0\n(2) in-range: v >= 0; v <= 100\n(3) above-range: v > 100"
            .into(),
    }]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{GatewayConfig, StubEntry, StubScript};

    fn sample_method() -> MethodUnderTest {
        MethodUnderTest {
            method_id: "p.C::m(int,p.D)".into(),
            owner_fqn: "p.C".into(),
            name: "m".into(),
            is_static: false,
            return_type: "int".into(),
            params: vec![
                crate::model::ParameterDescriptor {
                    name: "k".into(),
                    type_name: "int".into(),
                    is_reference: false,
                },
                crate::model::ParameterDescriptor {
                    name: "d".into(),
                    type_name: "p.D".into(),
                    is_reference: true,
                },
            ],
            throws: vec![],
            doc_throws: vec![],
            source: "public int m(int k, D d) { if (k > 0) { return 1; } return 0; }".into(),
            line: 3,
            branch_sites: 1,
        }
    }

    #[test]
    fn prompt_names_the_technique_and_lists_sections() {
        let p = build_isp_prompt(&sample_method(), None);
        assert!(p.contains("input space partitioning"));
        assert!(p.contains("Code:"));
        assert!(p.contains("Type: p.C"));
        assert!(p.contains("Parameter: k (int)"));
        assert!(p.contains("Parameter: d (p.D)"));
        assert!(p.contains("Parameter: this (p.C)"));
    }

    #[test]
    fn prompt_includes_callee_sources_when_given() {
        let callees = vec![(
            "p.C::helper".to_string(),
            "int helper() { return 1; }".to_string(),
        )];
        let p = build_isp_prompt(&sample_method(), Some(&callees));
        assert!(p.contains("Called methods:"));
        assert!(p.contains("// p.C::helper"));
        let without = build_isp_prompt(&sample_method(), None);
        assert!(!without.contains("Called methods:"));
    }

    #[test]
    fn parses_both_marker_styles_and_renumbers() {
        let text = "Here are the partitions:\n(1) neg: k < 0\nsome chatter\n3. pos: k > 0; d != null\n";
        let ps = parse_partitions(text);
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].ordinal, 1);
        assert_eq!(ps[0].name, "neg");
        assert_eq!(ps[0].constraints, vec!["k < 0"]);
        assert_eq!(ps[1].ordinal, 2);
        assert_eq!(ps[1].constraints, vec!["k > 0", "d != null"]);
    }

    #[test]
    fn unnamed_partition_keeps_whole_body_as_constraints() {
        let ps = parse_partitions("(1) k == 0 and d is empty");
        assert_eq!(ps[0].name, "");
        assert_eq!(ps[0].raw_text, "k == 0 and d is empty");
    }

    #[test]
    fn colon_inside_constraint_is_not_a_name() {
        let ps = parse_partitions("(1) ratio above 2:1 threshold");
        assert_eq!(ps[0].name, "");
        assert_eq!(ps[0].raw_text, "ratio above 2:1 threshold");
    }

    #[test]
    fn render_then_parse_is_identity() {
        let ps = vec![
            Partition::new(1, "neg", vec!["k < 0".into()]),
            Partition::new(2, "", vec!["k == 0".into(), "d != null".into()]),
            Partition::new(3, "big", vec!["k > 100".into()]),
        ];
        let text = render_partitions(&ps);
        assert_eq!(parse_partitions(&text), ps);
    }

    fn stub_gateway(responses: Vec<&str>) -> Gateway {
        let mut stub = StubScript::default();
        stub.isp.insert(
            "p.C::m(int,p.D)".into(),
            StubEntry::Seq(responses.into_iter().map(String::from).collect()),
        );
        Gateway::new(GatewayConfig::stub_only(stub))
    }

    #[test]
    fn retry_recovers_from_malformed_first_answer() {
        let gw = stub_gateway(vec!["no list here", "(1) ok: k > 0"]);
        let outcome = partition(&gw, &sample_method(), None, &[]).unwrap();
        assert!(!outcome.fallback);
        assert_eq!(outcome.attempts, 2);
        assert_eq!(outcome.partitions.len(), 1);
        assert_eq!(gw.stage_calls(Stage::Isp), 2);
    }

    #[test]
    fn double_failure_falls_back_to_unconstrained() {
        let gw = stub_gateway(vec!["chatter", "more chatter"]);
        let outcome = partition(&gw, &sample_method(), None, &[]).unwrap();
        assert!(outcome.fallback);
        assert_eq!(outcome.partitions, vec![Partition::unconstrained()]);
        assert_eq!(outcome.partitions[0].raw_text, "(unconstrained)");
    }

    #[test]
    fn few_shot_example_parses_to_three_partitions() {
        let fs = isp_few_shot();
        assert_eq!(fs.len(), 1);
        let ps = parse_partitions(&fs[0].assistant);
        assert_eq!(ps.len(), 3);
        assert_eq!(ps[1].constraints.len(), 2);
    }
}
