//! Object instantiation stage and driver emission.
//!
//! Given a constructor plan and a target partition, asks the model for the
//! literal values and construction statements, expecting two fenced blocks
//! labeled IMPORTS and STATEMENTS. The emitted driver wraps those
//! statements in a template around the invocation of the method under test.

use std::collections::BTreeSet;

use regex::Regex;

use crate::gateway::FewShot;
use crate::model::MethodUnderTest;
use crate::partitioner::Partition;
use crate::selector::{Binding, Plan, PlanNode};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BlockError {
    #[error("response is missing the {0} block")]
    MissingBlock(&'static str),
    #[error("unterminated code fence after the {0} label")]
    UnterminatedFence(&'static str),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EmitError {
    #[error("statements have unbalanced braces ({open} open, {close} close)")]
    UnbalancedBraces { open: usize, close: usize },
}

fn simple_name(type_name: &str) -> &str {
    let base = type_name.strip_suffix("[]").unwrap_or(type_name);
    let simple = base.rsplit('.').next().unwrap_or(base);
    if type_name.ends_with("[]") {
        // Give back the suffix by slicing the original where possible.
        return &type_name[type_name.len() - simple.len() - 2..];
    }
    simple
}

/// Scaffold lines in build order: every constructor argument is defined
/// before the constructor that uses it.
pub fn scaffold_lines(plan: &Plan) -> Vec<String> {
    let mut out = Vec::new();
    fn visit(node: &PlanNode, out: &mut Vec<String>) {
        match &node.binding {
            Binding::Literal => out.push(format!(
                "{} {} = <literal satisfying the target partition>;",
                simple_name(&node.type_name),
                node.var_name
            )),
            Binding::Opaque => out.push(format!(
                "{} {} = <no public constructor; use null unless the partition needs otherwise>;",
                simple_name(&node.type_name),
                node.var_name
            )),
            Binding::Constructor { ctor, args } => {
                for a in args {
                    visit(a, out);
                }
                let arg_names: Vec<&str> =
                    args.iter().map(|a| a.var_name.as_str()).collect();
                out.push(format!(
                    "{} {} = new {}({});",
                    simple_name(&node.type_name),
                    node.var_name,
                    simple_name(&ctor.owner),
                    arg_names.join(", ")
                ));
            }
        }
    }
    for root in &plan.roots {
        visit(root, &mut out);
    }
    out
}

const BLOCK_FORMAT: &str = "Respond with exactly two labeled fenced blocks:\n\
IMPORTS:\n```\nimport com.example.Widget;\n```\n\
STATEMENTS:\n```\nWidget w = new Widget(3);\n```\n\
The IMPORTS block may be empty inside; the STATEMENTS block must define every \
variable named above, in order.";

/// Object instantiation prompt for one (method, partition) pair, guided by
/// the constructor plan.
pub fn build_oi_prompt(method: &MethodUnderTest, partition: &Partition, plan: &Plan) -> String {
    let mut prompt = String::from(
        "Object instantiation: write Java statements that build the inputs for \
         one test of the method under test so the inputs satisfy the target \
         partition.\n\n",
    );
    prompt.push_str("Method under test:\n");
    prompt.push_str(&method.source);
    prompt.push_str("\n\n");
    prompt.push_str(&format!("Target partition: {}\n\n", partition.spec_text()));
    prompt.push_str("Build these variables bottom-up, keeping the names:\n");
    for line in scaffold_lines(plan) {
        prompt.push_str(&format!("{line}\n"));
    }
    prompt.push('\n');
    prompt.push_str(BLOCK_FORMAT);
    prompt
}

/// Direct prompt used when constructor planning is disabled: same contract,
/// but the model chooses constructors on its own.
pub fn build_direct_prompt(method: &MethodUnderTest, partition: &Partition) -> String {
    let mut prompt = String::from(
        "Object instantiation: write Java statements that build the inputs for \
         one test of the method under test so the inputs satisfy the target \
         partition. Choose appropriate constructors yourself.\n\n",
    );
    prompt.push_str("Method under test:\n");
    prompt.push_str(&method.source);
    prompt.push_str("\n\n");
    prompt.push_str(&format!("Target partition: {}\n\n", partition.spec_text()));
    prompt.push_str("Define one variable per parameter, named exactly after the parameter");
    if !method.is_static {
        prompt.push_str(", plus a variable named receiver for the instance the method is called on");
    }
    prompt.push_str(":\n");
    if !method.is_static {
        prompt.push_str(&format!(
            "{} receiver;\n",
            simple_name(&method.owner_fqn)
        ));
    }
    for p in &method.params {
        prompt.push_str(&format!("{} {};\n", simple_name(&p.type_name), p.name));
    }
    prompt.push('\n');
    prompt.push_str(BLOCK_FORMAT);
    prompt
}

/// One-shot prompt that asks for a whole driver class in a single step.
pub fn build_baseline_prompt(method: &MethodUnderTest) -> String {
    format!(
        "Write a complete Java class named Driver with a single method \
         \"public static void main()\" that calls the method under test below \
         with representative inputs, using only public constructors and \
         methods. Respond with only the Java source.\n\n\
         Method under test (in {}):\n{}\n",
        method.owner_fqn, method.source
    )
}

/// Pulls the driver source out of a baseline response, unwrapping a code
/// fence when present.
pub fn parse_baseline_driver(text: &str) -> String {
    match extract_first_fence(text) {
        Some(body) => body,
        None => text.trim().to_string(),
    }
}

fn extract_first_fence(text: &str) -> Option<String> {
    let mut inside = false;
    let mut body: Vec<&str> = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with("```") {
            if inside {
                return Some(body.join("\n"));
            }
            inside = true;
            continue;
        }
        if inside {
            body.push(line);
        }
    }
    None
}

/// Parses the two labeled blocks; order-independent, both required.
pub fn parse_statements(text: &str) -> Result<(Vec<String>, String), BlockError> {
    let imports_block = labeled_fence(text, "IMPORTS")?;
    let statements_block = labeled_fence(text, "STATEMENTS")?;
    let imports = imports_block
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    let statements = statements_block
        .lines()
        .map(|l| l.trim_end())
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string();
    Ok((imports, statements))
}

fn labeled_fence(text: &str, label: &'static str) -> Result<String, BlockError> {
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        let t = line.trim().trim_end_matches(':');
        if !t.eq_ignore_ascii_case(label) {
            continue;
        }
        // Skip blank lines between the label and its fence.
        for fence_line in lines.by_ref() {
            let ft = fence_line.trim();
            if ft.is_empty() {
                continue;
            }
            if !ft.starts_with("```") {
                return Err(BlockError::MissingBlock(label));
            }
            let mut body = Vec::new();
            for body_line in lines.by_ref() {
                if body_line.trim().starts_with("```") {
                    return Ok(body.join("\n"));
                }
                body.push(body_line);
            }
            return Err(BlockError::UnterminatedFence(label));
        }
        return Err(BlockError::MissingBlock(label));
    }
    Err(BlockError::MissingBlock(label))
}

/// Renders the canonical response format parse_statements reads back.
pub fn render_blocks(imports: &[String], statements: &str) -> String {
    let mut s = String::from("IMPORTS:\n```\n");
    for i in imports {
        s.push_str(i);
        s.push('\n');
    }
    s.push_str("```\nSTATEMENTS:\n```\n");
    if !statements.is_empty() {
        s.push_str(statements);
        s.push('\n');
    }
    s.push_str("```\n");
    s
}

const DRIVER_TEMPLATE: &str = "{{imports}}

public class Driver {
    public static void main() {
{{statements}}
        {{invocation}}
    }
}
";

/// The call line for the method under test, using the agreed slot names.
pub fn render_invocation(method: &MethodUnderTest) -> String {
    let args: Vec<&str> = method.params.iter().map(|p| p.name.as_str()).collect();
    let callee = if method.is_static {
        simple_name(&method.owner_fqn).to_string()
    } else {
        "receiver".to_string()
    };
    let call = format!("{}.{}({})", callee, method.name, args.join(", "));
    if method.return_type == "void" {
        format!("{call};")
    } else {
        format!("{} out = {};", simple_name(&method.return_type), call)
    }
}

/// Assembles the driver source. Imports are normalized, deduplicated, and
/// joined with the imports the invocation itself needs.
pub fn emit_driver(
    method: &MethodUnderTest,
    imports: &[String],
    statements: &str,
    template: Option<&str>,
) -> Result<String, EmitError> {
    let open = statements.matches('{').count();
    let close = statements.matches('}').count();
    if open != close {
        return Err(EmitError::UnbalancedBraces { open, close });
    }

    let mut fqns: BTreeSet<String> = BTreeSet::new();
    for raw in imports {
        let cleaned = raw
            .trim()
            .trim_start_matches("import ")
            .trim_end_matches(';')
            .trim();
        if cleaned.contains('.') {
            fqns.insert(cleaned.to_string());
        }
    }
    if method.owner_fqn.contains('.') {
        fqns.insert(method.owner_fqn.clone());
    }
    let ret_base = method.return_type.trim_end_matches("[]");
    if method.return_type != "void" && ret_base.contains('.') && !ret_base.starts_with("java.lang.")
    {
        fqns.insert(ret_base.to_string());
    }
    let import_lines = fqns
        .iter()
        .map(|f| format!("import {f};"))
        .collect::<Vec<_>>()
        .join("\n");

    let indented = statements
        .lines()
        .map(|l| {
            if l.is_empty() {
                String::new()
            } else {
                format!("        {l}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n");

    let template = template.unwrap_or(DRIVER_TEMPLATE);
    Ok(template
        .replace("{{imports}}", &import_lines)
        .replace("{{statements}}", &indented)
        .replace("{{invocation}}", &render_invocation(method)))
}

/// Warns for every planned variable the statements never mention.
pub fn lint_slots(plan: &Plan, statements: &str) -> Vec<String> {
    let mut warnings = Vec::new();
    for node in plan.walk() {
        let pattern = format!(r"\b{}\b", regex::escape(&node.var_name));
        let re = Regex::new(&pattern).expect("slot pattern");
        if !re.is_match(statements) {
            warnings.push(format!(
                "planned variable {} ({}) never appears in the statements",
                node.var_name, node.type_name
            ));
        }
    }
    warnings
}

/// Worked example shown before every instantiation prompt.
pub fn oi_few_shot() -> Vec<FewShot> {
    vec![FewShot {
        user: "Object instantiation: write Java statements that build the inputs for \
               one test of the method under test so the inputs satisfy the target \
               partition.\n\nMethod under test:\npublic int digest(Buffer b, int rounds) { \
               if (rounds > 0) { return rounds; } return b.size(); }\n\n\
               Target partition: positive-rounds: rounds > 0\n\n\
               Build these variables bottom-up, keeping the names:\n\
               int b_capacity = <literal satisfying the target partition>;\n\
               Buffer b = new Buffer(b_capacity);\n\
               int rounds = <literal satisfying the target partition>;\n\n"
            .to_string()
            + BLOCK_FORMAT,
        assistant: "IMPORTS:\n```\nimport io.Buffer;\n```\nSTATEMENTS:\n```\nint b_capacity = 8;\nBuffer b = new Buffer(b_capacity);\nint rounds = 3;\n```"
            .into(),
    }]
}
