//! Constructor selection stage.
//!
//! Walks each reference-typed slot top-down: ask the model to pick one of
//! the candidate constructors (own plus subtype constructors from the type
//! graph), then recurse into the chosen constructor's parameters. Slot
//! variable names chain parent_child so the instantiation stage and the
//! emitted driver agree on every name.

use serde::Serialize;

use crate::gateway::{FewShot, Gateway, GatewayError, Stage};
use crate::model::{ApiModel, ConstructorDescriptor, MethodUnderTest};
use crate::tdg::Tdg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanNode {
    pub var_name: String,
    pub type_name: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Binding {
    /// Build with this constructor; one child node per parameter.
    Constructor {
        ctor: ConstructorDescriptor,
        args: Vec<PlanNode>,
    },
    /// A literal-capable slot (primitive, String, or array) the
    /// instantiation stage fills in.
    Literal,
    /// No usable constructor; the instantiation stage decides (usually null).
    Opaque,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SelectStats {
    pub select_calls: u64,
    pub auto_selected: u64,
    pub fallbacks: u64,
    pub opaque_slots: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Plan {
    pub method_id: String,
    pub roots: Vec<PlanNode>,
    pub stats: SelectStats,
}

impl Plan {
    /// Every node in the plan, preorder.
    pub fn walk(&self) -> Vec<&PlanNode> {
        let mut out = Vec::new();
        fn visit<'a>(n: &'a PlanNode, out: &mut Vec<&'a PlanNode>) {
            out.push(n);
            if let Binding::Constructor { args, .. } = &n.binding {
                for a in args {
                    visit(a, out);
                }
            }
        }
        for r in &self.roots {
            visit(r, &mut out);
        }
        out
    }
}

/// First integer in the response that lands in 1..=max wins.
pub fn parse_selection(text: &str, max: usize) -> Option<usize> {
    let mut digits = String::new();
    let mut chars = text.chars().peekable();
    loop {
        match chars.next() {
            Some(c) if c.is_ascii_digit() => digits.push(c),
            other => {
                if !digits.is_empty() {
                    if let Ok(n) = digits.parse::<usize>() {
                        if (1..=max).contains(&n) {
                            return Some(n - 1);
                        }
                    }
                    digits.clear();
                }
                other?;
            }
        }
    }
}

/// Renders the selection prompt for one slot.
pub fn build_select_prompt(
    method: &MethodUnderTest,
    model: &ApiModel,
    var_name: &str,
    type_name: &str,
    candidates: &[&ConstructorDescriptor],
) -> String {
    let mut prompt = String::from(
        "Constructor selection: pick the constructor to build the object for \
         the slot below, used as input in a test driver for the method under \
         test.\n\n",
    );
    prompt.push_str("Method under test:\n");
    prompt.push_str(&method.source);
    prompt.push_str("\n\n");
    prompt.push_str(&format!("Slot: {var_name} of type {type_name}\n\n"));
    prompt.push_str("Candidates:\n");
    for (i, c) in candidates.iter().enumerate() {
        prompt.push_str(&format!("({}) {}\n", i + 1, c.signature));
    }

    // Constructors of the types the candidates themselves need.
    let mut dep_types: Vec<&str> = Vec::new();
    for c in candidates {
        for p in &c.params {
            if p.is_reference && !dep_types.contains(&p.type_name.as_str()) {
                dep_types.push(&p.type_name);
            }
        }
    }
    if !dep_types.is_empty() {
        prompt.push_str("\nDependencies:\n");
        for t in dep_types {
            let sigs = model
                .get_type(t)
                .map(|ty| {
                    ty.constructors
                        .iter()
                        .filter(|c| c.is_public)
                        .map(|c| c.signature.clone())
                        .collect::<Vec<_>>()
                        .join("; ")
                })
                .unwrap_or_default();
            if sigs.is_empty() {
                prompt.push_str(&format!("class {t}: no public constructors\n"));
            } else {
                prompt.push_str(&format!("class {t}: Constructors: {sigs}\n"));
            }
        }
    }
    prompt.push_str("\nRespond with the number of the chosen constructor.\n");
    prompt
}

/// Fallback choice: fewest reference-typed parameters, then declaration
/// order (candidate list order is already deterministic).
fn fallback_choice(candidates: &[&ConstructorDescriptor]) -> usize {
    candidates
        .iter()
        .enumerate()
        .min_by_key(|(i, c)| (c.params.iter().filter(|p| p.is_reference).count(), *i))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub struct Selector<'a> {
    pub gateway: &'a Gateway,
    pub model: &'a ApiModel,
    pub tdg: &'a Tdg,
    pub few_shot: &'a [FewShot],
}

impl<'a> Selector<'a> {
    /// Plans construction for the receiver (instance methods) and every
    /// parameter of the method, in declaration order.
    pub fn plan(&self, method: &MethodUnderTest) -> Result<Plan, GatewayError> {
        let mut stats = SelectStats::default();
        let mut roots = Vec::new();
        if !method.is_static {
            let mut ancestors = Vec::new();
            roots.push(self.plan_slot(
                method,
                "receiver",
                &method.owner_fqn,
                true,
                &mut ancestors,
                &mut stats,
            )?);
        }
        for p in &method.params {
            let mut ancestors = Vec::new();
            roots.push(self.plan_slot(
                method,
                &p.name,
                &p.type_name,
                p.is_reference,
                &mut ancestors,
                &mut stats,
            )?);
        }
        Ok(Plan {
            method_id: method.method_id.clone(),
            roots,
            stats,
        })
    }

    fn plan_slot(
        &self,
        method: &MethodUnderTest,
        var_name: &str,
        type_name: &str,
        is_reference: bool,
        ancestors: &mut Vec<String>,
        stats: &mut SelectStats,
    ) -> Result<PlanNode, GatewayError> {
        if !is_reference {
            return Ok(PlanNode {
                var_name: var_name.to_string(),
                type_name: type_name.to_string(),
                binding: Binding::Literal,
            });
        }
        if ancestors.iter().any(|a| a == type_name) {
            stats.opaque_slots += 1;
            return Ok(PlanNode {
                var_name: var_name.to_string(),
                type_name: type_name.to_string(),
                binding: Binding::Opaque,
            });
        }
        let candidates = self.tdg.constructor_candidates(self.model, type_name);
        if candidates.is_empty() {
            stats.opaque_slots += 1;
            return Ok(PlanNode {
                var_name: var_name.to_string(),
                type_name: type_name.to_string(),
                binding: Binding::Opaque,
            });
        }
        let choice = if candidates.len() == 1 {
            stats.auto_selected += 1;
            0
        } else {
            let prompt =
                build_select_prompt(method, self.model, var_name, type_name, &candidates);
            stats.select_calls += 1;
            let resp = self.gateway.complete(
                Stage::Select,
                &method.method_id,
                self.few_shot,
                &prompt,
            )?;
            match parse_selection(&resp.text, candidates.len()) {
                Some(i) => i,
                None => {
                    stats.fallbacks += 1;
                    fallback_choice(&candidates)
                }
            }
        };
        let ctor = candidates[choice].clone();
        ancestors.push(type_name.to_string());
        let mut args = Vec::new();
        for p in &ctor.params {
            let child_var = format!("{}_{}", var_name, p.name);
            args.push(self.plan_slot(
                method,
                &child_var,
                &p.type_name,
                p.is_reference,
                ancestors,
                stats,
            )?);
        }
        ancestors.pop();
        Ok(PlanNode {
            var_name: var_name.to_string(),
            // The constructed object's concrete type, not the slot type.
            type_name: ctor.owner.clone(),
            binding: Binding::Constructor { ctor, args },
        })
    }
}

/// Worked example shown before every selection prompt.
pub fn select_few_shot() -> Vec<FewShot> {
    vec![FewShot {
        user: "Constructor selection: pick the constructor to build the object for \
               the slot below, used as input in a test driver for the method under \
               test.\n\nMethod under test:\npublic int digest(Buffer b) { if (b.size() > 0) { return 1; } return 0; }\n\n\
               Slot: b of type io.Buffer\n\nCandidates:\n(1) Buffer(int capacity)\n(2) Buffer(Pool pool, int capacity)\n\n\
               Dependencies:\nclass io.Pool: no public constructors\n\n\
               Respond with the number of the chosen constructor.\n"
            .into(),
        assistant: "1".into(),
    }]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::extract;
    use crate::gateway::{GatewayConfig, StubEntry, StubScript};
    use crate::tdg;

    fn pair_model() -> ApiModel {
        let outer = "package t; public class Outer { public Outer(Inner a, Inner b) { } public Outer(String s) { } }";
        let inner = "package t; public class Inner { public Inner(float v) { } public Inner(long v) { } public Inner(String s, long p) { } }";
        let user = r#"package t;
public class Use {
    public Use() { }
    public int f(Outer x, Outer y, int k) {
        if (k > 0) { return 1; }
        return 0;
    }
}
"#;
        extract(
            vec![
                ("t/Outer.java".into(), outer.into()),
                ("t/Inner.java".into(), inner.into()),
                ("t/Use.java".into(), user.into()),
            ],
            "t",
            "1",
            1,
        )
        .model
    }

    fn gateway_with(select: Vec<(&str, StubEntry)>) -> Gateway {
        let mut stub = StubScript::default();
        for (k, v) in select {
            stub.select.insert(k.into(), v);
        }
        Gateway::new(GatewayConfig::stub_only(stub))
    }

    #[test]
    fn parse_selection_takes_first_in_range_integer() {
        assert_eq!(parse_selection("0 7 2", 3), Some(1));
        assert_eq!(parse_selection("I would pick (2) here", 3), Some(1));
        assert_eq!(parse_selection("none of these", 3), None);
        assert_eq!(parse_selection("12", 3), None);
        assert_eq!(parse_selection("1", 1), Some(0));
    }

    #[test]
    fn plans_nested_references_with_chained_names_and_counts_calls() {
        let model = pair_model();
        let graph = tdg::build(&model);
        let gw = gateway_with(vec![(
            "t.Use::f(t.Outer,t.Outer,int)",
            StubEntry::One("1".into()),
        )]);
        let selector = Selector {
            gateway: &gw,
            model: &model,
            tdg: &graph,
            few_shot: &[],
        };
        let method = model.find_method("t.Use::f(t.Outer,t.Outer,int)").unwrap();
        let plan = selector.plan(method).unwrap();
        // receiver (auto: Use has one ctor), x, y, k
        assert_eq!(plan.roots.len(), 4);
        assert_eq!(plan.roots[0].var_name, "receiver");
        assert!(matches!(plan.roots[3].binding, Binding::Literal));
        // x -> Outer(Inner a, Inner b); children x_a, x_b each pick Inner.
        let Binding::Constructor { args, .. } = &plan.roots[1].binding else {
            panic!("x not constructed");
        };
        assert_eq!(args[0].var_name, "x_a");
        assert_eq!(args[1].var_name, "x_b");
        let Binding::Constructor { args: inner_args, ctor } = &args[0].binding else {
            panic!("x_a not constructed");
        };
        assert_eq!(ctor.signature, "Inner(float v)");
        assert_eq!(inner_args[0].var_name, "x_a_v");
        assert!(matches!(inner_args[0].binding, Binding::Literal));
        // Outer twice + Inner four times = 6 selection calls; receiver auto.
        assert_eq!(plan.stats.select_calls, 6);
        assert_eq!(plan.stats.auto_selected, 1);
        assert_eq!(gw.stage_calls(Stage::Select), 6);
    }

    #[test]
    fn garbage_selection_falls_back_to_fewest_reference_params() {
        let model = pair_model();
        let graph = tdg::build(&model);
        let gw = gateway_with(vec![(
            "t.Use::f(t.Outer,t.Outer,int)",
            StubEntry::One("no idea".into()),
        )]);
        let selector = Selector {
            gateway: &gw,
            model: &model,
            tdg: &graph,
            few_shot: &[],
        };
        let method = model.find_method("t.Use::f(t.Outer,t.Outer,int)").unwrap();
        let plan = selector.plan(method).unwrap();
        // Outer(String s) has zero reference params; chosen over Outer(Inner, Inner).
        let Binding::Constructor { ctor, .. } = &plan.roots[1].binding else {
            panic!("x not constructed");
        };
        assert_eq!(ctor.signature, "Outer(java.lang.String s)");
        assert!(plan.stats.fallbacks >= 1);
    }

    #[test]
    fn self_referential_constructor_goes_opaque() {
        let node = "package t; public class Node { public Node(Node next) { } }";
        let user = r#"package t;
public class U {
    public U() { }
    public int f(Node n, int k) { if (k > 0) { return 1; } return 0; }
}
"#;
        let model = extract(
            vec![
                ("t/Node.java".into(), node.into()),
                ("t/U.java".into(), user.into()),
            ],
            "t",
            "1",
            1,
        )
        .model;
        let graph = tdg::build(&model);
        let gw = gateway_with(vec![]);
        let selector = Selector {
            gateway: &gw,
            model: &model,
            tdg: &graph,
            few_shot: &[],
        };
        let method = model.find_method("t.U::f(t.Node,int)").unwrap();
        let plan = selector.plan(method).unwrap();
        let Binding::Constructor { args, .. } = &plan.roots[1].binding else {
            panic!("n not constructed");
        };
        assert!(matches!(args[0].binding, Binding::Opaque));
        assert_eq!(plan.stats.opaque_slots, 1);
        // Node has a single constructor, so no selection calls at all.
        assert_eq!(gw.stage_calls(Stage::Select), 0);
    }

    #[test]
    fn prompt_lists_candidates_and_dependencies() {
        let model = pair_model();
        let method = model.find_method("t.Use::f(t.Outer,t.Outer,int)").unwrap();
        let graph = tdg::build(&model);
        let candidates = graph.constructor_candidates(&model, "t.Outer");
        let prompt = build_select_prompt(method, &model, "x", "t.Outer", &candidates);
        assert!(prompt.contains("Constructor selection"));
        assert!(prompt.contains("(1) Outer(t.Inner a, t.Inner b)"));
        assert!(prompt.contains("(2) Outer(java.lang.String s)"));
        assert!(prompt.contains("class t.Inner: Constructors: Inner(float v); Inner(long v); Inner(java.lang.String s, long p)"));
    }

    #[test]
    fn external_types_without_constructors_go_opaque() {
        let holder = r#"package t;
public class Holder {
    public Holder() { }
    public int tap(java.lang.Number n, int k) {
        if (k > 0) { return 1; }
        return 0;
    }
}
"#;
        let model = extract(vec![("t/Holder.java".into(), holder.into())], "t", "1", 1).model;
        let graph = tdg::build(&model);
        let gw = gateway_with(vec![]);
        let selector = Selector {
            gateway: &gw,
            model: &model,
            tdg: &graph,
            few_shot: &[],
        };
        let method = model.find_method("t.Holder::tap(java.lang.Number,int)").unwrap();
        let plan = selector.plan(method).unwrap();
        assert!(matches!(plan.roots[1].binding, Binding::Opaque));
    }
}
