//! Type dependency graph: which types a constructor chain can need.
//!
//! Nodes are model types. A usage edge T -> U means some constructor of T
//! takes a U. A subtype edge (S, T) means S extends or implements T, so S's
//! constructors can stand in where a T is needed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::{ApiModel, ConstructorDescriptor};

#[derive(Debug, Clone, Default)]
pub struct Tdg {
    pub nodes: BTreeSet<String>,
    /// (from, to, via constructor signature)
    pub usage_edges: BTreeSet<(String, String, String)>,
    /// (subtype, supertype)
    pub subtype_edges: BTreeSet<(String, String)>,
}

pub fn build(model: &ApiModel) -> Tdg {
    let mut tdg = Tdg::default();
    for (fqn, ty) in &model.types {
        tdg.nodes.insert(fqn.clone());
        for sup in &ty.supertypes {
            if model.types.contains_key(sup) {
                tdg.subtype_edges.insert((fqn.clone(), sup.clone()));
            }
        }
        for ctor in &ty.constructors {
            for p in &ctor.params {
                if p.is_reference && model.types.contains_key(&p.type_name) {
                    tdg.usage_edges.insert((
                        fqn.clone(),
                        p.type_name.clone(),
                        ctor.signature.clone(),
                    ));
                }
            }
        }
    }
    tdg
}

/// Reference parameter types a method needs, in declaration order.
pub fn seeds_for(model: &ApiModel) -> BTreeSet<String> {
    let mut seeds = BTreeSet::new();
    for m in &model.methods {
        if !m.is_static {
            seeds.insert(m.owner_fqn.clone());
        }
        for p in &m.params {
            if p.is_reference {
                seeds.insert(p.type_name.clone());
            }
        }
    }
    seeds
}

impl Tdg {
    /// Direct subtypes registered for `fqn`.
    pub fn subtypes_of(&self, fqn: &str) -> Vec<String> {
        self.subtype_edges
            .iter()
            .filter(|(_, sup)| sup == fqn)
            .map(|(sub, _)| sub.clone())
            .collect()
    }

    /// Successor types a walk must visit after `fqn`: its subtypes plus the
    /// reference parameters of its own constructors.
    pub fn successors(&self, fqn: &str) -> Vec<String> {
        let mut out = BTreeSet::new();
        for (sub, sup) in &self.subtype_edges {
            if sup == fqn {
                out.insert(sub.clone());
            }
        }
        for (from, to, _) in &self.usage_edges {
            if from == fqn {
                out.insert(to.clone());
            }
        }
        out.into_iter().collect()
    }

    /// Types reachable from the seeds, in a deterministic order that places
    /// a type before anything its constructors need (ties broken by
    /// discovery order). Cycles are broken at the edge that closes them.
    /// With a depth bound, returns whether anything was cut off.
    pub fn reachable_types(
        &self,
        seeds: &BTreeSet<String>,
        depth_bound: Option<usize>,
    ) -> (Vec<String>, bool) {
        // Breadth-first discovery, indexed for tie-breaking.
        let mut discovery: BTreeMap<String, usize> = BTreeMap::new();
        let mut queue: VecDeque<(String, usize)> = VecDeque::new();
        let mut truncated = false;
        for s in seeds {
            if self.nodes.contains(s) && !discovery.contains_key(s) {
                discovery.insert(s.clone(), discovery.len());
                queue.push_back((s.clone(), 0));
            }
        }
        while let Some((cur, depth)) = queue.pop_front() {
            for next in self.successors(&cur) {
                if discovery.contains_key(&next) {
                    continue;
                }
                if let Some(bound) = depth_bound {
                    if depth + 1 > bound {
                        truncated = true;
                        continue;
                    }
                }
                discovery.insert(next.clone(), discovery.len());
                queue.push_back((next, depth + 1));
            }
        }

        // Drop the edges that close cycles, walking in discovery order.
        let ordered: Vec<String> = {
            let mut v: Vec<(usize, String)> =
                discovery.iter().map(|(n, i)| (*i, n.clone())).collect();
            v.sort();
            v.into_iter().map(|(_, n)| n).collect()
        };
        let mut kept_edges: BTreeSet<(String, String)> = BTreeSet::new();
        let mut color: BTreeMap<String, u8> = BTreeMap::new(); // 1 on stack, 2 done
        for root in &ordered {
            if color.contains_key(root) {
                continue;
            }
            // Iterative DFS with an explicit edge cursor.
            let mut stack: Vec<(String, Vec<String>, usize)> = Vec::new();
            color.insert(root.clone(), 1);
            stack.push((root.clone(), self.successors(root), 0));
            while let Some((node, succs, idx)) = stack.last_mut() {
                if *idx >= succs.len() {
                    color.insert(node.clone(), 2);
                    stack.pop();
                    continue;
                }
                let next = succs[*idx].clone();
                *idx += 1;
                if !discovery.contains_key(&next) {
                    continue;
                }
                match color.get(&next) {
                    Some(1) => {} // back edge: skip, breaking the cycle
                    Some(_) => {
                        kept_edges.insert((node.clone(), next));
                    }
                    None => {
                        kept_edges.insert((node.clone(), next.clone()));
                        color.insert(next.clone(), 1);
                        let s = self.successors(&next);
                        stack.push((next, s, 0));
                    }
                }
            }
        }

        // Kahn's ordering over the remaining acyclic edges; the ready set is
        // keyed by discovery index so runs are reproducible.
        let mut indegree: BTreeMap<&str, usize> =
            ordered.iter().map(|n| (n.as_str(), 0)).collect();
        for (_, to) in &kept_edges {
            *indegree.get_mut(to.as_str()).unwrap() += 1;
        }
        let mut ready: BTreeSet<(usize, &str)> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| (discovery[*n], *n))
            .collect();
        let mut out = Vec::with_capacity(ordered.len());
        while let Some((idx, node)) = ready.iter().next().cloned() {
            ready.remove(&(idx, node));
            out.push(node.to_string());
            for (from, to) in &kept_edges {
                if from == node {
                    let d = indegree.get_mut(to.as_str()).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.insert((discovery[to.as_str()], to.as_str()));
                    }
                }
            }
        }
        // Anything left sits on a broken cycle remnant; append by discovery.
        for n in &ordered {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
        (out, truncated)
    }

    /// Public constructors selectable for a slot of type `fqn`: its own,
    /// then those of every transitive subtype in name order.
    pub fn constructor_candidates<'m>(
        &self,
        model: &'m ApiModel,
        fqn: &str,
    ) -> Vec<&'m ConstructorDescriptor> {
        let mut types = vec![fqn.to_string()];
        let mut seen: BTreeSet<String> = types.iter().cloned().collect();
        let mut frontier = vec![fqn.to_string()];
        while let Some(cur) = frontier.pop() {
            for sub in self.subtypes_of(&cur) {
                if seen.insert(sub.clone()) {
                    types.push(sub.clone());
                    frontier.push(sub);
                }
            }
        }
        let (first, rest) = types.split_first().unwrap();
        let mut rest: Vec<&String> = rest.iter().collect();
        rest.sort();
        let mut out = Vec::new();
        for t in std::iter::once(first).chain(rest.into_iter()) {
            if let Some(ty) = model.get_type(t) {
                if ty.is_interface || ty.is_abstract {
                    continue;
                }
                out.extend(ty.constructors.iter().filter(|c| c.is_public));
            }
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph tdg {\n");
        for n in &self.nodes {
            s.push_str(&format!("  \"{n}\";\n"));
        }
        for (from, to, via) in &self.usage_edges {
            s.push_str(&format!(
                "  \"{from}\" -> \"{to}\" [label=\"{}\"];\n",
                via.replace('"', "'")
            ));
        }
        for (sub, sup) in &self.subtype_edges {
            s.push_str(&format!("  \"{sub}\" -> \"{sup}\" [style=dashed];\n"));
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::extract;

    fn diamond_model() -> ApiModel {
        let a = "package g; public class A { public A(B b, C c) { } }";
        let b = "package g; public class B { public B(D d) { } }";
        let c = "package g; public class C { public C(D d) { } }";
        let d = "package g; public class D { public D() { } }";
        let user = r#"package g;
public class User {
    public User() { }
    public int use(A a, int k) {
        if (k > 0) { return 1; }
        return 0;
    }
}
"#;
        extract(
            vec![
                ("g/A.java".into(), a.into()),
                ("g/B.java".into(), b.into()),
                ("g/C.java".into(), c.into()),
                ("g/D.java".into(), d.into()),
                ("g/User.java".into(), user.into()),
            ],
            "g",
            "1",
            1,
        )
        .model
    }

    #[test]
    fn diamond_orders_parents_before_children() {
        let model = diamond_model();
        let tdg = build(&model);
        let seeds: BTreeSet<String> = ["g.A".to_string()].into();
        let (order, truncated) = tdg.reachable_types(&seeds, None);
        assert!(!truncated);
        assert_eq!(order, vec!["g.A", "g.B", "g.C", "g.D"]);
    }

    #[test]
    fn depth_bound_truncates_and_flags() {
        let model = diamond_model();
        let tdg = build(&model);
        let seeds: BTreeSet<String> = ["g.A".to_string()].into();
        let (order, truncated) = tdg.reachable_types(&seeds, Some(1));
        assert!(truncated);
        assert_eq!(order, vec!["g.A", "g.B", "g.C"]);
    }

    #[test]
    fn self_recursive_constructor_terminates() {
        let node = "package g; public class Node { public Node(Node next) { } public Node() { } }";
        let user = r#"package g;
public class U {
    public U() { }
    public int f(Node n, int k) { if (k > 0) { return 1; } return 0; }
}
"#;
        let model = extract(
            vec![
                ("g/Node.java".into(), node.into()),
                ("g/U.java".into(), user.into()),
            ],
            "g",
            "1",
            1,
        )
        .model;
        let tdg = build(&model);
        let seeds: BTreeSet<String> = ["g.Node".to_string()].into();
        let (order, _) = tdg.reachable_types(&seeds, None);
        assert_eq!(order, vec!["g.Node"]);
    }

    #[test]
    fn candidates_include_subtype_constructors_after_own() {
        let base = "package h; public class Base { public Base(String s) { } public Base(int a, int b) { } }";
        let derived = "package h; public class Derived extends Base { public Derived(float f) { } Derived(double hidden) { } }";
        let user = r#"package h;
public class U {
    public U() { }
    public int f(Base b, int k) { if (k > 0) { return 1; } return 0; }
}
"#;
        let model = extract(
            vec![
                ("h/Base.java".into(), base.into()),
                ("h/Derived.java".into(), derived.into()),
                ("h/U.java".into(), user.into()),
            ],
            "h",
            "1",
            1,
        )
        .model;
        let tdg = build(&model);
        let sigs: Vec<&str> = tdg
            .constructor_candidates(&model, "h.Base")
            .iter()
            .map(|c| c.signature.as_str())
            .collect();
        assert_eq!(
            sigs,
            vec![
                "Base(java.lang.String s)",
                "Base(int a, int b)",
                "Derived(float f)",
            ]
        );
    }

    #[test]
    fn seeds_cover_instance_owners_and_reference_params() {
        let model = diamond_model();
        let seeds = seeds_for(&model);
        // use(A, int) is an instance method of User taking an A.
        assert!(seeds.contains("g.A"));
        assert!(seeds.contains("g.User"));
        assert_eq!(seeds.len(), 2);
    }

    #[test]
    fn dot_rendering_lists_nodes_and_edges() {
        let model = diamond_model();
        let tdg = build(&model);
        let dot = tdg.to_dot();
        assert!(dot.contains("\"g.A\" -> \"g.B\""));
        assert!(dot.contains("style=dashed") || tdg.subtype_edges.is_empty());
    }
}
