//! Builds the API model from library sources.
//!
//! Files parse independently (in parallel when workers allow), then merge
//! into a class table and model. Files that fail to parse are skipped with
//! a diagnostic rather than failing the whole extraction.

use std::collections::BTreeSet;
use std::path::Path;

use crate::lang::ast::{MethodDecl, Unit};
use crate::lang::parser::parse_unit;
use crate::lang::sema::{infer_calls, ClassTable, RTy};
use crate::lang::sites::count_sites;
use crate::model::{
    method_id, render_signature, ApiModel, ConstructorDescriptor, DocThrow, MethodUnderTest,
    ParameterDescriptor, TypeDescriptor,
};
use crate::par::map_items;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractDiag {
    pub path: String,
    pub line: u32,
    pub message: String,
}

/// A public method left out of the tested set, with the rule that removed it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExcludedMethod {
    pub method_id: String,
    pub reason: String,
}

pub struct Extraction {
    pub model: ApiModel,
    pub units: Vec<Unit>,
    pub table: ClassTable,
    pub diagnostics: Vec<ExtractDiag>,
    pub excluded: Vec<ExcludedMethod>,
}

/// Reads every .java file under `root`, sorted by relative path.
pub fn load_sources(root: &Path) -> std::io::Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    collect_java(root, root, &mut files)?;
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

fn collect_java(
    root: &Path,
    dir: &Path,
    out: &mut Vec<(String, String)>,
) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_java(root, &path, out)?;
        } else if path.extension().is_some_and(|e| e == "java") {
            let rel = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .to_string_lossy()
                .replace('\\', "/");
            out.push((rel, std::fs::read_to_string(&path)?));
        }
    }
    Ok(())
}

/// Parses sources and builds the model over the kept public methods.
pub fn extract(
    sources: Vec<(String, String)>,
    library: &str,
    version: &str,
    workers: usize,
) -> Extraction {
    let parsed = map_items(sources, workers, |(path, src)| {
        let unit = parse_unit(&path, &src);
        (path, unit)
    });

    let mut units = Vec::new();
    let mut diagnostics = Vec::new();
    for (path, result) in parsed {
        match result {
            Ok(unit) => units.push(unit),
            Err(e) => diagnostics.push(ExtractDiag {
                path,
                line: e.line,
                message: e.message,
            }),
        }
    }

    let table = ClassTable::build(&units);
    let mut model = ApiModel {
        library: library.to_string(),
        version: version.to_string(),
        types: Default::default(),
        methods: Vec::new(),
    };

    // Declared types.
    let mut referenced: BTreeSet<String> = BTreeSet::new();
    for unit in &units {
        let pkg = unit.package.clone().unwrap_or_default();
        for decl in &unit.types {
            let fqn = if pkg.is_empty() {
                decl.name.clone()
            } else {
                format!("{}.{}", pkg, decl.name)
            };
            let Some(info) = table.get(&fqn) else { continue };
            let mut supertypes = Vec::new();
            if let Some(s) = &info.super_fqn {
                supertypes.push(s.clone());
                referenced.insert(s.clone());
            }
            for i in &info.interfaces {
                supertypes.push(i.clone());
                referenced.insert(i.clone());
            }
            let constructors = info
                .ctors
                .iter()
                .map(|c| {
                    let params = params_of(&c.params);
                    for p in &params {
                        if p.is_reference {
                            referenced.insert(p.type_name.clone());
                        }
                    }
                    ConstructorDescriptor {
                        owner: fqn.clone(),
                        is_public: c.is_public,
                        signature: render_signature(&info.simple, &params, c.variadic),
                        params,
                        variadic: c.variadic,
                        decl_index: c.decl_index,
                    }
                })
                .collect();
            model.types.insert(
                fqn.clone(),
                TypeDescriptor {
                    fqn,
                    is_interface: info.is_interface,
                    is_abstract: info.is_abstract,
                    external: false,
                    supertypes,
                    constructors,
                },
            );
        }
    }

    // Candidate methods: the public surface, then the exclusion rules.
    let mut excluded = Vec::new();
    for unit in &units {
        let pkg = unit.package.clone().unwrap_or_default();
        for decl in &unit.types {
            let fqn = if pkg.is_empty() {
                decl.name.clone()
            } else {
                format!("{}.{}", pkg, decl.name)
            };
            for m in &decl.methods {
                if !m.is_public {
                    continue;
                }
                let params = params_of_ast(&table, unit, m);
                let ptypes: Vec<String> = params.iter().map(|p| p.type_name.clone()).collect();
                let id = method_id(&fqn, &m.name, &ptypes);
                let sites = m.body.as_ref().map(count_sites).unwrap_or(0) as usize;
                if decl.is_interface || decl.is_abstract {
                    excluded.push(ExcludedMethod {
                        method_id: id,
                        reason: "abstract-owner".into(),
                    });
                    continue;
                }
                if sites == 0 {
                    excluded.push(ExcludedMethod {
                        method_id: id,
                        reason: "zero-branch-sites".into(),
                    });
                    continue;
                }
                if is_object_inherited(&m.name, params.len()) {
                    excluded.push(ExcludedMethod {
                        method_id: id,
                        reason: "object-inherited".into(),
                    });
                    continue;
                }
                for p in &params {
                    if p.is_reference {
                        referenced.insert(p.type_name.clone());
                    }
                }
                let throws = m
                    .throws
                    .iter()
                    .map(|t| table.resolve_name(unit, t))
                    .collect();
                let doc_throws = m
                    .doc
                    .as_deref()
                    .map(|d| doc_exceptions(d, &table, unit))
                    .unwrap_or_default();
                model.methods.push(MethodUnderTest {
                    method_id: id,
                    owner_fqn: fqn.clone(),
                    name: m.name.clone(),
                    is_static: m.is_static,
                    return_type: table.resolve_ty(unit, &m.ret).display(),
                    params,
                    throws,
                    doc_throws,
                    source: unit.src[m.span.0..m.span.1].to_string(),
                    line: m.line,
                    branch_sites: sites,
                });
            }
        }
    }
    model.methods.sort_by(|a, b| a.method_id.cmp(&b.method_id));
    excluded.sort_by(|a, b| a.method_id.cmp(&b.method_id));

    // Referenced types without a declared entry become external entries.
    for fqn in referenced {
        if model.types.contains_key(&fqn) {
            continue;
        }
        let (is_interface, is_abstract) = match table.get(&fqn) {
            Some(info) => (info.is_interface, info.is_abstract),
            None => (false, false),
        };
        model.types.insert(
            fqn.clone(),
            TypeDescriptor {
                fqn: fqn.clone(),
                is_interface,
                is_abstract,
                external: true,
                supertypes: table
                    .get(&fqn)
                    .and_then(|i| i.super_fqn.clone())
                    .into_iter()
                    .collect(),
                constructors: table
                    .get(&fqn)
                    .map(|info| {
                        info.ctors
                            .iter()
                            .map(|c| {
                                let params = params_of(&c.params);
                                ConstructorDescriptor {
                                    owner: fqn.clone(),
                                    is_public: c.is_public,
                                    signature: render_signature(
                                        &info.simple,
                                        &params,
                                        c.variadic,
                                    ),
                                    params,
                                    variadic: c.variadic,
                                    decl_index: c.decl_index,
                                }
                            })
                            .collect()
                    })
                    .unwrap_or_default(),
            },
        );
    }

    Extraction {
        model,
        units,
        table,
        diagnostics,
        excluded,
    }
}

fn params_of(params: &[(String, RTy)]) -> Vec<ParameterDescriptor> {
    params
        .iter()
        .map(|(name, ty)| ParameterDescriptor {
            name: name.clone(),
            type_name: ty.display(),
            is_reference: matches!(ty, RTy::Class(_)),
        })
        .collect()
}

fn params_of_ast(table: &ClassTable, unit: &Unit, m: &MethodDecl) -> Vec<ParameterDescriptor> {
    m.params
        .iter()
        .map(|p| {
            let ty = table.resolve_ty(unit, &p.ty);
            ParameterDescriptor {
                name: p.name.clone(),
                type_name: ty.display(),
                is_reference: matches!(ty, RTy::Class(_)),
            }
        })
        .collect()
}

fn is_object_inherited(name: &str, argc: usize) -> bool {
    matches!(
        (name, argc),
        ("equals", 1) | ("toString", 0) | ("hashCode", 0)
    )
}

/// Pulls @throws entries out of a doc comment with their descriptions.
/// A description continues until the next @tag or the end of the block.
pub fn doc_exceptions(doc: &str, table: &ClassTable, unit: &Unit) -> Vec<DocThrow> {
    let mut out = Vec::new();
    let mut current: Option<(String, Vec<String>)> = None;
    for raw in doc.lines() {
        let line = raw.trim_start().trim_start_matches('*').trim();
        if let Some(rest) = line
            .strip_prefix("@throws")
            .or_else(|| line.strip_prefix("@exception"))
        {
            if let Some((name, desc)) = current.take() {
                out.push(finish(name, desc, table, unit));
            }
            let rest = rest.trim();
            let mut split = rest.splitn(2, char::is_whitespace);
            let name = split.next().unwrap_or("").to_string();
            let first = split.next().unwrap_or("").trim().to_string();
            if !name.is_empty() {
                let mut desc = Vec::new();
                if !first.is_empty() {
                    desc.push(first);
                }
                current = Some((name, desc));
            }
        } else if line.starts_with('@') {
            if let Some((name, desc)) = current.take() {
                out.push(finish(name, desc, table, unit));
            }
        } else if let Some((_, desc)) = current.as_mut() {
            if !line.is_empty() && line != "/" {
                desc.push(line.to_string());
            }
        }
    }
    if let Some((name, desc)) = current.take() {
        out.push(finish(name, desc, table, unit));
    }
    out
}

fn finish(name: String, desc: Vec<String>, table: &ClassTable, unit: &Unit) -> DocThrow {
    let cleaned = name.trim_end_matches("*/").trim().to_string();
    DocThrow {
        exception: table.resolve_name(unit, &cleaned),
        description: desc.join(" ").trim_end_matches("*/").trim().to_string(),
    }
}

/// Sources the methods a body calls directly (depth 1), deduplicated in
/// appearance order. Builtin or unresolvable callees come back as
/// diagnostics instead of sources.
pub fn collect_callee_sources(
    extraction: &Extraction,
    method: &MethodUnderTest,
) -> (Vec<(String, String)>, Vec<String>) {
    let mut sources = Vec::new();
    let mut notes = Vec::new();
    let Some((unit, decl)) = find_decl(extraction, &method.owner_fqn, method) else {
        return (sources, notes);
    };
    let (calls, _) = infer_calls(&extraction.table, unit, &method.owner_fqn, decl);
    let mut seen = BTreeSet::new();
    for call in calls {
        let key = (call.owner_fqn.clone(), call.name.clone(), call.arity);
        if !seen.insert(key) {
            continue;
        }
        if !call.resolved {
            notes.push(format!(
                "callee {}.{} is outside the library; skipped",
                call.owner_fqn, call.name
            ));
            continue;
        }
        match find_method_source(extraction, &call.owner_fqn, &call.name, call.arity) {
            Some((owner, src)) => sources.push((format!("{}::{}", owner, call.name), src)),
            None => notes.push(format!(
                "no source for callee {}.{}; skipped",
                call.owner_fqn, call.name
            )),
        }
    }
    (sources, notes)
}

fn find_decl<'a>(
    extraction: &'a Extraction,
    owner: &str,
    method: &MethodUnderTest,
) -> Option<(&'a Unit, &'a MethodDecl)> {
    for unit in &extraction.units {
        let pkg = unit.package.clone().unwrap_or_default();
        for decl in &unit.types {
            let fqn = if pkg.is_empty() {
                decl.name.clone()
            } else {
                format!("{}.{}", pkg, decl.name)
            };
            if fqn != owner {
                continue;
            }
            for m in &decl.methods {
                if m.name == method.name && m.params.len() == method.params.len() {
                    let ptypes: Vec<String> = m
                        .params
                        .iter()
                        .map(|p| extraction.table.resolve_ty(unit, &p.ty).display())
                        .collect();
                    if method_id(&fqn, &m.name, &ptypes) == method.method_id {
                        return Some((unit, m));
                    }
                }
            }
        }
    }
    None
}

fn find_method_source(
    extraction: &Extraction,
    owner: &str,
    name: &str,
    arity: usize,
) -> Option<(String, String)> {
    for unit in &extraction.units {
        let pkg = unit.package.clone().unwrap_or_default();
        for decl in &unit.types {
            let fqn = if pkg.is_empty() {
                decl.name.clone()
            } else {
                format!("{}.{}", pkg, decl.name)
            };
            if fqn != owner {
                continue;
            }
            // Variadic methods accept any arity at or above the fixed count.
            if let Some(m) = decl.methods.iter().find(|m| {
                m.name == name
                    && (m.params.len() == arity
                        || (m.params.last().is_some_and(|p| p.variadic)
                            && arity >= m.params.len().saturating_sub(1)))
            }) {
                return Some((fqn, unit.src[m.span.0..m.span.1].to_string()));
            }
        }
    }
    None
}

/// Looks up the AST declaration backing a model method; used by the
/// instrumenter to enumerate its branch sites.
pub fn method_decl<'a>(
    extraction: &'a Extraction,
    method: &MethodUnderTest,
) -> Option<(&'a Unit, &'a MethodDecl)> {
    find_decl(extraction, &method.owner_fqn, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sources() -> Vec<(String, String)> {
        let calc = r#"package demo;

public class Calc {
    int bias;

    public Calc(int bias) { this.bias = bias; }

    /**
     * Scales a value.
     *
     * @param v the input
     * @throws IllegalArgumentException if v is negative
     *         or otherwise out of range
     * @return the scaled value
     */
    public int scale(int v) throws IllegalArgumentException {
        if (v < 0) { throw new IllegalArgumentException("negative"); }
        return v * this.bias;
    }

    public int passthrough(int v) { return v; }

    public boolean equals(Calc other) {
        if (other == null) { return false; }
        return this.bias == other.bias;
    }

    public int chained(int v) {
        if (v > 2) { return this.scale(v); }
        return this.passthrough(v);
    }
}
"#;
        let shape = r#"package demo;

public interface Shape {
    double area(double scale);
}
"#;
        vec![
            ("demo/Calc.java".into(), calc.into()),
            ("demo/Shape.java".into(), shape.into()),
        ]
    }

    #[test]
    fn extracts_kept_methods_and_exclusions() {
        let ex = extract(sources(), "demo", "1.0", 1);
        assert!(ex.diagnostics.is_empty());
        let ids: Vec<&str> = ex.model.methods.iter().map(|m| m.method_id.as_str()).collect();
        assert_eq!(ids, vec!["demo.Calc::chained(int)", "demo.Calc::scale(int)"]);
        let reasons: Vec<(&str, &str)> = ex
            .excluded
            .iter()
            .map(|e| (e.method_id.as_str(), e.reason.as_str()))
            .collect();
        assert!(reasons.contains(&("demo.Calc::passthrough(int)", "zero-branch-sites")));
        assert!(reasons.contains(&("demo.Calc::equals(demo.Calc)", "object-inherited")));
        assert!(reasons.contains(&("demo.Shape::area(double)", "abstract-owner")));
    }

    #[test]
    fn doc_throws_resolve_and_join_continuations() {
        let ex = extract(sources(), "demo", "1.0", 1);
        let scale = ex.model.find_method("demo.Calc::scale(int)").unwrap();
        assert_eq!(scale.doc_throws.len(), 1);
        assert_eq!(
            scale.doc_throws[0].exception,
            "java.lang.IllegalArgumentException"
        );
        assert_eq!(
            scale.doc_throws[0].description,
            "if v is negative or otherwise out of range"
        );
        assert_eq!(scale.throws, vec!["java.lang.IllegalArgumentException"]);
    }

    #[test]
    fn method_source_includes_doc_comment() {
        let ex = extract(sources(), "demo", "1.0", 1);
        let scale = ex.model.find_method("demo.Calc::scale(int)").unwrap();
        assert!(scale.source.starts_with("/**"));
        assert!(scale.source.contains("public int scale"));
        assert!(scale.source.ends_with('}'));
    }

    #[test]
    fn broken_file_is_skipped_with_diagnostic() {
        let mut srcs = sources();
        srcs.push(("demo/Broken.java".into(), "public class {".into()));
        let ex = extract(srcs, "demo", "1.0", 1);
        assert_eq!(ex.diagnostics.len(), 1);
        assert_eq!(ex.diagnostics[0].path, "demo/Broken.java");
        assert_eq!(ex.model.methods.len(), 2);
    }

    #[test]
    fn callee_sources_come_back_depth_one_in_order() {
        let ex = extract(sources(), "demo", "1.0", 1);
        let chained = ex.model.find_method("demo.Calc::chained(int)").unwrap();
        let (sources, notes) = collect_callee_sources(&ex, chained);
        assert!(notes.is_empty());
        let ids: Vec<&str> = sources.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["demo.Calc::scale", "demo.Calc::passthrough"]);
        assert!(sources[0].1.contains("public int scale"));
    }

    #[test]
    fn extraction_is_stable_across_worker_counts() {
        let a = extract(sources(), "demo", "1.0", 1);
        let b = extract(sources(), "demo", "1.0", 4);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn external_reference_types_get_entries() {
        let src = r#"package demo;

public class Holder {
    public Holder() { }
    public int tap(java.lang.Number n, int k) {
        if (k > 0) { return k; }
        return 0;
    }
}
"#;
        let ex = extract(vec![("demo/Holder.java".into(), src.into())], "demo", "1", 1);
        let n = ex.model.get_type("java.lang.Number").unwrap();
        assert!(n.external);
        assert!(n.constructors.is_empty());
    }
}
