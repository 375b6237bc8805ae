//! Serializable API model: the library surface the pipeline works from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDescriptor {
    pub name: String,
    /// Rendered type: "int", "long[]", "java.lang.String", or a class fqn.
    pub type_name: String,
    /// True when the type requires constructor planning (class types).
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructorDescriptor {
    pub owner: String,
    pub is_public: bool,
    pub params: Vec<ParameterDescriptor>,
    pub variadic: bool,
    /// Position among the owner's constructors in declaration order.
    pub decl_index: usize,
    /// Rendered signature, e.g. "Apcomplex(Apfloat real, Apfloat imag)".
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDescriptor {
    pub fqn: String,
    pub is_interface: bool,
    pub is_abstract: bool,
    /// True for types without source in this library.
    pub external: bool,
    /// Direct superclass (if any) followed by implemented interfaces.
    pub supertypes: Vec<String>,
    pub constructors: Vec<ConstructorDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocThrow {
    pub exception: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodUnderTest {
    /// "{owner}::{name}({param types comma-joined})"
    pub method_id: String,
    pub owner_fqn: String,
    pub name: String,
    pub is_static: bool,
    pub return_type: String,
    pub params: Vec<ParameterDescriptor>,
    /// Resolved fqns from the throws clause.
    pub throws: Vec<String>,
    /// Exceptions documented on the method with their descriptions.
    pub doc_throws: Vec<DocThrow>,
    /// Full method text including its doc comment.
    pub source: String,
    pub line: u32,
    pub branch_sites: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiModel {
    pub library: String,
    pub version: String,
    pub types: BTreeMap<String, TypeDescriptor>,
    pub methods: Vec<MethodUnderTest>,
}

#[derive(Debug)]
pub struct ModelError(pub String);

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ModelError {}

pub fn method_id(owner: &str, name: &str, param_types: &[String]) -> String {
    format!("{}::{}({})", owner, name, param_types.join(","))
}

impl MethodUnderTest {
    pub fn simple_owner(&self) -> &str {
        self.owner_fqn.rsplit('.').next().unwrap_or(&self.owner_fqn)
    }
}

impl ApiModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (key, ty) in &self.types {
            if key != &ty.fqn {
                return Err(ModelError(format!(
                    "type key {} does not match fqn {}",
                    key, ty.fqn
                )));
            }
            for (i, c) in ty.constructors.iter().enumerate() {
                if c.owner != ty.fqn {
                    return Err(ModelError(format!(
                        "constructor owner {} under type {}",
                        c.owner, ty.fqn
                    )));
                }
                if c.decl_index != i {
                    return Err(ModelError(format!(
                        "constructor {} of {} out of declaration order",
                        i, ty.fqn
                    )));
                }
                if c.variadic && c.params.is_empty() {
                    return Err(ModelError(format!(
                        "variadic constructor of {} has no parameters",
                        ty.fqn
                    )));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.methods {
            if !self.types.contains_key(&m.owner_fqn) {
                return Err(ModelError(format!(
                    "method {} references unknown owner {}",
                    m.method_id, m.owner_fqn
                )));
            }
            let types: Vec<String> = m.params.iter().map(|p| p.type_name.clone()).collect();
            let expect = method_id(&m.owner_fqn, &m.name, &types);
            if m.method_id != expect {
                return Err(ModelError(format!(
                    "method id {} does not match signature {}",
                    m.method_id, expect
                )));
            }
            if !seen.insert(&m.method_id) {
                return Err(ModelError(format!("duplicate method id {}", m.method_id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<ApiModel, ModelError> {
        let model: ApiModel =
            serde_json::from_str(s).map_err(|e| ModelError(format!("bad model JSON: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn store(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| ModelError(format!("write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<ApiModel, ModelError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| ModelError(format!("read {}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn get_type(&self, fqn: &str) -> Option<&TypeDescriptor> {
        self.types.get(fqn)
    }

    pub fn find_method(&self, method_id: &str) -> Option<&MethodUnderTest> {
        self.methods.iter().find(|m| m.method_id == method_id)
    }
}

pub fn render_signature(simple_owner: &str, params: &[ParameterDescriptor], variadic: bool) -> String {
    let mut parts = Vec::with_capacity(params.len());
    for (i, p) in params.iter().enumerate() {
        let last = i + 1 == params.len();
        if variadic && last {
            let base = p.type_name.strip_suffix("[]").unwrap_or(&p.type_name);
            parts.push(format!("{}... {}", base, p.name));
        } else {
            parts.push(format!("{} {}", p.type_name, p.name));
        }
    }
    format!("{}({})", simple_owner, parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ident() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9]{0,6}".prop_map(|s| s)
    }

    fn type_name() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("int".to_string()),
            Just("long".to_string()),
            Just("double".to_string()),
            Just("java.lang.String".to_string()),
            ident().prop_map(|s| format!("pkg.{}", capitalize(&s))),
        ]
    }

    fn capitalize(s: &str) -> String {
        let mut cs = s.chars();
        match cs.next() {
            Some(c) => c.to_uppercase().collect::<String>() + cs.as_str(),
            None => String::new(),
        }
    }

    fn param() -> impl Strategy<Value = ParameterDescriptor> {
        (ident(), type_name()).prop_map(|(name, type_name)| {
            let is_reference = type_name.starts_with("pkg.");
            ParameterDescriptor {
                name,
                type_name,
                is_reference,
            }
        })
    }

    fn arb_model() -> impl Strategy<Value = ApiModel> {
        let ty = (ident(), prop::collection::vec(param(), 0..3)).prop_map(|(name, params)| {
            let fqn = format!("pkg.{}", capitalize(&name));
            let simple = capitalize(&name);
            let ctor = ConstructorDescriptor {
                owner: fqn.clone(),
                is_public: true,
                signature: render_signature(&simple, &params, false),
                params,
                variadic: false,
                decl_index: 0,
            };
            TypeDescriptor {
                fqn,
                is_interface: false,
                is_abstract: false,
                external: false,
                supertypes: vec![],
                constructors: vec![ctor],
            }
        });
        (prop::collection::vec(ty, 1..4), ident(), ident()).prop_map(|(tys, lib, ver)| {
            let mut types = BTreeMap::new();
            for t in tys {
                types.insert(t.fqn.clone(), t);
            }
            let mut methods = Vec::new();
            for (i, (fqn, t)) in types.iter().enumerate() {
                let params = t.constructors[0].params.clone();
                let ptypes: Vec<String> = params.iter().map(|p| p.type_name.clone()).collect();
                methods.push(MethodUnderTest {
                    method_id: method_id(fqn, &format!("m{i}"), &ptypes),
                    owner_fqn: fqn.clone(),
                    name: format!("m{i}"),
                    is_static: i % 2 == 0,
                    return_type: "int".into(),
                    params,
                    throws: vec![],
                    doc_throws: vec![],
                    source: format!("public int m{i}() {{ return 0; }}"),
                    line: (i as u32) + 1,
                    branch_sites: i,
                });
            }
            ApiModel {
                library: lib,
                version: ver,
                types,
                methods,
            }
        })
    }

    proptest! {
        #[test]
        fn json_round_trip_preserves_model(model in arb_model()) {
            let json = model.to_json();
            let back = ApiModel::from_json(&json).unwrap();
            prop_assert_eq!(model, back);
        }

        #[test]
        fn generated_models_validate(model in arb_model()) {
            prop_assert!(model.validate().is_ok());
        }
    }

    #[test]
    fn validate_rejects_unknown_owner() {
        let model = ApiModel {
            library: "l".into(),
            version: "1".into(),
            types: BTreeMap::new(),
            methods: vec![MethodUnderTest {
                method_id: "pkg.A::m()".into(),
                owner_fqn: "pkg.A".into(),
                name: "m".into(),
                is_static: true,
                return_type: "void".into(),
                params: vec![],
                throws: vec![],
                doc_throws: vec![],
                source: String::new(),
                line: 1,
                branch_sites: 0,
            }],
        };
        assert!(model.validate().is_err());
    }

    #[test]
    fn validate_rejects_mismatched_method_id() {
        let mut types = BTreeMap::new();
        types.insert(
            "pkg.A".to_string(),
            TypeDescriptor {
                fqn: "pkg.A".into(),
                is_interface: false,
                is_abstract: false,
                external: false,
                supertypes: vec![],
                constructors: vec![],
            },
        );
        let model = ApiModel {
            library: "l".into(),
            version: "1".into(),
            types,
            methods: vec![MethodUnderTest {
                method_id: "pkg.A::wrong()".into(),
                owner_fqn: "pkg.A".into(),
                name: "m".into(),
                is_static: true,
                return_type: "void".into(),
                params: vec![],
                throws: vec![],
                doc_throws: vec![],
                source: String::new(),
                line: 1,
                branch_sites: 0,
            }],
        };
        assert!(model.validate().is_err());
    }

    #[test]
    fn signature_rendering_marks_varargs() {
        let params = vec![
            ParameterDescriptor {
                name: "tag".into(),
                type_name: "java.lang.String".into(),
                is_reference: false,
            },
            ParameterDescriptor {
                name: "parts".into(),
                type_name: "long[]".into(),
                is_reference: false,
            },
        ];
        assert_eq!(
            render_signature("Strings", &params, true),
            "Strings(java.lang.String tag, long... parts)"
        );
    }
}
