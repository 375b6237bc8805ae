//! Name resolution and type checking over parsed units.
//!
//! Two call sites with different strictness share this checker: library
//! sources are checked permissively (package visibility is not enforced
//! inside the library), while generated drivers are checked in driver mode,
//! which only admits public constructors, methods, and fields, because a
//! driver lives outside the library's package.

use std::collections::BTreeMap;
use std::collections::HashMap;

use super::ast::*;
use super::{builtin_extends, builtin_fqn, BUILTIN_EXCEPTIONS, THROWABLE};

/// Resolved type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RTy {
    Int,
    Long,
    Float,
    Double,
    Boolean,
    Void,
    Str,
    Class(String),
    Array(Box<RTy>),
    Null,
    /// Sentinel after a reported error; suppresses cascading diagnostics.
    Unknown,
}

impl RTy {
    fn numeric_rank(&self) -> Option<u8> {
        match self {
            RTy::Int => Some(0),
            RTy::Long => Some(1),
            RTy::Float => Some(2),
            RTy::Double => Some(3),
            _ => None,
        }
    }

    pub fn display(&self) -> String {
        match self {
            RTy::Int => "int".into(),
            RTy::Long => "long".into(),
            RTy::Float => "float".into(),
            RTy::Double => "double".into(),
            RTy::Boolean => "boolean".into(),
            RTy::Void => "void".into(),
            RTy::Str => "java.lang.String".into(),
            RTy::Class(f) => f.clone(),
            RTy::Array(e) => format!("{}[]", e.display()),
            RTy::Null => "null".into(),
            RTy::Unknown => "<error>".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldInfo {
    pub name: String,
    pub is_public: bool,
    pub ty: RTy,
}

#[derive(Debug, Clone)]
pub struct CtorInfo {
    pub is_public: bool,
    pub params: Vec<(String, RTy)>,
    pub variadic: bool,
    /// Position among the owner's constructors in declaration order.
    pub decl_index: usize,
}

#[derive(Debug, Clone)]
pub struct MethodInfo {
    pub name: String,
    pub is_public: bool,
    pub is_static: bool,
    pub is_abstract: bool,
    pub ret: RTy,
    pub params: Vec<(String, RTy)>,
    pub variadic: bool,
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub fqn: String,
    pub simple: String,
    pub is_interface: bool,
    pub is_abstract: bool,
    pub is_public: bool,
    /// True for builtin or unresolved types without source.
    pub external: bool,
    pub super_fqn: Option<String>,
    pub interfaces: Vec<String>,
    pub fields: Vec<FieldInfo>,
    pub ctors: Vec<CtorInfo>,
    pub methods: Vec<MethodInfo>,
}

#[derive(Debug, Clone)]
pub struct Diag {
    pub line: u32,
    pub message: String,
}

impl Diag {
    fn new(line: u32, message: impl Into<String>) -> Self {
        Diag {
            line,
            message: message.into(),
        }
    }
}

/// A method call resolved (or not) inside a checked body, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalleeRef {
    pub owner_fqn: String,
    pub name: String,
    pub arity: usize,
    pub line: u32,
    pub resolved: bool,
}

#[derive(Debug, Default)]
pub struct ClassTable {
    pub classes: BTreeMap<String, ClassInfo>,
    /// Per source path: simple name -> fqn.
    resolvers: HashMap<String, HashMap<String, String>>,
}

impl ClassTable {
    /// Builds the table from parsed units plus the builtin java.lang slice.
    pub fn build(units: &[Unit]) -> ClassTable {
        let mut table = ClassTable::default();
        for (fqn, super_fqn) in BUILTIN_EXCEPTIONS {
            table.classes.insert(
                (*fqn).to_string(),
                builtin_exception_info(fqn, Some(super_fqn)),
            );
        }
        table
            .classes
            .insert(THROWABLE.into(), builtin_exception_info(THROWABLE, None));
        for fqn in super::BUILTIN_OPAQUE {
            table.classes.insert(
                (*fqn).to_string(),
                ClassInfo {
                    fqn: (*fqn).to_string(),
                    simple: fqn.rsplit('.').next().unwrap().to_string(),
                    is_interface: false,
                    is_abstract: true,
                    is_public: true,
                    external: true,
                    super_fqn: None,
                    interfaces: Vec::new(),
                    fields: Vec::new(),
                    ctors: Vec::new(),
                    methods: Vec::new(),
                },
            );
        }

        // Pass 1: declared names.
        let mut declared: HashMap<String, String> = HashMap::new();
        let mut by_package: HashMap<String, Vec<(String, String)>> = HashMap::new();
        for unit in units {
            let pkg = unit.package.clone().unwrap_or_default();
            for ty in &unit.types {
                let fqn = qualify(&pkg, &ty.name);
                declared.insert(fqn.clone(), fqn.clone());
                by_package
                    .entry(pkg.clone())
                    .or_default()
                    .push((ty.name.clone(), fqn));
            }
        }

        // Pass 2: per-unit resolvers, then resolved class infos.
        for unit in units {
            let pkg = unit.package.clone().unwrap_or_default();
            let mut resolver: HashMap<String, String> = HashMap::new();
            if let Some(mates) = by_package.get(&pkg) {
                for (simple, fqn) in mates {
                    resolver.insert(simple.clone(), fqn.clone());
                }
            }
            for import in &unit.imports {
                if let Some(simple) = import.rsplit('.').next() {
                    resolver.insert(simple.to_string(), import.clone());
                }
            }
            table.resolvers.insert(unit.path.clone(), resolver);
        }
        for unit in units {
            for ty in &unit.types {
                let info = table.class_info_of(unit, ty);
                table.classes.insert(info.fqn.clone(), info);
            }
        }
        table
    }

    fn class_info_of(&self, unit: &Unit, ty: &TypeDecl) -> ClassInfo {
        let pkg = unit.package.clone().unwrap_or_default();
        let fqn = qualify(&pkg, &ty.name);
        let super_fqn = ty.extends.as_ref().map(|n| self.resolve_name(unit, n));
        let interfaces = ty
            .implements
            .iter()
            .map(|n| self.resolve_name(unit, n))
            .collect();
        ClassInfo {
            fqn,
            simple: ty.name.clone(),
            is_interface: ty.is_interface,
            is_abstract: ty.is_abstract,
            is_public: ty.is_public,
            external: false,
            super_fqn,
            interfaces,
            fields: ty
                .fields
                .iter()
                .map(|f| FieldInfo {
                    name: f.name.clone(),
                    is_public: f.is_public,
                    ty: self.resolve_ty(unit, &f.ty),
                })
                .collect(),
            ctors: ty
                .ctors
                .iter()
                .enumerate()
                .map(|(i, c)| CtorInfo {
                    is_public: c.is_public,
                    params: c
                        .params
                        .iter()
                        .map(|p| (p.name.clone(), self.resolve_ty(unit, &p.ty)))
                        .collect(),
                    variadic: c.params.last().is_some_and(|p| p.variadic),
                    decl_index: i,
                })
                .collect(),
            methods: ty
                .methods
                .iter()
                .map(|m| MethodInfo {
                    name: m.name.clone(),
                    is_public: m.is_public,
                    is_static: m.is_static,
                    is_abstract: m.is_abstract,
                    ret: self.resolve_ty(unit, &m.ret),
                    params: m
                        .params
                        .iter()
                        .map(|p| (p.name.clone(), self.resolve_ty(unit, &p.ty)))
                        .collect(),
                    variadic: m.params.last().is_some_and(|p| p.variadic),
                })
                .collect(),
        }
    }

    /// Resolves a possibly-simple type name to an fqn. Unresolvable names
    /// come back unchanged so callers can flag them as external.
    pub fn resolve_name(&self, unit: &Unit, name: &str) -> String {
        if name.contains('.') {
            return name.to_string();
        }
        if let Some(resolver) = self.resolvers.get(&unit.path) {
            if let Some(fqn) = resolver.get(name) {
                return fqn.clone();
            }
        }
        if let Some(fqn) = builtin_fqn(name) {
            return fqn.to_string();
        }
        name.to_string()
    }

    pub fn resolve_ty(&self, unit: &Unit, ty: &TypeRef) -> RTy {
        match ty {
            TypeRef::Int => RTy::Int,
            TypeRef::Long => RTy::Long,
            TypeRef::Float => RTy::Float,
            TypeRef::Double => RTy::Double,
            TypeRef::Boolean => RTy::Boolean,
            TypeRef::Void => RTy::Void,
            TypeRef::Str => RTy::Str,
            TypeRef::Class(n) => RTy::Class(self.resolve_name(unit, n)),
            TypeRef::Array(e) => RTy::Array(Box::new(self.resolve_ty(unit, e))),
        }
    }

    pub fn get(&self, fqn: &str) -> Option<&ClassInfo> {
        self.classes.get(fqn)
    }

    /// Superclass chain starting at `fqn` itself.
    pub fn chain(&self, fqn: &str) -> Vec<&ClassInfo> {
        let mut out = Vec::new();
        let mut cur = Some(fqn.to_string());
        let mut guard = 0;
        while let Some(f) = cur {
            guard += 1;
            if guard > 64 {
                break;
            }
            match self.classes.get(&f) {
                Some(info) => {
                    cur = info.super_fqn.clone();
                    out.push(info);
                }
                None => break,
            }
        }
        out
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sub == sup {
            return true;
        }
        if builtin_extends(sub, sup) {
            return true;
        }
        let mut stack = vec![sub.to_string()];
        let mut guard = 0;
        while let Some(cur) = stack.pop() {
            guard += 1;
            if guard > 256 {
                break;
            }
            if cur == sup {
                return true;
            }
            if let Some(info) = self.classes.get(&cur) {
                if let Some(s) = &info.super_fqn {
                    stack.push(s.clone());
                }
                stack.extend(info.interfaces.iter().cloned());
            } else if builtin_extends(&cur, sup) {
                return true;
            }
        }
        false
    }

    pub fn is_throwable(&self, fqn: &str) -> bool {
        self.is_subtype(fqn, THROWABLE)
    }

    pub fn find_field(&self, fqn: &str, name: &str) -> Option<(&ClassInfo, &FieldInfo)> {
        for info in self.chain(fqn) {
            if let Some(f) = info.fields.iter().find(|f| f.name == name) {
                return Some((info, f));
            }
        }
        None
    }

    pub fn find_method(
        &self,
        fqn: &str,
        name: &str,
        argc: usize,
    ) -> Option<(&ClassInfo, &MethodInfo)> {
        for info in self.chain(fqn) {
            if let Some(m) = info
                .methods
                .iter()
                .find(|m| m.name == name && arity_matches(&m.params, m.variadic, argc))
            {
                return Some((info, m));
            }
        }
        // Interface signatures: search implemented interfaces breadth-first.
        let mut queue: Vec<String> = self
            .chain(fqn)
            .iter()
            .flat_map(|i| i.interfaces.iter().cloned())
            .collect();
        let mut guard = 0;
        while let Some(cur) = queue.pop() {
            guard += 1;
            if guard > 256 {
                break;
            }
            if let Some(info) = self.classes.get(&cur) {
                if let Some(m) = info
                    .methods
                    .iter()
                    .find(|m| m.name == name && arity_matches(&m.params, m.variadic, argc))
                {
                    return Some((info, m));
                }
                queue.extend(info.interfaces.iter().cloned());
            }
        }
        None
    }

    pub fn find_ctor(&self, fqn: &str, argc: usize) -> Option<(&ClassInfo, &CtorInfo)> {
        let info = self.classes.get(fqn)?;
        info.ctors
            .iter()
            .find(|c| arity_matches(&c.params, c.variadic, argc))
            .map(|c| (info, c))
    }

    /// All fields visible on instances of `fqn` (whole chain).
    pub fn all_fields(&self, fqn: &str) -> Vec<&FieldInfo> {
        self.chain(fqn).into_iter().flat_map(|i| &i.fields).collect()
    }
}

fn arity_matches(params: &[(String, RTy)], variadic: bool, argc: usize) -> bool {
    if variadic {
        argc >= params.len().saturating_sub(1)
    } else {
        argc == params.len()
    }
}

fn qualify(pkg: &str, name: &str) -> String {
    if pkg.is_empty() {
        name.to_string()
    } else {
        format!("{pkg}.{name}")
    }
}

fn builtin_exception_info(fqn: &str, super_fqn: Option<&str>) -> ClassInfo {
    ClassInfo {
        fqn: fqn.to_string(),
        simple: fqn.rsplit('.').next().unwrap().to_string(),
        is_interface: false,
        is_abstract: false,
        is_public: true,
        external: true,
        super_fqn: super_fqn.map(|s| s.to_string()),
        interfaces: Vec::new(),
        fields: vec![FieldInfo {
            name: "message".into(),
            is_public: true,
            ty: RTy::Str,
        }],
        ctors: vec![
            CtorInfo {
                is_public: true,
                params: Vec::new(),
                variadic: false,
                decl_index: 0,
            },
            CtorInfo {
                is_public: true,
                params: vec![("message".into(), RTy::Str)],
                variadic: false,
                decl_index: 1,
            },
        ],
        methods: Vec::new(),
    }
}

// ==== checker ====

struct Scope {
    vars: Vec<HashMap<String, RTy>>,
}

impl Scope {
    fn new() -> Self {
        Scope {
            vars: vec![HashMap::new()],
        }
    }
    fn push(&mut self) {
        self.vars.push(HashMap::new());
    }
    fn pop(&mut self) {
        self.vars.pop();
    }
    fn declare(&mut self, name: &str, ty: RTy) -> bool {
        if self.lookup(name).is_some() {
            return false;
        }
        self.vars.last_mut().unwrap().insert(name.to_string(), ty);
        true
    }
    fn lookup(&self, name: &str) -> Option<&RTy> {
        self.vars.iter().rev().find_map(|m| m.get(name))
    }
}

pub struct Checker<'a> {
    table: &'a ClassTable,
    unit: &'a Unit,
    driver_mode: bool,
    class_fqn: String,
    in_static: bool,
    ret: RTy,
    diags: Vec<Diag>,
    calls: Vec<CalleeRef>,
}

/// Checks every body in a unit. Used for library self-checks and tests.
pub fn check_unit(table: &ClassTable, unit: &Unit) -> Vec<Diag> {
    let mut diags = Vec::new();
    let pkg = unit.package.clone().unwrap_or_default();
    for ty in &unit.types {
        let fqn = qualify(&pkg, &ty.name);
        for ctor in &ty.ctors {
            let (d, _) = check_body(
                table,
                unit,
                &fqn,
                false,
                RTy::Void,
                &ctor.params,
                Some(&ctor.body),
                false,
            );
            diags.extend(d);
        }
        for m in &ty.methods {
            let (d, _) = check_body(
                table,
                unit,
                &fqn,
                m.is_static,
                table.resolve_ty(unit, &m.ret),
                &m.params,
                m.body.as_ref(),
                false,
            );
            diags.extend(d);
        }
    }
    diags
}

/// Checks a driver unit: every body, public-only access.
pub fn check_driver(table: &ClassTable, unit: &Unit) -> Vec<Diag> {
    let mut diags = Vec::new();
    let pkg = unit.package.clone().unwrap_or_default();
    for ty in &unit.types {
        let fqn = qualify(&pkg, &ty.name);
        for m in &ty.methods {
            let (d, _) = check_body(
                table,
                unit,
                &fqn,
                m.is_static,
                table.resolve_ty(unit, &m.ret),
                &m.params,
                m.body.as_ref(),
                true,
            );
            diags.extend(d);
        }
    }
    diags
}

/// Resolves the method calls a single method body makes, in source order.
pub fn infer_calls(
    table: &ClassTable,
    unit: &Unit,
    owner_fqn: &str,
    method: &MethodDecl,
) -> (Vec<CalleeRef>, Vec<Diag>) {
    let (diags, calls) = check_body(
        table,
        unit,
        owner_fqn,
        method.is_static,
        table.resolve_ty(unit, &method.ret),
        &method.params,
        method.body.as_ref(),
        false,
    );
    (calls, diags)
}

#[allow(clippy::too_many_arguments)]
fn check_body(
    table: &ClassTable,
    unit: &Unit,
    class_fqn: &str,
    is_static: bool,
    ret: RTy,
    params: &[Param],
    body: Option<&Block>,
    driver_mode: bool,
) -> (Vec<Diag>, Vec<CalleeRef>) {
    let Some(body) = body else {
        return (Vec::new(), Vec::new());
    };
    let mut checker = Checker {
        table,
        unit,
        driver_mode,
        class_fqn: class_fqn.to_string(),
        in_static: is_static,
        ret,
        diags: Vec::new(),
        calls: Vec::new(),
    };
    let mut scope = Scope::new();
    for p in params {
        let ty = table.resolve_ty(unit, &p.ty);
        scope.declare(&p.name, ty);
    }
    checker.block(body, &mut scope);
    (checker.diags, checker.calls)
}

impl<'a> Checker<'a> {
    fn diag(&mut self, line: u32, msg: impl Into<String>) {
        self.diags.push(Diag::new(line, msg));
    }

    fn block(&mut self, block: &Block, scope: &mut Scope) {
        scope.push();
        for stmt in &block.stmts {
            self.stmt(stmt, scope);
        }
        scope.pop();
    }

    fn stmt(&mut self, stmt: &Stmt, scope: &mut Scope) {
        match stmt {
            Stmt::VarDecl {
                ty,
                name,
                init,
                line,
            } => {
                let declared = self.resolve_checked(ty, *line);
                let got = self.expr(init, scope);
                if !self.assignable(&got, &declared) {
                    self.diag(
                        *line,
                        format!(
                            "cannot assign {} to {} {}",
                            got.display(),
                            declared.display(),
                            name
                        ),
                    );
                }
                if !scope.declare(name, declared) {
                    self.diag(*line, format!("duplicate variable {name}"));
                }
            }
            Stmt::Assign {
                target,
                value,
                line,
            } => {
                let tty = self.lvalue(target, scope);
                let vty = self.expr(value, scope);
                if !self.assignable(&vty, &tty) {
                    self.diag(
                        *line,
                        format!("cannot assign {} to {}", vty.display(), tty.display()),
                    );
                }
            }
            Stmt::Expr { expr, .. } => {
                self.expr(expr, scope);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                line,
                ..
            } => {
                self.expect_bool(cond, scope, *line);
                self.block(then_branch, scope);
                if let Some(e) = else_branch {
                    self.block(e, scope);
                }
            }
            Stmt::While {
                cond, body, line, ..
            } => {
                self.expect_bool(cond, scope, *line);
                self.block(body, scope);
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
                line,
                ..
            } => {
                let sty = self.expr(scrutinee, scope);
                if !matches!(sty, RTy::Int | RTy::Long | RTy::Str | RTy::Unknown) {
                    self.diag(
                        *line,
                        format!("switch requires int, long, or String, got {}", sty.display()),
                    );
                }
                for case in cases {
                    let label_ok = matches!(
                        (&sty, &case.label),
                        (RTy::Int | RTy::Long, Lit::Int(_) | Lit::Long(_))
                            | (RTy::Str, Lit::Str(_))
                            | (RTy::Unknown, _)
                    );
                    if !label_ok {
                        self.diag(*line, "case label type does not match switch scrutinee");
                    }
                    scope.push();
                    for s in &case.stmts {
                        self.stmt(s, scope);
                    }
                    scope.pop();
                }
                if let Some(d) = default {
                    scope.push();
                    for s in d {
                        self.stmt(s, scope);
                    }
                    scope.pop();
                }
            }
            Stmt::Try { body, catches, .. } => {
                self.block(body, scope);
                for c in catches {
                    let fqn = self.table.resolve_name(self.unit, &c.ex_type);
                    if !self.table.is_throwable(&fqn) {
                        self.diag(c.line, format!("{fqn} is not a throwable type"));
                    }
                    scope.push();
                    scope.declare(&c.var, RTy::Class(fqn));
                    self.block(&c.body, scope);
                    scope.pop();
                }
            }
            Stmt::Return { value, line } => match (value, self.ret.clone()) {
                (None, RTy::Void) => {}
                (None, other) => {
                    self.diag(*line, format!("missing return value of {}", other.display()))
                }
                (Some(v), expected) => {
                    let got = self.expr(v, scope);
                    if expected == RTy::Void {
                        self.diag(*line, "void method returns a value");
                    } else if !self.assignable(&got, &expected) {
                        self.diag(
                            *line,
                            format!(
                                "return type mismatch: {} vs {}",
                                got.display(),
                                expected.display()
                            ),
                        );
                    }
                }
            },
            Stmt::Throw { value, line } => {
                let ty = self.expr(value, scope);
                match ty {
                    RTy::Class(fqn) if self.table.is_throwable(&fqn) => {}
                    RTy::Unknown => {}
                    other => self.diag(*line, format!("cannot throw {}", other.display())),
                }
            }
            Stmt::Break { .. } => {}
            Stmt::Block(b) => self.block(b, scope),
        }
    }

    fn expect_bool(&mut self, cond: &Expr, scope: &mut Scope, line: u32) {
        let ty = self.expr(cond, scope);
        if !matches!(ty, RTy::Boolean | RTy::Unknown) {
            self.diag(line, format!("condition must be boolean, got {}", ty.display()));
        }
    }

    fn resolve_checked(&mut self, ty: &TypeRef, line: u32) -> RTy {
        let rty = self.table.resolve_ty(self.unit, ty);
        if let RTy::Class(fqn) = &rty {
            if self.table.get(fqn).is_none() {
                self.diag(line, format!("unknown type {fqn}"));
                return RTy::Unknown;
            }
        }
        rty
    }

    fn lvalue(&mut self, target: &Expr, scope: &mut Scope) -> RTy {
        match target {
            Expr::Name(..) | Expr::Field { .. } | Expr::Index { .. } => self.expr(target, scope),
            other => {
                self.diag(other.line(), "invalid assignment target");
                RTy::Unknown
            }
        }
    }

    fn assignable(&self, from: &RTy, to: &RTy) -> bool {
        if from == to || matches!(from, RTy::Unknown) || matches!(to, RTy::Unknown) {
            return true;
        }
        match (from, to) {
            (f, t) if f.numeric_rank().is_some() && t.numeric_rank().is_some() => {
                f.numeric_rank() <= t.numeric_rank()
            }
            (RTy::Null, RTy::Class(_) | RTy::Str | RTy::Array(_)) => true,
            (RTy::Class(a), RTy::Class(b)) => self.table.is_subtype(a, b),
            (RTy::Array(a), RTy::Array(b)) => a == b,
            _ => false,
        }
    }

    fn expr(&mut self, expr: &Expr, scope: &mut Scope) -> RTy {
        match expr {
            Expr::Lit(lit, _) => match lit {
                Lit::Int(_) => RTy::Int,
                Lit::Long(_) => RTy::Long,
                Lit::Float(_) => RTy::Float,
                Lit::Double(_) => RTy::Double,
                Lit::Str(_) => RTy::Str,
                Lit::Bool(_) => RTy::Boolean,
                Lit::Null => RTy::Null,
            },
            Expr::Name(name, line) => match scope.lookup(name) {
                Some(ty) => ty.clone(),
                None => {
                    if !self.in_static {
                        if let Some((_, f)) = self.table.find_field(&self.class_fqn, name) {
                            return f.ty.clone();
                        }
                    }
                    self.diag(*line, format!("undefined variable {name}"));
                    RTy::Unknown
                }
            },
            Expr::This(line) => {
                if self.in_static {
                    self.diag(*line, "this in static context");
                    RTy::Unknown
                } else {
                    RTy::Class(self.class_fqn.clone())
                }
            }
            Expr::Field { target, name, line } => {
                if let Some(static_owner) = self.static_target(target, scope) {
                    self.diag(
                        *line,
                        format!("static field access {static_owner}.{name} is not supported"),
                    );
                    return RTy::Unknown;
                }
                let tty = self.expr(target, scope);
                match tty {
                    RTy::Array(_) if name == "length" => RTy::Int,
                    RTy::Class(fqn) => match self.table.find_field(&fqn, name) {
                        Some((owner, f)) => {
                            if self.driver_mode && !f.is_public {
                                self.diag(
                                    *line,
                                    format!("field {}.{} is not public", owner.fqn, name),
                                );
                            }
                            f.ty.clone()
                        }
                        None => {
                            self.diag(*line, format!("no field {name} on {fqn}"));
                            RTy::Unknown
                        }
                    },
                    RTy::Unknown => RTy::Unknown,
                    other => {
                        self.diag(
                            *line,
                            format!("no field {} on {}", name, other.display()),
                        );
                        RTy::Unknown
                    }
                }
            }
            Expr::Index { target, index, line } => {
                let tty = self.expr(target, scope);
                let ity = self.expr(index, scope);
                if !matches!(ity, RTy::Int | RTy::Long | RTy::Unknown) {
                    self.diag(*line, "array index must be integral");
                }
                match tty {
                    RTy::Array(e) => *e,
                    RTy::Unknown => RTy::Unknown,
                    other => {
                        self.diag(*line, format!("cannot index {}", other.display()));
                        RTy::Unknown
                    }
                }
            }
            Expr::Call {
                target,
                name,
                args,
                line,
            } => self.call(target.as_deref(), name, args, *line, scope),
            Expr::New { class, args, line } => {
                let fqn = self.table.resolve_name(self.unit, class);
                let Some(info) = self.table.get(&fqn) else {
                    self.diag(*line, format!("unknown type {fqn}"));
                    return RTy::Unknown;
                };
                if info.is_interface || (info.is_abstract && !info.external) {
                    self.diag(*line, format!("cannot instantiate {fqn}"));
                    return RTy::Class(fqn);
                }
                let argts: Vec<RTy> = args.iter().map(|a| self.expr(a, scope)).collect();
                match self.table.find_ctor(&fqn, args.len()) {
                    Some((_, ctor)) => {
                        if self.driver_mode && !ctor.is_public {
                            self.diag(*line, format!("constructor of {fqn} is not public"));
                        }
                        self.check_args(&ctor.params.clone(), ctor.variadic, &argts, *line);
                    }
                    None => {
                        self.diag(
                            *line,
                            format!("no constructor of {} takes {} arguments", fqn, args.len()),
                        );
                    }
                }
                RTy::Class(fqn)
            }
            Expr::NewArray { elem, items, line } => {
                let ety = self.resolve_checked(elem, *line);
                for item in items {
                    let ity = self.expr(item, scope);
                    if !self.assignable(&ity, &ety) {
                        self.diag(
                            *line,
                            format!(
                                "array element {} not assignable to {}",
                                ity.display(),
                                ety.display()
                            ),
                        );
                    }
                }
                RTy::Array(Box::new(ety))
            }
            Expr::Unary { op, operand, line } => {
                let ty = self.expr(operand, scope);
                match op {
                    UnOp::Neg => {
                        if ty.numeric_rank().is_none() && ty != RTy::Unknown {
                            self.diag(*line, "negation requires a numeric operand");
                            return RTy::Unknown;
                        }
                        ty
                    }
                    UnOp::Not => {
                        if !matches!(ty, RTy::Boolean | RTy::Unknown) {
                            self.diag(*line, "! requires a boolean operand");
                        }
                        RTy::Boolean
                    }
                }
            }
            Expr::Binary { op, lhs, rhs, line } => {
                let lt = self.expr(lhs, scope);
                let rt = self.expr(rhs, scope);
                self.binary(*op, &lt, &rt, *line)
            }
            Expr::And { lhs, rhs, line, .. } | Expr::Or { lhs, rhs, line, .. } => {
                for side in [lhs, rhs] {
                    let ty = self.expr(side, scope);
                    if !matches!(ty, RTy::Boolean | RTy::Unknown) {
                        self.diag(*line, "logical operator requires boolean operands");
                    }
                }
                RTy::Boolean
            }
            Expr::Ternary {
                cond,
                then_val,
                else_val,
                line,
                ..
            } => {
                self.expect_bool(cond, scope, *line);
                let tt = self.expr(then_val, scope);
                let et = self.expr(else_val, scope);
                if self.assignable(&et, &tt) {
                    tt
                } else if self.assignable(&tt, &et) {
                    et
                } else {
                    self.diag(*line, "ternary arms have incompatible types");
                    RTy::Unknown
                }
            }
        }
    }

    fn binary(&mut self, op: BinOp, lt: &RTy, rt: &RTy, line: u32) -> RTy {
        use BinOp::*;
        if matches!(lt, RTy::Unknown) || matches!(rt, RTy::Unknown) {
            return match op {
                Eq | Ne | Lt | Le | Gt | Ge => RTy::Boolean,
                _ => RTy::Unknown,
            };
        }
        match op {
            Add if matches!(lt, RTy::Str) || matches!(rt, RTy::Str) => RTy::Str,
            Add | Sub | Mul | Div | Rem => {
                match (lt.numeric_rank(), rt.numeric_rank()) {
                    (Some(a), Some(b)) => match a.max(b) {
                        0 => RTy::Int,
                        1 => RTy::Long,
                        2 => RTy::Float,
                        _ => RTy::Double,
                    },
                    _ => {
                        self.diag(
                            line,
                            format!(
                                "arithmetic requires numeric operands, got {} and {}",
                                lt.display(),
                                rt.display()
                            ),
                        );
                        RTy::Unknown
                    }
                }
            }
            Lt | Le | Gt | Ge => {
                if lt.numeric_rank().is_none() || rt.numeric_rank().is_none() {
                    self.diag(line, "comparison requires numeric operands");
                }
                RTy::Boolean
            }
            Eq | Ne => {
                let ok = (lt.numeric_rank().is_some() && rt.numeric_rank().is_some())
                    || (lt == &RTy::Boolean && rt == &RTy::Boolean)
                    || (lt == &RTy::Str && rt == &RTy::Str)
                    || matches!(lt, RTy::Null) && matches!(rt, RTy::Class(_) | RTy::Str | RTy::Array(_) | RTy::Null)
                    || matches!(rt, RTy::Null) && matches!(lt, RTy::Class(_) | RTy::Str | RTy::Array(_))
                    || matches!((lt, rt), (RTy::Class(_), RTy::Class(_)));
                if !ok {
                    self.diag(
                        line,
                        format!(
                            "cannot compare {} with {}",
                            lt.display(),
                            rt.display()
                        ),
                    );
                }
                RTy::Boolean
            }
        }
    }

    /// If the call/field target is a bare name that is not a variable but
    /// resolves to a type, returns that type's fqn (static access).
    fn static_target(&self, target: &Expr, scope: &Scope) -> Option<String> {
        if let Expr::Name(n, _) = target {
            if scope.lookup(n).is_none() {
                let fqn = self.table.resolve_name(self.unit, n);
                if self.table.get(&fqn).is_some() {
                    return Some(fqn);
                }
                if builtin_static_owner(n) {
                    return Some(n.clone());
                }
            }
        }
        None
    }

    fn call(
        &mut self,
        target: Option<&Expr>,
        name: &str,
        args: &[Expr],
        line: u32,
        scope: &mut Scope,
    ) -> RTy {
        let argts: Vec<RTy> = args.iter().map(|a| self.expr(a, scope)).collect();
        match target {
            None => {
                // Unqualified: method of the enclosing class.
                match self.table.find_method(&self.class_fqn, name, args.len()) {
                    Some((owner, m)) => {
                        if self.in_static && !m.is_static {
                            self.diag(
                                line,
                                format!("instance method {name} called from static context"),
                            );
                        }
                        let (params, variadic, ret) =
                            (m.params.clone(), m.variadic, m.ret.clone());
                        let owner_fqn = owner.fqn.clone();
                        self.check_args(&params, variadic, &argts, line);
                        self.calls.push(CalleeRef {
                            owner_fqn,
                            name: name.to_string(),
                            arity: args.len(),
                            line,
                            resolved: true,
                        });
                        ret
                    }
                    None => {
                        self.diag(line, format!("undefined method {name}"));
                        RTy::Unknown
                    }
                }
            }
            Some(t) => {
                if let Some(owner) = self.static_target(t, scope) {
                    if builtin_static_owner(&owner) {
                        return self.builtin_static(&owner, name, &argts, line);
                    }
                    return match self.table.find_method(&owner, name, args.len()) {
                        Some((found_owner, m)) if m.is_static => {
                            if self.driver_mode && !m.is_public {
                                self.diag(line, format!("method {owner}.{name} is not public"));
                            }
                            let (params, variadic, ret) =
                                (m.params.clone(), m.variadic, m.ret.clone());
                            let owner_fqn = found_owner.fqn.clone();
                            self.check_args(&params, variadic, &argts, line);
                            self.calls.push(CalleeRef {
                                owner_fqn,
                                name: name.to_string(),
                                arity: args.len(),
                                line,
                                resolved: true,
                            });
                            ret
                        }
                        Some(_) => {
                            self.diag(
                                line,
                                format!("{owner}.{name} is not static; call it on an instance"),
                            );
                            RTy::Unknown
                        }
                        None => {
                            self.diag(line, format!("no method {name} on {owner}"));
                            RTy::Unknown
                        }
                    };
                }
                let tty = self.expr(t, scope);
                match tty {
                    RTy::Str => self.string_method(name, &argts, line),
                    RTy::Class(fqn) => match self.table.find_method(&fqn, name, args.len()) {
                        Some((owner, m)) => {
                            if m.is_static {
                                self.diag(
                                    line,
                                    format!("static method {name} called on an instance"),
                                );
                            }
                            if self.driver_mode && !m.is_public {
                                self.diag(line, format!("method {fqn}.{name} is not public"));
                            }
                            let (params, variadic, ret) =
                                (m.params.clone(), m.variadic, m.ret.clone());
                            let owner_fqn = owner.fqn.clone();
                            self.check_args(&params, variadic, &argts, line);
                            self.calls.push(CalleeRef {
                                owner_fqn,
                                name: name.to_string(),
                                arity: args.len(),
                                line,
                                resolved: true,
                            });
                            ret
                        }
                        None => {
                            self.diag(line, format!("no method {name} on {fqn}"));
                            RTy::Unknown
                        }
                    },
                    RTy::Unknown => RTy::Unknown,
                    other => {
                        self.diag(
                            line,
                            format!("cannot call {} on {}", name, other.display()),
                        );
                        RTy::Unknown
                    }
                }
            }
        }
    }

    fn string_method(&mut self, name: &str, argts: &[RTy], line: u32) -> RTy {
        match (name, argts.len()) {
            ("length", 0) => RTy::Int,
            ("isEmpty", 0) => RTy::Boolean,
            ("equals", 1) => RTy::Boolean,
            _ => {
                self.diag(line, format!("unsupported String method {name}"));
                RTy::Unknown
            }
        }
    }

    fn builtin_static(&mut self, owner: &str, name: &str, argts: &[RTy], line: u32) -> RTy {
        self.calls.push(CalleeRef {
            owner_fqn: owner.to_string(),
            name: name.to_string(),
            arity: argts.len(),
            line,
            resolved: false,
        });
        match (owner, name, argts.len()) {
            ("Float", "parseFloat", 1) => RTy::Float,
            ("Double", "parseDouble", 1) => RTy::Double,
            ("Long", "parseLong", 1) => RTy::Long,
            ("Integer", "parseInt", 1) => RTy::Int,
            ("Math", "abs", 1) => argts[0].clone(),
            ("Math", "min" | "max", 2) => {
                match (argts[0].numeric_rank(), argts[1].numeric_rank()) {
                    (Some(a), Some(b)) => match a.max(b) {
                        0 => RTy::Int,
                        1 => RTy::Long,
                        2 => RTy::Float,
                        _ => RTy::Double,
                    },
                    _ => RTy::Unknown,
                }
            }
            _ => {
                self.diag(line, format!("unsupported builtin {owner}.{name}"));
                RTy::Unknown
            }
        }
    }

    fn check_args(&mut self, params: &[(String, RTy)], variadic: bool, argts: &[RTy], line: u32) {
        if !variadic {
            for (i, (pname, pty)) in params.iter().enumerate() {
                if let Some(aty) = argts.get(i) {
                    if !self.assignable(aty, pty) {
                        self.diag(
                            line,
                            format!(
                                "argument {} ({}) expects {}, got {}",
                                i + 1,
                                pname,
                                pty.display(),
                                aty.display()
                            ),
                        );
                    }
                }
            }
            return;
        }
        let fixed = params.len() - 1;
        for (i, (pname, pty)) in params[..fixed].iter().enumerate() {
            if let Some(aty) = argts.get(i) {
                if !self.assignable(aty, pty) {
                    self.diag(
                        line,
                        format!(
                            "argument {} ({}) expects {}, got {}",
                            i + 1,
                            pname,
                            pty.display(),
                            aty.display()
                        ),
                    );
                }
            }
        }
        let (_, last_ty) = &params[fixed];
        let RTy::Array(elem) = last_ty else {
            return;
        };
        // Exact array pass-through.
        if argts.len() == params.len() {
            if let Some(aty) = argts.get(fixed) {
                if self.assignable(aty, last_ty) {
                    return;
                }
            }
        }
        for (i, aty) in argts.iter().enumerate().skip(fixed) {
            if !self.assignable(aty, elem) {
                self.diag(
                    line,
                    format!(
                        "variadic argument {} expects {}, got {}",
                        i + 1,
                        elem.display(),
                        aty.display()
                    ),
                );
            }
        }
    }
}

fn builtin_static_owner(name: &str) -> bool {
    matches!(name, "Float" | "Double" | "Long" | "Integer" | "Math")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_unit;

    fn lib_units() -> Vec<Unit> {
        let a = parse_unit(
            "p/A.java",
            "package p; public class A { B b; int n; public A(B b, int n) { this.b = b; this.n = n; } public int run(int k) { if (k > 0 && this.n > 0) { return helper(k); } return this.b.val(); } public static int helper(int k) { return k + 1; } }",
        )
        .unwrap();
        let b = parse_unit(
            "p/B.java",
            "package p; public class B { int v; public B(int v) { this.v = v; } public int val() { return this.v; } }",
        )
        .unwrap();
        vec![a, b]
    }

    #[test]
    fn builds_table_with_same_package_resolution() {
        let units = lib_units();
        let table = ClassTable::build(&units);
        let a = table.get("p.A").unwrap();
        assert_eq!(a.ctors[0].params[0].1, RTy::Class("p.B".into()));
        assert!(table.get("java.lang.NullPointerException").is_some());
    }

    #[test]
    fn library_units_check_clean() {
        let units = lib_units();
        let table = ClassTable::build(&units);
        for u in &units {
            let diags = check_unit(&table, u);
            assert!(diags.is_empty(), "{diags:?}");
        }
    }

    #[test]
    fn infer_calls_resolves_in_source_order() {
        let units = lib_units();
        let table = ClassTable::build(&units);
        let method = units[0].types[0]
            .methods
            .iter()
            .find(|m| m.name == "run")
            .unwrap();
        let (calls, diags) = infer_calls(&table, &units[0], "p.A", method);
        assert!(diags.is_empty());
        let names: Vec<_> = calls.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["helper", "val"]);
        assert!(calls.iter().all(|c| c.resolved));
        assert_eq!(calls[1].owner_fqn, "p.B");
    }

    #[test]
    fn driver_mode_rejects_undefined_variable() {
        let units = lib_units();
        let driver = parse_unit(
            "Driver.java",
            "import p.A; import p.B; public class Driver { public static void main() { B b = new B(5); A a = new A(b, missing); a.run(1); } }",
        )
        .unwrap();
        let mut all = units.clone();
        all.push(driver.clone());
        let table = ClassTable::build(&all);
        let diags = check_driver(&table, &driver);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("undefined variable missing"));
    }

    #[test]
    fn driver_mode_rejects_non_public_field_access() {
        let units = lib_units();
        let driver = parse_unit(
            "Driver.java",
            "import p.B; public class Driver { public static void main() { B b = new B(5); int v = b.v; } }",
        )
        .unwrap();
        let mut all = units.clone();
        all.push(driver.clone());
        let table = ClassTable::build(&all);
        let diags = check_driver(&table, &driver);
        assert!(diags.iter().any(|d| d.message.contains("not public")));
    }

    #[test]
    fn rejects_bad_argument_types() {
        let units = lib_units();
        let driver = parse_unit(
            "Driver.java",
            "import p.A; import p.B; public class Driver { public static void main() { A a = new A(new B(1), \"s\"); } }",
        )
        .unwrap();
        let mut all = units.clone();
        all.push(driver.clone());
        let table = ClassTable::build(&all);
        let diags = check_driver(&table, &driver);
        assert!(diags.iter().any(|d| d.message.contains("expects int")));
    }

    #[test]
    fn variadic_call_packs_extra_arguments() {
        let lib = parse_unit(
            "V.java",
            "public class V { public static long sum(String tag, long... xs) { return 0L; } }",
        )
        .unwrap();
        let driver = parse_unit(
            "Driver.java",
            "public class Driver { public static void main() { V.sum(\"t\", 1L, 2L, 3L); } }",
        )
        .unwrap();
        let table = ClassTable::build(&[lib, driver.clone()]);
        let diags = check_driver(&table, &driver);
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn cannot_instantiate_interface_or_abstract() {
        let lib = parse_unit(
            "I.java",
            "public interface I { int f(); }",
        )
        .unwrap();
        let driver = parse_unit(
            "Driver.java",
            "public class Driver { public static void main() { I x = new I(); } }",
        )
        .unwrap();
        let table = ClassTable::build(&[lib, driver.clone()]);
        let diags = check_driver(&table, &driver);
        assert!(diags.iter().any(|d| d.message.contains("cannot instantiate")));
    }

    #[test]
    fn builtin_statics_type_check() {
        let driver = parse_unit(
            "Driver.java",
            "public class Driver { public static void main() { float f = Float.parseFloat(\"1.5\"); long l = Long.parseLong(\"7\"); } }",
        )
        .unwrap();
        let table = ClassTable::build(&[driver.clone()]);
        let diags = check_driver(&table, &driver);
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn throw_requires_throwable() {
        let lib = parse_unit(
            "T.java",
            "public class T { public void boom() { throw new T(); } public T() { } }",
        )
        .unwrap();
        let table = ClassTable::build(&[lib.clone()]);
        let diags = check_unit(&table, &lib);
        assert!(diags.iter().any(|d| d.message.contains("cannot throw")));
    }
}
