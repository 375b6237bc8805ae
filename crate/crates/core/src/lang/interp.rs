//! Tree-walking interpreter used by driver execution.
//!
//! Runs type-checked units directly from the AST. Branch-edge coverage is
//! reported through a sink on the first hit of each (class, method, site,
//! arm) tuple; exceptions propagate as `Thrown` values carrying a capped
//! stack snapshot so the runner can emit a structured report.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use super::ast::*;
use super::sema::{ClassTable, RTy};

/// Call depth cap; exceeding it raises java.lang.StackOverflowError.
pub const MAX_CALL_DEPTH: usize = 1024;
const MAX_TRACE_FRAMES: usize = 25;

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Null,
    Obj(Rc<RefCell<ObjData>>),
    Arr(Rc<RefCell<Vec<Value>>>),
}

#[derive(Debug)]
pub struct ObjData {
    pub class: String,
    pub fields: HashMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFrame {
    pub class: String,
    pub method: String,
    pub line: u32,
}

/// An exception in flight or reported.
#[derive(Debug, Clone)]
pub struct Thrown {
    pub fqn: String,
    pub message: String,
    /// Innermost frame first, capped at MAX_TRACE_FRAMES.
    pub frames: Vec<TraceFrame>,
    pub value: Option<Value>,
}

enum Ctl {
    Normal,
    Return(Value),
    Break,
}

type Exec = Result<Ctl, Thrown>;
type Eval = Result<Value, Thrown>;

/// Receives each first-hit coverage edge.
pub trait CoverageSink {
    fn edge(&mut self, class: &str, method: &str, site: SiteId, arm: &str);
}

/// Collects edges into an ordered set; handy for tests and in-process runs.
#[derive(Default)]
pub struct MemorySink {
    pub edges: BTreeSet<(String, String, SiteId, String)>,
}

impl CoverageSink for MemorySink {
    fn edge(&mut self, class: &str, method: &str, site: SiteId, arm: &str) {
        self.edges
            .insert((class.to_string(), method.to_string(), site, arm.to_string()));
    }
}

struct CallFrame {
    class: String,
    method: String,
    line: u32,
}

struct Env {
    scopes: Vec<HashMap<String, Value>>,
    this: Option<Value>,
}

impl Env {
    fn new(this: Option<Value>) -> Self {
        Env {
            scopes: vec![HashMap::new()],
            this,
        }
    }
    fn push(&mut self) {
        self.scopes.push(HashMap::new());
    }
    fn pop(&mut self) {
        self.scopes.pop();
    }
    fn declare(&mut self, name: &str, v: Value) {
        self.scopes.last_mut().unwrap().insert(name.to_string(), v);
    }
    fn get(&self, name: &str) -> Option<Value> {
        self.scopes.iter().rev().find_map(|s| s.get(name)).cloned()
    }
    fn set(&mut self, name: &str, v: Value) -> bool {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = v;
                return true;
            }
        }
        false
    }
}

pub struct Interp<'a> {
    table: &'a ClassTable,
    units: &'a [Unit],
    /// fqn -> (unit index, type index)
    decls: HashMap<String, (usize, usize)>,
    stack: Vec<CallFrame>,
    seen_edges: HashSet<(String, String, SiteId, String)>,
    sink: &'a mut dyn CoverageSink,
}

impl<'a> Interp<'a> {
    pub fn new(table: &'a ClassTable, units: &'a [Unit], sink: &'a mut dyn CoverageSink) -> Self {
        let mut decls = HashMap::new();
        for (ui, unit) in units.iter().enumerate() {
            let pkg = unit.package.clone().unwrap_or_default();
            for (ti, ty) in unit.types.iter().enumerate() {
                let fqn = if pkg.is_empty() {
                    ty.name.clone()
                } else {
                    format!("{}.{}", pkg, ty.name)
                };
                decls.insert(fqn, (ui, ti));
            }
        }
        Interp {
            table,
            units,
            decls,
            stack: Vec::new(),
            seen_edges: HashSet::new(),
            sink,
        }
    }

    /// Invokes a static method by owner fqn and name; the driver entry point.
    pub fn call_static(&mut self, owner: &str, name: &str, args: Vec<Value>) -> Eval {
        let (ui, ti) = *self
            .decls
            .get(owner)
            .ok_or_else(|| self.raise("java.lang.IllegalStateException", format!("no class {owner}")))?;
        let decl = &self.units[ui].types[ti];
        let method = decl
            .methods
            .iter()
            .find(|m| m.name == name && m.params.len() == args.len() && m.is_static)
            .ok_or_else(|| {
                self.raise(
                    "java.lang.IllegalStateException",
                    format!("no static method {owner}.{name}/{}", args.len()),
                )
            })?;
        self.invoke(owner, ui, method, None, args)
    }

    fn set_line(&mut self, line: u32) {
        if let Some(f) = self.stack.last_mut() {
            f.line = line;
        }
    }

    fn snapshot(&self) -> Vec<TraceFrame> {
        self.stack
            .iter()
            .rev()
            .take(MAX_TRACE_FRAMES)
            .map(|f| TraceFrame {
                class: f.class.clone(),
                method: f.method.clone(),
                line: f.line,
            })
            .collect()
    }

    fn raise(&self, fqn: &str, message: impl Into<String>) -> Thrown {
        Thrown {
            fqn: fqn.to_string(),
            message: message.into(),
            frames: self.snapshot(),
            value: None,
        }
    }

    fn hit(&mut self, site: SiteId, arm: &str) {
        let Some(frame) = self.stack.last() else {
            return;
        };
        let key = (
            frame.class.clone(),
            frame.method.clone(),
            site,
            arm.to_string(),
        );
        if self.seen_edges.insert(key) {
            let (class, method) = (frame.class.clone(), frame.method.clone());
            self.sink.edge(&class, &method, site, arm);
        }
    }

    /// Runtime method lookup along the class chain by name and arity.
    fn find_method_decl(
        &self,
        class: &str,
        name: &str,
        argc: usize,
    ) -> Option<(String, usize, &'a MethodDecl)> {
        let mut cur = Some(class.to_string());
        let mut guard = 0;
        while let Some(fqn) = cur {
            guard += 1;
            if guard > 64 {
                break;
            }
            if let Some(&(ui, ti)) = self.decls.get(&fqn) {
                let decl = &self.units[ui].types[ti];
                if let Some(m) = decl.methods.iter().find(|m| {
                    m.name == name && m.body.is_some() && arity_ok(&m.params, argc)
                }) {
                    return Some((fqn, ui, m));
                }
            }
            cur = self
                .table
                .get(&fqn)
                .and_then(|info| info.super_fqn.clone());
        }
        None
    }

    fn invoke(
        &mut self,
        owner: &str,
        unit_idx: usize,
        method: &'a MethodDecl,
        this: Option<Value>,
        args: Vec<Value>,
    ) -> Eval {
        if self.stack.len() >= MAX_CALL_DEPTH {
            return Err(self.raise("java.lang.StackOverflowError", ""));
        }
        let body = method
            .body
            .as_ref()
            .ok_or_else(|| self.raise("java.lang.IllegalStateException", "abstract call"))?;
        self.stack.push(CallFrame {
            class: owner.to_string(),
            method: method.name.clone(),
            line: method.line,
        });
        let mut env = Env::new(this);
        self.bind_params(&method.params, args, &mut env);
        let out = self.exec_block(body, &mut env, unit_idx);
        self.stack.pop();
        match out? {
            Ctl::Return(v) => Ok(v),
            _ => Ok(Value::Null),
        }
    }

    fn bind_params(&self, params: &[Param], mut args: Vec<Value>, env: &mut Env) {
        let variadic = params.last().is_some_and(|p| p.variadic);
        if variadic {
            let fixed = params.len() - 1;
            let exact_array = args.len() == params.len()
                && matches!(args.last(), Some(Value::Arr(_) | Value::Null));
            if !exact_array {
                let rest: Vec<Value> = args.split_off(fixed);
                args.push(Value::Arr(Rc::new(RefCell::new(rest))));
            }
        }
        for (p, v) in params.iter().zip(args) {
            env.declare(&p.name, v);
        }
    }

    fn construct(&mut self, fqn: &str, args: Vec<Value>, line: u32) -> Eval {
        if self.stack.len() >= MAX_CALL_DEPTH {
            return Err(self.raise("java.lang.StackOverflowError", ""));
        }
        let info = self
            .table
            .get(fqn)
            .ok_or_else(|| self.raise("java.lang.IllegalStateException", format!("no class {fqn}")))?;
        if info.external {
            // Builtin exception types: capture the message, no body to run.
            let mut fields = HashMap::new();
            let message = args.first().cloned().unwrap_or(Value::Null);
            fields.insert("message".to_string(), message);
            return Ok(Value::Obj(Rc::new(RefCell::new(ObjData {
                class: fqn.to_string(),
                fields,
            }))));
        }
        let &(ui, ti) = self
            .decls
            .get(fqn)
            .ok_or_else(|| self.raise("java.lang.IllegalStateException", format!("no source for {fqn}")))?;
        let decl = &self.units[ui].types[ti];
        let ctor = decl
            .ctors
            .iter()
            .find(|c| arity_ok(&c.params, args.len()))
            .ok_or_else(|| {
                self.raise(
                    "java.lang.IllegalStateException",
                    format!("no constructor {fqn}/{}", args.len()),
                )
            })?;

        let mut fields = HashMap::new();
        for f in self.table.all_fields(fqn) {
            fields.insert(f.name.clone(), default_value(&f.ty));
        }
        let obj = Value::Obj(Rc::new(RefCell::new(ObjData {
            class: fqn.to_string(),
            fields,
        })));

        self.stack.push(CallFrame {
            class: fqn.to_string(),
            method: "<init>".to_string(),
            line,
        });
        let init_out = self.run_field_inits(fqn, &obj);
        let out = match init_out {
            Ok(()) => {
                let mut env = Env::new(Some(obj.clone()));
                self.bind_params(&ctor.params, args, &mut env);
                self.exec_block(&ctor.body, &mut env, ui)
            }
            Err(t) => Err(t),
        };
        self.stack.pop();
        out?;
        Ok(obj)
    }

    /// Evaluates field initializers, superclass first.
    fn run_field_inits(&mut self, fqn: &str, obj: &Value) -> Result<(), Thrown> {
        let mut chain = Vec::new();
        let mut cur = Some(fqn.to_string());
        while let Some(f) = cur {
            cur = self.table.get(&f).and_then(|i| i.super_fqn.clone());
            if self.decls.contains_key(&f) {
                chain.push(f);
            }
            if chain.len() > 64 {
                break;
            }
        }
        for class in chain.into_iter().rev() {
            let &(ui, ti) = self.decls.get(&class).unwrap();
            let decl = &self.units[ui].types[ti];
            let inits: Vec<(String, &Expr)> = decl
                .fields
                .iter()
                .filter_map(|f| f.init.as_ref().map(|e| (f.name.clone(), e)))
                .collect();
            if inits.is_empty() {
                continue;
            }
            let mut env = Env::new(Some(obj.clone()));
            for (name, expr) in inits {
                let v = self.eval(expr, &mut env, ui)?;
                if let Value::Obj(data) = obj {
                    data.borrow_mut().fields.insert(name, v);
                }
            }
        }
        Ok(())
    }

    fn exec_block(&mut self, block: &Block, env: &mut Env, ui: usize) -> Exec {
        env.push();
        let mut out = Ctl::Normal;
        for stmt in &block.stmts {
            match self.exec_stmt(stmt, env, ui) {
                Ok(Ctl::Normal) => continue,
                Ok(flow) => {
                    out = flow;
                    break;
                }
                Err(t) => {
                    env.pop();
                    return Err(t);
                }
            }
        }
        env.pop();
        Ok(out)
    }

    fn exec_stmt(&mut self, stmt: &Stmt, env: &mut Env, ui: usize) -> Exec {
        match stmt {
            Stmt::VarDecl { name, init, line, .. } => {
                self.set_line(*line);
                let v = self.eval(init, env, ui)?;
                env.declare(name, v);
                Ok(Ctl::Normal)
            }
            Stmt::Assign { target, value, line } => {
                self.set_line(*line);
                let v = self.eval(value, env, ui)?;
                self.assign(target, v, env, ui)?;
                Ok(Ctl::Normal)
            }
            Stmt::Expr { expr, line } => {
                self.set_line(*line);
                self.eval(expr, env, ui)?;
                Ok(Ctl::Normal)
            }
            Stmt::If {
                site,
                cond,
                then_branch,
                else_branch,
                line,
            } => {
                self.set_line(*line);
                let c = self.truth(cond, env, ui)?;
                self.hit(*site, if c { "true" } else { "false" });
                if c {
                    self.exec_block(then_branch, env, ui)
                } else if let Some(e) = else_branch {
                    self.exec_block(e, env, ui)
                } else {
                    Ok(Ctl::Normal)
                }
            }
            Stmt::While {
                site,
                cond,
                body,
                line,
            } => {
                loop {
                    self.set_line(*line);
                    let c = self.truth(cond, env, ui)?;
                    self.hit(*site, if c { "true" } else { "false" });
                    if !c {
                        break;
                    }
                    match self.exec_block(body, env, ui)? {
                        Ctl::Normal => {}
                        Ctl::Break => break,
                        ret @ Ctl::Return(_) => return Ok(ret),
                    }
                }
                Ok(Ctl::Normal)
            }
            Stmt::Switch {
                site,
                scrutinee,
                cases,
                default,
                line,
            } => {
                self.set_line(*line);
                let v = self.eval(scrutinee, env, ui)?;
                let start = cases.iter().position(|c| lit_matches(&c.label, &v));
                match start {
                    Some(i) => self.hit(*site, &format!("case{i}")),
                    None => self.hit(*site, "default"),
                }
                env.push();
                let mut flow = Ctl::Normal;
                let mut fell = false;
                'run: {
                    if let Some(i) = start {
                        for case in &cases[i..] {
                            for s in &case.stmts {
                                match self.exec_stmt(s, env, ui) {
                                    Ok(Ctl::Normal) => {}
                                    Ok(Ctl::Break) => break 'run,
                                    Ok(ret) => {
                                        flow = ret;
                                        break 'run;
                                    }
                                    Err(t) => {
                                        env.pop();
                                        return Err(t);
                                    }
                                }
                            }
                        }
                        fell = true;
                    }
                    if start.is_none() || fell {
                        if let Some(d) = default {
                            for s in d {
                                match self.exec_stmt(s, env, ui) {
                                    Ok(Ctl::Normal) => {}
                                    Ok(Ctl::Break) => break 'run,
                                    Ok(ret) => {
                                        flow = ret;
                                        break 'run;
                                    }
                                    Err(t) => {
                                        env.pop();
                                        return Err(t);
                                    }
                                }
                            }
                        }
                    }
                }
                env.pop();
                Ok(flow)
            }
            Stmt::Try { body, catches, .. } => {
                match self.exec_block(body, env, ui) {
                    Ok(flow) => Ok(flow),
                    Err(thrown) => {
                        for c in catches {
                            let unit = &self.units[ui];
                            let want = self.table.resolve_name(unit, &c.ex_type);
                            if self.table.is_subtype(&thrown.fqn, &want) {
                                self.hit(c.site, "enter");
                                self.set_line(c.line);
                                let bound = thrown.value.clone().unwrap_or_else(|| {
                                    let mut fields = HashMap::new();
                                    fields.insert(
                                        "message".to_string(),
                                        Value::Str(thrown.message.clone()),
                                    );
                                    Value::Obj(Rc::new(RefCell::new(ObjData {
                                        class: thrown.fqn.clone(),
                                        fields,
                                    })))
                                });
                                env.push();
                                env.declare(&c.var, bound);
                                let out = self.exec_block(&c.body, env, ui);
                                env.pop();
                                return out;
                            }
                        }
                        Err(thrown)
                    }
                }
            }
            Stmt::Return { value, line } => {
                self.set_line(*line);
                let v = match value {
                    Some(e) => self.eval(e, env, ui)?,
                    None => Value::Null,
                };
                Ok(Ctl::Return(v))
            }
            Stmt::Throw { value, line } => {
                self.set_line(*line);
                let v = self.eval(value, env, ui)?;
                match v {
                    Value::Obj(data) => {
                        let (class, message) = {
                            let d = data.borrow();
                            let msg = match d.fields.get("message") {
                                Some(Value::Str(s)) => s.clone(),
                                _ => String::new(),
                            };
                            (d.class.clone(), msg)
                        };
                        Err(Thrown {
                            fqn: class,
                            message,
                            frames: self.snapshot(),
                            value: Some(Value::Obj(data)),
                        })
                    }
                    Value::Null => Err(self.raise(
                        "java.lang.NullPointerException",
                        "Cannot throw null",
                    )),
                    _ => Err(self.raise(
                        "java.lang.IllegalStateException",
                        "throw of a non-object value",
                    )),
                }
            }
            Stmt::Break { .. } => Ok(Ctl::Break),
            Stmt::Block(b) => self.exec_block(b, env, ui),
        }
    }

    fn assign(&mut self, target: &Expr, v: Value, env: &mut Env, ui: usize) -> Result<(), Thrown> {
        match target {
            Expr::Name(name, line) => {
                if env.set(name, v.clone()) {
                    return Ok(());
                }
                // Implicit this-field write.
                if let Some(Value::Obj(data)) = env.this.clone() {
                    if data.borrow().fields.contains_key(name) {
                        data.borrow_mut().fields.insert(name.clone(), v);
                        return Ok(());
                    }
                }
                Err(self.raise(
                    "java.lang.IllegalStateException",
                    format!("assignment to unknown name {name} at line {line}"),
                ))
            }
            Expr::Field { target, name, .. } => {
                let t = self.eval(target, env, ui)?;
                match t {
                    Value::Obj(data) => {
                        data.borrow_mut().fields.insert(name.clone(), v);
                        Ok(())
                    }
                    Value::Null => Err(self.raise(
                        "java.lang.NullPointerException",
                        format!("Cannot assign field \"{name}\" because the target is null"),
                    )),
                    _ => Err(self.raise(
                        "java.lang.IllegalStateException",
                        format!("field write on a non-object value: {name}"),
                    )),
                }
            }
            Expr::Index { target, index, .. } => {
                let arr = self.eval(target, env, ui)?;
                let idx = self.eval(index, env, ui)?;
                let i = self.int_of(&idx)?;
                match arr {
                    Value::Arr(items) => {
                        let len = items.borrow().len();
                        if i < 0 || i as usize >= len {
                            return Err(self.raise(
                                "java.lang.ArrayIndexOutOfBoundsException",
                                format!("Index {i} out of bounds for length {len}"),
                            ));
                        }
                        items.borrow_mut()[i as usize] = v;
                        Ok(())
                    }
                    Value::Null => Err(self.raise(
                        "java.lang.NullPointerException",
                        "Cannot store to null array",
                    )),
                    _ => Err(self.raise(
                        "java.lang.IllegalStateException",
                        "index write on a non-array value",
                    )),
                }
            }
            _ => Err(self.raise("java.lang.IllegalStateException", "invalid assignment target")),
        }
    }

    fn truth(&mut self, e: &Expr, env: &mut Env, ui: usize) -> Result<bool, Thrown> {
        match self.eval(e, env, ui)? {
            Value::Bool(b) => Ok(b),
            other => Err(self.raise(
                "java.lang.IllegalStateException",
                format!("condition evaluated to {}", fmt_value(&other)),
            )),
        }
    }

    fn int_of(&self, v: &Value) -> Result<i64, Thrown> {
        match v {
            Value::Int(i) => Ok(*i),
            other => Err(self.raise(
                "java.lang.IllegalStateException",
                format!("expected an integer, got {}", fmt_value(other)),
            )),
        }
    }

    fn eval(&mut self, expr: &Expr, env: &mut Env, ui: usize) -> Eval {
        match expr {
            Expr::Lit(lit, _) => Ok(match lit {
                Lit::Int(v) | Lit::Long(v) => Value::Int(*v),
                Lit::Float(v) | Lit::Double(v) => Value::Float(*v),
                Lit::Str(s) => Value::Str(s.clone()),
                Lit::Bool(b) => Value::Bool(*b),
                Lit::Null => Value::Null,
            }),
            Expr::Name(name, _) => {
                if let Some(v) = env.get(name) {
                    return Ok(v);
                }
                if let Some(Value::Obj(data)) = env.this.clone() {
                    if let Some(v) = data.borrow().fields.get(name) {
                        return Ok(v.clone());
                    }
                }
                Err(self.raise(
                    "java.lang.IllegalStateException",
                    format!("unknown name {name}"),
                ))
            }
            Expr::This(_) => env.this.clone().ok_or_else(|| {
                self.raise("java.lang.IllegalStateException", "this outside an instance")
            }),
            Expr::Field { target, name, .. } => {
                let t = self.eval(target, env, ui)?;
                match t {
                    Value::Arr(items) if name == "length" => {
                        Ok(Value::Int(items.borrow().len() as i64))
                    }
                    Value::Obj(data) => {
                        let d = data.borrow();
                        d.fields.get(name).cloned().ok_or_else(|| {
                            self.raise(
                                "java.lang.IllegalStateException",
                                format!("no field {} on {}", name, d.class),
                            )
                        })
                    }
                    Value::Null => Err(self.raise(
                        "java.lang.NullPointerException",
                        format!("Cannot read field \"{name}\" because the target is null"),
                    )),
                    other => Err(self.raise(
                        "java.lang.IllegalStateException",
                        format!("field read on {}", fmt_value(&other)),
                    )),
                }
            }
            Expr::Index { target, index, .. } => {
                let arr = self.eval(target, env, ui)?;
                let idx = self.eval(index, env, ui)?;
                let i = self.int_of(&idx)?;
                match arr {
                    Value::Arr(items) => {
                        let items = items.borrow();
                        if i < 0 || i as usize >= items.len() {
                            return Err(self.raise(
                                "java.lang.ArrayIndexOutOfBoundsException",
                                format!("Index {} out of bounds for length {}", i, items.len()),
                            ));
                        }
                        Ok(items[i as usize].clone())
                    }
                    Value::Null => Err(self.raise(
                        "java.lang.NullPointerException",
                        "Cannot load from null array",
                    )),
                    other => Err(self.raise(
                        "java.lang.IllegalStateException",
                        format!("index read on {}", fmt_value(&other)),
                    )),
                }
            }
            Expr::Call {
                target,
                name,
                args,
                line,
            } => self.eval_call(target.as_deref(), name, args, *line, env, ui),
            Expr::New { class, args, line } => {
                let unit = &self.units[ui];
                let fqn = self.table.resolve_name(unit, class);
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env, ui)?);
                }
                self.set_line(*line);
                self.construct(&fqn, vals, *line)
            }
            Expr::NewArray { items, .. } => {
                let mut vals = Vec::with_capacity(items.len());
                for item in items {
                    vals.push(self.eval(item, env, ui)?);
                }
                Ok(Value::Arr(Rc::new(RefCell::new(vals))))
            }
            Expr::Unary { op, operand, .. } => {
                let v = self.eval(operand, env, ui)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
                    (UnOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (_, other) => Err(self.raise(
                        "java.lang.IllegalStateException",
                        format!("bad unary operand {}", fmt_value(&other)),
                    )),
                }
            }
            Expr::Binary { op, lhs, rhs, .. } => {
                let l = self.eval(lhs, env, ui)?;
                let r = self.eval(rhs, env, ui)?;
                self.binary(*op, l, r)
            }
            Expr::And { site, lhs, rhs, .. } => {
                let l = self.truth(lhs, env, ui)?;
                self.hit(*site, if l { "true" } else { "false" });
                if !l {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(self.truth(rhs, env, ui)?))
            }
            Expr::Or { site, lhs, rhs, .. } => {
                let l = self.truth(lhs, env, ui)?;
                self.hit(*site, if l { "true" } else { "false" });
                if l {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(self.truth(rhs, env, ui)?))
            }
            Expr::Ternary {
                site,
                cond,
                then_val,
                else_val,
                ..
            } => {
                let c = self.truth(cond, env, ui)?;
                self.hit(*site, if c { "true" } else { "false" });
                if c {
                    self.eval(then_val, env, ui)
                } else {
                    self.eval(else_val, env, ui)
                }
            }
        }
    }

    fn eval_call(
        &mut self,
        target: Option<&Expr>,
        name: &str,
        args: &[Expr],
        line: u32,
        env: &mut Env,
        ui: usize,
    ) -> Eval {
        // Static-call target: a bare name that is not a local variable.
        if let Some(Expr::Name(n, _)) = target {
            if env.get(n).is_none() {
                let is_this_field = matches!(&env.this, Some(Value::Obj(d)) if d.borrow().fields.contains_key(n));
                if !is_this_field {
                    let unit = &self.units[ui];
                    let fqn = self.table.resolve_name(unit, n);
                    if self.decls.contains_key(&fqn) {
                        let mut vals = Vec::with_capacity(args.len());
                        for a in args {
                            vals.push(self.eval(a, env, ui)?);
                        }
                        self.set_line(line);
                        let (owner, mui, m) =
                            self.find_method_decl(&fqn, name, args.len()).ok_or_else(|| {
                                self.raise(
                                    "java.lang.IllegalStateException",
                                    format!("no method {fqn}.{name}/{}", args.len()),
                                )
                            })?;
                        return self.invoke(&owner, mui, m, None, vals);
                    }
                    if builtin_owner(n) {
                        let mut vals = Vec::with_capacity(args.len());
                        for a in args {
                            vals.push(self.eval(a, env, ui)?);
                        }
                        self.set_line(line);
                        return self.builtin_static(n, name, vals);
                    }
                }
            }
        }

        match target {
            None => {
                // Unqualified call: dispatch on this (or static sibling).
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env, ui)?);
                }
                self.set_line(line);
                let owner_class = self.stack.last().map(|f| f.class.clone()).unwrap_or_default();
                let runtime_class = match &env.this {
                    Some(Value::Obj(d)) => d.borrow().class.clone(),
                    _ => owner_class,
                };
                let (owner, mui, m) = self
                    .find_method_decl(&runtime_class, name, args.len())
                    .ok_or_else(|| {
                        self.raise(
                            "java.lang.IllegalStateException",
                            format!("no method {runtime_class}.{name}/{}", args.len()),
                        )
                    })?;
                let this = if m.is_static { None } else { env.this.clone() };
                self.invoke(&owner, mui, m, this, vals)
            }
            Some(t) => {
                let recv = self.eval(t, env, ui)?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env, ui)?);
                }
                self.set_line(line);
                match recv {
                    Value::Str(s) => self.string_method(&s, name, &vals),
                    Value::Obj(data) => {
                        let class = data.borrow().class.clone();
                        let (owner, mui, m) = self
                            .find_method_decl(&class, name, args.len())
                            .ok_or_else(|| {
                                self.raise(
                                    "java.lang.IllegalStateException",
                                    format!("no method {class}.{name}/{}", args.len()),
                                )
                            })?;
                        let this = if m.is_static {
                            None
                        } else {
                            Some(Value::Obj(data.clone()))
                        };
                        self.invoke(&owner, mui, m, this, vals)
                    }
                    Value::Null => Err(self.raise(
                        "java.lang.NullPointerException",
                        format!("Cannot invoke \"{name}\" because the target is null"),
                    )),
                    other => Err(self.raise(
                        "java.lang.IllegalStateException",
                        format!("method call on {}", fmt_value(&other)),
                    )),
                }
            }
        }
    }

    fn string_method(&self, s: &str, name: &str, args: &[Value]) -> Eval {
        match (name, args) {
            ("length", []) => Ok(Value::Int(s.chars().count() as i64)),
            ("isEmpty", []) => Ok(Value::Bool(s.is_empty())),
            ("equals", [Value::Str(o)]) => Ok(Value::Bool(s == o)),
            ("equals", [_]) => Ok(Value::Bool(false)),
            _ => Err(self.raise(
                "java.lang.IllegalStateException",
                format!("unsupported String method {name}"),
            )),
        }
    }

    fn builtin_static(&mut self, owner: &str, name: &str, args: Vec<Value>) -> Eval {
        match (owner, name, args.as_slice()) {
            ("Float" | "Double", "parseFloat" | "parseDouble", [Value::Str(s)]) => {
                s.trim().parse::<f64>().map(Value::Float).map_err(|_| {
                    self.raise(
                        "java.lang.NumberFormatException",
                        format!("For input string: \"{s}\""),
                    )
                })
            }
            ("Long" | "Integer", "parseLong" | "parseInt", [Value::Str(s)]) => {
                s.trim().parse::<i64>().map(Value::Int).map_err(|_| {
                    self.raise(
                        "java.lang.NumberFormatException",
                        format!("For input string: \"{s}\""),
                    )
                })
            }
            ("Math", "abs", [Value::Int(i)]) => Ok(Value::Int(i.wrapping_abs())),
            ("Math", "abs", [Value::Float(f)]) => Ok(Value::Float(f.abs())),
            ("Math", "min", [a, b]) => self.min_max(a, b, true),
            ("Math", "max", [a, b]) => self.min_max(a, b, false),
            _ => Err(self.raise(
                "java.lang.IllegalStateException",
                format!("unsupported builtin {owner}.{name}/{}", args.len()),
            )),
        }
    }

    fn min_max(&self, a: &Value, b: &Value, want_min: bool) -> Eval {
        match (a, b) {
            (Value::Int(x), Value::Int(y)) => Ok(Value::Int(if want_min {
                *x.min(y)
            } else {
                *x.max(y)
            })),
            (x, y) => {
                let (fx, fy) = (as_f64(x), as_f64(y));
                match (fx, fy) {
                    (Some(fx), Some(fy)) => Ok(Value::Float(if want_min {
                        fx.min(fy)
                    } else {
                        fx.max(fy)
                    })),
                    _ => Err(self.raise(
                        "java.lang.IllegalStateException",
                        "min/max on non-numeric operands",
                    )),
                }
            }
        }
    }

    fn binary(&mut self, op: BinOp, l: Value, r: Value) -> Eval {
        use BinOp::*;
        if op == Add && (matches!(l, Value::Str(_)) || matches!(r, Value::Str(_))) {
            return Ok(Value::Str(format!("{}{}", fmt_value(&l), fmt_value(&r))));
        }
        match op {
            Add | Sub | Mul | Div | Rem => match (&l, &r) {
                (Value::Int(a), Value::Int(b)) => {
                    let (a, b) = (*a, *b);
                    if b == 0 && matches!(op, Div | Rem) {
                        return Err(self.raise("java.lang.ArithmeticException", "/ by zero"));
                    }
                    Ok(Value::Int(match op {
                        Add => a.wrapping_add(b),
                        Sub => a.wrapping_sub(b),
                        Mul => a.wrapping_mul(b),
                        Div => a.wrapping_div(b),
                        Rem => a.wrapping_rem(b),
                        _ => unreachable!(),
                    }))
                }
                _ => {
                    let (Some(a), Some(b)) = (as_f64(&l), as_f64(&r)) else {
                        return Err(self.raise(
                            "java.lang.IllegalStateException",
                            format!(
                                "arithmetic on {} and {}",
                                fmt_value(&l),
                                fmt_value(&r)
                            ),
                        ));
                    };
                    Ok(Value::Float(match op {
                        Add => a + b,
                        Sub => a - b,
                        Mul => a * b,
                        Div => a / b,
                        Rem => a % b,
                        _ => unreachable!(),
                    }))
                }
            },
            Lt | Le | Gt | Ge => {
                let (Some(a), Some(b)) = (as_f64(&l), as_f64(&r)) else {
                    return Err(self.raise(
                        "java.lang.IllegalStateException",
                        "comparison on non-numeric operands",
                    ));
                };
                Ok(Value::Bool(match op {
                    Lt => a < b,
                    Le => a <= b,
                    Gt => a > b,
                    Ge => a >= b,
                    _ => unreachable!(),
                }))
            }
            Eq | Ne => {
                let eq = values_equal(&l, &r);
                Ok(Value::Bool(if op == Eq { eq } else { !eq }))
            }
        }
    }
}

fn arity_ok(params: &[Param], argc: usize) -> bool {
    if params.last().is_some_and(|p| p.variadic) {
        argc >= params.len().saturating_sub(1)
    } else {
        argc == params.len()
    }
}

fn builtin_owner(name: &str) -> bool {
    matches!(name, "Float" | "Double" | "Long" | "Integer" | "Math")
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn lit_matches(label: &Lit, v: &Value) -> bool {
    match (label, v) {
        (Lit::Int(a) | Lit::Long(a), Value::Int(b)) => a == b,
        (Lit::Str(a), Value::Str(b)) => a == b,
        _ => false,
    }
}

fn values_equal(l: &Value, r: &Value) -> bool {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => a == b,
        (Value::Bool(a), Value::Bool(b)) => a == b,
        (Value::Str(a), Value::Str(b)) => a == b,
        (Value::Null, Value::Null) => true,
        (Value::Obj(a), Value::Obj(b)) => Rc::ptr_eq(a, b),
        (Value::Arr(a), Value::Arr(b)) => Rc::ptr_eq(a, b),
        (Value::Null, _) | (_, Value::Null) => false,
        (a, b) => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

fn default_value(ty: &RTy) -> Value {
    match ty {
        RTy::Int | RTy::Long => Value::Int(0),
        RTy::Float | RTy::Double => Value::Float(0.0),
        RTy::Boolean => Value::Bool(false),
        _ => Value::Null,
    }
}

/// Deterministic rendering used for string concatenation and messages.
pub fn fmt_value(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(f) => {
            if f.is_finite() && f.fract() == 0.0 && f.abs() < 1e16 {
                format!("{f:.1}")
            } else {
                format!("{f}")
            }
        }
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => s.clone(),
        Value::Null => "null".to_string(),
        Value::Obj(d) => format!("<{}>", d.borrow().class),
        Value::Arr(items) => format!("<array of {}>", items.borrow().len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_unit;
    use crate::lang::sema::ClassTable;

    fn run(sources: &[(&str, &str)], owner: &str, method: &str) -> (Result<Value, Thrown>, MemorySink) {
        let units: Vec<Unit> = sources
            .iter()
            .map(|(p, s)| parse_unit(p, s).unwrap())
            .collect();
        let table = ClassTable::build(&units);
        let mut sink = MemorySink::default();
        let out = {
            let mut interp = Interp::new(&table, &units, &mut sink);
            interp.call_static(owner, method, Vec::new())
        };
        (out, sink)
    }

    #[test]
    fn arithmetic_and_branches() {
        let src = r#"
public class M {
    public static int pick(int a) {
        if (a > 1 && a < 10) { return a * 2; }
        return 0;
    }
    public static int go() { return pick(3) + pick(0); }
}
"#;
        let (out, sink) = run(&[("M.java", src)], "M", "go");
        match out.unwrap() {
            Value::Int(6) => {}
            other => panic!("unexpected {other:?}"),
        }
        // Both arms of the if (site 0) and of && (site 1) were exercised.
        let arms: Vec<_> = sink.edges.iter().map(|e| (e.2, e.3.as_str())).collect();
        assert!(arms.contains(&(0, "true")));
        assert!(arms.contains(&(0, "false")));
        assert!(arms.contains(&(1, "true")));
        assert!(arms.contains(&(1, "false")));
    }

    #[test]
    fn division_by_zero_raises() {
        let src = "public class M { public static int go() { int z = 0; return 5 / z; } }";
        let (out, _) = run(&[("M.java", src)], "M", "go");
        let t = out.unwrap_err();
        assert_eq!(t.fqn, "java.lang.ArithmeticException");
        assert_eq!(t.message, "/ by zero");
        assert_eq!(t.frames[0].method, "go");
    }

    #[test]
    fn array_bounds_raises_with_java_style_message() {
        let src = "public class M { public static int go() { int[] a = new int[]{1, 2}; return a[5]; } }";
        let (out, _) = run(&[("M.java", src)], "M", "go");
        let t = out.unwrap_err();
        assert_eq!(t.fqn, "java.lang.ArrayIndexOutOfBoundsException");
        assert_eq!(t.message, "Index 5 out of bounds for length 2");
    }

    #[test]
    fn null_field_read_raises_npe() {
        let src = r#"
public class M {
    int v;
    public M() { this.v = 1; }
    public static int go() { M m = null; return m.v; }
}
"#;
        let (out, _) = run(&[("M.java", src)], "M", "go");
        let t = out.unwrap_err();
        assert_eq!(t.fqn, "java.lang.NullPointerException");
    }

    #[test]
    fn try_catch_matches_subtypes_and_hits_enter_arm() {
        let src = r#"
public class M {
    public static String go() {
        try {
            int[] a = new int[]{};
            int x = a[0];
            return "no";
        } catch (RuntimeException e) {
            return e.message;
        }
    }
}
"#;
        let (out, sink) = run(&[("M.java", src)], "M", "go");
        match out.unwrap() {
            Value::Str(s) => assert_eq!(s, "Index 0 out of bounds for length 0"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(sink.edges.iter().any(|e| e.3 == "enter"));
    }

    #[test]
    fn switch_falls_through_until_break() {
        let src = r#"
public class M {
    public static int go() {
        int acc = 0;
        switch (2) {
            case 1: acc = acc + 1;
            case 2: acc = acc + 10;
            case 3: acc = acc + 100; break;
            default: acc = acc + 1000;
        }
        return acc;
    }
}
"#;
        let (out, sink) = run(&[("M.java", src)], "M", "go");
        match out.unwrap() {
            Value::Int(110) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(sink.edges.iter().any(|e| e.3 == "case1"));
    }

    #[test]
    fn deep_recursion_raises_stack_overflow() {
        // Interpreter recursion nests native frames, so give the limit room.
        let handle = std::thread::Builder::new()
            .stack_size(256 * 1024 * 1024)
            .spawn(|| {
                let src = "public class M { public static int f(int n) { return f(n + 1); } public static int go() { return f(0); } }";
                let (out, _) = run(&[("M.java", src)], "M", "go");
                let t = out.unwrap_err();
                (t.fqn, t.frames.len())
            })
            .unwrap();
        let (fqn, frames) = handle.join().unwrap();
        assert_eq!(fqn, "java.lang.StackOverflowError");
        assert_eq!(frames, 25);
    }

    #[test]
    fn dynamic_dispatch_uses_runtime_class() {
        let a = "package p; public class A { public A() { } public int tag() { return 1; } public int via() { return this.tag(); } }";
        let b = "package p; public class B extends A { public B() { } public int tag() { return 2; } }";
        let d = "import p.A; import p.B; public class D { public static int go() { A x = new B(); return x.via(); } }";
        let (out, _) = run(&[("p/A.java", a), ("p/B.java", b), ("D.java", d)], "D", "go");
        match out.unwrap() {
            Value::Int(2) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variadic_packs_and_array_passthrough() {
        let src = r#"
public class M {
    public static int count(String tag, long... xs) { return xs.length; }
    public static int go() {
        int a = count("t", 1L, 2L, 3L);
        int b = count("t");
        long[] arr = new long[]{9L};
        int c = count("t", arr);
        return a * 100 + b * 10 + c;
    }
}
"#;
        let (out, _) = run(&[("M.java", src)], "M", "go");
        match out.unwrap() {
            Value::Int(301) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_float_failure_raises_number_format() {
        let src = "public class M { public static float go() { return Float.parseFloat(\"abc\"); } }";
        let (out, _) = run(&[("M.java", src)], "M", "go");
        let t = out.unwrap_err();
        assert_eq!(t.fqn, "java.lang.NumberFormatException");
        assert_eq!(t.message, "For input string: \"abc\"");
    }

    #[test]
    fn string_concat_formats_deterministically() {
        let src = r#"
public class M {
    public static String go() {
        double d = 2.0;
        return "v=" + d + ";n=" + null + ";b=" + true;
    }
}
"#;
        let (out, _) = run(&[("M.java", src)], "M", "go");
        match out.unwrap() {
            Value::Str(s) => assert_eq!(s, "v=2.0;n=null;b=true"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn user_exception_carries_message_field() {
        let ex = "package q; public class BoomException extends RuntimeException { String message; public BoomException(String message) { this.message = message; } }";
        let m = "import q.BoomException; public class M { public static int go() { throw new BoomException(\"kapow\"); } }";
        let (out, _) = run(&[("q/BoomException.java", ex), ("M.java", m)], "M", "go");
        let t = out.unwrap_err();
        assert_eq!(t.fqn, "q.BoomException");
        assert_eq!(t.message, "kapow");
    }

    #[test]
    fn while_loop_with_break() {
        let src = r#"
public class M {
    public static int go() {
        int i = 0;
        while (true) {
            i = i + 1;
            if (i >= 4) { break; }
        }
        return i;
    }
}
"#;
        let (out, _) = run(&[("M.java", src)], "M", "go");
        match out.unwrap() {
            Value::Int(4) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
