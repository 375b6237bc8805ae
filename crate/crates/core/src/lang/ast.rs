//! Syntax tree for the Java-like subset the toolchain analyzes and executes.
//!
//! Branch constructs (`if`, `while`, `switch`, `catch`, ternary, `&&`, `||`)
//! carry a site ordinal assigned by the parser in source order. Site ordinals
//! restart at zero for every method or constructor body, so an edge is fully
//! named by (owner, method, site, arm).

/// Site ordinal, unique within one method or constructor body.
pub type SiteId = u32;

#[derive(Debug, Clone)]
pub struct Unit {
    pub path: String,
    pub package: Option<String>,
    pub imports: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub src: String,
}

#[derive(Debug, Clone)]
pub struct TypeDecl {
    pub doc: Option<String>,
    pub is_public: bool,
    pub is_abstract: bool,
    pub is_interface: bool,
    pub name: String,
    pub extends: Option<String>,
    pub implements: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub ctors: Vec<CtorDecl>,
    pub methods: Vec<MethodDecl>,
    /// Byte span of the whole declaration, doc comment included.
    pub span: (usize, usize),
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub is_public: bool,
    pub is_static: bool,
    pub ty: TypeRef,
    pub name: String,
    pub init: Option<Expr>,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct CtorDecl {
    pub doc: Option<String>,
    pub is_public: bool,
    pub params: Vec<Param>,
    pub throws: Vec<String>,
    pub body: Block,
    pub span: (usize, usize),
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub doc: Option<String>,
    pub is_public: bool,
    pub is_static: bool,
    pub is_abstract: bool,
    pub ret: TypeRef,
    pub name: String,
    pub params: Vec<Param>,
    pub throws: Vec<String>,
    /// None for abstract and interface method declarations.
    pub body: Option<Block>,
    pub span: (usize, usize),
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
    pub variadic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeRef {
    Int,
    Long,
    Float,
    Double,
    Boolean,
    Void,
    Str,
    Class(String),
    Array(Box<TypeRef>),
}

impl TypeRef {
    pub fn is_primitive(&self) -> bool {
        matches!(
            self,
            TypeRef::Int
                | TypeRef::Long
                | TypeRef::Float
                | TypeRef::Double
                | TypeRef::Boolean
                | TypeRef::Str
        )
    }

    /// Canonical display form, e.g. `int`, `java.lang.String`, `long[]`.
    pub fn render(&self, resolve: &dyn Fn(&str) -> String) -> String {
        match self {
            TypeRef::Int => "int".into(),
            TypeRef::Long => "long".into(),
            TypeRef::Float => "float".into(),
            TypeRef::Double => "double".into(),
            TypeRef::Boolean => "boolean".into(),
            TypeRef::Void => "void".into(),
            TypeRef::Str => "java.lang.String".into(),
            TypeRef::Class(n) => resolve(n),
            TypeRef::Array(e) => format!("{}[]", e.render(resolve)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub enum Stmt {
    VarDecl {
        ty: TypeRef,
        name: String,
        init: Expr,
        line: u32,
    },
    Assign {
        target: Expr,
        value: Expr,
        line: u32,
    },
    Expr {
        expr: Expr,
        line: u32,
    },
    If {
        site: SiteId,
        cond: Expr,
        then_branch: Block,
        else_branch: Option<Block>,
        line: u32,
    },
    While {
        site: SiteId,
        cond: Expr,
        body: Block,
        line: u32,
    },
    Switch {
        site: SiteId,
        scrutinee: Expr,
        cases: Vec<SwitchCase>,
        default: Option<Vec<Stmt>>,
        line: u32,
    },
    Try {
        body: Block,
        catches: Vec<CatchClause>,
        line: u32,
    },
    Return {
        value: Option<Expr>,
        line: u32,
    },
    Throw {
        value: Expr,
        line: u32,
    },
    Break {
        line: u32,
    },
    Block(Block),
}

#[derive(Debug, Clone)]
pub struct SwitchCase {
    pub label: Lit,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub struct CatchClause {
    pub site: SiteId,
    pub ex_type: String,
    pub var: String,
    pub body: Block,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub enum Expr {
    Lit(Lit, u32),
    Name(String, u32),
    This(u32),
    Field {
        target: Box<Expr>,
        name: String,
        line: u32,
    },
    Index {
        target: Box<Expr>,
        index: Box<Expr>,
        line: u32,
    },
    Call {
        /// None for unqualified calls resolved against the enclosing class.
        target: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
        line: u32,
    },
    New {
        class: String,
        args: Vec<Expr>,
        line: u32,
    },
    NewArray {
        elem: TypeRef,
        items: Vec<Expr>,
        line: u32,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
        line: u32,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        line: u32,
    },
    And {
        site: SiteId,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        line: u32,
    },
    Or {
        site: SiteId,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        line: u32,
    },
    Ternary {
        site: SiteId,
        cond: Box<Expr>,
        then_val: Box<Expr>,
        else_val: Box<Expr>,
        line: u32,
    },
}

impl Expr {
    pub fn line(&self) -> u32 {
        match self {
            Expr::Lit(_, l)
            | Expr::Name(_, l)
            | Expr::This(l)
            | Expr::Field { line: l, .. }
            | Expr::Index { line: l, .. }
            | Expr::Call { line: l, .. }
            | Expr::New { line: l, .. }
            | Expr::NewArray { line: l, .. }
            | Expr::Unary { line: l, .. }
            | Expr::Binary { line: l, .. }
            | Expr::And { line: l, .. }
            | Expr::Or { line: l, .. }
            | Expr::Ternary { line: l, .. } => *l,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Int(i64),
    Long(i64),
    Float(f64),
    Double(f64),
    Str(String),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}
