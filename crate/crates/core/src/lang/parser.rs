//! Recursive-descent parser producing one `Unit` per source file.
//!
//! Branch-site ordinals are assigned while parsing: each construct takes the
//! next ordinal at its opening token, so the numbering is a stable preorder
//! of the source and identical on every parse of the same file.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::LangError;

pub fn parse_unit(path: &str, src: &str) -> Result<Unit, LangError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        src,
        sites: 0,
    };
    p.unit(path)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    src: &'a str,
    /// Site counter for the body currently being parsed.
    sites: SiteId,
}

#[derive(Default)]
struct Mods {
    public: bool,
    non_public: bool,
    is_static: bool,
    is_abstract: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if let Tok::Sym(t) = self.peek() {
            if *t == s {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<(), LangError> {
        if let Tok::Sym(t) = self.peek() {
            if *t == s {
                self.pos += 1;
                return Ok(());
            }
        }
        Err(LangError::at(
            self.line(),
            format!("expected {:?}, found {:?}", s, self.peek()),
        ))
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if let Tok::Keyword(t) = self.peek() {
            if *t == k {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect_kw(&mut self, k: &'static str) -> Result<(), LangError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(LangError::at(
                self.line(),
                format!("expected keyword {:?}, found {:?}", k, self.peek()),
            ))
        }
    }

    fn expect_ident(&mut self) -> Result<String, LangError> {
        let line = self.line();
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => Err(LangError::at(
                line,
                format!("expected identifier, found {other:?}"),
            )),
        }
    }

    fn next_site(&mut self) -> SiteId {
        let s = self.sites;
        self.sites += 1;
        s
    }

    // ---- declarations ----

    fn unit(&mut self, path: &str) -> Result<Unit, LangError> {
        let mut package = None;
        if self.eat_kw("package") {
            package = Some(self.qualified_name()?);
            self.expect_sym(";")?;
        }
        let mut imports = Vec::new();
        while self.eat_kw("import") {
            imports.push(self.qualified_name()?);
            self.expect_sym(";")?;
        }
        let mut types = Vec::new();
        while *self.peek() != Tok::Eof {
            types.push(self.type_decl()?);
        }
        Ok(Unit {
            path: path.to_string(),
            package,
            imports,
            types,
            src: self.src.to_string(),
        })
    }

    fn qualified_name(&mut self) -> Result<String, LangError> {
        let mut name = self.expect_ident()?;
        while self.eat_sym(".") {
            name.push('.');
            name.push_str(&self.expect_ident()?);
        }
        Ok(name)
    }

    fn doc_and_modifiers(&mut self) -> (Option<String>, Mods, usize, u32) {
        let mut doc = None;
        let start = self.offset();
        if let Tok::DocComment(text) = self.peek() {
            doc = Some(text.clone());
            self.pos += 1;
        }
        let line = self.line();
        let mut mods = Mods::default();
        loop {
            if self.eat_kw("public") {
                mods.public = true;
            } else if self.eat_kw("private") || self.eat_kw("protected") {
                mods.non_public = true;
            } else if self.eat_kw("static") {
                mods.is_static = true;
            } else if self.eat_kw("abstract") {
                mods.is_abstract = true;
            } else if self.eat_kw("final") {
                // recorded nowhere; accepted for source fidelity
            } else {
                break;
            }
        }
        (doc, mods, start, line)
    }

    fn type_decl(&mut self) -> Result<TypeDecl, LangError> {
        let (doc, mods, start, line) = self.doc_and_modifiers();
        let is_interface = if self.eat_kw("class") {
            false
        } else if self.eat_kw("interface") {
            true
        } else {
            return Err(LangError::at(
                self.line(),
                format!("expected class or interface, found {:?}", self.peek()),
            ));
        };
        let name = self.expect_ident()?;
        let mut extends = None;
        let mut implements = Vec::new();
        if self.eat_kw("extends") {
            extends = Some(self.qualified_name()?);
        }
        if self.eat_kw("implements") {
            loop {
                implements.push(self.qualified_name()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("{")?;
        let mut fields = Vec::new();
        let mut ctors = Vec::new();
        let mut methods = Vec::new();
        while !self.eat_sym("}") {
            if *self.peek() == Tok::Eof {
                return Err(LangError::at(self.line(), "unterminated type body"));
            }
            self.member(&name, is_interface, &mut fields, &mut ctors, &mut methods)?;
        }
        let end = self.toks[self.pos - 1].offset + 1;
        Ok(TypeDecl {
            doc,
            is_public: mods.public,
            is_abstract: mods.is_abstract || is_interface,
            is_interface,
            name,
            extends,
            implements,
            fields,
            ctors,
            methods,
            span: (start, end),
            line,
        })
    }

    fn member(
        &mut self,
        type_name: &str,
        in_interface: bool,
        fields: &mut Vec<FieldDecl>,
        ctors: &mut Vec<CtorDecl>,
        methods: &mut Vec<MethodDecl>,
    ) -> Result<(), LangError> {
        let (doc, mods, start, line) = self.doc_and_modifiers();
        // Constructor: the type name followed directly by '('.
        if let Tok::Ident(id) = self.peek() {
            if id == type_name && *self.peek_at(1) == Tok::Sym("(") {
                self.pos += 1;
                let params = self.params()?;
                let throws = self.throws_clause()?;
                self.sites = 0;
                let body = self.block()?;
                let end = self.toks[self.pos - 1].offset + 1;
                ctors.push(CtorDecl {
                    doc,
                    is_public: mods.public,
                    params,
                    throws,
                    body,
                    span: (start, end),
                    line,
                });
                return Ok(());
            }
        }
        let ty = self.type_ref()?;
        let name = self.expect_ident()?;
        if *self.peek() == Tok::Sym("(") {
            let params = self.params()?;
            let throws = self.throws_clause()?;
            let is_abstract = mods.is_abstract || (in_interface && *self.peek() == Tok::Sym(";"));
            let body = if self.eat_sym(";") {
                None
            } else {
                self.sites = 0;
                Some(self.block()?)
            };
            let end = self.toks[self.pos - 1].offset + 1;
            methods.push(MethodDecl {
                doc,
                is_public: mods.public || in_interface,
                is_static: mods.is_static,
                is_abstract,
                ret: ty,
                name,
                params,
                throws,
                body,
                span: (start, end),
                line,
            });
            return Ok(());
        }
        let init = if self.eat_sym("=") {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect_sym(";")?;
        fields.push(FieldDecl {
            is_public: mods.public,
            is_static: mods.is_static,
            ty,
            name,
            init,
            line,
        });
        Ok(())
    }

    fn params(&mut self) -> Result<Vec<Param>, LangError> {
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if self.eat_sym(")") {
            return Ok(params);
        }
        loop {
            let ty = self.type_ref()?;
            let variadic = self.eat_sym("...");
            let ty = if variadic {
                TypeRef::Array(Box::new(ty))
            } else {
                ty
            };
            let name = self.expect_ident()?;
            params.push(Param { ty, name, variadic });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        if let Some(pos) = params.iter().position(|p| p.variadic) {
            if pos != params.len() - 1 {
                return Err(LangError::at(
                    self.line(),
                    "variadic parameter must be last",
                ));
            }
        }
        Ok(params)
    }

    fn throws_clause(&mut self) -> Result<Vec<String>, LangError> {
        let mut throws = Vec::new();
        if self.eat_kw("throws") {
            loop {
                throws.push(self.qualified_name()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        Ok(throws)
    }

    fn type_ref(&mut self) -> Result<TypeRef, LangError> {
        let base = if self.eat_kw("int") {
            TypeRef::Int
        } else if self.eat_kw("long") {
            TypeRef::Long
        } else if self.eat_kw("float") {
            TypeRef::Float
        } else if self.eat_kw("double") {
            TypeRef::Double
        } else if self.eat_kw("boolean") {
            TypeRef::Boolean
        } else if self.eat_kw("void") {
            TypeRef::Void
        } else {
            let name = self.qualified_name()?;
            if name == "String" || name == "java.lang.String" {
                TypeRef::Str
            } else {
                TypeRef::Class(name)
            }
        };
        let mut ty = base;
        while *self.peek() == Tok::Sym("[") && *self.peek_at(1) == Tok::Sym("]") {
            self.pos += 2;
            ty = TypeRef::Array(Box::new(ty));
        }
        Ok(ty)
    }

    // ---- statements ----

    fn block(&mut self) -> Result<Block, LangError> {
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.eat_sym("}") {
            if *self.peek() == Tok::Eof {
                return Err(LangError::at(self.line(), "unterminated block"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts })
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        let line = self.line();
        match self.peek() {
            Tok::Sym("{") => Ok(Stmt::Block(self.block()?)),
            Tok::Keyword("if") => self.if_stmt(),
            Tok::Keyword("while") => {
                self.pos += 1;
                let site = self.next_site();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let body = self.block_or_single()?;
                Ok(Stmt::While {
                    site,
                    cond,
                    body,
                    line,
                })
            }
            Tok::Keyword("switch") => self.switch_stmt(),
            Tok::Keyword("try") => self.try_stmt(),
            Tok::Keyword("return") => {
                self.pos += 1;
                let value = if *self.peek() == Tok::Sym(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_sym(";")?;
                Ok(Stmt::Return { value, line })
            }
            Tok::Keyword("throw") => {
                self.pos += 1;
                let value = self.expr()?;
                self.expect_sym(";")?;
                Ok(Stmt::Throw { value, line })
            }
            Tok::Keyword("break") => {
                self.pos += 1;
                self.expect_sym(";")?;
                Ok(Stmt::Break { line })
            }
            _ => self.simple_stmt(),
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, LangError> {
        let line = self.line();
        self.expect_kw("if")?;
        let site = self.next_site();
        self.expect_sym("(")?;
        let cond = self.expr()?;
        self.expect_sym(")")?;
        let then_branch = self.block_or_single()?;
        let else_branch = if self.eat_kw("else") {
            if *self.peek() == Tok::Keyword("if") {
                let nested = self.if_stmt()?;
                Some(Block {
                    stmts: vec![nested],
                })
            } else {
                Some(self.block_or_single()?)
            }
        } else {
            None
        };
        Ok(Stmt::If {
            site,
            cond,
            then_branch,
            else_branch,
            line,
        })
    }

    fn block_or_single(&mut self) -> Result<Block, LangError> {
        if *self.peek() == Tok::Sym("{") {
            self.block()
        } else {
            let stmt = self.stmt()?;
            Ok(Block { stmts: vec![stmt] })
        }
    }

    fn switch_stmt(&mut self) -> Result<Stmt, LangError> {
        let line = self.line();
        self.expect_kw("switch")?;
        let site = self.next_site();
        self.expect_sym("(")?;
        let scrutinee = self.expr()?;
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let mut cases = Vec::new();
        let mut default = None;
        loop {
            if self.eat_sym("}") {
                break;
            }
            if self.eat_kw("case") {
                let label = match self.bump() {
                    Tok::IntLit(v) => Lit::Int(v),
                    Tok::LongLit(v) => Lit::Long(v),
                    Tok::StrLit(s) => Lit::Str(s),
                    other => {
                        return Err(LangError::at(
                            line,
                            format!("unsupported case label {other:?}"),
                        ))
                    }
                };
                self.expect_sym(":")?;
                let stmts = self.case_body()?;
                cases.push(SwitchCase { label, stmts });
            } else if self.eat_kw("default") {
                self.expect_sym(":")?;
                default = Some(self.case_body()?);
            } else {
                return Err(LangError::at(
                    self.line(),
                    format!("expected case or default, found {:?}", self.peek()),
                ));
            }
        }
        Ok(Stmt::Switch {
            site,
            scrutinee,
            cases,
            default,
            line,
        })
    }

    fn case_body(&mut self) -> Result<Vec<Stmt>, LangError> {
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Tok::Keyword("case") | Tok::Keyword("default") | Tok::Sym("}") => break,
                Tok::Eof => return Err(LangError::at(self.line(), "unterminated switch")),
                _ => stmts.push(self.stmt()?),
            }
        }
        Ok(stmts)
    }

    fn try_stmt(&mut self) -> Result<Stmt, LangError> {
        let line = self.line();
        self.expect_kw("try")?;
        let body = self.block()?;
        let mut catches = Vec::new();
        while self.eat_kw("catch") {
            let site = self.next_site();
            let cline = self.line();
            self.expect_sym("(")?;
            let ex_type = self.qualified_name()?;
            let var = self.expect_ident()?;
            self.expect_sym(")")?;
            let cbody = self.block()?;
            catches.push(CatchClause {
                site,
                ex_type,
                var,
                body: cbody,
                line: cline,
            });
        }
        if catches.is_empty() {
            return Err(LangError::at(line, "try without catch"));
        }
        Ok(Stmt::Try {
            body,
            catches,
            line,
        })
    }

    /// Variable declaration, assignment, or expression statement.
    fn simple_stmt(&mut self) -> Result<Stmt, LangError> {
        let line = self.line();
        if self.starts_var_decl() {
            let ty = self.type_ref()?;
            let name = self.expect_ident()?;
            self.expect_sym("=")?;
            let init = self.expr()?;
            self.expect_sym(";")?;
            return Ok(Stmt::VarDecl {
                ty,
                name,
                init,
                line,
            });
        }
        let expr = self.expr()?;
        if self.eat_sym("=") {
            let value = self.expr()?;
            self.expect_sym(";")?;
            match expr {
                Expr::Name(..) | Expr::Field { .. } | Expr::Index { .. } => Ok(Stmt::Assign {
                    target: expr,
                    value,
                    line,
                }),
                _ => Err(LangError::at(line, "invalid assignment target")),
            }
        } else {
            self.expect_sym(";")?;
            Ok(Stmt::Expr { expr, line })
        }
    }

    /// Lookahead for `Type name =` without consuming tokens.
    fn starts_var_decl(&self) -> bool {
        match self.peek() {
            Tok::Keyword(k)
                if matches!(*k, "int" | "long" | "float" | "double" | "boolean") => true,
            Tok::Ident(_) => {
                // Ident (.' Ident)* ('[' ']')* Ident '='
                let mut n = 1;
                while *self.peek_at(n) == Tok::Sym(".") {
                    if !matches!(self.peek_at(n + 1), Tok::Ident(_)) {
                        return false;
                    }
                    n += 2;
                }
                while *self.peek_at(n) == Tok::Sym("[") && *self.peek_at(n + 1) == Tok::Sym("]") {
                    n += 2;
                }
                matches!(self.peek_at(n), Tok::Ident(_)) && *self.peek_at(n + 1) == Tok::Sym("=")
            }
            _ => false,
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.ternary()
    }

    fn ternary(&mut self) -> Result<Expr, LangError> {
        let cond = self.or_expr()?;
        if self.eat_sym("?") {
            let line = self.line();
            let site = self.next_site();
            let then_val = self.expr()?;
            self.expect_sym(":")?;
            let else_val = self.expr()?;
            return Ok(Expr::Ternary {
                site,
                cond: Box::new(cond),
                then_val: Box::new(then_val),
                else_val: Box::new(else_val),
                line,
            });
        }
        Ok(cond)
    }

    fn or_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Sym("||") {
            let line = self.line();
            self.pos += 1;
            let site = self.next_site();
            let rhs = self.and_expr()?;
            lhs = Expr::Or {
                site,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                line,
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.equality()?;
        while *self.peek() == Tok::Sym("&&") {
            let line = self.line();
            self.pos += 1;
            let site = self.next_site();
            let rhs = self.equality()?;
            lhs = Expr::And {
                site,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                line,
            };
        }
        Ok(lhs)
    }

    fn equality(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.relational()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("==") => BinOp::Eq,
                Tok::Sym("!=") => BinOp::Ne,
                _ => break,
            };
            let line = self.line();
            self.pos += 1;
            let rhs = self.relational()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                line,
            };
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("<") => BinOp::Lt,
                Tok::Sym("<=") => BinOp::Le,
                Tok::Sym(">") => BinOp::Gt,
                Tok::Sym(">=") => BinOp::Ge,
                _ => break,
            };
            let line = self.line();
            self.pos += 1;
            let rhs = self.additive()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                line,
            };
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => break,
            };
            let line = self.line();
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                line,
            };
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                Tok::Sym("%") => BinOp::Rem,
                _ => break,
            };
            let line = self.line();
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                line,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        let line = self.line();
        if self.eat_sym("-") {
            let operand = self.unary()?;
            return Ok(Expr::Unary {
                op: UnOp::Neg,
                operand: Box::new(operand),
                line,
            });
        }
        if self.eat_sym("!") {
            let operand = self.unary()?;
            return Ok(Expr::Unary {
                op: UnOp::Not,
                operand: Box::new(operand),
                line,
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut expr = self.primary()?;
        loop {
            if self.eat_sym(".") {
                let line = self.line();
                let name = self.expect_ident()?;
                if *self.peek() == Tok::Sym("(") {
                    let args = self.args()?;
                    expr = Expr::Call {
                        target: Some(Box::new(expr)),
                        name,
                        args,
                        line,
                    };
                } else {
                    expr = Expr::Field {
                        target: Box::new(expr),
                        name,
                        line,
                    };
                }
            } else if *self.peek() == Tok::Sym("[") {
                let line = self.line();
                self.pos += 1;
                let index = self.expr()?;
                self.expect_sym("]")?;
                expr = Expr::Index {
                    target: Box::new(expr),
                    index: Box::new(index),
                    line,
                };
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn args(&mut self) -> Result<Vec<Expr>, LangError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let line = self.line();
        match self.peek().clone() {
            Tok::IntLit(v) => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Int(v), line))
            }
            Tok::LongLit(v) => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Long(v), line))
            }
            Tok::FloatLit(v) => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Float(v), line))
            }
            Tok::DoubleLit(v) => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Double(v), line))
            }
            Tok::StrLit(s) => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Str(s), line))
            }
            Tok::Keyword("true") => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Bool(true), line))
            }
            Tok::Keyword("false") => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Bool(false), line))
            }
            Tok::Keyword("null") => {
                self.pos += 1;
                Ok(Expr::Lit(Lit::Null, line))
            }
            Tok::Keyword("this") => {
                self.pos += 1;
                Ok(Expr::This(line))
            }
            Tok::Keyword("new") => {
                self.pos += 1;
                // type_ref consumes [] pairs, so `new int[]{..}` arrives
                // here as Array(Int) followed by `{`.
                let ty = self.type_ref()?;
                if *self.peek() == Tok::Sym("{") {
                    let TypeRef::Array(elem) = ty else {
                        return Err(LangError::at(
                            line,
                            "array literal requires an array type".to_string(),
                        ));
                    };
                    self.expect_sym("{")?;
                    let mut items = Vec::new();
                    if !self.eat_sym("}") {
                        loop {
                            items.push(self.expr()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                        self.expect_sym("}")?;
                    }
                    return Ok(Expr::NewArray {
                        elem: *elem,
                        items,
                        line,
                    });
                }
                let class = match ty {
                    TypeRef::Class(name) => name,
                    other => {
                        return Err(LangError::at(
                            line,
                            format!("cannot construct non-class type {other:?}"),
                        ))
                    }
                };
                let args = self.args()?;
                Ok(Expr::New { class, args, line })
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if *self.peek() == Tok::Sym("(") {
                    let args = self.args()?;
                    return Ok(Expr::Call {
                        target: None,
                        name,
                        args,
                        line,
                    });
                }
                Ok(Expr::Name(name, line))
            }
            other => Err(LangError::at(
                line,
                format!("unexpected token {other:?} in expression"),
            )),
        }
    }
}
