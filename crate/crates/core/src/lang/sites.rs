//! Branch-site enumeration over parsed bodies.
//!
//! A site is one branch construct: `if`, `while`, ternary, `&&`, `||` (two
//! outcome arms each), `switch` (one arm per case plus `default` when
//! present), or a `catch` clause (a single entry arm). The walk order here
//! matches the ordinals the parser assigned, which makes the enumeration the
//! single source of truth for edge identities.

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiteKind {
    /// Two-arm conditional: if / while / ternary / short-circuit operator.
    Cond,
    /// One arm per case label, plus "default" when a default arm exists.
    Switch { cases: usize, has_default: bool },
    /// Single entry arm.
    Catch,
}

#[derive(Debug, Clone)]
pub struct SiteInfo {
    pub site: SiteId,
    pub kind: SiteKind,
    pub line: u32,
}

impl SiteInfo {
    /// Arm labels in stable order.
    pub fn arms(&self) -> Vec<String> {
        match &self.kind {
            SiteKind::Cond => vec!["true".into(), "false".into()],
            SiteKind::Switch { cases, has_default } => {
                let mut arms: Vec<String> = (0..*cases).map(|i| format!("case{i}")).collect();
                if *has_default {
                    arms.push("default".into());
                }
                arms
            }
            SiteKind::Catch => vec!["enter".into()],
        }
    }
}

/// Enumerates branch sites of one body in ordinal order.
pub fn enumerate_sites(body: &Block) -> Vec<SiteInfo> {
    let mut out = Vec::new();
    walk_block(body, &mut out);
    out.sort_by_key(|s| s.site);
    out
}

/// Number of branch constructs in a body.
pub fn count_sites(body: &Block) -> u32 {
    enumerate_sites(body).len() as u32
}

fn walk_block(block: &Block, out: &mut Vec<SiteInfo>) {
    for stmt in &block.stmts {
        walk_stmt(stmt, out);
    }
}

fn walk_stmt(stmt: &Stmt, out: &mut Vec<SiteInfo>) {
    match stmt {
        Stmt::VarDecl { init, .. } => walk_expr(init, out),
        Stmt::Assign { target, value, .. } => {
            walk_expr(target, out);
            walk_expr(value, out);
        }
        Stmt::Expr { expr, .. } => walk_expr(expr, out),
        Stmt::If {
            site,
            cond,
            then_branch,
            else_branch,
            line,
        } => {
            out.push(SiteInfo {
                site: *site,
                kind: SiteKind::Cond,
                line: *line,
            });
            walk_expr(cond, out);
            walk_block(then_branch, out);
            if let Some(else_b) = else_branch {
                walk_block(else_b, out);
            }
        }
        Stmt::While {
            site, cond, body, line,
        } => {
            out.push(SiteInfo {
                site: *site,
                kind: SiteKind::Cond,
                line: *line,
            });
            walk_expr(cond, out);
            walk_block(body, out);
        }
        Stmt::Switch {
            site,
            scrutinee,
            cases,
            default,
            line,
        } => {
            out.push(SiteInfo {
                site: *site,
                kind: SiteKind::Switch {
                    cases: cases.len(),
                    has_default: default.is_some(),
                },
                line: *line,
            });
            walk_expr(scrutinee, out);
            for case in cases {
                for s in &case.stmts {
                    walk_stmt(s, out);
                }
            }
            if let Some(d) = default {
                for s in d {
                    walk_stmt(s, out);
                }
            }
        }
        Stmt::Try { body, catches, .. } => {
            walk_block(body, out);
            for c in catches {
                out.push(SiteInfo {
                    site: c.site,
                    kind: SiteKind::Catch,
                    line: c.line,
                });
                walk_block(&c.body, out);
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(v) = value {
                walk_expr(v, out);
            }
        }
        Stmt::Throw { value, .. } => walk_expr(value, out),
        Stmt::Break { .. } => {}
        Stmt::Block(b) => walk_block(b, out),
    }
}

fn walk_expr(expr: &Expr, out: &mut Vec<SiteInfo>) {
    match expr {
        Expr::Lit(..) | Expr::Name(..) | Expr::This(..) => {}
        Expr::Field { target, .. } => walk_expr(target, out),
        Expr::Index { target, index, .. } => {
            walk_expr(target, out);
            walk_expr(index, out);
        }
        Expr::Call { target, args, .. } => {
            if let Some(t) = target {
                walk_expr(t, out);
            }
            for a in args {
                walk_expr(a, out);
            }
        }
        Expr::New { args, .. } => {
            for a in args {
                walk_expr(a, out);
            }
        }
        Expr::NewArray { items, .. } => {
            for i in items {
                walk_expr(i, out);
            }
        }
        Expr::Unary { operand, .. } => walk_expr(operand, out),
        Expr::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, out);
            walk_expr(rhs, out);
        }
        Expr::And {
            site, lhs, rhs, line,
        }
        | Expr::Or {
            site, lhs, rhs, line,
        } => {
            out.push(SiteInfo {
                site: *site,
                kind: SiteKind::Cond,
                line: *line,
            });
            walk_expr(lhs, out);
            walk_expr(rhs, out);
        }
        Expr::Ternary {
            site,
            cond,
            then_val,
            else_val,
            line,
        } => {
            out.push(SiteInfo {
                site: *site,
                kind: SiteKind::Cond,
                line: *line,
            });
            walk_expr(cond, out);
            walk_expr(then_val, out);
            walk_expr(else_val, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_unit;

    fn body_of(src: &str) -> Block {
        let unit = parse_unit("T.java", src).unwrap();
        unit.types[0].methods[0].body.clone().unwrap()
    }

    #[test]
    fn chain_of_if_elseif_with_and_counts_three_sites() {
        let body = body_of(
            "class T { int m(int a, int b) { if (a > 0) { return 1; } else if (a < 0 && b == 0) { return 2; } else { return 3; } } }",
        );
        let sites = enumerate_sites(&body);
        assert_eq!(sites.len(), 3);
        assert_eq!(sites.iter().map(|s| s.site).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(sites.iter().all(|s| s.kind == SiteKind::Cond));
    }

    #[test]
    fn switch_arms_cover_cases_and_default() {
        let body = body_of(
            "class T { int m(int k) { switch (k) { case 1: return 1; case 2: return 2; case 3: return 3; case 4: return 4; default: return 0; } } }",
        );
        let sites = enumerate_sites(&body);
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].arms().len(), 5);
        assert_eq!(sites[0].arms()[4], "default");
    }

    #[test]
    fn catch_clause_is_single_arm() {
        let body = body_of(
            "class T { int m(int k) { try { return 1 / k; } catch (ArithmeticException e) { return 0; } } }",
        );
        let sites = enumerate_sites(&body);
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].kind, SiteKind::Catch);
        assert_eq!(sites[0].arms(), vec!["enter".to_string()]);
    }

    #[test]
    fn straight_line_body_has_zero_sites() {
        let body = body_of("class T { int m(int a) { int b = a + 1; return b * 2; } }");
        assert_eq!(count_sites(&body), 0);
    }
}
