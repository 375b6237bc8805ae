//! Parsing, semantic analysis, and interpretation of the Java-like subset
//! that libraries under test and generated drivers are written in.

pub mod ast;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod sema;
pub mod sites;

use thiserror::Error;

#[derive(Debug, Clone, Error)]
#[error("line {line}: {message}")]
pub struct LangError {
    pub line: u32,
    pub message: String,
}

impl LangError {
    pub fn at(line: u32, message: impl Into<String>) -> Self {
        LangError {
            line,
            message: message.into(),
        }
    }
}

/// Exception types every program can raise or reference without declaring
/// them in source, with their direct supertype. This is the `java.lang`
/// slice the interpreter knows natively.
pub const BUILTIN_EXCEPTIONS: &[(&str, &str)] = &[
    ("java.lang.Error", "java.lang.Throwable"),
    ("java.lang.StackOverflowError", "java.lang.Error"),
    ("java.lang.Exception", "java.lang.Throwable"),
    ("java.lang.RuntimeException", "java.lang.Exception"),
    ("java.lang.NullPointerException", "java.lang.RuntimeException"),
    ("java.lang.ArithmeticException", "java.lang.RuntimeException"),
    ("java.lang.ClassCastException", "java.lang.RuntimeException"),
    (
        "java.lang.IndexOutOfBoundsException",
        "java.lang.RuntimeException",
    ),
    (
        "java.lang.ArrayIndexOutOfBoundsException",
        "java.lang.IndexOutOfBoundsException",
    ),
    (
        "java.lang.StringIndexOutOfBoundsException",
        "java.lang.IndexOutOfBoundsException",
    ),
    (
        "java.lang.IllegalArgumentException",
        "java.lang.RuntimeException",
    ),
    (
        "java.lang.NumberFormatException",
        "java.lang.IllegalArgumentException",
    ),
    (
        "java.lang.IllegalStateException",
        "java.lang.RuntimeException",
    ),
    (
        "java.lang.UnsupportedOperationException",
        "java.lang.RuntimeException",
    ),
];

pub const THROWABLE: &str = "java.lang.Throwable";

/// Non-exception types treated as known opaque externals.
pub const BUILTIN_OPAQUE: &[&str] = &["java.lang.Number", "java.lang.Object"];

/// Resolves a simple or qualified name against the builtin java.lang set.
pub fn builtin_fqn(name: &str) -> Option<&'static str> {
    if let Some((fqn, _)) = BUILTIN_EXCEPTIONS
        .iter()
        .find(|(fqn, _)| *fqn == name || fqn.rsplit('.').next() == Some(name))
    {
        return Some(fqn);
    }
    if name == THROWABLE || name == "Throwable" {
        return Some(THROWABLE);
    }
    BUILTIN_OPAQUE
        .iter()
        .find(|fqn| **fqn == name || fqn.rsplit('.').next() == Some(name))
        .copied()
}

/// True when `sub_fqn` equals `super_fqn` or reaches it through the builtin
/// exception hierarchy alone.
pub fn builtin_extends(sub_fqn: &str, super_fqn: &str) -> bool {
    let mut cur = sub_fqn;
    loop {
        if cur == super_fqn {
            return true;
        }
        match BUILTIN_EXCEPTIONS.iter().find(|(f, _)| *f == cur) {
            Some((_, parent)) => cur = parent,
            None => return cur == THROWABLE && super_fqn == THROWABLE,
        }
    }
}
