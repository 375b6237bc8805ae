//! Tokenizer for the Java-like subset.
//!
//! Doc comments (`/** ... */`) are emitted as tokens so the parser can attach
//! them to the following declaration; line comments and block comments are
//! skipped. Every token records its byte offset and 1-based line.

use super::LangError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Keyword(&'static str),
    IntLit(i64),
    LongLit(i64),
    FloatLit(f64),
    DoubleLit(f64),
    StrLit(String),
    DocComment(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub offset: usize,
    pub line: u32,
}

const KEYWORDS: &[&str] = &[
    "package",
    "import",
    "public",
    "private",
    "protected",
    "static",
    "abstract",
    "final",
    "class",
    "interface",
    "extends",
    "implements",
    "throws",
    "new",
    "return",
    "if",
    "else",
    "while",
    "switch",
    "case",
    "default",
    "break",
    "try",
    "catch",
    "throw",
    "this",
    "null",
    "true",
    "false",
    "void",
    "int",
    "long",
    "float",
    "double",
    "boolean",
];

/// Multi-character symbols first so maximal munch applies.
const SYMBOLS: &[&str] = &[
    "...", "&&", "||", "==", "!=", "<=", ">=", "+", "-", "*", "/", "%", "!", "<", ">", "=", ".",
    ",", ";", ":", "?", "(", ")", "{", "}", "[", "]",
];

pub fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/**") {
            let start = i;
            let start_line = line;
            match src[i + 3..].find("*/") {
                Some(rel) => {
                    let end = i + 3 + rel;
                    let text = &src[i..end + 2];
                    line += text.bytes().filter(|b| *b == b'\n').count() as u32;
                    out.push(Token {
                        tok: Tok::DocComment(text.to_string()),
                        offset: start,
                        line: start_line,
                    });
                    i = end + 2;
                    continue;
                }
                None => {
                    return Err(LangError::at(start_line, "unterminated doc comment"));
                }
            }
        }
        if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(rel) => {
                    let end = i + 2 + rel + 2;
                    line += src[i..end].bytes().filter(|b| *b == b'\n').count() as u32;
                    i = end;
                    continue;
                }
                None => return Err(LangError::at(line, "unterminated comment")),
            }
        }
        if c == b'"' {
            let start_line = line;
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                if j >= bytes.len() {
                    return Err(LangError::at(start_line, "unterminated string literal"));
                }
                match bytes[j] {
                    b'"' => break,
                    b'\\' => {
                        if j + 1 >= bytes.len() {
                            return Err(LangError::at(start_line, "unterminated escape"));
                        }
                        match bytes[j + 1] {
                            b'n' => s.push('\n'),
                            b't' => s.push('\t'),
                            b'\\' => s.push('\\'),
                            b'"' => s.push('"'),
                            other => {
                                return Err(LangError::at(
                                    start_line,
                                    format!("unsupported escape \\{}", other as char),
                                ))
                            }
                        }
                        j += 2;
                    }
                    b'\n' => return Err(LangError::at(start_line, "newline in string literal")),
                    other => {
                        s.push(other as char);
                        j += 1;
                    }
                }
            }
            out.push(Token {
                tok: Tok::StrLit(s),
                offset: i,
                line: start_line,
            });
            i = j + 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let mut is_float = false;
            if j + 1 < bytes.len() && bytes[j] == b'.' && bytes[j + 1].is_ascii_digit() {
                is_float = true;
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let digits = &src[start..j];
            let suffix = if j < bytes.len() {
                bytes[j] as char
            } else {
                '\0'
            };
            let tok = match (is_float, suffix) {
                (_, 'f') | (_, 'F') => {
                    j += 1;
                    Tok::FloatLit(digits.parse::<f64>().map_err(|_| {
                        LangError::at(line, format!("bad float literal {digits}"))
                    })?)
                }
                (true, 'd') | (true, 'D') => {
                    j += 1;
                    Tok::DoubleLit(digits.parse::<f64>().unwrap_or(0.0))
                }
                (true, _) => Tok::DoubleLit(digits.parse::<f64>().unwrap_or(0.0)),
                (false, 'L') | (false, 'l') => {
                    j += 1;
                    Tok::LongLit(digits.parse::<i64>().map_err(|_| {
                        LangError::at(line, format!("long literal out of range: {digits}"))
                    })?)
                }
                (false, _) => Tok::IntLit(digits.parse::<i64>().map_err(|_| {
                    LangError::at(line, format!("int literal out of range: {digits}"))
                })?),
            };
            out.push(Token {
                tok,
                offset: start,
                line,
            });
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let word = &src[start..j];
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word.to_string()),
            };
            out.push(Token {
                tok,
                offset: start,
                line,
            });
            i = j;
            continue;
        }
        let mut matched = false;
        for sym in SYMBOLS {
            if src[i..].starts_with(sym) {
                out.push(Token {
                    tok: Tok::Sym(sym),
                    offset: i,
                    line,
                });
                i += sym.len();
                matched = true;
                break;
            }
        }
        if !matched {
            return Err(LangError::at(
                line,
                format!("unexpected character {:?}", c as char),
            ));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: src.len(),
        line,
    });
    Ok(out)
}
