// SPDX-License-Identifier: Apache-2.0

use super::ast::Span;
use super::FrontendError;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Keyword(&'static str),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(n) => write!(f, "number `{n}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Keyword(k) => write!(f, "`{k}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const KEYWORDS: &[&str] = &[
    "contract",
    "function",
    "constructor",
    "fallback",
    "returns",
    "return",
    "if",
    "else",
    "while",
    "for",
    "require",
    "revert",
    "log",
    "mapping",
    "uint",
    "uint256",
    "bool",
    "address",
    "string",
    "public",
    "external",
    "internal",
    "private",
    "view",
    "pure",
    "payable",
    "true",
    "false",
    "msg",
    "now",
    "this",
];

// Longest first so that `<=` wins over `<`.
const PUNCTS: &[&str] = &[
    "=>", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "++", "--", "{", "}", "(",
    ")", "[", "]", ";", ",", ".", "=", "+", "-", "*", "/", "%", "<", ">", "!",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
        let c = chars[*i];
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let span = Span::new(line, col);
            advance(&mut i, &mut line, &mut col);
            advance(&mut i, &mut line, &mut col);
            loop {
                if i + 1 >= chars.len() {
                    return Err(FrontendError::Syntax {
                        span,
                        expected: "`*/`".into(),
                        found: "end of input".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    break;
                }
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }

        let span = Span::new(line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word),
            };
            out.push(Token { tok, span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col);
            }
            let digits: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Number(digits),
                span,
            });
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col);
            let start = i;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\n' || chars[i] == '\\' {
                    return Err(FrontendError::Syntax {
                        span: Span::new(line, col),
                        expected: "closing `\"`".into(),
                        found: format!("{:?}", chars[i]),
                    });
                }
                advance(&mut i, &mut line, &mut col);
            }
            if i >= chars.len() {
                return Err(FrontendError::Syntax {
                    span,
                    expected: "closing `\"`".into(),
                    found: "end of input".into(),
                });
            }
            let text: String = chars[start..i].iter().collect();
            advance(&mut i, &mut line, &mut col);
            out.push(Token {
                tok: Tok::Str(text),
                span,
            });
            continue;
        }
        let rest = &chars[i..];
        let punct = PUNCTS.iter().find(|p| {
            let pc: Vec<char> = p.chars().collect();
            rest.len() >= pc.len() && rest[..pc.len()] == pc[..]
        });
        match punct {
            Some(p) => {
                for _ in p.chars() {
                    advance(&mut i, &mut line, &mut col);
                }
                out.push(Token {
                    tok: Tok::Punct(p),
                    span,
                });
            }
            None => {
                return Err(FrontendError::Syntax {
                    span,
                    expected: "a token".into(),
                    found: format!("character {c:?}"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    Ok(out)
}
