//! Tokenizer for the SQL surface syntax and the Fig-style constraint strings.

use crate::error::{Error, Pos, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    // punctuation and operators
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub struct Lexer<'a> {
    src: &'a [u8],
    idx: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            idx: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.src.get(self.idx).copied()?;
        self.idx += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.idx).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.idx + 1).copied()
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        loop {
            while let Some(b) = self.peek() {
                if b == b'-' && self.peek2() == Some(b'-') {
                    // line comment
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else if b.is_ascii_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let pos = self.pos();
            let Some(b) = self.peek() else {
                out.push(Token { tok: Tok::Eof, pos });
                return Ok(out);
            };
            let tok = match b {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'%' => {
                    self.bump();
                    Tok::Percent
                }
                b'<' => {
                    self.bump();
                    match self.peek() {
                        Some(b'=') => {
                            self.bump();
                            Tok::Le
                        }
                        Some(b'>') => {
                            self.bump();
                            Tok::Ne
                        }
                        _ => Tok::Lt,
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                b'=' => {
                    self.bump();
                    Tok::Eq
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ne
                    } else {
                        return Err(Error::Syntax {
                            pos,
                            msg: "unexpected `!`".into(),
                        });
                    }
                }
                b'\'' | b'"' => {
                    let quote = b;
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some(c) if c == quote => {
                                // doubled quote escapes itself
                                if self.peek() == Some(quote) {
                                    self.bump();
                                    s.push(quote as char);
                                } else {
                                    break;
                                }
                            }
                            Some(c) => s.push(c as char),
                            None => {
                                return Err(Error::Syntax {
                                    pos,
                                    msg: "unterminated string literal".into(),
                                })
                            }
                        }
                    }
                    Tok::Str(s)
                }
                b'0'..=b'9' => {
                    let mut n: i64 = 0;
                    while let Some(c @ b'0'..=b'9') = self.peek() {
                        self.bump();
                        n = n
                            .checked_mul(10)
                            .and_then(|n| n.checked_add((c - b'0') as i64))
                            .ok_or_else(|| Error::Syntax {
                                pos,
                                msg: "integer literal out of range".into(),
                            })?;
                    }
                    Tok::Int(n)
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            self.bump();
                            s.push(c as char);
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(Error::Syntax {
                        pos,
                        msg: format!("unexpected character `{}`", other as char),
                    })
                }
            };
            out.push(Token { tok, pos });
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    Lexer::new(src).tokenize()
}
