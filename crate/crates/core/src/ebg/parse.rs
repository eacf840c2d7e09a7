//! Clause syntax: `R2: complete(x) <= officeselect(x, "Congress") & member(x).`
//! and facts `F1: officeselect(x47, "Congress").` Comments run from `%` to
//! end of line.

use super::term::{Atom, Term};
use super::EbgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Bare identifiers starting lowercase or `_` are variables.
    Rule,
    /// Every bare identifier is a constant.
    Ground,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Amp,
    Implies,
    Eof,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
}

pub(crate) struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> EbgError {
    EbgError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn tokens(mut self) -> Result<Vec<Token>, EbgError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '%' {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.bump() else {
                out.push(Token { tok: Tok::Eof, line, col });
                return Ok(out);
            };
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '.' => Tok::Dot,
                '&' => Tok::Amp,
                '<' => {
                    if self.bump() != Some('=') {
                        return Err(err(line, col, "expected `<=`"));
                    }
                    Tok::Implies
                }
                '"' => {
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None | Some('\n') => return Err(err(line, col, "unterminated string")),
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                _ => return Err(err(self.line, self.col, "bad escape")),
                            },
                            Some(c) => s.push(c),
                        }
                    }
                    Tok::Str(s)
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let mut s = String::from(c);
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            s.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    // Renamed variables carry a `#n` suffix.
                    if self.peek() == Some('#') {
                        s.push('#');
                        self.bump();
                        let start = s.len();
                        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                            s.push(c);
                            self.bump();
                        }
                        if s.len() == start {
                            return Err(err(self.line, self.col, "expected digits after `#`"));
                        }
                    }
                    Tok::Ident(s)
                }
                other => return Err(err(line, col, format!("unexpected character `{other}`"))),
            };
            out.push(Token { tok, line, col });
        }
    }
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    mode: Mode,
}

pub(crate) struct Clause {
    pub id: String,
    pub head: Atom,
    pub body: Vec<Atom>,
    pub line: usize,
}

impl Parser {
    pub(crate) fn new(src: &str, mode: Mode) -> Result<Self, EbgError> {
        Ok(Parser {
            toks: Lexer::new(src).tokens()?,
            pos: 0,
            mode,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), EbgError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            Err(err(t.line, t.col, format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, EbgError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if !s.contains('#') => Ok(s.clone()),
            _ => Err(err(t.line, t.col, format!("expected {what}"))),
        }
    }

    fn term(&mut self) -> Result<Term, EbgError> {
        let mode = self.mode;
        let t = self.next();
        match &t.tok {
            Tok::Str(s) => Ok(Term::Const(s.clone())),
            Tok::Ident(s) => {
                let first = s.chars().next().expect("non-empty ident");
                if mode == Mode::Rule && (first.is_ascii_lowercase() || first == '_') {
                    Ok(Term::Var(s.clone()))
                } else if s.contains('#') {
                    Err(err(t.line, t.col, "renamed variable outside a pattern"))
                } else {
                    Ok(Term::Const(s.clone()))
                }
            }
            _ => Err(err(t.line, t.col, "expected a term")),
        }
    }

    fn atom(&mut self) -> Result<Atom, EbgError> {
        let pred = self.ident("a predicate name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                args.push(self.term()?);
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(Atom { pred, args })
    }

    pub(crate) fn clauses(&mut self) -> Result<Vec<Clause>, EbgError> {
        let mut out = Vec::new();
        while self.peek().tok != Tok::Eof {
            let line = self.peek().line;
            let id = self.ident("a clause id")?;
            self.expect(Tok::Colon, "`:` after the clause id")?;
            let head = self.atom()?;
            let mut body = Vec::new();
            if self.peek().tok == Tok::Implies {
                self.next();
                loop {
                    body.push(self.atom()?);
                    if self.peek().tok == Tok::Amp {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::Dot, "`.` at the end of the clause")?;
            out.push(Clause { id, head, body, line });
        }
        Ok(out)
    }

    fn finish(&mut self) -> Result<(), EbgError> {
        let t = self.peek();
        if t.tok == Tok::Eof {
            Ok(())
        } else {
            Err(err(t.line, t.col, "trailing input"))
        }
    }
}

pub(crate) fn parse_atom(src: &str, mode: Mode) -> Result<Atom, EbgError> {
    let mut p = Parser::new(src, mode)?;
    let a = p.atom()?;
    p.finish()?;
    Ok(a)
}

pub(crate) fn parse_term(src: &str, mode: Mode) -> Result<Term, EbgError> {
    let mut p = Parser::new(src, mode)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}
