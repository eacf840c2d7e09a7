use std::collections::{BTreeMap, HashSet};

use super::{Arm, IspaceError, MutexGroup, Node, Program, Test};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eq,
    Comma,
    Semi,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, IspaceError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    let err = |line, col, message: String| IspaceError::Syntax { line, col, message };

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        let tok = match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
                continue;
            }
            '/' => {
                bump(&mut chars);
                if chars.peek() != Some(&'/') {
                    return Err(err(tl, tc, "unexpected `/`".into()));
                }
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
            '(' | ')' | '{' | '}' | '=' | ',' | ';' => {
                bump(&mut chars);
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '=' => Tok::Eq,
                    ',' => Tok::Comma,
                    _ => Tok::Semi,
                }
            }
            '"' => {
                bump(&mut chars);
                let mut s = String::new();
                loop {
                    match bump(&mut chars) {
                        None => return Err(err(tl, tc, "unterminated string".into())),
                        Some('"') => break,
                        Some('\\') => match bump(&mut chars) {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err(err(tl, tc, "bad escape in string".into())),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, line: tl, col: tc });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    pages: HashSet<String>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, at: &Spanned, message: impl Into<String>) -> Result<T, IspaceError> {
        Err(IspaceError::Syntax {
            line: at.line,
            col: at.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<Spanned, IspaceError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            self.error(
                &t,
                format!("expected {}, found {}", want.describe(), t.tok.describe()),
            )
        }
    }

    fn ident(&mut self) -> Result<String, IspaceError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok(s.clone()),
            other => self.error(&t, format!("expected identifier, found {}", other.describe())),
        }
    }

    fn string(&mut self) -> Result<String, IspaceError> {
        let t = self.next();
        match &t.tok {
            Tok::Str(s) => Ok(s.clone()),
            other => self.error(&t, format!("expected string, found {}", other.describe())),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn test(&mut self) -> Result<(Test, Spanned), IspaceError> {
        let start = self.peek().clone();
        let key = self.ident()?;
        let value = if self.peek().tok == Tok::Eq {
            self.next();
            let t = self.next();
            match &t.tok {
                Tok::Ident(s) | Tok::Str(s) => s.clone(),
                other => {
                    return self.error(&t, format!("expected test value, found {}", other.describe()))
                }
            }
        } else {
            super::FLAG_VALUE.to_string()
        };
        match Test::new(key, value) {
            Ok(test) => Ok((test, start)),
            Err(e) => self.error(&start, e.to_string()),
        }
    }

    fn program(&mut self) -> Result<Program, IspaceError> {
        let mut mutexes = Vec::new();
        let mut meta = BTreeMap::new();
        loop {
            if self.at_keyword("mutex") {
                let kw = self.next();
                let name = self.ident()?;
                self.expect(Tok::LBrace)?;
                let mut members = Vec::new();
                loop {
                    members.push(self.test()?.0);
                    if self.peek().tok == Tok::Comma {
                        self.next();
                        if self.peek().tok == Tok::RBrace {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                match MutexGroup::new(name, members) {
                    Ok(g) => mutexes.push(g),
                    Err(e) => return self.error(&kw, e.to_string()),
                }
            } else if self.at_keyword("meta") {
                self.next();
                let key = self.ident()?;
                let value = self.string()?;
                self.expect(Tok::Semi)?;
                meta.insert(key, value);
            } else {
                break;
            }
        }
        let start = self.peek().clone();
        let stmts = self.stmts()?;
        if self.peek().tok != Tok::Eof {
            let t = self.peek().clone();
            return self.error(&t, format!("unexpected {}", t.tok.describe()));
        }
        let root = match Node::seq(stmts) {
            Some(root) => root,
            None => return self.error(&start, "a program needs at least one statement"),
        };
        match Program::with_meta(mutexes, root, meta) {
            Ok(p) => Ok(p),
            Err(IspaceError::InvalidMutex { name, reason }) => {
                self.error(&start, format!("mutex `{name}`: {reason}"))
            }
            Err(e) => Err(e),
        }
    }

    fn stmts(&mut self) -> Result<Vec<Node>, IspaceError> {
        let mut out = Vec::new();
        loop {
            if self.at_keyword("if") {
                out.push(self.chain()?);
            } else if self.at_keyword("page") {
                out.push(self.content()?);
            } else {
                return Ok(out);
            }
        }
    }

    fn chain(&mut self) -> Result<Node, IspaceError> {
        let mut arms: Vec<Arm> = Vec::new();
        let mut seen = HashSet::new();
        self.next(); // if
        loop {
            self.expect(Tok::LParen)?;
            let (test, at) = self.test()?;
            self.expect(Tok::RParen)?;
            if !seen.insert(test.clone()) {
                return Err(IspaceError::DuplicateArm {
                    test: test.to_string(),
                    line: at.line,
                    col: at.col,
                });
            }
            let body = self.block()?;
            arms.push(Arm { test, body });
            if self.at_keyword("else") {
                self.next();
                if !self.at_keyword("if") {
                    let t = self.peek().clone();
                    return self.error(&t, "expected `if` after `else`");
                }
                self.next();
            } else {
                return Ok(Node::Chain { arms });
            }
        }
    }

    fn block(&mut self) -> Result<Node, IspaceError> {
        let open = self.expect(Tok::LBrace)?;
        let stmts = self.stmts()?;
        self.expect(Tok::RBrace)?;
        match Node::seq(stmts) {
            Some(n) => Ok(n),
            None => self.error(&open, "empty block"),
        }
    }

    fn content(&mut self) -> Result<Node, IspaceError> {
        self.next(); // page
        let at = self.peek().clone();
        let page = self.string()?;
        if page.is_empty() {
            return self.error(&at, "empty content ref");
        }
        let payload = if matches!(self.peek().tok, Tok::Str(_)) {
            self.string()?
        } else {
            String::new()
        };
        self.expect(Tok::Semi)?;
        if !self.pages.insert(page.clone()) {
            return Err(IspaceError::DuplicateContentRef(page));
        }
        Ok(Node::Content { page, payload })
    }
}

/// Parses the surface syntax:
///
/// ```text
/// mutex Party { Dem, Rep }
/// meta title "US Congress";
/// if (Sen) { page "sen" "Senators"; } else if (Repr) { page "repr"; }
/// ```
pub fn parse(src: &str) -> Result<Program, IspaceError> {
    let toks = lex(src)?;
    Parser {
        toks,
        pos: 0,
        pages: HashSet::new(),
    }
    .program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_program() {
        let p = parse("page \"home\";").unwrap();
        assert_eq!(p.root(), &Node::content("home", ""));
        assert!(p.is_complete());
    }

    #[test]
    fn empty_source_is_a_syntax_error() {
        assert!(matches!(parse(""), Err(IspaceError::Syntax { line: 1, col: 1, .. })));
        assert!(matches!(parse("// nothing\n"), Err(IspaceError::Syntax { .. })));
    }

    #[test]
    fn duplicate_arm_reports_position() {
        let err = parse("if (Sen) { page \"a\"; } else if (Sen) { page \"b\"; }").unwrap_err();
        assert_eq!(
            err,
            IspaceError::DuplicateArm {
                test: "Sen".into(),
                line: 1,
                col: 33
            }
        );
        // Dem and Dem=true are the same test.
        assert!(parse("if (Dem) { page \"a\"; } else if (Dem=true) { page \"b\"; }").is_err());
    }

    #[test]
    fn duplicate_content_ref() {
        let err = parse("page \"a\"; page \"a\";").unwrap_err();
        assert_eq!(err, IspaceError::DuplicateContentRef("a".into()));
    }

    #[test]
    fn syntax_error_positions() {
        let err = parse("if (Sen) {\n  page \"a\"\n}").unwrap_err();
        assert!(matches!(err, IspaceError::Syntax { line: 3, col: 1, .. }), "{err}");
        let err = parse("if Sen { page \"a\"; }").unwrap_err();
        assert!(matches!(err, IspaceError::Syntax { line: 1, col: 4, .. }), "{err}");
        assert!(parse("if (Sen) { }").is_err());
        assert!(parse("page \"a\"; else").is_err());
        assert!(parse("mutex P { A }\npage \"a\";").is_err());
    }

    #[test]
    fn quoted_values_and_payloads() {
        let p = parse(r#"if (Seat="Junior Seat") { page "j" "Junior \"seat\""; }"#).unwrap();
        let paths = p.enumerate_paths();
        assert_eq!(paths[0].tests[0], Test::new("Seat", "Junior Seat").unwrap());
        match &p.root() {
            Node::Chain { arms } => {
                assert_eq!(arms[0].body, Node::content("j", "Junior \"seat\""))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn congress_shape() {
        let src = include_str!("../../fixtures/congress.ispace");
        let p = parse(src).unwrap();
        let Node::Chain { arms } = p.root() else { panic!() };
        let tests: Vec<_> = arms.iter().map(|a| a.test.to_string()).collect();
        assert_eq!(tests, ["Sen", "Repr"]);
        for arm in arms {
            let Node::Chain { arms: party } = &arm.body else { panic!() };
            assert_eq!(p.chain_key(party).as_deref(), Some("Party"));
            for inner in party {
                let Node::Chain { arms: state } = &inner.body else { panic!() };
                assert_eq!(p.chain_key(state).as_deref(), Some("State"));
            }
        }
        assert_eq!(p.mutexes().len(), 3);
    }
}
