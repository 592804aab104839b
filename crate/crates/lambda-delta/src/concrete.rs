//! Concrete syntax: lexer, recursive-descent parser and printer.
//!
//! Types: identifiers, `Bot`, `->` (right-assoc), `/\`, `\/`, `~A` for
//! `A -> Bot`, parentheses. Precedence, tightest first: `~`, `/\`, `\/`, `->`.
//!
//! Terms: identifiers; `\x:T. M`; juxtaposition application (left-assoc);
//! `<M, N>`; `p1 M` / `p2 M`; `in1[T] M` / `in2[T] M` (T the full
//! disjunction); `case M of { x:T1 => P | y:T2 => Q }`; `delta k:~T. M`;
//! parentheses. The argument of `p1`, `p2`, `in1[T]`, `in2[T]` is atomic.
//!
//! Context files are comma-separated `x:T` declarations.

use std::fmt;

use crate::syntax::{app, case, delta, inj, lam, pair, proj, var, Formula, Side, Term};
use crate::typing::Ctx;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected {}", self.line, self.col, self.expected)
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bot,
    Case,
    Of,
    Delta,
    Proj(Side),
    Inj(Side),
    Backslash,
    Colon,
    Dot,
    Comma,
    Pipe,
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Arrow,
    FatArrow,
    Wedge,
    Vee,
    Tilde,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Bot => "'Bot'".into(),
            Tok::Case => "'case'".into(),
            Tok::Of => "'of'".into(),
            Tok::Delta => "'delta'".into(),
            Tok::Proj(s) => format!("'p{}'", s.index()),
            Tok::Inj(s) => format!("'in{}'", s.index()),
            Tok::Backslash => "'\\'".into(),
            Tok::Colon => "':'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Comma => "','".into(),
            Tok::Pipe => "'|'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LAngle => "'<'".into(),
            Tok::RAngle => "'>'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::FatArrow => "'=>'".into(),
            Tok::Wedge => "'/\\'".into(),
            Tok::Vee => "'\\/'".into(),
            Tok::Tilde => "'~'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            i: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.i)?;
        self.i += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.i).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.i + 1).copied()
    }

    fn err(&self, expected: &str) -> SyntaxError {
        SyntaxError {
            line: self.line,
            col: self.col,
            expected: expected.to_string(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c == b'#' {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else if c.is_ascii_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'<' => {
                    self.bump();
                    Tok::LAngle
                }
                b'>' => {
                    self.bump();
                    Tok::RAngle
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b'{' => {
                    self.bump();
                    Tok::LBrace
                }
                b'}' => {
                    self.bump();
                    Tok::RBrace
                }
                b':' => {
                    self.bump();
                    Tok::Colon
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'|' => {
                    self.bump();
                    Tok::Pipe
                }
                b'~' => {
                    self.bump();
                    Tok::Tilde
                }
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        return Err(self.err("'->'"));
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::FatArrow
                    } else {
                        return Err(self.err("'=>'"));
                    }
                }
                b'/' => {
                    self.bump();
                    if self.peek() == Some(b'\\') {
                        self.bump();
                        Tok::Wedge
                    } else {
                        return Err(self.err("'/\\'"));
                    }
                }
                b'\\' => {
                    if self.peek2() == Some(b'/') {
                        self.bump();
                        self.bump();
                        Tok::Vee
                    } else {
                        self.bump();
                        Tok::Backslash
                    }
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.i;
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    while self.peek() == Some(b'\'') {
                        self.bump();
                    }
                    let word = std::str::from_utf8(&self.src[start..self.i]).unwrap();
                    match word {
                        "Bot" => Tok::Bot,
                        "case" => Tok::Case,
                        "of" => Tok::Of,
                        "delta" => Tok::Delta,
                        "p1" => Tok::Proj(Side::Fst),
                        "p2" => Tok::Proj(Side::Snd),
                        "in1" => Tok::Inj(Side::Fst),
                        "in2" => Tok::Inj(Side::Snd),
                        _ => Tok::Ident(word.to_string()),
                    }
                }
                _ => return Err(self.err("a token")),
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    i: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser {
            toks: Lexer::new(src).tokens()?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> SyntaxError {
        let (_, line, col) = self.toks[self.i];
        SyntaxError {
            line,
            col,
            expected: format!("{expected}, found {}", self.peek().describe()),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    // formula := imp
    // imp     := vee ('->' imp)?
    // vee     := wedge ('\/' vee)?
    // wedge   := prefix ('/\' wedge)?
    // prefix  := '~' prefix | atom
    // atom    := ident | 'Bot' | '(' formula ')'
    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let left = self.formula_vee()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let right = self.formula()?;
            Ok(Formula::imp(left, right))
        } else {
            Ok(left)
        }
    }

    fn formula_vee(&mut self) -> Result<Formula, SyntaxError> {
        let left = self.formula_wedge()?;
        if *self.peek() == Tok::Vee {
            self.bump();
            let right = self.formula_vee()?;
            Ok(Formula::disj(left, right))
        } else {
            Ok(left)
        }
    }

    fn formula_wedge(&mut self) -> Result<Formula, SyntaxError> {
        let left = self.formula_prefix()?;
        if *self.peek() == Tok::Wedge {
            self.bump();
            let right = self.formula_wedge()?;
            Ok(Formula::conj(left, right))
        } else {
            Ok(left)
        }
    }

    fn formula_prefix(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::neg(self.formula_prefix()?))
            }
            Tok::Bot => {
                self.bump();
                Ok(Formula::Bottom)
            }
            Tok::Ident(_) => Ok(Formula::Atom(self.ident("a type")?)),
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            _ => Err(self.err("a type")),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek() {
            Tok::Backslash => {
                self.bump();
                let x = self.ident("a binder name")?;
                self.expect(Tok::Colon, "':'")?;
                let a = self.formula()?;
                self.expect(Tok::Dot, "'.'")?;
                let body = self.term()?;
                Ok(lam(&x, a, body))
            }
            Tok::Delta => {
                self.bump();
                let k = self.ident("a binder name")?;
                self.expect(Tok::Colon, "':'")?;
                self.expect(Tok::Tilde, "'~'")?;
                let a = self.formula_prefix()?;
                self.expect(Tok::Dot, "'.'")?;
                let body = self.term()?;
                Ok(delta(&k, a, body))
            }
            _ => self.application(),
        }
    }

    fn application(&mut self) -> Result<Term, SyntaxError> {
        let mut t = self.atom()?;
        loop {
            match self.peek() {
                Tok::Ident(_)
                | Tok::LParen
                | Tok::LAngle
                | Tok::Case
                | Tok::Proj(_)
                | Tok::Inj(_) => {
                    let arg = self.atom()?;
                    t = app(t, arg);
                }
                _ => return Ok(t),
            }
        }
    }

    fn atom(&mut self) -> Result<Term, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(_) => Ok(var(&self.ident("a term")?)),
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            Tok::LAngle => {
                self.bump();
                let m = self.term()?;
                self.expect(Tok::Comma, "','")?;
                let n = self.term()?;
                self.expect(Tok::RAngle, "'>'")?;
                Ok(pair(m, n))
            }
            Tok::Proj(s) => {
                self.bump();
                let m = self.atom()?;
                Ok(proj(s, m))
            }
            Tok::Inj(s) => {
                self.bump();
                self.expect(Tok::LBracket, "'['")?;
                let d = self.formula()?;
                self.expect(Tok::RBracket, "']'")?;
                let m = self.atom()?;
                Ok(inj(s, d, m))
            }
            Tok::Case => {
                self.bump();
                let scrut = self.term()?;
                self.expect(Tok::Of, "'of'")?;
                self.expect(Tok::LBrace, "'{'")?;
                let x = self.ident("a binder name")?;
                self.expect(Tok::Colon, "':'")?;
                let a = self.formula()?;
                self.expect(Tok::FatArrow, "'=>'")?;
                let p = self.term()?;
                self.expect(Tok::Pipe, "'|'")?;
                let y = self.ident("a binder name")?;
                self.expect(Tok::Colon, "':'")?;
                let b = self.formula()?;
                self.expect(Tok::FatArrow, "'=>'")?;
                let q = self.term()?;
                self.expect(Tok::RBrace, "'}'")?;
                Ok(case(scrut, &x, a, p, &y, b, q))
            }
            _ => Err(self.err("a term")),
        }
    }

    fn context(&mut self) -> Result<Vec<(String, Formula)>, SyntaxError> {
        let mut out = Vec::new();
        if *self.peek() == Tok::Eof {
            return Ok(out);
        }
        loop {
            let x = self.ident("a variable name")?;
            self.expect(Tok::Colon, "':'")?;
            let a = self.formula()?;
            out.push((x, a));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn finish<T>(self, v: T) -> Result<T, SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(v)
        } else {
            Err(self.err("end of input"))
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, SyntaxError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.finish(t)
}

pub fn parse_formula(src: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    p.finish(f)
}

/// Parses `x:T, y:T, ...` into a context. Duplicate declarations are an error.
pub fn parse_context(src: &str) -> Result<Ctx, String> {
    let mut p = Parser::new(src).map_err(|e| e.to_string())?;
    let pairs = p
        .context()
        .and_then(|v| p.finish(v))
        .map_err(|e| e.to_string())?;
    Ctx::from_pairs(pairs).map_err(|e| e.to_string())
}

fn fmt_formula(f: &Formula, level: u8, out: &mut String) {
    match f {
        Formula::Atom(s) => out.push_str(s),
        Formula::Bottom => out.push_str("Bot"),
        Formula::Imp(a, b) if b.is_bottom() => {
            out.push('~');
            fmt_formula(a, 3, out);
        }
        Formula::Imp(a, b) => {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            fmt_formula(a, 1, out);
            out.push_str(" -> ");
            fmt_formula(b, 0, out);
            if parens {
                out.push(')');
            }
        }
        Formula::Disj(a, b) => {
            let parens = level > 1;
            if parens {
                out.push('(');
            }
            fmt_formula(a, 2, out);
            out.push_str(" \\/ ");
            fmt_formula(b, 1, out);
            if parens {
                out.push(')');
            }
        }
        Formula::Conj(a, b) => {
            let parens = level > 2;
            if parens {
                out.push('(');
            }
            fmt_formula(a, 3, out);
            out.push_str(" /\\ ");
            fmt_formula(b, 2, out);
            if parens {
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_formula(self, 0, &mut s);
        f.write_str(&s)
    }
}

// 0 = any term, 1 = application head/left, 2 = atom
fn fmt_term(t: &Term, level: u8, out: &mut String) {
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Lam(x, a, m) => {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            out.push('\\');
            out.push_str(x);
            out.push(':');
            fmt_formula(a, 0, out);
            out.push_str(". ");
            fmt_term(m, 0, out);
            if parens {
                out.push(')');
            }
        }
        Term::Delta(k, a, m) => {
            let parens = level > 0;
            if parens {
                out.push('(');
            }
            out.push_str("delta ");
            out.push_str(k);
            out.push_str(":~");
            fmt_formula(a, 3, out);
            out.push_str(". ");
            fmt_term(m, 0, out);
            if parens {
                out.push(')');
            }
        }
        Term::App(m, n) => {
            let parens = level > 1;
            if parens {
                out.push('(');
            }
            fmt_term(m, 1, out);
            out.push(' ');
            fmt_term(n, 2, out);
            if parens {
                out.push(')');
            }
        }
        Term::Pair(m, n) => {
            out.push('<');
            fmt_term(m, 0, out);
            out.push_str(", ");
            fmt_term(n, 0, out);
            out.push('>');
        }
        Term::Proj(s, m) => {
            out.push_str(if *s == Side::Fst { "p1 " } else { "p2 " });
            fmt_term(m, 2, out);
        }
        Term::Inj(s, d, m) => {
            out.push_str(if *s == Side::Fst { "in1[" } else { "in2[" });
            fmt_formula(d, 0, out);
            out.push_str("] ");
            fmt_term(m, 2, out);
        }
        Term::Case {
            scrut,
            lname,
            lty,
            lbody,
            rname,
            rty,
            rbody,
        } => {
            out.push_str("case ");
            fmt_term(scrut, 0, out);
            out.push_str(" of { ");
            out.push_str(lname);
            out.push(':');
            fmt_formula(lty, 0, out);
            out.push_str(" => ");
            fmt_term(lbody, 0, out);
            out.push_str(" | ");
            out.push_str(rname);
            out.push(':');
            fmt_formula(rty, 0, out);
            out.push_str(" => ");
            fmt_term(rbody, 0, out);
            out.push_str(" }");
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_term(self, 0, &mut s);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::alpha_eq;

    #[test]
    fn parse_spec_examples() {
        assert_eq!(
            parse_term("\\x:X. x").unwrap(),
            lam("x", Formula::atom("X"), var("x"))
        );
        assert_eq!(
            parse_term("delta k:~X. k y").unwrap(),
            delta("k", Formula::atom("X"), app(var("k"), var("y")))
        );
        assert_eq!(
            parse_term("case m of { x:X => p | y:Y => q }").unwrap(),
            case(
                var("m"),
                "x",
                Formula::atom("X"),
                var("p"),
                "y",
                Formula::atom("Y"),
                var("q")
            )
        );
    }

    #[test]
    fn formula_precedence_and_sugar() {
        assert_eq!(
            parse_formula("~X").unwrap(),
            Formula::neg(Formula::atom("X"))
        );
        assert_eq!(
            parse_formula("X -> Bot").unwrap(),
            Formula::neg(Formula::atom("X"))
        );
        // /\ binds tighter than \/ binds tighter than ->
        let f = parse_formula("X /\\ Y \\/ Z -> W").unwrap();
        assert_eq!(
            f,
            Formula::imp(
                Formula::disj(
                    Formula::conj(Formula::atom("X"), Formula::atom("Y")),
                    Formula::atom("Z")
                ),
                Formula::atom("W")
            )
        );
        assert_eq!(
            parse_formula("X -> Y -> Z").unwrap(),
            Formula::imp(
                Formula::atom("X"),
                Formula::imp(Formula::atom("Y"), Formula::atom("Z"))
            )
        );
    }

    #[test]
    fn application_is_left_associative() {
        assert_eq!(
            parse_term("f x y").unwrap(),
            app(app(var("f"), var("x")), var("y"))
        );
    }

    #[test]
    fn projection_takes_an_atom() {
        assert_eq!(
            parse_term("p1 <a, b>").unwrap(),
            proj(Side::Fst, pair(var("a"), var("b")))
        );
        assert_eq!(
            parse_term("p1 f x").unwrap(),
            app(proj(Side::Fst, var("f")), var("x"))
        );
    }

    #[test]
    fn parse_context_list() {
        let ctx = parse_context("a:X, b:Y, f:X -> Bot").unwrap();
        assert_eq!(ctx.get("f"), Some(&Formula::neg(Formula::atom("X"))));
        assert!(parse_context("a:X, a:Y").is_err());
    }

    #[test]
    fn print_then_parse_round_trips() {
        let samples = [
            "\\x:X. x",
            "delta k:~(X -> X). k (\\x:X. x)",
            "case in1[X \\/ Bot] x of { a:X => a | b:Bot => delta j:~X. b }",
            "p2 <x, \\y:~X. y x>",
            "in2[X \\/ X /\\ X] <x, x>",
            "f (p1 z) (delta k:~Bot. k y)",
        ];
        for s in samples {
            let t = parse_term(s).unwrap();
            let printed = t.to_string();
            let t2 = parse_term(&printed)
                .unwrap_or_else(|e| panic!("reparse of {printed:?} failed: {e}"));
            assert!(alpha_eq(&t, &t2), "round trip changed {s:?} -> {printed:?}");
            // printing is a fixpoint
            assert_eq!(printed, t2.to_string());
        }
    }

    #[test]
    fn primes_lex_as_part_of_identifiers() {
        assert_eq!(parse_term("k''").unwrap(), var("k''"));
    }

    #[test]
    fn error_positions_are_line_and_column() {
        let e = parse_term("\\x:X.\n  )").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
    }
}
