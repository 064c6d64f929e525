//! One declaration per line; every production is decided by its first token.

use num_traits::Zero;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, Diagnostics, Span};
use crate::scalar::Rational;
use crate::systems::PureLabel;

pub fn parse(text: &str) -> Result<CircuitAst, Diagnostics> {
    let tokens = lex(text).map_err(|d| Diagnostics(vec![d]))?;
    let mut decls = Vec::new();
    let mut diags = Vec::new();
    for line in tokens.split(|t| t.tok == Tok::Newline) {
        if line.is_empty() {
            continue;
        }
        let mut p = Cursor { toks: line, pos: 0 };
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(d) => diags.push(d),
        }
    }
    if diags.is_empty() && !decls.iter().any(|d| !matches!(d.kind, DeclKind::Comment(_))) {
        diags.push(Diagnostic::new(Span { line: 1, col: 1, len: 1 }, "empty program"));
    }
    if diags.is_empty() {
        Ok(CircuitAst { decls })
    } else {
        Err(Diagnostics(diags))
    }
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> Span {
        match self.toks.get(self.pos) {
            Some(t) => t.span,
            None => {
                let last = self.toks.last().expect("non-empty line").span;
                Span { line: last.line, col: last.col + last.len, len: 1 }
            }
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of line".into(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Int(n)) => format!("`{n}`"),
            Some(Tok::Label(s)) => format!("label `{s}`"),
            Some(t) => format!("{t:?}"),
        }
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        Err(Diagnostic::new(self.here(), format!("expected {expected}, found {}", self.describe())))
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => self.error(&format!("`{kw}`")),
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let id = Ident { name: s.clone(), span: self.here() };
                self.bump();
                Ok(id)
            }
            _ => self.error("a name"),
        }
    }

    fn int(&mut self) -> PResult<u64> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            _ => self.error("an integer"),
        }
    }

    fn positive(&mut self, what: &str) -> PResult<usize> {
        let span = self.here();
        match self.int()? {
            0 => Err(Diagnostic::new(span, format!("{what} must be positive"))),
            n => Ok(n as usize),
        }
    }

    fn bit(&mut self) -> PResult<u8> {
        let span = self.here();
        match self.int()? {
            b @ (0 | 1) => Ok(b as u8),
            b => Err(Diagnostic::new(span, format!("expected a bit, found `{b}`"))),
        }
    }

    fn weight(&mut self) -> PResult<Rational> {
        let span = self.here();
        let num = self.int()? as i128;
        if !self.eat(&Tok::Slash) {
            return Ok(Rational::from(num));
        }
        let den = self.int()? as i128;
        if den.is_zero() {
            return Err(Diagnostic::new(span, "zero denominator"));
        }
        Ok(Rational::new(num, den))
    }

    fn label(&mut self) -> PResult<LabelRef> {
        let span = self.here();
        match self.peek() {
            Some(Tok::Int(_)) => Ok(LabelRef::Flat(self.positive("label")?)),
            Some(Tok::Label(text)) => {
                let parsed = text.parse::<PureLabel>().map_err(|e| Diagnostic::new(span, e.to_string()))?;
                self.bump();
                Ok(LabelRef::Nested(parsed))
            }
            _ => self.error("a label"),
        }
    }

    fn end(&self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(_) => self.error("end of line"),
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let span = self.here();
        if let Some(Tok::Comment(c)) = self.peek() {
            let kind = DeclKind::Comment(c.clone());
            self.bump();
            return Ok(Decl { kind, span });
        }
        let head = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return self.error("a declaration"),
        };
        self.bump();
        let kind = match head.as_str() {
            "system" => self.system()?,
            "state" => self.state()?,
            "effect" => self.effect()?,
            "gate" => self.gate()?,
            "circuit" => self.circuit()?,
            "eval" => DeclKind::Eval { name: self.ident()? },
            other => {
                return Err(Diagnostic::new(span, format!("unknown declaration `{other}`")));
            }
        };
        self.end()?;
        Ok(Decl { kind, span })
    }

    fn system(&mut self) -> PResult<DeclKind> {
        let name = self.ident()?;
        self.expect(Tok::Eq, "`=`")?;
        let expr = match self.peek() {
            Some(Tok::Ident(s)) if s == "elem" => {
                self.bump();
                let span = self.here();
                let n = self.positive("dimension")?;
                if n < 2 {
                    return Err(Diagnostic::new(span, "elementary systems need dimension at least 2"));
                }
                SystemExpr::Elem(n)
            }
            Some(Tok::Ident(_)) => {
                let mut parts = vec![self.ident()?];
                self.expect(Tok::Star, "`*`")?;
                parts.push(self.ident()?);
                while self.eat(&Tok::Star) {
                    parts.push(self.ident()?);
                }
                SystemExpr::Product(parts)
            }
            _ => return self.error("`elem` or a product of systems"),
        };
        Ok(DeclKind::System { name, expr })
    }

    fn header(&mut self) -> PResult<(Ident, Ident)> {
        let name = self.ident()?;
        self.expect(Tok::Colon, "`:`")?;
        let system = self.ident()?;
        self.expect(Tok::Eq, "`=`")?;
        Ok((name, system))
    }

    fn mix(&mut self) -> PResult<Vec<(Rational, LabelRef)>> {
        let mut parts = vec![(self.weight()?, self.label()?)];
        while self.eat(&Tok::Plus) {
            parts.push((self.weight()?, self.label()?));
        }
        Ok(parts)
    }

    fn state(&mut self) -> PResult<DeclKind> {
        let (name, system) = self.header()?;
        let body = match self.ident()?.name.as_str() {
            "pure" => StateBody::Pure(self.label()?),
            "mix" => StateBody::Mix(self.mix()?),
            "uniform" => StateBody::Uniform,
            _ => {
                self.pos -= 1;
                return self.error("`pure`, `mix` or `uniform`");
            }
        };
        Ok(DeclKind::State { name, system, body })
    }

    fn effect(&mut self) -> PResult<DeclKind> {
        let (name, system) = self.header()?;
        let body = match self.ident()?.name.as_str() {
            "pure" => EffectBody::Pure(self.label()?),
            "mix" => EffectBody::Mix(self.mix()?),
            "discard" => EffectBody::Discard,
            _ => {
                self.pos -= 1;
                return self.error("`pure`, `mix` or `discard`");
            }
        };
        Ok(DeclKind::Effect { name, system, body })
    }

    fn term(&mut self) -> PResult<TermAst> {
        let input = self.positive("input label")?;
        self.expect(Tok::Arrow, "`->`")?;
        let output = self.positive("output label")?;
        self.keyword("tau")?;
        let tau = self.bit()?;
        self.keyword("w")?;
        let weight = self.weight()?;
        Ok(TermAst { input, output, tau, weight })
    }

    fn int_list(&mut self) -> PResult<Vec<u64>> {
        self.expect(Tok::LBrack, "`[`")?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrack) {
            return Ok(out);
        }
        loop {
            out.push(self.int()?);
            if self.eat(&Tok::RBrack) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "`,` or `]`")?;
        }
    }

    fn gate(&mut self) -> PResult<DeclKind> {
        let name = self.ident()?;
        self.expect(Tok::Colon, "`:`")?;
        let input = self.ident()?;
        self.expect(Tok::Arrow, "`->`")?;
        let output = self.ident()?;
        self.expect(Tok::Eq, "`=`")?;
        let body = match self.ident()?.name.as_str() {
            "atomic" => {
                let mut terms = vec![self.term()?];
                while self.eat(&Tok::Plus) {
                    terms.push(self.term()?);
                }
                GateBody::Atomic(terms)
            }
            "id" => GateBody::Id,
            "swap" => GateBody::Swap(self.ident()?, self.ident()?),
            "nu" => GateBody::Nu(self.ident()?, self.ident()?),
            "nu_inv" => GateBody::NuInv(self.ident()?, self.ident()?),
            "rev" => {
                let span = self.here();
                let perm = self.int_list()?.into_iter().map(|x| x as usize).collect();
                let bits = self.int_list()?;
                if bits.iter().any(|&b| b > 1) {
                    return Err(Diagnostic::new(span, "shift bits must be 0 or 1"));
                }
                GateBody::Rev(perm, bits.into_iter().map(|b| b as u8).collect())
            }
            _ => {
                self.pos -= 1;
                return self.error("`atomic`, `id`, `swap`, `nu`, `nu_inv` or `rev`");
            }
        };
        Ok(DeclKind::Gate { name, input, output, body })
    }

    fn circuit(&mut self) -> PResult<DeclKind> {
        let name = self.ident()?;
        self.expect(Tok::Eq, "`=`")?;
        let mut stages = Vec::new();
        loop {
            let mut row = vec![self.ident()?];
            while self.eat(&Tok::Bar) {
                row.push(self.ident()?);
            }
            stages.push(row);
            if !self.eat(&Tok::Semi) {
                break;
            }
        }
        Ok(DeclKind::Circuit { name, stages })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_declaration() {
        let ast = parse(
            "system a = elem 2\n\
             system ab = a * a\n\
             state r : a = pure 1\n\
             state m : ab = mix 1/2 ((1,2);0) + 1/4 3\n\
             effect e : a = discard\n\
             gate t : a -> a = atomic 1 -> 2 tau 1 w 1/2\n\
             gate s : ab -> ab = swap a a\n\
             gate p : a -> a = rev [2, 1] [0, 1]\n\
             circuit c = r | r ; s ; e | e\n\
             eval c\n",
        )
        .unwrap();
        assert_eq!(ast.decls.len(), 10);
        match &ast.decls[5].kind {
            DeclKind::Gate { body: GateBody::Atomic(terms), .. } => {
                assert_eq!(terms, &[TermAst { input: 1, output: 2, tau: 1, weight: Rational::new(1, 2) }]);
            }
            other => panic!("unexpected {other:?}"),
        }
        match &ast.decls[8].kind {
            DeclKind::Circuit { stages, .. } => assert_eq!(stages.iter().map(Vec::len).collect::<Vec<_>>(), [2, 1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_have_spans_and_accumulate() {
        let err = parse("system a = elem\nsystem b = elem 1\nwat x\n").unwrap_err();
        let at: Vec<_> = err.0.iter().map(|d| (d.line, d.col)).collect();
        assert_eq!(at, [(1, 16), (2, 17), (3, 1)]);
        assert!(parse("").is_err());
        assert!(parse("# only a comment\n\n").is_err());
        assert!(parse("gate t : a -> a = atomic 1 -> 2 tau 2 w 1").is_err());
        assert!(parse("state r : a = pure 1 extra").is_err());
    }
}
