use super::{Diagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    /// A parenthesised pure label, kept as raw text.
    Label(String),
    /// A whole-line comment, without the `#`.
    Comment(String),
    Eq,
    Colon,
    Arrow,
    Star,
    Plus,
    Semi,
    Bar,
    Slash,
    Comma,
    LBrack,
    RBrack,
    Newline,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut k = 0;
        let at = |k: usize, len: usize| Span { line: line_no, col: k + 1, len };
        while k < chars.len() {
            let c = chars[k];
            let start = k;
            let tok = match c {
                ' ' | '\t' | '\r' => {
                    k += 1;
                    continue;
                }
                '#' => {
                    let body: String = chars[k + 1..].iter().collect();
                    // Trailing comments are dropped; whole-line ones are kept.
                    let whole = out.last().is_none_or(|t: &Token| t.span.line != line_no);
                    k = chars.len();
                    if !whole {
                        continue;
                    }
                    Tok::Comment(body.trim().to_string())
                }
                '=' => single(&mut k, Tok::Eq),
                ':' => single(&mut k, Tok::Colon),
                '*' => single(&mut k, Tok::Star),
                '+' => single(&mut k, Tok::Plus),
                ';' => single(&mut k, Tok::Semi),
                '|' => single(&mut k, Tok::Bar),
                '/' => single(&mut k, Tok::Slash),
                ',' => single(&mut k, Tok::Comma),
                '[' => single(&mut k, Tok::LBrack),
                ']' => single(&mut k, Tok::RBrack),
                '-' if chars.get(k + 1) == Some(&'>') => {
                    k += 2;
                    Tok::Arrow
                }
                '(' => {
                    let mut depth = 0usize;
                    while k < chars.len() {
                        match chars[k] {
                            '(' => depth += 1,
                            ')' => depth -= 1,
                            d if d.is_ascii_digit() || d == ',' || d == ';' || d == ' ' => {}
                            d => return Err(Diagnostic::new(at(k, 1), format!("unexpected `{d}` in label"))),
                        }
                        k += 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    if depth != 0 {
                        return Err(Diagnostic::new(at(start, k - start), "unclosed label"));
                    }
                    Tok::Label(chars[start..k].iter().filter(|c| **c != ' ').collect())
                }
                d if d.is_ascii_digit() => {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    let digits: String = chars[start..k].iter().collect();
                    let n = digits.parse().map_err(|_| Diagnostic::new(at(start, k - start), "integer too large"))?;
                    Tok::Int(n)
                }
                a if a.is_ascii_alphabetic() || a == '_' => {
                    while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                        k += 1;
                    }
                    Tok::Ident(chars[start..k].iter().collect())
                }
                other => return Err(Diagnostic::new(at(k, 1), format!("unexpected character `{other}`"))),
            };
            out.push(Token { tok, span: at(start, (k - start).max(1)) });
        }
        out.push(Token { tok: Tok::Newline, span: at(chars.len(), 1) });
    }
    Ok(out)
}

fn single(k: &mut usize, tok: Tok) -> Tok {
    *k += 1;
    tok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("gate t : a -> a = atomic 1 -> 2 tau 1 w 1/2"),
            vec![
                Tok::Ident("gate".into()),
                Tok::Ident("t".into()),
                Tok::Colon,
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("a".into()),
                Tok::Eq,
                Tok::Ident("atomic".into()),
                Tok::Int(1),
                Tok::Arrow,
                Tok::Int(2),
                Tok::Ident("tau".into()),
                Tok::Int(1),
                Tok::Ident("w".into()),
                Tok::Int(1),
                Tok::Slash,
                Tok::Int(2),
                Tok::Newline,
            ]
        );
    }

    #[test]
    fn labels_and_comments() {
        assert_eq!(
            toks("# hello\nstate r : ab = pure ((1, 2);0) # trailing"),
            vec![
                Tok::Comment("hello".into()),
                Tok::Newline,
                Tok::Ident("state".into()),
                Tok::Ident("r".into()),
                Tok::Colon,
                Tok::Ident("ab".into()),
                Tok::Eq,
                Tok::Ident("pure".into()),
                Tok::Label("((1,2);0)".into()),
                Tok::Newline,
            ]
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = lex("system a = elem 2\nsystem b = $").unwrap_err();
        assert_eq!((e.line, e.col), (2, 12));
        assert!(lex("state r : a = pure ((1,2);0").is_err());
    }
}
