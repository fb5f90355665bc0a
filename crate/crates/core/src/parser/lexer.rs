use crate::diagnostic::{rules, Diagnostic, Location};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Arrow,
    Sym(char),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Real(x) => format!("`{x}`"),
            Tok::Str(_) => "string literal".to_owned(),
            Tok::Arrow => "`->`".to_owned(),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub at: Location,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> Location {
        Location::new(self.line, self.column)
    }
}

const SYMBOLS: &str = "{}()<>,.:|=+&!";

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor { chars: text.chars().peekable(), line: 1, column: 1 };
    let mut out = Vec::new();
    // Position just past the last token; used for the end-of-input token so it
    // stays inside the text.
    let mut last = Location::start();
    while let Some(c) = cur.peek() {
        let at = cur.here();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            number(&mut cur, String::new(), at)?
        } else if c == '-' {
            cur.bump();
            match cur.peek() {
                Some('>') => {
                    cur.bump();
                    Tok::Arrow
                }
                Some(d) if d.is_ascii_digit() => number(&mut cur, "-".to_owned(), at)?,
                _ => return Err(Diagnostic::error(at, rules::LEXICAL, "expected `->` or a number after `-`")),
            }
        } else if c == '"' {
            cur.bump();
            string(&mut cur, at)?
        } else if SYMBOLS.contains(c) {
            cur.bump();
            Tok::Sym(c)
        } else {
            return Err(Diagnostic::error(at, rules::LEXICAL, format!("unexpected character `{c}`")));
        };
        last = at;
        out.push(Token { tok, at });
    }
    out.push(Token { tok: Tok::Eof, at: last });
    Ok(out)
}

fn number(cur: &mut Cursor<'_>, mut s: String, at: Location) -> Result<Tok, Diagnostic> {
    while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
        s.push(d);
        cur.bump();
    }
    // A `.` is only a decimal point when a digit follows; otherwise it is the
    // prefix separator, as in `send q:m<1>.end`.
    let mut lookahead = cur.chars.clone();
    if lookahead.next() == Some('.') && lookahead.next().is_some_and(|d| d.is_ascii_digit()) {
        s.push('.');
        cur.bump();
        while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
            s.push(d);
            cur.bump();
        }
        return s
            .parse()
            .map(Tok::Real)
            .map_err(|_| Diagnostic::error(at, rules::LEXICAL, format!("invalid real literal `{s}`")));
    }
    s.parse()
        .map(Tok::Int)
        .map_err(|_| Diagnostic::error(at, rules::LEXICAL, format!("integer literal `{s}` out of range")))
}

fn string(cur: &mut Cursor<'_>, at: Location) -> Result<Tok, Diagnostic> {
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => return Err(Diagnostic::error(at, rules::LEXICAL, "unterminated string literal")),
            Some('"') => return Ok(Tok::Str(s)),
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                _ => return Err(Diagnostic::error(at, rules::LEXICAL, "invalid escape in string literal")),
            },
            Some(c) => s.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn integer_before_prefix_dot_is_not_real() {
        assert_eq!(
            toks("<1>.end"),
            vec![Tok::Sym('<'), Tok::Int(1), Tok::Sym('>'), Tok::Sym('.'), Tok::Ident("end".into()), Tok::Eof]
        );
        assert_eq!(toks("2.5 -3 ->"), vec![Tok::Real(2.5), Tok::Int(-3), Tok::Arrow, Tok::Eof]);
    }

    #[test]
    fn comments_and_escapes() {
        assert_eq!(toks("# hi\n\"a\\\"b\""), vec![Tok::Str("a\"b".into()), Tok::Eof]);
    }

    #[test]
    fn bad_character_reports_location() {
        let e = tokenize("role p\n  @").unwrap_err();
        assert_eq!(e.location, Location::new(2, 3));
        assert_eq!(e.rule, rules::LEXICAL);
    }
}
