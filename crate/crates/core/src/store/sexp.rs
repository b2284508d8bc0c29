//! A small s-expression reader that keeps source positions for errors.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn error(self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs, _) => Some(xs),
            Sexp::Atom(..) => None,
        }
    }

    /// A list whose first element is an atom: `(head rest..)`.
    pub fn form(&self) -> Option<(&str, &[Sexp])> {
        let xs = self.list()?;
        let head = xs.first()?.atom()?;
        Some((head, &xs[1..]))
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_blank();
        let start = self.pos;
        match self.chars.peek() {
            None => Err(start.error("unexpected end of input")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => return Err(start.error("unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(start.error("unexpected `)`")),
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(s, start))
            }
        }
    }
}

/// Reads every top-level form of `src`. `first_line` is the line number of
/// the first character, for inputs that follow a header.
pub fn read_all(src: &str, first_line: usize) -> Result<Vec<Sexp>> {
    let mut r = Reader {
        chars: src.chars().peekable(),
        pos: Pos {
            line: first_line,
            col: 1,
        },
    };
    let mut out = Vec::new();
    loop {
        r.skip_blank();
        if r.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

/// Reads exactly one form.
pub fn read_one(src: &str) -> Result<Sexp> {
    let mut forms = read_all(src, 1)?;
    match forms.len() {
        1 => Ok(forms.remove(0)),
        0 => Err(Pos { line: 1, col: 1 }.error("empty input")),
        _ => Err(forms[1].pos().error("trailing input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let forms = read_all("; c\n(a (b c))\n  d", 1).unwrap();
        assert_eq!(forms.len(), 2);
        assert_eq!(forms[0].pos(), Pos { line: 2, col: 1 });
        assert_eq!(forms[1].pos(), Pos { line: 3, col: 3 });
        let (head, rest) = forms[0].form().unwrap();
        assert_eq!(head, "a");
        assert_eq!(rest[0].list().unwrap().len(), 2);
    }

    #[test]
    fn unbalanced() {
        let e = read_all("(a\n (b)", 1).unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 1,
                col: 1,
                msg: "unclosed `(`".into()
            }
        );
        assert!(matches!(read_all(")", 1), Err(Error::Parse { line: 1, col: 1, .. })));
    }
}
