//! S-expression reader. Atoms are lower-cased; `;` starts a line comment.

use std::fmt;

use super::PddlError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom { text: String, line: usize },
    List { items: Vec<SExpr>, line: usize },
}

impl SExpr {
    pub fn line(&self) -> usize {
        match self {
            SExpr::Atom { line, .. } | SExpr::List { line, .. } => *line,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom { text, .. } => Some(text),
            SExpr::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List { items, .. } => Some(items),
            SExpr::Atom { .. } => None,
        }
    }

    /// The leading keyword of a list, e.g. `and` in `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str, PddlError> {
        self.as_atom().ok_or_else(|| PddlError::syntax(self.line(), what))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[SExpr], PddlError> {
        self.as_list().ok_or_else(|| PddlError::syntax(self.line(), what))
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom { text, .. } => write!(f, "{text}"),
            SExpr::List { items, .. } => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses exactly one top-level expression.
pub fn parse(text: &str) -> Result<SExpr, PddlError> {
    let mut stack: Vec<(Vec<SExpr>, usize)> = Vec::new();
    let mut result: Option<SExpr> = None;
    let mut line = 1;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '\n' => line += 1,
            ';' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                if result.is_some() {
                    return Err(PddlError::syntax(line, "end of input"));
                }
                stack.push((Vec::new(), line));
            }
            ')' => {
                let (items, start) = stack.pop().ok_or_else(|| PddlError::syntax(line, "matching `(`"))?;
                let list = SExpr::List { items, line: start };
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => result = Some(list),
                }
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    end = j + c.len_utf8();
                    chars.next();
                }
                let atom = SExpr::Atom {
                    text: text[i..end].to_lowercase(),
                    line,
                };
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => return Err(PddlError::syntax(line, "`(`")),
                }
            }
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(PddlError::syntax(*start, "`)` before end of input"));
    }
    result.ok_or_else(|| PddlError::syntax(line, "an expression"))
}
