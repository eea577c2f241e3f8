//! Reader for the parenthesized prefix notation used by `.dls` files.
//!
//! The reader only knows about lists, symbols, keywords (`:owner`),
//! double-quoted strings and the `'x` quote shorthand. Giving meaning to
//! the forms is the job of [`crate::dls::parse`].

use std::fmt;

use unicode_normalization::UnicodeNormalization;

use super::SyntaxError;

/// A 1-based source position.
///
/// Positions never take part in equality: two declarations parsed from
/// differently formatted sources compare equal when their structure does.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Pos {
        Pos { line, column }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Lowercased, NFC-normalized symbol.
    Symbol(String, Pos),
    /// A `:keyword`, stored without the colon.
    Keyword(String, Pos),
    Str(String, Pos),
    Quote(Box<Sexp>, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Symbol(_, p)
            | Sexp::Keyword(_, p)
            | Sexp::Str(_, p)
            | Sexp::Quote(_, p)
            | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s, _) => Some(s),
            _ => None,
        }
    }

    /// A symbol written either bare or quoted.
    pub fn as_name(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s, _) => Some(s),
            Sexp::Quote(inner, _) => inner.as_symbol(),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            _ => None,
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Sexp::Symbol(..) => "symbol",
            Sexp::Keyword(..) => "keyword",
            Sexp::Str(..) => "string",
            Sexp::Quote(..) => "quoted form",
            Sexp::List(..) => "list",
        }
    }
}

/// Lowercases and NFC-normalizes a symbol name.
pub fn normalize_symbol(raw: &str) -> String {
    raw.nfc().collect::<String>().to_lowercase()
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '\'' | ';')
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
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

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<Sexp>, SyntaxError> {
        self.skip_trivia();
        let start = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(SyntaxError::new(start, "unclosed parenthesis"));
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        Some(_) => {
                            // read() only returns None at end of input, handled above
                            if let Some(item) = self.read()? {
                                items.push(item);
                            }
                        }
                    }
                }
            }
            ')' => Err(SyntaxError::new(start, "unbalanced closing parenthesis")),
            '\'' => {
                self.bump();
                self.skip_trivia();
                match self.chars.peek() {
                    None | Some(')') => Err(SyntaxError::new(start, "quote without a form")),
                    Some(_) => {
                        let inner = self.read()?.expect("peeked a character");
                        Ok(Some(Sexp::Quote(Box::new(inner), start)))
                    }
                }
            }
            '"' => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SyntaxError::new(start, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => text.push('\n'),
                            Some('t') => text.push('\t'),
                            Some(other) => text.push(other),
                            None => return Err(SyntaxError::new(start, "unterminated string")),
                        },
                        Some(other) => text.push(other),
                    }
                }
                Ok(Some(Sexp::Str(text.nfc().collect(), start)))
            }
            _ => {
                let mut raw = String::new();
                while let Some(&c) = self.chars.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    raw.push(c);
                    self.bump();
                }
                if let Some(kw) = raw.strip_prefix(':') {
                    if kw.is_empty() {
                        return Err(SyntaxError::new(start, "empty keyword"));
                    }
                    Ok(Some(Sexp::Keyword(normalize_symbol(kw), start)))
                } else {
                    Ok(Some(Sexp::Symbol(normalize_symbol(&raw), start)))
                }
            }
        }
    }
}

/// Reads every top-level form of `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut reader = Reader {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut forms = Vec::new();
    while let Some(form) = reader.read()? {
        forms.push(form);
    }
    Ok(forms)
}

/// Writes a string literal with the escapes the reader understands.
pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_quotes() {
        let forms = read_all("(one-of 'nc 'NP) ; trailing\n:Owner \"GETA\"").unwrap();
        assert_eq!(forms.len(), 3);
        let items = forms[0].as_list().unwrap();
        assert_eq!(items[0].as_symbol(), Some("one-of"));
        assert_eq!(items[2].as_name(), Some("np"));
        assert!(matches!(&forms[1], Sexp::Keyword(k, _) if k == "owner"));
        assert!(matches!(&forms[2], Sexp::Str(s, _) if s == "GETA"));
    }

    #[test]
    fn unclosed_paren_reports_opening_position() {
        let err = read_all("(a\n  (b c)\n  (d").unwrap_err();
        assert_eq!((err.line, err.column), (3, 3));
        let err = read_all("(def-linguistic-class x (").unwrap_err();
        assert_eq!((err.line, err.column), (1, 25));
    }

    #[test]
    fn stray_close_paren() {
        let err = read_all("(a))").unwrap_err();
        assert_eq!((err.line, err.column), (1, 4));
    }

    #[test]
    fn comments_anywhere_on_a_line() {
        let forms = read_all("(a ;; comment (\n b)").unwrap();
        assert_eq!(forms[0].as_list().unwrap().len(), 2);
    }

    #[test]
    fn symbols_fold_case_and_keep_accents() {
        let forms = read_all("'À+Nom Être").unwrap();
        assert_eq!(forms[0].as_name(), Some("à+nom"));
        assert_eq!(forms[1].as_symbol(), Some("être"));
    }

    #[test]
    fn string_escapes_round_trip() {
        let s = "say \"hi\"\\\n";
        let forms = read_all(&quote_string(s)).unwrap();
        assert!(matches!(&forms[0], Sexp::Str(t, _) if t == s));
    }
}
