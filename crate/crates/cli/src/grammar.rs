//! Tokenizer and block parser shared by job files and machine reports.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn error(self, msg: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, msg: msg.into() }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Word(String),
    Str(String),
    LBrace,
    RBrace,
    Eq,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Newline,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "{w}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::Eq => write!(f, "="),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Comma => write!(f, ","),
            Tok::Plus => write!(f, "+"),
            Tok::Newline => write!(f, "end of line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '{' | '}' | '=' | '[' | ']' | ',' | '+' | '"' | '#')
}

pub fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: li + 1, col: i + 1 };
            let single = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '=' => Some(Tok::Eq),
                '[' => Some(Tok::LBracket),
                ']' => Some(Tok::RBracket),
                ',' => Some(Tok::Comma),
                '+' => Some(Tok::Plus),
                _ => None,
            };
            if let Some(tok) = single {
                out.push(Spanned { tok, pos });
                i += 1;
            } else if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if c == '"' {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(pos.error("unterminated string")),
                        Some('"') => break,
                        Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push(Spanned { tok: Tok::Str(s), pos });
            } else {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                out.push(Spanned { tok: Tok::Word(chars[start..i].iter().collect()), pos });
            }
        }
        out.push(Spanned { tok: Tok::Newline, pos: Pos { line: li + 1, col: chars.len() + 1 } });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub pos: Pos,
    pub value: Vec<Spanned>,
}

impl Entry {
    /// Position of the value, or of the key when the value is empty.
    pub fn value_pos(&self) -> Pos {
        self.value.first().map_or(self.pos, |s| s.pos)
    }

    pub fn words(&self) -> Result<Vec<(String, Pos)>, ParseError> {
        self.value
            .iter()
            .map(|s| match &s.tok {
                Tok::Word(w) | Tok::Str(w) => Ok((w.clone(), s.pos)),
                t => Err(s.pos.error(format!("unexpected `{t}` in value of `{}`", self.key))),
            })
            .collect()
    }

    pub fn single(&self) -> Result<(String, Pos), ParseError> {
        let w = self.words()?;
        match w.as_slice() {
            [one] => Ok(one.clone()),
            [] => Err(self.pos.error(format!("`{}` needs a value", self.key))),
            [_, (_, p), ..] => Err(p.error(format!("`{}` takes a single value", self.key))),
        }
    }

    pub fn parse_single<T: std::str::FromStr>(&self, what: &str) -> Result<T, ParseError> {
        let (w, p) = self.single()?;
        w.parse().map_err(|_| p.error(format!("`{}` must be {what}, found `{w}`", self.key)))
    }

    pub fn parse_list<T: std::str::FromStr>(&self, what: &str) -> Result<Vec<T>, ParseError> {
        self.words()?
            .into_iter()
            .map(|(w, p)| {
                w.parse().map_err(|_| p.error(format!("`{}` must be a list of {what}, found `{w}`", self.key)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub label: Option<String>,
    pub pos: Pos,
    pub entries: Vec<Entry>,
    pub blocks: Vec<Block>,
}

impl Block {
    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Entry, ParseError> {
        self.entry(key).ok_or_else(|| self.pos.error(format!("`{}` block is missing `{key}`", self.name)))
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn blocks_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Block> + 'a {
        self.blocks.iter().filter(move |b| b.name == name)
    }

    /// Rejects keys and sub-blocks outside the given lists.
    pub fn expect_only(&self, keys: &[&str], blocks: &[&str]) -> Result<(), ParseError> {
        if let Some(e) = self.entries.iter().find(|e| !keys.contains(&e.key.as_str())) {
            return Err(e.pos.error(format!("unknown key `{}` in `{}` block", e.key, self.name)));
        }
        if let Some(b) = self.blocks.iter().find(|b| !blocks.contains(&b.name.as_str())) {
            return Err(b.pos.error(format!("unknown block `{}` in `{}` block", b.name, self.name)));
        }
        Ok(())
    }
}

struct Parser {
    toks: Vec<Spanned>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.i)
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Spanned { tok: Tok::Newline, .. })) {
            self.i += 1;
        }
    }

    fn end_pos(&self) -> Pos {
        self.toks.last().map_or(Pos { line: 1, col: 1 }, |s| s.pos)
    }

    /// Items until `}` (when `nested`) or end of input.
    fn items(&mut self, nested: bool, open: Pos) -> Result<(Vec<Entry>, Vec<Block>), ParseError> {
        let mut entries = Vec::new();
        let mut blocks = Vec::new();
        loop {
            self.skip_newlines();
            let Some(head) = self.peek().cloned() else {
                if nested {
                    return Err(open.error("unclosed `{`"));
                }
                return Ok((entries, blocks));
            };
            self.i += 1;
            let name = match head.tok {
                Tok::RBrace if nested => return Ok((entries, blocks)),
                Tok::Word(w) => w,
                t => return Err(head.pos.error(format!("expected a key or block name, found `{t}`"))),
            };
            let next = self.peek().cloned().ok_or_else(|| self.end_pos().error("unexpected end of input"))?;
            match next.tok {
                Tok::Eq => {
                    self.i += 1;
                    let mut value = Vec::new();
                    while let Some(s) = self.peek().cloned() {
                        if s.tok == Tok::Newline {
                            break;
                        }
                        if matches!(s.tok, Tok::LBrace | Tok::RBrace | Tok::Eq) {
                            return Err(s.pos.error(format!("unexpected `{}` in value of `{name}`", s.tok)));
                        }
                        value.push(s);
                        self.i += 1;
                    }
                    entries.push(Entry { key: name, pos: head.pos, value });
                }
                Tok::LBrace => {
                    self.i += 1;
                    let (e, b) = self.items(true, next.pos)?;
                    blocks.push(Block { name, label: None, pos: head.pos, entries: e, blocks: b });
                }
                Tok::Word(label) | Tok::Str(label) => {
                    self.i += 1;
                    let brace = self.peek().cloned().ok_or_else(|| self.end_pos().error("unexpected end of input"))?;
                    if brace.tok != Tok::LBrace {
                        return Err(brace
                            .pos
                            .error(format!("expected `{{` after `{name} {label}`, found `{}`", brace.tok)));
                    }
                    self.i += 1;
                    let (e, b) = self.items(true, brace.pos)?;
                    blocks.push(Block { name, label: Some(label), pos: head.pos, entries: e, blocks: b });
                }
                t => return Err(next.pos.error(format!("expected `=` or `{{` after `{name}`, found `{t}`"))),
            }
        }
    }
}

/// Parses a whole document into its top-level blocks and entries.
pub fn parse(src: &str) -> Result<Block, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, i: 0 };
    let (entries, blocks) = p.items(false, Pos { line: 1, col: 1 })?;
    Ok(Block { name: "document".into(), label: None, pos: Pos { line: 1, col: 1 }, entries, blocks })
}

/// A value token written back out: bare when it tokenizes as one word, quoted otherwise.
pub fn quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(is_word_char) {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_blocks_and_labels() {
        let doc = parse("job a {\n  command = cohomology # c\n  connection {\n    matrix 0 {\n      entry = 0 0 : 1/2 [-1] + 3 [2]\n    }\n  }\n}\n").unwrap();
        let job = &doc.blocks[0];
        assert_eq!(job.label.as_deref(), Some("a"));
        assert_eq!(job.entry("command").unwrap().single().unwrap().0, "cohomology");
        let m = job.block("connection").unwrap().block("matrix").unwrap();
        assert_eq!(m.label.as_deref(), Some("0"));
        assert_eq!(m.entries[0].value.len(), 12);
    }

    #[test]
    fn errors_carry_location() {
        let e = parse("job a {\n  d = 1\n  = 2\n}").unwrap_err();
        assert_eq!((e.line, e.col), (3, 3));
        let e = parse("job a {\n  d = 1\n").unwrap_err();
        assert_eq!((e.line, e.col), (1, 7));
        let e = parse("x = \"abc").unwrap_err();
        assert_eq!((e.line, e.col), (1, 5));
    }

    #[test]
    fn quoting_roundtrips() {
        for s in ["dx/x", "x dx/y", "a\"b", ""] {
            let doc = parse(&format!("k = {}", quote(s))).unwrap();
            assert_eq!(doc.entries[0].single().unwrap().0, s);
        }
    }
}
