//! Tokenizer for the Java subset.
//!
//! `>` is always emitted as a single-character token. The parser re-joins
//! adjacent `>` tokens into shift and comparison operators, which keeps
//! nested generic arguments (`Map<K, List<V>>`) unambiguous.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Op,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
    /// Byte offset of the first character in the source.
    pub offset: usize,
    /// True when the next token starts immediately after this one.
    pub joined: bool,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }

    pub fn is_word(&self, word: &str) -> bool {
        self.kind == TokenKind::Ident && self.text == word
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

const OPERATORS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "=", ">", "<",
    "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%",
];

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    byte: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        self.byte += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        chars: source.chars().collect(),
        pos: 0,
        byte: 0,
        line: 1,
        col: 1,
        _src: source,
    };
    let mut tokens: Vec<Token> = Vec::new();
    // index of the previous token and whether whitespace followed it
    loop {
        let before = cur.pos;
        skip_trivia(&mut cur)?;
        if let Some(last) = tokens.last_mut() {
            last.joined = cur.pos == before;
        }
        let Some(c) = cur.peek(0) else { break };
        let (line, col, offset) = (cur.line, cur.col, cur.byte);
        let (kind, text) = if c.is_alphabetic() || c == '_' || c == '$' {
            let mut s = String::new();
            while let Some(c) = cur.peek(0) {
                if c.is_alphanumeric() || c == '_' || c == '$' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            (TokenKind::Ident, s)
        } else if c.is_ascii_digit() || (c == '.' && cur.peek(1).is_some_and(|d| d.is_ascii_digit()))
        {
            (TokenKind::Number, lex_number(&mut cur))
        } else if cur.starts_with("\"\"\"") {
            (TokenKind::Str, lex_text_block(&mut cur, line, col)?)
        } else if c == '"' {
            (TokenKind::Str, lex_quoted(&mut cur, '"', line, col)?)
        } else if c == '\'' {
            (TokenKind::Char, lex_quoted(&mut cur, '\'', line, col)?)
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.starts_with(op)) {
            for _ in 0..op.chars().count() {
                cur.bump();
            }
            (TokenKind::Op, (*op).to_string())
        } else if c == '\\' && cur.peek(1) == Some('u') {
            // unicode escapes outside literals are rare; treat as an opaque identifier char run
            let mut s = String::new();
            while let Some(c) = cur.peek(0) {
                if c.is_alphanumeric() || c == '\\' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            (TokenKind::Ident, s)
        } else {
            return Err(LexError {
                line,
                col,
                message: format!("unexpected character {c:?}"),
            });
        };
        tokens.push(Token {
            kind,
            text,
            line,
            col,
            offset,
            joined: false,
        });
    }
    Ok(tokens)
}

fn skip_trivia(cur: &mut Cursor<'_>) -> Result<(), LexError> {
    loop {
        match cur.peek(0) {
            Some(c) if c.is_whitespace() || c == '\u{feff}' => {
                cur.bump();
            }
            Some('/') if cur.peek(1) == Some('/') => {
                while let Some(c) = cur.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            Some('/') if cur.peek(1) == Some('*') => {
                let (line, col) = (cur.line, cur.col);
                cur.bump();
                cur.bump();
                loop {
                    if cur.starts_with("*/") {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    if cur.bump().is_none() {
                        return Err(LexError {
                            line,
                            col,
                            message: "unterminated block comment".into(),
                        });
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> String {
    let mut s = String::new();
    let hex = cur.starts_with("0x") || cur.starts_with("0X");
    while let Some(c) = cur.peek(0) {
        let exp_sign = (c == '+' || c == '-') && !hex && s.ends_with(['e', 'E']);
        let hex_exp_sign = (c == '+' || c == '-') && hex && s.ends_with(['p', 'P']);
        let point = c == '.'
            && cur.peek(1).is_some_and(|d| d.is_ascii_digit() || !d.is_alphabetic())
            && !s.contains('.')
            && cur.peek(1) != Some('.');
        if c.is_ascii_alphanumeric() || c == '_' || exp_sign || hex_exp_sign || point {
            s.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    s
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char, line: u32, col: u32) -> Result<String, LexError> {
    let mut s = String::new();
    s.push(cur.bump().unwrap_or(quote));
    loop {
        match cur.bump() {
            Some('\\') => {
                s.push('\\');
                if let Some(c) = cur.bump() {
                    s.push(c);
                }
            }
            Some(c) if c == quote => {
                s.push(c);
                return Ok(s);
            }
            Some('\n') | None => {
                return Err(LexError {
                    line,
                    col,
                    message: "unterminated literal".into(),
                })
            }
            Some(c) => s.push(c),
        }
    }
}

fn lex_text_block(cur: &mut Cursor<'_>, line: u32, col: u32) -> Result<String, LexError> {
    let mut s = String::from("\"\"\"");
    for _ in 0..3 {
        cur.bump();
    }
    loop {
        if cur.starts_with("\\") {
            s.push(cur.bump().unwrap_or('\\'));
            if let Some(c) = cur.bump() {
                s.push(c);
            }
            continue;
        }
        if cur.starts_with("\"\"\"") {
            for _ in 0..3 {
                cur.bump();
            }
            s.push_str("\"\"\"");
            return Ok(s);
        }
        match cur.bump() {
            Some(c) => s.push(c),
            None => {
                return Err(LexError {
                    line,
                    col,
                    message: "unterminated text block".into(),
                })
            }
        }
    }
}
