//! Fault-tolerant lexer for C-family fragments (C++ and Java).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenClass {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub class: TokenClass,
}

impl Token {
    pub fn new(text: impl Into<String>, class: TokenClass) -> Self {
        Token {
            text: text.into(),
            class,
        }
    }

    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    /// Braces, parentheses, semicolons and commas: they shape the tree but
    /// never become nodes of it.
    pub fn is_structural(&self) -> bool {
        self.class == TokenClass::Punct
            && matches!(self.text.as_str(), "{" | "}" | "(" | ")" | ";" | ",")
    }
}

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "auto", "bool", "boolean", "break", "byte", "case", "catch", "char",
    "class", "const", "constexpr", "continue", "default", "delete", "do", "double", "else",
    "enum", "explicit", "export", "extends", "extern", "final", "finally", "float", "for",
    "friend", "goto", "if", "implements", "import", "inline", "instanceof", "int", "interface",
    "long", "mutable", "namespace", "native", "new", "noexcept", "operator", "override",
    "package", "private", "protected", "public", "register", "return", "short", "signed",
    "sizeof", "static", "strictfp", "struct", "super", "switch", "synchronized", "template",
    "this", "throw", "throws", "transient", "try", "typedef", "typename", "union", "unsigned",
    "using", "var", "virtual", "void", "volatile", "while",
];

const LITERAL_WORDS: &[&str] = &["true", "false", "null", "nullptr", "NULL"];

// Longest match first.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->*", "<=>", "::", "->", "++", "--", "&&", "||", "==",
    "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", ".*", "+", "-",
    "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?", ":", ".",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat_while(&mut self, f: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.bump();
        }
    }

    /// Consumes a quoted literal; unterminated literals run to end of line.
    fn eat_quoted(&mut self, quote: char) {
        self.bump();
        while let Some(c) = self.peek() {
            match c {
                '\\' => {
                    self.bump();
                    if self.peek() == Some('\n') {
                        continue;
                    }
                    self.bump();
                }
                '\n' => return,
                c if c == quote => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn eat_number(&mut self) {
        let hex = self.rest().starts_with("0x") || self.rest().starts_with("0X");
        let mut prev = '\0';
        while let Some(c) = self.peek() {
            let sign = c == '+' || c == '-';
            let exponent_sign =
                sign && ((!hex && matches!(prev, 'e' | 'E')) || matches!(prev, 'p' | 'P'));
            let digit_separator = c == '\'' && prev.is_ascii_hexdigit();
            if c.is_alphanumeric() || c == '_' || c == '.' || digit_separator || exponent_sign {
                prev = c;
                self.bump();
            } else {
                break;
            }
        }
    }
}

pub fn tokenize(fragment: &str) -> Vec<Token> {
    let mut cur = Cursor { src: fragment, pos: 0 };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let start = cur.pos;
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let class = if cur.rest().starts_with("//") {
            cur.eat_while(|c| c != '\n');
            TokenClass::Literal
        } else if cur.rest().starts_with("/*") {
            match cur.rest()[2..].find("*/") {
                Some(end) => cur.pos += 2 + end + 2,
                None => cur.pos = fragment.len(),
            }
            TokenClass::Literal
        } else if c == '"' && cur.rest().starts_with("\"\"\"") {
            // Java text block.
            match cur.rest()[3..].find("\"\"\"") {
                Some(end) => cur.pos += 3 + end + 3,
                None => cur.pos = fragment.len(),
            }
            TokenClass::Literal
        } else if c == '"' || c == '\'' {
            cur.eat_quoted(c);
            TokenClass::Literal
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_nth(1).is_some_and(|d| d.is_ascii_digit())) {
            cur.eat_number();
            TokenClass::Literal
        } else if is_ident_start(c) {
            cur.eat_while(is_ident_continue);
            let word = &fragment[start..cur.pos];
            if LITERAL_WORDS.contains(&word) {
                TokenClass::Literal
            } else if is_keyword(word) {
                TokenClass::Keyword
            } else {
                TokenClass::Identifier
            }
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) {
            cur.pos += op.len();
            TokenClass::Operator
        } else {
            // Brackets, separators and any character the grammar does not know.
            cur.bump();
            TokenClass::Punct
        };
        out.push(Token::new(&fragment[start..cur.pos], class));
    }
    out
}
