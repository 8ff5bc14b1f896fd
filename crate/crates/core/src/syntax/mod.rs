//! Syntactic-category trees for code fragments.
//!
//! Fragments taken from commit patches are rarely complete programs, so the
//! tagger here never fails: it labels what it recognizes and folds the rest
//! into `expr` nodes. Only the label hierarchy is consumed downstream.

mod lexer;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lexer::{is_keyword, tokenize, Token, TokenClass};
pub use tree::{build_category_tree, MAX_DEPTH};

pub const CATEGORY_VOCABULARY_VERSION: u32 = 1;

/// The fixed label set, in vocabulary order.
pub const CATEGORY_VOCABULARY: [&str; 24] = [
    "unit",
    "expr_stmt",
    "decl_stmt",
    "if",
    "else",
    "condition",
    "block",
    "for",
    "while",
    "do",
    "switch",
    "case",
    "return",
    "call",
    "argument_list",
    "argument",
    "parameter_list",
    "function",
    "type",
    "expr",
    "operator",
    "name",
    "literal",
    "modifier",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Unit,
    ExprStmt,
    DeclStmt,
    If,
    Else,
    Condition,
    Block,
    For,
    While,
    Do,
    Switch,
    Case,
    Return,
    Call,
    ArgumentList,
    Argument,
    ParameterList,
    Function,
    Type,
    Expr,
    Operator,
    Name,
    Literal,
    Modifier,
}

impl Category {
    pub const ALL: [Category; 24] = [
        Category::Unit,
        Category::ExprStmt,
        Category::DeclStmt,
        Category::If,
        Category::Else,
        Category::Condition,
        Category::Block,
        Category::For,
        Category::While,
        Category::Do,
        Category::Switch,
        Category::Case,
        Category::Return,
        Category::Call,
        Category::ArgumentList,
        Category::Argument,
        Category::ParameterList,
        Category::Function,
        Category::Type,
        Category::Expr,
        Category::Operator,
        Category::Name,
        Category::Literal,
        Category::Modifier,
    ];

    pub fn as_str(self) -> &'static str {
        CATEGORY_VOCABULARY[self as usize]
    }

    /// Labels that always stand for exactly one source token and never have
    /// children.
    pub fn is_token_leaf(self) -> bool {
        matches!(
            self,
            Category::Name | Category::Literal | Category::Operator | Category::Modifier
        )
    }

    /// Labels introduced by a keyword of the fragment (`if`, `case`, ...).
    pub fn is_keyword_construct(self) -> bool {
        matches!(
            self,
            Category::If
                | Category::Else
                | Category::For
                | Category::While
                | Category::Do
                | Category::Switch
                | Category::Case
                | Category::Return
        )
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown syntactic category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CATEGORY_VOCABULARY
            .iter()
            .position(|l| *l == s)
            .map(|i| Category::ALL[i])
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub label: Category,
    /// The source token this node stands for, if any. Synthetic containers
    /// (`block`, `call`, `expr`, ...) carry none.
    pub text: Option<String>,
    pub children: Vec<Node>,
}

impl Node {
    pub fn new(label: Category) -> Self {
        Node {
            label,
            text: None,
            children: Vec::new(),
        }
    }

    pub fn with_token(label: Category, text: &str) -> Self {
        Node {
            label,
            text: Some(text.to_string()),
            children: Vec::new(),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node, usize)) {
        fn go<'a>(n: &'a Node, depth: usize, f: &mut impl FnMut(&'a Node, usize)) {
            f(n, depth);
            for c in &n.children {
                go(c, depth + 1, f);
            }
        }
        go(self, 0, f);
    }

    /// Label-only rendering, `label{child,child}`; handy for assertions.
    pub fn shape(&self) -> String {
        if self.children.is_empty() {
            return self.label.to_string();
        }
        let inner: Vec<String> = self.children.iter().map(Node::shape).collect();
        format!("{}{{{}}}", self.label, inner.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTree {
    pub root: Node,
}

impl CategoryTree {
    pub fn height(&self) -> usize {
        let mut h = 0;
        self.root.walk(&mut |_, d| h = h.max(d));
        h
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.root.walk(&mut |_, _| n += 1);
        n
    }

    /// Source tokens carried by the tree, in pre-order.
    pub fn token_texts(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.root.walk(&mut |n, _| {
            if let Some(t) = &n.text {
                out.push(t.as_str());
            }
        });
        out
    }

    /// Debug serialization: one label per line, two spaces per level.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.root.walk(&mut |n, d| {
            for _ in 0..d {
                out.push_str("  ");
            }
            out.push_str(n.label.as_str());
            out.push('\n');
        });
        out
    }
}

/// Tokenizes and categorizes one fragment.
pub fn parse_fragment(fragment: &str) -> CategoryTree {
    build_category_tree(&tokenize(fragment))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_round_trips() {
        assert_eq!(CATEGORY_VOCABULARY.len(), 24);
        for (i, c) in Category::ALL.iter().enumerate() {
            assert_eq!(*c as usize, i);
            assert_eq!(c.as_str().parse::<Category>().unwrap(), *c);
        }
        assert!("struct".parse::<Category>().is_err());
    }

    #[test]
    fn serde_uses_vocabulary_labels() {
        for c in Category::ALL {
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.as_str()));
        }
    }

    #[test]
    fn render_is_indented() {
        let t = parse_fragment("a+b;");
        assert_eq!(
            t.render(),
            "unit\n  expr_stmt\n    expr\n      name\n      operator\n      name\n"
        );
    }
}
