//! Best-effort recursive descent from tokens to a category tree.
//!
//! Statement boundaries are `;` and braces. Recognized constructs get their
//! own labels; everything else degrades to `expr` runs of `name`, `literal`
//! and `operator` leaves. Every non-structural token ends up carried by
//! exactly one node, in source order.

use super::lexer::{Token, TokenClass};
use super::{Category, CategoryTree, Node};

/// Maximum node depth below the `unit` root. Containers that would sit
/// deeper are not created; their content is attached flat to the current
/// node instead.
pub const MAX_DEPTH: usize = 64;

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "const", "constexpr",
    "volatile", "virtual", "inline", "synchronized", "transient", "native", "extern", "override",
    "explicit", "mutable", "register", "friend", "strictfp", "default", "noexcept",
];

const OPERATOR_KEYWORDS: &[&str] = &["new", "delete", "instanceof", "sizeof"];

const PRIMITIVE_TYPES: &[&str] = &[
    "int", "void", "char", "bool", "boolean", "double", "float", "long", "short", "byte",
    "unsigned", "signed", "auto", "var",
];

fn construct_label(tok: &Token) -> Option<Category> {
    if tok.class != TokenClass::Keyword {
        return None;
    }
    Some(match tok.text.as_str() {
        "if" => Category::If,
        "else" => Category::Else,
        "for" => Category::For,
        "while" => Category::While,
        "do" => Category::Do,
        "switch" => Category::Switch,
        "case" => Category::Case,
        "return" => Category::Return,
        _ => return None,
    })
}

fn is_modifier(tok: &Token) -> bool {
    tok.class == TokenClass::Keyword && MODIFIERS.contains(&tok.text.as_str())
}

fn is_primitive(tok: &Token) -> bool {
    tok.class == TokenClass::Keyword && PRIMITIVE_TYPES.contains(&tok.text.as_str())
}

fn is_ident(tok: &Token) -> bool {
    tok.class == TokenClass::Identifier
}

fn leaf(tok: &Token) -> Node {
    let label = match tok.class {
        TokenClass::Identifier => Category::Name,
        TokenClass::Literal => Category::Literal,
        TokenClass::Operator | TokenClass::Punct => Category::Operator,
        TokenClass::Keyword => {
            let t = tok.text.as_str();
            if MODIFIERS.contains(&t) {
                Category::Modifier
            } else if OPERATOR_KEYWORDS.contains(&t) {
                Category::Operator
            } else {
                Category::Name
            }
        }
    };
    Node::with_token(label, &tok.text)
}

/// Whether a container may be created as a child of a node at `depth`.
fn can_nest(depth: usize) -> bool {
    depth + 1 < MAX_DEPTH
}

/// Shape of a `[modifiers] type name` prefix.
struct DeclShape {
    type_start: usize,
    name: usize,
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn at(&self, i: usize) -> Option<&'t Token> {
        self.toks.get(i)
    }

    fn is_at(&self, i: usize, text: &str) -> bool {
        self.at(i).is_some_and(|t| t.is(text))
    }

    // ---- range helpers (no cursor movement) ----

    /// Attaches `lo..hi` without creating containers. Keyword constructs
    /// still get their label, as childless nodes.
    fn flat(&self, parent: &mut Node, lo: usize, hi: usize) {
        for tok in &self.toks[lo..hi] {
            if tok.is_structural() {
                continue;
            }
            let node = match construct_label(tok) {
                Some(label) => Node::with_token(label, &tok.text),
                None => leaf(tok),
            };
            parent.children.push(node);
        }
    }

    /// Finds the `)` matching the `(` at `open`. Returns the end of the
    /// enclosed content and the index to resume at; an unclosed group ends
    /// at a brace, at `;` (unless allowed), or at `hi`.
    fn match_paren(&self, open: usize, hi: usize, allow_semicolon: bool) -> (usize, usize) {
        let mut depth = 0usize;
        for j in open + 1..hi {
            let t = &self.toks[j];
            match t.text.as_str() {
                "(" if t.class == TokenClass::Punct => depth += 1,
                ")" if t.class == TokenClass::Punct => {
                    if depth == 0 {
                        return (j, j + 1);
                    }
                    depth -= 1;
                }
                "{" | "}" if t.class == TokenClass::Punct => return (j, j),
                ";" if t.class == TokenClass::Punct && !allow_semicolon => return (j, j),
                _ => {}
            }
        }
        (hi, hi)
    }

    /// Splits `lo..hi` at top-level occurrences of `sep`. With `angles`,
    /// separators inside `<...>` are not top-level.
    fn split_top(&self, lo: usize, hi: usize, sep: &str, angles: bool) -> Vec<(usize, usize)> {
        let mut parts = Vec::new();
        let mut parens = 0usize;
        let mut angle = 0usize;
        let mut start = lo;
        for j in lo..hi {
            let t = &self.toks[j];
            match t.text.as_str() {
                "(" | "[" => parens += 1,
                ")" | "]" => parens = parens.saturating_sub(1),
                "<" if angles => angle += 1,
                ">" if angles => angle = angle.saturating_sub(1),
                ">>" if angles => angle = angle.saturating_sub(2),
                ">>>" if angles => angle = angle.saturating_sub(3),
                s if s == sep && t.class == TokenClass::Punct && parens == 0 && angle == 0 => {
                    parts.push((start, j));
                    start = j + 1;
                }
                _ => {}
            }
        }
        parts.push((start, hi));
        parts
    }

    /// End of a generic argument list opening at `open`, if it looks like one.
    fn generic_end(&self, open: usize, hi: usize) -> Option<usize> {
        let mut depth = 0usize;
        for j in open..hi {
            let t = &self.toks[j];
            match t.text.as_str() {
                "<" => depth += 1,
                ">" | ">>" | ">>>" => {
                    depth = depth.saturating_sub(t.text.len());
                    if depth == 0 {
                        return Some(j + 1);
                    }
                }
                "," | "." | "::" | "?" | "[" | "]" | "&" | "*" | "extends" | "super" => {}
                _ if is_ident(t) || is_primitive(t) => {}
                _ => return None,
            }
        }
        None
    }

    fn decl_shape(&self, lo: usize, hi: usize) -> Option<DeclShape> {
        let mut i = lo;
        loop {
            match self.at(i) {
                Some(t) if i < hi && is_modifier(t) => i += 1,
                Some(t) if i + 1 < hi && t.is("@") && self.at(i + 1).is_some_and(is_ident) => {
                    i += 2;
                    if self.is_at(i, "(") {
                        i = self.match_paren(i, hi, false).1;
                    }
                }
                _ => break,
            }
        }
        let type_start = i;
        let first = self.at(i).filter(|_| i < hi)?;
        if is_primitive(first) {
            while i < hi && self.at(i).is_some_and(is_primitive) {
                i += 1;
            }
        } else if is_ident(first) {
            i += 1;
            while i + 1 < hi
                && (self.is_at(i, ".") || self.is_at(i, "::"))
                && self.at(i + 1).is_some_and(is_ident)
            {
                i += 2;
            }
            if i < hi && self.is_at(i, "<") {
                i = self.generic_end(i, hi)?;
            }
        } else {
            return None;
        }
        while i < hi {
            match self.toks[i].text.as_str() {
                "[" if self.is_at(i + 1, "]") => i += 2,
                "*" | "&" | "&&" | "..." => i += 1,
                _ => break,
            }
        }
        if i < hi && is_ident(&self.toks[i]) {
            Some(DeclShape { type_start, name: i })
        } else {
            None
        }
    }

    /// `expr` container over `lo..hi`; nothing for an empty range.
    fn expr_node(&self, parent: &mut Node, lo: usize, hi: usize, depth: usize) {
        if lo >= hi || self.toks[lo..hi].iter().all(Token::is_structural) {
            return;
        }
        if !can_nest(depth) {
            self.flat(parent, lo, hi);
            return;
        }
        let mut expr = Node::new(Category::Expr);
        self.expr_items(&mut expr, lo, hi, depth + 1);
        parent.children.push(expr);
    }

    fn expr_items(&self, parent: &mut Node, lo: usize, hi: usize, depth: usize) {
        let mut i = lo;
        while i < hi {
            let t = &self.toks[i];
            if t.class == TokenClass::Punct && t.is("(") {
                let (end, resume) = self.match_paren(i, hi, true);
                self.expr_node(parent, i + 1, end, depth);
                i = resume.max(i + 1);
            } else if t.is_structural() {
                i += 1;
            } else if let Some(open) = self.call_open(i, hi) {
                i = self.call(parent, i, open, hi, depth);
            } else {
                parent.children.push(leaf(t));
                i += 1;
            }
        }
    }

    /// Index of the `(` when a call starts at `i`: `name (` or `name <...> (`.
    fn call_open(&self, i: usize, hi: usize) -> Option<usize> {
        if !is_ident(&self.toks[i]) || i + 1 >= hi {
            return None;
        }
        if self.is_at(i + 1, "(") {
            return Some(i + 1);
        }
        if self.is_at(i + 1, "<") {
            let g = self.generic_end(i + 1, hi)?;
            if g < hi && self.is_at(g, "(") {
                return Some(g);
            }
        }
        None
    }

    /// `name [<...>] ( args )` with the callee at `i` and `(` at `open`;
    /// returns the index after the call.
    fn call(&self, parent: &mut Node, i: usize, open: usize, hi: usize, depth: usize) -> usize {
        let (end, resume) = self.match_paren(open, hi, true);
        if !can_nest(depth) {
            self.flat(parent, i, resume);
            return resume;
        }
        let mut call = Node::new(Category::Call);
        call.children.push(leaf(&self.toks[i]));
        self.flat(&mut call, i + 1, open);
        if can_nest(depth + 1) {
            let mut args = Node::new(Category::ArgumentList);
            for (a, b) in self.split_top(open + 1, end, ",", false) {
                if a >= b {
                    continue;
                }
                if can_nest(depth + 2) {
                    let mut arg = Node::new(Category::Argument);
                    self.expr_node(&mut arg, a, b, depth + 3);
                    args.children.push(arg);
                } else {
                    self.flat(&mut args, a, b);
                }
            }
            call.children.push(args);
        } else {
            self.flat(&mut call, open + 1, end);
        }
        parent.children.push(call);
        resume
    }

    fn type_node(&self, parent: &mut Node, lo: usize, hi: usize, depth: usize) {
        if lo >= hi {
            return;
        }
        if can_nest(depth) {
            let mut ty = Node::new(Category::Type);
            self.flat(&mut ty, lo, hi);
            parent.children.push(ty);
        } else {
            self.flat(parent, lo, hi);
        }
    }

    /// Declarators after the type: `name [= init] , name ...`.
    fn declarators(&self, decl: &mut Node, lo: usize, hi: usize, depth: usize) {
        for (a, b) in self.split_top(lo, hi, ",", true) {
            if a >= b {
                continue;
            }
            let mut i = a;
            if is_ident(&self.toks[i]) {
                decl.children.push(leaf(&self.toks[i]));
                i += 1;
            }
            if i < b && (self.toks[i].is("=") || self.toks[i].is(":")) {
                decl.children.push(leaf(&self.toks[i]));
                self.expr_node(decl, i + 1, b, depth);
            } else {
                self.expr_items(decl, i, b, depth);
            }
        }
    }

    /// `decl_stmt` if `lo..hi` is a declaration, else `wrap{expr}` (or a bare
    /// `expr` when `wrap` is `None`).
    fn decl_or_expr(&self, parent: &mut Node, lo: usize, hi: usize, depth: usize, wrap: Option<Category>) {
        if lo >= hi || self.toks[lo..hi].iter().all(Token::is_structural) {
            return;
        }
        if !can_nest(depth) {
            self.flat(parent, lo, hi);
            return;
        }
        if let Some(shape) = self.decl_shape(lo, hi) {
            let after = shape.name + 1;
            let declares = after >= hi
                || matches!(self.toks[after].text.as_str(), "=" | ":" | "," | "[");
            if declares {
                let mut decl = Node::new(Category::DeclStmt);
                self.flat(&mut decl, lo, shape.type_start);
                self.type_node(&mut decl, shape.type_start, shape.name, depth + 1);
                self.declarators(&mut decl, shape.name, hi, depth + 1);
                parent.children.push(decl);
                return;
            }
        }
        match wrap {
            Some(label) => {
                let mut node = Node::new(label);
                self.expr_node(&mut node, lo, hi, depth + 1);
                parent.children.push(node);
            }
            None => self.expr_node(parent, lo, hi, depth),
        }
    }

    fn parameters(&self, func: &mut Node, lo: usize, hi: usize, depth: usize) {
        if !can_nest(depth) {
            self.flat(func, lo, hi);
            return;
        }
        let mut params = Node::new(Category::ParameterList);
        for (a, b) in self.split_top(lo, hi, ",", true) {
            if a >= b {
                continue;
            }
            match self.decl_shape(a, b) {
                Some(shape) => {
                    self.flat(&mut params, a, shape.type_start);
                    self.type_node(&mut params, shape.type_start, shape.name, depth + 1);
                    self.declarators(&mut params, shape.name, b, depth + 1);
                }
                None => self.flat(&mut params, a, b),
            }
        }
        func.children.push(params);
    }

    // ---- statements (cursor-driven) ----

    /// End of a simple statement starting at `start`: the first `;` or brace,
    /// or a construct keyword outside parentheses.
    fn statement_end(&self, start: usize) -> usize {
        let mut parens = 0usize;
        for j in start..self.toks.len() {
            let t = &self.toks[j];
            if t.class == TokenClass::Punct {
                match t.text.as_str() {
                    ";" | "{" | "}" => return j,
                    "(" => parens += 1,
                    ")" => parens = parens.saturating_sub(1),
                    _ => {}
                }
            } else if j > start && parens == 0 && construct_label(t).is_some() {
                return j;
            }
        }
        self.toks.len()
    }

    /// Extent of one statement for flat attachment at the depth cap.
    fn flat_extent(&self, start: usize) -> usize {
        let mut braces = 0usize;
        for j in start..self.toks.len() {
            let t = &self.toks[j];
            if t.class != TokenClass::Punct {
                continue;
            }
            match t.text.as_str() {
                "{" => braces += 1,
                "}" if braces == 0 => return j,
                "}" => {
                    braces -= 1;
                    if braces == 0 {
                        return j + 1;
                    }
                }
                ";" if braces == 0 => return j + 1,
                _ => {}
            }
        }
        self.toks.len()
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek().is_some_and(|t| t.is(text) && t.class == TokenClass::Punct) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Parses one statement into `parent` (at `depth`). Returns false, without
    /// consuming, at a closing brace or end of input.
    fn statement(&mut self, parent: &mut Node, depth: usize) -> bool {
        let Some(tok) = self.peek() else {
            return false;
        };
        if tok.class == TokenClass::Punct && tok.is("}") {
            return false;
        }
        if tok.class == TokenClass::Punct && matches!(tok.text.as_str(), ";" | "," | ")") {
            self.pos += 1;
            return true;
        }
        if !can_nest(depth) {
            let end = self.flat_extent(self.pos).max(self.pos + 1);
            self.flat(parent, self.pos, end);
            self.pos = end;
            return true;
        }
        if tok.class == TokenClass::Punct && tok.is("{") {
            self.block(parent, depth);
            return true;
        }
        match construct_label(tok) {
            Some(Category::If) => self.if_stmt(parent, depth),
            Some(Category::Else) => self.keyword_body(parent, depth, Category::Else),
            Some(Category::While) => self.keyword_condition_body(parent, depth, Category::While),
            Some(Category::Switch) => self.keyword_condition_body(parent, depth, Category::Switch),
            Some(Category::For) => self.for_stmt(parent, depth),
            Some(Category::Do) => self.do_stmt(parent, depth),
            Some(Category::Case) => self.case_stmt(parent, depth),
            Some(Category::Return) => self.return_stmt(parent, depth),
            _ if tok.is("default") && self.is_at(self.pos + 1, ":") => self.case_stmt(parent, depth),
            _ => self.simple_statement(parent, depth),
        }
        true
    }

    fn block(&mut self, parent: &mut Node, depth: usize) {
        debug_assert!(self.peek().is_some_and(|t| t.is("{")));
        if !can_nest(depth) {
            let end = self.flat_extent(self.pos);
            self.flat(parent, self.pos, end);
            self.pos = end;
            return;
        }
        self.pos += 1;
        let mut block = Node::new(Category::Block);
        while self.statement(&mut block, depth + 1) {}
        self.eat("}");
        parent.children.push(block);
    }

    fn condition(&mut self, parent: &mut Node, depth: usize) {
        if !self.is_at(self.pos, "(") {
            return;
        }
        let (end, resume) = self.match_paren(self.pos, self.toks.len(), false);
        if can_nest(depth) {
            let mut cond = Node::new(Category::Condition);
            self.expr_node(&mut cond, self.pos + 1, end, depth + 1);
            parent.children.push(cond);
        } else {
            self.flat(parent, self.pos + 1, end);
        }
        self.pos = resume;
    }

    fn keyword_node(&mut self, label: Category) -> Node {
        let node = Node::with_token(label, &self.toks[self.pos].text);
        self.pos += 1;
        node
    }

    fn if_stmt(&mut self, parent: &mut Node, depth: usize) {
        let mut node = self.keyword_node(Category::If);
        self.condition(&mut node, depth + 1);
        self.statement(&mut node, depth + 1);
        if self.peek().is_some_and(|t| construct_label(t) == Some(Category::Else)) {
            self.statement(&mut node, depth + 1);
        }
        parent.children.push(node);
    }

    fn keyword_body(&mut self, parent: &mut Node, depth: usize, label: Category) {
        let mut node = self.keyword_node(label);
        self.statement(&mut node, depth + 1);
        parent.children.push(node);
    }

    fn keyword_condition_body(&mut self, parent: &mut Node, depth: usize, label: Category) {
        let mut node = self.keyword_node(label);
        self.condition(&mut node, depth + 1);
        self.statement(&mut node, depth + 1);
        parent.children.push(node);
    }

    fn for_stmt(&mut self, parent: &mut Node, depth: usize) {
        let mut node = self.keyword_node(Category::For);
        if self.is_at(self.pos, "(") {
            let (end, resume) = self.match_paren(self.pos, self.toks.len(), true);
            let parts = self.split_top(self.pos + 1, end, ";", false);
            let inner = depth + 1;
            for (k, &(a, b)) in parts.iter().enumerate() {
                match k {
                    0 => self.decl_or_expr(&mut node, a, b, inner, None),
                    1 if a < b && can_nest(inner) => {
                        let mut cond = Node::new(Category::Condition);
                        self.expr_node(&mut cond, a, b, inner + 1);
                        node.children.push(cond);
                    }
                    _ => self.expr_node(&mut node, a, b, inner),
                }
            }
            self.pos = resume;
        }
        self.statement(&mut node, depth + 1);
        parent.children.push(node);
    }

    fn do_stmt(&mut self, parent: &mut Node, depth: usize) {
        let mut node = self.keyword_node(Category::Do);
        self.statement(&mut node, depth + 1);
        if self.peek().is_some_and(|t| construct_label(t) == Some(Category::While)) {
            if can_nest(depth + 1) {
                let mut w = self.keyword_node(Category::While);
                self.condition(&mut w, depth + 2);
                node.children.push(w);
            } else {
                let w = self.keyword_node(Category::While);
                node.children.push(w);
            }
        }
        parent.children.push(node);
    }

    fn case_stmt(&mut self, parent: &mut Node, depth: usize) {
        let mut node = self.keyword_node(Category::Case);
        let start = self.pos;
        let stop = self.statement_end(start);
        let mut parens = 0usize;
        let mut colon = None;
        for j in start..stop {
            match self.toks[j].text.as_str() {
                "(" => parens += 1,
                ")" => parens = parens.saturating_sub(1),
                ":" if parens == 0 => {
                    colon = Some(j);
                    break;
                }
                _ => {}
            }
        }
        let end = colon.unwrap_or(stop);
        self.expr_node(&mut node, start, end, depth + 1);
        if let Some(c) = colon {
            node.children.push(leaf(&self.toks[c]));
            self.pos = c + 1;
        } else {
            self.pos = end;
            self.eat(";");
        }
        parent.children.push(node);
    }

    fn return_stmt(&mut self, parent: &mut Node, depth: usize) {
        let mut node = self.keyword_node(Category::Return);
        let end = self.statement_end(self.pos);
        self.expr_node(&mut node, self.pos, end, depth + 1);
        self.pos = end;
        self.eat(";");
        parent.children.push(node);
    }

    /// `name ( ... )` followed by a body: a constructor or method definition
    /// without a declared type.
    fn untyped_function(&self, lo: usize, hi: usize) -> bool {
        if !(self.at(lo).is_some_and(is_ident) && self.is_at(lo + 1, "(") && self.is_at(hi, "{")) {
            return false;
        }
        let (_, resume) = self.match_paren(lo + 1, hi, false);
        self.toks[resume..hi]
            .iter()
            .all(|t| matches!(t.class, TokenClass::Identifier | TokenClass::Keyword))
    }

    fn simple_statement(&mut self, parent: &mut Node, depth: usize) {
        let lo = self.pos;
        let hi = self.statement_end(lo).max(lo + 1);

        let function_at = match self.decl_shape(lo, hi) {
            Some(shape) if self.is_at(shape.name + 1, "(") => Some((shape.type_start, shape.name)),
            Some(_) => None,
            None if self.untyped_function(lo, hi) => Some((lo, lo)),
            None => None,
        };

        if let Some((type_start, name)) = function_at {
            self.function(parent, depth, lo, hi, type_start, name);
            return;
        }

        self.decl_or_expr(parent, lo, hi, depth, Some(Category::ExprStmt));
        self.pos = hi;
        self.eat(";");
    }

    fn function(&mut self, parent: &mut Node, depth: usize, lo: usize, hi: usize, type_start: usize, name: usize) {
        let mut func = Node::new(Category::Function);
        let inner = depth + 1;
        self.flat(&mut func, lo, type_start);
        self.type_node(&mut func, type_start, name, inner);
        func.children.push(leaf(&self.toks[name]));
        let (end, resume) = self.match_paren(name + 1, hi, false);
        self.parameters(&mut func, name + 2, end, inner);
        // Trailing qualifiers: throws clauses, const, initializer lists.
        self.expr_items(&mut func, resume.min(hi), hi, inner);
        self.pos = hi;
        if self.is_at(self.pos, "{") {
            self.block(&mut func, inner);
        } else {
            self.eat(";");
        }
        parent.children.push(func);
    }
}

pub fn build_category_tree(tokens: &[Token]) -> CategoryTree {
    let mut parser = Parser { toks: tokens, pos: 0 };
    let mut root = Node::new(Category::Unit);
    while parser.pos < tokens.len() {
        if !parser.statement(&mut root, 0) {
            // Unmatched closing brace.
            parser.pos += 1;
        }
    }
    CategoryTree { root }
}
