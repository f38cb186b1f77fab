//! POWL code: constructor calls on a model generator.
//!
//! ```python
//! gen = ModelGenerator()
//! a1 = gen.activity("Receive order")
//! a2 = gen.activity("Ship")
//! x1 = gen.xor(a2, None, decision="In stock?")
//! po1 = gen.partial_order(dependencies=[(a1, x1)])
//! final_model = po1
//! ```
//!
//! Documents are parsed structurally and never executed. Recognized
//! constructors: `activity`, `silent_transition`, `xor`, `loop`,
//! `partial_order`, `self_loop`, `skip`. Partial orders must be
//! series-parallel.

use std::collections::HashMap;
use std::fmt::Write;

use crate::codecs::Warnings;
use crate::error::{CodecError, Position};
use crate::model::{normalize_opt, ElementType, Loss};
use crate::structure::{Branch, BranchTree};

fn py_str(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Drop what POWL cannot express: conditions, parallel decisions and
/// empty parallel branches.
pub fn restrict(tree: &BranchTree) -> (BranchTree, Vec<Loss>) {
    let mut losses = Vec::new();
    let mut counter = 0usize;
    let t = restrict_inner(tree, &mut losses, &mut counter).unwrap_or(BranchTree::Sequence { children: vec![] });
    let t = match t {
        BranchTree::Sequence { .. } => t,
        other => BranchTree::Sequence { children: vec![other] },
    };
    (t, losses)
}

fn restrict_branch(b: &Branch, losses: &mut Vec<Loss>, counter: &mut usize, block: &str) -> Branch {
    if b.condition.is_some() {
        losses.push(Loss::new(ElementType::Condition, block.to_string(), "conditions not supported"));
    }
    Branch::new(None, b.body.as_ref().and_then(|x| restrict_inner(x, losses, counter)))
}

fn restrict_inner(t: &BranchTree, losses: &mut Vec<Loss>, counter: &mut usize) -> Option<BranchTree> {
    match t {
        BranchTree::Sequence { children } => {
            let kids: Vec<BranchTree> = children.iter().filter_map(|c| restrict_inner(c, losses, counter)).collect();
            Some(BranchTree::Sequence { children: kids })
        }
        BranchTree::Activity { .. } => Some(t.clone()),
        BranchTree::Event { .. } => None,
        BranchTree::Exclusive { decision, branches, looping } => {
            *counter += 1;
            let block = format!("exclusive block {}", *counter);
            let branches = branches.iter().map(|b| restrict_branch(b, losses, counter, &block)).collect();
            Some(BranchTree::Exclusive { decision: decision.clone(), branches, looping: *looping })
        }
        BranchTree::Parallel { decision, branches } => {
            *counter += 1;
            let block = format!("parallel block {}", *counter);
            if decision.is_some() {
                losses.push(Loss::new(ElementType::Decision, block.clone(), "parallel decisions not supported"));
            }
            let mut kept: Vec<Branch> = Vec::new();
            for b in branches {
                let b = restrict_branch(b, losses, counter, &block);
                if b.body.is_some() {
                    kept.push(b);
                } else {
                    losses.push(Loss::new(ElementType::SequenceFlow, block.clone(), "empty parallel branch"));
                }
            }
            if kept.len() >= 2 {
                return Some(BranchTree::Parallel { decision: None, branches: kept });
            }
            losses.push(Loss::new(ElementType::ParallelGateway, format!("{block} split"), "degenerate parallel block"));
            losses.push(Loss::new(ElementType::ParallelGateway, format!("{block} join"), "degenerate parallel block"));
            kept.pop().and_then(|b| b.body.map(|b| *b))
        }
    }
}

struct Emitter {
    out: String,
    counts: HashMap<char, usize>,
}

impl Emitter {
    fn var(&mut self, prefix: char) -> String {
        let n = self.counts.entry(prefix).or_insert(0);
        *n += 1;
        match prefix {
            'p' => format!("po{n}"),
            c => format!("{c}{n}"),
        }
    }

    fn opt(&mut self, b: &Option<Box<BranchTree>>) -> String {
        match b {
            Some(t) => self.emit(t).unwrap_or_else(|| "None".into()),
            None => "None".into(),
        }
    }

    /// Emit statements for `t`, returning the variable holding it.
    fn emit(&mut self, t: &BranchTree) -> Option<String> {
        let (var, rhs) = match t {
            BranchTree::Activity { label } => {
                (self.var('a'), format!("gen.activity({})", py_str(label.as_deref().unwrap_or(""))))
            }
            BranchTree::Event { .. } => return None,
            BranchTree::Sequence { children } => {
                let vars: Vec<String> = children.iter().filter_map(|c| self.emit(c)).collect();
                match vars.len() {
                    0 => return None,
                    1 => return vars.into_iter().next(),
                    _ => {}
                }
                let deps: Vec<String> = vars.windows(2).map(|w| format!("({}, {})", w[0], w[1])).collect();
                (self.var('p'), format!("gen.partial_order(dependencies=[{}])", deps.join(", ")))
            }
            BranchTree::Parallel { branches, .. } => {
                let vars: Vec<String> = branches.iter().map(|b| self.opt(&b.body)).collect();
                let deps: Vec<String> = vars.iter().map(|v| format!("({v},)")).collect();
                (self.var('p'), format!("gen.partial_order(dependencies=[{}])", deps.join(", ")))
            }
            BranchTree::Exclusive { decision, branches, looping: false } => {
                let mut args: Vec<String> = branches.iter().map(|b| self.opt(&b.body)).collect();
                if let Some(d) = decision {
                    args.push(format!("decision={}", py_str(d)));
                }
                (self.var('x'), format!("gen.xor({})", args.join(", ")))
            }
            BranchTree::Exclusive { decision, branches, looping: true } => {
                let body = self.opt(&branches[0].body);
                let redo = match branches.get(1) {
                    Some(b) => self.opt(&b.body),
                    None => "None".into(),
                };
                let mut args = vec![format!("do={body}"), format!("redo={redo}")];
                if let Some(d) = decision {
                    args.push(format!("decision={}", py_str(d)));
                }
                (self.var('l'), format!("gen.loop({})", args.join(", ")))
            }
        };
        let _ = writeln!(self.out, "{var} = {rhs}");
        Some(var)
    }
}

/// Encode; the losses are those of [`restrict`].
pub(crate) fn write(tree: &BranchTree) -> (String, Vec<Loss>) {
    let (t, losses) = restrict(tree);
    let mut e = Emitter { out: String::from("gen = ModelGenerator()\n"), counts: HashMap::new() };
    let root = e.emit(&t).unwrap_or_else(|| "None".into());
    let _ = writeln!(e.out, "final_model = {root}");
    (e.out, losses)
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Str(String),
    Num(String),
    Op(char),
    Newline,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, CodecError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            '\n' => {
                it.next();
                if depth == 0 && !matches!(out.last(), Some((Tok::Newline, _)) | None) {
                    out.push((Tok::Newline, i));
                }
            }
            '\\' => {
                // Line continuation.
                it.next();
                if matches!(it.peek(), Some((_, '\n'))) {
                    it.next();
                }
            }
            c if c.is_whitespace() => {
                it.next();
            }
            '#' => {
                while let Some(&(_, c)) = it.peek() {
                    if c == '\n' {
                        break;
                    }
                    it.next();
                }
            }
            '"' | '\'' => {
                let quote = c;
                let triple = text[i..].starts_with(&format!("{q}{q}{q}", q = quote));
                let skip = if triple { 3 } else { 1 };
                for _ in 0..skip {
                    it.next();
                }
                let mut s = String::new();
                loop {
                    let Some((j, ch)) = it.next() else {
                        return Err(CodecError::syntax(text, i, "unterminated string", "closing quote"));
                    };
                    if ch == quote && (!triple || text[j..].starts_with(&format!("{q}{q}{q}", q = quote))) {
                        if triple {
                            it.next();
                            it.next();
                        }
                        break;
                    }
                    if ch == '\n' && !triple {
                        return Err(CodecError::syntax(text, i, "unterminated string", "closing quote"));
                    }
                    if ch == '\\' {
                        match it.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, '\n')) => {}
                            Some((_, o)) => s.push(o),
                            None => return Err(CodecError::syntax(text, i, "unterminated string", "closing quote")),
                        }
                        continue;
                    }
                    s.push(ch);
                }
                // Implicit concatenation of adjacent literals.
                if let Some((Tok::Str(prev), _)) = out.last_mut() {
                    prev.push_str(&s);
                } else {
                    out.push((Tok::Str(s), i));
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&(_, c)) = it.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        s.push(c);
                        it.next();
                    } else {
                        break;
                    }
                }
                // String prefixes such as r"..." or f"...".
                if matches!(s.as_str(), "r" | "f" | "u" | "b" | "rf" | "fr")
                    && matches!(it.peek(), Some((_, '"' | '\'')))
                {
                    continue;
                }
                out.push((Tok::Name(s), i));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&(_, c)) = it.peek() {
                    if c.is_ascii_alphanumeric() || c == '.' || c == '_' {
                        s.push(c);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Num(s), i));
            }
            '(' | '[' | '{' => {
                depth += 1;
                out.push((Tok::Op(c), i));
                it.next();
            }
            ')' | ']' | '}' => {
                depth = depth.saturating_sub(1);
                out.push((Tok::Op(c), i));
                it.next();
            }
            _ => {
                out.push((Tok::Op(c), i));
                it.next();
            }
        }
    }
    out.push((Tok::Newline, text.len()));
    Ok(out)
}

#[derive(Debug, Clone)]
enum Frag {
    Activity(Option<String>),
    Silent,
    Xor { children: Vec<Val>, decision: Option<String> },
    Loop { body: Val, redo: Val, decision: Option<String> },
    PartialOrder { nodes: Vec<usize>, edges: Vec<(usize, usize)> },
}

#[derive(Debug, Clone)]
enum Val {
    Node(usize),
    None,
    Str(String),
    Other,
    Generator,
    Seq(Vec<Val>),
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: HashMap<String, Val>,
    arena: Vec<Frag>,
}

const CONSTRUCTORS: [&str; 7] = ["activity", "silent_transition", "xor", "loop", "partial_order", "self_loop", "skip"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn err(&self, msg: &str, expected: &str) -> CodecError {
        CodecError::syntax(self.text, self.offset(), msg, expected)
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), CodecError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err("unexpected token", &format!("`{c}`")))
        }
    }

    fn skip_line(&mut self) {
        while *self.peek() != Tok::Newline {
            self.pos += 1;
        }
        self.pos += 1;
    }

    fn node(&mut self, f: Frag) -> Val {
        self.arena.push(f);
        Val::Node(self.arena.len() - 1)
    }

    fn statements(&mut self, w: &mut Warnings) -> Result<Option<Val>, CodecError> {
        let mut last = None;
        while self.pos < self.toks.len() {
            if *self.peek() == Tok::Newline {
                self.pos += 1;
                continue;
            }
            let line_start = self.pos;
            if let Tok::Name(n) = self.peek().clone() {
                if n == "import" || n == "from" {
                    self.skip_line();
                    continue;
                }
                if matches!(self.toks.get(self.pos + 1), Some((Tok::Op('='), _)))
                    && !matches!(self.toks.get(self.pos + 2), Some((Tok::Op('='), _)))
                {
                    self.pos += 2;
                    let v = self.expr()?;
                    if *self.peek() != Tok::Newline {
                        return Err(self.err("unexpected token after expression", "end of line"));
                    }
                    if matches!(v, Val::Node(_)) {
                        last = Some(v.clone());
                    }
                    self.vars.insert(n, v);
                    continue;
                }
            }
            let pos = Position::of_offset(self.text, self.toks[line_start].1);
            w.warn(format!("statement at {pos} ignored"))?;
            self.skip_line();
        }
        Ok(self.vars.get("final_model").cloned().or(last))
    }

    fn expr(&mut self) -> Result<Val, CodecError> {
        let (tok, off) = self.toks[self.pos].clone();
        match tok {
            Tok::Str(s) => {
                self.pos += 1;
                Ok(Val::Str(s))
            }
            Tok::Num(_) => {
                self.pos += 1;
                Ok(Val::Other)
            }
            Tok::Op('[') => {
                self.pos += 1;
                Ok(Val::Seq(self.items(']')?))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let items = self.items_with_trailing(')')?;
                match items {
                    (mut v, false) if v.len() == 1 => Ok(v.pop().unwrap()),
                    (v, _) => Ok(Val::Seq(v)),
                }
            }
            Tok::Name(first) => {
                self.pos += 1;
                let mut path = vec![first];
                while self.eat('.') {
                    match self.peek().clone() {
                        Tok::Name(n) => {
                            self.pos += 1;
                            path.push(n);
                        }
                        _ => return Err(self.err("unexpected token", "an attribute name")),
                    }
                }
                if self.eat('(') {
                    return self.call(path, off);
                }
                if path.len() > 1 {
                    return Ok(Val::Other);
                }
                let name = &path[0];
                match name.as_str() {
                    "None" => Ok(Val::None),
                    "True" | "False" => Ok(Val::Other),
                    _ => self.vars.get(name).cloned().ok_or_else(|| CodecError::Resolution {
                        reference: name.clone(),
                        context: format!("expression at {}", Position::of_offset(self.text, off)),
                    }),
                }
            }
            _ => Err(self.err("unexpected token", "an expression")),
        }
    }

    fn items(&mut self, close: char) -> Result<Vec<Val>, CodecError> {
        Ok(self.items_with_trailing(close)?.0)
    }

    /// Comma-separated expressions; the flag tells whether a comma was seen.
    fn items_with_trailing(&mut self, close: char) -> Result<(Vec<Val>, bool), CodecError> {
        let mut out = Vec::new();
        let mut comma = false;
        loop {
            if self.eat(close) {
                return Ok((out, comma));
            }
            out.push(self.expr()?);
            if self.eat(',') {
                comma = true;
            } else {
                self.expect(close)?;
                return Ok((out, comma));
            }
        }
    }

    fn call(&mut self, path: Vec<String>, off: usize) -> Result<Val, CodecError> {
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Val)> = Vec::new();
        loop {
            if self.eat(')') {
                break;
            }
            if let (Tok::Name(k), Some((Tok::Op('='), _))) = (self.peek().clone(), self.toks.get(self.pos + 1)) {
                self.pos += 2;
                kwargs.push((k, self.expr()?));
            } else {
                args.push(self.expr()?);
            }
            if !self.eat(',') {
                self.expect(')')?;
                break;
            }
        }
        let name = path.last().unwrap().as_str();
        let kw = |k: &str| kwargs.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone());
        let label = |v: Option<Val>| match v {
            Some(Val::Str(s)) => normalize_opt(Some(&s)),
            _ => None,
        };
        let decision = label(kw("decision"));
        let v = match name {
            "ModelGenerator" => Val::Generator,
            "activity" => {
                let l = label(args.first().cloned().or_else(|| kw("label")));
                self.node(Frag::Activity(l))
            }
            "silent_transition" => self.node(Frag::Silent),
            "xor" => {
                let mut children = args;
                if let Some(Val::Seq(more)) = kw("children") {
                    children.extend(more);
                }
                self.check_children(&children, off)?;
                self.node(Frag::Xor { children, decision })
            }
            "loop" => {
                let body = kw("do").or_else(|| kw("do_")).or_else(|| args.first().cloned()).unwrap_or(Val::None);
                let redo = kw("redo").or_else(|| args.get(1).cloned()).unwrap_or(Val::None);
                self.check_children(&[body.clone(), redo.clone()], off)?;
                self.node(Frag::Loop { body, redo, decision })
            }
            "self_loop" => {
                let body = args.first().cloned().unwrap_or(Val::None);
                self.check_children(std::slice::from_ref(&body), off)?;
                self.node(Frag::Loop { body, redo: Val::None, decision })
            }
            "skip" => {
                let body = args.first().cloned().unwrap_or(Val::None);
                self.check_children(std::slice::from_ref(&body), off)?;
                self.node(Frag::Xor { children: vec![body, Val::None], decision })
            }
            "partial_order" => {
                let deps = kw("dependencies").or_else(|| args.first().cloned()).unwrap_or(Val::Seq(vec![]));
                let mut nodes: Vec<usize> = Vec::new();
                let mut edges = Vec::new();
                let add = |n: usize, nodes: &mut Vec<usize>| {
                    if !nodes.contains(&n) {
                        nodes.push(n);
                    }
                };
                if let Some(Val::Seq(extra)) = kw("nodes") {
                    for v in extra {
                        if let Val::Node(n) = v {
                            add(n, &mut nodes);
                        }
                    }
                }
                let Val::Seq(deps) = deps else {
                    return Err(self.bad_arg(off, "dependencies must be a list"));
                };
                for d in deps {
                    let members = match d {
                        Val::Seq(m) => m,
                        single => vec![single],
                    };
                    let ids: Vec<usize> = members
                        .iter()
                        .filter_map(|m| match m {
                            Val::Node(n) => Some(Ok(*n)),
                            Val::None => None,
                            _ => Some(Err(())),
                        })
                        .collect::<Result<_, _>>()
                        .map_err(|_| self.bad_arg(off, "dependencies must hold model nodes"))?;
                    for &n in &ids {
                        add(n, &mut nodes);
                    }
                    for w in ids.windows(2) {
                        edges.push((w[0], w[1]));
                    }
                }
                self.node(Frag::PartialOrder { nodes, edges })
            }
            other => {
                if path.len() == 1 && matches!(other, "print" | "str" | "len" | "list" | "tuple" | "dict") {
                    return Ok(Val::Other);
                }
                return Err(CodecError::UnknownConstructor {
                    name: path.join("."),
                    position: Position::of_offset(self.text, off),
                });
            }
        };
        debug_assert!(name == "ModelGenerator" || CONSTRUCTORS.contains(&name));
        Ok(v)
    }

    fn bad_arg(&self, off: usize, msg: &str) -> CodecError {
        CodecError::syntax(self.text, off, msg, "POWL constructor arguments")
    }

    fn check_children(&self, vals: &[Val], off: usize) -> Result<(), CodecError> {
        for v in vals {
            if !matches!(v, Val::Node(_) | Val::None) {
                return Err(self.bad_arg(off, "operator arguments must be model nodes or None"));
            }
        }
        Ok(())
    }
}

struct Builder<'a> {
    arena: &'a [Frag],
    text: &'a str,
    depth: usize,
}

impl<'a> Builder<'a> {
    fn not_sp(&self, msg: &str) -> CodecError {
        CodecError::syntax(self.text, 0, msg, "a series-parallel partial order")
    }

    fn val(&mut self, v: &Val) -> Result<Option<BranchTree>, CodecError> {
        match v {
            Val::Node(n) => self.frag(*n),
            _ => Ok(None),
        }
    }

    fn frag(&mut self, n: usize) -> Result<Option<BranchTree>, CodecError> {
        self.depth += 1;
        if self.depth > 10_000 {
            return Err(self.not_sp("model nesting too deep"));
        }
        let out = match &self.arena[n] {
            Frag::Activity(l) => Some(BranchTree::Activity { label: l.clone() }),
            Frag::Silent => None,
            Frag::Xor { children, decision } => {
                let mut branches = Vec::new();
                for c in children {
                    branches.push(Branch::new(None, self.val(c)?));
                }
                match branches.len() {
                    0 => None,
                    1 => branches.pop().and_then(|b| b.body.map(|b| *b)),
                    _ => Some(BranchTree::Exclusive { decision: decision.clone(), branches, looping: false }),
                }
            }
            Frag::Loop { body, redo, decision } => {
                let body = self.val(body)?;
                let redo = self.val(redo)?;
                let mut branches = vec![Branch::new(None, body)];
                if redo.is_some() {
                    branches.push(Branch::new(None, redo));
                }
                Some(BranchTree::Exclusive { decision: decision.clone(), branches, looping: true })
            }
            Frag::PartialOrder { nodes, edges } => self.partial_order(nodes, edges)?,
        };
        self.depth -= 1;
        Ok(out)
    }

    fn partial_order(&mut self, nodes: &[usize], edges: &[(usize, usize)]) -> Result<Option<BranchTree>, CodecError> {
        let k = nodes.len();
        let idx: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut reach = vec![vec![false; k]; k];
        for (a, b) in edges {
            reach[idx[a]][idx[b]] = true;
        }
        for m in 0..k {
            let via = reach[m].clone();
            for row in reach.iter_mut().filter(|r| r[m]) {
                for (cell, &v) in row.iter_mut().zip(&via) {
                    *cell |= v;
                }
            }
        }
        if (0..k).any(|i| reach[i][i]) {
            return Err(self.not_sp("cyclic partial order"));
        }
        let all: Vec<usize> = (0..k).collect();
        self.sp(nodes, &reach, &all)
    }

    /// Series-parallel decomposition of the order restricted to `set`.
    fn sp(&mut self, nodes: &[usize], reach: &[Vec<bool>], set: &[usize]) -> Result<Option<BranchTree>, CodecError> {
        if set.len() == 1 {
            return self.frag(nodes[set[0]]);
        }
        let comparable = |a: usize, b: usize| reach[a][b] || reach[b][a];
        let parts = components(set, comparable);
        if parts.len() > 1 {
            let mut branches = Vec::new();
            for p in &parts {
                if let Some(t) = self.sp(nodes, reach, p)? {
                    branches.push(Branch::new(None, Some(t)));
                }
            }
            return Ok(match branches.len() {
                0 => None,
                1 => branches.pop().and_then(|b| b.body.map(|b| *b)),
                _ => Some(BranchTree::Parallel { decision: None, branches }),
            });
        }
        let mut parts = components(set, |a, b| !comparable(a, b));
        if parts.len() == 1 {
            return Err(self.not_sp("partial order is not series-parallel"));
        }
        parts.sort_by(|x, y| if reach[x[0]][y[0]] { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
        let mut steps = Vec::new();
        for p in &parts {
            if let Some(t) = self.sp(nodes, reach, p)? {
                steps.extend(t.steps().into_iter().cloned());
            }
        }
        Ok(BranchTree::from_steps(steps))
    }
}

/// Connected components of `set` under the symmetric relation `linked`,
/// each in ascending order.
fn components(set: &[usize], linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; set.len()];
    let mut out = Vec::new();
    for s in 0..set.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![set[s]];
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..set.len() {
                if !seen[j] && linked(set[i], set[j]) {
                    seen[j] = true;
                    comp.push(set[j]);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub(crate) fn read(text: &str, w: &mut Warnings) -> Result<BranchTree, CodecError> {
    let toks = tokenize(text)?;
    let mut p = Parser { text, toks, pos: 0, vars: HashMap::new(), arena: Vec::new() };
    let root = p.statements(w)?.ok_or(CodecError::Empty)?;
    let mut b = Builder { arena: &p.arena, text, depth: 0 };
    let children = b.val(&root)?.map(|t| t.steps().into_iter().cloned().collect()).unwrap_or_default();
    Ok(BranchTree::Sequence { children })
}
