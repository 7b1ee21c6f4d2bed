//! Document model and markup parser for the small HTML subset that carries
//! element-query annotations.
//!
//! Nodes live in an arena indexed by [`NodeId`]. Removing a subtree frees its
//! slots, so every live id is reachable from the root exactly once.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::elq::BehaviorProps;

/// Stable identifier of an element inside a [`Document`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomError {
    #[error("malformed markup at {line}:{col}: {reason}")]
    MalformedMarkup { line: usize, col: usize, reason: String },
    #[error("void element <{tag}> given children at {line}:{col}")]
    VoidWithChildren { tag: String, line: usize, col: usize },
    #[error("unknown element {0}")]
    UnknownElement(NodeId),
    #[error("cannot insert into void element {0}")]
    VoidParent(NodeId),
    #[error("empty subtree")]
    EmptySubtree,
    #[error("the root element cannot be removed")]
    RemoveRoot,
}

const VOID_TAGS: &[&str] =
    &["area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr"];

/// Whether a tag can never have content.
pub fn is_void(tag: &str) -> bool {
    VOID_TAGS.contains(&tag)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub id: NodeId,
    pub tag: String,
    /// Every attribute except `class` and `style`, in source order.
    pub attributes: IndexMap<String, String>,
    pub classes: Vec<String>,
    pub inline_style: IndexMap<String, String>,
    /// Opaque text payload; never measured.
    pub text: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub elq: BehaviorProps,
    pub injected: bool,
}

impl Element {
    pub fn has_class(&self, class: &str) -> bool {
        self.classes.iter().any(|c| c == class)
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    /// Looks up an annotation attribute, accepting the `data-` prefixed form.
    /// The unprefixed attribute wins when both are present.
    pub fn elq_attribute(&self, name: &str) -> Option<&str> {
        self.attribute(name).or_else(|| self.attributes.get(&format!("data-{name}")).map(String::as_str))
    }

    pub fn has_elq_attribute(&self, name: &str) -> bool {
        self.elq_attribute(name).is_some()
    }

    pub fn is_void(&self) -> bool {
        is_void(&self.tag)
    }
}

/// A detached element tree used to build new nodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewNode {
    pub tag: String,
    pub attributes: Vec<(String, String)>,
    pub classes: Vec<String>,
    pub inline_style: Vec<(String, String)>,
    pub text: String,
    pub children: Vec<NewNode>,
}

impl NewNode {
    pub fn new(tag: &str) -> Self {
        NewNode { tag: tag.to_ascii_lowercase(), ..Default::default() }
    }

    pub fn class(mut self, class: &str) -> Self {
        if !self.classes.iter().any(|c| c == class) {
            self.classes.push(class.to_string());
        }
        self
    }

    pub fn attr(mut self, name: &str, value: &str) -> Self {
        self.attributes.push((name.to_string(), value.to_string()));
        self
    }

    pub fn style(mut self, property: &str, value: &str) -> Self {
        self.inline_style.push((property.to_string(), value.to_string()));
        self
    }

    pub fn child(mut self, child: NewNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(NewNode::count).sum::<usize>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub width: f64,
    pub height: f64,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport { width: 1000.0, height: 800.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    nodes: Vec<Option<Element>>,
    root: NodeId,
    pub root_font_size: f64,
    pub viewport: Viewport,
}

impl Document {
    /// Creates a document holding a single empty element.
    pub fn new(root_tag: &str) -> Self {
        let mut doc =
            Document { nodes: Vec::new(), root: NodeId(0), root_font_size: 16.0, viewport: Viewport::default() };
        doc.root = doc.alloc(&NewNode::new(root_tag), None, false);
        doc
    }

    /// Parses markup. A single top-level element becomes the root; several
    /// top-level elements are wrapped in a synthetic `body`.
    pub fn parse(text: &str) -> Result<Document, DomError> {
        let mut roots = parse_fragment(text)?;
        let top = match roots.len() {
            0 => return Err(DomError::MalformedMarkup { line: 1, col: 1, reason: "no element".into() }),
            1 => roots.pop().unwrap(),
            _ => NewNode { children: roots, ..NewNode::new("body") },
        };
        let mut doc =
            Document { nodes: Vec::new(), root: NodeId(0), root_font_size: 16.0, viewport: Viewport::default() };
        doc.root = doc.alloc(&top, None, false);
        Ok(doc)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn contains(&self, id: NodeId) -> bool {
        matches!(self.nodes.get(id.0), Some(Some(_)))
    }

    pub fn get(&self, id: NodeId) -> Option<&Element> {
        self.nodes.get(id.0).and_then(Option::as_ref)
    }

    pub fn element(&self, id: NodeId) -> Result<&Element, DomError> {
        self.get(id).ok_or(DomError::UnknownElement(id))
    }

    pub fn element_mut(&mut self, id: NodeId) -> Result<&mut Element, DomError> {
        self.nodes.get_mut(id.0).and_then(Option::as_mut).ok_or(DomError::UnknownElement(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All live elements in document (pre-)order.
    pub fn preorder(&self) -> Vec<NodeId> {
        self.descendants_inclusive(self.root)
    }

    /// First element in document order with the given `id` attribute.
    pub fn by_id(&self, id: &str) -> Option<NodeId> {
        self.preorder().into_iter().find(|n| self.get(*n).and_then(|e| e.attribute("id")) == Some(id))
    }

    pub fn descendants_inclusive(&self, from: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            if let Some(el) = self.get(id) {
                out.push(id);
                stack.extend(el.children.iter().rev().copied());
            }
        }
        out
    }

    /// Ancestors from the parent up to the root.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.get(id).and_then(|e| e.parent), move |p| self.get(*p).and_then(|e| e.parent))
    }

    /// Elements carrying `name` (or its `data-` form), in document order.
    pub fn with_elq_attribute(&self, name: &str) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|id| self.get(*id).is_some_and(|e| e.has_elq_attribute(name))).collect()
    }

    /// Adds and removes class tokens. Returns whether anything changed.
    pub fn set_classes(&mut self, id: NodeId, add: &[String], remove: &[String]) -> Result<bool, DomError> {
        let el = self.element_mut(id)?;
        let before = el.classes.len();
        let mut changed = false;
        el.classes.retain(|c| !remove.contains(c));
        changed |= el.classes.len() != before;
        for class in add {
            if is_class_token(class) && !el.classes.contains(class) {
                el.classes.push(class.clone());
                changed = true;
            }
        }
        Ok(changed)
    }

    pub fn set_inline_style(&mut self, id: NodeId, property: &str, value: Option<&str>) -> Result<bool, DomError> {
        let el = self.element_mut(id)?;
        Ok(match value {
            Some(v) => el.inline_style.insert(property.to_string(), v.to_string()).as_deref() != Some(v),
            None => el.inline_style.shift_remove(property).is_some(),
        })
    }

    pub fn set_attribute(&mut self, id: NodeId, name: &str, value: Option<&str>) -> Result<bool, DomError> {
        let el = self.element_mut(id)?;
        Ok(match value {
            Some(v) => el.attributes.insert(name.to_string(), v.to_string()).as_deref() != Some(v),
            None => el.attributes.shift_remove(name).is_some(),
        })
    }

    /// Appends a forest as the last children of `parent`. Returns the id of
    /// the first inserted root.
    pub fn insert_subtree(&mut self, parent: NodeId, subtree: &[NewNode], injected: bool) -> Result<NodeId, DomError> {
        if self.element(parent)?.is_void() {
            return Err(DomError::VoidParent(parent));
        }
        if subtree.is_empty() {
            return Err(DomError::EmptySubtree);
        }
        let mut first = None;
        for node in subtree {
            let id = self.alloc(node, Some(parent), injected);
            self.element_mut(parent)?.children.push(id);
            first.get_or_insert(id);
        }
        Ok(first.unwrap())
    }

    /// Detaches and frees a subtree. Returns the freed ids in pre-order.
    pub fn remove(&mut self, id: NodeId) -> Result<Vec<NodeId>, DomError> {
        if id == self.root {
            return Err(DomError::RemoveRoot);
        }
        let parent = self.element(id)?.parent;
        if let Some(p) = parent {
            self.element_mut(p)?.children.retain(|c| *c != id);
        }
        let freed = self.descendants_inclusive(id);
        for n in &freed {
            self.nodes[n.0] = None;
        }
        Ok(freed)
    }

    fn alloc(&mut self, node: &NewNode, parent: Option<NodeId>, injected: bool) -> NodeId {
        let id = NodeId(self.nodes.len());
        let mut classes: Vec<String> = Vec::new();
        for c in &node.classes {
            if is_class_token(c) && !classes.contains(c) {
                classes.push(c.clone());
            }
        }
        self.nodes.push(Some(Element {
            id,
            tag: node.tag.to_ascii_lowercase(),
            attributes: node.attributes.iter().cloned().collect(),
            classes,
            inline_style: node.inline_style.iter().cloned().collect(),
            text: node.text.clone(),
            children: Vec::new(),
            parent,
            elq: BehaviorProps::default(),
            injected,
        }));
        let children: Vec<NodeId> = node.children.iter().map(|c| self.alloc(c, Some(id), injected)).collect();
        self.nodes[id.0].as_mut().unwrap().children = children;
        id
    }

    /// Serializes the whole document in the accepted markup subset.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.serialize_into(self.root, &mut out, false);
        out
    }

    /// Serializes, skipping detector-injected subtrees.
    pub fn serialize_authored(&self) -> String {
        let mut out = String::new();
        self.serialize_into(self.root, &mut out, true);
        out
    }

    fn serialize_into(&self, id: NodeId, out: &mut String, skip_injected: bool) {
        let Some(el) = self.get(id) else { return };
        if skip_injected && el.injected {
            return;
        }
        out.push('<');
        out.push_str(&el.tag);
        if !el.classes.is_empty() {
            out.push_str(&format!(" class=\"{}\"", el.classes.join(" ")));
        }
        if !el.inline_style.is_empty() {
            let style: Vec<String> = el.inline_style.iter().map(|(k, v)| format!("{k}: {v}")).collect();
            out.push_str(&format!(" style=\"{}\"", style.join("; ")));
        }
        for (name, value) in &el.attributes {
            if value.is_empty() {
                out.push_str(&format!(" {name}"));
            } else {
                out.push_str(&format!(" {name}=\"{value}\""));
            }
        }
        if el.is_void() {
            out.push('>');
            return;
        }
        out.push('>');
        out.push_str(&el.text);
        for child in &el.children {
            self.serialize_into(*child, out, skip_injected);
        }
        out.push_str(&format!("</{}>", el.tag));
    }

    /// Checks the structural invariants. Used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let reachable = self.preorder();
        if reachable.len() != self.len() {
            return Err(format!("{} live nodes but {} reachable", self.len(), reachable.len()));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &reachable {
            if !seen.insert(*id) {
                return Err(format!("{id} reachable twice"));
            }
            let el = self.get(*id).unwrap();
            if el.id != *id {
                return Err(format!("{id} stores id {}", el.id));
            }
            for c in &el.children {
                if self.get(*c).and_then(|e| e.parent) != Some(*id) {
                    return Err(format!("child {c} of {id} has wrong parent"));
                }
            }
            if let Some(p) = el.parent {
                if !self.get(p).is_some_and(|pe| pe.children.contains(id)) {
                    return Err(format!("{id} missing from parent {p}"));
                }
            } else if *id != self.root {
                return Err(format!("{id} has no parent"));
            }
            if el.is_void() && !el.children.is_empty() {
                return Err(format!("void {id} has children"));
            }
            let mut classes = el.classes.clone();
            classes.sort();
            classes.dedup();
            if classes.len() != el.classes.len() || !el.classes.iter().all(|c| is_class_token(c)) {
                return Err(format!("bad class tokens on {id}"));
            }
        }
        Ok(())
    }
}

fn is_class_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

/// Parses markup into a detached forest.
pub fn parse_fragment(text: &str) -> Result<Vec<NewNode>, DomError> {
    MarkupParser::new(text).parse()
}

struct MarkupParser<'a> {
    src: &'a str,
    pos: usize,
}

struct Open {
    node: NewNode,
    line: usize,
    col: usize,
}

impl<'a> MarkupParser<'a> {
    fn new(src: &'a str) -> Self {
        MarkupParser { src, pos: 0 }
    }

    fn line_col(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let col = before.rfind('\n').map_or(pos, |nl| pos - nl - 1) + 1;
        (line, col)
    }

    fn error(&self, pos: usize, reason: impl Into<String>) -> DomError {
        let (line, col) = self.line_col(pos);
        DomError::MalformedMarkup { line, col, reason: reason.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn name(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == ':') {
            self.bump();
        }
        self.src[start..self.pos].to_ascii_lowercase()
    }

    fn parse(mut self) -> Result<Vec<NewNode>, DomError> {
        let mut roots = Vec::new();
        let mut stack: Vec<Open> = Vec::new();
        loop {
            let text_start = self.pos;
            while self.peek().is_some_and(|c| c != '<') {
                self.bump();
            }
            let text = self.src[text_start..self.pos].trim();
            if !text.is_empty() {
                match stack.last_mut() {
                    Some(open) => {
                        if !open.node.text.is_empty() {
                            open.node.text.push(' ');
                        }
                        open.node.text.push_str(text);
                    }
                    None => return Err(self.error(text_start, "text outside of any element")),
                }
            }
            if self.peek().is_none() {
                break;
            }
            let tag_pos = self.pos;
            self.bump();
            if self.rest().starts_with("!--") {
                match self.rest().find("-->") {
                    Some(end) => self.pos += end + 3,
                    None => return Err(self.error(tag_pos, "unterminated comment")),
                }
                continue;
            }
            if self.peek() == Some('!') {
                match self.rest().find('>') {
                    Some(end) => self.pos += end + 1,
                    None => return Err(self.error(tag_pos, "unterminated declaration")),
                }
                continue;
            }
            if self.peek() == Some('/') {
                self.bump();
                let name = self.name();
                self.skip_ws();
                if self.bump() != Some('>') {
                    return Err(self.error(tag_pos, format!("unterminated closing tag </{name}")));
                }
                match stack.pop() {
                    Some(open) if open.node.tag == name => {
                        let done = open.node;
                        match stack.last_mut() {
                            Some(parent) => parent.node.children.push(done),
                            None => roots.push(done),
                        }
                    }
                    Some(open) => {
                        if is_void(&name) {
                            let (line, col) = self.line_col(tag_pos);
                            return Err(DomError::VoidWithChildren { tag: name, line, col });
                        }
                        return Err(self.error(tag_pos, format!("expected </{}>, found </{name}>", open.node.tag)));
                    }
                    None => {
                        if is_void(&name) {
                            let (line, col) = self.line_col(tag_pos);
                            return Err(DomError::VoidWithChildren { tag: name, line, col });
                        }
                        return Err(self.error(tag_pos, format!("unmatched </{name}>")));
                    }
                }
                continue;
            }
            let (node, self_closing) = self.open_tag(tag_pos)?;
            let (line, col) = self.line_col(tag_pos);
            if self_closing || is_void(&node.tag) {
                // `<img></img>` is tolerated as an empty void element.
                if !self_closing && is_void(&node.tag) {
                    let close = format!("</{}>", node.tag);
                    if self.rest().to_ascii_lowercase().starts_with(&close) {
                        self.pos += close.len();
                    }
                }
                match stack.last_mut() {
                    Some(parent) => parent.node.children.push(node),
                    None => roots.push(node),
                }
            } else {
                stack.push(Open { node, line, col });
            }
        }
        if let Some(open) = stack.pop() {
            return Err(DomError::MalformedMarkup {
                line: open.line,
                col: open.col,
                reason: format!("<{}> is never closed", open.node.tag),
            });
        }
        Ok(roots)
    }

    fn open_tag(&mut self, tag_pos: usize) -> Result<(NewNode, bool), DomError> {
        let tag = self.name();
        if tag.is_empty() {
            return Err(self.error(tag_pos, "expected a tag name"));
        }
        let mut node = NewNode::new(&tag);
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.error(tag_pos, format!("unterminated tag <{tag}"))),
                Some('>') => {
                    self.bump();
                    return Ok((node, false));
                }
                Some('/') => {
                    self.bump();
                    if self.bump() != Some('>') {
                        return Err(self.error(self.pos, "expected '>' after '/'"));
                    }
                    return Ok((node, true));
                }
                _ => {}
            }
            let attr_pos = self.pos;
            let name = self.name();
            if name.is_empty() {
                return Err(self.error(attr_pos, "expected an attribute name"));
            }
            self.skip_ws();
            let value = if self.peek() == Some('=') {
                self.bump();
                self.skip_ws();
                let quote = match self.bump() {
                    Some(q @ ('"' | '\'')) => q,
                    _ => return Err(self.error(attr_pos, format!("unquoted value for `{name}`"))),
                };
                match self.rest().find(quote) {
                    Some(end) => {
                        let v = self.rest()[..end].to_string();
                        self.pos += end + 1;
                        v
                    }
                    None => return Err(self.error(attr_pos, format!("unterminated value for `{name}`"))),
                }
            } else {
                String::new()
            };
            match name.as_str() {
                "class" => {
                    for token in value.split_whitespace() {
                        node = node.class(token);
                    }
                }
                "style" => {
                    for decl in value.split(';') {
                        if let Some((k, v)) = decl.split_once(':') {
                            let k = k.trim().to_ascii_lowercase();
                            let v = v.trim();
                            if !k.is_empty() {
                                node.inline_style.retain(|(p, _)| *p != k);
                                node.inline_style.push((k, v.to_string()));
                            }
                        }
                    }
                }
                _ => {
                    if let Some(slot) = node.attributes.iter_mut().find(|(n, _)| *n == name) {
                        slot.1 = value;
                    } else {
                        node.attributes.push((name, value));
                    }
                }
            }
        }
    }
}
