use std::fmt;

use crate::dom::{Document, Element, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combinator {
    Descendant,
    Child,
}

/// Optional tag plus a set of classes. At least one of the two is present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compound {
    pub tag: Option<String>,
    pub classes: Vec<String>,
}

impl Compound {
    pub fn matches(&self, el: &Element) -> bool {
        self.tag.as_ref().is_none_or(|t| *t == el.tag) && self.classes.iter().all(|c| el.has_class(c))
    }
}

impl fmt::Display for Compound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(tag) = &self.tag {
            f.write_str(tag)?;
        }
        for class in &self.classes {
            write!(f, ".{class}")?;
        }
        Ok(())
    }
}

/// `(class count, tag count)`, compared lexicographically.
pub type Specificity = (usize, usize);

/// Compounds left to right; `combinators[i]` joins `compounds[i]` and
/// `compounds[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub compounds: Vec<Compound>,
    pub combinators: Vec<Combinator>,
}

impl Selector {
    pub fn specificity(&self) -> Specificity {
        self.compounds.iter().fold((0, 0), |(c, t), comp| (c + comp.classes.len(), t + usize::from(comp.tag.is_some())))
    }

    pub fn has_tag_constraint(&self) -> bool {
        self.compounds.iter().any(|c| c.tag.is_some())
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, compound) in self.compounds.iter().enumerate() {
            if i > 0 {
                match self.combinators[i - 1] {
                    Combinator::Descendant => f.write_str(" ")?,
                    Combinator::Child => f.write_str(" > ")?,
                }
            }
            write!(f, "{compound}")?;
        }
        Ok(())
    }
}

/// Right-to-left match with backtracking over descendant combinators.
pub fn matches(sel: &Selector, doc: &Document, el: NodeId) -> bool {
    let Some(last) = sel.compounds.len().checked_sub(1) else { return false };
    match_from(sel, doc, el, last)
}

fn match_from(sel: &Selector, doc: &Document, el: NodeId, index: usize) -> bool {
    let Some(element) = doc.get(el) else { return false };
    if !sel.compounds[index].matches(element) {
        return false;
    }
    if index == 0 {
        return true;
    }
    match sel.combinators[index - 1] {
        Combinator::Child => element.parent.is_some_and(|p| match_from(sel, doc, p, index - 1)),
        Combinator::Descendant => doc.ancestors(el).any(|a| match_from(sel, doc, a, index - 1)),
    }
}
