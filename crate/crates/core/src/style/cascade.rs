use std::collections::BTreeMap;

use super::{matches, parse_value, Property, Stylesheet, Value};
use crate::dom::{Document, NodeId};

/// Winning declared value per property. Properties without a winner are
/// absent and take their initial value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComputedStyle {
    pub values: BTreeMap<Property, Value>,
}

impl ComputedStyle {
    pub fn get(&self, property: Property) -> Option<&Value> {
        self.values.get(&property)
    }

    pub fn keyword(&self, property: Property) -> Option<&str> {
        match self.values.get(&property) {
            Some(Value::Keyword(k)) => Some(k),
            _ => None,
        }
    }

    pub fn display_none(&self) -> bool {
        self.keyword(Property::Display) == Some("none")
    }

    pub fn position(&self) -> &str {
        self.keyword(Property::Position).unwrap_or("static")
    }
}

/// Highest (specificity, source order) wins; inline declarations beat every
/// rule. Unparsable inline declarations are ignored.
pub fn cascade(doc: &Document, sheet: &Stylesheet, el: NodeId) -> ComputedStyle {
    let mut winners: BTreeMap<Property, ((usize, usize), usize, Value)> = BTreeMap::new();
    for rule in sheet.rules() {
        if !matches(&rule.selector, doc, el) {
            continue;
        }
        let rank = (rule.selector.specificity(), rule.source_order);
        for decl in &rule.declarations {
            let replace = match winners.get(&decl.property) {
                Some((spec, order, _)) => rank >= (*spec, *order),
                None => true,
            };
            if replace {
                winners.insert(decl.property, (rank.0, rank.1, decl.value.clone()));
            }
        }
    }
    let mut values: BTreeMap<Property, Value> = winners.into_iter().map(|(p, (_, _, v))| (p, v)).collect();
    if let Some(element) = doc.get(el) {
        for (name, raw) in &element.inline_style {
            if let Some(property) = Property::from_name(name) {
                if let Ok(v) = parse_value(property, raw) {
                    values.insert(property, v);
                }
            }
        }
    }
    ComputedStyle { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::style::Length;

    fn first_with_class(doc: &Document, class: &str) -> NodeId {
        doc.preorder().into_iter().find(|id| doc.get(*id).unwrap().has_class(class)).unwrap()
    }

    #[test]
    fn later_rule_wins_on_equal_specificity() {
        let doc = Document::parse(r#"<div class="foo elq-max-width-300px"></div>"#).unwrap();
        let sheet =
            Stylesheet::parse(".foo.elq-max-width-300px { width: 10px; } .elq-max-width-300px.foo { width: 20px; }")
                .unwrap();
        let style = cascade(&doc, &sheet, doc.root());
        assert_eq!(style.get(Property::Width), Some(&Value::Length(Length::px(20.0))));
    }

    #[test]
    fn more_specific_rule_beats_later_rule() {
        let doc = Document::parse(r#"<div class="foo elq-max-width-300px"></div>"#).unwrap();
        let sheet = Stylesheet::parse(".foo.elq-max-width-300px { width: 10px; } .foo { width: 20px; }").unwrap();
        let style = cascade(&doc, &sheet, doc.root());
        assert_eq!(style.get(Property::Width), Some(&Value::Length(Length::px(10.0))));
    }

    #[test]
    fn inline_beats_rules() {
        let doc = Document::parse(r#"<div class="foo" style="width: 200px"></div>"#).unwrap();
        let sheet = Stylesheet::parse(".foo { width: 50%; }").unwrap();
        let style = cascade(&doc, &sheet, doc.root());
        assert_eq!(style.get(Property::Width), Some(&Value::Length(Length::px(200.0))));
    }

    #[test]
    fn breakpoint_background_bands() {
        let sheet = Stylesheet::parse(
            ".foo.elq-max-width-300px { background-color: blue; }
             .foo.elq-min-width-300px.elq-max-width-500px { background-color: green; }
             .foo.elq-min-width-500px p { color: white; }",
        )
        .unwrap();
        let doc =
            Document::parse(r#"<div class="foo elq-min-width-300px elq-max-width-500px"><p class="x"></p></div>"#)
                .unwrap();
        let style = cascade(&doc, &sheet, doc.root());
        assert_eq!(style.keyword(Property::BackgroundColor), Some("green"));
        assert_eq!(cascade(&doc, &sheet, first_with_class(&doc, "x")).keyword(Property::Color), None);
    }
}
