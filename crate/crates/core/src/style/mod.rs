//! CSS subset: parsing, selector matching and cascading.

mod cascade;
mod parser;
mod selector;

use std::fmt;

use thiserror::Error;

pub use cascade::{cascade, ComputedStyle};
pub use parser::{parse_declarations, parse_selector, parse_stylesheet, parse_value};
pub use selector::{matches, Combinator, Compound, Selector, Specificity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CssError {
    #[error("css syntax error at {line}:{col}: {reason}")]
    CssSyntaxError { line: usize, col: usize, reason: String },
    #[error("unsupported property `{0}`")]
    UnsupportedProperty(String),
    #[error("media queries are not supported; use element breakpoints instead")]
    MediaQueryPresent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    Px,
    Em,
    Rem,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Px => "px",
            Unit::Em => "em",
            Unit::Rem => "rem",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Length {
    pub magnitude: f64,
    pub unit: Unit,
}

impl Length {
    pub fn px(magnitude: f64) -> Self {
        Length { magnitude, unit: Unit::Px }
    }

    pub fn em(magnitude: f64) -> Self {
        Length { magnitude, unit: Unit::Em }
    }

    pub fn rem(magnitude: f64) -> Self {
        Length { magnitude, unit: Unit::Rem }
    }

    /// Parses a breakpoint-style token: a non-negative number with an
    /// optional `px`, `em` or `rem` suffix. A bare number means pixels.
    pub fn parse_token(token: &str) -> Option<Length> {
        let token = token.trim();
        let split = token.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(token.len());
        let (num, unit) = token.split_at(split);
        if num.is_empty() || num.starts_with('.') && num.len() == 1 {
            return None;
        }
        let magnitude: f64 = num.parse().ok()?;
        if !magnitude.is_finite() {
            return None;
        }
        let unit = match unit.to_ascii_lowercase().as_str() {
            "" | "px" => Unit::Px,
            "em" => Unit::Em,
            "rem" => Unit::Rem,
            _ => return None,
        };
        Some(Length { magnitude, unit })
    }

    /// Resolves to pixels given the font size of the element and the root
    /// font size.
    pub fn to_px(self, font_size: f64, root_font_size: f64) -> f64 {
        match self.unit {
            Unit::Px => self.magnitude,
            Unit::Em => self.magnitude * font_size,
            Unit::Rem => self.magnitude * root_font_size,
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", format_number(self.magnitude), self.unit.as_str())
    }
}

/// Shortest round-tripping decimal form, without trailing zeros.
pub fn format_number(n: f64) -> String {
    if n == 0.0 {
        return "0".into();
    }
    format!("{n}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    Width,
    Height,
    FontSize,
    Display,
    Position,
    BackgroundColor,
    Color,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Width,
        Property::Height,
        Property::FontSize,
        Property::Display,
        Property::Position,
        Property::BackgroundColor,
        Property::Color,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Width => "width",
            Property::Height => "height",
            Property::FontSize => "font-size",
            Property::Display => "display",
            Property::Position => "position",
            Property::BackgroundColor => "background-color",
            Property::Color => "color",
        }
    }

    pub fn from_name(name: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Length(Length),
    Percent(f64),
    Keyword(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Length(l) => write!(f, "{l}"),
            Value::Percent(p) => write!(f, "{}%", format_number(*p)),
            Value::Keyword(k) => f.write_str(k),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Declaration {
    pub property: Property,
    pub value: Value,
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.property, self.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub selector: Selector,
    pub declarations: Vec<Declaration>,
    /// Position in the owning stylesheet; strictly increasing.
    pub source_order: usize,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{", self.selector)?;
        for d in &self.declarations {
            write!(f, " {d};")?;
        }
        f.write_str(" }")
    }
}

/// Ordered rules. Generated rule blocks (owned by a named origin) always
/// follow the authored rules.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stylesheet {
    rules: Vec<Rule>,
    authored: usize,
    generated: Vec<(String, Vec<Rule>)>,
}

impl Stylesheet {
    pub fn new(rules: Vec<Rule>) -> Self {
        let mut sheet = Stylesheet { authored: rules.len(), rules, generated: Vec::new() };
        sheet.reindex();
        sheet
    }

    pub fn parse(text: &str) -> Result<Stylesheet, CssError> {
        parse_stylesheet(text)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn authored_rules(&self) -> &[Rule] {
        &self.rules[..self.authored]
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    /// Replaces the generated block owned by `origin`.
    pub fn set_generated(&mut self, origin: &str, rules: Vec<Rule>) {
        match self.generated.iter_mut().find(|(o, _)| o == origin) {
            Some(slot) => slot.1 = rules,
            None => self.generated.push((origin.to_string(), rules)),
        }
        self.rules.truncate(self.authored);
        for (_, block) in &self.generated {
            self.rules.extend(block.iter().cloned());
        }
        self.reindex();
    }

    pub fn generated(&self, origin: &str) -> Option<&[Rule]> {
        self.generated.iter().find(|(o, _)| o == origin).map(|(_, r)| r.as_slice())
    }

    /// Serialized text of every generated block.
    pub fn generated_css(&self) -> String {
        let mut out = String::new();
        for (_, block) in &self.generated {
            for rule in block {
                out.push_str(&rule.to_string());
                out.push('\n');
            }
        }
        out
    }

    fn reindex(&mut self) {
        for (i, rule) in self.rules.iter_mut().enumerate() {
            rule.source_order = i;
        }
    }
}

impl fmt::Display for Stylesheet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_tokens() {
        assert_eq!(Length::parse_token("300"), Some(Length::px(300.0)));
        assert_eq!(Length::parse_token("10em"), Some(Length::em(10.0)));
        assert_eq!(Length::parse_token("2.5rem"), Some(Length::rem(2.5)));
        assert_eq!(Length::parse_token("30q"), None);
        assert_eq!(Length::parse_token("-5"), None);
        assert_eq!(Length::parse_token(""), None);
        assert_eq!(Length::parse_token("px"), None);
    }

    #[test]
    fn number_formatting_drops_trailing_zeros() {
        assert_eq!(format_number(300.0), "300");
        assert_eq!(format_number(10.5), "10.5");
        assert_eq!(Length::em(10.0).to_string(), "10em");
    }

    #[test]
    fn generated_blocks_follow_authored_rules() {
        let mut sheet = Stylesheet::parse(".a { width: 1px; }").unwrap();
        let gen = Stylesheet::parse(".b { width: 2px; } .c { width: 3px; }").unwrap();
        sheet.set_generated("grid", gen.rules().to_vec());
        assert_eq!(sheet.len(), 3);
        assert_eq!(sheet.authored_rules().len(), 1);
        let orders: Vec<usize> = sheet.rules().iter().map(|r| r.source_order).collect();
        assert_eq!(orders, vec![0, 1, 2]);
        sheet.set_generated("grid", gen.rules()[..1].to_vec());
        assert_eq!(sheet.len(), 2);
        assert_eq!(sheet.generated_css(), ".b { width: 2px; }\n");
    }
}
