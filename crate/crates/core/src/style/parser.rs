use super::{Combinator, Compound, CssError, Declaration, Length, Property, Rule, Selector, Stylesheet, Value};

pub fn parse_stylesheet(text: &str) -> Result<Stylesheet, CssError> {
    let mut p = CssParser { src: text, pos: 0 };
    let mut rules = Vec::new();
    loop {
        p.skip_trivia()?;
        if p.at_end() {
            break;
        }
        if p.peek() == Some('@') {
            let at = p.pos;
            p.bump();
            let name = p.ident();
            if name.eq_ignore_ascii_case("media") {
                return Err(CssError::MediaQueryPresent);
            }
            return Err(p.error(at, format!("unsupported at-rule @{name}")));
        }
        let sel_start = p.pos;
        let brace = p.rest().find('{').ok_or_else(|| p.error(sel_start, "expected '{'"))?;
        let selector_text = &p.rest()[..brace];
        let selectors = selector_text
            .split(',')
            .map(|s| parse_selector(s).map_err(|reason| p.error(sel_start, reason)))
            .collect::<Result<Vec<_>, _>>()?;
        p.pos += brace + 1;
        let body_start = p.pos;
        let close = p.rest().find('}').ok_or_else(|| p.error(body_start, "expected '}'"))?;
        let body = strip_comments(&p.rest()[..close]);
        let declarations = parse_declarations(&body).map_err(|e| relocate(e, &p, body_start))?;
        p.pos += close + 1;
        for selector in selectors {
            rules.push(Rule { selector, declarations: declarations.clone(), source_order: 0 });
        }
    }
    Ok(Stylesheet::new(rules))
}

fn relocate(err: CssError, p: &CssParser<'_>, at: usize) -> CssError {
    match err {
        CssError::CssSyntaxError { reason, .. } => p.error(at, reason),
        other => other,
    }
}

fn strip_comments(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(start) = rest.find("/*") {
        out.push_str(&rest[..start]);
        match rest[start + 2..].find("*/") {
            Some(end) => rest = &rest[start + 2 + end + 2..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Parses `prop: value; ...` as found in rule bodies and `style` attributes.
pub fn parse_declarations(text: &str) -> Result<Vec<Declaration>, CssError> {
    let mut out = Vec::new();
    for chunk in text.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (name, value) = chunk.split_once(':').ok_or_else(|| CssError::CssSyntaxError {
            line: 1,
            col: 1,
            reason: format!("expected ':' in `{chunk}`"),
        })?;
        let name = name.trim().to_ascii_lowercase();
        let property = Property::from_name(&name).ok_or_else(|| CssError::UnsupportedProperty(name.clone()))?;
        let value = parse_value(property, value.trim()).map_err(|reason| CssError::CssSyntaxError {
            line: 1,
            col: 1,
            reason,
        })?;
        out.push(Declaration { property, value });
    }
    Ok(out)
}

pub fn parse_value(property: Property, text: &str) -> Result<Value, String> {
    let text = text.trim();
    let bad = || format!("invalid value `{text}` for {property}");
    match property {
        Property::Width | Property::Height | Property::FontSize => {
            if text.eq_ignore_ascii_case("auto") && property != Property::FontSize {
                return Ok(Value::Keyword("auto".into()));
            }
            if let Some(pct) = text.strip_suffix('%') {
                let v: f64 = pct.trim().parse().map_err(|_| bad())?;
                if !v.is_finite() || v < 0.0 {
                    return Err(bad());
                }
                return Ok(Value::Percent(v));
            }
            let len = Length::parse_token(text).ok_or_else(bad)?;
            // Only zero may omit its unit.
            if !text.ends_with(|c: char| c.is_ascii_alphabetic()) && len.magnitude != 0.0 {
                return Err(bad());
            }
            Ok(Value::Length(len))
        }
        Property::Display => match text.to_ascii_lowercase().as_str() {
            k @ ("block" | "none") => Ok(Value::Keyword(k.into())),
            _ => Err(bad()),
        },
        Property::Position => match text.to_ascii_lowercase().as_str() {
            k @ ("static" | "relative" | "absolute" | "fixed") => Ok(Value::Keyword(k.into())),
            _ => Err(bad()),
        },
        Property::BackgroundColor | Property::Color => {
            if text.is_empty() || text.contains(char::is_whitespace) {
                Err(bad())
            } else {
                Ok(Value::Keyword(text.to_string()))
            }
        }
    }
}

pub fn parse_selector(text: &str) -> Result<Selector, String> {
    let text = strip_comments(text);
    let mut compounds = Vec::new();
    let mut combinators = Vec::new();
    let mut pending: Option<Combinator> = None;
    let mut chars = text.trim().chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            if !compounds.is_empty() && pending.is_none() {
                pending = Some(Combinator::Descendant);
            }
            continue;
        }
        if c == '>' {
            chars.next();
            if compounds.is_empty() || pending == Some(Combinator::Child) {
                return Err(format!("misplaced '>' in `{}`", text.trim()));
            }
            pending = Some(Combinator::Child);
            continue;
        }
        let mut tag = String::new();
        while let Some(&c) = chars.peek() {
            if is_ident_char(c) {
                tag.push(c.to_ascii_lowercase());
                chars.next();
            } else {
                break;
            }
        }
        let mut classes = Vec::new();
        while chars.peek() == Some(&'.') {
            chars.next();
            let mut class = String::new();
            while let Some(&c) = chars.peek() {
                if is_ident_char(c) {
                    class.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            if class.is_empty() {
                return Err(format!("empty class name in `{}`", text.trim()));
            }
            if !classes.contains(&class) {
                classes.push(class);
            }
        }
        if tag.is_empty() && classes.is_empty() {
            return Err(format!("unexpected `{c}` in selector `{}`", text.trim()));
        }
        if !compounds.is_empty() {
            combinators.push(pending.take().unwrap_or(Combinator::Descendant));
        }
        pending = None;
        compounds.push(Compound { tag: (!tag.is_empty()).then_some(tag), classes });
    }
    if compounds.is_empty() {
        return Err("empty selector".into());
    }
    if pending == Some(Combinator::Child) {
        return Err(format!("dangling '>' in `{}`", text.trim()));
    }
    Ok(Selector { compounds, combinators })
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

struct CssParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> CssParser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += c.len_utf8();
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_char) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn skip_trivia(&mut self) -> Result<(), CssError> {
        loop {
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            if self.rest().starts_with("/*") {
                let start = self.pos;
                match self.rest()[2..].find("*/") {
                    Some(end) => self.pos += end + 4,
                    None => return Err(self.error(start, "unterminated comment")),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn error(&self, pos: usize, reason: impl Into<String>) -> CssError {
        let before = &self.src[..pos.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
        CssError::CssSyntaxError { line, col, reason: reason.into() }
    }
}
