//! Minimal canonical XML writer.

use std::fmt::Write;

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn escape_attr(s: &str) -> String {
    escape_text(s).replace('"', "&quot;")
}

/// Element builder. Attributes are emitted in alphabetical order.
#[derive(Debug, Default)]
pub struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    text: Option<String>,
    children: Vec<Element>,
}

impl Element {
    pub fn new(name: &str) -> Element {
        Element { name: name.to_string(), ..Element::default() }
    }

    pub fn attr(mut self, key: &str, value: impl Into<String>) -> Element {
        self.attrs.push((key.to_string(), value.into()));
        self
    }

    pub fn text(mut self, text: impl Into<String>) -> Element {
        self.text = Some(text.into());
        self
    }

    pub fn child(mut self, child: Element) -> Element {
        self.children.push(child);
        self
    }

    pub fn push(&mut self, child: Element) {
        self.children.push(child);
    }

    pub fn write(&self, out: &mut String, depth: usize) {
        let indent = "  ".repeat(depth);
        let mut attrs = self.attrs.clone();
        attrs.sort();
        let _ = write!(out, "{indent}<{}", self.name);
        for (k, v) in &attrs {
            let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
        }
        match (&self.text, self.children.is_empty()) {
            (Some(t), _) => {
                let _ = writeln!(out, ">{}</{}>", escape_text(t), self.name);
            }
            (None, true) => out.push_str("/>\n"),
            (None, false) => {
                out.push_str(">\n");
                for c in &self.children {
                    c.write(out, depth + 1);
                }
                let _ = writeln!(out, "{indent}</{}>", self.name);
            }
        }
    }

    pub fn to_document(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        self.write(&mut out, 0);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_layout() {
        let doc = Element::new("a")
            .attr("z", "1")
            .attr("b", "x\"<y")
            .child(Element::new("t").text("a & b"))
            .child(Element::new("e"));
        assert_eq!(
            doc.to_document(),
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<a b=\"x&quot;&lt;y\" z=\"1\">\n  <t>a &amp; b</t>\n  <e/>\n</a>\n"
        );
    }
}
