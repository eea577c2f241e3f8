//! Rewrites interchange documents to plant ill-formed data.

use mldb_core::interchange::xml::Element;

fn convert(node: roxmltree::Node, edit: &mut dyn FnMut(&roxmltree::Node, &mut Element)) -> Element {
    let mut el = Element::new(node.tag_name().name());
    for a in node.attributes() {
        el = el.attr(a.name(), a.value());
    }
    let kids: Vec<roxmltree::Node> = node.children().filter(|c| c.is_element()).collect();
    if kids.is_empty() {
        if let Some(t) = node.text() {
            el = el.text(t);
        }
    }
    for k in kids {
        el.push(convert(k, edit));
    }
    edit(&node, &mut el);
    el
}

/// Re-serializes `text`, letting `edit` append children to any element.
pub fn rewrite(text: &str, mut edit: impl FnMut(&roxmltree::Node, &mut Element)) -> String {
    let doc = roxmltree::Document::parse(text).expect("test input parses");
    convert(doc.root_element(), &mut edit).to_document()
}
