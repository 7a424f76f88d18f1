use super::snapshot::{LayoutNode, RenderedPageSnapshot};
use super::{Element, ElementSource};
use crate::geometry::{PixelBBox, PixelDims};
use crate::sample::ElementKind;

/// Longest instruction kept, in characters.
pub const MAX_INSTRUCTION_CHARS: usize = 256;

/// Cleans crawled text: whitespace-like control characters become spaces,
/// other control characters are dropped, runs of whitespace collapse, and
/// the result is trimmed and cut at [`MAX_INSTRUCTION_CHARS`].
pub fn sanitize_instruction(raw: &str) -> String {
    let cleaned: String = raw
        .chars()
        .filter_map(|c| match c {
            c if c.is_whitespace() => Some(' '),
            c if c.is_control() => None,
            c => Some(c),
        })
        .collect();
    let collapsed = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .chars()
        .take(MAX_INSTRUCTION_CHARS)
        .collect::<String>()
        .trim_end()
        .to_string()
}

/// A node counts as displayed when flagged visible, it has positive area,
/// and it overlaps the captured viewport.
pub fn is_displayed(node: &LayoutNode, dims: PixelDims) -> bool {
    let b = node.bbox;
    let w = f64::from(dims.width);
    let h = f64::from(dims.height);
    node.visible
        && b.area() > 0.0
        && b.left.max(0.0) < b.right.min(w)
        && b.top.max(0.0) < b.down.min(h)
}

fn near(a: &PixelBBox, b: &PixelBBox) -> bool {
    (a.left - b.left).abs() <= 1.0
        && (a.top - b.top).abs() <= 1.0
        && (a.right - b.right).abs() <= 1.0
        && (a.down - b.down).abs() <= 1.0
}

/// Extracts grounding elements from a page.
///
/// Displayed nodes with rendered text yield text elements. Nodes with a
/// `title` attribute yield elements described by the title; these are
/// icon/widget elements unless the node also renders text. Output is in
/// document order, with near-duplicates (same instruction, box within 1 px)
/// dropped in favour of the first.
pub fn extract_web_elements(snap: &RenderedPageSnapshot) -> Vec<Element> {
    let mut nodes: Vec<&LayoutNode> = snap.layout.iter().collect();
    nodes.sort_by_key(|n| n.id);

    let mut kept: Vec<(PixelBBox, Element)> = Vec::new();
    for node in nodes {
        if !is_displayed(node, snap.dims) {
            continue;
        }
        let Ok(bbox) = node.bbox.normalize(snap.dims) else {
            continue;
        };
        let text = sanitize_instruction(&node.text);
        let title = sanitize_instruction(&node.title);
        let mut candidates = Vec::with_capacity(2);
        if !text.is_empty() {
            candidates.push((
                text.clone(),
                ElementKind::Text,
                ElementSource::WebVisibleText,
            ));
        }
        if !title.is_empty() {
            let kind = if text.is_empty() {
                ElementKind::Icon
            } else {
                ElementKind::Text
            };
            candidates.push((title, kind, ElementSource::WebTitleAttr));
        }
        for (instruction, kind, source) in candidates {
            let dup = kept
                .iter()
                .any(|(px, e)| e.instruction == instruction && near(px, &node.bbox));
            if dup {
                continue;
            }
            kept.push((
                node.bbox,
                Element {
                    instruction,
                    bbox,
                    kind,
                    source,
                    dom_order: node.id,
                },
            ));
        }
    }
    kept.into_iter().map(|(_, e)| e).collect()
}
