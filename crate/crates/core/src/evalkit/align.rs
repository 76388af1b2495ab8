//! Carries spans across two versions of a text, e.g. the pipeline's
//! extracted text and the plain text stored with a gold document.

use similar::{capture_diff_slices, Algorithm, DiffTag};

use crate::span::Span;

pub struct TextAlignment {
    // for each char of the source, the char index in the target it equals
    map: Vec<Option<usize>>,
    source_bounds: Vec<usize>,
    target_bounds: Vec<usize>,
}

fn bounds(text: &str) -> Vec<usize> {
    text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len())).collect()
}

impl TextAlignment {
    pub fn new(source: &str, target: &str) -> Self {
        let a: Vec<char> = source.chars().collect();
        let b: Vec<char> = target.chars().collect();
        let mut map = vec![None; a.len()];
        for op in capture_diff_slices(Algorithm::Myers, &a, &b) {
            let (tag, old, new) = op.as_tag_tuple();
            if tag == DiffTag::Equal {
                for (i, j) in old.zip(new) {
                    map[i] = Some(j);
                }
            }
        }
        TextAlignment { map, source_bounds: bounds(source), target_bounds: bounds(target) }
    }

    /// The target span covering the equal characters of a source byte span,
    /// or `None` when none of them survive.
    pub fn map_span(&self, span: Span) -> Option<Span> {
        let start = self.source_bounds.binary_search(&span.start).ok()?;
        let end = self.source_bounds.binary_search(&span.end).ok()?;
        let mut hits = self.map[start..end].iter().flatten();
        let first = *hits.next()?;
        let last = hits.last().copied().unwrap_or(first);
        Some(Span::new(self.target_bounds[first], self.target_bounds[last + 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_map_identically() {
        let t = "Über Programmierung";
        let a = TextAlignment::new(t, t);
        assert_eq!(a.map_span(Span::new(6, 20)), Some(Span::new(6, 20)));
    }

    #[test]
    fn shifted_text() {
        let src = "Inhalt\nJava lernen";
        let dst = "Inhalt:  Java lernen";
        let a = TextAlignment::new(src, dst);
        assert_eq!(a.map_span(Span::new(7, 11)).map(|s| s.slice(dst)), Some("Java"));
        assert_eq!(TextAlignment::new("abc", "xyz").map_span(Span::new(0, 3)), None);
    }
}
