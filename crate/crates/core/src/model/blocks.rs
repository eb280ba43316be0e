//! Blank-line block structure of a markdown body.
//!
//! A block is a maximal run of lines containing no blank line outside a
//! fenced code block. Blocks never overlap and never include the line feed
//! that terminates their last line.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Paragraph,
    /// Contains a fenced code block.
    Fence,
    /// Contains a GFM table delimiter row.
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub span: Range<usize>,
    pub kind: BlockKind,
}

/// An opening fence: the fence character and run length.
pub(crate) fn fence_open(line: &str) -> Option<(u8, usize)> {
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent > 3 {
        return None;
    }
    let rest = &line.as_bytes()[indent..];
    let ch = *rest.first()?;
    if ch != b'`' && ch != b'~' {
        return None;
    }
    let run = rest.iter().take_while(|&&b| b == ch).count();
    if run < 3 {
        return None;
    }
    // backtick fences may not have backticks in the info string
    if ch == b'`' && rest[run..].contains(&b'`') {
        return None;
    }
    Some((ch, run))
}

pub(crate) fn fence_closes(line: &str, open: (u8, usize)) -> bool {
    let trimmed = line.trim_start_matches(' ');
    if line.len() - trimmed.len() > 3 {
        return false;
    }
    let run = trimmed.bytes().take_while(|&b| b == open.0).count();
    run >= open.1 && trimmed[run..].trim().is_empty()
}

fn is_table_delimiter_row(line: &str) -> bool {
    let t = line.trim();
    t.contains('-')
        && t.contains('|')
        && t.chars().all(|c| matches!(c, '|' | '-' | ':' | ' ' | '\t'))
}

/// Iterate `(start, end)` byte ranges of lines, excluding the line feed.
pub(crate) fn line_spans(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut pos = 0;
    std::iter::from_fn(move || {
        if pos >= text.len() {
            return None;
        }
        let start = pos;
        let end = text[start..].find('\n').map_or(text.len(), |i| start + i);
        pos = end + 1;
        Some((start, end))
    })
}

pub fn scan_blocks(text: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current: Option<Block> = None;
    let mut fence: Option<(u8, usize)> = None;
    for (start, end) in line_spans(text) {
        let line = &text[start..end];
        if let Some(open) = fence {
            if fence_closes(line, open) {
                fence = None;
            }
            if let Some(b) = current.as_mut() {
                b.span.end = end;
            }
            continue;
        }
        if line.trim().is_empty() {
            blocks.extend(current.take());
            continue;
        }
        let block = current.get_or_insert(Block {
            span: start..end,
            kind: BlockKind::Paragraph,
        });
        block.span.end = end;
        if let Some(open) = fence_open(line) {
            fence = Some(open);
            block.kind = BlockKind::Fence;
        } else if block.kind == BlockKind::Paragraph && is_table_delimiter_row(line) {
            block.kind = BlockKind::Table;
        }
    }
    blocks.extend(current);
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(text: &str) -> Vec<(&str, BlockKind)> {
        scan_blocks(text)
            .into_iter()
            .map(|b| (&text[b.span], b.kind))
            .collect()
    }

    #[test]
    fn paragraphs_split_on_blank_lines() {
        assert_eq!(
            texts("\n\na\nb\n\n \t\nc\n"),
            vec![("a\nb", BlockKind::Paragraph), ("c", BlockKind::Paragraph)]
        );
        assert!(texts("").is_empty());
        assert!(texts("\n  \n").is_empty());
    }

    #[test]
    fn fences_span_blank_lines() {
        let md = "text\n```rust\nfn a() {}\n\nfn b() {}\n```\n\nafter";
        assert_eq!(
            texts(md),
            vec![
                ("text\n```rust\nfn a() {}\n\nfn b() {}\n```", BlockKind::Fence),
                ("after", BlockKind::Paragraph),
            ]
        );
        // unclosed fence runs to the end
        assert_eq!(texts("~~~~\na\n\n~~~\nb").len(), 1);
        // a shorter closing run does not close
        assert_eq!(texts("````\na\n```\n\nb\n````\n\nc").len(), 2);
    }

    #[test]
    fn tables_are_detected() {
        let md = "| a | b |\n|---|:-:|\n| 1 | 2 |\n\nx";
        assert_eq!(texts(md)[0].1, BlockKind::Table);
        assert_eq!(texts(md)[1], ("x", BlockKind::Paragraph));
    }

    #[test]
    fn fence_open_rules() {
        assert_eq!(fence_open("```"), Some((b'`', 3)));
        assert_eq!(fence_open("   ~~~~ info"), Some((b'~', 4)));
        assert_eq!(fence_open("    ```"), None);
        assert_eq!(fence_open("``"), None);
        assert_eq!(fence_open("``` a`b"), None);
    }
}
