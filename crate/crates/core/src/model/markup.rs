//! Bold, italic and heading statistics.
//!
//! Emphasis follows a reduced form of the GFM delimiter-run rules, applied
//! per line and skipped inside fenced code blocks and inline code spans:
//!
//! * a run of `*` or `_` can open when followed by a non-whitespace character
//!   and close when preceded by one; `_` runs inside a word do neither;
//! * a closer pairs with the nearest open run of the same character, using two
//!   characters (bold) when both sides have at least two left, else one
//!   (italic); unmatched runs are literal text.
//!
//! A character counts toward `bold_char_count` when it lies inside at least
//! one bold pair, and likewise for italic. Delimiter characters consumed by a
//! pair are not counted. Counts are in Unicode scalar values.

use serde::{Deserialize, Serialize};

use super::blocks::{fence_closes, fence_open, line_spans};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MarkupStats {
    pub bold_char_count: u64,
    pub italic_char_count: u64,
    pub title_count: u64,
}

impl std::ops::AddAssign for MarkupStats {
    fn add_assign(&mut self, rhs: Self) {
        self.bold_char_count += rhs.bold_char_count;
        self.italic_char_count += rhs.italic_char_count;
        self.title_count += rhs.title_count;
    }
}

/// ATX heading: optional leading spaces, 1–6 `#`, then a space.
pub fn is_heading_line(line: &str) -> bool {
    let t = line.trim_start_matches(' ');
    let hashes = t.bytes().take_while(|&b| b == b'#').count();
    (1..=6).contains(&hashes) && t.as_bytes().get(hashes) == Some(&b' ')
}

pub fn compute_markup_stats(md: &str) -> MarkupStats {
    let mut stats = MarkupStats::default();
    let mut fence = None;
    for (start, end) in line_spans(md) {
        let line = &md[start..end];
        if let Some(open) = fence {
            if fence_closes(line, open) {
                fence = None;
            }
            continue;
        }
        if let Some(open) = fence_open(line) {
            fence = Some(open);
            continue;
        }
        if is_heading_line(line) {
            stats.title_count += 1;
        }
        let (bold, italic) = emphasis_in_line(line);
        stats.bold_char_count += bold;
        stats.italic_char_count += italic;
    }
    stats
}

#[derive(Debug)]
enum Item {
    Chars(u64),
    Delim(Delim),
}

#[derive(Debug)]
struct Delim {
    ch: char,
    len: usize,
    remaining: usize,
    can_open: bool,
    can_close: bool,
    opens_bold: u32,
    opens_italic: u32,
    closes_bold: u32,
    closes_italic: u32,
}

fn tokenize_line(chars: &[char]) -> Vec<Item> {
    let mut items = Vec::new();
    let mut plain = 0u64;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\\' if i + 1 < chars.len() && chars[i + 1].is_ascii_punctuation() => {
                plain += 2;
                i += 2;
            }
            '`' => {
                let run = chars[i..].iter().take_while(|&&x| x == '`').count();
                let close = find_backtick_run(chars, i + run, run);
                let span_end = close.map_or(i + run, |c| c + run);
                plain += (span_end - i) as u64;
                i = span_end;
            }
            '*' | '_' => {
                let run = chars[i..].iter().take_while(|&&x| x == c).count();
                let prev = i.checked_sub(1).map(|p| chars[p]);
                let next = chars.get(i + run).copied();
                let mut can_open = next.is_some_and(|n| !n.is_whitespace());
                let mut can_close = prev.is_some_and(|p| !p.is_whitespace());
                if c == '_'
                    && prev.is_some_and(char::is_alphanumeric)
                    && next.is_some_and(char::is_alphanumeric)
                {
                    can_open = false;
                    can_close = false;
                }
                if can_open || can_close {
                    if plain > 0 {
                        items.push(Item::Chars(plain));
                        plain = 0;
                    }
                    items.push(Item::Delim(Delim {
                        ch: c,
                        len: run,
                        remaining: run,
                        can_open,
                        can_close,
                        opens_bold: 0,
                        opens_italic: 0,
                        closes_bold: 0,
                        closes_italic: 0,
                    }));
                } else {
                    plain += run as u64;
                }
                i += run;
            }
            _ => {
                plain += 1;
                i += 1;
            }
        }
    }
    if plain > 0 {
        items.push(Item::Chars(plain));
    }
    items
}

fn find_backtick_run(chars: &[char], from: usize, len: usize) -> Option<usize> {
    let mut i = from;
    while i < chars.len() {
        if chars[i] == '`' {
            let run = chars[i..].iter().take_while(|&&x| x == '`').count();
            if run == len {
                return Some(i);
            }
            i += run;
        } else {
            i += 1;
        }
    }
    None
}

fn delim_mut(items: &mut [Item], idx: usize) -> &mut Delim {
    match &mut items[idx] {
        Item::Delim(d) => d,
        Item::Chars(_) => unreachable!("stack holds delimiter indices only"),
    }
}

fn emphasis_in_line(line: &str) -> (u64, u64) {
    if !line.contains(['*', '_']) {
        return (0, 0);
    }
    let chars: Vec<char> = line.chars().collect();
    let mut items = tokenize_line(&chars);

    let mut stack: Vec<usize> = Vec::new();
    for idx in 0..items.len() {
        let Item::Delim(d) = &items[idx] else { continue };
        let (ch, can_open, can_close) = (d.ch, d.can_open, d.can_close);
        if can_close {
            loop {
                if delim_mut(&mut items, idx).remaining == 0 {
                    break;
                }
                let Some(pos) = stack.iter().rposition(|&o| {
                    let Item::Delim(od) = &items[o] else { return false };
                    od.ch == ch && od.remaining > 0
                }) else {
                    break;
                };
                let opener = stack[pos];
                let closer_left = delim_mut(&mut items, idx).remaining;
                let opener_left = delim_mut(&mut items, opener).remaining;
                let used = if closer_left >= 2 && opener_left >= 2 { 2 } else { 1 };
                {
                    let o = delim_mut(&mut items, opener);
                    o.remaining -= used;
                    if used == 2 {
                        o.opens_bold += 1;
                    } else {
                        o.opens_italic += 1;
                    }
                }
                {
                    let c = delim_mut(&mut items, idx);
                    c.remaining -= used;
                    if used == 2 {
                        c.closes_bold += 1;
                    } else {
                        c.closes_italic += 1;
                    }
                }
                stack.truncate(pos + 1);
                if delim_mut(&mut items, opener).remaining == 0 {
                    stack.pop();
                }
            }
        }
        if can_open && delim_mut(&mut items, idx).remaining > 0 {
            stack.push(idx);
        }
    }

    let (mut bold_depth, mut italic_depth) = (0u32, 0u32);
    let (mut bold, mut italic) = (0u64, 0u64);
    let mut count = |n: u64, bd: u32, id: u32| {
        if bd > 0 {
            bold += n;
        }
        if id > 0 {
            italic += n;
        }
    };
    for item in &items {
        match item {
            Item::Chars(n) => count(*n, bold_depth, italic_depth),
            Item::Delim(d) => {
                bold_depth -= d.closes_bold;
                italic_depth -= d.closes_italic;
                let used = 2 * (d.opens_bold + d.closes_bold) + d.opens_italic + d.closes_italic;
                let literal = d.len as u64 - used as u64;
                count(literal, bold_depth, italic_depth);
                bold_depth += d.opens_bold;
                italic_depth += d.opens_italic;
            }
        }
    }
    (bold, italic)
}
