//! Case-insensitive, word-boundary aware string matching shared by the
//! resolver, the residual-alias validator and the lexicon filters.

/// Trim and collapse internal whitespace runs to one space.
pub fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace-collapsed, lowercased form used for case-insensitive identity.
pub fn fold(s: &str) -> String {
    collapse_ws(s).to_lowercase()
}

fn chars_eq(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

/// Text prepared for repeated matching.
pub struct Haystack<'a> {
    text: &'a str,
    chars: Vec<(usize, char)>,
}

impl<'a> Haystack<'a> {
    pub fn new(text: &'a str) -> Self {
        Haystack { text, chars: text.char_indices().collect() }
    }

    pub fn len_chars(&self) -> usize {
        self.chars.len()
    }

    pub fn byte_offset(&self, char_index: usize) -> usize {
        self.chars.get(char_index).map(|(b, _)| *b).unwrap_or(self.text.len())
    }

    /// If `needle` matches at char index `at` (case-insensitively, on word
    /// boundaries where the needle starts or ends with a word character),
    /// returns the char index one past the match.
    pub fn match_at(&self, at: usize, needle: &[char]) -> Option<usize> {
        let first = *needle.first()?;
        let end = at + needle.len();
        if end > self.chars.len() {
            return None;
        }
        if is_word(first) && at > 0 && is_word(self.chars[at - 1].1) {
            return None;
        }
        let last = *needle.last()?;
        if is_word(last) && end < self.chars.len() && is_word(self.chars[end].1) {
            return None;
        }
        self.chars[at..end]
            .iter()
            .zip(needle)
            .all(|(&(_, h), &n)| chars_eq(h, n))
            .then_some(end)
    }

    /// Byte ranges of all non-overlapping matches, scanning left to right.
    pub fn find_all(&self, needle: &str) -> Vec<(usize, usize)> {
        let needle: Vec<char> = needle.chars().collect();
        let mut out = Vec::new();
        if needle.is_empty() {
            return out;
        }
        let mut i = 0;
        while i < self.chars.len() {
            match self.match_at(i, &needle) {
                Some(end) => {
                    out.push((self.byte_offset(i), self.byte_offset(end)));
                    i = end;
                }
                None => i += 1,
            }
        }
        out
    }

    pub fn char_at(&self, i: usize) -> char {
        self.chars[i].1
    }
}

pub fn contains_phrase(text: &str, phrase: &str) -> bool {
    !Haystack::new(text).find_all(phrase).is_empty()
}
