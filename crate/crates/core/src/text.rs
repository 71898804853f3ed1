//! Small string utilities shared across modules. Offsets are counted in
//! Unicode scalar values, not bytes.

/// Byte offset of the `char_idx`-th character, or `s.len()` when it is one past the end.
pub fn byte_offset(s: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in s.char_indices() {
        if count == char_idx {
            return Some(b);
        }
        count += 1;
    }
    (count == char_idx).then_some(s.len())
}

/// Substring by character offsets `[start, end)`.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let b0 = byte_offset(s, start)?;
    let b1 = byte_offset(s, end)?;
    Some(&s[b0..b1])
}

/// Replace the characters in `[start, end)` with `replacement`.
pub fn replace_chars(s: &str, start: usize, end: usize, replacement: &str) -> Option<String> {
    let b0 = byte_offset(s, start)?;
    let b1 = byte_offset(s, end)?;
    if b0 > b1 {
        return None;
    }
    let mut out = String::with_capacity(s.len() + replacement.len());
    out.push_str(&s[..b0]);
    out.push_str(replacement);
    out.push_str(&s[b1..]);
    Some(out)
}

/// Collapse every run of whitespace to one space and trim the ends.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Whitespace tokens.
pub fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Character offset of the first occurrence of `needle` in `haystack`.
pub fn find_chars(haystack: &str, needle: &str) -> Option<usize> {
    haystack.find(needle).map(|b| haystack[..b].chars().count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slicing_counts_characters() {
        let s = "Café Müller opened";
        assert_eq!(char_slice(s, 5, 11), Some("Müller"));
        assert_eq!(char_slice(s, 0, 18), Some(s));
        assert_eq!(char_slice(s, 0, 19), None);
        assert_eq!(char_slice(s, 3, 2), None);
    }

    #[test]
    fn replace_and_find() {
        let s = "über Covid vaccine";
        let at = find_chars(s, "Covid").unwrap();
        assert_eq!(at, 5);
        assert_eq!(replace_chars(s, at, at + 5, "Divoc").unwrap(), "über Divoc vaccine");
    }

    #[test]
    fn whitespace_normalization() {
        assert_eq!(normalize_ws("  Buddhist \t monks\n"), "Buddhist monks");
    }
}
