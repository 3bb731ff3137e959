/// Contiguous code-point substrings of every length in `n_min..=n_max`.
///
/// Texts shorter than `n_min` code points yield the whole text as a single
/// feature; the empty string yields nothing. No boundary padding is added and
/// spaces are ordinary characters, so n-grams cross word boundaries.
pub fn char_ngrams(text: &str, n_min: usize, n_max: usize) -> Vec<&str> {
    assert!(n_min >= 1 && n_min <= n_max, "invalid n-gram range");
    if text.is_empty() {
        return Vec::new();
    }
    // byte offsets of every char boundary, including the end
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let len = bounds.len() - 1;
    if len < n_min {
        return vec![text];
    }
    let mut out = Vec::new();
    for n in n_min..=n_max.min(len) {
        for start in 0..=len - n {
            out.push(&text[bounds[start]..bounds[start + n]]);
        }
    }
    out
}
