const BARE_ALEF: char = '\u{0627}';
const ALEF_MAQSURA: char = '\u{0649}';
const YA: char = '\u{064A}';
const TA_MARBUTA: char = '\u{0629}';
const HA: char = '\u{0647}';

#[inline]
fn map_char(c: char) -> char {
    match c {
        // alef with hamza above, hamza below, madda
        '\u{0623}' | '\u{0625}' | '\u{0622}' => BARE_ALEF,
        ALEF_MAQSURA => YA,
        TA_MARBUTA => HA,
        other => other,
    }
}

/// Normalizes tweet text.
///
/// Exactly three letter mappings are applied: alef variants (أ إ آ) to bare
/// alef, alef maqsura to ya, and ta marbuta to ha. Whitespace runs collapse
/// to a single space and the result is trimmed. Everything else, including
/// diacritics, tatweel and Latin letter case, passes through untouched.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(map_char(c));
    }
    out
}
