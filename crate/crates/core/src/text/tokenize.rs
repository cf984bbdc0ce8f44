fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining(c)
}

// Marks that `is_alphanumeric` misses but which belong to the preceding letter.
fn is_combining(c: char) -> bool {
    matches!(c as u32,
        0x0300..=0x036F | 0x0610..=0x061A | 0x064B..=0x065F | 0x0670 | 0x06D6..=0x06ED)
}

/// Whitespace split followed by punctuation detachment.
///
/// Every punctuation character becomes its own token, except a `.` between
/// two digits and an apostrophe between two word characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        split_chunk(chunk, &mut out);
    }
    out
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if is_word_char(c) {
            word.push(c);
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let keep = match c {
            '.' => prev.is_some_and(|p| p.is_numeric()) && next.is_some_and(|n| n.is_numeric()),
            '\'' | '\u{2019}' => prev.is_some_and(is_word_char) && next.is_some_and(is_word_char),
            _ => false,
        };
        if keep {
            word.push(c);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
}

/// Tokenizes and rejoins with single spaces.
pub fn tokenize_line(text: &str) -> String {
    tokenize(text).join(" ")
}
