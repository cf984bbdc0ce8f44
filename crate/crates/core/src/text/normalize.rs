use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

/// Character-level normalization: a substitution table plus a set of code
/// points that are deleted outright.
///
/// Construction rejects tables whose replacement strings contain code points
/// that themselves carry a rule, which keeps [`normalize`] idempotent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationRules {
    substitutions: BTreeMap<char, String>,
    strip: BTreeSet<char>,
}

const ALEF: char = '\u{0627}';

impl NormalizationRules {
    pub fn new(substitutions: BTreeMap<char, String>, strip: BTreeSet<char>) -> Result<Self> {
        if let Some(c) = strip.iter().find(|c| substitutions.contains_key(c)) {
            return Err(Error::Argument(format!(
                "U+{:04X} is both substituted and stripped",
                *c as u32
            )));
        }
        for (from, to) in &substitutions {
            if let Some(bad) = to
                .chars()
                .find(|c| substitutions.contains_key(c) || strip.contains(c))
            {
                return Err(Error::Argument(format!(
                    "replacement for U+{:04X} contains U+{:04X}, which has its own rule",
                    *from as u32, bad as u32
                )));
            }
        }
        Ok(NormalizationRules {
            substitutions,
            strip,
        })
    }

    /// Identity rules.
    pub fn empty() -> Self {
        NormalizationRules {
            substitutions: BTreeMap::new(),
            strip: BTreeSet::new(),
        }
    }

    /// Standard Arabic MT normalization: alef variants, alef maqsura, ta
    /// marbuta, Arabic-Indic digits; tatweel and short-vowel diacritics
    /// removed. Hamza carriers on waw and ya are left alone.
    pub fn arabic_default() -> Self {
        let mut subs = BTreeMap::new();
        for c in ['\u{0623}', '\u{0625}', '\u{0622}', '\u{0671}'] {
            subs.insert(c, ALEF.to_string());
        }
        subs.insert('\u{0649}', '\u{064A}'.to_string());
        subs.insert('\u{0629}', '\u{0647}'.to_string());
        for (i, d) in ('\u{0660}'..='\u{0669}').enumerate() {
            subs.insert(d, i.to_string());
        }
        let mut strip: BTreeSet<char> = ('\u{064B}'..='\u{0652}').collect();
        strip.insert('\u{0640}');
        NormalizationRules::new(subs, strip).expect("built-in table is consistent")
    }

    pub fn substitutions(&self) -> &BTreeMap<char, String> {
        &self.substitutions
    }

    pub fn strip_set(&self) -> &BTreeSet<char> {
        &self.strip
    }

    pub fn has_rule(&self, c: char) -> bool {
        self.strip.contains(&c) || self.substitutions.contains_key(&c)
    }

    /// Parses the rule TSV: `<hex codepoint>\t<replacement-or-DELETE>`.
    /// Blank lines and `#` comments are ignored; `U+` prefixes are accepted.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut subs = BTreeMap::new();
        let mut strip = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (code, repl) = line.split_once('\t').ok_or_else(|| {
                Error::parse("rule table", i + 1, "expected two tab-separated fields")
            })?;
            let c = parse_codepoint(code).ok_or_else(|| {
                Error::parse("rule table", i + 1, format!("bad code point {code:?}"))
            })?;
            if repl == "DELETE" {
                strip.insert(c);
            } else {
                subs.insert(c, repl.to_string());
            }
        }
        NormalizationRules::new(subs, strip)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (c, r) in &self.substitutions {
            out.push_str(&format!("{:04X}\t{}\n", *c as u32, r));
        }
        for c in &self.strip {
            out.push_str(&format!("{:04X}\tDELETE\n", *c as u32));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::text::read_text(path)?;
        Self::parse_tsv(&text)
    }
}

impl Default for NormalizationRules {
    fn default() -> Self {
        Self::arabic_default()
    }
}

pub(crate) fn parse_codepoint(field: &str) -> Option<char> {
    let f = field.trim();
    let f = f
        .strip_prefix("U+")
        .or_else(|| f.strip_prefix("u+"))
        .or_else(|| f.strip_prefix("0x"))
        .unwrap_or(f);
    u32::from_str_radix(f, 16).ok().and_then(char::from_u32)
}

pub fn normalize(text: &str, rules: &NormalizationRules) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if rules.strip.contains(&c) {
            continue;
        }
        match rules.substitutions.get(&c) {
            Some(r) => out.push_str(r),
            None => out.push(c),
        }
    }
    out
}

/// Byte-level entry point; malformed UTF-8 is reported with its offset.
pub fn normalize_bytes(bytes: &[u8], rules: &NormalizationRules) -> Result<String> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(normalize(text, rules))
}
