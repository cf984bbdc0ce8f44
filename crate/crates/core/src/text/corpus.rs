use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One line of a parallel corpus, optionally with a word alignment.
///
/// Alignment links are zero-based `(source, target)` index pairs, kept sorted
/// and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub alignment: Option<Vec<(usize, usize)>>,
}

impl SentencePair {
    pub fn new(
        source: Vec<String>,
        target: Vec<String>,
        alignment: Option<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        for tok in source.iter().chain(&target) {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Argument(format!("invalid token {tok:?}")));
            }
        }
        let alignment = match alignment {
            Some(mut links) => {
                if let Some(&(s, t)) = links
                    .iter()
                    .find(|&&(s, t)| s >= source.len() || t >= target.len())
                {
                    return Err(Error::Argument(format!(
                        "alignment link {s}-{t} out of range for {}x{} pair",
                        source.len(),
                        target.len()
                    )));
                }
                links.sort_unstable();
                links.dedup();
                Some(links)
            }
            None => None,
        };
        Ok(SentencePair {
            source,
            target,
            alignment,
        })
    }

    /// Builds a pair from whitespace-tokenized lines.
    pub fn from_lines(src: &str, tgt: &str, align: Option<&str>) -> Result<Self> {
        let alignment = align.map(parse_pharaoh).transpose()?;
        Self::new(split(src), split(tgt), alignment)
    }

    pub fn source_line(&self) -> String {
        self.source.join(" ")
    }

    pub fn target_line(&self) -> String {
        self.target.join(" ")
    }
}

fn split(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

/// Parses a Pharaoh alignment line (`0-0 1-2 ...`).
pub fn parse_pharaoh(line: &str) -> Result<Vec<(usize, usize)>> {
    line.split_whitespace()
        .map(|link| {
            let (s, t) = link
                .split_once('-')
                .ok_or_else(|| Error::Argument(format!("bad alignment link {link:?}")))?;
            let s = s
                .parse()
                .map_err(|_| Error::Argument(format!("bad alignment link {link:?}")))?;
            let t = t
                .parse()
                .map_err(|_| Error::Argument(format!("bad alignment link {link:?}")))?;
            Ok((s, t))
        })
        .collect()
}

pub fn format_pharaoh(links: &[(usize, usize)]) -> String {
    links
        .iter()
        .map(|(s, t)| format!("{s}-{t}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keeps pairs whose sides both have at most `max_len` tokens.
pub fn length_filter<I>(corpus: I, max_len: usize) -> impl Iterator<Item = SentencePair>
where
    I: IntoIterator<Item = SentencePair>,
{
    assert!(max_len >= 1, "max_len must be positive");
    corpus
        .into_iter()
        .filter(move |p| p.source.len() <= max_len && p.target.len() <= max_len)
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Decode {
        offset: e.utf8_error().valid_up_to(),
    })
}

/// One entry per line, without terminators.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .collect())
}

/// Reads line-aligned source/target (and optional Pharaoh alignment) files.
pub fn read_parallel(src: &Path, tgt: &Path, align: Option<&Path>) -> Result<Vec<SentencePair>> {
    let s = read_lines(src)?;
    let t = read_lines(tgt)?;
    if s.len() != t.len() {
        return Err(Error::Argument(format!(
            "{} has {} lines but {} has {}",
            src.display(),
            s.len(),
            tgt.display(),
            t.len()
        )));
    }
    let a = align.map(read_lines).transpose()?;
    if let Some(a) = &a {
        if a.len() != s.len() {
            return Err(Error::Argument(format!(
                "alignment file has {} lines, corpus has {}",
                a.len(),
                s.len()
            )));
        }
    }
    s.iter()
        .zip(&t)
        .enumerate()
        .map(|(i, (s, t))| {
            SentencePair::from_lines(s, t, a.as_ref().map(|a| a[i].as_str())).map_err(|e| {
                Error::Pair {
                    index: i,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<()> {
    let mut buf = String::new();
    for l in lines {
        buf.push_str(l.as_ref());
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}
