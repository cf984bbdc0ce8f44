//! ARPA back-off model serialization.
//!
//! Entries are written sorted by their token strings so output is stable
//! across runs and across export/import cycles. By default numbers are
//! written with the shortest representation that parses back to the same
//! `f64`; a fixed decimal precision can be requested instead.

use std::fmt::Write as _;
use std::path::Path;

use super::model::NgramModel;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct ArpaOptions {
    /// Fixed number of decimals; `None` writes round-trip-exact values.
    pub precision: Option<usize>,
}

fn fmt_num(v: f64, opts: &ArpaOptions) -> String {
    match opts.precision {
        Some(p) => format!("{v:.p$}"),
        None => format!("{v}"),
    }
}

pub fn export_arpa(model: &NgramModel) -> String {
    export_arpa_with(model, &ArpaOptions::default())
}

pub fn export_arpa_with(model: &NgramModel, opts: &ArpaOptions) -> String {
    let order = model.order();
    let vocab = model.vocab();
    let mut out = String::from("\n\\data\\\n");
    for k in 1..=order {
        let _ = writeln!(out, "ngram {k}={}", model.len_order(k));
    }
    for k in 1..=order {
        let _ = write!(out, "\n\\{k}-grams:\n");
        let mut rows: Vec<(Vec<&str>, f64, f64)> = model
            .grams(k)
            .map(|(g, e)| {
                (
                    g.iter().map(|&w| vocab.token(w)).collect(),
                    e.logprob,
                    e.backoff,
                )
            })
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        for (toks, lp, bo) in rows {
            out.push_str(&fmt_num(lp, opts));
            out.push('\t');
            out.push_str(&toks.join(" "));
            if k < order {
                out.push('\t');
                out.push_str(&fmt_num(bo, opts));
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

pub fn write_arpa(model: &NgramModel, path: &Path) -> Result<()> {
    crate::text::write_atomic(path, export_arpa(model).as_bytes())
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::parse("ARPA", line, msg)
}

pub fn import_arpa(text: &str) -> Result<NgramModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    // header
    let mut declared: Vec<usize> = Vec::new();
    let mut seen_data = false;
    let mut section_line = None;
    for (no, line) in lines.by_ref() {
        let t = line.trim();
        if !seen_data {
            if t == "\\data\\" {
                seen_data = true;
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix("ngram ") {
            let (k, n) = rest
                .split_once('=')
                .ok_or_else(|| perr(no, "expected `ngram k=count`"))?;
            let k: usize = k.trim().parse().map_err(|_| perr(no, "bad order"))?;
            let n: usize = n.trim().parse().map_err(|_| perr(no, "bad count"))?;
            if k != declared.len() + 1 {
                return Err(perr(
                    no,
                    format!("expected order {}, found {k}", declared.len() + 1),
                ));
            }
            declared.push(n);
        } else {
            section_line = Some((no, t.to_string()));
            break;
        }
    }
    if !seen_data {
        return Err(perr(1, "missing \\data\\ header"));
    }
    if declared.is_empty() {
        return Err(perr(1, "no ngram counts declared"));
    }
    let order = declared.len();
    let mut model = NgramModel::new(order, Vocabulary::new());
    let mut current: Option<(usize, usize, usize)> = None; // (order, line, seen)
    let mut ended = false;

    let handle_header =
        |no: usize, t: &str, current: &mut Option<(usize, usize, usize)>| -> Result<bool> {
            if let Some((k, hdr, seen)) = *current {
                if seen != declared[k - 1] {
                    return Err(perr(
                        hdr,
                        format!(
                            "{k}-grams: header declares {} entries, found {seen}",
                            declared[k - 1]
                        ),
                    ));
                }
            }
            if t == "\\end\\" {
                if let Some((k, _, _)) = *current {
                    if k != order {
                        return Err(perr(
                            no,
                            format!("\\end\\ after {k}-grams, expected {order}"),
                        ));
                    }
                } else {
                    return Err(perr(no, "\\end\\ before any n-gram section"));
                }
                return Ok(true);
            }
            let k: usize = t
                .strip_prefix('\\')
                .and_then(|r| r.strip_suffix("-grams:"))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| perr(no, format!("unexpected line {t:?}")))?;
            let expect = current.map_or(1, |c| c.0 + 1);
            if k != expect {
                return Err(perr(
                    no,
                    format!("expected \\{expect}-grams:, found \\{k}-grams:"),
                ));
            }
            *current = Some((k, no, 0));
            Ok(false)
        };

    if let Some((no, t)) = section_line {
        ended = handle_header(no, &t, &mut current)?;
    }
    for (no, line) in lines {
        if ended {
            if !line.trim().is_empty() {
                return Err(perr(no, "content after \\end\\"));
            }
            continue;
        }
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('\\') {
            ended = handle_header(no, t, &mut current)?;
            continue;
        }
        let (k, _, seen) = current
            .as_mut()
            .ok_or_else(|| perr(no, "n-gram entry outside a section"))?;
        let k = *k;
        let mut fields = t.split_whitespace();
        let lp: f64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| perr(no, "bad log probability"))?;
        let rest: Vec<&str> = fields.collect();
        let (toks, bo) = match rest.len() {
            n if n == k => (&rest[..], 0.0),
            n if n == k + 1 => {
                let bo: f64 = rest[k]
                    .parse()
                    .map_err(|_| perr(no, "bad backoff weight"))?;
                (&rest[..k], bo)
            }
            n => return Err(perr(no, format!("expected {k} tokens, found {n} fields"))),
        };
        if k == order && rest.len() == k + 1 {
            return Err(perr(no, "backoff weight on highest-order n-gram"));
        }
        if !lp.is_finite() || lp > 0.0 || !bo.is_finite() {
            return Err(perr(no, "probability or backoff out of range"));
        }
        model.insert(toks, lp, bo);
        *seen += 1;
    }
    if !ended {
        return Err(perr(text.lines().count(), "missing \\end\\"));
    }
    Ok(model)
}

pub fn read_arpa(path: &Path) -> Result<NgramModel> {
    import_arpa(&crate::text::read_text(path)?)
}
