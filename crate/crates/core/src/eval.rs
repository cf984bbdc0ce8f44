//! Cased corpus BLEU and progress tables.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::text::{normalize, NormalizationRules};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BleuReport {
    /// Score on the 0..100 scale.
    pub bleu: f64,
    pub precisions: [f64; MAX_ORDER],
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

/// `min(1, exp(1 - r/c))`; zero for an empty hypothesis.
pub fn brevity_penalty(c: u64, r: u64) -> f64 {
    if c == 0 {
        0.0
    } else if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Stats {
    matches: [u64; MAX_ORDER],
    totals: [u64; MAX_ORDER],
    hyp_len: u64,
    ref_len: u64,
}

impl Stats {
    fn add(mut self, o: Stats) -> Stats {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        self
    }
}

fn ngram_counts<'s, 'a>(toks: &'s [&'a str], n: usize) -> HashMap<&'s [&'a str], u64> {
    let mut m = HashMap::new();
    for w in toks.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

fn segment_stats(hyp: &str, reference: &str) -> Stats {
    let h: Vec<&str> = hyp.split_whitespace().collect();
    let r: Vec<&str> = reference.split_whitespace().collect();
    let mut s = Stats {
        hyp_len: h.len() as u64,
        ref_len: r.len() as u64,
        ..Stats::default()
    };
    for n in 1..=MAX_ORDER {
        if h.len() < n {
            break;
        }
        let hc = ngram_counts(&h, n);
        let rc = ngram_counts(&r, n);
        s.totals[n - 1] = (h.len() + 1 - n) as u64;
        s.matches[n - 1] = hc
            .iter()
            .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
            .sum();
    }
    s
}

/// Corpus BLEU with clipped n-gram precisions up to 4, no smoothing, case
/// sensitive, one reference per segment. With `normalize_first`, both sides
/// pass through the default normalization rules before counting.
pub fn bleu<S: AsRef<str> + Sync>(
    hyps: &[S],
    refs: &[S],
    normalize_first: bool,
) -> Result<BleuReport> {
    let rules = normalize_first.then(NormalizationRules::default);
    bleu_with(hyps, refs, rules.as_ref())
}

pub fn bleu_with<S: AsRef<str> + Sync>(
    hyps: &[S],
    refs: &[S],
    rules: Option<&NormalizationRules>,
) -> Result<BleuReport> {
    if hyps.len() != refs.len() {
        return Err(Error::LineCount {
            left: hyps.len(),
            right: refs.len(),
        });
    }
    let stats = hyps
        .par_iter()
        .zip(refs.par_iter())
        .map(|(h, r)| match rules {
            Some(rules) => {
                segment_stats(&normalize(h.as_ref(), rules), &normalize(r.as_ref(), rules))
            }
            None => segment_stats(h.as_ref(), r.as_ref()),
        })
        .reduce(Stats::default, Stats::add);
    Ok(report(&stats))
}

fn report(s: &Stats) -> BleuReport {
    let precisions: [f64; MAX_ORDER] = std::array::from_fn(|n| match s.totals[n] {
        0 => 0.0,
        t => s.matches[n] as f64 / t as f64,
    });
    let bp = brevity_penalty(s.hyp_len, s.ref_len);
    let bleu = if precisions.iter().all(|&p| p > 0.0) {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        (bp * log_mean.exp() * 100.0).min(100.0)
    } else {
        0.0
    };
    BleuReport {
        bleu,
        precisions,
        matches: s.matches,
        totals: s.totals,
        brevity_penalty: bp,
        hyp_len: s.hyp_len,
        ref_len: s.ref_len,
    }
}

impl fmt::Display for BleuReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self
            .precisions
            .iter()
            .map(|p| format!("{:.1}", p * 100.0))
            .collect();
        let ratio = if self.ref_len == 0 {
            0.0
        } else {
            self.hyp_len as f64 / self.ref_len as f64
        };
        write!(
            f,
            "BLEU = {:.1}, p1/p2/p3/p4 = {}, BP = {:.3}, ratio = {:.3} ({}/{})",
            self.bleu,
            p.join("/"),
            self.brevity_penalty,
            ratio,
            self.hyp_len,
            self.ref_len
        )
    }
}

/// Rounds half away from zero to one decimal, in integer tenths. The small
/// slack absorbs binary representation error of values like `30.45`.
pub fn round_tenths(x: f64) -> i64 {
    let t = x * 10.0;
    (t.abs() + 0.5 + 1e-9).floor().copysign(t) as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AverageMode {
    /// Mean of the one-decimal values as displayed (reproduces published rows).
    Displayed,
    /// Mean of the underlying values.
    #[default]
    Unrounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgressTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    /// Per-row average in tenths.
    pub averages: Vec<i64>,
}

/// Builds a table with an appended average column. Rows must all have one
/// value per column.
pub fn progress_table(
    rows: &[(String, Vec<f64>)],
    columns: &[String],
    mode: AverageMode,
) -> Result<ProgressTable> {
    if columns.is_empty() {
        return Err(Error::Argument(
            "progress table needs at least one column".into(),
        ));
    }
    let mut averages = Vec::with_capacity(rows.len());
    for (label, vals) in rows {
        if vals.len() != columns.len() {
            return Err(Error::Argument(format!(
                "row {label:?} has {} values for {} columns",
                vals.len(),
                columns.len()
            )));
        }
        let avg = match mode {
            AverageMode::Displayed => {
                let sum: i64 = vals.iter().map(|&v| round_tenths(v)).sum();
                let n = vals.len() as i64;
                // half-up on the exact rational sum / n
                (2 * sum + n).div_euclid(2 * n)
            }
            AverageMode::Unrounded => round_tenths(vals.iter().sum::<f64>() / vals.len() as f64),
        };
        averages.push(avg);
    }
    Ok(ProgressTable {
        columns: columns.to_vec(),
        rows: rows.to_vec(),
        averages,
    })
}

pub fn progress_table_bleu(
    rows: &[(String, Vec<BleuReport>)],
    columns: &[String],
) -> Result<ProgressTable> {
    let vals: Vec<(String, Vec<f64>)> = rows
        .iter()
        .map(|(l, r)| (l.clone(), r.iter().map(|b| b.bleu).collect()))
        .collect();
    progress_table(&vals, columns, AverageMode::Unrounded)
}

fn tenths(t: i64) -> String {
    let sign = if t < 0 { "-" } else { "" };
    format!("{sign}{}.{}", t.abs() / 10, t.abs() % 10)
}

impl ProgressTable {
    pub fn average(&self, row: usize) -> f64 {
        self.averages[row] as f64 / 10.0
    }

    /// Plain-text rendering with right-aligned numeric columns.
    pub fn render(&self) -> String {
        let mut grid: Vec<Vec<String>> = Vec::new();
        let mut head = vec![String::new()];
        head.extend(self.columns.iter().cloned());
        head.push("Avg".into());
        grid.push(head);
        for ((label, vals), &avg) in self.rows.iter().zip(&self.averages) {
            let mut r = vec![label.clone()];
            r.extend(vals.iter().map(|&v| tenths(round_tenths(v))));
            r.push(tenths(avg));
            grid.push(r);
        }
        let ncol = grid[0].len();
        let widths: Vec<usize> = (0..ncol)
            .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &grid {
            let mut line = format!("{:<w$}", r[0], w = widths[0]);
            for c in 1..ncol {
                line.push_str(&format!("  {:>w$}", r[c], w = widths[c]));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ProgressTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// One cell of a report row: a literal score or a hypothesis/reference pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value(f64),
    Files { hyp: PathBuf, reference: PathBuf },
}

/// Report description:
///
/// ```text
/// columns = tune test1 test2
/// average = displayed        # or unrounded (default)
/// normalize = false
/// row Baseline = 27.5 30.6 30.4
/// row Adapted = out/h1.txt|ref1.txt out/h2.txt|ref2.txt out/h3.txt|ref3.txt
/// ```
///
/// Relative paths resolve against the directory of the report file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSpec {
    pub columns: Vec<String>,
    pub average: AverageMode,
    pub normalize: bool,
    pub rows: Vec<(String, Vec<Cell>)>,
}

impl ReportSpec {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut spec = ReportSpec {
            columns: Vec::new(),
            average: AverageMode::default(),
            normalize: false,
            rows: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse("report spec", i + 1, m);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(label) = key.strip_prefix("row ") {
                let cells = value
                    .split_whitespace()
                    .map(|c| match c.split_once('|') {
                        Some((h, r)) => Ok(Cell::Files {
                            hyp: base.join(h),
                            reference: base.join(r),
                        }),
                        None => c
                            .parse()
                            .map(Cell::Value)
                            .map_err(|_| err(format!("bad cell {c:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                spec.rows.push((label.trim().to_string(), cells));
                continue;
            }
            match key {
                "columns" => spec.columns = value.split_whitespace().map(String::from).collect(),
                "average" => {
                    spec.average = match value {
                        "displayed" => AverageMode::Displayed,
                        "unrounded" => AverageMode::Unrounded,
                        v => return Err(err(format!("unknown average mode {v:?}"))),
                    }
                }
                "normalize" => {
                    spec.normalize = value
                        .parse()
                        .map_err(|_| err(format!("expected true or false, got {value:?}")))?
                }
                k => return Err(err(format!("unknown key {k:?}"))),
            }
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&crate::text::read_text(path)?, base)
    }

    /// Scores file cells and builds the table.
    pub fn evaluate(&self) -> Result<ProgressTable> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for (label, cells) in &self.rows {
            let vals = cells
                .iter()
                .map(|c| match c {
                    Cell::Value(v) => Ok(*v),
                    Cell::Files { hyp, reference } => {
                        let h = crate::text::read_lines(hyp)?;
                        let r = crate::text::read_lines(reference)?;
                        Ok(bleu(&h, &r, self.normalize)?.bleu)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((label.clone(), vals));
        }
        progress_table(&rows, &self.columns, self.average)
    }
}
