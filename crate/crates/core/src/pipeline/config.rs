//! Pipeline configuration: `key = value` lines grouped under
//! `[corpus NAME]` and `[stage KIND]` headers.
//!
//! ```text
//! seed = 42
//! output = run/
//!
//! [corpus news]
//! role = in-domain
//! src = news.ar
//! tgt = news.en
//! align = news.align
//!
//! [stage select]
//! fraction = 0.10
//! ```
//!
//! Paths are relative to the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    InDomain,
    OutDomain,
    Tune,
    Test,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "in-domain" => Role::InDomain,
            "out-domain" => Role::OutDomain,
            "tune" => Role::Tune,
            "test" => Role::Test,
            _ => return Err(format!("unknown corpus role {s:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDecl {
    pub name: String,
    pub role: Role,
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub align: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OovMode {
    Drop,
    Translit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Normalize {
        rules: Option<PathBuf>,
        tokenize: bool,
    },
    Filter {
        max_len: usize,
    },
    Bpe {
        merges: usize,
    },
    Select {
        fraction: f64,
        order: usize,
        bilingual: bool,
    },
    TrainLm {
        order: usize,
    },
    Interpolate {
        tol: f64,
        max_iter: usize,
        merge: bool,
    },
    Osm {
        order: usize,
    },
    Classes {
        k: usize,
        sweeps: usize,
        order: usize,
        corpus: Option<String>,
    },
    Oov {
        mode: OovMode,
        table: Option<PathBuf>,
    },
    Bleu {
        hyp: PathBuf,
        reference: PathBuf,
        normalize: bool,
    },
}

impl Stage {
    pub fn kind(&self) -> &'static str {
        match self {
            Stage::Normalize { .. } => "normalize",
            Stage::Filter { .. } => "filter",
            Stage::Bpe { .. } => "bpe",
            Stage::Select { .. } => "select",
            Stage::TrainLm { .. } => "train-lm",
            Stage::Interpolate { .. } => "interpolate",
            Stage::Osm { .. } => "osm",
            Stage::Classes { .. } => "classes",
            Stage::Oov { .. } => "oov",
            Stage::Bleu { .. } => "bleu",
        }
    }

    fn needs_corpora(&self) -> bool {
        !matches!(self, Stage::Bleu { .. })
    }

    /// Input files the stage reads directly (besides corpora).
    fn inputs(&self) -> Vec<&Path> {
        match self {
            Stage::Normalize { rules: Some(p), .. } | Stage::Oov { table: Some(p), .. } => vec![p],
            Stage::Bleu { hyp, reference, .. } => vec![hyp, reference],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub corpora: Vec<CorpusDecl>,
    pub stages: Vec<Stage>,
}

fn cfg_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

/// Typed access to one section's keys; every key must be consumed.
struct Section {
    header_line: usize,
    keys: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.keys.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| cfg_err(line, format!("bad value {v:?} for `{key}`"))),
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn path(&mut self, key: &str, base: &Path) -> Option<PathBuf> {
        self.keys.remove(key).map(|(_, v)| base.join(v))
    }

    fn require_path(&mut self, key: &str, base: &Path) -> Result<PathBuf> {
        self.path(key, base)
            .ok_or_else(|| cfg_err(self.header_line, format!("missing `{key}`")))
    }

    fn positive(&mut self, key: &str, default: usize) -> Result<usize> {
        let line = self.keys.get(key).map_or(self.header_line, |k| k.0);
        let v = self.or(key, default)?;
        if v == 0 {
            return Err(cfg_err(line, format!("`{key}` must be at least 1")));
        }
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        match self.keys.into_iter().next() {
            Some((k, (line, _))) => Err(cfg_err(line, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

enum Header {
    Global,
    Corpus(String),
    Stage(String),
}

impl PipelineConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut sections: Vec<(Header, Section)> = vec![(
            Header::Global,
            Section {
                header_line: 0,
                keys: BTreeMap::new(),
            },
        )];
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('[') {
                let h = h
                    .strip_suffix(']')
                    .ok_or_else(|| cfg_err(no, "unterminated section header"))?;
                let (kind, name) = h.split_once(' ').unwrap_or((h, ""));
                let name = name.trim().to_string();
                let header = match kind {
                    "corpus" if !name.is_empty() => Header::Corpus(name),
                    "stage" if !name.is_empty() => Header::Stage(name),
                    _ => return Err(cfg_err(no, format!("bad section header [{h}]"))),
                };
                sections.push((
                    header,
                    Section {
                        header_line: no,
                        keys: BTreeMap::new(),
                    },
                ));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(no, "expected `key = value`"))?;
            let section = &mut sections.last_mut().expect("global section").1;
            if section
                .keys
                .insert(k.trim().to_string(), (no, v.trim().to_string()))
                .is_some()
            {
                return Err(cfg_err(no, format!("duplicate key `{}`", k.trim())));
            }
        }

        let mut cfg = PipelineConfig {
            seed: DEFAULT_SEED,
            output: None,
            corpora: Vec::new(),
            stages: Vec::new(),
        };
        for (header, mut s) in sections {
            match header {
                Header::Global => {
                    cfg.seed = s.or("seed", DEFAULT_SEED)?;
                    cfg.output = s.path("output", base);
                }
                Header::Corpus(name) => {
                    if cfg.corpora.iter().any(|c| c.name == name) {
                        return Err(cfg_err(
                            s.header_line,
                            format!("corpus {name:?} declared twice"),
                        ));
                    }
                    let role = s
                        .take::<String>("role")?
                        .ok_or_else(|| cfg_err(s.header_line, "missing `role`"))?;
                    let role = role.parse().map_err(|e| cfg_err(s.header_line, e))?;
                    cfg.corpora.push(CorpusDecl {
                        name,
                        role,
                        src: s.require_path("src", base)?,
                        tgt: s.require_path("tgt", base)?,
                        align: s.path("align", base),
                    });
                }
                Header::Stage(kind) => {
                    let line = s.header_line;
                    let stage = match kind.as_str() {
                        "normalize" => Stage::Normalize {
                            rules: s.path("rules", base),
                            tokenize: s.or("tokenize", true)?,
                        },
                        "filter" => Stage::Filter {
                            max_len: s.positive("max_len", 80)?,
                        },
                        "bpe" => Stage::Bpe {
                            merges: s.or("merges", crate::bpe::DEFAULT_MERGES)?,
                        },
                        "select" => {
                            let fraction: f64 = s.or("fraction", 0.10)?;
                            if !(fraction > 0.0 && fraction <= 1.0) {
                                return Err(cfg_err(
                                    line,
                                    format!("fraction {fraction} outside (0, 1]"),
                                ));
                            }
                            Stage::Select {
                                fraction,
                                order: s.positive("order", crate::lm::DEFAULT_ORDER)?,
                                bilingual: s.or("bilingual", true)?,
                            }
                        }
                        "train-lm" => Stage::TrainLm {
                            order: s.positive("order", crate::lm::DEFAULT_ORDER)?,
                        },
                        "interpolate" => {
                            let tol: f64 = s.or("tol", crate::mixture::DEFAULT_TOL)?;
                            if tol.is_nan() || tol < 0.0 {
                                return Err(cfg_err(line, "tol must be non-negative"));
                            }
                            Stage::Interpolate {
                                tol,
                                max_iter: s
                                    .positive("max_iter", crate::mixture::DEFAULT_MAX_ITER)?,
                                merge: s.or("merge", true)?,
                            }
                        }
                        "osm" => Stage::Osm {
                            order: s.positive("order", crate::lm::DEFAULT_ORDER)?,
                        },
                        "classes" => Stage::Classes {
                            k: s.positive("k", crate::classes::DEFAULT_CLASSES)?,
                            sweeps: s.or("sweeps", crate::classes::DEFAULT_SWEEPS)?,
                            order: s.positive("order", crate::lm::DEFAULT_ORDER)?,
                            corpus: s.take("corpus")?,
                        },
                        "oov" => {
                            let mode = match s.take::<String>("mode")?.as_deref() {
                                None | Some("drop") => OovMode::Drop,
                                Some("translit") => OovMode::Translit,
                                Some(m) => {
                                    return Err(cfg_err(line, format!("unknown oov mode {m:?}")))
                                }
                            };
                            Stage::Oov {
                                mode,
                                table: s.path("table", base),
                            }
                        }
                        "bleu" => Stage::Bleu {
                            hyp: s.require_path("hyp", base)?,
                            reference: s.require_path("ref", base)?,
                            normalize: s.or("normalize", false)?,
                        },
                        k => return Err(cfg_err(line, format!("unknown stage kind {k:?}"))),
                    };
                    cfg.stages.push(stage);
                }
            }
            s.finish()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::text::read_text(path).map_err(|e| Error::Config(e.to_string()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn corpora_with(&self, role: Role) -> impl Iterator<Item = &CorpusDecl> {
        self.corpora.iter().filter(move |c| c.role == role)
    }

    /// Structural checks. Corpus invariants only apply when some stage
    /// consumes corpora, so a scoring-only config needs no corpora.
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("no stages declared".into()));
        }
        if self.stages.iter().any(Stage::needs_corpora) {
            let tunes = self.corpora_with(Role::Tune).count();
            if tunes != 1 {
                return Err(Error::Config(format!(
                    "exactly one tune corpus required, found {tunes}"
                )));
            }
            if self.corpora_with(Role::InDomain).next().is_none() {
                return Err(Error::Config(
                    "at least one in-domain corpus required".into(),
                ));
            }
        }
        let has_out = self.corpora_with(Role::OutDomain).next().is_some();
        let mut trained = false;
        for st in &self.stages {
            match st {
                Stage::Select { .. } if !has_out => {
                    return Err(Error::Config(
                        "select stage needs an out-domain corpus".into(),
                    ))
                }
                Stage::TrainLm { .. } => trained = true,
                Stage::Interpolate { .. } if !trained => {
                    return Err(Error::Config(
                        "interpolate stage needs a preceding train-lm stage".into(),
                    ))
                }
                Stage::Classes {
                    corpus: Some(c), ..
                } if !self.corpora.iter().any(|d| &d.name == c) => {
                    return Err(Error::Config(format!(
                        "classes stage names unknown corpus {c:?}"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Every input file referenced by the config, corpora first.
    pub fn input_files(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        for c in &self.corpora {
            out.push(c.src.as_path());
            out.push(c.tgt.as_path());
            if let Some(a) = &c.align {
                out.push(a.as_path());
            }
        }
        for s in &self.stages {
            out.extend(s.inputs());
        }
        out
    }

    /// Fails with a config error naming the first missing input.
    pub fn check_inputs(&self) -> Result<()> {
        match self.input_files().into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(Error::Config(format!(
                "input file {} does not exist",
                p.display()
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "seed = 7\n\n[corpus a]\nrole = in-domain\nsrc = a.src\ntgt = a.tgt\n\n[corpus t]\nrole = tune\nsrc = t.src\ntgt = t.tgt\n\n[stage filter]\nmax_len = 40\n[stage train-lm]\norder = 3\n";

    #[test]
    fn parses_sections() {
        let c = PipelineConfig::parse(FULL, Path::new("/d")).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.corpora.len(), 2);
        assert_eq!(c.corpora[0].src, PathBuf::from("/d/a.src"));
        assert_eq!(
            c.stages,
            vec![Stage::Filter { max_len: 40 }, Stage::TrainLm { order: 3 }]
        );
    }

    #[test]
    fn bleu_only_needs_no_corpora() {
        let c = PipelineConfig::parse("[stage bleu]\nhyp = h\nref = r\n", Path::new(".")).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "[stage filter]\n",
            "[stage bogus]\n",
            "[stage bleu]\nhyp = h\nref = r\ncolour = red\n",
            &FULL.replace("role = tune", "role = test"),
            &FULL.replace("max_len = 40", "max_len = 0"),
            &format!("{FULL}[stage select]\nfraction = 2\n"),
            &format!("{FULL}[stage select]\n"),
            "[stage interpolate]\n",
        ];
        for b in bad {
            let e = PipelineConfig::parse(b, Path::new(".")).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{b}");
        }
    }

    #[test]
    fn missing_inputs_detected() {
        let c = PipelineConfig::parse(
            "[stage bleu]\nhyp = /nonexistent/h\nref = /nonexistent/r\n",
            Path::new("."),
        )
        .unwrap();
        assert!(matches!(c.check_inputs(), Err(Error::Config(_))));
    }
}
