//! Config-driven runner chaining the toolkit's stages.
//!
//! Stages run in declared order. Each writes its artifacts under
//! `<out>/<NN>-<kind>/` through atomic renames, then the manifest
//! (`manifest.tsv`: `stage\tpath\tsha256`) is rewritten to include them. A
//! failing stage leaves the manifest listing only the stages that completed.

mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

pub use config::{CorpusDecl, OovMode, PipelineConfig, Role, Stage, DEFAULT_SEED};

use crate::bpe;
use crate::classes;
use crate::error::{Error, Result};
use crate::eval;
use crate::lm::{self, NgramModel, Vocabulary};
use crate::mixture::{self, EmOptions};
use crate::oov::{self, TranslitTable};
use crate::osm;
use crate::selection::{self, BilingualModels};
use crate::text::{self, NormalizationRules, SentencePair};

pub const MANIFEST: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub stage: String,
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.stage, e.path, e.sha256))
            .collect()
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                let f: Vec<&str> = l.split('\t').collect();
                match f[..] {
                    [stage, path, sha] => Ok(ManifestEntry {
                        stage: stage.into(),
                        path: path.into(),
                        sha256: sha.into(),
                    }),
                    _ => Err(Error::parse("manifest", i + 1, "expected three fields")),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Manifest { entries })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Corpus {
    name: String,
    role: Role,
    pairs: Vec<SentencePair>,
}

#[derive(Default)]
struct State {
    corpora: Vec<Corpus>,
    /// Output of the last select stage, used in place of the out-domain corpora.
    selected: Option<Vec<SentencePair>>,
    /// Target-side LMs from the last train-lm stage: (name, artifact path, model).
    lms: Vec<(String, String, NgramModel)>,
}

impl State {
    fn of_role(&self, role: Role) -> impl Iterator<Item = &Corpus> {
        self.corpora.iter().filter(move |c| c.role == role)
    }

    fn tune(&self) -> &Corpus {
        self.of_role(Role::Tune)
            .next()
            .expect("validated: one tune corpus")
    }

    fn concat(&self, role: Role) -> Vec<SentencePair> {
        self.of_role(role)
            .flat_map(|c| c.pairs.iter().cloned())
            .collect()
    }

    /// Training corpora: each in-domain corpus, then the selection (if any)
    /// or each out-domain corpus.
    fn training(&self) -> Vec<(String, Vec<SentencePair>)> {
        let mut out: Vec<(String, Vec<SentencePair>)> = self
            .of_role(Role::InDomain)
            .map(|c| (c.name.clone(), c.pairs.clone()))
            .collect();
        match &self.selected {
            Some(sel) => out.push(("selected".into(), sel.clone())),
            None => out.extend(
                self.of_role(Role::OutDomain)
                    .map(|c| (c.name.clone(), c.pairs.clone())),
            ),
        }
        out
    }
}

/// Artifact writer for one stage.
struct StageOut<'a> {
    root: &'a Path,
    dir: String,
    kind: &'static str,
    written: Vec<ManifestEntry>,
}

impl StageOut<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<String> {
        let rel = format!("{}/{name}", self.dir);
        text::write_atomic(&self.root.join(&rel), bytes)?;
        self.written.push(ManifestEntry {
            stage: self.kind.to_string(),
            path: rel.clone(),
            sha256: sha256_hex(bytes),
        });
        Ok(rel)
    }

    fn lines<S: AsRef<str>>(
        &mut self,
        name: &str,
        lines: impl IntoIterator<Item = S>,
    ) -> Result<String> {
        let mut s = String::new();
        for l in lines {
            s.push_str(l.as_ref());
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    fn pairs(&mut self, stem: &str, pairs: &[SentencePair]) -> Result<()> {
        self.lines(
            &format!("{stem}.src"),
            pairs.iter().map(SentencePair::source_line),
        )?;
        self.lines(
            &format!("{stem}.tgt"),
            pairs.iter().map(SentencePair::target_line),
        )?;
        if pairs.iter().all(|p| p.alignment.is_some()) && !pairs.is_empty() {
            self.lines(
                &format!("{stem}.align"),
                pairs
                    .iter()
                    .map(|p| text::format_pharaoh(p.alignment.as_deref().unwrap_or(&[]))),
            )?;
        }
        Ok(())
    }
}

/// Outcome of a run: the manifest of completed stages, and the error that
/// stopped the run, if any.
#[derive(Debug)]
pub struct RunReport {
    pub manifest: Manifest,
    pub error: Option<Error>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, Error::exit_code)
    }
}

/// Validates inputs, then runs every stage. Errors raised before the first
/// stage (missing inputs, unreadable corpora) are returned directly.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<RunReport> {
    cfg.validate()?;
    cfg.check_inputs()?;
    let mut state = State::default();
    for decl in &cfg.corpora {
        let pairs = text::read_parallel(&decl.src, &decl.tgt, decl.align.as_deref())?;
        state.corpora.push(Corpus {
            name: decl.name.clone(),
            role: decl.role,
            pairs,
        });
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut manifest = Manifest::default();
    text::write_atomic(&out.join(MANIFEST), b"")?;
    for (i, stage) in cfg.stages.iter().enumerate() {
        let started = Instant::now();
        let mut so = StageOut {
            root: out,
            dir: format!("{:02}-{}", i + 1, stage.kind()),
            kind: stage.kind(),
            written: Vec::new(),
        };
        if let Err(e) = run_stage(stage, cfg, &mut state, &mut so) {
            log::error!("stage {} failed: {e}", so.dir);
            return Ok(RunReport {
                manifest,
                error: Some(e),
            });
        }
        log::info!("stage {} done in {:.2?}", so.dir, started.elapsed());
        manifest.entries.extend(so.written);
        text::write_atomic(&out.join(MANIFEST), manifest.to_tsv().as_bytes())?;
    }
    Ok(RunReport {
        manifest,
        error: None,
    })
}

fn run_stage(
    stage: &Stage,
    cfg: &PipelineConfig,
    st: &mut State,
    so: &mut StageOut<'_>,
) -> Result<()> {
    match stage {
        Stage::Normalize { rules, tokenize } => {
            let rules = match rules {
                Some(p) => NormalizationRules::load(p)?,
                None => NormalizationRules::default(),
            };
            for c in &mut st.corpora {
                c.pairs = normalize_pairs(&c.pairs, &rules, *tokenize)?;
                so.pairs(&c.name, &c.pairs)?;
            }
        }
        Stage::Filter { max_len } => {
            let mut counts = String::new();
            for c in st
                .corpora
                .iter_mut()
                .filter(|c| matches!(c.role, Role::InDomain | Role::OutDomain))
            {
                let before = c.pairs.len();
                c.pairs = text::length_filter(std::mem::take(&mut c.pairs), *max_len).collect();
                counts.push_str(&format!("{}\t{before}\t{}\n", c.name, c.pairs.len()));
                so.pairs(&c.name, &c.pairs)?;
            }
            so.write("counts.tsv", counts.as_bytes())?;
        }
        Stage::Select {
            fraction,
            order,
            bilingual,
        } => {
            let indom = st.concat(Role::InDomain);
            let pool = st.concat(Role::OutDomain);
            let sample: Vec<SentencePair> =
                selection::sample_indices(pool.len(), indom.len(), cfg.seed)
                    .into_iter()
                    .map(|i| pool[i].clone())
                    .collect();
            let side = |pairs: &[SentencePair], src: bool| -> Vec<String> {
                pairs
                    .iter()
                    .map(|p| {
                        if src {
                            p.source_line()
                        } else {
                            p.target_line()
                        }
                    })
                    .collect()
            };
            // in-domain model, then an out-domain model over the in-domain vocabulary
            let side_lms = |src: bool| -> Result<(NgramModel, NgramModel)> {
                let in_lm = lm::train(side(&indom, src), *order)?;
                let out_lm = lm::train_closed(side(&sample, src), *order, in_lm.vocab())?;
                Ok((in_lm, out_lm))
            };
            let (in_src, out_src) = side_lms(true)?;
            let scores = if *bilingual {
                let (in_tgt, out_tgt) = side_lms(false)?;
                let models = BilingualModels {
                    in_src: &in_src,
                    out_src: &out_src,
                    in_tgt: &in_tgt,
                    out_tgt: &out_tgt,
                };
                selection::score_bilingual(&pool, &models)
            } else {
                let src: Vec<String> = pool.iter().map(SentencePair::source_line).collect();
                selection::score_monolingual(&src, &in_src, &out_src)
            };
            let chosen = selection::select_fraction(&scores, *fraction)?;
            so.write("scores.tsv", selection::format_scores(&scores).as_bytes())?;
            so.lines("indices.txt", chosen.iter().map(usize::to_string))?;
            let selected: Vec<SentencePair> = chosen.iter().map(|&i| pool[i].clone()).collect();
            so.pairs("selected", &selected)?;
            st.selected = Some(selected);
        }
        Stage::TrainLm { order } => {
            st.lms.clear();
            for (name, pairs) in st.training() {
                let model = lm::train(pairs.iter().map(SentencePair::target_line), *order)?;
                let path = so.write(&format!("{name}.arpa"), lm::export_arpa(&model).as_bytes())?;
                st.lms.push((name, path, model));
            }
        }
        Stage::Interpolate {
            tol,
            max_iter,
            merge,
        } => {
            let tune: Vec<String> = st
                .tune()
                .pairs
                .iter()
                .map(SentencePair::target_line)
                .collect();
            let components: Vec<NgramModel> = st.lms.iter().map(|l| l.2.clone()).collect();
            let opts = EmOptions {
                tol: *tol,
                max_iter: *max_iter,
            };
            let (weights, trace) = mixture::em_fit(&components, &tune, &opts)?;
            let names: Vec<&str> = st.lms.iter().map(|l| l.1.as_str()).collect();
            so.write(
                "weights.tsv",
                mixture::format_weights(&names, &weights).as_bytes(),
            )?;
            so.write("trace.tsv", format_trace(&trace.perplexities).as_bytes())?;
            if *merge {
                let mix = mixture::MixtureModel::new(components, weights)?;
                so.write(
                    "merged.arpa",
                    lm::export_arpa(&mixture::merge_static(&mix)?).as_bytes(),
                )?;
            }
        }
        Stage::Bpe { merges } => {
            let training = st.training();
            let all = || training.iter().flat_map(|(_, p)| p.iter());
            let src_model = bpe::bpe_learn(all().map(SentencePair::source_line), *merges)?;
            let tgt_model = bpe::bpe_learn(all().map(SentencePair::target_line), *merges)?;
            so.write("src.codes", src_model.to_codes().as_bytes())?;
            so.write("tgt.codes", tgt_model.to_codes().as_bytes())?;
            for c in &st.corpora {
                let src: Vec<String> = c.pairs.iter().map(SentencePair::source_line).collect();
                let tgt: Vec<String> = c.pairs.iter().map(SentencePair::target_line).collect();
                so.lines(&format!("{}.src", c.name), src_model.apply_lines(&src))?;
                so.lines(&format!("{}.tgt", c.name), tgt_model.apply_lines(&tgt))?;
            }
        }
        Stage::Osm { order } => {
            let mut models = Vec::new();
            let mut names = Vec::new();
            for (name, pairs) in st.training() {
                let ops = osm::osm_corpus(&pairs).map_err(|e| in_corpus(&name, e))?;
                so.lines(&format!("{name}.ops"), &ops)?;
                let model = lm::train(&ops, *order)?;
                names.push(so.write(
                    &format!("{name}.osm.arpa"),
                    lm::export_arpa(&model).as_bytes(),
                )?);
                models.push(model);
            }
            let tune = st.tune();
            let tune_ops = osm::osm_corpus(&tune.pairs).map_err(|e| in_corpus(&tune.name, e))?;
            so.lines("tune.ops", &tune_ops)?;
            if models.len() >= 2 {
                let (weights, trace) = mixture::em_fit(&models, &tune_ops, &EmOptions::default())?;
                so.write(
                    "weights.tsv",
                    mixture::format_weights(&names, &weights).as_bytes(),
                )?;
                so.write("trace.tsv", format_trace(&trace.perplexities).as_bytes())?;
            }
        }
        Stage::Classes {
            k,
            sweeps,
            order,
            corpus,
        } => {
            let source: Vec<String> = match corpus {
                Some(name) => st
                    .corpora
                    .iter()
                    .filter(|c| &c.name == name)
                    .flat_map(|c| c.pairs.iter().map(SentencePair::target_line))
                    .collect(),
                None => st
                    .concat(Role::InDomain)
                    .iter()
                    .map(SentencePair::target_line)
                    .collect(),
            };
            let (map, trace) = classes::cluster_exchange(&source, *k, *sweeps)?;
            so.write("classes.tsv", map.to_tsv().as_bytes())?;
            so.write("trace.tsv", format_trace(&trace.objective).as_bytes())?;
            for (name, pairs) in st.training() {
                let tgt: Vec<String> = pairs.iter().map(SentencePair::target_line).collect();
                let mapped = map.apply_lines(&tgt);
                so.lines(&format!("{name}.classes"), &mapped)?;
                let model = lm::train(&mapped, *order)?;
                so.write(
                    &format!("{name}.class.arpa"),
                    lm::export_arpa(&model).as_bytes(),
                )?;
            }
        }
        Stage::Oov { mode, table } => {
            let training = st.training();
            let vocab = Vocabulary::from_corpus(
                training
                    .iter()
                    .flat_map(|(_, p)| p.iter().map(SentencePair::source_line)),
            );
            so.write("vocab.tsv", vocab.to_tsv().as_bytes())?;
            let table = match table {
                Some(p) => TranslitTable::load(p)?,
                None => TranslitTable::default(),
            };
            for c in st
                .corpora
                .iter()
                .filter(|c| matches!(c.role, Role::Tune | Role::Test))
            {
                let src: Vec<String> = c.pairs.iter().map(SentencePair::source_line).collect();
                let found = oov::find_oov(&src, &vocab);
                so.lines(
                    &format!("{}.oov.tsv", c.name),
                    found.iter().map(|(w, n)| format!("{w}\t{n}")),
                )?;
                let resolved = match mode {
                    OovMode::Drop => oov::drop_oov(&src, &vocab),
                    OovMode::Translit => oov::transliterate_oov(&src, &vocab, &table).0,
                };
                so.lines(&format!("{}.src", c.name), &resolved)?;
            }
        }
        Stage::Bleu {
            hyp,
            reference,
            normalize,
        } => {
            let h = text::read_lines(hyp)?;
            let r = text::read_lines(reference)?;
            let report = eval::bleu(&h, &r, *normalize)?;
            so.write("bleu.txt", format!("{report}\n").as_bytes())?;
        }
    }
    Ok(())
}

fn in_corpus(name: &str, e: Error) -> Error {
    match e {
        Error::Pair { index, source } => {
            Error::Argument(format!("corpus {name:?}, pair #{index}: {source}"))
        }
        e => e,
    }
}

fn format_trace(values: &[f64]) -> String {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i}\t{v}\n"))
        .collect()
}

fn normalize_pairs(
    pairs: &[SentencePair],
    rules: &NormalizationRules,
    tokenize: bool,
) -> Result<Vec<SentencePair>> {
    let side = |toks: &[String]| -> Vec<String> {
        let line = text::normalize(&toks.join(" "), rules);
        if tokenize {
            text::tokenize(&line)
        } else {
            line.split_whitespace().map(String::from).collect()
        }
    };
    pairs
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let (s, t) = (side(&p.source), side(&p.target));
            if p.alignment.is_some() && (s.len() != p.source.len() || t.len() != p.target.len()) {
                return Err(Error::Pair {
                    index,
                    source: Box::new(Error::Argument(
                        "normalization changed the token count of an aligned pair".into(),
                    )),
                });
            }
            SentencePair::new(s, t, p.alignment.clone())
        })
        .collect()
}

/// Loads a config and runs it into `out` (or the config's own `output`).
pub fn run_config_file(path: &Path, out: Option<&Path>) -> Result<RunReport> {
    let cfg = PipelineConfig::load(path)?;
    let out: PathBuf = match (out, &cfg.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(Error::Config("no output directory given".into())),
    };
    run_pipeline(&cfg, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bleu_only_identity() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("h.txt"), "a b c d e\nf g h i\n").unwrap();
        let cfg =
            PipelineConfig::parse("[stage bleu]\nhyp = h.txt\nref = h.txt\n", dir.path()).unwrap();
        let report = run_pipeline(&cfg, &dir.path().join("out")).unwrap();
        assert_eq!(report.exit_code(), 0);
        let text = std::fs::read_to_string(dir.path().join("out/01-bleu/bleu.txt")).unwrap();
        assert!(text.starts_with("BLEU = 100.0"), "{text}");
        let on_disk = std::fs::read_to_string(dir.path().join("out").join(MANIFEST)).unwrap();
        assert_eq!(Manifest::parse_tsv(&on_disk).unwrap(), report.manifest);
    }

    #[test]
    fn missing_file_fails_before_stages() {
        let dir = tempfile::tempdir().unwrap();
        let cfg =
            PipelineConfig::parse("[stage bleu]\nhyp = nope.txt\nref = nope.txt\n", dir.path())
                .unwrap();
        let err = run_pipeline(&cfg, &dir.path().join("out")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn failed_stage_keeps_completed_entries() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("h.txt"), "a b\n").unwrap();
        std::fs::write(dir.path().join("r.txt"), "a b\nc d\n").unwrap();
        let cfg = PipelineConfig::parse(
            "[stage bleu]\nhyp = h.txt\nref = h.txt\n[stage bleu]\nhyp = h.txt\nref = r.txt\n",
            dir.path(),
        )
        .unwrap();
        let report = run_pipeline(&cfg, &dir.path().join("out")).unwrap();
        assert_eq!(report.exit_code(), 3);
        assert_eq!(report.manifest.entries.len(), 1);
        assert_eq!(report.manifest.entries[0].stage, "bleu");
    }
}
