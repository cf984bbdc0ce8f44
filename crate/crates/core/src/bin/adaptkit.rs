use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use adaptkit::bpe::{self, BpeModel};
use adaptkit::classes::{self, ClassMap};
use adaptkit::eval::{self, ReportSpec};
use adaptkit::lm::{self, Vocabulary};
use adaptkit::mixture::{self, EmOptions, MixtureModel};
use adaptkit::oov::{self, TranslitTable};
use adaptkit::osm;
use adaptkit::pipeline;
use adaptkit::selection::{self, BilingualModels};
use adaptkit::text::{self, NormalizationRules, SentencePair};
use adaptkit::{Error, Result};

#[derive(Parser)]
#[command(
    name = "adaptkit",
    version,
    about = "Corpus domain-adaptation toolkit for MT pipelines"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Drop,
    Translit,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalize stdin to stdout.
    Normalize {
        /// Rule table TSV; the built-in Arabic table when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Tokenize stdin to stdout.
    Tokenize,
    /// Drop pairs with a side longer than --max-len tokens.
    Filter {
        #[arg(long, default_value_t = 80)]
        max_len: usize,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        align: Option<PathBuf>,
        /// Writes <prefix>.src, <prefix>.tgt (and <prefix>.align).
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Train a modified Kneser-Ney model.
    TrainLm {
        #[arg(long, default_value_t = lm::DEFAULT_ORDER)]
        order: usize,
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        arpa: PathBuf,
        /// Fixed decimals in the ARPA output instead of exact values.
        #[arg(long)]
        precision: Option<usize>,
        /// Train over the vocabulary of this model; other words become `<unk>`.
        /// Use the in-domain model when training an out-of-domain model for mml-score.
        #[arg(long)]
        vocab_lm: Option<PathBuf>,
    },
    /// Perplexity of a model on a text.
    Ppl {
        #[arg(long)]
        arpa: PathBuf,
        #[arg(long)]
        text: PathBuf,
    },
    /// Fit interpolation weights by EM on a tune set.
    Interpolate {
        #[arg(long = "arpa", required = true, num_args = 1)]
        arpas: Vec<PathBuf>,
        #[arg(long)]
        tune: PathBuf,
        #[arg(long)]
        out_weights: PathBuf,
        #[arg(long)]
        merge_arpa: Option<PathBuf>,
        #[arg(long, default_value_t = mixture::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = mixture::DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Cross-entropy difference scores of a (bi)text.
    MmlScore {
        #[arg(long)]
        in_src_lm: PathBuf,
        #[arg(long)]
        out_src_lm: PathBuf,
        #[arg(long, requires = "out_tgt_lm")]
        in_tgt_lm: Option<PathBuf>,
        #[arg(long, requires = "in_tgt_lm")]
        out_tgt_lm: Option<PathBuf>,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select the lowest-scoring fraction.
    MmlSelect {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn BPE merges.
    BpeLearn {
        #[arg(long, default_value_t = bpe::DEFAULT_MERGES)]
        merges: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment stdin with learned merges.
    BpeApply {
        #[arg(long)]
        codes: PathBuf,
    },
    /// Remove BPE continuation markers from stdin.
    BpeUndo,
    /// Encode aligned bitext as operation sequences.
    OsmEncode {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        align: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster words with the exchange algorithm.
    Classes {
        #[arg(long, default_value_t = classes::DEFAULT_CLASSES)]
        k: usize,
        #[arg(long, default_value_t = classes::DEFAULT_SWEEPS)]
        sweeps: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map stdin words to class ids.
    ClassApply {
        #[arg(long)]
        map: PathBuf,
    },
    /// Drop or transliterate out-of-vocabulary tokens of stdin.
    Oov {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Corpus BLEU.
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        normalize: bool,
    },
    /// Render a progress table.
    Report {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run a config-driven pipeline.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn stdin_lines() -> Result<Vec<String>> {
    let mut buf = Vec::new();
    io::stdin()
        .lock()
        .read_to_end(&mut buf)
        .map_err(|e| Error::io("<stdin>", e))?;
    let text = String::from_utf8(buf).map_err(|e| Error::Decode {
        offset: e.utf8_error().valid_up_to(),
    })?;
    Ok(text.lines().map(String::from).collect())
}

fn emit<S: AsRef<str>>(lines: &[S]) -> Result<()> {
    let mut out = io::BufWriter::new(io::stdout().lock());
    for l in lines {
        writeln!(out, "{}", l.as_ref()).map_err(|e| Error::io("<stdout>", e))?;
    }
    out.flush().map_err(|e| Error::io("<stdout>", e))
}

fn side(pairs: &[SentencePair], src: bool) -> Vec<String> {
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
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn run(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Normalize { rules } => {
            let rules = match rules {
                Some(p) => NormalizationRules::load(&p)?,
                None => NormalizationRules::default(),
            };
            let mut buf = Vec::new();
            io::stdin()
                .lock()
                .read_to_end(&mut buf)
                .map_err(|e| Error::io("<stdin>", e))?;
            let out = text::normalize_bytes(&buf, &rules)?;
            io::stdout()
                .write_all(out.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
        Cmd::Tokenize => {
            let lines: Vec<String> = stdin_lines()?
                .iter()
                .map(|l| text::tokenize_line(l))
                .collect();
            emit(&lines)?;
        }
        Cmd::Filter {
            max_len,
            src,
            tgt,
            align,
            out_prefix,
        } => {
            if max_len == 0 {
                return Err(Error::Argument("--max-len must be at least 1".into()));
            }
            let pairs = text::read_parallel(&src, &tgt, align.as_deref())?;
            let before = pairs.len();
            let kept: Vec<SentencePair> = text::length_filter(pairs, max_len).collect();
            text::write_lines(&with_ext(&out_prefix, ".src"), &side(&kept, true))?;
            text::write_lines(&with_ext(&out_prefix, ".tgt"), &side(&kept, false))?;
            if align.is_some() {
                let a: Vec<String> = kept
                    .iter()
                    .map(|p| text::format_pharaoh(p.alignment.as_deref().unwrap_or(&[])))
                    .collect();
                text::write_lines(&with_ext(&out_prefix, ".align"), &a)?;
            }
            eprintln!("kept {} of {before} pairs", kept.len());
        }
        Cmd::TrainLm {
            order,
            text: input,
            arpa,
            precision,
            vocab_lm,
        } => {
            let lines = text::read_lines(&input)?;
            let model = match vocab_lm {
                Some(p) => lm::train_closed(&lines, order, lm::read_arpa(&p)?.vocab())?,
                None => lm::train(&lines, order)?,
            };
            let opts = lm::ArpaOptions { precision };
            text::write_atomic(&arpa, lm::export_arpa_with(&model, &opts).as_bytes())?;
        }
        Cmd::Ppl { arpa, text: input } => {
            let model = lm::read_arpa(&arpa)?;
            let p = model.perplexity(text::read_lines(&input)?)?;
            println!("ppl={} tokens={} oov={}", p.ppl, p.events, p.oov);
        }
        Cmd::Interpolate {
            arpas,
            tune,
            out_weights,
            merge_arpa,
            tol,
            max_iter,
        } => {
            let models = arpas
                .iter()
                .map(|p| lm::read_arpa(p))
                .collect::<Result<Vec<_>>>()?;
            let opts = EmOptions { tol, max_iter };
            let (mix, trace) = MixtureModel::fit(models, text::read_lines(&tune)?, &opts)?;
            let names: Vec<String> = arpas.iter().map(|p| p.display().to_string()).collect();
            text::write_atomic(
                &out_weights,
                mixture::format_weights(&names, mix.weights()).as_bytes(),
            )?;
            eprintln!(
                "EM: {} iterations, tune ppl {:.4} -> {:.4}",
                trace.iterations,
                trace.perplexities[0],
                trace.perplexities.last().copied().unwrap_or(f64::NAN)
            );
            if let Some(path) = merge_arpa {
                text::write_atomic(
                    &path,
                    lm::export_arpa(&mixture::merge_static(&mix)?).as_bytes(),
                )?;
            }
        }
        Cmd::MmlScore {
            in_src_lm,
            out_src_lm,
            in_tgt_lm,
            out_tgt_lm,
            src,
            tgt,
            out,
        } => {
            let in_src = lm::read_arpa(&in_src_lm)?;
            let out_src = lm::read_arpa(&out_src_lm)?;
            let scores = match (in_tgt_lm, out_tgt_lm) {
                (Some(it), Some(ot)) => {
                    let tgt =
                        tgt.ok_or_else(|| Error::Argument("bilingual scoring needs --tgt".into()))?;
                    let pairs = text::read_parallel(&src, &tgt, None)?;
                    let (in_tgt, out_tgt) = (lm::read_arpa(&it)?, lm::read_arpa(&ot)?);
                    let models = BilingualModels {
                        in_src: &in_src,
                        out_src: &out_src,
                        in_tgt: &in_tgt,
                        out_tgt: &out_tgt,
                    };
                    selection::score_bilingual(&pairs, &models)
                }
                _ => selection::score_monolingual(&text::read_lines(&src)?, &in_src, &out_src),
            };
            text::write_atomic(&out, selection::format_scores(&scores).as_bytes())?;
        }
        Cmd::MmlSelect {
            scores,
            fraction,
            out,
        } => {
            let scores = selection::read_scores(&scores)?;
            let chosen = selection::select_fraction(&scores, fraction)?;
            let lines: Vec<String> = chosen.iter().map(usize::to_string).collect();
            text::write_lines(&out, &lines)?;
        }
        Cmd::BpeLearn { merges, input, out } => {
            let model = bpe::bpe_learn(text::read_lines(&input)?, merges)?;
            text::write_atomic(&out, model.to_codes().as_bytes())?;
        }
        Cmd::BpeApply { codes } => {
            let model = BpeModel::load(&codes)?;
            emit(&model.apply_lines(&stdin_lines()?))?;
        }
        Cmd::BpeUndo => {
            let lines: Vec<String> = stdin_lines()?.iter().map(|l| bpe::bpe_undo(l)).collect();
            emit(&lines)?;
        }
        Cmd::OsmEncode {
            src,
            tgt,
            align,
            out,
        } => {
            let pairs = text::read_parallel(&src, &tgt, Some(&align))?;
            text::write_lines(&out, &osm::osm_corpus(&pairs)?)?;
        }
        Cmd::Classes {
            k,
            sweeps,
            input,
            out,
        } => {
            let (map, trace) = classes::cluster_exchange(text::read_lines(&input)?, k, sweeps)?;
            text::write_atomic(&out, map.to_tsv().as_bytes())?;
            eprintln!(
                "{} sweeps, {} moves, objective {:.4}",
                trace.sweeps,
                trace.moves,
                trace.objective.last().copied().unwrap_or(f64::NAN)
            );
        }
        Cmd::ClassApply { map } => {
            let map = ClassMap::load(&map)?;
            emit(&map.apply_lines(&stdin_lines()?))?;
        }
        Cmd::Oov { vocab, mode, table } => {
            let vocab = Vocabulary::load(&vocab)?;
            let lines = stdin_lines()?;
            let out = match mode {
                Mode::Drop => oov::drop_oov(&lines, &vocab),
                Mode::Translit => {
                    let table = match table {
                        Some(p) => TranslitTable::load(&p)?,
                        None => TranslitTable::default(),
                    };
                    let (out, summary) = oov::transliterate_oov(&lines, &vocab, &table);
                    if !summary.unmapped.is_empty() {
                        eprintln!(
                            "{} characters without a table entry",
                            summary.unmapped.values().sum::<u64>()
                        );
                    }
                    out
                }
            };
            emit(&out)?;
        }
        Cmd::Bleu {
            hyp,
            reference,
            normalize,
        } => {
            let report = eval::bleu(
                &text::read_lines(&hyp)?,
                &text::read_lines(&reference)?,
                normalize,
            )?;
            println!("{report}");
        }
        Cmd::Report { spec } => {
            print!("{}", ReportSpec::load(&spec)?.evaluate()?.render());
        }
        Cmd::Pipeline { config, out } => {
            let report = pipeline::run_config_file(&config, out.as_deref())?;
            eprintln!("{} artifacts", report.manifest.entries.len());
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            return Ok(report.exit_code());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli.cmd) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
