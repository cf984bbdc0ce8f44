//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use adaptkit::bpe::{self, bpe_learn, bpe_learn_from_counts, bpe_undo};
use adaptkit::classes::cluster_exchange;
use adaptkit::eval::{bleu, brevity_penalty, progress_table, AverageMode};
use adaptkit::lm::{
    self, export_arpa, export_arpa_with, import_arpa, ArpaOptions, NgramModel, WordId,
};
use adaptkit::mixture::{em_fit, EmOptions};
use adaptkit::osm::{functionalize, osm_decode, osm_encode, Operation};
use adaptkit::pipeline::{run_config_file, Manifest};
use adaptkit::selection::{
    score_bilingual, select_fraction, select_lowest, BilingualModels, FRACTION_GRID,
};
use adaptkit::synth::{self, rng, PlantedConfig};
use adaptkit::text::SentencePair;

use common::{best_two_partition, class_objective, grid_search, ArpaWalker};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn within_time(t: Instant, limit: Duration) -> Result<Duration, String> {
    let e = t.elapsed();
    if e > limit {
        Err(format!("took {e:.1?}, limit {limit:?}"))
    } else {
        Ok(e)
    }
}

fn fixture_lines() -> Vec<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/lm_1k.txt");
    adaptkit::text::read_lines(&path).expect("bundled fixture")
}

fn kn_normalization() -> Outcome {
    let t = Instant::now();
    let model = lm::train(fixture_lines(), 5).map_err(|e| e.to_string())?;
    let space = model.event_space();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 1..=5 {
        let mut contexts: Vec<Vec<WordId>> =
            model.grams(k).map(|(g, _)| g[..k - 1].to_vec()).collect();
        contexts.sort_unstable();
        contexts.dedup();
        contexts.shuffle(&mut r);
        for ctx in contexts.iter().take(100) {
            let sum: f64 = space
                .iter()
                .map(|&w| 10f64.powf(model.logprob_ids(w, ctx)))
                .sum();
            worst = worst.max((sum - 1.0).abs());
            checked += 1;
            ensure!(
                (sum - 1.0).abs() <= 1e-6,
                "order {k} context {ctx:?} sums to {sum}"
            );
        }
    }
    let e = within_time(t, Duration::from_secs(10))?;
    Ok(format!(
        "{checked} contexts, max |sum-1| = {worst:.1e}, {e:.2?}"
    ))
}

fn arpa_oracle() -> Outcome {
    let model = lm::train(fixture_lines(), 5).map_err(|e| e.to_string())?;
    let held_out = synth::zipf_corpus(300, 450, 77);
    let ppl = model.perplexity(&held_out).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();

    let (walk, events) = ArpaWalker::parse(&export_arpa(&model)).perplexity(&held_out);
    ensure!(
        events == ppl.events,
        "event counts differ: {events} vs {}",
        ppl.events
    );
    let pre = rel(walk, ppl.ppl);
    ensure!(
        pre <= 1e-9,
        "walker {walk} vs model {} (rel {pre:.2e})",
        ppl.ppl
    );

    let text6 = export_arpa_with(&model, &ArpaOptions { precision: Some(6) });
    let reloaded = import_arpa(&text6).map_err(|e| e.to_string())?;
    let ppl6 = reloaded
        .perplexity(&held_out)
        .map_err(|e| e.to_string())?
        .ppl;
    let (walk6, _) = ArpaWalker::parse(&text6).perplexity(&held_out);
    let post = rel(ppl6, ppl.ppl).max(rel(walk6, ppl.ppl));
    ensure!(
        post <= 1e-3,
        "round-tripped perplexity {ppl6} vs {} (rel {post:.2e})",
        ppl.ppl
    );
    Ok(format!(
        "ppl {:.4} over {} events, {} OOV; pre-export rel {pre:.1e}, 6-decimal round trip rel {post:.1e}",
        ppl.ppl, ppl.events, ppl.oov
    ))
}

fn permuted(lines: &[String], vocab: usize) -> Vec<String> {
    lines
        .iter()
        .map(|l| {
            l.split_whitespace()
                .map(|w| {
                    let i: usize = w[1..].parse().unwrap();
                    format!("w{}", (i * 37 + 11) % vocab)
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn em_interpolation() -> Outcome {
    let t = Instant::now();
    // (a) monotone tune perplexity
    let mut iters = 0;
    for f in 0..20u64 {
        let mut r = rng(100 + f);
        let n = r.gen_range(2..=3);
        let order = r.gen_range(1..=3);
        let comps: Vec<NgramModel> = (0..n)
            .map(|c| {
                let v = r.gen_range(30..120);
                lm::train(synth::zipf_corpus(200, v, f * 10 + c as u64), order).unwrap()
            })
            .collect();
        let tune = synth::zipf_corpus(60, 100, 1000 + f);
        let (_, trace) = em_fit(&comps, &tune, &EmOptions::default()).map_err(|e| e.to_string())?;
        iters += trace.iterations;
        for w in trace.perplexities.windows(2) {
            ensure!(
                w[1] <= w[0],
                "fixture {f}: perplexity rose {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    // (b) recovery of known weights
    let vocab = 150;
    let base = synth::zipf_corpus(3000, vocab, 5);
    let a = lm::train(&base, 3).map_err(|e| e.to_string())?;
    let b = lm::train(permuted(&synth::zipf_corpus(3000, vocab, 6), vocab), 3)
        .map_err(|e| e.to_string())?;
    let comps = [a, b];
    let tune = synth::sample_mixture(&comps, &[0.7, 0.3], 50_000, 9);
    let (w, trace) = em_fit(&comps, &tune, &EmOptions::default()).map_err(|e| e.to_string())?;
    let p: Vec<Vec<f64>> = comps
        .iter()
        .map(|m| {
            tune.iter()
                .flat_map(|l| m.sentence_logprobs(l))
                .map(|lp| 10f64.powf(lp))
                .collect()
        })
        .collect();
    let grid = grid_search(&p[0], &p[1]);
    ensure!(
        (w[0] - 0.7).abs() <= 0.05,
        "EM weight {:.4} not within 0.05 of 0.7",
        w[0]
    );
    ensure!(
        (grid - 0.7).abs() <= 0.05,
        "grid optimum {grid} not within 0.05 of 0.7"
    );
    ensure!(
        (w[0] - grid).abs() <= 0.01,
        "EM weight {:.4} vs grid optimum {grid}",
        w[0]
    );
    let e = within_time(t, Duration::from_secs(30))?;
    Ok(format!(
        "20 fixtures monotone ({iters} iterations); lambda = ({:.4}, {:.4}) after {} iterations on {} events, grid optimum {grid:.2}, {e:.1?}",
        w[0],
        w[1],
        trace.iterations,
        p[0].len()
    ))
}

fn mml_planted() -> Outcome {
    let data = synth::planted_bitext(&PlantedConfig::default(), 42);
    let sample = &data.mixed_sample;
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
    let models_for = |src: bool| {
        let in_lm = lm::train(side(&data.in_domain, src), 5).unwrap();
        let out_lm = lm::train_closed(side(sample, src), 5, in_lm.vocab()).unwrap();
        (in_lm, out_lm)
    };
    let (in_src, out_src) = models_for(true);
    let (in_tgt, out_tgt) = models_for(false);
    let models = BilingualModels {
        in_src: &in_src,
        out_src: &out_src,
        in_tgt: &in_tgt,
        out_tgt: &out_tgt,
    };
    let scores = score_bilingual(&data.pool, &models);
    let chosen = select_fraction(&scores, 0.10).map_err(|e| e.to_string())?;
    let planted: std::collections::HashSet<usize> = data.planted.iter().copied().collect();
    let hits = chosen.iter().filter(|i| planted.contains(i)).count();
    let recall = hits as f64 / planted.len() as f64;
    ensure!(recall >= 0.90, "recall {recall:.3} below 0.90");

    let mut prev: Option<Vec<usize>> = None;
    for &f in &FRACTION_GRID {
        let sel = select_fraction(&scores, f).map_err(|e| e.to_string())?;
        if let Some(p) = &prev {
            let set: std::collections::HashSet<_> = sel.iter().collect();
            ensure!(
                p.iter().all(|i| set.contains(i)),
                "selection at {f} does not contain the smaller one"
            );
        }
        prev = Some(sel);
    }
    Ok(format!(
        "recall {recall:.3} ({hits}/{}) at 10%; nested over {FRACTION_GRID:?}",
        planted.len()
    ))
}

fn selection_arithmetic() -> Outcome {
    let n = 18_500_000usize;
    let mut r = rng(3);
    let scores: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
    let t = Instant::now();
    let chosen = select_lowest(&scores, 0.0375).map_err(|e| e.to_string())?;
    let e = t.elapsed();
    ensure!(chosen.len() == 693_750, "selected {} indices", chosen.len());
    ensure!(
        chosen.windows(2).all(|w| w[0] < w[1]),
        "indices not in corpus order"
    );
    let cut = chosen.iter().map(|&i| scores[i]).fold(f64::MIN, f64::max);
    let below = scores.iter().filter(|&&s| s <= cut).count();
    ensure!(
        below == chosen.len(),
        "selection is not the lowest-scoring set"
    );
    Ok(format!("693750 of 18.5M in {e:.2?}"))
}

fn random_word<R: Rng>(r: &mut R) -> String {
    let len = r.gen_range(1..=10);
    (0..len)
        .map(|_| (b'a' + r.gen_range(0..8)) as char)
        .collect()
}

fn bpe_checks() -> Outcome {
    let fixture: HashMap<String, u64> = [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)]
        .iter()
        .map(|(w, c)| (w.to_string(), *c))
        .collect();
    let model = bpe_learn_from_counts(&fixture, 10).map_err(|e| e.to_string())?;
    ensure!(
        model.merges()[0] == ("e".to_string(), "s".to_string()),
        "first merge {:?}",
        model.merges()[0]
    );
    let sorted: BTreeMap<String, u64> = fixture.into_iter().collect();
    let oracle = common::bpe_brute_force(&sorted, 10);
    ensure!(
        model.merges() == oracle.as_slice(),
        "fixture merges {:?} vs oracle {oracle:?}",
        model.merges()
    );

    let mut r = rng(11);
    let corpus: Vec<String> = (0..2000)
        .map(|_| {
            (0..r.gen_range(1..12))
                .map(|_| random_word(&mut r))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let learned = bpe_learn(&corpus, 300).map_err(|e| e.to_string())?;
    let freq: BTreeMap<String, u64> = bpe::word_frequencies(&corpus).into_iter().collect();
    let oracle = common::bpe_brute_force(&freq, 10);
    ensure!(
        learned.merges()[..10] == oracle[..],
        "random corpus: first merges differ from oracle"
    );

    let lines: Vec<String> = (0..10_000)
        .map(|_| {
            (0..r.gen_range(0..15))
                .map(|_| random_word(&mut r))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let applied = learned.apply_lines(&lines);
    for (orig, seg) in lines.iter().zip(&applied) {
        ensure!(
            &bpe_undo(seg) == orig,
            "undo(apply({orig:?})) = {:?}",
            bpe_undo(seg)
        );
    }
    Ok(format!(
        "first merge (e, s); {} fixture merges and first 10 random-corpus merges match oracle; 10000 lines round-trip",
        oracle.len().min(model.len())
    ))
}

fn osm_roundtrip() -> Outcome {
    let mut r = rng(7);
    for i in 0..10_000 {
        let pair = synth::random_aligned_pair(&mut r, 12);
        let seq = osm_encode(&pair).map_err(|e| format!("pair {i}: {e}"))?;
        let back = osm_decode(&seq).map_err(|e| format!("pair {i}: {e}"))?;
        let expect = SentencePair::new(
            pair.source.clone(),
            pair.target.clone(),
            Some(functionalize(
                pair.alignment.as_deref().unwrap(),
                pair.target.len(),
            )),
        )
        .unwrap();
        ensure!(
            back == expect,
            "pair {i} did not round-trip: {pair:?} -> {}",
            seq.to_line()
        );
    }
    for i in 0..2000 {
        let pair = synth::monotone_pair(&mut r, 12);
        let seq = osm_encode(&pair).map_err(|e| e.to_string())?;
        ensure!(
            seq.reordering_ops() == 0,
            "monotone pair {i} has reordering: {}",
            seq.to_line()
        );
    }
    let swap = SentencePair::from_lines("a b", "y x", Some("0-1 1-0")).unwrap();
    let ops = osm_encode(&swap).map_err(|e| e.to_string())?.ops;
    let expect = vec![
        Operation::InsertGap,
        Operation::Gen("b".into(), "y".into()),
        Operation::JumpBack(1),
        Operation::Gen("a".into(), "x".into()),
    ];
    ensure!(ops == expect, "swap fixture gave {ops:?}");
    Ok(
        "10000 random pairs round-trip; 2000 monotone pairs without reordering; swap fixture exact"
            .into(),
    )
}

/// Two disjoint vocabularies emitted in strict alternation.
fn alternating(left: usize, right: usize, lines: usize, seed: u64) -> Vec<String> {
    let mut r = rng(seed);
    (0..lines)
        .map(|_| {
            let len = r.gen_range(2..12);
            (0..len)
                .map(|i| {
                    if i % 2 == 0 {
                        format!("a{}", r.gen_range(0..left))
                    } else {
                        format!("b{}", r.gen_range(0..right))
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn exchange_clustering() -> Outcome {
    let mut fixtures: Vec<(Vec<String>, usize)> = vec![
        (synth::zipf_corpus(500, 80, 1), 5),
        (synth::zipf_corpus(500, 80, 2), 20),
        (fixture_lines(), 50),
    ];
    // planted structure, each checked against exhaustive enumeration
    let mut planted = vec![vec!["a x a y a x a y".to_string(); 10]];
    for (i, (left, right)) in [(1, 2), (2, 2), (3, 4), (5, 5), (6, 6), (4, 8)]
        .iter()
        .enumerate()
    {
        planted.push(alternating(*left, *right, 200, i as u64));
    }
    // unstructured small vocabulary: local search, gap to the optimum reported only
    let random = synth::zipf_corpus(300, 12, 3);
    fixtures.extend(planted.iter().map(|l| (l.clone(), 2)));
    fixtures.push((random.clone(), 2));

    let mut maps = Vec::new();
    for (lines, k) in &fixtures {
        let (map, trace) = cluster_exchange(lines, *k, 30).map_err(|e| e.to_string())?;
        for w in trace.objective.windows(2) {
            ensure!(
                w[1] - w[0] > 1e-12,
                "accepted move changed objective {} -> {}",
                w[0],
                w[1]
            );
        }
        maps.push(map);
    }
    let objective_at = |lines: &[String], map: &adaptkit::classes::ClassMap| {
        let assign: HashMap<String, usize> = map.iter().map(|(w, c)| (w.to_string(), c)).collect();
        class_objective(lines, &assign)
    };
    let offset = fixtures.len() - planted.len() - 1;
    for (j, lines) in planted.iter().enumerate() {
        let map = &maps[offset + j];
        ensure!(
            map.len() <= 12,
            "planted fixture {j} has {} words",
            map.len()
        );
        let (got, best) = (objective_at(lines, map), best_two_partition(lines));
        ensure!(
            (got - best).abs() <= 1e-9 * best.abs().max(1.0),
            "planted fixture {j} ({} words): objective {got} vs exhaustive optimum {best}",
            map.len()
        );
        // even positions hold one vocabulary, odd positions the other
        let mut side_class = [None, None];
        for l in lines {
            for (i, w) in l.split_whitespace().enumerate() {
                let c = map.class_of(w);
                ensure!(
                    *side_class[i % 2].get_or_insert(c) == c,
                    "planted fixture {j}: vocabulary {} split across classes",
                    i % 2
                );
            }
        }
        ensure!(
            side_class[0] != side_class[1],
            "planted fixture {j}: vocabularies share a class"
        );
    }
    let gap = best_two_partition(&random) - objective_at(&random, maps.last().unwrap());
    Ok(format!(
        "{} fixtures with increasing objective; {} planted vocabularies of <= 12 words at the exhaustive optimum; random 12-word fixture {gap:.2} below its optimum",
        fixtures.len(),
        planted.len()
    ))
}

fn bleu_checks() -> Outcome {
    let h = ["the cat sat on the mat", "a quick brown fox jumps"];
    let id = bleu(&h, &h, false).map_err(|e| e.to_string())?;
    ensure!(
        id.bleu == 100.0 && id.brevity_penalty == 1.0,
        "identity gave {id}"
    );
    let clip =
        bleu(&["the the the the"], &["the cat sat down"], false).map_err(|e| e.to_string())?;
    ensure!(
        clip.bleu == 0.0 && clip.precisions[0] == 0.25,
        "clipped fixture gave {clip}"
    );
    let bp = brevity_penalty(5, 10);
    ensure!((bp - (-1f64).exp()).abs() <= 1e-12, "BP(5,10) = {bp}");
    let cols: Vec<String> = (1..=4).map(|i| format!("t{i}")).collect();
    let rows = vec![
        ("MADA".to_string(), vec![27.5, 30.6, 30.4, 26.3]),
        ("3.75%+half OPUS".to_string(), vec![28.2, 32.4, 32.3, 28.6]),
    ];
    let table = progress_table(&rows, &cols, AverageMode::Displayed).map_err(|e| e.to_string())?;
    ensure!(
        table.average(0) == 28.7,
        "first row average {}",
        table.average(0)
    );
    ensure!(
        table.average(1) == 30.4,
        "second row average {}",
        table.average(1)
    );
    Ok("identity 100.0; clipped p1 0.25 -> 0.0; BP exp(-1); averages 28.7 and 30.4".into())
}

fn pipeline_determinism() -> Outcome {
    let t = Instant::now();
    let mut manifests = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = synth::write_desk_fixture(dir.path(), &PlantedConfig::default(), 42)
            .map_err(|e| e.to_string())?;
        let report =
            run_config_file(&cfg, Some(&dir.path().join("out"))).map_err(|e| e.to_string())?;
        if let Some(e) = report.error {
            return Err(format!("pipeline failed: {e}"));
        }
        let on_disk = std::fs::read_to_string(dir.path().join("out/manifest.tsv"))
            .map_err(|e| e.to_string())?;
        ensure!(
            Manifest::parse_tsv(&on_disk).unwrap() == report.manifest,
            "manifest on disk differs"
        );
        manifests.push(on_disk);
    }
    ensure!(
        manifests[0] == manifests[1],
        "manifests differ between runs"
    );
    let stages: std::collections::BTreeSet<&str> = manifests[0]
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    ensure!(
        stages.len() == 10,
        "only stages {stages:?} produced artifacts"
    );
    let e = within_time(t, Duration::from_secs(300))?;
    Ok(format!(
        "{} artifacts from 10 stages identical across two runs, {e:.1?}",
        manifests[0].lines().count()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Kneser-Ney normalization", kn_normalization),
        ("ARPA back-off walker equivalence", arpa_oracle),
        ("EM interpolation", em_interpolation),
        ("MML planted recovery and nesting", mml_planted),
        ("selection size arithmetic", selection_arithmetic),
        ("BPE merges and round trip", bpe_checks),
        ("operation sequence round trip", osm_roundtrip),
        ("exchange clustering", exchange_clustering),
        ("BLEU and progress table", bleu_checks),
        ("end-to-end determinism", pipeline_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name} [{secs:.2}s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}. {name} [{secs:.2}s]: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
