//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured values (run with `--nocapture` to see them).
//!
//! Criteria 1-7 pin every tolerance in code; criterion 8 is the offline
//! end-to-end smoke; criterion 9 documents what is intentionally not
//! reproduced here and proves the replay path for everything derived.

use std::time::Instant;

use advish_core::classify::{
    logistic_loss_and_grad, train, Algorithm, ClassifierSpec, TrainedClassifier,
};
use advish_core::corpus::{split_corpus, synthetic, tokenize, Label, SplitSpec, TokenizerKind};
use advish_core::pipeline::fixtures;
use advish_core::semsim::{bertscore, EmbeddingProvider, HashProvider};
use advish_core::stats::{
    dist::studentized_range_cdf, wilcoxon_one_tailed, PairedSample, StatsError, WilcoxonOutcome,
};
use advish_core::tfidf::{fit, transform, SparseFeatureVector, TfidfConfig};

/// Criterion 1: the statistics pipeline reproduces the published Wilcoxon
/// p-values, average ranks, tie-corrected Friedman statistic, and Nemenyi
/// pairwise significances from the bundled accuracy fixtures, in under 5 s.
#[test]
fn criterion_01_statistics_reproduction_from_fixtures() {
    let started = Instant::now();
    let replay = fixtures::replay().unwrap();
    let report = &replay.report;

    let ps: Vec<f64> = report
        .wilcoxon
        .iter()
        .map(|w| match w {
            WilcoxonOutcome::Computed { result } => result.p_one_tailed,
            WilcoxonOutcome::NoInformation => panic!("fixtures have nonzero differences"),
        })
        .collect();
    // attacker order: MiniGPT-4o, GPT-4o, Gemini 2.0, Qwen2.5
    assert!((ps[0] - 0.009766).abs() <= 1e-6, "MiniGPT-4o p {}", ps[0]);
    for (i, &p) in ps.iter().enumerate().skip(1) {
        assert!((p - 0.000977).abs() <= 1e-6, "attacker {i} p {p}");
    }

    assert_eq!(report.average_ranks, vec![3.7, 2.0, 3.3, 1.0]);

    let friedman = report.friedman.as_ref().unwrap();
    assert!((friedman.chi2 - 28.0408).abs() <= 0.001, "chi2 {}", friedman.chi2);
    assert!(friedman.p <= 1e-5, "p {}", friedman.p);

    let nemenyi = report.nemenyi.as_ref().unwrap();
    let p = &nemenyi.p;
    assert!((p[1][0] - 0.017).abs() <= 0.005, "GPT-4o vs MiniGPT-4o {}", p[1][0]);
    assert!(p[3][0] < 0.001, "Qwen2.5 vs MiniGPT-4o {}", p[3][0]);
    assert!(p[3][2] < 0.001, "Qwen2.5 vs Gemini 2.0 {}", p[3][2]);
    assert!(p[1][2] > 0.05, "GPT-4o vs Gemini 2.0 {}", p[1][2]);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1: wilcoxon p {:.6}/{:.6}, ranks {:?}, friedman chi2 {:.4} (p {:.2e}), \
         nemenyi gpt-mini {:.4} in {elapsed:?}",
        ps[0], ps[1], report.average_ranks, friedman.chi2, friedman.p, p[1][0]
    );
}

/// Criterion 2: recomputed average drops match the published column means
/// within 0.01 percentage points, and the single-attacker drop column equals
/// the difference of its accuracy columns within 1e-6.
#[test]
fn criterion_02_average_drop_recomputation() {
    let replay = fixtures::replay().unwrap();
    let expected = [0.0342, 0.1616, 0.0718, 0.3383];
    for ((got, want), attacker) in
        replay.average_drops.iter().zip(expected).zip(&replay.attackers)
    {
        assert!(
            (got - want).abs() <= 1e-4,
            "{attacker}: drop {got} vs {want} beyond 0.01 percentage points"
        );
    }
    for row in &replay.full_dataset {
        assert!(
            (row.reported_drop - (row.original - row.adversarial)).abs() <= 1e-6,
            "{}: reported {} vs recomputed {}",
            row.classifier,
            row.reported_drop,
            row.original - row.adversarial
        );
    }
    println!(
        "PASS criterion 2: average drops {:?} match published percentages; \
         full-dataset drop column consistent to 1e-6",
        replay.average_drops
    );
}

/// Criterion 3: for 200 random paired samples with n <= 12 the exact
/// Wilcoxon tail equals brute-force enumeration over all sign assignments,
/// as bitwise-equal rationals, in under 30 s.
#[test]
fn criterion_03_wilcoxon_exact_oracle() {
    use rand::Rng;
    use rand::SeedableRng;
    let started = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1203);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(1..=12usize);
        // Coarse grid forces ties and zero differences.
        let before: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 4.0).collect();
        let after: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 4.0).collect();
        let sample = PairedSample::new(before.clone(), after.clone()).unwrap();
        match wilcoxon_one_tailed(&sample) {
            Ok(result) => {
                let exact = result.exact.expect("n <= 12 uses the exact path");
                let (num, den) = enumerate_tail(&before, &after);
                assert_eq!(exact.numerator, num, "numerator for {before:?} vs {after:?}");
                assert_eq!(exact.denominator, den);
                checked += 1;
            }
            Err(StatsError::NoInformation) => continue, // all differences zero
            Err(other) => panic!("unexpected error {other}"),
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("PASS criterion 3: 200 samples bitwise-equal to enumeration in {elapsed:?}");
}

/// Independent route: rank by sorting, then iterate every sign assignment.
fn enumerate_tail(before: &[f64], after: &[f64]) -> (u64, u64) {
    let diffs: Vec<f64> = before
        .iter()
        .zip(after)
        .map(|(b, a)| b - a)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    let mut magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    magnitudes.sort_by(|a, b| a.total_cmp(b));
    let doubled_rank = |value: f64| -> u64 {
        let below = magnitudes.iter().filter(|v| **v < value).count();
        let equal = magnitudes.iter().filter(|v| **v == value).count();
        (below + 1 + below + equal) as u64
    };
    let ranks: Vec<u64> = diffs.iter().map(|d| doubled_rank(d.abs())).collect();
    let observed: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d < 0.0)
        .map(|(_, r)| *r)
        .sum();
    let mut count = 0u64;
    for mask in 0u64..(1 << n) {
        let sum: u64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if sum <= observed {
            count += 1;
        }
    }
    (count, 1 << n)
}

/// Criterion 4: the studentized-range CDF hits the published critical values
/// for k = 4 at infinite degrees of freedom.
#[test]
fn criterion_04_studentized_range_calibration() {
    let at_95 = studentized_range_cdf(3.633, 4);
    let at_99 = studentized_range_cdf(4.403, 4);
    assert!((at_95 - 0.95).abs() <= 0.002, "F(3.633; 4) = {at_95}");
    assert!((at_99 - 0.99).abs() <= 0.002, "F(4.403; 4) = {at_99}");
    println!("PASS criterion 4: F(3.633;4)={at_95:.5}, F(4.403;4)={at_99:.5}");
}

/// Criterion 5: greedy-matching scores are exactly 1 on identical inputs,
/// dual under argument swap within 1e-12 on 100 random instances, and equal
/// to brute-force evaluation of the similarity matrix on every instance
/// with at most 6 tokens per side.
#[test]
fn criterion_05_semantic_score_properties() {
    use rand::Rng;
    use rand::SeedableRng;
    let provider = HashProvider::new(505, 24);
    let pool = ["은행", "통장", "확인", "account", "urgent", "call", "today"];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(505);
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(1..=6usize);
        (0..len).map(|_| pool[rng.gen_range(0..pool.len())].to_string()).collect()
    };

    for _ in 0..100 {
        let a = pick(&mut rng);
        let b = pick(&mut rng);

        let aa = bertscore(&a, &a, &provider).unwrap();
        assert_eq!((aa.precision, aa.recall, aa.f1), (1.0, 1.0, 1.0), "identity must be exact");

        let ab = bertscore(&a, &b, &provider).unwrap();
        let ba = bertscore(&b, &a, &provider).unwrap();
        assert!((ab.precision - ba.recall).abs() <= 1e-12);
        assert!((ab.recall - ba.precision).abs() <= 1e-12);

        // Brute force directly from the full cosine matrix.
        let av = provider.embed(&a).unwrap().vectors;
        let bv = provider.embed(&b).unwrap().vectors;
        let cosine = |x: &Vec<f64>, y: &Vec<f64>| -> f64 {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / (nx * ny)
        };
        let precision = (0..b.len())
            .map(|j| (0..a.len()).map(|i| cosine(&av[i], &bv[j])).fold(f64::NEG_INFINITY, f64::max))
            .sum::<f64>()
            / b.len() as f64;
        let recall = (0..a.len())
            .map(|i| (0..b.len()).map(|j| cosine(&av[i], &bv[j])).fold(f64::NEG_INFINITY, f64::max))
            .sum::<f64>()
            / a.len() as f64;
        assert!((ab.precision - precision).abs() <= 1e-10);
        assert!((ab.recall - recall).abs() <= 1e-10);
    }
    println!("PASS criterion 5: identity exact, duality <=1e-12, greedy == brute force (<=6 tokens)");
}

fn synthetic_features(
    seed: u64,
) -> (Vec<SparseFeatureVector>, Vec<Label>, Vec<SparseFeatureVector>, Vec<Label>) {
    let corpus = synthetic::generate(200, seed, synthetic::SyntheticOpts::default());
    let spec = SplitSpec { train_count: 150, val_count: 0, test_count: 50, seed: 9 };
    let (train_set, _, test_set) = split_corpus(&corpus, &spec).unwrap();
    let docs = |c: &advish_core::Corpus| -> Vec<Vec<String>> {
        c.transcripts()
            .iter()
            .map(|t| tokenize(&t.text, &TokenizerKind::Whitespace, None).unwrap())
            .collect()
    };
    let train_docs = docs(&train_set);
    let model = fit(&train_docs, TfidfConfig::default()).unwrap();
    let x_train = train_docs.iter().map(|d| transform(d, &model)).collect();
    let y_train = train_set.transcripts().iter().map(|t| t.label).collect();
    let x_test = docs(&test_set).iter().map(|d| transform(d, &model)).collect();
    let y_test = test_set.transcripts().iter().map(|t| t.label).collect();
    (x_train, y_train, x_test, y_test)
}

/// Criterion 6: every algorithm reaches at least 0.95 held-out accuracy on
/// the 200-document synthetic separable corpus with a fixed seed; the
/// logistic gradient matches central finite differences within 1e-5
/// relative error; retraining with the same seed reproduces predictions.
#[test]
fn criterion_06_classifier_suite() {
    let (x_train, y_train, x_test, y_test) = synthetic_features(600);

    let mut accuracies = Vec::new();
    for algorithm in Algorithm::ALL {
        let spec = ClassifierSpec::new(algorithm, 61);
        let model = train(spec, &x_train, &y_train).unwrap();
        let predictions = model.predict(&x_test).unwrap();
        let accuracy = predictions.iter().zip(&y_test).filter(|(p, t)| p == t).count() as f64
            / y_test.len() as f64;
        assert!(accuracy >= 0.95, "{algorithm:?} held-out accuracy {accuracy}");
        accuracies.push((algorithm, accuracy));

        let again = train(spec, &x_train, &y_train).unwrap();
        assert_eq!(
            model.decision_score(&x_test).unwrap(),
            again.decision_score(&x_test).unwrap(),
            "{algorithm:?} retraining with the same seed must reproduce scores"
        );
    }

    // Gradient check on random small instances.
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(66);
    for _ in 0..25 {
        let dim = rng.gen_range(2..7);
        let n = rng.gen_range(3..9);
        let rows: Vec<SparseFeatureVector> = (0..n)
            .map(|_| {
                let mut entries = Vec::new();
                for i in 0..dim {
                    if rng.gen_range(0.0..1.0) < 0.8 {
                        entries.push((i as u32, rng.gen_range(-2.0..2.0)));
                    }
                }
                SparseFeatureVector::new(entries, dim)
            })
            .collect();
        let labels: Vec<f64> =
            (0..n).map(|_| if rng.gen_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 }).collect();
        let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias = rng.gen_range(-1.0..1.0);
        let l2 = 1e-4;
        let (_, grad, grad_bias) = logistic_loss_and_grad(&weights, bias, &rows, &labels, l2);
        let h = 1e-5;
        let loss = |w: &[f64], b: f64| logistic_loss_and_grad(w, b, &rows, &labels, l2).0;
        for i in 0..dim {
            let mut plus = weights.clone();
            plus[i] += h;
            let mut minus = weights.clone();
            minus[i] -= h;
            let fd = (loss(&plus, bias) - loss(&minus, bias)) / (2.0 * h);
            let scale = grad[i].abs().max(fd.abs()).max(1.0);
            assert!(
                (grad[i] - fd).abs() / scale <= 1e-5,
                "weight {i}: analytic {} vs central difference {fd}",
                grad[i]
            );
        }
        let fd = (loss(&weights, bias + h) - loss(&weights, bias - h)) / (2.0 * h);
        let scale = grad_bias.abs().max(fd.abs()).max(1.0);
        assert!((grad_bias - fd).abs() / scale <= 1e-5);
    }

    println!("PASS criterion 6: held-out accuracies {accuracies:?}; gradient check <=1e-5; deterministic retraining");
}

/// Criterion 7: the two-document fixture reproduces idf(a) = 1.0,
/// idf(b) = ln(3/2)+1 = 1.405465, and the L2-normalized vector for
/// ["a","b"]. The exact normalized values under that idf are
/// (0.579739, 0.814803); they are asserted tightly, plus against the
/// 4-decimal published rendering at a tolerance that covers its rounding.
#[test]
fn criterion_07_tfidf_hand_example() {
    let docs: Vec<Vec<String>> = vec![
        vec!["a".into(), "b".into()],
        vec!["a".into(), "c".into()],
    ];
    let model = fit(&docs, TfidfConfig::default()).unwrap();
    let idf_a = model.idf_of("a").unwrap();
    let idf_b = model.idf_of("b").unwrap();
    assert!((idf_a - 1.0).abs() <= 1e-12);
    assert!((idf_b - 1.405465).abs() <= 1e-6);

    let vector = transform(&["a".into(), "b".into()], &model);
    let a_idx = model.feature_index("a").unwrap() as u32;
    let b_idx = model.feature_index("b").unwrap() as u32;
    let norm = (1.0 + idf_b * idf_b).sqrt();
    assert!((vector.get(a_idx) - 1.0 / norm).abs() <= 1e-12);
    assert!((vector.get(b_idx) - idf_b / norm).abs() <= 1e-12);
    // Published 4-decimal rendering (0.5799, 0.8147) sits 1.6e-4 from the
    // exact values; assert within a tolerance covering that rounding slip.
    assert!((vector.get(a_idx) - 0.5799).abs() <= 2.5e-4);
    assert!((vector.get(b_idx) - 0.8147).abs() <= 2.5e-4);
    println!(
        "PASS criterion 7: idf(a)=1, idf(b)={idf_b:.6}, normalized vector ({:.6}, {:.6})",
        vector.get(a_idx),
        vector.get(b_idx)
    );
}

/// Criterion 8: the full offline pipeline on a 40-transcript synthetic
/// corpus with the mock backend finishes in under 60 s, populates every
/// report section, and reruns byte-identically modulo timestamps.
#[test]
fn criterion_08_end_to_end_smoke() {
    use advish_core::pipeline::{run, RunConfig, RunPaths};

    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic::generate(40, 808, synthetic::SyntheticOpts::default());
    advish_core::corpus::write_jsonl(&corpus, &dir.path().join("corpus.jsonl")).unwrap();
    let config_toml = r#"
config_version = 1
global_seed = 8
output_dir = "out"

[corpus]
path = "corpus.jsonl"

[split]
train = 24
val = 4
test = 12

[[classifiers]]
algorithm = "logistic_regression"

[[classifiers]]
algorithm = "linear_svm"

[[classifiers]]
algorithm = "decision_tree"

[[classifiers]]
algorithm = "random_forest"
[classifiers.hyperparams]
n_trees = 30

[[classifiers]]
algorithm = "ada_boost"

[[classifiers]]
algorithm = "gradient_boosting"

[attack]
[[attack.backends]]
kind = "mock"
name = "mock-a"
seed = 5

[[attack.backends]]
kind = "mock"
name = "mock-b"
seed = 55

[embeddings]
provider = "hash"
dimension = 48
"#;
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, config_toml).unwrap();
    let config = RunConfig::load(&config_path).unwrap();

    let report = run(&config).unwrap();
    assert_eq!(report.classifiers.len(), 6);
    assert_eq!(report.attackers.len(), 2);
    assert_eq!(report.original_accuracy.len(), 6);
    assert_eq!(report.average_drops.len(), 2);
    assert_eq!(report.stats.wilcoxon.len(), 2);
    assert!(report.stats.friedman.is_some());
    assert!(report.stats.nemenyi.is_some());
    assert_eq!(report.semantics.len(), 2);
    assert_eq!(report.generation_stats.len(), 2);
    assert!(!report.roc_files.is_empty());

    let paths = RunPaths::new(&config.output_dir);
    let snapshot = |p: &std::path::Path| std::fs::read_to_string(p).unwrap();
    let first_json = snapshot(&paths.report_json());
    let first_md = snapshot(&paths.report_md());
    let first_generations = snapshot(&paths.generations());

    run(&config).unwrap();
    let strip = |text: &str| -> String {
        text.lines().filter(|l| !l.contains("generated_at")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&first_json), strip(&snapshot(&paths.report_json())));
    assert_eq!(strip(&first_md), strip(&snapshot(&paths.report_md())));
    assert_eq!(first_generations, snapshot(&paths.generations()));

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("PASS criterion 8: two full offline runs in {elapsed:?}, rerun byte-identical modulo timestamps");
}

/// Criterion 9: environment-bound numbers (classifier accuracy tables,
/// semantic-score distributions, per-transcript cost and latency) are not
/// reproduction targets; the report exposes the fields that would hold them
/// and the replay path proves every derived statistic.
#[test]
fn criterion_09_non_reproducibility_boundary() {
    // The replay path carries the environment-bound accuracy values as
    // fixtures and derives everything else from them.
    let replay = fixtures::replay().unwrap();
    assert_eq!(replay.original_accuracy.len(), 10);
    assert_eq!(replay.adversarial_accuracy.len(), 10);
    assert_eq!(replay.average_drops.len(), 4);
    assert!(replay.report.friedman.is_some());
    assert!(replay.report.nemenyi.is_some());
    assert_eq!(replay.full_dataset.len(), 10);

    // Report fields that would hold the cost/latency and semantic-score
    // figures exist and are populated by any run.
    let stats = advish_core::pipeline::GenerationStats {
        attacker: "gpt-4o".into(),
        generations: 1,
        refusals: 0,
        total_cost_usd: 0.00685,
        mean_cost_usd: 0.00685,
        mean_latency_secs: 8.595,
        mean_prompt_tokens: 0.0,
        mean_completion_tokens: 0.0,
    };
    assert!(stats.mean_cost_usd > 0.0 && stats.mean_latency_secs > 0.0);
    let semantics = advish_core::pipeline::SemanticSummary {
        attacker: "gpt-4o".into(),
        pairs: 1,
        mean_precision: 0.74,
        mean_recall: 0.73,
        mean_f1: 0.735,
        skipped_pairs: 0,
        histogram: advish_core::semsim::histogram(&[0.735], 0.05),
    };
    assert!(semantics.mean_f1 > 0.0);
    println!(
        "PASS criterion 9: accuracy tables, semantic-score distributions, and cost/latency \
         figures are environment-bound report fields, not assertions; replay covers all \
         derived statistics"
    );
}

/// Round-trip sanity for the trained-model persistence used across phases.
#[test]
fn model_files_round_trip_bitwise() {
    let (x_train, y_train, x_test, _) = synthetic_features(77);
    let dir = tempfile::tempdir().unwrap();
    for algorithm in [Algorithm::LogisticRegression, Algorithm::GradientBoosting] {
        let model = train(ClassifierSpec::new(algorithm, 3), &x_train, &y_train).unwrap();
        let path = dir.path().join(format!("{}.json", algorithm.name()));
        model.save(&path).unwrap();
        let loaded = TrainedClassifier::load(&path).unwrap();
        let a = model.decision_score(&x_test).unwrap();
        let b = loaded.decision_score(&x_test).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
