//! Acceptance checks, one line of output per criterion.
//!
//! Runs without the libtest harness so the pass/fail lines are always shown.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ideation::classify::linear::{logistic_loss_and_gradient, LinearParams};
use ideation::classify::smo::{dual_objective, solve, Gram};
use ideation::classify::SmoParams;
use ideation::eval::{self, kfold_split, metrics, ConfusionCounts, SynthConfig};
use ideation::lexicon::{Category, Lexicon};
use ideation::pipeline::{self, PipelineConfig};
use ideation::resources::builtin_analyzer;
use ideation::segment::Segmenter;
use ideation::weighting::weight;
use ideation::{ClassifierKind, FeatureVector, Label, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn weight_oracle() -> Check {
    let start = Instant::now();
    let mut checked = 0;
    for w0 in [0.0, 0.5, 1.0, 2.0] {
        for s_s in 0..=20u32 {
            for s_n in 0..=20u32 {
                for n_s in [1usize, 10] {
                    for n_n in [10usize, 100] {
                        let (ss, sn) = (s_s as f64, s_n as f64);
                        let arg = if s_s == 0 {
                            1.0 / (sn + 1.0 + n_s as f64)
                        } else {
                            ss / (sn + 1.0)
                        };
                        let expected = w0 * arg.ln() * (n_n as f64 / n_s as f64);
                        let got = weight(w0, ss, sn, n_s, n_n);
                        let tol = 1e-12 * expected.abs().max(f64::MIN_POSITIVE);
                        ensure((got - expected).abs() <= tol || got == expected, || {
                            format!("W_o={w0} S_s={s_s} S_n={s_n} N_s={n_s} N_n={n_n}: {got} vs {expected}")
                        })?;
                        checked += 1;
                    }
                }
            }
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("{checked} grid points"))
}

fn metric_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let c = ConfusionCounts {
            tp: rng.random_range(0..200),
            fp: rng.random_range(0..200),
            fn_: rng.random_range(0..200),
            tn: rng.random_range(0..200),
        };
        let m = metrics(&c);
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let p = div(c.tp, c.tp + c.fp);
        let r = div(c.tp, c.tp + c.fn_);
        let f = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        let a = div(c.tp + c.tn, c.tp + c.fp + c.fn_ + c.tn);
        ensure(
            m.precision == p && m.recall == r && m.f_measure == f && m.accuracy == a,
            || format!("{c:?} gave {m:?}"),
        )?;
        if p + r > 0.0 {
            // harmonic mean: 2/F = 1/P + 1/R when both are non-zero
            if p > 0.0 && r > 0.0 {
                let lhs = 2.0 / m.f_measure;
                let rhs = 1.0 / m.precision + 1.0 / m.recall;
                ensure((lhs - rhs).abs() <= 1e-12 * rhs, || {
                    format!("harmonic mean fails for {c:?}")
                })?;
            }
        }
    }
    let m = metrics(&ConfusionCounts {
        tp: 37,
        fp: 10,
        fn_: 24,
        tn: 100,
    });
    for (name, got, want) in [
        ("P", m.precision, 0.7872),
        ("R", m.recall, 0.6066),
        ("F", m.f_measure, 0.6852),
    ] {
        ensure((got - want).abs() < 1e-4, || {
            format!("{name}={got}, expected {want}")
        })?;
    }
    Ok(format!(
        "1000 random tuples; P={:.4} R={:.4} F={:.4}",
        m.precision, m.recall, m.f_measure
    ))
}

fn fold_partition() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sizes: Vec<usize> = (5..=200).step_by(13).chain([6704]).collect();
    let mut cases = 0;
    for &n in &sizes {
        // roughly the 614/6704 class balance, at least one positive
        let labels: Vec<Label> = (0..n)
            .map(|i| {
                if i == 0 || rng.random_bool(0.0916) {
                    Label::Suicidal
                } else {
                    Label::NonSuicidal
                }
            })
            .collect();
        for k in [2usize, 5, 10] {
            if k > n {
                continue;
            }
            let folds =
                kfold_split(n, k, rng.random(), Some(&labels)).map_err(|e| e.to_string())?;
            ensure(folds.len() == k, || {
                format!("n={n} k={k}: {} folds", folds.len())
            })?;
            let mut seen = vec![false; n];
            for f in &folds {
                for &i in f {
                    ensure(!seen[i], || format!("n={n} k={k}: index {i} repeated"))?;
                    seen[i] = true;
                }
            }
            ensure(seen.iter().all(|&s| s), || {
                format!("n={n} k={k}: not exhaustive")
            })?;
            let spread = |xs: Vec<usize>| xs.iter().max().unwrap() - xs.iter().min().unwrap();
            ensure(spread(folds.iter().map(Vec::len).collect()) <= 1, || {
                format!("n={n} k={k}: unbalanced sizes")
            })?;
            let pos = folds
                .iter()
                .map(|f| f.iter().filter(|&&i| labels[i] == Label::Suicidal).count())
                .collect();
            ensure(spread(pos) <= 1, || format!("n={n} k={k}: not stratified"))?;
            cases += 1;
        }
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("{cases} (n, k) cases"))
}

fn classifier_sanity() -> Check {
    let start = Instant::now();
    let corpus =
        eval::synth_corpus(&SynthConfig::new(100, 400, 1.0, 4)).map_err(|e| e.to_string())?;
    let analyzer = builtin_analyzer().map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for kind in ClassifierKind::ALL {
        let report = eval::cross_validate(&corpus, &analyzer, &PipelineConfig::new(kind), 10, 4)
            .map_err(|e| e.to_string())?;
        let m = report.metrics;
        if m.accuracy < 0.95 || m.recall < 0.90 {
            failures.push(kind);
        }
        summary.push(format!("{kind} acc={:.3} rec={:.3}", m.accuracy, m.recall));
    }
    ensure(failures.is_empty(), || {
        format!("below threshold: {}", summary.join(", "))
    })?;
    within(start.elapsed(), 60.0)?;
    Ok(summary.join(", "))
}

fn imbalance_benefit() -> Check {
    let analyzer = builtin_analyzer().map_err(|e| e.to_string())?;
    let kind = ClassifierKind::RbfSvm;
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10u64 {
        let corpus = eval::synth_corpus(&SynthConfig::new(60, 600, 0.9, 100 + seed))
            .map_err(|e| e.to_string())?;
        let on = PipelineConfig::new(kind);
        let off = PipelineConfig {
            weighting: false,
            ..on
        };
        let recall = |config: &PipelineConfig| {
            eval::cross_validate(&corpus, &analyzer, config, 10, seed).map(|r| r.metrics.recall)
        };
        let (r_on, r_off) = (
            recall(&on).map_err(|e| e.to_string())?,
            recall(&off).map_err(|e| e.to_string())?,
        );
        if r_on >= r_off {
            wins += 1;
        }
        pairs.push(format!("{r_on:.2}/{r_off:.2}"));
    }
    ensure(wins >= 7, || {
        format!("weighting helped in {wins}/10 runs: {}", pairs.join(" "))
    })?;
    Ok(format!(
        "weighting recall >= unweighted in {wins}/10 runs (on/off: {})",
        pairs.join(" ")
    ))
}

fn smo_correctness() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = 16.0;
    let mut problems = 0;
    for gamma in [2f64.powi(-3), 2f64.powi(-15)] {
        for _ in 0..10 {
            let points: Vec<FeatureVector> = (0..15)
                .map(|_| {
                    FeatureVector::from_pairs((0..3).map(|d| (d, rng.random_range(-2.0..2.0))))
                })
                .collect();
            let mut labels: Vec<f64> = (0..15)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            labels[0] = 1.0;
            labels[1] = -1.0;
            let gram = Gram::new(points.iter().collect(), gamma);
            let params = SmoParams {
                c,
                gamma,
                ..SmoParams::default()
            };
            let sol = solve(&gram, &labels, &params, rng.random());
            ensure(sol.alphas.iter().all(|&a| (0.0..=c).contains(&a)), || {
                format!("alpha out of box: {:?}", sol.alphas)
            })?;
            let balance: f64 = sol.alphas.iter().zip(&labels).map(|(a, y)| a * y).sum();
            ensure(balance.abs() <= 1e-6, || format!("sum alpha*y = {balance}"))?;
            let objective = dual_objective(&sol.alphas, &labels, &gram);
            let best_random = (0..10_000)
                .map(|_| {
                    let alphas = random_feasible(&mut rng, &labels, c);
                    dual_objective(&alphas, &labels, &gram)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            ensure(objective >= best_random, || {
                format!("gamma={gamma}: dual {objective} below random {best_random}")
            })?;
            problems += 1;
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("{problems} problems"))
}

/// Uniform box point, then the side with the larger sum is scaled down so
/// that `sum alpha_i y_i = 0`.
fn random_feasible(rng: &mut ChaCha8Rng, labels: &[f64], c: f64) -> Vec<f64> {
    let mut alphas: Vec<f64> = labels.iter().map(|_| rng.random_range(0.0..=c)).collect();
    let sum = |alphas: &[f64], sign: f64| -> f64 {
        alphas
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == sign)
            .map(|(a, _)| a)
            .sum()
    };
    let (pos, neg) = (sum(&alphas, 1.0), sum(&alphas, -1.0));
    let (shrink_sign, factor) = if pos > neg {
        (1.0, neg / pos)
    } else {
        (-1.0, pos / neg)
    };
    for (a, &y) in alphas.iter_mut().zip(labels) {
        if y == shrink_sign {
            *a *= factor;
        }
    }
    alphas
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for instance in 0..20 {
        let samples: Vec<Sample> = (0..12)
            .map(|_| Sample {
                vector: FeatureVector::from_pairs((0..8).map(|d| (d, rng.random_range(-1.5..1.5)))),
                label: if rng.random_bool(0.4) {
                    Label::Suicidal
                } else {
                    Label::NonSuicidal
                },
            })
            .collect();
        let params = LinearParams {
            weights: (0..8).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-0.5..0.5),
        };
        let l2 = rng.random_range(0.0..0.1);
        let (_, grad, grad_bias) = logistic_loss_and_gradient(&params, &samples, l2);
        let h = 1e-5;
        let loss_at = |p: &LinearParams| logistic_loss_and_gradient(p, &samples, l2).0;
        for (d, &analytic) in grad.iter().chain([&grad_bias]).enumerate() {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            if d < 8 {
                plus.weights[d] += h;
                minus.weights[d] -= h;
            } else {
                plus.bias += h;
                minus.bias -= h;
            }
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || {
                format!(
                    "instance {instance} coordinate {d}: analytic {analytic}, numeric {numeric}"
                )
            })?;
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

/// Longest vocabulary prefix at each position, single characters otherwise.
fn brute_force_tokens(text: &str, vocab: &BTreeSet<String>) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut best = 1;
        for len in 1..=chars.len() - i {
            let candidate: String = chars[i..i + len].iter().collect();
            if vocab.contains(&candidate) {
                best = len;
            }
        }
        out.push(chars[i..i + best].iter().collect());
        i += best;
    }
    out
}

fn segmentation_oracle() -> Check {
    let vocab: BTreeSet<String> = ["a", "ab", "abc", "bca", "cc", "bab"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let segmenter = Segmenter::new(
        vocab.iter().cloned(),
        &Lexicon::new("none", Category::StopWord, Vec::<String>::new()),
    )
    .map_err(|e| e.to_string())?;
    let alphabet = ['a', 'b', 'c'];
    let mut texts = 0usize;
    let mut current: Vec<String> = vec![String::new()];
    for _len in 1..=12 {
        let mut next = Vec::with_capacity(current.len() * 3);
        for prefix in &current {
            for ch in alphabet {
                let mut t = prefix.clone();
                t.push(ch);
                let got = segmenter.segment(&t).tokens;
                let want = brute_force_tokens(&t, &vocab);
                ensure(got == want, || format!("{t:?}: {got:?} vs {want:?}"))?;
                texts += 1;
                next.push(t);
            }
        }
        current = next;
    }
    Ok(format!("{texts} texts"))
}

fn no_leakage() -> Check {
    let corpus =
        eval::synth_corpus(&SynthConfig::new(30, 90, 0.8, 9)).map_err(|e| e.to_string())?;
    let analyzer = builtin_analyzer().map_err(|e| e.to_string())?;
    let mut models = 0;
    for kind in ClassifierKind::ALL {
        let mut config = PipelineConfig::new(kind);
        config.oversample_ratio = Some(1.0);
        let seed = 21;
        let cv = eval::cross_validate_detailed(&corpus, &analyzer, &config, 5, seed)
            .map_err(|e| e.to_string())?;
        for (fold, held_out) in cv.fold_indices.iter().enumerate() {
            let train: Vec<usize> = (0..corpus.len())
                .filter(|i| !held_out.contains(i))
                .collect();
            let alone = pipeline::fit(
                &corpus.subset(&train),
                &analyzer,
                &config,
                eval::fold_seed(seed, fold),
            )
            .map_err(|e| e.to_string())?;
            let (a, b) = (
                cv.models[fold].to_json().map_err(|e| e.to_string())?,
                alone.to_json().map_err(|e| e.to_string())?,
            );
            ensure(a == b, || {
                format!("{kind} fold {fold}: model depends on held-out posts")
            })?;
            models += 1;
        }
    }
    Ok(format!(
        "{models} fold models identical to training-subset fits"
    ))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ideation"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "ideation {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        )
    })
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn reproducibility() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let corpus = root.join("corpus.jsonl");
    let s = |p: &Path| p.to_str().expect("utf-8 temp path").to_string();
    run_cli(&[
        "synth",
        "--minority",
        "40",
        "--majority",
        "160",
        "--signal",
        "0.8",
        "--seed",
        "5",
        "--out",
        &s(root),
    ])?;
    for run in ["a", "b"] {
        run_cli(&[
            "cross-validate",
            "--corpus",
            &s(&corpus),
            "--k",
            "5",
            "--seed",
            "11",
            "--out",
            &s(&root.join(run)),
        ])?;
    }
    for file in ["report.json", "report.txt"] {
        ensure(
            read(&root.join("a").join(file))? == read(&root.join("b").join(file))?,
            || format!("{file} differs between runs"),
        )?;
    }

    let small = root.join("small");
    run_cli(&[
        "synth",
        "--minority",
        "8",
        "--majority",
        "16",
        "--signal",
        "1",
        "--seed",
        "5",
        "--out",
        &s(&small),
    ])?;
    let grid = root.join("grid");
    run_cli(&[
        "grid-search",
        "--corpus",
        &s(&small.join("corpus.jsonl")),
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        &s(&grid),
    ])?;
    let table = String::from_utf8(read(&grid.join("grid.tsv"))?).map_err(|e| e.to_string())?;
    let has_cell = table.lines().skip(1).any(|line| {
        let cols: Vec<&str> = line.split('\t').collect();
        cols.len() >= 2
            && cols[0].parse::<f64>() == Ok(16.0)
            && cols[1].parse::<f64>() == Ok(2f64.powi(-15))
    });
    ensure(has_cell, || {
        "grid table lacks C=16, gamma=2^-15".to_string()
    })?;
    Ok(format!(
        "byte-identical reports; grid has {} cells including (16, 2^-15)",
        table.lines().count() - 1
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("weight formula oracle", weight_oracle),
        ("metric identities", metric_identities),
        ("fold partition", fold_partition),
        ("classifier sanity", classifier_sanity),
        ("imbalance benefit", imbalance_benefit),
        ("SMO correctness", smo_correctness),
        ("logistic gradient check", gradient_check),
        ("segmentation oracle", segmentation_oracle),
        ("no leakage", no_leakage),
        ("reproducibility", reproducibility),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.2}s) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
