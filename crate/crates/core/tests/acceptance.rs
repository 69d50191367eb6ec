//! End-to-end acceptance run. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any fails.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use deepfake_ballistics::ballistics::{
    aggregate, build_dataset, check_associativity, check_commutativity, run_triples,
    DatasetError, DatasetManifest, DatasetOptions, ImageInput, ProxyTransfer, SplitCounts,
    StyleTransferOp,
};
use deepfake_ballistics::classifiers::{
    self, evaluate, run_grid, standard_grid, ClassifierConfig, LabeledDataset, Split, SvmKernel,
};
use deepfake_ballistics::dct::{dct2_8x8, idct2_8x8, ZIGZAG};
use deepfake_ballistics::features::{estimate_beta, extract_files, extract_features};
use deepfake_ballistics::imaging::{Block8, RasterImage};
use deepfake_ballistics::similarity::{compare_bins, ssim, HistogramMetric};
use deepfake_ballistics::{synth, Label};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn dct_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = common::rng(2024);
    let (mut worst_rt, mut worst_energy) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let mut samples = [0.0; 64];
        for s in &mut samples {
            *s = r.random_range(0.0..=255.0);
        }
        let block = Block8 { samples, origin: (0, 0) };
        let c = dct2_8x8(&block);
        for (x, y) in idct2_8x8(&c).iter().zip(samples) {
            worst_rt = worst_rt.max((x - y).abs());
        }
        let spatial: f64 = samples.iter().map(|s| (s - 128.0).powi(2)).sum();
        let freq: f64 = c.coefficients.iter().map(|v| v * v).sum();
        worst_energy = worst_energy.max((spatial - freq).abs() / spatial);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst_rt < 1e-9, "round-trip error {worst_rt:e}");
    ensure!(worst_energy < 1e-6, "Parseval error {worst_energy:e}");
    ensure!(secs < 5.0, "took {secs:.2}s");
    Ok(format!("round-trip {worst_rt:.1e}, Parseval {worst_energy:.1e}, {secs:.3}s"))
}

fn zigzag() -> Outcome {
    let mut sorted = ZIGZAG;
    sorted.sort_unstable();
    ensure!(sorted.iter().enumerate().all(|(i, &v)| i == v), "not a permutation");
    ensure!(ZIGZAG == common::zigzag_walk(), "differs from the diagonal walk");
    let scan_index = |row: usize, col: usize| ZIGZAG.iter().position(|&p| p == row * 8 + col);
    for ((row, col), want) in [((0, 0), 0), ((0, 1), 1), ((1, 0), 2), ((7, 7), 63)] {
        ensure!(scan_index(row, col) == Some(want), "({row},{col}) -> {:?}", scan_index(row, col));
    }
    Ok("permutation of 0..63, anchors hold".into())
}

fn beta() -> Outcome {
    let mut worst = 0.0f64;
    for (k, truth) in [0.5, 2.0, 10.0].into_iter().enumerate() {
        let xs = common::laplace_samples(truth, 1_000_000, 7 + k as u64);
        let est = estimate_beta(&xs, 1).map_err(|e| e.to_string())?.beta;
        let rel = ((est - truth) / truth).abs();
        ensure!(rel < 0.01, "beta {truth}: estimate {est}");
        worst = worst.max(rel);
    }
    let flat = extract_features(&RasterImage::filled(128, 96, [77, 140, 12]), "flat")
        .map_err(|e| e.to_string())?;
    ensure!(flat.values().iter().all(|&b| b == 0.0), "constant image has non-zero betas");
    Ok(format!("worst relative error {:.3}%, constant image all zero", worst * 100.0))
}

fn classifier_sanity() -> Outcome {
    let train = common::separable_blobs(150, 63, 11);
    let test = common::separable_blobs(100, 63, 12);
    let mut configs = vec![ClassifierConfig::knn(5)];
    configs.extend(SvmKernel::ALL.map(ClassifierConfig::svm));
    configs.extend([
        ClassifierConfig::lda(),
        ClassifierConfig::decision_tree(),
        ClassifierConfig::random_forest(42),
        ClassifierConfig::gboost(),
    ]);
    let mut lowest = 1.0f64;
    for config in &configs {
        let model = classifiers::train(config, &train).map_err(|e| e.to_string())?;
        let acc = evaluate(&model, &test).map_err(|e| e.to_string())?.accuracy;
        ensure!(acc >= 0.95, "{:?} reached {acc}", config.family);
        lowest = lowest.min(acc);
    }
    let distinct = common::blobs(100, 63, 0.5, 13);
    let nn = classifiers::train(&ClassifierConfig::knn(1), &distinct).map_err(|e| e.to_string())?;
    let self_acc = evaluate(&nn, &distinct).map_err(|e| e.to_string())?.accuracy;
    ensure!(self_acc == 1.0, "1-NN self accuracy {self_acc}");
    let (gtrain, gtest) = (common::blobs(80, 63, 3.0, 14), common::blobs(40, 63, 3.0, 15));
    let grid = standard_grid(42, true);
    let a = run_grid(&gtrain, &gtest, &grid).map_err(|e| e.to_string())?;
    let b = run_grid(&gtrain, &gtest, &grid).map_err(|e| e.to_string())?;
    ensure!(a.to_csv() == b.to_csv() && a.render_text() == b.render_text(), "grid runs differ");
    Ok(format!(
        "lowest blob accuracy {:.1}%, 1-NN self 100%, grid repeat identical",
        lowest * 100.0
    ))
}

struct ProxyTask {
    dir: tempfile::TempDir,
    corpus: synth::SyntheticCorpus,
    manifest: DatasetManifest,
    build_secs: f64,
}

fn build_proxy_task() -> Result<ProxyTask, String> {
    let start = Instant::now();
    let counts = SplitCounts::PROTOCOL;
    let corpus = synth::synthetic_corpus(counts.per_class(), 200, 64, 42);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = build_dataset(
        &corpus.sources,
        &corpus.targets1,
        &corpus.targets2,
        &ProxyTransfer,
        dir.path(),
        &DatasetOptions::new(counts),
    )
    .map_err(|e| e.to_string())?;
    Ok(ProxyTask {
        dir,
        corpus,
        manifest,
        build_secs: start.elapsed().as_secs_f64(),
    })
}

fn proxy_grid(task: &ProxyTask) -> Outcome {
    let start = Instant::now();
    let paths: Vec<_> = task.manifest.entries.iter().map(|e| task.dir.path().join(&e.output_path)).collect();
    let mut split: HashMap<Split, (Vec<Vec<f64>>, Vec<Label>)> = HashMap::new();
    for (entry, features) in task.manifest.entries.iter().zip(extract_files(&paths)) {
        let f = features.map_err(|e| e.to_string())?;
        let slot = split.entry(entry.split).or_default();
        slot.0.push(f.values().to_vec());
        slot.1.push(entry.class);
    }
    let mut take = |s: Split| {
        let (rows, labels) = split.remove(&s).unwrap_or_default();
        LabeledDataset::new(rows, labels).map_err(|e| e.to_string())
    };
    let (train, test) = (take(Split::Train)?, take(Split::Test)?);
    ensure!(train.len() == 2400 && test.len() == 400, "split {}/{}", train.len(), test.len());
    let table = run_grid(&train, &test, &standard_grid(42, true)).map_err(|e| e.to_string())?;
    let secs = task.build_secs + start.elapsed().as_secs_f64();

    let rows: Vec<_> = table.table_rows().collect();
    ensure!(rows.len() == 14, "{} table configurations", rows.len());
    let csv = table.to_csv();
    ensure!(csv.lines().count() == 1 + 2 * table.rows.len(), "csv has {} lines", csv.lines().count());
    for row in &rows {
        for label in Label::ALL {
            let m = row.report.class(label);
            let ok = [m.precision, m.recall, m.f1].iter().all(|v| (0.0..=1.0).contains(v));
            ensure!(ok, "{} {label}: metrics out of range", row.entry.classifier);
        }
        ensure!(row.report.accuracy_percent() <= 100, "accuracy percent");
    }
    let rf = table.row("Random Forest", "").ok_or("no Random Forest row")?;
    let rf_acc = rf.report.accuracy;
    ensure!(rf_acc >= 0.60, "Random Forest accuracy {rf_acc}");
    ensure!(secs < 600.0, "took {secs:.0}s");
    println!("{}", table.render_text());
    Ok(format!(
        "14 configurations x 2 classes, Random Forest {}%, {secs:.1}s",
        rf.report.accuracy_percent()
    ))
}

fn histograms() -> Outcome {
    let h1 = [0.5, 0.3, 0.15, 0.05];
    let h2 = [0.4, 0.4, 0.15, 0.05];
    let chi = compare_bins(&h1, &h2, HistogramMetric::ChiSquare).map_err(|e| e.to_string())?;
    let bhat = compare_bins(&h1, &h2, HistogramMetric::Bhattacharyya).map_err(|e| e.to_string())?;
    let bc: f64 = 0.2f64.sqrt() + 0.12f64.sqrt() + 0.15 + 0.05;
    ensure!((chi - 0.16 / 3.0).abs() < 1e-12, "chi-square {chi}");
    ensure!((bhat - (1.0 - bc).sqrt()).abs() < 1e-12, "Bhattacharyya {bhat}");
    let mut r = common::rng(99);
    for _ in 0..10_000 {
        let mut h: Vec<f64> = (0..768).map(|_| r.random::<f64>()).collect();
        let s: f64 = h.iter().sum();
        h.iter_mut().for_each(|v| *v /= s);
        let score = |m| compare_bins(&h, &h, m).map_err(|e| e.to_string());
        ensure!(score(HistogramMetric::Correlation)? == 1.0, "self correlation");
        ensure!(score(HistogramMetric::ChiSquare)? == 0.0, "self chi-square");
        ensure!(score(HistogramMetric::Bhattacharyya)? == 0.0, "self Bhattacharyya");
    }
    Ok(format!("chi-square {chi:.5}, Bhattacharyya {bhat:.5}, 10000 self-comparisons exact"))
}

fn ssim_checks() -> Outcome {
    let score = |a: &RasterImage, b: &RasterImage| ssim(a, b).map(|s| s.mean_score).map_err(|e| e.to_string());
    for seed in 0..10 {
        let a = synth::face(seed, 64, 64);
        let b = common::random_image(64, 64, seed + 500);
        ensure!((score(&a, &a)? - 1.0).abs() < 1e-12, "self-similarity");
        ensure!((score(&a, &b)? - score(&b, &a)?).abs() < 1e-12, "symmetry");
        let mut last = f64::INFINITY;
        for amp in [5, 10, 20, 40] {
            let s = score(&a, &common::add_noise(&a, amp, seed * 100 + amp as u64))?;
            ensure!(s < last, "face {seed}: not decreasing at noise {amp}");
            last = s;
        }
    }
    Ok("self = 1, symmetric, decreasing over noise 5/10/20/40 on 10 faces".into())
}

fn properties() -> Outcome {
    let a = ImageInput::memory("a", synth::face(3, 64, 64));
    let err = |e: deepfake_ballistics::ballistics::PropertyError| e.to_string();
    ensure!(check_commutativity(&ProxyTransfer, &a, &a, 0.99).map_err(err)?.is_perfect_match(), "commutativity a,a");
    ensure!(check_associativity(&ProxyTransfer, &a, &a, &a, 0.99).map_err(err)?.is_perfect_match(), "associativity a,a,a");

    let gentle: Vec<ImageInput> = (0..30)
        .map(|i| ImageInput::memory(format!("g{i}"), common::gentle(i, 64, 64)))
        .collect();
    let reports = run_triples(&ProxyTransfer, &gentle, 200, 42, 0.99).map_err(err)?;
    let worst = reports.iter().map(|r| r.ssim.mean_score).fold(f64::INFINITY, f64::min);
    ensure!(worst >= 0.99, "associativity SSIM down to {worst}");

    let pool = synth::face_pool(200, 64, 42);
    let reports = run_triples(&ProxyTransfer, &pool, 1000, 42, 0.99).map_err(err)?;
    let text = aggregate(&reports).map_err(err)?.render();
    let lines: Vec<&str> = text.lines().collect();
    ensure!(lines.first() == Some(&"Batch size: 1000"), "aggregate header {:?}", lines.first());
    for (line, name) in lines[1..].iter().zip(["SSIM", "Correlation", "Chi-Square", "Bhattacharyya distance"]) {
        let shaped = line.starts_with(&format!("{name}: "))
            && line.contains(" (with variance = ")
            && line.ends_with(')');
        ensure!(shaped, "line {line:?}");
    }
    ensure!(lines.len() == 5, "{} aggregate lines", lines.len());
    println!("{text}");
    Ok(format!("identical operands perfect, gentle associativity >= {worst:.4}, 1000-triple aggregate rendered"))
}

fn dataset_protocol(task: &ProxyTask) -> Outcome {
    for class in Label::ALL {
        for (split, want) in [(Split::Train, 1200), (Split::Test, 200)] {
            let got = task.manifest.count(class, split);
            ensure!(got == want, "{class} {split:?}: {got}");
        }
    }
    let c = &task.corpus;
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let small = DatasetOptions::new(SplitCounts { train: 3, test: 1 });
    let attempt = |t2: &[ImageInput]| {
        build_dataset(&c.sources[..4], &c.targets1[..4], t2, &ProxyTransfer, scratch.path(), &small)
    };
    let mut shares_t1 = c.targets2[..4].to_vec();
    shares_t1[1] = c.targets1[1].clone();
    ensure!(matches!(attempt(&shares_t1), Err(DatasetError::Disjointness { .. })), "t2 = t1 accepted");
    let mut shares_source = c.targets2[..4].to_vec();
    shares_source[0] = c.sources[0].clone();
    ensure!(matches!(attempt(&shares_source), Err(DatasetError::Disjointness { .. })), "t2 = s accepted");

    let t2: HashMap<String, Arc<RasterImage>> = c
        .targets2
        .iter()
        .map(|t| t.load().map(|img| (t.id().to_string(), img)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    task.manifest.verify_files(task.dir.path()).map_err(|e| e.to_string())?;
    let checked = task
        .manifest
        .verify_chains(task.dir.path(), &ProxyTransfer as &dyn StyleTransferOp, |id| t2.get(id).cloned())
        .map_err(|e| e.to_string())?;
    ensure!(checked == 1400, "{checked} chains checked");
    Ok(format!("1200/200 per class, overlaps rejected, {checked} chains re-derived"))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    match &outcome {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(why) => println!("FAIL  {name}: {why}"),
    }
    outcome.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= run("dct oracle", dct_oracle);
    ok &= run("zigzag scan", zigzag);
    ok &= run("beta estimator", beta);
    ok &= run("classifier sanity", classifier_sanity);
    let task = build_proxy_task();
    ok &= run("comparison grid on proxy 2400/400", || proxy_grid(task.as_ref().map_err(Clone::clone)?));
    ok &= run("histogram metrics", histograms);
    ok &= run("ssim", ssim_checks);
    ok &= run("property harness", properties);
    ok &= run("dataset protocol", || dataset_protocol(task.as_ref().map_err(Clone::clone)?));
    if !ok {
        std::process::exit(1);
    }
}
