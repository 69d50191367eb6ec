use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use deepfake_ballistics::ballistics::{
    self, properties, DatasetManifest, DatasetOptions, ExternalTransfer, ImageInput,
    PropertyReport, ProxyTransfer, SplitCounts, StyleTransferOp, MANIFEST_FILE,
};
use deepfake_ballistics::classifiers::{
    self, ClassifierConfig, Family, LabeledDataset, Split, SvmKernel, TrainedModel,
};
use deepfake_ballistics::features;
use deepfake_ballistics::imaging;
use deepfake_ballistics::similarity::{self, HistogramMetric};
use deepfake_ballistics::store::{self, FeatureRecord};
use deepfake_ballistics::{synth, Label};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::provenance::{log_path_for_file, write_log, Provenance};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// A JSON artifact body with provenance fields merged in at the top level.
#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

fn stamped_json<T: Serialize>(provenance: &Provenance, body: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(&Stamped { provenance, body })?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn is_image(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files directly inside `dir`, sorted by name.
fn list_images(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if is_image(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn parse_label(s: &str) -> CliResult<Label> {
    s.parse()
        .map_err(|_| CliError::usage(format!("unknown label {s:?}; use Deepfake-2 or Deepfake-3")))
}

fn read_feature_file(path: &Path) -> CliResult<Vec<FeatureRecord>> {
    let f = fs::File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(store::read_features(f)?)
}

fn load_manifest(path: &Path) -> CliResult<DatasetManifest> {
    let m = DatasetManifest::load(path)?;
    m.validate()?;
    Ok(m)
}

/// Labelled rows, restricted to `split` when a manifest is given. Labels
/// missing from the CSV are filled in from the manifest; conflicting
/// labels are an error.
fn select_rows(
    records: &[FeatureRecord],
    manifest: Option<&DatasetManifest>,
    split: Split,
) -> CliResult<LabeledDataset> {
    let Some(m) = manifest else {
        return Ok(LabeledDataset::from_records(records));
    };
    let by_stem: HashMap<String, (Split, Label)> = m
        .entries
        .iter()
        .map(|e| (e.stem(), (e.split, e.class)))
        .collect();
    let mut kept = Vec::new();
    for r in records {
        let id = &r.vector.source_id;
        let &(s, class) = by_stem
            .get(id)
            .ok_or_else(|| CliError::invalid(format!("feature row {id:?} is not in the manifest")))?;
        if let Some(l) = r.label.filter(|&l| l != class) {
            return Err(CliError::invalid(format!(
                "feature row {id:?} is labelled {l} but the manifest says {class}"
            )));
        }
        if s == split {
            kept.push(FeatureRecord {
                vector: r.vector.clone(),
                label: Some(class),
            });
        }
    }
    Ok(LabeledDataset::from_records(&kept))
}

fn parse_classifier(spec: &str, seed: u64) -> CliResult<ClassifierConfig> {
    let bad = || {
        CliError::usage(format!(
            "unknown classifier {spec:?}; use knn:K, svm:KERNEL, lda, tree, rf or gboost"
        ))
    };
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let family = match (name, arg) {
        ("knn", Some(k)) => Family::Knn {
            k: k.parse().map_err(|_| bad())?,
        },
        ("knn", None) => Family::Knn { k: 5 },
        ("svm", kernel) => {
            let kernel = match kernel.unwrap_or("rbf") {
                "linear" => SvmKernel::Linear,
                "poly" => SvmKernel::Poly,
                "rbf" => SvmKernel::Rbf,
                "sigmoid" => SvmKernel::Sigmoid,
                _ => return Err(bad()),
            };
            return Ok(ClassifierConfig::new(
                Family::Svm(classifiers::SvmParams::with_kernel(kernel)),
                seed,
            ));
        }
        ("lda", None) => Family::Lda,
        ("tree", None) => Family::DecisionTree,
        ("rf", None) => Family::RandomForest(Default::default()),
        ("gboost", None) => Family::GBoost(Default::default()),
        _ => return Err(bad()),
    };
    Ok(ClassifierConfig::new(family, seed))
}

fn make_operator(args: &OperatorArgs) -> CliResult<Box<dyn StyleTransferOp>> {
    Ok(match &args.op_command {
        Some(template) => {
            let mut op = ExternalTransfer::new(template)?;
            if let Some(id) = &args.engine_id {
                op = op.with_engine(id.clone(), args.engine_seed);
            }
            Box::new(op)
        }
        None => match args.op {
            OpKind::Proxy => Box::new(ProxyTransfer),
        },
    })
}

pub fn extract(args: &ExtractArgs) -> CliResult<()> {
    let prov = Provenance::new("extract", args);
    let fixed = args.label.as_deref().map(parse_label).transpose()?;
    if !args.images.is_dir() {
        return Err(CliError::io(format!(
            "{} is not a directory",
            args.images.display()
        )));
    }
    let mut jobs: Vec<(PathBuf, Option<Label>)> = Vec::new();
    let class_dirs: Vec<Label> = Label::ALL
        .into_iter()
        .filter(|l| args.images.join(l.as_str()).is_dir())
        .collect();
    if class_dirs.is_empty() {
        jobs.extend(list_images(&args.images)?.into_iter().map(|p| (p, fixed)));
    } else {
        for label in class_dirs {
            let files = list_images(&args.images.join(label.as_str()))?;
            jobs.extend(files.into_iter().map(|p| (p, Some(label))));
        }
    }
    if jobs.is_empty() {
        return Err(CliError::invalid(format!(
            "no PNG or JPEG images in {}",
            args.images.display()
        )));
    }
    let paths: Vec<PathBuf> = jobs.iter().map(|(p, _)| p.clone()).collect();
    let vectors = features::extract_files(&paths);
    let mut records = Vec::with_capacity(jobs.len());
    for ((path, label), v) in jobs.into_iter().zip(vectors) {
        let vector = v.map_err(|e| {
            let err = CliError::from(e);
            CliError {
                message: format!("{}: {}", path.display(), err.message),
                ..err
            }
        })?;
        records.push(FeatureRecord { vector, label });
    }
    let mut buf = Vec::new();
    store::write_features(&mut buf, &records, Some(&prov.comment()))?;
    write_file(&args.out, buf)?;
    write_log(&log_path_for_file(&args.out), "extract", args, &prov, None)?;
    println!("extracted {} images to {}", records.len(), args.out.display());
    Ok(())
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let prov = Provenance::new("train", args);
    let config = parse_classifier(&args.classifier, args.seed)?;
    let records = read_feature_file(&args.features)?;
    let manifest = args.split.split_manifest.as_deref().map(load_manifest).transpose()?;
    let data = select_rows(&records, manifest.as_ref(), Split::Train)?;
    let mut model = classifiers::train(&config, &data)?;
    model.provenance = prov.as_map();
    write_file(&args.out, model.to_json())?;
    write_log(&log_path_for_file(&args.out), "train", args, &prov, Some(args.seed))?;
    println!(
        "trained {} on {} rows; model written to {}",
        config.family.name(),
        data.len(),
        args.out.display()
    );
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let prov = Provenance::new("evaluate", args);
    let text = fs::read_to_string(&args.model)
        .map_err(|e| CliError::io(format!("{}: {e}", args.model.display())))?;
    let model = TrainedModel::from_json(&text)?;
    let records = read_feature_file(&args.features)?;
    let manifest = args.split.split_manifest.as_deref().map(load_manifest).transpose()?;
    let data = select_rows(&records, manifest.as_ref(), Split::Test)?;
    let report = classifiers::evaluate(&model, &data)?;
    for label in Label::ALL {
        let m = report.class(label);
        println!(
            "{label}: precision {:.2} recall {:.2} f1 {:.2} (support {})",
            m.precision, m.recall, m.f1, m.support
        );
    }
    println!("accuracy {}%", report.accuracy_percent());
    if let Some(out) = &args.out {
        write_file(out, stamped_json(&prov, &report)?)?;
        write_log(&log_path_for_file(out), "evaluate", args, &prov, None)?;
    }
    Ok(())
}

pub fn grid(args: &GridArgs) -> CliResult<()> {
    let prov = Provenance::new("grid", args);
    let records = read_feature_file(&args.features)?;
    let manifest = load_manifest(&args.split_manifest)?;
    let train = select_rows(&records, Some(&manifest), Split::Train)?;
    let test = select_rows(&records, Some(&manifest), Split::Test)?;
    let entries = classifiers::standard_grid(args.seed, args.include_k1);
    let table = classifiers::run_grid(&train, &test, &entries)?;
    let csv = format!("# {}\n{}", prov.comment(), table.to_csv());
    write_file(&args.out, csv)?;
    let rendered = table.render_text();
    if let Some(path) = &args.text {
        write_file(path, format!("{}\n{rendered}", prov.comment()))?;
    }
    write_log(&log_path_for_file(&args.out), "grid", args, &prov, Some(args.seed))?;
    print!("{rendered}");
    Ok(())
}

pub fn fig4(args: &Fig4Args) -> CliResult<()> {
    let prov = Provenance::new("fig4", args);
    let records = read_feature_file(&args.features)?;
    let curves = store::class_mean_curves(&records)?;
    let mut buf = Vec::new();
    store::write_mean_curves(&mut buf, &curves, Some(&prov.comment()))?;
    write_file(&args.out, buf)?;
    write_log(&log_path_for_file(&args.out), "fig4", args, &prov, None)?;
    println!("wrote {} AC indices to {}", curves.len(), args.out.display());
    Ok(())
}

fn file_inputs(dir: &Path) -> CliResult<Vec<ImageInput>> {
    Ok(list_images(dir)?.into_iter().map(ImageInput::file).collect())
}

pub fn make_dataset(args: &MakeDatasetArgs) -> CliResult<()> {
    let prov = Provenance::new("make-dataset", args);
    let op = make_operator(&args.operator)?;
    let counts = SplitCounts {
        train: args.train,
        test: args.test,
    };
    let (sources, targets1, targets2) = if args.synthetic {
        let c = synth::synthetic_corpus(counts.per_class(), args.target_pool, args.size, args.seed);
        (c.sources, c.targets1, c.targets2)
    } else {
        let inputs = |p: &Option<PathBuf>, flag: &str| match p {
            Some(dir) => file_inputs(dir),
            None => Err(CliError::usage(format!(
                "--{flag} is required without --synthetic"
            ))),
        };
        (
            inputs(&args.sources, "sources")?,
            inputs(&args.targets1, "targets1")?,
            inputs(&args.targets2, "targets2")?,
        )
    };
    let mut options = DatasetOptions::new(counts);
    options.batch = args.batch;
    options.workers = args.max_concurrent;
    options.provenance = prov.as_map();
    options.provenance.insert("seed".into(), args.seed.to_string());
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    let manifest =
        ballistics::build_dataset(&sources, &targets1, &targets2, op.as_ref(), &args.out, &options)?;
    write_log(&args.out.join("run.log"), "make-dataset", args, &prov, Some(args.seed))?;
    println!(
        "wrote {} images ({} train, {} test per class) and {}",
        manifest.entries.len(),
        counts.train,
        counts.test,
        args.out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

pub fn ssim(args: &SsimArgs) -> CliResult<()> {
    let prov = Provenance::new("ssim", args);
    let a = imaging::load_image(&args.a)?;
    let b = imaging::load_image(&args.b)?;
    let result = similarity::ssim(&a, &b)?;
    if let Some(map) = &args.map {
        result.save_map_png(map)?;
    }
    let json = stamped_json(&prov, &result)?;
    print!("{json}");
    if let Some(out) = &args.out {
        write_file(out, &json)?;
        write_log(&log_path_for_file(out), "ssim", args, &prov, None)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HistScores {
    #[serde(skip_serializing_if = "Option::is_none")]
    correlation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_square: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bhattacharyya: Option<f64>,
}

pub fn hist_compare(args: &HistCompareArgs) -> CliResult<()> {
    let prov = Provenance::new("hist-compare", args);
    let ha = similarity::rgb_histogram(&imaging::load_image(&args.a)?);
    let hb = similarity::rgb_histogram(&imaging::load_image(&args.b)?);
    let want = |m: HistogramMetric| match args.metric {
        MetricChoice::All => true,
        MetricChoice::Correlation => m == HistogramMetric::Correlation,
        MetricChoice::ChiSquare => m == HistogramMetric::ChiSquare,
        MetricChoice::Bhattacharyya => m == HistogramMetric::Bhattacharyya,
    };
    let score = |m: HistogramMetric| -> CliResult<Option<f64>> {
        Ok(if want(m) {
            Some(similarity::compare(&ha, &hb, m)?)
        } else {
            None
        })
    };
    let scores = HistScores {
        correlation: score(HistogramMetric::Correlation)?,
        chi_square: score(HistogramMetric::ChiSquare)?,
        bhattacharyya: score(HistogramMetric::Bhattacharyya)?,
    };
    let json = stamped_json(&prov, &scores)?;
    print!("{json}");
    if let Some(out) = &args.out {
        write_file(out, &json)?;
        write_log(&log_path_for_file(out), "hist-compare", args, &prov, None)?;
    }
    Ok(())
}

fn property_pool(args: &PropertiesArgs) -> CliResult<Vec<ImageInput>> {
    match &args.images {
        Some(dir) => Ok(properties::preload(&file_inputs(dir)?)?),
        None => Ok(synth::face_pool(args.pool, args.size, args.seed)),
    }
}

pub fn properties(args: &PropertiesArgs) -> CliResult<()> {
    let prov = Provenance::new("properties", args);
    let op = make_operator(&args.operator)?;
    let pool = property_pool(args)?;
    let op = op.as_ref();
    let reports: Vec<PropertyReport> = match args.property {
        PropertyChoice::Associativity => {
            ballistics::run_triples(op, &pool, args.triples, args.seed, args.threshold)?
        }
        PropertyChoice::Commutativity => {
            ballistics::run_pairs(op, &pool, args.triples, args.seed, args.threshold)?
        }
        PropertyChoice::Neutral => {
            if pool.is_empty() {
                return Err(CliError::invalid("image pool is empty"));
            }
            let mut all = Vec::new();
            for pick in properties::sample_tuples(pool.len(), 1, args.triples, args.seed) {
                let a = &pool[pick[0]];
                let candidates = ballistics::default_neutral_candidates(a)?;
                all.extend(ballistics::check_neutral(op, a, &candidates, args.threshold)?);
            }
            all
        }
    };
    let stats = ballistics::aggregate(&reports)?;
    let rendered = stats.render();
    print!("{rendered}");
    if let Some(dir) = &args.out_dir {
        let stamped: Vec<_> = reports
            .iter()
            .map(|r| Stamped {
                provenance: &prov,
                body: r,
            })
            .collect();
        let mut json = serde_json::to_string_pretty(&stamped)?;
        json.push('\n');
        write_file(&dir.join("reports.json"), json)?;
        write_file(
            &dir.join("reports.csv"),
            format!("# {}\n{}", prov.comment(), properties::reports_csv(&reports)),
        )?;
        write_file(&dir.join("aggregate.json"), stamped_json(&prov, &stats)?)?;
        write_file(
            &dir.join("aggregate.txt"),
            format!("# {}\n{rendered}", prov.comment()),
        )?;
        write_log(&dir.join("run.log"), "properties", args, &prov, Some(args.seed))?;
    }
    Ok(())
}
