//! Deepfake-2 / Deepfake-3 dataset construction and its JSON-lines manifest.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::operator::{OperatorError, StyleTransferOp};
use crate::classifiers::Split;
use crate::imaging::{self, ImagingError, RasterImage};
use crate::label::Label;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("need {needed} {what}, got {got}")]
    InsufficientInputs {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("identifier {id:?} appears in both {first} and {second}")]
    Disjointness {
        id: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("duplicate identifier {0:?} within one input set")]
    DuplicateId(String),
    #[error("operator failed on chain {index} (source {source_id}): {error}")]
    Operator {
        index: usize,
        source_id: String,
        #[source]
        error: OperatorError,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("io error at {path}: {error}")]
    Io {
        path: PathBuf,
        #[source]
        error: std::io::Error,
    },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("manifest entry {path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |error| DatasetError::Io {
        path: path.to_path_buf(),
        error,
    }
}

/// An identified image, either on disk (decoded on demand) or in memory.
#[derive(Clone, Debug)]
pub enum ImageInput {
    File { id: String, path: PathBuf },
    Memory { id: String, image: Arc<RasterImage> },
}

impl ImageInput {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        Self::File {
            id: crate::features::source_id_for(&path),
            path,
        }
    }

    pub fn memory(id: impl Into<String>, image: RasterImage) -> Self {
        Self::Memory {
            id: id.into(),
            image: Arc::new(image),
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Self::File { id, .. } | Self::Memory { id, .. } => id,
        }
    }

    pub fn load(&self) -> Result<Arc<RasterImage>, ImagingError> {
        match self {
            Self::File { path, .. } => Ok(Arc::new(imaging::load_image(path)?)),
            Self::Memory { image, .. } => Ok(Arc::clone(image)),
        }
    }
}

/// Per-class sizes: each class gets `train` training and `test` test images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub test: usize,
}

impl SplitCounts {
    /// 1200 training and 200 test images per class.
    pub const PROTOCOL: SplitCounts = SplitCounts {
        train: 1200,
        test: 200,
    };

    pub fn per_class(&self) -> usize {
        self.train + self.test
    }

    pub fn split_of(&self, chain: usize) -> Split {
        if chain < self.train {
            Split::Train
        } else {
            Split::Test
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub operator_id: String,
    pub counts: SplitCounts,
    /// Caller-supplied provenance (config hash, seed, ...).
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the dataset root.
    pub output_path: String,
    pub class: Label,
    pub source_id: String,
    /// Targets in application order: `[t1]` or `[t1, t2]`.
    pub target_ids: Vec<String>,
    pub operator_id: String,
    pub split: Split,
    /// For Deepfake-3 entries, the output path of the Deepfake-2 image the
    /// second pass was applied to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Header(ManifestHeader),
    Entry(ManifestEntry),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl ManifestEntry {
    pub fn stem(&self) -> String {
        crate::features::source_id_for(Path::new(&self.output_path))
    }

    /// Checks the per-entry target-count and disjointness invariants.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |reason: String| DatasetError::Invalid {
            path: self.output_path.clone(),
            reason,
        };
        let want = match self.class {
            Label::Deepfake2 => 1,
            Label::Deepfake3 => 2,
        };
        if self.target_ids.len() != want {
            return Err(invalid(format!(
                "{} entries need {want} target(s), found {}",
                self.class,
                self.target_ids.len()
            )));
        }
        if self.class == Label::Deepfake3 {
            let t2 = &self.target_ids[1];
            if t2 == &self.target_ids[0] {
                return Err(invalid(format!("second target {t2:?} repeats the first")));
            }
            if t2 == &self.source_id {
                return Err(invalid(format!("second target {t2:?} is the source")));
            }
            if self.parent.is_none() {
                return Err(invalid("Deepfake-3 entry has no parent".into()));
            }
        }
        Ok(())
    }
}

impl DatasetManifest {
    pub fn count(&self, class: Label, split: Split) -> usize {
        self.entries
            .iter()
            .filter(|e| e.class == class && e.split == split)
            .count()
    }

    /// Split assignment keyed by output file stem, which is also the
    /// `source_id` that feature extraction assigns to each image.
    pub fn split_map(&self) -> HashMap<String, Split> {
        self.entries.iter().map(|e| (e.stem(), e.split)).collect()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), serde_json::Error> {
        let mut line = serde_json::to_string(&Record::Header(self.header.clone()))?;
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(serde_json::Error::io)?;
        for e in &self.entries {
            let mut line = serde_json::to_string(&Record::Entry(e.clone()))?;
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(serde_json::Error::io)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, DatasetError> {
        let mut header = None;
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| DatasetError::Manifest {
                line: i + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| DatasetError::Manifest {
                line: i + 1,
                reason: e.to_string(),
            })?;
            match rec {
                Record::Header(h) if header.is_none() && entries.is_empty() => {
                    if h.schema_version != MANIFEST_SCHEMA_VERSION {
                        return Err(DatasetError::Manifest {
                            line: i + 1,
                            reason: format!("unsupported schema version {}", h.schema_version),
                        });
                    }
                    header = Some(h);
                }
                Record::Header(_) => {
                    return Err(DatasetError::Manifest {
                        line: i + 1,
                        reason: "header must be the first record".into(),
                    })
                }
                Record::Entry(e) => entries.push(e),
            }
        }
        let header = header.ok_or(DatasetError::Manifest {
            line: 1,
            reason: "missing header record".into(),
        })?;
        Ok(Self { header, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(io_err(path))?;
        Self::read(BufReader::new(f))
    }

    /// Entry invariants, unique output paths, and resolvable parents.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = HashMap::new();
        for e in &self.entries {
            e.validate()?;
            if seen.insert(e.output_path.as_str(), e).is_some() {
                return Err(DatasetError::Invalid {
                    path: e.output_path.clone(),
                    reason: "duplicate output path".into(),
                });
            }
        }
        for e in &self.entries {
            if let Some(p) = &e.parent {
                match seen.get(p.as_str()) {
                    Some(parent) if parent.class == Label::Deepfake2 => {
                        if parent.source_id != e.source_id
                            || parent.target_ids[0] != e.target_ids[0]
                        {
                            return Err(DatasetError::Invalid {
                                path: e.output_path.clone(),
                                reason: "chain does not match its parent".into(),
                            });
                        }
                    }
                    _ => {
                        return Err(DatasetError::Invalid {
                            path: e.output_path.clone(),
                            reason: format!("parent {p:?} is not a Deepfake-2 entry"),
                        })
                    }
                }
            }
        }
        Ok(())
    }

    /// Every referenced file exists under `root`.
    pub fn verify_files(&self, root: &Path) -> Result<(), DatasetError> {
        for e in &self.entries {
            if !root.join(&e.output_path).is_file() {
                return Err(DatasetError::Invalid {
                    path: e.output_path.clone(),
                    reason: "file missing".into(),
                });
            }
        }
        Ok(())
    }

    /// Re-applies `op` to each Deepfake-3 parent with its second target and
    /// compares against the stored output. `target` resolves a target id to
    /// its image. Returns the number of chains checked.
    pub fn verify_chains<F>(
        &self,
        root: &Path,
        op: &dyn StyleTransferOp,
        target: F,
    ) -> Result<usize, DatasetError>
    where
        F: Fn(&str) -> Option<Arc<RasterImage>> + Sync,
    {
        let chains: Vec<&ManifestEntry> = self
            .entries
            .iter()
            .filter(|e| e.class == Label::Deepfake3)
            .collect();
        chains.par_iter().enumerate().try_for_each(|(index, e)| {
            let invalid = |reason: String| DatasetError::Invalid {
                path: e.output_path.clone(),
                reason,
            };
            let parent = e
                .parent
                .as_ref()
                .ok_or_else(|| invalid("no parent".into()))?;
            let t2 = target(&e.target_ids[1])
                .ok_or_else(|| invalid(format!("unknown target {:?}", e.target_ids[1])))?;
            let parent_img = imaging::load_image(root.join(parent))?;
            let stored = imaging::load_image(root.join(&e.output_path))?;
            let redone = op
                .apply(&parent_img, &t2)
                .map_err(|error| DatasetError::Operator {
                    index,
                    source_id: e.source_id.clone(),
                    error,
                })?;
            if redone != stored {
                return Err(invalid("stored output differs from re-application".into()));
            }
            Ok(())
        })?;
        Ok(chains.len())
    }
}

#[derive(Clone, Debug)]
pub struct DatasetOptions {
    pub counts: SplitCounts,
    /// Worker threads; `None` uses the global pool. Also bounds how many
    /// external-engine processes run at once.
    pub workers: Option<usize>,
    /// Chains processed per commit batch.
    pub batch: usize,
    pub provenance: BTreeMap<String, String>,
}

impl DatasetOptions {
    pub fn new(counts: SplitCounts) -> Self {
        Self {
            counts,
            workers: None,
            batch: 64,
            provenance: BTreeMap::new(),
        }
    }
}

fn check_unique(set: &[ImageInput]) -> Result<HashSet<&str>, DatasetError> {
    let mut ids = HashSet::with_capacity(set.len());
    for input in set {
        if !ids.insert(input.id()) {
            return Err(DatasetError::DuplicateId(input.id().to_string()));
        }
    }
    Ok(ids)
}

fn check_inputs(
    sources: &[ImageInput],
    targets1: &[ImageInput],
    targets2: &[ImageInput],
    counts: SplitCounts,
) -> Result<(), DatasetError> {
    let needed = counts.per_class();
    if needed == 0 {
        return Err(DatasetError::InsufficientInputs {
            what: "chains per class",
            needed: 1,
            got: 0,
        });
    }
    for (what, set) in [
        ("sources", sources),
        ("first-pass targets", targets1),
        ("second-pass targets", targets2),
    ] {
        let want = if what == "sources" { needed } else { 1 };
        if set.len() < want {
            return Err(DatasetError::InsufficientInputs {
                what,
                needed: want,
                got: set.len(),
            });
        }
    }
    let src = check_unique(sources)?;
    let t1 = check_unique(targets1)?;
    check_unique(targets2)?;
    for t in targets2 {
        if t1.contains(t.id()) {
            return Err(DatasetError::Disjointness {
                id: t.id().to_string(),
                first: "first-pass targets",
                second: "second-pass targets",
            });
        }
        if src.contains(t.id()) {
            return Err(DatasetError::Disjointness {
                id: t.id().to_string(),
                first: "sources",
                second: "second-pass targets",
            });
        }
    }
    Ok(())
}

fn write_atomic(root: &Path, rel: &str, img: &RasterImage) -> Result<(), DatasetError> {
    let path = root.join(rel);
    let tmp = path.with_extension("png.tmp");
    img.save_png(&tmp)?;
    fs::rename(&tmp, &path).map_err(io_err(&path))
}

struct Chain {
    d2: ManifestEntry,
    d3: ManifestEntry,
}

/// Builds the two-class dataset under `out_dir`.
///
/// Chain `i` takes source `i` and targets `targets1[i % n1]`,
/// `targets2[i % n2]`; it produces `Deepfake-2/df2_{i}.png = s ⊕ t1` and
/// `Deepfake-3/df3_{i}.png = (s ⊕ t1) ⊕ t2`. The first `counts.train` chains
/// are training data. Chains run in parallel in batches; a batch's images
/// are renamed into place and its manifest lines appended only after every
/// chain in it succeeded, so an operator failure leaves a manifest that
/// describes exactly the files committed before it.
pub fn build_dataset(
    sources: &[ImageInput],
    targets1: &[ImageInput],
    targets2: &[ImageInput],
    op: &dyn StyleTransferOp,
    out_dir: &Path,
    options: &DatasetOptions,
) -> Result<DatasetManifest, DatasetError> {
    let counts = options.counts;
    check_inputs(sources, targets1, targets2, counts)?;
    for class in Label::ALL {
        let dir = out_dir.join(class.as_str());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }

    let operator_id = op.id();
    let header = ManifestHeader {
        schema_version: MANIFEST_SCHEMA_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        operator_id: operator_id.clone(),
        counts,
        provenance: options.provenance.clone(),
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    let mut writer = BufWriter::new(file);
    let mut manifest = DatasetManifest {
        header,
        entries: Vec::with_capacity(2 * counts.per_class()),
    };
    let write_line = |w: &mut BufWriter<fs::File>, rec: &Record| -> Result<(), DatasetError> {
        let line = serde_json::to_string(rec).expect("manifest records serialize");
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(io_err(&manifest_path))
    };
    write_line(&mut writer, &Record::Header(manifest.header.clone()))?;

    let pool = match options.workers {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| DatasetError::Pool(e.to_string()))?,
        ),
        None => None,
    };

    let run_chain = |i: usize| -> Result<(Chain, RasterImage, RasterImage), DatasetError> {
        let s = &sources[i];
        let t1 = &targets1[i % targets1.len()];
        let t2 = &targets2[i % targets2.len()];
        let op_err = |error| DatasetError::Operator {
            index: i,
            source_id: s.id().to_string(),
            error,
        };
        let d2_img = op.apply(&*s.load()?, &*t1.load()?).map_err(op_err)?;
        let d3_img = op.apply(&d2_img, &*t2.load()?).map_err(op_err)?;
        let split = counts.split_of(i);
        let d2_path = format!("{}/df2_{i:05}.png", Label::Deepfake2);
        let d3_path = format!("{}/df3_{i:05}.png", Label::Deepfake3);
        let chain = Chain {
            d2: ManifestEntry {
                output_path: d2_path.clone(),
                class: Label::Deepfake2,
                source_id: s.id().to_string(),
                target_ids: vec![t1.id().to_string()],
                operator_id: operator_id.clone(),
                split,
                parent: None,
            },
            d3: ManifestEntry {
                output_path: d3_path,
                class: Label::Deepfake3,
                source_id: s.id().to_string(),
                target_ids: vec![t1.id().to_string(), t2.id().to_string()],
                operator_id: operator_id.clone(),
                split,
                parent: Some(d2_path),
            },
        };
        Ok((chain, d2_img, d3_img))
    };

    let total = counts.per_class();
    let batch = options.batch.max(1);
    for start in (0..total).step_by(batch) {
        let range = start..(start + batch).min(total);
        let compute = || range.clone().into_par_iter().map(run_chain).collect::<Vec<_>>();
        let results = match &pool {
            Some(p) => p.install(compute),
            None => compute(),
        };
        let done = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        for (chain, d2_img, d3_img) in &done {
            write_atomic(out_dir, &chain.d2.output_path, d2_img)?;
            write_atomic(out_dir, &chain.d3.output_path, d3_img)?;
        }
        for (chain, _, _) in done {
            write_line(&mut writer, &Record::Entry(chain.d2.clone()))?;
            write_line(&mut writer, &Record::Entry(chain.d3.clone()))?;
            manifest.entries.push(chain.d2);
            manifest.entries.push(chain.d3);
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballistics::ProxyTransfer;

    fn inputs(prefix: &str, n: usize, base: u8) -> Vec<ImageInput> {
        (0..n)
            .map(|i| {
                let img = RasterImage::from_fn(16, 16, |x, y| {
                    let v = base.wrapping_add((x * 5 + y * 3 + i * 7) as u8 % 60);
                    [v, v / 2 + 20, 255 - v]
                });
                ImageInput::memory(format!("{prefix}{i}"), img)
            })
            .collect()
    }

    #[test]
    fn bookkeeping() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_dataset(
            &inputs("s", 10, 10),
            &inputs("a", 10, 60),
            &inputs("b", 10, 120),
            &ProxyTransfer,
            dir.path(),
            &DatasetOptions::new(SplitCounts { train: 8, test: 2 }),
        )
        .unwrap();
        assert_eq!(m.entries.len(), 20);
        for class in Label::ALL {
            assert_eq!(m.count(class, Split::Train), 8);
            assert_eq!(m.count(class, Split::Test), 2);
        }
        m.validate().unwrap();
        m.verify_files(dir.path()).unwrap();
        let reread = DatasetManifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(reread, m);
    }

    #[test]
    fn disjointness_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let opts = DatasetOptions::new(SplitCounts { train: 2, test: 1 });
        let mut t2 = inputs("b", 3, 0);
        t2.push(inputs("a", 1, 0).remove(0));
        let err = build_dataset(
            &inputs("s", 3, 0),
            &inputs("a", 3, 0),
            &t2,
            &ProxyTransfer,
            dir.path(),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::Disjointness { ref id, .. } if id == "a0"));

        let err = build_dataset(
            &inputs("s", 3, 0),
            &inputs("a", 3, 0),
            &inputs("s", 1, 0),
            &ProxyTransfer,
            dir.path(),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::Disjointness { first: "sources", .. }));
    }

    #[test]
    fn insufficient_sources() {
        let dir = tempfile::tempdir().unwrap();
        let err = build_dataset(
            &inputs("s", 2, 0),
            &inputs("a", 3, 0),
            &inputs("b", 3, 0),
            &ProxyTransfer,
            dir.path(),
            &DatasetOptions::new(SplitCounts { train: 2, test: 1 }),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            DatasetError::InsufficientInputs { needed: 3, got: 2, .. }
        ));
    }

    #[test]
    fn entry_invariants() {
        let mut e = ManifestEntry {
            output_path: "Deepfake-3/x.png".into(),
            class: Label::Deepfake3,
            source_id: "s".into(),
            target_ids: vec!["a".into(), "s".into()],
            operator_id: "op".into(),
            split: Split::Train,
            parent: Some("Deepfake-2/x.png".into()),
        };
        assert!(e.validate().is_err());
        e.target_ids = vec!["a".into()];
        assert!(e.validate().is_err());
        e.target_ids = vec!["a".into(), "b".into()];
        e.validate().unwrap();
    }
}
