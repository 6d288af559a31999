use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde_json::{json, Value};

use socialkc::analysis::{compare_runs, randomize_tags, Grouping, TagKind};
use socialkc::classifier::{
    classifier_manifest, predict_categories, train_classifier as fit_classifier, CategoryClassifier,
    ClassifierConfig,
};
use socialkc::corpus::{
    join_annotations, load_category_annotations, load_socialiqa, load_tagged, locate_annotations,
    locate_split, save_tagged,
};
use socialkc::fsutil::{write_atomic, write_json_atomic};
use socialkc::manifest::RunManifest;
use socialkc::qa::{evaluate, grid_search, AugmentationMode, HyperGrid, QAEvalResult, QATrainConfig, QaModel};
use socialkc::tagger::RelationTagger;
use socialkc::{CategorySource, TaggedExample};

use crate::config::{layered, ConfigFile, Flags};
use crate::run::Run;
use crate::{Common, GridChoice, QaFlags, TrainFlags};

const DEFAULT_SEED: u64 = 42;
const CLASSIFIER_FILE: &str = "classifier.json";
const QA_FILE: &str = "qa.json";

struct Settings {
    file: ConfigFile,
    seed: u64,
}

fn settings(common: &Common) -> Result<Settings> {
    let file = ConfigFile::load(common.config.as_deref())?;
    let seed = match common.seed {
        Some(s) => s,
        None => file.seed()?.unwrap_or(DEFAULT_SEED),
    };
    Ok(Settings { file, seed })
}

fn data_root(common: &Common, what: &str) -> Result<PathBuf> {
    common
        .data
        .clone()
        .with_context(|| format!("{what}: pass --data or set SOCIALKC_DATA"))
}

/// Inputs are checked before the run starts, so the config file is an input too.
fn with_config<'a>(common: &'a Common, mut inputs: Vec<(&'a str, &'a Path)>) -> Vec<(&'a str, &'a Path)> {
    if let Some(c) = common.config.as_deref() {
        inputs.push(("config", c));
    }
    inputs
}

// tag -----------------------------------------------------------------------

pub fn tag(common: &Common, split: &str, input: Option<PathBuf>, labels: Option<PathBuf>) -> Result<()> {
    let s = settings(common)?;
    let (data, labels) = match input {
        Some(p) => (p, labels),
        None => {
            let root = data_root(common, "tag")?;
            let f = locate_split(&root, split)
                .with_context(|| format!("no {split} split under {}", root.display()))?;
            (f.data, f.labels)
        }
    };
    let mut inputs = vec![("data", data.as_path())];
    if let Some(l) = labels.as_deref() {
        inputs.push(("labels", l));
    }
    let manifest = RunManifest::start("tag", json!({"split": split}), s.seed);
    let mut run = Run::begin(manifest, &common.out, &with_config(common, inputs))?;

    let examples = load_socialiqa(&data, labels.as_deref())?;
    let (tagged, histogram) = RelationTagger::default().tag_dataset(&examples)?;
    save_tagged(&run.output("tagged.jsonl"), &tagged)?;
    let counts: serde_json::Map<String, Value> =
        histogram.iter().map(|(t, n)| (t.to_string(), json!(n))).collect();
    write_json_atomic(&run.output("histogram.json"), &counts)?;
    run.manifest.note("examples", tagged.len())?;
    run.finish()?;

    println!("{} examples tagged", histogram.total());
    for (t, n) in histogram.iter() {
        println!("  {t:<8} {n:>7}");
    }
    Ok(())
}

// train-classifier ------------------------------------------------------------

pub struct ClassifierInputs {
    pub train_annotations: Option<PathBuf>,
    pub dev_annotations: Option<PathBuf>,
    pub train_data: Option<PathBuf>,
    pub dev_data: Option<PathBuf>,
}

fn train_flags(f: &TrainFlags, seed: u64) -> Flags {
    Flags::default()
        .set("encoder_name", f.encoder.clone())
        .set("learning_rate", f.learning_rate)
        .set("batch_size", f.batch_size)
        .set("max_epochs", f.epochs)
        .set("max_sequence_length", f.max_length)
        .set("seed", Some(seed))
}

pub fn train_classifier(common: &Common, inputs: ClassifierInputs, flags: &TrainFlags) -> Result<()> {
    let s = settings(common)?;
    let config: ClassifierConfig = layered(
        &ClassifierConfig::default(),
        s.file.section("classifier"),
        train_flags(flags, s.seed).into_map(),
        "classifier",
    )?;
    config.validate()?;

    let resolve = |given: Option<PathBuf>, split: &str, annotations: bool| -> Result<(PathBuf, Option<PathBuf>)> {
        if let Some(p) = given {
            return Ok((p, None));
        }
        let root = data_root(common, "train-classifier")?;
        if annotations {
            let p = locate_annotations(&root, split)
                .with_context(|| format!("no {split} category annotations under {}", root.display()))?;
            Ok((p, None))
        } else {
            let f = locate_split(&root, split)
                .with_context(|| format!("no {split} split under {}", root.display()))?;
            Ok((f.data, f.labels))
        }
    };
    let (train_ann, _) = resolve(inputs.train_annotations, "train", true)?;
    let (dev_ann, _) = resolve(inputs.dev_annotations, "dev", true)?;
    let (train_data, train_labels) = resolve(inputs.train_data, "train", false)?;
    let (dev_data, dev_labels) = resolve(inputs.dev_data, "dev", false)?;

    let manifest = RunManifest::start("train-classifier", serde_json::to_value(&config)?, s.seed);
    let paths = vec![
        ("train_annotations", train_ann.as_path()),
        ("dev_annotations", dev_ann.as_path()),
        ("train_data", train_data.as_path()),
        ("dev_data", dev_data.as_path()),
    ];
    let mut run = Run::begin(manifest, &common.out, &with_config(common, paths))?;
    run.manifest.sub_seed("init");
    run.manifest.sub_seed("shuffle");

    let join = |ann: &Path, data: &Path, labels: Option<&Path>| -> Result<_> {
        let examples = load_socialiqa(data, labels)?;
        Ok(join_annotations(&examples, &load_category_annotations(ann)?)?)
    };
    let train = join(&train_ann, &train_data, train_labels.as_deref())?;
    let dev = join(&dev_ann, &dev_data, dev_labels.as_deref())?;
    info!("{} training and {} dev annotations", train.len(), dev.len());

    let (model, report) = fit_classifier(&train, &dev, &config)?;
    let summary = classifier_manifest(&report, &train, &dev)?;
    model.save(&run.output("model"), &summary)?;
    write_json_atomic(&run.output("report.json"), &report)?;
    run.manifest.note("dev_accuracy", report.dev_accuracy)?;
    run.finish()?;
    println!("classifier dev accuracy {:.2}%", 100.0 * report.dev_accuracy);
    Ok(())
}

// label -------------------------------------------------------------------------

/// A run directory or the model directory inside it.
fn model_dir(path: &Path, marker: &str, sub: &str) -> Result<PathBuf> {
    if path.join(marker).is_file() {
        return Ok(path.to_path_buf());
    }
    if path.join(sub).join(marker).is_file() {
        return Ok(path.join(sub));
    }
    bail!("{} holds no {marker} (also looked in {sub}/)", path.display())
}

pub fn label(common: &Common, model: &Path, input: &Path, annotations: Option<&Path>) -> Result<()> {
    let s = settings(common)?;
    let mut paths = vec![("model", model), ("input", input)];
    if let Some(a) = annotations {
        paths.push(("annotations", a));
    }
    let manifest = RunManifest::start("label", json!({"human_override": annotations.is_some()}), s.seed);
    let mut run = Run::begin(manifest, &common.out, &with_config(common, paths))?;

    let (classifier, _) = CategoryClassifier::load(&model_dir(model, CLASSIFIER_FILE, "model")?)?;
    let tagged = load_tagged(input)?;
    let predicted = predict_categories(&classifier, &tagged)?;
    let mut labeled = predicted.examples;
    if let Some(a) = annotations {
        let human: HashMap<String, _> = load_category_annotations(a)?
            .into_iter()
            .map(|a| (a.example_id, a.category))
            .collect();
        let mut applied = 0;
        for t in labeled.iter_mut() {
            if let Some(c) = human.get(t.id()) {
                *t = t.clone().with_category(*c, CategorySource::Human);
                applied += 1;
            }
        }
        run.manifest.note("human_labels", applied)?;
    }
    if predicted.truncated > 0 {
        run.manifest.note("truncated_contexts", predicted.truncated)?;
    }
    save_tagged(&run.output("labeled.jsonl"), &labeled)?;
    run.finish()?;
    println!("{} examples labeled", labeled.len());
    Ok(())
}

// train-qa / ablate ---------------------------------------------------------------

fn qa_config(s: &Settings, flags: &QaFlags) -> Result<QATrainConfig> {
    let f = train_flags(&flags.train, s.seed)
        .set("gradient_accumulation", flags.gradient_accumulation)
        .set("allow_off_grid", flags.allow_off_grid.then_some(true));
    let config: QATrainConfig = layered(&QATrainConfig::default(), s.file.section("qa"), f.into_map(), "qa")?;
    config.validate()?;
    Ok(config)
}

fn grid(s: &Settings, flags: &QaFlags, config: &QATrainConfig) -> Result<HyperGrid> {
    match flags.grid {
        Some(GridChoice::Single) => Ok(HyperGrid::single(config)),
        Some(GridChoice::Default) => Ok(HyperGrid::default()),
        None => layered(&HyperGrid::default(), s.file.section("grid"), Default::default(), "grid"),
    }
}

fn check_mode(data: &[TaggedExample], mode: AugmentationMode, path: &Path) -> Result<()> {
    let missing = |t: &&TaggedExample| {
        (mode.uses_relation() && t.relation.is_none()) || (mode.uses_category() && t.category.is_none())
    };
    if let Some(t) = data.iter().find(missing) {
        bail!(
            "{}: example {} lacks the tags mode {mode} needs; run `tag`{} first",
            path.display(),
            t.id(),
            if mode.uses_category() { " and `label`" } else { "" }
        );
    }
    Ok(())
}

fn fit_and_write(
    run: &mut Run,
    train: &[TaggedExample],
    dev: &[TaggedExample],
    mode: AugmentationMode,
    hyper: &HyperGrid,
    base: &QATrainConfig,
) -> Result<QAEvalResult> {
    run.manifest.sub_seed("init");
    run.manifest.sub_seed("shuffle");
    run.manifest.note("grid", hyper)?;
    if base.allow_off_grid {
        run.manifest.note("off_grid", true)?;
    }
    let trials = run.output("trials");
    std::fs::create_dir_all(&trials)?;
    let outcome = grid_search(train, dev, mode, hyper, base, Some(&trials))?;
    outcome.model.save(&run.output("best"))?;
    outcome.dev_result.save(&run.output("dev_result.json"))?;
    write_atomic(
        &run.output("predictions.txt"),
        outcome.dev_result.prediction_file().as_bytes(),
    )?;
    run.manifest.note("best_trial", outcome.best_trial)?;
    run.manifest.note("best_config", &outcome.best_config)?;
    run.manifest.note("dev_accuracy", outcome.dev_result.accuracy)?;
    let failed = outcome.trials.iter().filter(|t| t.error.is_some()).count();
    if failed > 0 {
        warn!("{failed} of {} trials failed", outcome.trials.len());
    }
    Ok(outcome.dev_result)
}

pub fn train_qa(
    common: &Common,
    train_path: &Path,
    dev_path: &Path,
    mode: Option<AugmentationMode>,
    flags: &QaFlags,
) -> Result<()> {
    let s = settings(common)?;
    let mode = match mode {
        Some(m) => m,
        None => match s.file.string("mode")? {
            Some(m) => m.parse()?,
            None => AugmentationMode::None,
        },
    };
    let config = qa_config(&s, flags)?;
    let hyper = grid(&s, flags, &config)?;
    let effective = json!({"mode": mode, "qa": config, "grid": hyper});
    let manifest = RunManifest::start("train-qa", effective, s.seed);
    let paths = vec![("train", train_path), ("dev", dev_path)];
    let mut run = Run::begin(manifest, &common.out, &with_config(common, paths))?;

    let train = load_tagged(train_path)?;
    let dev = load_tagged(dev_path)?;
    check_mode(&train, mode, train_path)?;
    check_mode(&dev, mode, dev_path)?;
    let result = fit_and_write(&mut run, &train, &dev, mode, &hyper, &config)?;
    run.finish()?;
    println!("{mode}: dev accuracy {:.2}% over {} trials", 100.0 * result.accuracy, hyper.len());
    Ok(())
}

pub fn ablate(common: &Common, train_path: &Path, dev_path: &Path, which: TagKind, flags: &QaFlags) -> Result<()> {
    let s = settings(common)?;
    let mode = match which {
        TagKind::Relation => AugmentationMode::RandomRelation,
        TagKind::Category => AugmentationMode::RandomCategory,
    };
    let config = qa_config(&s, flags)?;
    let hyper = grid(&s, flags, &config)?;
    let effective = json!({"which": which.name(), "mode": mode, "qa": config, "grid": hyper});
    let manifest = RunManifest::start("ablate", effective, s.seed);
    let paths = vec![("train", train_path), ("dev", dev_path)];
    let mut run = Run::begin(manifest, &common.out, &with_config(common, paths))?;

    let tag_seed = run.manifest.sub_seed("ablation");
    let train = randomize_tags(&load_tagged(train_path)?, which, tag_seed);
    let dev = randomize_tags(&load_tagged(dev_path)?, which, tag_seed);
    check_mode(&train, mode, train_path)?;
    check_mode(&dev, mode, dev_path)?;
    save_tagged(&run.output("train_random.jsonl"), &train)?;
    save_tagged(&run.output("dev_random.jsonl"), &dev)?;
    let result = fit_and_write(&mut run, &train, &dev, mode, &hyper, &config)?;
    run.finish()?;
    println!("{mode}: dev accuracy {:.2}%", 100.0 * result.accuracy);
    Ok(())
}

// eval ------------------------------------------------------------------------------

pub fn eval(common: &Common, model: &Path, input: &Path, mode: Option<AugmentationMode>) -> Result<()> {
    let s = settings(common)?;
    let manifest = RunManifest::start("eval", json!({"mode": mode}), s.seed);
    let mut run = Run::begin(manifest, &common.out, &with_config(common, vec![("model", model), ("input", input)]))?;

    let qa = QaModel::load(&model_dir(model, QA_FILE, "best")?)?;
    let mode = match mode {
        Some(m) => m,
        None => match s.file.string("mode")? {
            Some(m) => m.parse()?,
            None => qa.mode(),
        },
    };
    run.manifest.config = json!({"mode": mode});
    let data = load_tagged(input)?;
    let labeled = data.iter().all(|t| t.example.gold_index().is_some());
    if labeled {
        let result = evaluate(&qa, &data, mode)?;
        result.save(&run.output("result.json"))?;
        write_atomic(&run.output("predictions.txt"), result.prediction_file().as_bytes())?;
        run.manifest.note("accuracy", result.accuracy)?;
        run.finish()?;
        println!("{mode}: accuracy {:.2}% on {} examples", 100.0 * result.accuracy, data.len());
    } else {
        if mode != qa.mode() {
            bail!("model was trained with mode {}, asked to score with {mode}", qa.mode());
        }
        let predictions = qa.predict(&data)?;
        let text: String = predictions.iter().map(|p| format!("{}\n", p + 1)).collect();
        write_atomic(&run.output("predictions.txt"), text.as_bytes())?;
        run.finish()?;
        println!("{} predictions written (input has no gold labels)", predictions.len());
    }
    Ok(())
}

// analyze -----------------------------------------------------------------------------

pub fn analyze(common: &Common, results: &[PathBuf], tagged: Option<&Path>, annotations: Option<&Path>) -> Result<()> {
    let s = settings(common)?;
    let mut paths: Vec<(String, &Path)> = results
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("result_{i}"), p.as_path()))
        .collect();
    if let Some(t) = tagged {
        paths.push(("tagged".into(), t));
    }
    if let Some(a) = annotations {
        paths.push(("annotations".into(), a));
    }
    let roles: Vec<(&str, &Path)> = paths.iter().map(|(r, p)| (r.as_str(), *p)).collect();
    let manifest = RunManifest::start("analyze", json!({"runs": results.len()}), s.seed);
    let mut run = Run::begin(manifest, &common.out, &with_config(common, roles))?;

    let loaded = results
        .iter()
        .map(|p| QAEvalResult::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let relations = tagged
        .map(|t| -> Result<_> {
            Ok(load_tagged(t)?
                .into_iter()
                .filter_map(|x| x.relation_tag().map(|r| (x.id().to_string(), r)))
                .collect::<HashMap<_, _>>())
        })
        .transpose()?;
    let categories = annotations
        .map(|a| -> Result<_> {
            Ok(load_category_annotations(a)?
                .into_iter()
                .map(|x| (x.example_id, x.category))
                .collect::<HashMap<_, _>>())
        })
        .transpose()?;
    let report = compare_runs(&loaded, &Grouping { relations, categories })?;
    write_atomic(&run.output("report.json"), report.to_json()?.as_bytes())?;
    let text = report.to_text();
    write_atomic(&run.output("report.txt"), text.as_bytes())?;
    run.finish()?;
    print!("{text}");
    Ok(())
}
