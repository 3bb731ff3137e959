use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use offexpand::classifiers::{load_model, save_model, ClassifierConfig, ClassifierModel};
use offexpand::corpus::{
    self, load_gold_tests, load_labeled, load_tweets, synth_corpus, write_gold_tests, write_labeled,
    write_tweets, SynthConfig,
};
use offexpand::eval::{
    render_tables, run_cv_baseline, run_global_cv_experiment_traced, run_per_target_experiment,
    ExperimentReport, FoldTrace, Protocol,
};
use offexpand::expansion::{expand_target, merge_expansions, ExpansionSummary};
use offexpand::textpipe::normalize as normalize_text;
use offexpand::{write_atomic, Error, ExpansionConfig, Scalar, VERSION};
use serde::Serialize;
use serde_json::Value;

use crate::config::{
    classifier, read_config, resolve, usage, EvalFile, EvalRunConfig, ExpandRunConfig, ScalarArg,
    TrainFile, TrainRunConfig, VariantArg, DEFAULT_STRATEGIES,
};
use crate::{EvalArgs, ExpandArgs, SynthArgs, TrainArgs};

fn to_json_line<S: Serialize>(value: &S, buf: &mut String) -> Result<()> {
    buf.push_str(&serde_json::to_string(value)?);
    buf.push('\n');
    Ok(())
}

fn pretty<S: Serialize>(value: &S) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn normalize(input: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut buf = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        let at = || format!("{}: line {}", input.display(), i + 1);
        if line.trim().is_empty() {
            buf.push('\n');
            continue;
        }
        let mut record: Value = serde_json::from_str(line).with_context(|| format!("{}: invalid JSON", at()))?;
        let obj = record
            .as_object_mut()
            .ok_or_else(|| anyhow!("{}: expected a JSON object", at()))?;
        match obj.get_mut("text") {
            Some(Value::String(s)) => *s = normalize_text(s),
            Some(_) => bail!("{}: `text` is not a string", at()),
            None => bail!("{}: missing `text`", at()),
        }
        to_json_line(&record, &mut buf)?;
    }
    write_atomic(out, buf.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    tool_version: &'a str,
    run_config: &'a TrainRunConfig,
    metadata: &'a offexpand::classifiers::TrainingMetadata,
}

fn train_as<T: Scalar>(run: &TrainRunConfig) -> Result<()> {
    let examples = load_labeled(&run.train)?;
    let model = run.classifier.train::<T>(&examples)?;
    save_model(&model, &run.model_out)?;
    let out = TrainOutput {
        tool_version: VERSION,
        run_config: run,
        metadata: model.metadata(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let file: TrainFile = match &args.config {
        Some(p) => read_config(p)?,
        None => TrainFile::default(),
    };
    let variant = args
        .variant
        .or(file.variant)
        .ok_or_else(|| usage("no classifier variant given (use --variant svm|embedbag)"))?;
    let (mut svm, mut eb) = (file.svm, file.embedbag);
    args.hyper.apply(&mut svm, &mut eb, args.seed.or(file.seed));
    let run = TrainRunConfig {
        train: args.train,
        model_out: args.model_out,
        scalar: args.scalar.or(file.scalar).unwrap_or_default(),
        classifier: classifier(variant, &svm, &eb)?,
    };
    match run.scalar {
        ScalarArg::F32 => train_as::<f32>(&run),
        ScalarArg::F64 => train_as::<f64>(&run),
    }
}

enum AnyModel {
    F32(ClassifierModel<f32>),
    F64(ClassifierModel<f64>),
}

fn load_any(path: &Path) -> Result<AnyModel> {
    match load_model::<f64>(path) {
        Ok(m) => Ok(AnyModel::F64(m)),
        Err(Error::ScalarMismatch { .. }) => Ok(AnyModel::F32(load_model::<f32>(path)?)),
        Err(e) => Err(e).with_context(|| format!("loading model {}", path.display())),
    }
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    id: &'a str,
    label: offexpand::Label,
    score: f64,
}

fn classify_as<T: Scalar>(model: &ClassifierModel<T>, input: &Path, out: &Path) -> Result<()> {
    let tweets = load_tweets(input)?;
    let mut buf = String::new();
    for t in &tweets {
        let p = model.predict(&t.text);
        to_json_line(
            &PredictionRecord {
                id: &t.id,
                label: p.label,
                score: p.score.as_f64(),
            },
            &mut buf,
        )?;
    }
    write_atomic(out, buf.as_bytes())?;
    Ok(())
}

pub fn classify(model: &Path, input: &Path, out: &Path) -> Result<()> {
    match load_any(model)? {
        AnyModel::F32(m) => classify_as(&m, input, out),
        AnyModel::F64(m) => classify_as(&m, input, out),
    }
}

#[derive(Serialize)]
struct ExpandReport<'a> {
    tool_version: &'a str,
    run_config: &'a ExpandRunConfig,
    targets: Vec<ExpansionSummary>,
    n_examples: usize,
    warnings: Vec<String>,
}

fn expand_as<T: Scalar>(model: &ClassifierModel<T>, run: &ExpandRunConfig) -> Result<()> {
    let replies = load_tweets(&run.replies)?;
    let targets = if run.targets.is_empty() {
        corpus::reply_targets(&replies)
    } else {
        run.targets.clone()
    };
    let mut warnings = Vec::new();
    let mut expansions = Vec::with_capacity(targets.len());
    for target in &targets {
        let e = expand_target(model, &replies, target, &run.expansion)?;
        if e.n_replies == 0 {
            let msg = format!("target {target} has no replies");
            eprintln!("warning: {msg}");
            warnings.push(msg);
        }
        expansions.push(e);
    }
    let merged = merge_expansions(&expansions);
    let report = ExpandReport {
        tool_version: VERSION,
        run_config: run,
        targets: expansions.iter().map(|e| e.summary(&run.expansion)).collect(),
        n_examples: merged.len(),
        warnings,
    };
    write_labeled(&run.out, &merged)?;
    write_atomic(&with_suffix(&run.out, ".report.json"), &pretty(&report)?)?;
    Ok(())
}

pub fn expand(args: ExpandArgs) -> Result<()> {
    let expansion = ExpansionConfig::new(args.strategy).with_min_replies(args.min_replies);
    expansion.validate().map_err(|e| usage(e.to_string()))?;
    let run = ExpandRunConfig {
        model: args.model,
        replies: args.replies,
        targets: args.targets,
        expansion,
        out: args.out,
    };
    match load_any(&run.model)? {
        AnyModel::F32(m) => expand_as(&m, &run),
        AnyModel::F64(m) => expand_as(&m, &run),
    }
}

#[derive(Serialize)]
struct EvalOutput<'a, T> {
    tool_version: &'a str,
    run_config: &'a EvalRunConfig,
    reports: &'a [ExperimentReport<T>],
}

fn trace_file_name(variant: &str, t: &FoldTrace) -> String {
    let config: String = t
        .configuration
        .replace('%', "pct")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    format!("{}_fold{}_{}.jsonl", variant.to_ascii_lowercase(), t.fold, config)
}

fn eval_as<T: Scalar>(run: &EvalRunConfig, out: &Path, emit: Option<&Path>) -> Result<()> {
    let seed_set = load_labeled(&run.seed_train)?;
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| usage(format!("protocol needs --{flag} (or `{}` in the config)", flag.replace('-', "_"))))
    };
    let mut reports = Vec::with_capacity(run.classifiers.len());
    let mut traces: Vec<(&'static str, Vec<FoldTrace>)> = Vec::new();
    match run.protocol {
        Protocol::CvBaseline => {
            for c in &run.classifiers {
                reports.push(run_cv_baseline::<T>(&seed_set, c, run.k, run.seed)?);
            }
        }
        Protocol::PerTarget => {
            let replies = load_tweets(need(&run.replies, "replies")?)?;
            let gold = load_gold_tests(need(&run.gold_tests, "gold-tests")?)?;
            for c in &run.classifiers {
                reports.push(run_per_target_experiment::<T>(&seed_set, &replies, &gold, c, &run.expansions)?);
            }
        }
        Protocol::GlobalCv => {
            let replies = load_tweets(need(&run.replies, "replies")?)?;
            for c in &run.classifiers {
                let (report, t) = run_global_cv_experiment_traced::<T>(
                    &seed_set,
                    &replies,
                    &run.targets,
                    c,
                    &run.expansions,
                    run.k,
                    run.seed,
                )?;
                reports.push(report);
                if emit.is_some() {
                    traces.push((c.variant().tag(), t));
                }
            }
        }
    }

    let table = render_tables(&reports);
    let json = pretty(&EvalOutput {
        tool_version: VERSION,
        run_config: run,
        reports: &reports,
    })?;
    if let Some(dir) = emit {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (variant, ts) in &traces {
            for t in ts {
                write_labeled(dir.join(trace_file_name(variant, t)), &t.training_set)?;
            }
        }
    }
    write_atomic(&out.with_extension("txt"), table.as_bytes())?;
    write_atomic(out, &json)?;
    print!("{table}");
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let file: EvalFile = match &args.config {
        Some(p) => read_config(p)?,
        None => EvalFile::default(),
    };
    let base = args.config.as_deref();
    let protocol: Protocol = args.protocol.into();
    if args.emit_training_dir.is_some() && protocol != Protocol::GlobalCv {
        return Err(usage("--emit-training-dir only applies to global-cv"));
    }

    let seed = args.seed.or(file.seed);
    let (mut svm, mut eb) = (file.svm, file.embedbag);
    args.hyper.apply(&mut svm, &mut eb, seed);
    let variants = args
        .variants
        .or(file.variants)
        .unwrap_or_else(|| vec![VariantArg::Svm, VariantArg::Embedbag]);
    if variants.is_empty() {
        return Err(usage("no classifier variants selected"));
    }
    let classifiers = variants
        .iter()
        .map(|&v| classifier(v, &svm, &eb))
        .collect::<Result<Vec<ClassifierConfig>>>()?;

    let strategies = if !args.strategies.is_empty() {
        args.strategies
    } else {
        let names: Vec<String> = file
            .strategies
            .unwrap_or_else(|| DEFAULT_STRATEGIES.iter().map(|s| s.to_string()).collect());
        names
            .iter()
            .map(|s| s.parse().map_err(|e: Error| usage(e.to_string())))
            .collect::<Result<_>>()?
    };
    let min_replies = args.min_replies.or(file.min_replies).unwrap_or(3);
    let expansions: Vec<ExpansionConfig> = strategies
        .into_iter()
        .map(|s| ExpansionConfig::new(s).with_min_replies(min_replies))
        .collect();
    for e in &expansions {
        e.validate().map_err(|err| usage(err.to_string()))?;
    }
    let k = args.k.or(file.k).unwrap_or(5);
    if k < 2 {
        return Err(usage(format!("k must be >= 2, got {k}")));
    }

    let seed_train = args
        .seed_train
        .or_else(|| file.seed_train.map(|p| resolve(base, p)))
        .ok_or_else(|| usage("no seed training set given (use --seed-train)"))?;
    let run = EvalRunConfig {
        protocol,
        seed_train,
        replies: args.replies.or_else(|| file.replies.map(|p| resolve(base, p))),
        gold_tests: args.gold_tests.or_else(|| file.gold_tests.map(|p| resolve(base, p))),
        targets: args.targets.or(file.targets).unwrap_or_default(),
        classifiers,
        expansions: if protocol == Protocol::CvBaseline { Vec::new() } else { expansions },
        k,
        seed: seed.unwrap_or(0),
        scalar: args.scalar.or(file.scalar).unwrap_or_default(),
    };
    let emit = args.emit_training_dir.as_deref();
    match run.scalar {
        ScalarArg::F32 => eval_as::<f32>(&run, &args.out, emit),
        ScalarArg::F64 => eval_as::<f64>(&run, &args.out, emit),
    }
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut cfg = match (&args.config, args.standard) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<SynthConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(seed)) => SynthConfig::standard(seed),
        (None, None) => return Err(usage("give --config or --standard")),
    };
    if let Some(f) = args.antagonist_fraction {
        cfg.antagonist_fraction = f;
    }
    let c = synth_corpus(&cfg)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    write_labeled(args.out_dir.join("seed_train.jsonl"), &c.seed_train)?;
    write_tweets(args.out_dir.join("replies.jsonl"), &c.replies)?;
    write_gold_tests(args.out_dir.join("gold_tests.jsonl"), &c.gold_tests)?;
    if let Some(p) = &args.write_config {
        write_atomic(p, &pretty(&cfg)?)?;
    }
    Ok(())
}
