use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use benford_sep::benford::{default_param_table, parse_param_table};
use benford_sep::features::{CsvError, FeatureError};
use benford_sep::ingest::IngestError;
use benford_sep::jpeg::JpegError;
use benford_sep::learn::{CnnHyper, LrHyper};
use benford_sep::{
    build_dataset, digit_distribution, evaluate, extract_coefficients, fit_gbl_params, load_image,
    read_csv, scan_dataset, stratified_split, train_model, write_csv, BenfordError, ClusterSpec,
    Dataset, DigitDistribution, FeatureConfig, FitConfig, Hyperparameters, LearnError, ModelKind,
    SplitConfig, TrainedModel,
};
use serde::Serialize;

use crate::report::{Curves, DatasetSummary, ModelReport, RunConfig, RunReport};
use crate::{CoeffsArgs, ExtractArgs, FitArgs, SynthArgs, TrainEvalArgs};

/// Tolerance on the sum of a user-supplied digit distribution. Generalized
/// Benford rows are not exactly normalized.
const DIST_SUM_TOLERANCE: f64 = 0.01;

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn incompatible(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let code = match &e {
            IngestError::UnreadableFile { .. } => 1,
            IngestError::UnknownLabelDirectory(_) | IngestError::MissingLabelDirectory(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Ingest(e) => e.into(),
            FeatureError::AllImagesDegenerate(rejected) => {
                let mut msg = format!("no usable image; {} rejected:", rejected.len());
                for r in &rejected {
                    msg.push_str(&format!("\n  {}: {}", r.source, r.reason));
                }
                Self::malformed(msg)
            }
            e @ (FeatureError::DegenerateImage { .. } | FeatureError::Benford(_)) => {
                Self::malformed(e.to_string())
            }
            e => Self::incompatible(e.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::ModelFormat(_) => Self::malformed(e.to_string()),
            _ => Self::incompatible(e.to_string()),
        }
    }
}

impl From<JpegError> for CliError {
    fn from(e: JpegError) -> Self {
        Self::incompatible(e.to_string())
    }
}

impl From<BenfordError> for CliError {
    fn from(e: BenfordError) -> Self {
        Self::malformed(e.to_string())
    }
}

fn csv_error(path: &Path, e: CsvError) -> CliError {
    match e {
        CsvError::Io(io) => CliError::io(path, io),
        e => CliError::malformed(format!("{}: {e}", path.display())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|()| f.flush())
        .map_err(|e| CliError::io(path, e))
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn summary(ds: &Dataset) -> DatasetSummary {
    DatasetSummary {
        rows: ds.len(),
        features: ds.num_features(),
        label_names: ds.label_names.clone(),
        class_counts: ds.class_counts(),
        train_rows: None,
        test_rows: None,
    }
}

fn base_config(subcommand: &str) -> RunConfig {
    RunConfig {
        subcommand: subcommand.into(),
        inputs: BTreeMap::new(),
        outputs: BTreeMap::new(),
        qfs: Vec::new(),
        seed: SplitConfig::default().seed,
        train_fraction: SplitConfig::default().train_fraction,
        stratified: true,
        models: Vec::new(),
        chi_scale: benford_sep::features::DEFAULT_CHI_SCALE,
        params_path: None,
        hyperparameters: Hyperparameters::default(),
    }
}

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut params = default_param_table();
    if let Some(path) = &args.params {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parsed = parse_param_table(&text)
            .map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
        params.extend(parsed);
    }
    let config = FeatureConfig {
        qfs: args.qf.clone(),
        params,
        chi_scale: args.chi_scale,
    };
    if !(config.chi_scale.is_finite() && config.chi_scale > 0.0) {
        return Err(CliError::incompatible(format!(
            "chi-square scale must be positive, got {}",
            config.chi_scale
        )));
    }
    config.validate()?;

    let set = scan_dataset(&args.data, args.labels.as_deref())?;
    let scanned = millis(start);
    let outcome = build_dataset(&set, &config)?;
    let built = millis(start);

    let mut sink = create(&args.out)?;
    write_csv(&outcome.dataset, &mut sink).map_err(|e| CliError::io(&args.out, e))?;
    for r in &outcome.rejected {
        eprintln!("rejected {}: {}", r.source, r.reason);
    }
    eprintln!(
        "wrote {} rows to {} ({} rejected)",
        outcome.dataset.len(),
        args.out.display(),
        outcome.rejected.len()
    );

    if let Some(path) = &args.report {
        let mut rc = base_config("extract");
        rc.inputs.insert("data".into(), args.data.clone());
        rc.outputs.insert("csv".into(), args.out.clone());
        rc.outputs.insert("report".into(), path.clone());
        rc.qfs = config.qfs.clone();
        rc.chi_scale = config.chi_scale;
        rc.params_path = args.params.clone();
        let mut report = RunReport::new(rc, summary(&outcome.dataset));
        report.rejected = outcome.rejected;
        report.timings.stages.insert("scan".into(), scanned);
        report
            .timings
            .stages
            .insert("features".into(), built - scanned);
        report.timings.total_ms = millis(start);
        write_text(path, &report.to_json())?;
    }
    Ok(())
}

fn parse_distribution(text: &str) -> Result<DigitDistribution, CliError> {
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::malformed(format!("not a number: {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DigitDistribution::from_probabilities(
        &values,
        DIST_SUM_TOLERANCE,
    )?)
}

#[derive(Serialize)]
struct FitOutput {
    source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    qf: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<usize>,
    empirical: [f64; 9],
    n: f64,
    q: f64,
    s: f64,
    sse: f64,
    iterations: usize,
    converged: bool,
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let (source, qf, coefficients, empirical) = if let Some(path) = &args.dist {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let dist = parse_distribution(&text)
            .map_err(|e| CliError::malformed(format!("{}: {}", path.display(), e.message)))?;
        (path.display().to_string(), None, None, dist)
    } else {
        let path = args.image.as_ref().expect("clap enforces a source");
        let qf = args.qf.expect("clap enforces --qf with --image");
        let image = load_image(path)?;
        let stream = extract_coefficients(&image, qf)?;
        let (_, dist) = digit_distribution(&stream)
            .map_err(|e| CliError::malformed(format!("{}: {e} at QF {qf}", path.display())))?;
        (
            path.display().to_string(),
            Some(qf),
            Some(stream.len()),
            dist,
        )
    };
    let result = fit_gbl_params(&empirical, &FitConfig::default())?;
    let out = FitOutput {
        source,
        qf,
        coefficients,
        empirical: empirical.0,
        n: result.params.n_factor,
        q: result.params.q_exp,
        s: result.params.s_shift,
        sse: result.sse,
        iterations: result.iterations,
        converged: result.converged,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("fit output serializes")
    );
    Ok(())
}

fn parse_models(list: &str) -> Result<Vec<ModelKind>, CliError> {
    if list.trim() == "all" {
        return Ok(ModelKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for name in list.split(',').map(str::trim) {
        let k: ModelKind = name.parse().map_err(CliError::incompatible)?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    kinds.sort();
    Ok(kinds)
}

fn write_curve(dir: &Path, model: ModelKind, name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Ok(());
    }
    let path = dir.join(format!("{}_{name}.csv", model.short_name()));
    let mut text = format!("epoch,{name}\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{v}\n", i + 1));
    }
    write_text(&path, &text)
}

fn curves_of(model: &TrainedModel) -> Option<Curves> {
    match model {
        TrainedModel::LogisticRegression(m) => Some(Curves {
            loss: m.loss_curve.clone(),
            accuracy: Vec::new(),
        }),
        TrainedModel::Cnn(m) => Some(Curves {
            loss: m.loss_curve.clone(),
            accuracy: m.accuracy_curve.clone(),
        }),
        _ => None,
    }
}

pub fn train_eval(args: &TrainEvalArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let models = parse_models(&args.model)?;
    let split_cfg = SplitConfig {
        train_fraction: args.train_frac,
        seed: args.seed,
        stratified: true,
    };
    let hyper = Hyperparameters {
        logreg: LrHyper {
            epochs: args.logreg_epochs,
            ..LrHyper::default()
        },
        cnn: CnnHyper {
            epochs: args.cnn_epochs,
            seed: args.seed,
            ..CnnHyper::default()
        },
        ..Hyperparameters::default()
    };

    let file = File::open(&args.csv).map_err(|e| CliError::io(&args.csv, e))?;
    let data = read_csv(BufReader::new(file)).map_err(|e| csv_error(&args.csv, e))?;
    if data.is_empty() {
        return Err(CliError::malformed(format!(
            "{}: no data rows",
            args.csv.display()
        )));
    }
    let (train, test) = stratified_split(&data, &split_cfg)?;

    let mut rc = base_config("train-eval");
    rc.inputs.insert("csv".into(), args.csv.clone());
    for (key, path) in [
        ("report", &args.report),
        ("curves_dir", &args.curves_dir),
        ("models_dir", &args.models_dir),
    ] {
        if let Some(p) = path {
            rc.outputs.insert(key.into(), p.clone());
        }
    }
    rc.qfs = data.qf_order.clone();
    rc.seed = args.seed;
    rc.train_fraction = args.train_frac;
    rc.models = models.clone();
    rc.hyperparameters = hyper;

    let mut ds = summary(&data);
    ds.train_rows = Some(train.len());
    ds.test_rows = Some(test.len());
    let mut report = RunReport::new(rc, ds);
    report
        .timings
        .stages
        .insert("load_split".into(), millis(start));

    for kind in models {
        let t = Instant::now();
        let model = train_model(kind, &train, &hyper)?;
        let evaluation = evaluate(&model, &test)?;
        report
            .timings
            .stages
            .insert(kind.short_name().into(), millis(t));
        eprintln!(
            "{:<7} accuracy {:.4}  macro-F1 {:.4}",
            kind.short_name(),
            evaluation.accuracy,
            evaluation.macro_f1
        );
        let curves = curves_of(&model);
        if let (Some(dir), Some(c)) = (&args.curves_dir, &curves) {
            write_curve(dir, kind, "loss", &c.loss)?;
            write_curve(dir, kind, "accuracy", &c.accuracy)?;
        }
        if let Some(dir) = &args.models_dir {
            let path: PathBuf = dir.join(format!("{}.json", kind.short_name()));
            write_text(&path, &model.to_text())?;
        }
        report.models.push(ModelReport {
            model: kind,
            evaluation,
            curves,
        });
    }
    report.timings.total_ms = millis(start);

    let json = report.to_json();
    match &args.report {
        Some(path) => write_text(path, &json),
        None => io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let clusters = ClusterSpec {
        seed: args.seed,
        ..ClusterSpec::default()
    };
    let ds = clusters.generate();
    let mut sink = create(&args.out)?;
    write_csv(&ds, &mut sink).map_err(|e| CliError::io(&args.out, e))?;
    eprintln!(
        "wrote {} rows to {} (min mean separation {:.1} sigma)",
        ds.len(),
        args.out.display(),
        clusters.min_separation()
    );
    Ok(())
}

pub fn coeffs(args: &CoeffsArgs) -> Result<(), CliError> {
    let image = load_image(&args.image)?;
    let stream = extract_coefficients(&image, args.qf)?;
    match &args.out {
        Some(path) => {
            let mut sink = create(path)?;
            stream
                .write_text(&mut sink)
                .and_then(|()| sink.flush())
                .map_err(|e| CliError::io(path, e))
        }
        None => stream
            .write_text(io::stdout().lock())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}
