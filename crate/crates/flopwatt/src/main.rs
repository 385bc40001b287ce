use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flopwatt::csv_io::{self, CsvError};
use flopwatt::docs::{report_to_json, FlopsDocument, LawDocument};
use flopwatt::report::{relative_report, ReportRow};
use flopwatt_core::config::ConfigError;
use flopwatt_core::data::{
    embedded_table, embedded_tables, Dataset, JOULES_PER_KWH, JOULES_PER_WH,
};
use flopwatt_core::flops::breakdown;
use flopwatt_core::law::{
    features_for, predict_log_kwh, FeatureVector, FitDiagnostics, ScalingLaw,
};
use flopwatt_core::validation::{
    compare_to_published, fit_dataset, published_law, run_cross_architecture, run_cross_gpu,
    run_cross_model, run_within, Protocol, RecordFilter, ValidationReport,
};
use flopwatt_core::{GpuId, InferenceConfig, ModelId, Precision, Resolution};

/// Analytical FLOP accounting and energy scaling laws for diffusion inference.
#[derive(Debug, Parser)]
#[command(name = "flopwatt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// FLOP breakdown of one configuration.
    Flops(FlopsArgs),
    /// Fit the energy law to a dataset.
    Fit(FitArgs),
    /// Predict energy for a configuration from a fitted or published law.
    Predict(PredictArgs),
    /// Run a validation protocol.
    Validate(ValidateArgs),
    /// Export an embedded A100 table as CSV.
    Tables(TablesArgs),
    /// Energy table, optionally relative to the cheapest configuration.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Unit {
    J,
    Kwh,
    WhPerImage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolKind {
    Within,
    CrossModel,
    CrossGpu,
    CrossArchitecture,
}

fn pixels(s: &str) -> Result<u32, String> {
    let v: u32 = s
        .parse()
        .map_err(|_| format!("`{s}` is not a positive integer"))?;
    if v == 0 || !v.is_multiple_of(Resolution::MULTIPLE) {
        return Err(format!(
            "must be a positive multiple of {}",
            Resolution::MULTIPLE
        ));
    }
    Ok(v)
}

fn model_list(s: &str) -> Result<Vec<ModelId>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<ModelId>().map_err(|e| e.to_string()))
        .collect()
}

#[derive(Debug, Clone)]
struct Models(Vec<ModelId>);

fn models(s: &str) -> Result<Models, String> {
    model_list(s).map(Models)
}

fn named<T: FromStr<Err = ConfigError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: ConfigError| e.to_string())
}

fn parse_filter(s: &str) -> Result<RecordFilter, String> {
    s.parse()
        .map_err(|e: flopwatt_core::validation::ValidationError| e.to_string())
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long, value_parser = named::<ModelId>)]
    model: ModelId,
    #[arg(long, value_parser = pixels, default_value = "1024")]
    height: u32,
    #[arg(long, value_parser = pixels, default_value = "1024")]
    width: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    steps: u32,
    /// Classifier-free guidance (doubles denoiser passes).
    #[arg(long)]
    cfg: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    prompts: u32,
}

impl ConfigArgs {
    fn config(&self) -> InferenceConfig {
        let res = Resolution::new(self.height, self.width).expect("validated by parser");
        InferenceConfig::new(self.model, res)
            .with_steps(self.steps)
            .with_cfg(self.cfg)
            .with_prompts(self.prompts)
    }
}

#[derive(Debug, Args)]
struct FlopsArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

/// Where records come from, plus record filters.
#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file in the record schema.
    #[arg(long, conflicts_with = "embedded")]
    data: Option<PathBuf>,
    /// Embedded A100 tables; all models when no list is given.
    #[arg(long, num_args = 0..=1, value_parser = models, value_name = "MODELS")]
    embedded: Option<Option<Models>>,
    /// `key=value[,key=value]` constraint on records; repeatable.
    #[arg(long, value_parser = parse_filter)]
    filter: Vec<RecordFilter>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Write the law document here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Law document written by `fit`.
    #[arg(
        long,
        required_unless_present = "published",
        conflicts_with = "published"
    )]
    law: Option<PathBuf>,
    /// Use the published single-GPU coefficients of a model.
    #[arg(long, value_parser = named::<ModelId>)]
    published: Option<ModelId>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_parser = named::<Precision>, default_value = "fp16")]
    precision: Precision,
    #[arg(long, value_parser = named::<GpuId>, default_value = "a100")]
    gpu: GpuId,
    #[arg(long, value_enum, default_value_t = Unit::J)]
    unit: Unit,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    protocol: ProtocolKind,
    /// Restrict the data to one model (within-architecture).
    #[arg(long, value_parser = named::<ModelId>)]
    model: Option<ModelId>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = models)]
    train: Option<Models>,
    #[arg(long, value_parser = models)]
    test: Option<Models>,
    #[command(flatten)]
    data: DataArgs,
    /// Write the report document here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Args)]
struct TablesArgs {
    #[arg(long, value_parser = named::<ModelId>)]
    model: ModelId,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Add energy relative to the dataset minimum.
    #[arg(long)]
    relative: bool,
    /// Grid carbon intensity in gCO2 per kWh.
    #[arg(long)]
    carbon_intensity: Option<f64>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

/// A failed command: exit status and message.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn compute(message: impl ToString) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Self {
            code: 4,
            message: message.to_string(),
        }
    }
}

impl From<CsvError> for Failure {
    fn from(e: CsvError) -> Self {
        if e.is_io() {
            Failure::io(e)
        } else {
            Failure::usage(e)
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Flops(a) => cmd_flops(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Tables(a) => cmd_tables(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_out(path: &Path, contents: &[u8]) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

/// Two-column text for `table`, header + one row for `csv`.
fn key_values(pairs: &[(&str, String)], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(pairs.iter().map(|(k, _)| *k))
                .expect("memory");
            w.write_record(pairs.iter().map(|(_, v)| v.as_str()))
                .expect("memory");
            out = String::from_utf8(w.into_inner().expect("memory")).expect("utf-8");
        }
        _ => {
            let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in pairs {
                let _ = writeln!(out, "{k:<width$}  {v}");
            }
        }
    }
    out
}

fn cmd_flops(args: FlopsArgs) -> Outcome {
    let config = args.config.config();
    let b = breakdown(&config).map_err(Failure::usage)?;
    let doc = FlopsDocument {
        model: config.model,
        resolution: config.resolution,
        breakdown: b,
        denoise_share: b.denoise_share(),
    };
    if args.format == Format::Json {
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        );
        return Ok(());
    }
    let pairs = [
        ("model", config.model.to_string()),
        ("resolution", config.resolution.to_string()),
        ("steps", b.steps.to_string()),
        ("num_prompts", b.num_prompts.to_string()),
        ("cfg", b.cfg.to_string()),
        ("text_gflops", b.text_gflops.to_string()),
        ("text_modeled", b.text_modeled.to_string()),
        (
            "denoise_per_step_gflops",
            b.denoise_per_step_gflops.to_string(),
        ),
        ("decode_gflops", b.decode_gflops.to_string()),
        ("total_gflops", b.total_gflops.to_string()),
        (
            "effective_total_gflops",
            b.effective_total_gflops.to_string(),
        ),
        ("denoise_share", doc.denoise_share.to_string()),
    ];
    print!("{}", key_values(&pairs, args.format));
    if !b.text_modeled {
        eprintln!(
            "note: no text-encoder composition for {}; text reported as 0",
            config.model
        );
    }
    Ok(())
}

fn load(args: &DataArgs) -> Result<Dataset, Failure> {
    let dataset = match (&args.data, &args.embedded) {
        (Some(path), _) => csv_io::read_csv_file(path)?,
        (None, Some(Some(Models(models)))) => embedded_tables(models),
        (None, Some(None)) => embedded_tables(&ModelId::ALL),
        (None, None) => return Err(Failure::usage("one of --data or --embedded is required")),
    };
    Ok(dataset.filter(|r| args.filter.iter().all(|f| f.matches(r))))
}

fn law_summary(law: &ScalingLaw, diagnostics: &FitDiagnostics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "log_a       {:.6}", law.log_a);
    let _ = writeln!(out, "alpha       {:.6}", law.alpha);
    let _ = writeln!(out, "beta_dtype  {:.6}", law.beta_dtype);
    let _ = writeln!(out, "beta_a4000  {:.6}", law.beta_a4000);
    let _ = writeln!(out, "beta_a6000  {:.6}", law.beta_a6000);
    let _ = writeln!(out, "beta_res    {:.6}", law.beta_res);
    out.push_str(&metrics_line(diagnostics));
    let dropped: Vec<&str> = law.dropped_columns.iter().map(|c| c.name()).collect();
    let _ = writeln!(
        out,
        "dropped: {}",
        if dropped.is_empty() {
            "none".into()
        } else {
            dropped.join(", ")
        }
    );
    out
}

fn metrics_line(d: &FitDiagnostics) -> String {
    format!(
        "n={} r2={:.6} mae_log={:.6} mae_joules={:.6e} pearson={:.6} spearman={:.6}\n",
        d.n_samples, d.r2, d.mae_log, d.mae_joules, d.pearson, d.spearman
    )
}

fn cmd_fit(args: FitArgs) -> Outcome {
    let dataset = load(&args.data)?;
    if dataset.is_empty() {
        return Err(Failure::compute("fit: dataset is empty after filtering"));
    }
    let (law, diagnostics) = fit_dataset(&dataset)
        .map_err(|e| Failure::compute(format!("fit failed on {} records: {e}", dataset.len())))?;
    let doc = LawDocument {
        law,
        diagnostics: Some(diagnostics),
    };
    let json = doc.to_json();
    if let Some(out) = &args.out {
        write_out(out, json.as_bytes())?;
    }
    let summary = law_summary(&doc.law, &diagnostics);
    match args.format {
        Format::Json => {
            println!("{json}");
            eprint!("{summary}");
        }
        Format::Csv => {
            let mut pairs: Vec<(&str, String)> = vec![
                ("log_a", doc.law.log_a.to_string()),
                ("alpha", doc.law.alpha.to_string()),
                ("beta_dtype", doc.law.beta_dtype.to_string()),
                ("beta_a4000", doc.law.beta_a4000.to_string()),
                ("beta_a6000", doc.law.beta_a6000.to_string()),
                ("beta_res", doc.law.beta_res.to_string()),
            ];
            pairs.extend([
                ("r2", diagnostics.r2.to_string()),
                ("mae_log", diagnostics.mae_log.to_string()),
                ("pearson", diagnostics.pearson.to_string()),
                ("spearman", diagnostics.spearman.to_string()),
                ("n_samples", diagnostics.n_samples.to_string()),
            ]);
            print!("{}", key_values(&pairs, Format::Csv));
            eprint!("{summary}");
        }
        Format::Table => print!("{summary}"),
    }
    Ok(())
}

fn features_line(f: &FeatureVector) -> String {
    format!(
        "log_flops_cfg={} fp32_indicator={} a4000_indicator={} a6000_indicator={} log_res={}",
        f.log_flops_cfg, f.fp32_indicator, f.a4000_indicator, f.a6000_indicator, f.log_res
    )
}

fn cmd_predict(args: PredictArgs) -> Outcome {
    let (law, source) = match (&args.law, args.published) {
        (Some(path), _) => {
            let doc = LawDocument::read(path)
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            (doc.law, path.display().to_string())
        }
        (None, Some(model)) => {
            let law = published_law(model).ok_or_else(|| {
                Failure::usage(format!("--published: no published law for {model}"))
            })?;
            (law, format!("published:{model}"))
        }
        (None, None) => unreachable!("clap requires one of --law or --published"),
    };
    let config = args
        .config
        .config()
        .with_precision(args.precision)
        .with_gpu(args.gpu);
    let features = features_for(&config).map_err(Failure::usage)?;
    let joules = predict_log_kwh(&law, &features).exp() * JOULES_PER_KWH;
    let (value, unit) = match args.unit {
        Unit::J => (joules, "J"),
        Unit::Kwh => (joules / JOULES_PER_KWH, "kWh"),
        Unit::WhPerImage => (
            joules / f64::from(config.num_prompts) / JOULES_PER_WH,
            "Wh/image",
        ),
    };
    match args.format {
        Format::Json => {
            let doc = serde_json::json!({
                "value": value,
                "unit": unit,
                "law": source,
                "config": config,
                "features": features,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("serializable")
            );
        }
        Format::Csv => {
            let pairs = [
                ("value", value.to_string()),
                ("unit", unit.to_string()),
                ("law", source),
            ];
            print!("{}", key_values(&pairs, Format::Csv));
        }
        Format::Table => {
            println!("{value:e} {unit}");
            println!("# law={source} {}", features_line(&features));
        }
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Outcome {
    let mut dataset = load(&args.data)?;
    if let Some(model) = args.model {
        dataset = dataset.filter(|r| r.config.model == model);
    }
    let list = |m: &Option<Models>, flag: &str| {
        m.as_ref()
            .map(|m| m.0.clone())
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Failure::usage(format!("--{flag} is required for this protocol")))
    };
    let report = match args.protocol {
        ProtocolKind::Within => run_within(&dataset, args.k, args.seed),
        ProtocolKind::CrossModel => {
            let train = list(&args.train, "train")?;
            let test = list(&args.test, "test")?;
            let [test] = test[..] else {
                return Err(Failure::usage(
                    "--test takes exactly one model for cross-model",
                ));
            };
            run_cross_model(&train, test, &dataset)
        }
        ProtocolKind::CrossArchitecture => run_cross_architecture(
            &list(&args.train, "train")?,
            &list(&args.test, "test")?,
            &dataset,
        ),
        ProtocolKind::CrossGpu => {
            let combined = args.data.filter.iter().fold(RecordFilter::default(), merge);
            run_cross_gpu(&combined, &dataset)
        }
    }
    .map_err(Failure::compute)?;

    let json = report_to_json(&report);
    if let Some(out) = &args.out {
        write_out(out, json.as_bytes())?;
    }
    let summary = validation_summary(&report);
    match args.format {
        Format::Json => {
            println!("{json}");
            eprint!("{summary}");
        }
        Format::Csv => {
            print!("{}", points_csv(&report));
            eprint!("{summary}");
        }
        Format::Table => print!("{summary}"),
    }
    Ok(())
}

/// Conjunction of two filters; the later constraint wins on a shared key.
fn merge(acc: RecordFilter, f: &RecordFilter) -> RecordFilter {
    RecordFilter {
        model: f.model.or(acc.model),
        gpu: f.gpu.or(acc.gpu),
        precision: f.precision.or(acc.precision),
        cfg: f.cfg.or(acc.cfg),
        num_prompts: f.num_prompts.or(acc.num_prompts),
        resolution: f.resolution.or(acc.resolution),
        steps: f.steps.or(acc.steps),
    }
}

fn validation_summary(report: &ValidationReport) -> String {
    let mut out = String::new();
    let protocol = match &report.protocol {
        Protocol::WithinArchitecture { k, seed } => {
            format!("within-architecture k={k} seed={seed}")
        }
        Protocol::CrossModelHoldout { train, test } => {
            format!("cross-model train={} test={test}", join(train))
        }
        Protocol::CrossArchitecture { train, test } => {
            format!(
                "cross-architecture train={} test={}",
                join(train),
                join(test)
            )
        }
        Protocol::CrossGpu { .. } => "cross-gpu".to_string(),
    };
    let _ = writeln!(out, "protocol: {protocol}");
    let _ = write!(out, "train: {}", metrics_line(&report.train_diagnostics));
    if let Some(test) = &report.test_diagnostics {
        let _ = write!(out, "test:  {}", metrics_line(test));
    }
    for g in &report.gpu_residuals {
        let _ = writeln!(
            out,
            "gpu {}: n={} mean_residual={:.6} mae_log={:.6}",
            g.gpu, g.n, g.mean_residual, g.mae_log
        );
    }
    for line in law_summary(&report.law, &report.train_diagnostics)
        .lines()
        .filter(|l| !l.starts_with("n="))
    {
        let _ = writeln!(out, "{line}");
    }
    if let Protocol::WithinArchitecture { .. } = report.protocol {
        if let Some(model) = report.points.first().map(|p| p.config.model) {
            if let Ok(deltas) = compare_to_published(&report.law, model) {
                for d in deltas {
                    let _ = writeln!(
                        out,
                        "vs published {model} {}: published={} fitted={:.6} delta={:+.6}",
                        d.column, d.published, d.fitted, d.abs_delta
                    );
                }
            }
        }
    }
    out
}

fn join(models: &[ModelId]) -> String {
    models
        .iter()
        .map(|m| m.name())
        .collect::<Vec<_>>()
        .join(",")
}

fn points_csv(report: &ValidationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model",
        "gpu",
        "precision",
        "cfg",
        "height",
        "width",
        "steps",
        "num_prompts",
        "actual_log_kwh",
        "predicted_log_kwh",
        "relative_error",
        "held_out",
    ])
    .expect("memory");
    for p in &report.points {
        let c = &p.config;
        w.write_record([
            c.model.to_string(),
            c.gpu.to_string(),
            c.precision.to_string(),
            c.cfg.to_string(),
            c.resolution.height().to_string(),
            c.resolution.width().to_string(),
            c.steps.to_string(),
            c.num_prompts.to_string(),
            p.actual_log_kwh.to_string(),
            p.predicted_log_kwh.to_string(),
            p.relative_error.to_string(),
            p.held_out.to_string(),
        ])
        .expect("memory");
    }
    String::from_utf8(w.into_inner().expect("memory")).expect("utf-8")
}

fn cmd_tables(args: TablesArgs) -> Outcome {
    let bytes = csv_io::write_csv(&embedded_table(args.model));
    match &args.out {
        Some(path) => write_out(path, &bytes),
        None => {
            print!("{}", String::from_utf8(bytes).expect("utf-8"));
            Ok(())
        }
    }
}

fn cmd_report(args: ReportArgs) -> Outcome {
    if let Some(g) = args.carbon_intensity {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Failure::usage(
                "--carbon-intensity must be a non-negative number",
            ));
        }
    }
    let dataset = load(&args.data)?;
    let rows = relative_report(&dataset, args.carbon_intensity)
        .ok_or_else(|| Failure::compute("report: dataset is empty after filtering"))?;
    match args.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&rows).expect("serializable")
        ),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row).map_err(Failure::compute)?;
            }
            print!(
                "{}",
                String::from_utf8(w.into_inner().expect("memory")).expect("utf-8")
            );
        }
        Format::Table => print!(
            "{}",
            report_table(&rows, args.relative, args.carbon_intensity.is_some())
        ),
    }
    Ok(())
}

fn report_table(rows: &[ReportRow], relative: bool, carbon: bool) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{:<6} {:<6} {:<9} {:>6} {:>5} {:<5} {:>7} {:>12} {:>10}",
        "model", "gpu", "res", "steps", "prec", "cfg", "prompts", "energy_j", "wh/image"
    );
    if relative {
        let _ = write!(out, " {:>9}", "relative");
    }
    if carbon {
        let _ = write!(out, " {:>10} {:>12}", "gco2", "gco2/image");
    }
    out.push('\n');
    let mut last = None;
    for r in rows {
        let key = (r.height, r.width, r.steps, r.precision, r.cfg);
        if last.is_some_and(|k| k != key) {
            out.push('\n');
        }
        last = Some(key);
        let _ = write!(
            out,
            "{:<6} {:<6} {:<9} {:>6} {:>5} {:<5} {:>7} {:>12.3e} {:>10.4}",
            r.model.name(),
            r.gpu.name(),
            format!("{}x{}", r.height, r.width),
            r.steps,
            r.precision.name(),
            r.cfg,
            r.num_prompts,
            r.energy_joules,
            r.wh_per_image
        );
        if relative {
            let _ = write!(out, " {:>9.2}", r.relative);
        }
        if let (true, Some(g), Some(gi)) = (carbon, r.gco2, r.gco2_per_image) {
            let _ = write!(out, " {g:>10.4} {gi:>12.6}");
        }
        out.push('\n');
    }
    out
}
