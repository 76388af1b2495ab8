use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use coursekg::config::PipelineConfig;
use coursekg::corpus::load_corpus;
use coursekg::evalkit::{self, GoldDocument, Partition, Setting, Task};
use coursekg::kg::Namespace;
use coursekg::ontology::{build_profile, load_ontology, ElProfile};
use coursekg::par::{with_workers, Execution};
use coursekg::pipeline::{self, RunSettings};
use coursekg::recognizer::{export_silver, CueLexicon};
use coursekg::Linker;

/// Course knowledge extraction from education-provider pages.
#[derive(Parser)]
#[command(name = "coursekg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the ontology into a linking profile.
    BuildProfile(BuildProfileArgs),
    /// Run the pipeline over the input corpus and write the graph.
    Extract(ExtractArgs),
    /// Score predictions against gold annotations.
    Eval(EvalArgs),
    /// Convert a NIF Turtle corpus to gold JSON.
    ConvertNif(ConvertNifArgs),
    /// Annotator agreement between two gold files over the same documents.
    Agreement(AgreementArgs),
}

#[derive(Args)]
struct BuildProfileArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Ontology files, replacing `ontology_paths`.
    #[arg(long = "ontology")]
    ontology: Vec<PathBuf>,
    /// Output path, replacing `profile_path`.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Output directory, replacing `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Process documents one at a time.
    #[arg(long)]
    sequential: bool,
    /// Externally labelled token file replacing the baseline recognizer.
    #[arg(long)]
    external_tokens: Option<PathBuf>,
    /// Write the silver-annotated token file here.
    #[arg(long)]
    silver_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Strict,
    Relaxed,
    Both,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Predictions in the gold schema. Without it the pipeline runs on the
    /// configured corpus.
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Comma-separated tasks, e.g. `T1,T2,T6`.
    #[arg(long, value_delimiter = ',', default_value = "T1,T2,T3,T4,T5,T6")]
    tasks: Vec<Task>,
    #[arg(long, value_enum, default_value = "both")]
    setting: SettingArg,
    #[arg(long)]
    kfolds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    partition: Option<Partition>,
    /// Directory for `eval_report.json` and `eval_report.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertNifArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    partition: Option<Partition>,
    /// Config whose namespaces compact entity IRIs.
    #[arg(short, long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AgreementArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    /// Bad data: ontology, corpus, gold files. Exit 1.
    Data(anyhow::Error),
    /// Bad invocation or configuration. Exit 2.
    Usage(anyhow::Error),
}

trait Classify<T> {
    fn data(self) -> Result<T, Failure>;
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }

    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn load_config(path: &Path) -> Result<PipelineConfig, Failure> {
    PipelineConfig::load(path).usage()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_build_profile(args: BuildProfileArgs) -> CmdResult {
    let mut cfg = load_config(&args.config)?;
    if !args.ontology.is_empty() {
        cfg.ontology_paths = args.ontology;
    }
    if let Some(p) = args.profile {
        cfg.profile_path = p;
    }
    cfg.validate_for_profile().usage()?;
    let store = load_ontology(&cfg.ontology_paths).data()?;
    let profile = build_profile(&store).data()?;
    if let Some(dir) = cfg.profile_path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).data()?;
    }
    profile.save(&cfg.profile_path).data()?;
    println!(
        "profile {}: {} entities, {} surface forms, hash {}",
        cfg.profile_path.display(),
        profile.entities.len(),
        profile.surface_count(),
        profile.version_hash
    );
    Ok(())
}

fn run_settings(cfg: &PipelineConfig, execution: Execution) -> Result<RunSettings, Failure> {
    let cues = match &cfg.recognizer.cues_path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).usage()?;
            CueLexicon::parse(&text).with_context(|| format!("parsing {}", p.display())).usage()?
        }
        None => CueLexicon::default(),
    };
    let external_tokens = match &cfg.recognizer.external_tokens {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).data()?),
        None => None,
    };
    Ok(RunSettings {
        weights: cfg.linker_weights,
        namespaces: cfg.namespaces.clone(),
        providers: cfg.providers.clone(),
        cues,
        execution,
        external_tokens,
    })
}

/// Loads profile and corpus and runs the pipeline.
fn extract(cfg: &PipelineConfig, execution: Execution) -> Result<(pipeline::ExtractOutput, ElProfile), Failure> {
    cfg.validate_for_extract().usage()?;
    let profile = ElProfile::load(&cfg.profile_path).data()?;
    let corpus = load_corpus(&cfg.input_dir).data()?;
    let settings = run_settings(cfg, execution)?;
    let mut out = with_workers(cfg.workers, || pipeline::run(&corpus.documents, &profile, &settings)).data()?;
    out.report.failures.extend(corpus.failures);
    out.report.failures.sort();
    Ok((out, profile))
}

fn cmd_extract(args: ExtractArgs) -> CmdResult {
    let mut cfg = load_config(&args.config)?;
    if let Some(p) = args.input {
        cfg.input_dir = p;
    }
    if let Some(p) = args.profile {
        cfg.profile_path = p;
    }
    if let Some(p) = args.out {
        cfg.output.dir = p;
    }
    if let Some(n) = args.workers {
        cfg.workers = n;
    }
    if args.external_tokens.is_some() {
        cfg.recognizer.external_tokens = args.external_tokens;
    }
    if args.silver_out.is_some() {
        cfg.recognizer.silver_out = args.silver_out;
    }
    let execution = if args.sequential { Execution::Sequential } else { Execution::available() };
    let (out, profile) = extract(&cfg, execution)?;

    for &format in &cfg.output.formats {
        write(&cfg.output.graph_path(format), &out.graph(format)).data()?;
    }
    write(&cfg.output.report_path(), &out.report.to_json()).data()?;
    if cfg.output.predictions {
        write(&cfg.output.predictions_path(), &evalkit::to_json(&out.predictions())).data()?;
    }
    if let Some(path) = &cfg.recognizer.silver_out {
        let mut buf = Vec::new();
        let n = export_silver(&mut buf, &out.segmented(), &Linker::new(&profile, cfg.linker_weights)).data()?;
        write(path, &String::from_utf8_lossy(&buf)).data()?;
        log::info!("silver file {} with {n} mentions", path.display());
    }

    let r = &out.report;
    println!(
        "{} documents, {} statements, {} violations, {} failures -> {}",
        r.documents,
        r.statements.total,
        r.violations.len(),
        r.failures.len(),
        cfg.output.dir.display()
    );
    for (pred, n) in &r.statements.by_predicate {
        println!("  {pred}: {n}");
    }
    if r.failures.is_empty() {
        Ok(())
    } else {
        for f in &r.failures {
            eprintln!("failed: {}: {}", f.document, f.message);
        }
        Err(Failure::Data(anyhow::anyhow!("{} document(s) failed", r.failures.len())))
    }
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let cfg = args.config.as_deref().map(load_config).transpose()?;
    let gold = evalkit::load_gold(&args.gold, args.partition).data()?;
    let pred: Vec<GoldDocument> = match (&args.pred, &cfg) {
        (Some(p), _) => evalkit::load_gold(p, None).data()?,
        (None, Some(cfg)) => extract(cfg, Execution::available())?.0.predictions(),
        (None, None) => return Err(Failure::Usage(anyhow::anyhow!("eval needs --pred or --config"))),
    };
    let settings: &[Setting] = match args.setting {
        SettingArg::Strict => &[Setting::Strict],
        SettingArg::Relaxed => &[Setting::Relaxed],
        SettingArg::Both => &[Setting::Strict, Setting::Relaxed],
    };
    let exec = Execution::available();
    let (json, table) = match args.kfolds {
        Some(k) => {
            let seed = args.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
            let r = evalkit::evaluate_folds(&gold, &pred, &args.tasks, settings, k, seed, exec).usage()?;
            (r.to_json(), r.to_table())
        }
        None => {
            let r = evalkit::evaluate(&gold, &pred, &args.tasks, settings, exec);
            (r.to_json(), r.to_table())
        }
    };
    print!("{table}");
    if let Some(dir) = &args.out {
        write(&dir.join("eval_report.json"), &json).data()?;
        write(&dir.join("eval_report.txt"), &table).data()?;
    }
    Ok(())
}

fn cmd_convert_nif(args: ConvertNifArgs) -> CmdResult {
    let ns = match &args.config {
        Some(c) => load_config(c)?.namespaces,
        None => Namespace::default(),
    };
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display())).data()?;
    let docs = evalkit::nif_to_gold(&text, &ns, args.partition).data()?;
    write(&args.out, &evalkit::to_json(&docs)).data()?;
    println!("{} documents -> {}", docs.len(), args.out.display());
    Ok(())
}

fn cmd_agreement(args: AgreementArgs) -> CmdResult {
    let a = evalkit::load_gold(&args.a, None).data()?;
    let b = evalkit::load_gold(&args.b, None).data()?;
    let mut labels_a = Vec::new();
    let mut labels_b = Vec::new();
    let mut pairwise = evalkit::Counts::default();
    for da in &a {
        let Some(db) = b.iter().find(|d| d.doc_id == da.doc_id) else {
            return Err(Failure::Data(anyhow::anyhow!("document {} missing from {}", da.doc_id, args.b.display())));
        };
        if da.text != db.text {
            return Err(Failure::Data(anyhow::anyhow!("document {} has different text in the two files", da.doc_id)));
        }
        labels_a.extend(evalkit::token_labels(&da.text, &da.mentions));
        labels_b.extend(evalkit::token_labels(&db.text, &db.mentions));
        pairwise += evalkit::pairwise_counts(&da.mentions, &db.mentions);
    }
    println!("documents: {}", a.len());
    println!("tokens: {}", labels_a.len());
    println!("kappa: {:.4}", evalkit::cohen_kappa(&labels_a, &labels_b));
    println!("pairwise_f1: {:.4}", pairwise.f1());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COURSEKG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::BuildProfile(a) => cmd_build_profile(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Eval(a) => cmd_eval(a),
        Command::ConvertNif(a) => cmd_convert_nif(a),
        Command::Agreement(a) => cmd_agreement(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
