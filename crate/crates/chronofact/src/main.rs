//! Command-line front end. All logic lives in the library; this binary
//! parses flags, merges them over an optional TOML config file, calls the
//! pipeline, and writes artifacts.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
//! failure. Errors print as a single line on stderr.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use chronofact::config::ExperimentConfig;
use chronofact::corpus::{generate_synthetic, write_instances, SynthConfig};
use chronofact::error::{Error, Result};
use chronofact::pipeline;
use chronofact::tagger::{tag_document, TaggerRecord};
use chronofact::timeline::SchemeLevel;
use chronofact::CalendarDate;

#[derive(Parser)]
#[command(
    name = "chronofact",
    version,
    about = "Timeline grounding and temporal fusion for evidence-based claim verification"
)]
struct Cli {
    /// TOML config file; keys match flag names, flags override.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tag documents: publication dates, time expressions, annotations.
    Tag(TagArgs),
    /// Build a quantile bucket scheme from a corpus.
    BuildBuckets(BuildBucketsArgs),
    /// Dump every instance's temporal representations.
    Ground(PlainArgs),
    /// Pretrain (and optionally fine-tune) a model; writes checkpoints.
    Train(PlainArgs),
    /// Score a checkpoint on a corpus split.
    Evaluate(EvaluateArgs),
    /// Integrated-gradients attribution for one claim.
    Attribute(AttributeArgs),
    /// Grid-search fusion weights; prints a ranked table.
    Sweep(PlainArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PlainArgs {
    #[command(flatten)]
    cfg: ExperimentConfig,
}

#[derive(Args)]
struct TagArgs {
    /// Inline text of one document.
    #[arg(long, conflicts_with = "input")]
    text: Option<String>,
    /// TSV file with lines: doc_id <TAB> anchor-date-or-empty <TAB> text.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Fallback anchor date (YYYY-MM-DD) for relative expressions.
    #[arg(long)]
    dct: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildBucketsArgs {
    #[command(flatten)]
    cfg: ExperimentConfig,
    /// document or content.
    #[arg(long)]
    level: String,
    #[arg(long, default_value_t = 20)]
    quantiles: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    cfg: ExperimentConfig,
    /// Emit the full report as JSON instead of text tables.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AttributeArgs {
    #[command(flatten)]
    cfg: ExperimentConfig,
    #[arg(long)]
    claim_id: String,
    /// Integration steps (m).
    #[arg(long, default_value_t = 300)]
    steps: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// time_rule, text_rule, or mixed.
    #[arg(long, default_value = "time_rule")]
    rule: String,
    #[arg(long, default_value_t = 3)]
    domains: usize,
    /// Claims per domain.
    #[arg(long, default_value_t = 60)]
    claims: usize,
    /// Evidence documents per claim.
    #[arg(long, default_value_t = 5)]
    evidence: usize,
    #[arg(long, default_value_t = 40)]
    vocab: usize,
    #[arg(long, default_value_t = 30)]
    max_abs_delta: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the generation record (per-instance deltas and bits).
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn resolve(config: Option<&Path>, flags: ExperimentConfig) -> Result<ExperimentConfig> {
    Ok(match config {
        Some(path) => ExperimentConfig::load(path)?.merged_with(&flags),
        None => flags,
    })
}

/// Write to the path when given, stdout otherwise.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tag(args) => tag(args),
        Command::BuildBuckets(args) => {
            let cfg = resolve(cli.config.as_deref(), args.cfg)?;
            let level: SchemeLevel = args.level.parse()?;
            let scheme = pipeline::run_build_buckets(&cfg, level, args.quantiles)?;
            let text = format!("{}{}", scheme.to_text(), pipeline::artifact_header(&cfg)?);
            emit(cfg.out.as_deref(), &text)
        }
        Command::Ground(args) => {
            let cfg = resolve(cli.config.as_deref(), args.cfg)?;
            let dump = pipeline::run_ground(&cfg)?;
            emit(cfg.out.as_deref(), &dump)
        }
        Command::Train(args) => train(resolve(cli.config.as_deref(), args.cfg)?),
        Command::Evaluate(args) => {
            let cfg = resolve(cli.config.as_deref(), args.cfg)?;
            let (report, ckpt) = pipeline::run_evaluate(&cfg)?;
            let text = if args.json {
                serde_json::to_string_pretty(&report)? + "\n"
            } else {
                format!(
                    "{}# checkpoint {} (domain {}, epoch {})\n{}\n{}",
                    pipeline::artifact_header(&cfg)?,
                    ckpt.fingerprint,
                    ckpt.domain,
                    ckpt.epoch,
                    report.render_table(),
                    report.render_confusion()
                )
            };
            emit(cfg.out.as_deref(), &text)
        }
        Command::Attribute(args) => {
            let cfg = resolve(cli.config.as_deref(), args.cfg)?;
            let (report, ckpt) = pipeline::run_attribute(&cfg, &args.claim_id, args.steps)?;
            let text = format!(
                "{}# checkpoint {}\n# claim {}\n{}",
                pipeline::artifact_header(&cfg)?,
                ckpt.fingerprint,
                args.claim_id,
                pipeline::render_attribution(&report)
            );
            emit(cfg.out.as_deref(), &text)
        }
        Command::Sweep(args) => {
            let cfg = resolve(cli.config.as_deref(), args.cfg)?;
            let rows = pipeline::run_sweep(&cfg)?;
            let text =
                format!("{}{}", pipeline::artifact_header(&cfg)?, pipeline::render_sweep(&rows));
            emit(cfg.out.as_deref(), &text)
        }
        Command::Synth(args) => synth(args),
    }
}

fn tag(args: TagArgs) -> Result<()> {
    let dct: Option<CalendarDate> = match &args.dct {
        Some(s) => Some(s.parse()?),
        None => None,
    };
    let mut records: Vec<TaggerRecord> = Vec::new();
    match (&args.text, &args.input) {
        (Some(text), None) => records.push(tag_document("doc0", text, dct)),
        (None, Some(path)) => {
            let content = std::fs::read_to_string(path)?;
            for (ln, line) in content.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let mut parts = line.splitn(3, '\t');
                let (id, anchor, text) =
                    (parts.next().unwrap_or(""), parts.next(), parts.next());
                let Some(text) = text else {
                    return Err(Error::MalformedRow {
                        path: path.display().to_string(),
                        line: ln + 1,
                        msg: "expected doc_id\\tanchor\\ttext".into(),
                    });
                };
                let anchor = match anchor.unwrap_or("").trim() {
                    "" => dct,
                    s => Some(s.parse()?),
                };
                records.push(tag_document(id, text, anchor));
            }
        }
        _ => return Err(Error::Config("tag needs exactly one of --text or --input".into())),
    }
    match &args.out {
        Some(path) => chronofact::tagger::write_records(path, &records),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for r in &records {
                serde_json::to_writer(&mut lock, r)?;
                lock.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn train(cfg: ExperimentConfig) -> Result<()> {
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Config("train needs --out for its checkpoint".into()))?;
    let (run, _encoder) = pipeline::run_train(&cfg)?;
    run.last.save(&out)?;
    let base = out.display();
    for (domain, ckpt) in &run.best {
        ckpt.save(&PathBuf::from(format!("{base}.{domain}.best")))?;
    }
    let mut metrics = pipeline::artifact_header(&cfg)?;
    for m in &run.metrics {
        metrics.push_str(&serde_json::to_string(m)?);
        metrics.push('\n');
    }
    std::fs::write(format!("{base}.metrics"), metrics)?;
    for m in &run.metrics {
        let val: Vec<String> =
            m.val_loss.iter().map(|(d, v)| format!("{d} {v:.4}")).collect();
        println!(
            "epoch {:>3}  train {:.4}  lr {:.2e}  val [{}]",
            m.epoch,
            m.train_loss,
            m.lr,
            val.join(", ")
        );
    }
    println!("checkpoint written to {base}");
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        n_domains: args.domains,
        claims_per_domain: args.claims,
        evidence_per_claim: args.evidence,
        rule: args.rule.parse()?,
        vocab_size: args.vocab,
        max_abs_delta: args.max_abs_delta,
        ..SynthConfig::default()
    };
    let (instances, truths) = generate_synthetic(&config, args.seed);
    write_instances(&args.out, &instances)?;
    if let Some(path) = &args.truth_out {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for t in &truths {
            serde_json::to_writer(&mut f, t)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
    }
    println!("{} instances written to {}", instances.len(), args.out.display());
    Ok(())
}
