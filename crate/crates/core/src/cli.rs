//! The `phishbook` command line: ingest → sample → code → irr → cluster →
//! report → respond → serve. Every command writes its artifacts under
//! `--out` and fails with a JSON error object on stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::agreement::{agreement_report, disagreements, AnnotationSet};
use crate::autocoder::{code_email, Lexicons, Recipient};
use crate::campaigns::{
    campaign_report, cluster_multilayer, cluster_stats, CorpusIndex, Matcher, DEFAULT_LEVENSHTEIN_THRESHOLD,
};
use crate::codebook::{
    read_coded_file, validate_coded, write_coded_csv, write_coded_jsonl, Code, CodebookSchema, CodedEmail,
};
use crate::corpus::{
    assign_ids, parse_mailbox, preprocess, sample_by_frequency, to_record, ArchiveFormat, DropReason, EmailId,
    EmailRecord, Origin, RawEmail, SamplingPlan, SkippedMessage, StopwordDetector,
};
use crate::guidance::{generate_guidance, Templates};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::reports::{cooccurrence_report, distribution_report, DEFAULT_TOP_K};
use crate::service::{serve, AnnotationStore, AppState};

/// Failure classes, each with its own exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Runtime,
    Usage,
    Config,
    Input,
    Schema,
    Output,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Runtime => 1,
            ErrorKind::Usage => 2,
            ErrorKind::Config => 3,
            ErrorKind::Input => 4,
            ErrorKind::Schema => 5,
            ErrorKind::Output => 6,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub error: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl CliError {
    fn new(error: ErrorKind, message: impl Into<String>) -> Self {
        CliError { error, message: message.into(), violations: Vec::new() }
    }

    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("error serializes");
        v["exit_code"] = json!(self.exit_code());
        v.to_string()
    }
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new(ErrorKind::Input, format!("{}: {e}", path.display()))
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new(ErrorKind::Output, format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "phishbook", version, about = "Phishing email coding, agreement, campaign and guidance toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse mbox/eml archives into records JSONL, dropping empty and non-English emails
    Ingest(IngestArgs),
    /// Draw a seeded sample from the busiest months of one year
    Sample(SampleArgs),
    /// Auto-code records into coded CSV and JSONL
    Code(CodeArgs),
    /// Inter-rater agreement between two coded files
    Irr(IrrArgs),
    /// Multilayer campaign clustering of a coded file
    Cluster(ClusterArgs),
    /// Label distributions of a coded file
    Report(ReportArgs),
    /// Tailored guidance for one email
    Respond(RespondArgs),
    /// Run the annotation service
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct SchemaArgs {
    /// Extra sector sub-code accepted in addition to the canonical ones (repeatable)
    #[arg(long = "sector", value_name = "NAME")]
    sectors: Vec<String>,
}

impl SchemaArgs {
    fn schema(&self) -> CodebookSchema {
        let mut s = CodebookSchema::default();
        for sector in &self.sectors {
            s.extend_sector(sector);
        }
        s
    }
}

#[derive(Args, Debug)]
struct CoderArgs {
    /// Directory of lexicon files; missing files fall back to the shipped ones
    #[arg(long)]
    lexicons: Option<PathBuf>,
    /// Organization gazetteer (name, sector, domain TSV)
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    #[arg(long, default_value = "")]
    recipient_name: String,
    #[arg(long = "recipient-email", default_value = "")]
    recipient_email: String,
    #[command(flatten)]
    schema: SchemaArgs,
}

impl CoderArgs {
    fn lexicons(&self) -> CliResult<Lexicons> {
        let lex = Lexicons::load(self.lexicons.as_deref(), self.gazetteer.as_deref())
            .map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?;
        let problems = lex.check_schema(&self.schema.schema());
        if !problems.is_empty() {
            let mut e = CliError::new(ErrorKind::Schema, "lexicons use labels outside the codebook");
            e.violations = problems;
            return Err(e);
        }
        Ok(lex)
    }

    fn recipient(&self) -> Recipient {
        Recipient { name: self.recipient_name.clone(), address: self.recipient_email.clone() }
    }
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Archive files, or directories of .eml files (repeatable)
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value = "mbox")]
    format: ArchiveFormat,
    /// Year the archive covers; ids are YEAR_NNN in order of appearance
    #[arg(long)]
    year: u16,
    #[arg(long)]
    out: PathBuf,
    /// Keep emails the English heuristic would drop
    #[arg(long)]
    keep_non_english: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Records JSONL
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Mandatory: sampling without a seed is refused
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    year: i32,
    /// Window width in months
    #[arg(long, default_value_t = 3)]
    window: u32,
    #[arg(long)]
    sample_size: usize,
}

#[derive(Args, Debug)]
struct CodeArgs {
    /// Records JSONL
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    coder: CoderArgs,
}

#[derive(Args, Debug)]
struct IrrArgs {
    /// First coder's coded file (.csv or .jsonl)
    a: PathBuf,
    /// Second coder's coded file
    b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaArgs,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Coded file (.csv or .jsonl)
    #[arg(long)]
    input: PathBuf,
    /// Records JSONL; adds per-cluster summaries and transport tables
    #[arg(long)]
    records: Option<PathBuf>,
    /// exact or lev
    #[arg(long, default_value = "exact")]
    matcher: String,
    #[arg(long, default_value_t = DEFAULT_LEVENSHTEIN_THRESHOLD)]
    lev_threshold: usize,
    /// Smallest leaf listed in the campaign report
    #[arg(long, default_value_t = 2)]
    min_size: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    schema: SchemaArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Coded file (.csv or .jsonl)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Co-occurrence of two labels, as CODE=VALUE,CODE=VALUE (repeatable)
    #[arg(long)]
    cooccur: Vec<String>,
    #[command(flatten)]
    schema: SchemaArgs,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Render {
    Text,
    Html,
    Json,
}

#[derive(Args, Debug)]
struct RespondArgs {
    /// Records JSONL, or a single message with --format eml
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Which record to answer for; required when the input holds several
    #[arg(long)]
    id: Option<String>,
    /// Use these codes instead of auto-coding
    #[arg(long)]
    coded: Option<PathBuf>,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    render: Render,
    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    coder: CoderArgs,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Records JSONL to annotate
    #[arg(long)]
    input: PathBuf,
    /// Coder and bearer token as ID=TOKEN (repeatable)
    #[arg(long = "coder", required = true)]
    coders: Vec<String>,
    /// Append-only annotation journal, replayed at startup
    #[arg(long)]
    journal: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    coder: CoderArgs,
}

/// Parse and run. `Ok` carries what to print on stdout.
pub fn run<I, T>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return Ok(e.to_string()),
        Err(e) => return Err(CliError::new(ErrorKind::Usage, e.render().to_string().trim().to_string())),
    };
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Sample(a) => sample(a),
        Command::Code(a) => code(a),
        Command::Irr(a) => irr(a),
        Command::Cluster(a) => cluster(a),
        Command::Report(a) => report(a),
        Command::Respond(a) => respond(a),
        Command::Serve(a) => serve_cmd(a),
    }
}

/// Run and report: stdout on success, error JSON on stderr. Returns the
/// exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run(args) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| output_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items).map_err(|e| output_err(path, e))?;
    write_file(path, &buf)
}

fn read_records(path: &Path) -> CliResult<Vec<EmailRecord>> {
    let file = fs::File::open(path).map_err(|e| input_err(path, e))?;
    read_jsonl(BufReader::new(file)).map_err(|e| input_err(path, e))
}

fn read_coded(path: &Path, schema: &CodebookSchema) -> CliResult<Vec<CodedEmail>> {
    let coded = read_coded_file(path).map_err(|e| input_err(path, e))?;
    let violations: Vec<String> = coded
        .iter()
        .flat_map(|c| validate_coded(c, schema).into_iter().map(move |v| format!("{}: {v}", c.email_id)))
        .collect();
    if !violations.is_empty() {
        let mut e = CliError::new(ErrorKind::Schema, format!("{} violates the codebook", path.display()));
        e.violations = violations;
        return Err(e);
    }
    Ok(coded)
}

fn archive_files(input: &Path, format: ArchiveFormat) -> CliResult<Vec<PathBuf>> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let ext = match format {
        ArchiveFormat::Eml => "eml",
        ArchiveFormat::Mbox => "mbox",
    };
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| input_err(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)))
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Serialize)]
struct IngestSummary {
    year: u16,
    messages: usize,
    skipped: usize,
    dropped_empty: usize,
    dropped_non_english: usize,
    kept: usize,
}

fn ingest(a: IngestArgs) -> CliResult<String> {
    let mut raws: Vec<RawEmail> = Vec::new();
    let mut skipped: Vec<SkippedMessage> = Vec::new();
    for input in &a.input {
        for file in archive_files(input, a.format)? {
            let bytes = fs::read(&file).map_err(|e| input_err(&file, e))?;
            let name = file.display().to_string();
            let parsed = parse_mailbox(&bytes, a.format, &name).map_err(|e| input_err(&file, e))?;
            raws.extend(parsed.emails);
            skipped.extend(parsed.skipped);
        }
    }
    let messages = raws.len() + skipped.len();
    let mut records = Vec::new();
    for (raw, id) in raws.iter().zip(assign_ids(a.year, raws.len())) {
        match to_record(raw, id) {
            Ok(r) => records.push(r),
            Err(e) => skipped.push(SkippedMessage { origin: raw.origin.clone(), offset: 0, reason: e.to_string() }),
        }
    }
    let detector = StopwordDetector::default();
    let pre = preprocess(records, if a.keep_non_english { None } else { Some(&detector) });

    create_dir(&a.out)?;
    write_lines(&a.out.join("records.jsonl"), &pre.kept)?;
    write_lines(&a.out.join("dropped.jsonl"), &pre.dropped)?;
    write_lines(&a.out.join("skipped.jsonl"), &skipped)?;
    let count = |r: DropReason| pre.dropped.iter().filter(|d| d.reason == r).count();
    let summary = IngestSummary {
        year: a.year,
        messages,
        skipped: skipped.len(),
        dropped_empty: count(DropReason::Empty),
        dropped_non_english: count(DropReason::NonEnglish),
        kept: pre.kept.len(),
    };
    write_json(&a.out.join("ingest_summary.json"), &summary)?;
    Ok(format!(
        "{} messages: {} kept, {} empty, {} non-English, {} skipped\n",
        summary.messages, summary.kept, summary.dropped_empty, summary.dropped_non_english, summary.skipped
    ))
}

fn sample(a: SampleArgs) -> CliResult<String> {
    let seed = a.seed.ok_or_else(|| CliError::new(ErrorKind::Config, "sampling needs an explicit --seed"))?;
    let plan = SamplingPlan { year: a.year, window_months: a.window, sample_size: a.sample_size, seed };
    plan.validate().map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?;
    let records = read_records(&a.input)?;
    let outcome = sample_by_frequency(&records, &plan).map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?;
    create_dir(&a.out)?;
    write_lines(&a.out.join("sample.jsonl"), &outcome.sampled)?;
    write_json(
        &a.out.join("sample_summary.json"),
        &json!({
            "plan": plan,
            "window": outcome.window,
            "window_count": outcome.window_count,
            "month_counts": outcome.month_counts,
            "sampled": outcome.sampled.len(),
            "warnings": outcome.warnings,
        }),
    )?;
    let window = outcome.window.map_or("none".to_string(), |(s, e)| format!("months {s}-{e}"));
    Ok(format!("sampled {} of {} emails in {window}\n", outcome.sampled.len(), outcome.window_count))
}

fn code(a: CodeArgs) -> CliResult<String> {
    let lex = a.coder.lexicons()?;
    let schema = a.coder.schema.schema();
    let recipient = a.coder.recipient();
    let records = read_records(&a.input)?;
    let coded: Vec<CodedEmail> = records.par_iter().map(|r| code_email(r, &lex, &schema, &recipient)).collect();
    create_dir(&a.out)?;
    let mut csv = Vec::new();
    write_coded_csv(&mut csv, &coded).map_err(|e| output_err(&a.out, e))?;
    write_file(&a.out.join("coded.csv"), &csv)?;
    let mut jsonl = Vec::new();
    write_coded_jsonl(&mut jsonl, &coded).map_err(|e| output_err(&a.out, e))?;
    write_file(&a.out.join("coded.jsonl"), &jsonl)?;
    Ok(format!("coded {} emails\n", coded.len()))
}

fn irr(a: IrrArgs) -> CliResult<String> {
    let schema = a.schema.schema();
    let sa = AnnotationSet::from_coded(coder_name(&a.a), &read_coded(&a.a, &schema)?);
    let sb = AnnotationSet::from_coded(coder_name(&a.b), &read_coded(&a.b, &schema)?);
    let report =
        agreement_report(&sa, &sb, &Code::RELIABILITY).map_err(|e| CliError::new(ErrorKind::Input, e.to_string()))?;
    if let Some(out) = &a.out {
        create_dir(out)?;
        write_json(&out.join("agreement.json"), &report)?;
        write_lines(&out.join("disagreements.jsonl"), &disagreements(&sa, &sb, &Code::RELIABILITY))?;
    }
    Ok(report.to_table())
}

fn coder_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn parse_matcher(name: &str, threshold: usize) -> CliResult<Matcher> {
    match name.trim().to_ascii_lowercase().as_str() {
        "exact" => Ok(Matcher::Exact),
        "lev" | "levenshtein" => Ok(Matcher::Levenshtein { threshold }),
        other => other.parse().map_err(|e: String| CliError::new(ErrorKind::Usage, e)),
    }
}

fn cluster(a: ClusterArgs) -> CliResult<String> {
    let matcher = parse_matcher(&a.matcher, a.lev_threshold)?;
    let coded = read_coded(&a.input, &a.schema.schema())?;
    let clustering = cluster_multilayer(&coded, matcher);
    create_dir(&a.out)?;
    write_json(&a.out.join("clusters.json"), &clustering)?;
    let text = match &a.records {
        Some(path) => {
            let records = read_records(path)?;
            let index = CorpusIndex::new(&records, &coded);
            let report = campaign_report(&clustering, &index, a.min_size, true)
                .map_err(|e| CliError::new(ErrorKind::Input, e.to_string()))?;
            write_json(&a.out.join("campaigns.json"), &report)?;
            report.to_table()
        }
        None => {
            let mut s = String::new();
            for depth in 1..=clustering.layers.len() as u8 {
                let st = cluster_stats(clustering.layer(depth));
                s += &format!(
                    "depth {depth}: {} clusters, {} with more than one email\n",
                    st.total_clusters, st.multi_clusters
                );
            }
            for c in clustering.leaves().iter().filter(|c| c.size() >= a.min_size) {
                s += &format!("{:>4}  {}\n", c.size(), c.member_ids.join(" "));
            }
            s
        }
    };
    write_file(&a.out.join("clusters.txt"), text.as_bytes())?;
    Ok(text)
}

fn parse_cooccur(spec: &str) -> CliResult<[(String, String); 2]> {
    let bad = || CliError::new(ErrorKind::Usage, format!("--cooccur expects CODE=VALUE,CODE=VALUE, got {spec:?}"));
    let (x, y) = spec.split_once(',').ok_or_else(bad)?;
    let pair = |s: &str| s.split_once('=').map(|(c, v)| (c.trim().to_string(), v.trim().to_string())).ok_or_else(bad);
    Ok([pair(x)?, pair(y)?])
}

fn report(a: ReportArgs) -> CliResult<String> {
    let coded = read_coded(&a.input, &a.schema.schema())?;
    let dist = distribution_report(&coded, a.top_k).map_err(|e| CliError::new(ErrorKind::Input, e.to_string()))?;
    let mut text = dist.to_table();
    let mut cooc = Vec::new();
    for spec in &a.cooccur {
        let [(ca, va), (cb, vb)] = parse_cooccur(spec)?;
        let r = cooccurrence_report(&coded, &ca, &cb, &va, &vb)
            .map_err(|e| CliError::new(ErrorKind::Usage, e.to_string()))?;
        text +=
            &format!("\n{ca}={va} and {cb}={vb}: {} emails ({} and {} individually)\n", r.count, r.count_a, r.count_b);
        cooc.push(json!({ "a": { "code": ca, "value": va }, "b": { "code": cb, "value": vb }, "result": r }));
    }
    create_dir(&a.out)?;
    let mut csv = Vec::new();
    dist.write_csv(&mut csv).map_err(|e| output_err(&a.out, e))?;
    write_file(&a.out.join("distributions.csv"), &csv)?;
    write_json(&a.out.join("distributions.json"), &json!({ "distribution": dist, "cooccurrence": cooc }))?;
    write_file(&a.out.join("report.txt"), text.as_bytes())?;
    Ok(text)
}

fn respond(a: RespondArgs) -> CliResult<String> {
    let lex = a.coder.lexicons()?;
    let schema = a.coder.schema.schema();
    let templates = match &a.templates {
        Some(p) => Templates::load(p).map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?,
        None => Templates::embedded(),
    };
    let records = match a.format.as_str() {
        "eml" => {
            let bytes = fs::read(&a.input).map_err(|e| input_err(&a.input, e))?;
            let raw = RawEmail { source: bytes, origin: Origin { archive: a.input.display().to_string(), index: 0 } };
            let id: EmailId =
                a.id.as_deref()
                    .unwrap_or("0000_001")
                    .parse()
                    .map_err(|e| CliError::new(ErrorKind::Usage, format!("{e}")))?;
            vec![to_record(&raw, id).map_err(|e| input_err(&a.input, e))?]
        }
        "jsonl" => read_records(&a.input)?,
        other => return Err(CliError::new(ErrorKind::Usage, format!("unknown respond input format {other:?}"))),
    };
    let record = match (&a.id, records.len()) {
        (_, 0) => return Err(CliError::new(ErrorKind::Input, "no records in input")),
        (None, 1) => &records[0],
        (None, _) => return Err(CliError::new(ErrorKind::Usage, "input holds several records; pick one with --id")),
        (Some(id), _) => records
            .iter()
            .find(|r| r.id.as_str() == id)
            .ok_or_else(|| CliError::new(ErrorKind::Input, format!("no record {id:?}")))?,
    };
    let coded = match &a.coded {
        Some(path) => {
            read_coded(path, &schema)?.into_iter().find(|c| c.email_id == record.id.as_str()).ok_or_else(|| {
                CliError::new(ErrorKind::Input, format!("{} has no codes for {}", path.display(), record.id))
            })?
        }
        None => code_email(record, &lex, &schema, &a.coder.recipient()),
    };
    let g = generate_guidance(&coded, record, &lex, &templates);
    let text = match a.render {
        Render::Text => g.render_text(),
        Render::Html => g.render_html(),
        Render::Json => serde_json::to_string_pretty(&g).expect("guidance serializes") + "\n",
    };
    match &a.out {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn serve_cmd(a: ServeArgs) -> CliResult<String> {
    let lex = a.coder.lexicons()?;
    let records = read_records(&a.input)?;
    let mut coders = BTreeMap::new();
    for spec in &a.coders {
        let (id, token) = spec
            .split_once('=')
            .filter(|(i, t)| !i.trim().is_empty() && !t.trim().is_empty())
            .ok_or_else(|| CliError::new(ErrorKind::Usage, format!("--coder expects ID=TOKEN, got {spec:?}")))?;
        coders.insert(id.trim().to_string(), token.trim().to_string());
    }
    let mut store = AnnotationStore::new(records, a.coder.schema.schema(), coders);
    if let Some(journal) = &a.journal {
        let n = store.open_journal(journal).map_err(|e| CliError::new(ErrorKind::Input, e.to_string()))?;
        eprintln!("replayed {n} annotations from {}", journal.display());
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| CliError::new(ErrorKind::Usage, format!("bad listen address: {e}")))?;
    let state = AppState::new(store, lex, a.coder.recipient());
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new(ErrorKind::Runtime, e.to_string()))?;
    eprintln!("listening on http://{addr}");
    rt.block_on(serve(addr, state)).map_err(|e| CliError::new(ErrorKind::Runtime, e.to_string()))?;
    Ok(String::new())
}
