use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use air_core::data::{
    dataset_corpus_stats, dataset_vocab, load_multirc, load_qasc, read_records_jsonl, write_records_jsonl,
    CandidateSource,
};
use air_core::eval::{
    prf_from_traces, recall_from_traces, render_prf_table, render_recall_table, run_drift_experiment,
    run_sensitivity_m, run_sensitivity_t, sensitivity_csv, DriftVariant,
};
use air_core::pipeline::{retrieve_all, KbSource, RetrievalContext};
use air_core::{
    AirConfig, AirError, Analyzer, Bm25Params, CorpusStats, EmbeddingTable, InvertedIndex, KnowledgeBase, Matcher,
    QuestionRecord, StopwordList, TokenizerConfig, TraceRecord,
};
use serde_json::{json, Value};

use crate::args::{AirArgs, DatasetArgs, EvaluateArgs, Experiment, IndexArgs, MetricArg, PrepareArgs, RetrieveArgs, TextArgs};
use crate::meta::{comment_line, meta_line, strip_meta};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self::usage(format!("{}: {e}", path.display()))
    }

    /// Input and configuration problems exit 2; anything the pipeline should
    /// have prevented exits 1.
    fn core(e: AirError, path: Option<&Path>) -> Self {
        let code = match e {
            AirError::EmptyQuery | AirError::EmptyPool | AirError::PoolTooSmall { .. } => 1,
            _ => 2,
        };
        let message = match (path, &e) {
            (_, AirError::Io { .. }) | (None, _) => e.to_string(),
            (Some(p), _) => format!("{}: {e}", p.display()),
        };
        Self { code, message }
    }
}

impl From<AirError> for CliError {
    fn from(e: AirError) -> Self {
        Self::core(e, None)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn opt_path(p: &Option<PathBuf>) -> Value {
    p.as_deref().map(path_str).map(Value::String).unwrap_or(Value::Null)
}

fn analyzer(text: &TextArgs) -> Result<Analyzer> {
    let stopwords = match &text.stopwords {
        Some(p) => StopwordList::from_file(p).map_err(|e| CliError::core(e, Some(p)))?,
        None => StopwordList::bundled(),
    };
    Ok(Analyzer::new(TokenizerConfig::default(), stopwords))
}

fn bm25_params(text: &TextArgs) -> Result<Bm25Params> {
    if !(text.k1 >= 0.0 && (0.0..=1.0).contains(&text.b)) {
        return Err(CliError::usage(format!("need k1 >= 0 and 0 <= b <= 1, got k1={} b={}", text.k1, text.b)));
    }
    Ok(Bm25Params { k1: text.k1, b: text.b })
}

fn text_json(text: &TextArgs) -> Value {
    json!({ "stopwords": opt_path(&text.stopwords), "k1": text.k1, "b": text.b })
}

fn dataset_json(d: &DatasetArgs) -> Value {
    json!({
        "multirc": opt_path(&d.multirc),
        "qasc": opt_path(&d.qasc),
        "records": opt_path(&d.records),
        "kb": opt_path(&d.kb),
        "index": opt_path(&d.index),
        "pool_size": d.pool_size,
        "text": text_json(&d.text),
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

struct Dataset {
    records: Vec<QuestionRecord>,
    kb: Option<KnowledgeBase>,
    index: Option<InvertedIndex>,
    analyzer: Analyzer,
}

impl Dataset {
    fn load(d: &DatasetArgs) -> Result<Self> {
        let analyzer = analyzer(&d.text)?;
        let (records, kb) = if let Some(p) = &d.multirc {
            let kb = d.kb.as_deref().map(load_kb).transpose()?;
            (load_multirc(p)?, kb)
        } else if let Some(q) = &d.qasc {
            let kb_path = d.kb.as_deref().ok_or_else(|| CliError::usage("--qasc needs --kb"))?;
            let (records, kb) = load_qasc(q, kb_path)?;
            (records, Some(kb))
        } else if let Some(p) = &d.records {
            let (_, body) = strip_meta(&read_text(p)?);
            let records = read_records_jsonl(&body, &path_str(p))?;
            let kb = d.kb.as_deref().map(load_kb).transpose()?;
            if kb.is_none() && records.iter().any(|r| matches!(r.candidate_source, CandidateSource::KbPool)) {
                return Err(CliError::usage(format!("{}: records draw from a knowledge base; pass --kb", p.display())));
            }
            (records, kb)
        } else {
            return Err(CliError::usage("one of --multirc, --qasc, --records is required"));
        };
        let index = match &kb {
            None => None,
            Some(kb) => Some(kb_index(d, kb, &analyzer)?),
        };
        Ok(Self { records, kb, index, analyzer })
    }

    fn uses_kb(&self) -> bool {
        self.records.iter().any(|r| matches!(r.candidate_source, CandidateSource::KbPool))
    }

    fn stats(&self) -> Result<CorpusStats> {
        let kb = if self.uses_kb() { self.kb.as_ref() } else { None };
        Ok(dataset_corpus_stats(&self.records, kb, &self.analyzer)?)
    }

    fn context<'a>(
        &'a self,
        table: &'a EmbeddingTable,
        stats: &'a CorpusStats,
        pool_size: usize,
    ) -> RetrievalContext<'a> {
        let kb = match (&self.kb, &self.index) {
            (Some(kb), Some(index)) if self.uses_kb() => Some(KbSource { kb, index, pool_size }),
            _ => None,
        };
        RetrievalContext { analyzer: &self.analyzer, table, stats, kb }
    }
}

fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    let kb = KnowledgeBase::load(path)?;
    if kb.is_empty() {
        return Err(CliError::usage(format!("{}: knowledge base is empty", path.display())));
    }
    Ok(kb)
}

fn kb_index(d: &DatasetArgs, kb: &KnowledgeBase, analyzer: &Analyzer) -> Result<InvertedIndex> {
    let params = bm25_params(&d.text)?;
    match &d.index {
        Some(p) => {
            let index = InvertedIndex::load(p).map_err(|e| CliError::core(e, Some(p)))?;
            if index.doc_count() != kb.len() {
                return Err(CliError::usage(format!(
                    "{}: index covers {} sentences but the knowledge base has {}",
                    p.display(),
                    index.doc_count(),
                    kb.len()
                )));
            }
            Ok(index)
        }
        None => Ok(InvertedIndex::build(kb.lines(), analyzer, params)?),
    }
}

fn air_config(a: &AirArgs, kb_dataset: bool) -> Result<AirConfig> {
    let base = if kb_dataset { AirConfig::qasc() } else { AirConfig::multirc() };
    let cfg = AirConfig {
        soft_match_threshold: a.soft_match_threshold,
        expansion_threshold: a.expansion_threshold.unwrap_or(base.expansion_threshold),
        max_hops: a.max_hops,
        chain_count: a.parallel_chains,
        mode: a.mode.into(),
        matcher: a.matcher.into(),
        fixed_hops: a.fixed_hops,
        expand_all_previous: a.expand_all_previous,
    };
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn embeddings(a: &AirArgs, cfg: &AirConfig, data: &Dataset) -> Result<EmbeddingTable> {
    match (&a.embeddings, cfg.matcher) {
        (Some(p), _) => {
            let kb = if data.uses_kb() { data.kb.as_ref() } else { None };
            let vocab = dataset_vocab(&data.records, kb, &data.analyzer);
            EmbeddingTable::load(p, Some(&vocab)).map_err(|e| CliError::core(e, Some(p)))
        }
        (None, Matcher::Lexical) => Ok(EmbeddingTable::empty(1)),
        (None, Matcher::Embedding) => Err(CliError::usage(
            "no embedding file: pass --embeddings or set AIR_EMBEDDINGS (or use --matcher lexical)",
        )),
    }
}

struct Output {
    path: Option<PathBuf>,
    inner: Box<dyn Write>,
}

impl Output {
    fn open(path: Option<&Path>) -> Result<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { path: path.map(Path::to_path_buf), inner })
    }

    fn fail(&self, e: io::Error) -> CliError {
        CliError::io(self.path.as_deref().unwrap_or(Path::new("<stdout>")), e)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.inner, "{s}").map_err(|e| self.fail(e))
    }

    fn raw(&mut self, s: &str) -> Result<()> {
        self.inner.write_all(s.as_bytes()).map_err(|e| self.fail(e))
    }

    fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| self.fail(e))
    }
}

pub fn prepare(args: &PrepareArgs) -> Result<()> {
    let data = Dataset::load(&args.dataset)?;
    let config = json!({ "command": "prepare", "dataset": dataset_json(&args.dataset) });
    let mut buf = Vec::new();
    write_records_jsonl(&data.records, &mut buf).map_err(|e| CliError { code: 1, message: e.to_string() })?;
    let mut out = Output::open(args.out.as_deref())?;
    out.line(&meta_line(&config))?;
    out.raw(&String::from_utf8_lossy(&buf))?;
    out.finish()
}

pub fn index(args: &IndexArgs) -> Result<()> {
    let analyzer = analyzer(&args.text)?;
    let kb = load_kb(&args.kb)?;
    let index = InvertedIndex::build(kb.lines(), &analyzer, bm25_params(&args.text)?)?;
    index.save(&args.out).map_err(|e| CliError::core(e, Some(&args.out)))?;
    let config = json!({
        "command": "index",
        "kb": path_str(&args.kb),
        "text": text_json(&args.text),
    });
    let summary = json!({
        "doc_count": index.doc_count(),
        "vocab_size": index.vocab_len(),
        "avg_len": index.avg_len(),
    });
    let mut out = Output::open(None)?;
    out.line(&meta_line(&config))?;
    out.line(&summary.to_string())?;
    out.finish()
}

fn air_json(command: &str, d: &DatasetArgs, a: &AirArgs, cfg: &AirConfig) -> Value {
    json!({
        "command": command,
        "dataset": dataset_json(d),
        "embeddings": opt_path(&a.embeddings),
        "air": cfg,
    })
}

pub fn retrieve(args: &RetrieveArgs) -> Result<()> {
    let data = Dataset::load(&args.dataset)?;
    let cfg = air_config(&args.air, data.uses_kb())?;
    let table = embeddings(&args.air, &cfg, &data)?;
    let stats = data.stats()?;
    let ctx = data.context(&table, &stats, args.dataset.pool_size);
    let traces = retrieve_all(&ctx, &data.records, &cfg)?;

    let config = air_json("retrieve", &args.dataset, &args.air, &cfg);
    let mut out = Output::open(args.out.as_deref())?;
    out.line(&meta_line(&config))?;
    for t in &traces {
        out.line(&serde_json::to_string(t).expect("trace serializes"))?;
    }
    out.finish()
}

fn read_traces(path: &Path) -> Result<(Option<Value>, Vec<TraceRecord>)> {
    let (meta, body) = strip_meta(&read_text(path)?);
    let mut traces = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: TraceRecord = serde_json::from_str(line)
            .map_err(|e| CliError::usage(format!("{}:{}: not a trace record: {e}", path.display(), i + 1)))?;
        traces.push(t);
    }
    if traces.is_empty() {
        return Err(CliError::usage(format!("{}: no traces in file", path.display())));
    }
    Ok((meta, traces))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let (trace_meta, traces) = read_traces(&args.traces)?;
    let data = Dataset::load(&args.dataset)?;
    let metric = match args.metric {
        MetricArg::Prf => "prf",
        MetricArg::Recall10 => "recall10",
    };
    let config = json!({
        "command": "evaluate",
        "traces": path_str(&args.traces),
        "traces_config_hash": trace_meta.as_ref().and_then(|m| m.get("config_hash")).cloned().unwrap_or(Value::Null),
        "dataset": dataset_json(&args.dataset),
        "metric": metric,
    });
    let ctx = |e: AirError| CliError::core(e, Some(&args.traces));
    let (report, table) = match args.metric {
        MetricArg::Prf => {
            let m = prf_from_traces(&traces, &data.records).map_err(ctx)?;
            (serde_json::to_value(&m).expect("metrics serialize"), render_prf_table(&m))
        }
        MetricArg::Recall10 => {
            let r = recall_from_traces(&traces, &data.records, data.kb.as_ref()).map_err(ctx)?;
            (serde_json::to_value(r).expect("metrics serialize"), render_recall_table(&r))
        }
    };
    let mut out = Output::open(args.out.as_deref())?;
    if args.table {
        out.line(&comment_line(&config))?;
        out.raw(&table)?;
    } else {
        out.line(&meta_line(&config))?;
        out.line(&json!({ "metric": metric, "metrics": report }).to_string())?;
    }
    out.finish()
}

pub fn experiment(exp: &Experiment) -> Result<()> {
    let (dataset, air, out_path) = match exp {
        Experiment::Drift { dataset, air, out, .. }
        | Experiment::SensitivityM { dataset, air, out, .. }
        | Experiment::SensitivityT { dataset, air, out, .. } => (dataset, air, out),
    };
    let data = Dataset::load(dataset)?;
    let cfg = air_config(air, data.uses_kb())?;
    let table = embeddings(air, &cfg, &data)?;
    let stats = data.stats()?;
    let ctx = data.context(&table, &stats, dataset.pool_size);

    let (name, grid, csv) = match exp {
        Experiment::Drift { hops, .. } => {
            if hops.is_empty() || hops.contains(&0) {
                return Err(CliError::usage("--hops needs positive hop counts"));
            }
            let t = run_drift_experiment(&ctx, &data.records, &cfg, hops, &DriftVariant::ALL)?;
            ("drift", json!(hops), t.to_csv())
        }
        Experiment::SensitivityM { grid, .. } => {
            let rows = run_sensitivity_m(&ctx, &data.records, &cfg, grid)?;
            ("sensitivity-m", json!(grid), sensitivity_csv("M", &rows))
        }
        Experiment::SensitivityT { grid, .. } => {
            let rows = run_sensitivity_t(&ctx, &data.records, &cfg, grid)?;
            ("sensitivity-t", json!(grid), sensitivity_csv("T", &rows))
        }
    };
    let mut config = air_json("experiment", dataset, air, &cfg);
    config["experiment"] = json!(name);
    config["grid"] = grid;
    let mut out = Output::open(out_path.as_deref())?;
    out.line(&comment_line(&config))?;
    out.raw(&csv)?;
    out.finish()
}
