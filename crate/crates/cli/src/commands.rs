use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vwsd_client::{populate_store, EmbedClient, PopulateOptions, RetryPolicy};
use vwsd_core::metrics::{
    confusion, evaluate, gold_similarities, mean_sim_stats, roundtrip_pairs, roundtrip_stats,
    sim_gap_quadrants,
};
use vwsd_core::scoring::ScoreKind;
use vwsd_core::{
    ensemble_tables, score_system, store_coverage_check, AuxQueryFile, Dataset, EmbeddingStore,
    ScoreTable,
};

use crate::config::{Format, RunConfig};
use crate::render::{self, Table};
use crate::{Cli, CliError, Command};

pub const ENDPOINT_ENV: &str = "VWSD_ENDPOINT";

/// Loaded inputs plus the effective command-line overrides.
pub struct Session {
    pub config: RunConfig,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub jobs: Option<usize>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// File-system-safe rendering of a system name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c == '/' || c == '\\' || c == ':' { '_' } else { c })
        .collect()
}

impl Session {
    pub fn new(cli: &Cli) -> Result<Self, CliError> {
        let config = RunConfig::load(&cli.common.config)?;
        Ok(Session {
            out: cli.common.out.clone().unwrap_or_else(|| config.out.clone()),
            formats: if cli.common.formats.is_empty() {
                config.formats.clone()
            } else {
                cli.common.formats.clone()
            },
            jobs: cli.common.jobs.or(config.jobs),
            config,
        })
    }

    pub fn dataset(&self) -> Result<Dataset, CliError> {
        let ds = Dataset::parse(&read_text(&self.config.dataset)?, &self.config.split)
            .map_err(|e| CliError::Data(format!("{}: {e}", self.config.dataset.display())))?;
        match &self.config.gold {
            Some(gold) => ds
                .with_gold(&read_text(gold)?)
                .map_err(|e| CliError::Data(format!("{}: {e}", gold.display()))),
            None => Ok(ds),
        }
    }

    pub fn store(&self) -> Result<EmbeddingStore, CliError> {
        let mut store = EmbeddingStore::new();
        for path in &self.config.stores {
            let bytes =
                fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            let part = EmbeddingStore::from_any(&bytes)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            store
                .merge(&part)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        }
        Ok(store)
    }

    pub fn aux(&self, dataset: &Dataset) -> Result<Vec<AuxQueryFile>, CliError> {
        self.config
            .aux
            .iter()
            .map(|(tag, decl)| {
                AuxQueryFile::parse(tag, decl.kind, &read_text(&decl.path)?, dataset)
                    .map_err(|e| CliError::Data(format!("{}: {e}", decl.path.display())))
            })
            .collect()
    }

    fn scores_path(&self, name: &str) -> PathBuf {
        self.out.join(format!("{}.scores.json", file_stem(name)))
    }

    /// Resolves a table argument: an existing `.json` file, or a configured
    /// system or ensemble name (scored from the stores).
    pub fn table(&self, arg: &str, inputs: &Inputs) -> Result<ScoreTable, CliError> {
        let path = Path::new(arg);
        if arg.ends_with(".json") && path.is_file() {
            let table = ScoreTable::from_json(&read_text(path)?)
                .map_err(|e| CliError::Data(format!("{arg}: {e}")))?;
            table.check_dataset(&inputs.dataset)?;
            return Ok(table);
        }
        if let Some(spec) = self.config.system(arg) {
            return Ok(score_system(&inputs.dataset, spec, &inputs.store, &inputs.aux, self.jobs)?);
        }
        if let Some(spec) = self.config.ensemble(arg) {
            let members = spec
                .members
                .iter()
                .map(|m| self.table(m, inputs))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(ensemble_tables(&members, spec)?);
        }
        Err(CliError::Data(format!("{arg:?} is neither a score file nor a configured system or ensemble")))
    }

    /// Writes one report in every requested format and prints its markdown
    /// form to stdout.
    pub fn emit<T: Serialize>(&self, stem: &str, report: &T, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
        let markdown: String = tables.iter().map(|t| t.to_markdown()).collect::<Vec<_>>().join("\n");
        print!("{markdown}");
        let mut written = Vec::new();
        for format in &self.formats {
            let body = match format {
                Format::Json => serde_json::to_string_pretty(report).map_err(|e| CliError::Data(e.to_string()))? + "\n",
                Format::Csv => tables.iter().map(|t| t.to_csv()).collect::<Vec<_>>().join("\n"),
                Format::Markdown => markdown.clone(),
            };
            let path = self.out.join(format!("{stem}.{}", format.extension()));
            write_file(&path, body.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

pub struct Inputs {
    pub dataset: Dataset,
    pub store: EmbeddingStore,
    pub aux: Vec<AuxQueryFile>,
}

impl Inputs {
    pub fn load(session: &Session) -> Result<Self, CliError> {
        let dataset = session.dataset()?;
        let store = session.store()?;
        let aux = session.aux(&dataset)?;
        Ok(Inputs { dataset, store, aux })
    }
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let session = Session::new(cli)?;
    match &cli.command {
        Command::Validate => validate(&session),
        Command::Score { system } => score(&session, system).map(|_| ()),
        Command::Ensemble { ensemble } => run_ensemble(&session, ensemble).map(|_| ()),
        Command::Eval { tables } => eval(&session, tables),
        Command::Compare { a, b } => compare(&session, a, b),
        Command::Analyze { mean_sim, roundtrip } => analyze(&session, mean_sim, *roundtrip),
        Command::Fetch { output } => fetch(&session, output.as_deref()),
    }
}

pub fn validate(session: &Session) -> Result<(), CliError> {
    let mut findings = Vec::new();
    let dataset = match session.dataset() {
        Ok(ds) => Some(ds),
        Err(e) => {
            findings.push(e.to_string());
            None
        }
    };
    let store = session.store().map_err(|e| findings.push(e.to_string())).ok();
    if let Some(ds) = &dataset {
        for w in ds.warnings() {
            eprintln!("warning: {w}");
        }
        let aux = session.aux(ds).map_err(|e| findings.push(e.to_string())).ok();
        if let (Some(store), Some(aux)) = (&store, &aux) {
            let report = store_coverage_check(store, ds, &session.config.systems, aux);
            findings.extend(report.findings());
        }
    }
    for f in &findings {
        eprintln!("{f}");
    }
    if findings.is_empty() {
        if let Some(ds) = &dataset {
            eprintln!(
                "ok: {} instances, {} systems, {} ensembles",
                ds.len(),
                session.config.systems.len(),
                session.config.ensembles.len()
            );
        }
        Ok(())
    } else {
        Err(CliError::Invalid { count: findings.len() })
    }
}

pub fn score(session: &Session, system: &str) -> Result<PathBuf, CliError> {
    let spec = session
        .config
        .system(system)
        .ok_or_else(|| CliError::Data(format!("unknown system {system:?}")))?;
    let inputs = Inputs::load(session)?;
    let table = score_system(&inputs.dataset, spec, &inputs.store, &inputs.aux, session.jobs)?;
    let path = session.scores_path(system);
    write_file(&path, (table.to_json()? + "\n").as_bytes())?;
    eprintln!("wrote {} ({} rows)", path.display(), table.len());
    Ok(path)
}

pub fn run_ensemble(session: &Session, name: &str) -> Result<PathBuf, CliError> {
    if session.config.ensemble(name).is_none() {
        return Err(CliError::Data(format!("unknown ensemble {name:?}")));
    }
    let inputs = Inputs::load(session)?;
    let table = session.table(name, &inputs)?;
    let path = session.scores_path(name);
    write_file(&path, (table.to_json()? + "\n").as_bytes())?;
    eprintln!("wrote {} ({} rows)", path.display(), table.len());
    Ok(path)
}

pub fn eval(session: &Session, tables: &[String]) -> Result<(), CliError> {
    let inputs = Inputs::load(session)?;
    let names: Vec<String> = if tables.is_empty() {
        session
            .config
            .systems
            .iter()
            .map(|s| s.name.clone())
            .chain(session.config.ensembles.iter().map(|e| e.name.clone()))
            .collect()
    } else {
        tables.to_vec()
    };
    if names.is_empty() {
        return Err(CliError::Data("nothing to evaluate".into()));
    }
    let mut reports = Vec::new();
    for name in &names {
        let table = session.table(name, &inputs)?;
        reports.push(evaluate(&table, &inputs.dataset)?);
    }
    session.emit("eval", &reports, &[render::metrics_table(&reports)])?;
    Ok(())
}

pub fn compare(session: &Session, a: &str, b: &str) -> Result<(), CliError> {
    let inputs = Inputs::load(session)?;
    let ta = session.table(a, &inputs)?;
    let tb = session.table(b, &inputs)?;
    let report = if ta.kind == Some(ScoreKind::Cosine) && tb.kind == Some(ScoreKind::Cosine) {
        let sa = gold_similarities(&ta, &inputs.dataset)?;
        let sb = gold_similarities(&tb, &inputs.dataset)?;
        sim_gap_quadrants(&ta, &tb, &sa, &sb, &inputs.dataset)?
    } else {
        confusion(&ta, &tb, &inputs.dataset)?
    };
    let stem = format!("compare_{}_vs_{}", file_stem(&ta.system), file_stem(&tb.system));
    session.emit(&stem, &report, &render::confusion_tables(&report))?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    mean_sim: Vec<vwsd_core::metrics::MeanSimStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roundtrip: Option<vwsd_core::metrics::RoundTripReport>,
}

pub fn analyze(session: &Session, mean_sim: &[String], roundtrip: bool) -> Result<(), CliError> {
    let inputs = Inputs::load(session)?;
    let defaults = mean_sim.is_empty() && !roundtrip;
    let names: Vec<String> = if defaults {
        session
            .config
            .systems
            .iter()
            .filter(|s| s.score_kind() == ScoreKind::Cosine)
            .map(|s| s.name.clone())
            .collect()
    } else {
        mean_sim.to_vec()
    };
    let mut report = AnalyzeReport {
        mean_sim: Vec::new(),
        roundtrip: None,
    };
    for name in &names {
        let table = session.table(name, &inputs)?;
        report.mean_sim.push(mean_sim_stats(&table, &inputs.dataset)?);
    }
    if roundtrip || (defaults && session.config.roundtrip.is_some()) {
        let decl = session
            .config
            .roundtrip
            .as_ref()
            .ok_or_else(|| CliError::Config("no [roundtrip] table in the config".into()))?;
        let file = inputs
            .aux
            .iter()
            .find(|a| a.tag == decl.tag)
            .ok_or_else(|| CliError::Config(format!("aux tag {:?} not loaded", decl.tag)))?;
        let pairs = roundtrip_pairs(&inputs.dataset, file)?;
        let foreign = session.table(&decl.system, &inputs)?;
        report.roundtrip = Some(roundtrip_stats(&pairs, &foreign, &inputs.dataset)?);
    }
    let mut tables = Vec::new();
    if !report.mean_sim.is_empty() {
        tables.push(render::mean_sim_table(&report.mean_sim));
    }
    if let Some(rt) = &report.roundtrip {
        tables.push(render::roundtrip_table(rt));
    }
    session.emit("analyze", &report, &tables)?;
    Ok(())
}

pub fn fetch(session: &Session, output: Option<&Path>) -> Result<(), CliError> {
    let endpoint = std::env::var(ENDPOINT_ENV)
        .ok()
        .filter(|s| !s.is_empty())
        .or_else(|| session.config.endpoint.clone())
        .ok_or_else(|| CliError::Config(format!("no endpoint: set `endpoint` or {ENDPOINT_ENV}")))?;
    let inputs = Inputs::load(session)?;
    let mut client = EmbedClient::new(endpoint, RetryPolicy::default());
    if let Some(token) = &session.config.bearer_token {
        client = client.with_bearer_token(token);
    }
    let options = PopulateOptions {
        image_root: session.config.image_root.clone(),
        normalized: session
            .config
            .spaces
            .iter()
            .map(|(name, decl)| (name.clone(), decl.normalized))
            .collect(),
        concurrency: session.jobs.unwrap_or(4).max(1),
        ..PopulateOptions::default()
    };
    let (store, stats) = populate_store(
        &client,
        &inputs.dataset,
        &session.config.systems,
        &inputs.aux,
        &inputs.store,
        &options,
    )?;
    let path = output
        .map(Path::to_path_buf)
        .or_else(|| session.config.fetch_output.clone())
        .unwrap_or_else(|| session.out.join("store.embs"));
    write_file(&path, &store.to_binary()?)?;
    eprintln!(
        "fetched {} vectors in {} request(s); wrote {} ({} entries)",
        stats.fetched,
        stats.requests,
        path.display(),
        store.len()
    );
    Ok(())
}
