//! End-to-end stages: ingest, inject, embed, detect, evaluate, tune and
//! project. Each stage writes its artifacts under the configured output
//! directory together with a config snapshot and a version stamp.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::astpath::{extract_ast_paths, parse_function};
use crate::config::{CampaignMode, EmbeddingSection, RunConfig};
use crate::corpus::{load_corpus, top_k_function_types, CorpusFormat, CorpusIndex, SkipReport};
use crate::detect::{detect_function_type, DetectError, Method, TypeDetection};
use crate::embed::{
    embed_hashed, export_embeddings, import_embeddings, parse_embeddings, retain_known, EmbeddingVector,
};
use crate::eval::{evaluate, pca_2d, projection_csv, tune_dbscan, CellInput, EvalReport, TuningReport, TuningSet};
use crate::inject::{simulate_campaign, AttackType, ManifestEntry};
use crate::io::{to_jsonl, write_atomic};
use crate::{Error, Result, TOOL_VERSION};

/// Ingest statistics (record counts and the per-type histogram).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records: usize,
    pub function_types: usize,
    pub duplicate_sources: usize,
    pub skipped_lines: usize,
    /// Types selected for analysis (the `top_k` most common).
    pub analyzed_types: Vec<String>,
    pub histogram: Vec<HistogramRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub function_name: String,
    pub implementations: usize,
}

/// One detection scenario: the corpus as analyzed, possibly after an
/// injection campaign.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Attack name, `mixed`, or `original` when no campaign runs.
    pub name: String,
    pub index: CorpusIndex,
    pub manifest: Vec<ManifestEntry>,
}

/// Output of the shared stages every command starts with.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub corpus: CorpusIndex,
    pub summary: IngestSummary,
    pub types: Vec<String>,
    pub scenarios: Vec<Scenario>,
    /// Per scenario: record id -> vector, for records of analyzed types.
    pub vectors: Vec<BTreeMap<String, EmbeddingVector>>,
    pub skips: SkipReport,
}

/// Detection results of one scenario, keyed by function type.
pub type ScenarioDetections = BTreeMap<String, TypeDetection>;

/// Writes artifacts under one run directory.
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    /// Creates the directory and writes the config snapshot and version
    /// stamp.
    pub fn new(config: &RunConfig) -> Result<Self> {
        let mut w = ArtifactWriter {
            dir: config.output.dir.clone(),
            written: Vec::new(),
        };
        w.write("config.toml", config.to_toml().as_bytes())?;
        w.write("VERSION", format!("{TOOL_VERSION}\n").as_bytes())?;
        Ok(w)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, relative: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(relative);
        write_atomic(&path, contents)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable report");
        text.push('\n');
        self.write(relative, text.as_bytes())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Loads the corpus and computes the ingest summary.
pub fn ingest(config: &RunConfig) -> Result<(CorpusIndex, SkipReport, IngestSummary)> {
    let (index, skips) = load_corpus(&config.corpus.path, CorpusFormat::Jsonl)?;
    let all = top_k_function_types(&index, usize::MAX);
    let analyzed = all
        .iter()
        .take(config.corpus.top_k)
        .map(|(name, _)| name.clone())
        .collect();
    let summary = IngestSummary {
        records: index.len(),
        function_types: all.len(),
        duplicate_sources: index.duplicate_count(),
        skipped_lines: skips.len(),
        analyzed_types: analyzed,
        histogram: all
            .into_iter()
            .map(|(function_name, implementations)| HistogramRow {
                function_name,
                implementations,
            })
            .collect(),
    };
    Ok((index, skips, summary))
}

pub fn histogram_csv(summary: &IngestSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Eval(e.into());
    w.write_record(["function_name", "implementations"]).map_err(csv_err)?;
    for row in &summary.histogram {
        w.write_record([row.function_name.clone(), row.implementations.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs the configured injection campaigns.
pub fn build_scenarios(config: &RunConfig, corpus: &CorpusIndex, types: &[String]) -> Result<Vec<Scenario>> {
    let camp = &config.campaign;
    if !camp.enabled {
        return Ok(vec![Scenario {
            name: "original".into(),
            index: corpus.clone(),
            manifest: Vec::new(),
        }]);
    }
    let runs: Vec<(String, Vec<AttackType>)> = match camp.mode {
        CampaignMode::PerAttack => camp
            .attacks
            .iter()
            .map(|a| (a.as_str().to_string(), vec![*a]))
            .collect(),
        CampaignMode::Mixed => vec![("mixed".into(), camp.attacks.clone())],
    };
    runs.into_iter()
        .map(|(name, attacks)| {
            let c = simulate_campaign(corpus, &camp.campaign_config(types, attacks))?;
            Ok(Scenario {
                name,
                index: c.index,
                manifest: c.manifest,
            })
        })
        .collect()
}

/// Embeds one normalized source; `None` (with a reason) when it fails to
/// parse.
pub fn embed_source(
    id: &str,
    normalized: &str,
    cfg: &EmbeddingSection,
) -> std::result::Result<EmbeddingVector, String> {
    let tree = parse_function(normalized).map_err(|e| e.to_string())?;
    let paths = extract_ast_paths(&tree, cfg.max_path_length, cfg.max_path_width);
    embed_hashed(id, &paths, cfg.dim, cfg.seed).map_err(|e| e.to_string())
}

fn cache_key(cfg: &EmbeddingSection, index: &CorpusIndex, ids: &[&str]) -> String {
    let mut h = Sha256::new();
    h.update(TOOL_VERSION.as_bytes());
    h.update(toml::to_string(cfg).expect("config serializes").as_bytes());
    for id in ids {
        let r = index.get(id).expect("id from index");
        h.update(id.as_bytes());
        h.update([0]);
        h.update(r.normalized_source.as_bytes());
        h.update([0]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Embeds every record of the analyzed types. Hashed embeddings are memoized
/// by source text and cached on disk under `cache_dir` keyed by a content
/// hash of the inputs.
pub fn embed_scenario(
    scenario: &Scenario,
    types: &[String],
    cfg: &EmbeddingSection,
    imported: Option<&BTreeMap<String, EmbeddingVector>>,
    memo: &mut HashMap<String, Result<Vec<f64>, String>>,
    cache_dir: Option<&Path>,
    skips: &mut SkipReport,
) -> Result<BTreeMap<String, EmbeddingVector>> {
    let ids: Vec<&str> = types
        .iter()
        .filter_map(|t| scenario.index.by_type().get(t))
        .flatten()
        .map(String::as_str)
        .collect();
    let mut out = BTreeMap::new();

    if let Some(imported) = imported {
        for id in ids {
            match imported.get(id) {
                Some(v) => {
                    out.insert(id.to_string(), v.clone());
                }
                None => skips.push("embed", None, Some(id), "no imported embedding for record"),
            }
        }
        return Ok(out);
    }

    let cache_file = cache_dir.map(|d| d.join(format!("embeddings-{}.jsonl", cache_key(cfg, &scenario.index, &ids))));
    let cached = match &cache_file {
        Some(path) if path.exists() => parse_embeddings(&crate::io::read_to_string(path)?).ok(),
        _ => None,
    };

    for id in &ids {
        let rec = scenario.index.get(id).expect("id from index");
        if let Some(v) = cached.as_ref().and_then(|c| c.get(*id)) {
            out.insert(id.to_string(), v.clone());
            continue;
        }
        let result = memo
            .entry(rec.normalized_source.clone())
            .or_insert_with(|| embed_source(id, &rec.normalized_source, cfg).map(|v| v.values));
        match result {
            Ok(values) => {
                out.insert(id.to_string(), EmbeddingVector::new(*id, values.clone()));
            }
            Err(reason) => skips.push("parse", None, Some(id), reason.clone()),
        }
    }
    if let (Some(path), None) = (&cache_file, &cached) {
        write_atomic(path, export_embeddings(out.values()).as_bytes())?;
    }
    Ok(out)
}

/// Ingest, campaign and embedding stages.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let (corpus, mut skips, summary) = ingest(config)?;
    let types = summary.analyzed_types.clone();
    let scenarios = build_scenarios(config, &corpus, &types)?;

    let imported = match &config.embedding.import_path {
        Some(path) => {
            let mut m = import_embeddings(path)?;
            let known: HashSet<&str> = scenarios
                .iter()
                .flat_map(|s| s.index.records().iter().map(|r| r.id.as_str()))
                .collect();
            for warning in retain_known(&mut m, &known) {
                skips.push("embed", None, None, warning);
            }
            Some(m)
        }
        None => None,
    };

    let cache_dir = config.output.dir.join("cache");
    let mut memo = HashMap::new();
    let mut vectors = Vec::with_capacity(scenarios.len());
    let mut seen_parse_skips = HashSet::new();
    for s in &scenarios {
        let mut local = SkipReport::default();
        vectors.push(embed_scenario(
            s,
            &types,
            &config.embedding,
            imported.as_ref(),
            &mut memo,
            Some(&cache_dir),
            &mut local,
        )?);
        // benign records are shared by every scenario; report them once
        for e in local.entries {
            if seen_parse_skips.insert((e.stage.clone(), e.id.clone(), e.reason.clone())) {
                skips.entries.push(e);
            }
        }
    }
    Ok(Prepared {
        config: config.clone(),
        corpus,
        summary,
        types,
        scenarios,
        vectors,
        skips,
    })
}

impl Prepared {
    fn type_vectors(&self, scenario: usize, function_name: &str) -> Vec<EmbeddingVector> {
        let vectors = &self.vectors[scenario];
        self.scenarios[scenario]
            .index
            .by_type()
            .get(function_name)
            .into_iter()
            .flatten()
            .filter_map(|id| vectors.get(id).cloned())
            .collect()
    }

    /// Runs detection for every scenario and analyzed type. Types that are
    /// too small are skipped and reported.
    pub fn detect(&self, skips: &mut SkipReport) -> Result<Vec<ScenarioDetections>> {
        let mut all = Vec::with_capacity(self.scenarios.len());
        for (si, scenario) in self.scenarios.iter().enumerate() {
            let mut per_type = BTreeMap::new();
            for t in &self.types {
                let vectors = self.type_vectors(si, t);
                match detect_function_type(&vectors, &self.config.detection) {
                    Ok(d) => {
                        per_type.insert(t.clone(), d);
                    }
                    Err(e @ (DetectError::TooFew { .. } | DetectError::Empty)) => {
                        let note = format!("{}: {t}: {e}", scenario.name);
                        if !skips.entries.iter().any(|x| x.reason == note) {
                            skips.push("detect", None, Some(t), note);
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            all.push(per_type);
        }
        Ok(all)
    }

    fn attack_positives(&self, scenario: usize, function_name: &str) -> BTreeMap<AttackType, HashSet<String>> {
        let mut out: BTreeMap<AttackType, HashSet<String>> = BTreeMap::new();
        for r in self.scenarios[scenario].index.records_of(function_name) {
            if let Some(a) = r.attack_type {
                if self.vectors[scenario].contains_key(&r.id) {
                    out.entry(a).or_default().insert(r.id.clone());
                }
            }
        }
        out
    }

    /// Builds the evaluation report from detections.
    pub fn evaluate(&self, detections: &[ScenarioDetections]) -> Result<EvalReport> {
        let mut cells = Vec::new();
        for (si, per_type) in detections.iter().enumerate() {
            for (t, det) in per_type {
                let by_attack = self.attack_positives(si, t);
                let n = self.type_vectors(si, t).len();
                for (attack, positives) in &by_attack {
                    // other attacks' records are left out of this cell
                    let mut ranking = det.ranking.clone();
                    ranking.entries.retain(|e| {
                        positives.contains(&e.record_id) || !by_attack.values().any(|p| p.contains(&e.record_id))
                    });
                    let detected: Vec<String> = match self.config.detection.method {
                        Method::Dbscan => ranking.ids().into_iter().map(String::from).collect(),
                        Method::Ecod => {
                            let m = (self.config.eval.ecod_contamination * n as f64 - 1e-9).ceil() as usize;
                            ranking.ids().into_iter().take(m).map(String::from).collect()
                        }
                    };
                    cells.push(CellInput {
                        function_name: t.clone(),
                        attack: attack.as_str().to_string(),
                        ranking,
                        detected,
                        positives: positives.clone(),
                    });
                }
            }
        }
        let implementations = self
            .types
            .iter()
            .map(|t| (t.clone(), self.corpus.by_type().get(t).map_or(0, Vec::len)))
            .collect();
        Ok(evaluate(
            &cells,
            &implementations,
            self.config.eval.k_max,
            self.config.detection.method,
            report_params(&self.config),
        )?)
    }

    /// Cross-validated grid search over every (scenario, type) set.
    pub fn tune(&self) -> Result<TuningReport> {
        let grid = self
            .config
            .eval
            .tuning
            .clone()
            .ok_or_else(|| Error::Config("eval.tuning grid is not configured".into()))?;
        let mut sets = Vec::new();
        for (si, scenario) in self.scenarios.iter().enumerate() {
            for t in &self.types {
                let positives = self.attack_positives(si, t).into_values().flatten().collect();
                sets.push(TuningSet {
                    name: format!("{t}/{}", scenario.name),
                    vectors: self.type_vectors(si, t),
                    positives,
                });
            }
        }
        Ok(tune_dbscan(
            &sets,
            &grid,
            self.config.eval.folds,
            self.config.campaign.seed,
        )?)
    }

    /// PCA CSV text per (scenario, type).
    pub fn project(&self) -> Result<Vec<(String, String, String)>> {
        let mut out = Vec::new();
        for (si, scenario) in self.scenarios.iter().enumerate() {
            for t in &self.types {
                let vectors = self.type_vectors(si, t);
                if vectors.len() < 2 {
                    continue;
                }
                let proj = pca_2d(&vectors)?;
                let csv = projection_csv(&proj, |id| {
                    let injected = scenario.index.get(id).is_some_and(|r| r.is_injected());
                    if injected { "injected" } else { "benign" }.to_string()
                })?;
                out.push((scenario.name.clone(), t.clone(), csv));
            }
        }
        Ok(out)
    }
}

/// Config snapshot embedded in reports. The output directory is left out
/// so that relocated re-runs produce identical bytes.
pub fn report_params(config: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("output");
    }
    v
}

fn write_skips(w: &mut ArtifactWriter, skips: &SkipReport) -> Result<()> {
    w.write("skipped.jsonl", skips.to_jsonl().as_bytes())?;
    Ok(())
}

fn write_ingest(w: &mut ArtifactWriter, p: &Prepared) -> Result<()> {
    w.write_json("summary.json", &p.summary)?;
    w.write("histogram.csv", histogram_csv(&p.summary)?.as_bytes())?;
    Ok(())
}

fn write_scenarios(w: &mut ArtifactWriter, p: &Prepared) -> Result<()> {
    for s in &p.scenarios {
        if s.manifest.is_empty() {
            continue;
        }
        w.write(&format!("manifests/{}.jsonl", s.name), to_jsonl(&s.manifest).as_bytes())?;
        w.write(&format!("corpora/{}.jsonl", s.name), s.index.to_jsonl().as_bytes())?;
    }
    Ok(())
}

fn write_detections(w: &mut ArtifactWriter, p: &Prepared, detections: &[ScenarioDetections]) -> Result<()> {
    for (s, per_type) in p.scenarios.iter().zip(detections) {
        for (t, d) in per_type {
            w.write(
                &format!("detections/{}/{t}.jsonl", s.name),
                to_jsonl(d.lines()).as_bytes(),
            )?;
        }
    }
    Ok(())
}

fn write_projections(w: &mut ArtifactWriter, p: &Prepared) -> Result<()> {
    for (scenario, t, csv) in p.project()? {
        w.write(&format!("pca/{scenario}/{t}.csv"), csv.as_bytes())?;
    }
    Ok(())
}

/// Pipeline stages selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Inject,
    Detect,
    Evaluate,
    Tune,
    Project,
    Run,
}

/// Everything a stage produced, for callers that want the values as well
/// as the files.
#[derive(Debug, Default)]
pub struct StageOutput {
    pub summary: Option<IngestSummary>,
    pub report: Option<EvalReport>,
    pub tuning: Option<TuningReport>,
    pub skips: SkipReport,
    pub written: Vec<PathBuf>,
}

/// Runs one stage (with its prerequisites) and writes its artifacts.
pub fn run_stage(config: &RunConfig, stage: Stage) -> Result<StageOutput> {
    config.validate()?;
    if stage == Stage::Tune && config.eval.tuning.is_none() {
        return Err(Error::Config("eval.tuning grid is not configured".into()));
    }
    let mut w = ArtifactWriter::new(config)?;
    let mut out = StageOutput::default();

    if stage == Stage::Ingest {
        let (_, skips, summary) = ingest(config)?;
        w.write_json("summary.json", &summary)?;
        w.write("histogram.csv", histogram_csv(&summary)?.as_bytes())?;
        write_skips(&mut w, &skips)?;
        out.summary = Some(summary);
        out.skips = skips;
        out.written = w.written().to_vec();
        return Ok(out);
    }

    let p = prepare(config)?;
    let mut skips = p.skips.clone();
    write_ingest(&mut w, &p)?;
    write_scenarios(&mut w, &p)?;
    match stage {
        Stage::Ingest | Stage::Inject => {}
        Stage::Detect => {
            let d = p.detect(&mut skips)?;
            write_detections(&mut w, &p, &d)?;
        }
        Stage::Evaluate | Stage::Run => {
            let d = p.detect(&mut skips)?;
            write_detections(&mut w, &p, &d)?;
            let report = p.evaluate(&d)?;
            w.write_json("eval_report.json", &report)?;
            w.write("eval_report.csv", report.to_csv()?.as_bytes())?;
            if stage == Stage::Run {
                write_projections(&mut w, &p)?;
            }
            out.report = Some(report);
        }
        Stage::Tune => {
            let t = p.tune()?;
            w.write_json("tuning_report.json", &t)?;
            w.write("tuning_grid.csv", t.to_csv()?.as_bytes())?;
            out.tuning = Some(t);
        }
        Stage::Project => write_projections(&mut w, &p)?,
    }
    write_skips(&mut w, &skips)?;
    out.summary = Some(p.summary);
    out.skips = skips;
    out.written = w.written().to_vec();
    Ok(out)
}
