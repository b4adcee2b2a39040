//! File-based workflows behind the `riskloop` binary: validate a risk model,
//! derive its assurance cases, run a falsification campaign, explain the
//! resulting archive and replay single assignments.
//!
//! Every command returns a [`CliError`] carrying the process exit code on
//! failure. All files are written atomically through a temporary sibling.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use riskloop::digest::sha256_hex;
use riskloop::explain::{
    build_dataset, estimate_event_likelihood, extract_rules, generate_counterexamples, induce_tree,
    render_report, AugmentationSet, Rule, TreeParams,
};
use riskloop::falsify::{
    evaluate_assignment, make_feature_space, read_archive, run_campaign, write_archive_csv,
    ArchiveHeader, Campaign, FalsifyError, SearchConfig,
};
use riskloop::risk_model::{derive_assurance_cases, parse_risk_model, serialize_model, RiskModel};
use riskloop::sim::{bind_assignment, simulate, FeatureAssignment, Label, Scenario, Verdict};
use riskloop::Real;

/// Counterexamples sampled per rule.
pub const AUGMENTATION_SIZE: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid model, out-of-domain value or mismatched inputs.
    #[error("{0}")]
    Domain(String),
    /// Unreadable or unwritable file, malformed or unresolvable config.
    #[error("{0}")]
    Io(String),
    /// The campaign would perform no evaluations.
    #[error("no evaluations performed: {0}")]
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) => 2,
            CliError::Empty(_) => 3,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Write `bytes` to a temporary sibling of `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    // going through Value sorts object keys
    let v = serde_json::to_value(value).expect("serialisable");
    let mut out = serde_json::to_vec_pretty(&v).expect("serialisable");
    out.push(b'\n');
    out
}

pub fn load_model(path: &Path) -> Result<RiskModel, CliError> {
    parse_risk_model(&read(path)?).map_err(|e| CliError::Domain(format!("{}:\n{e}", path.display())))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let sc = Scenario::from_toml(&read(path)?).map_err(|e| io_err(path, e))?;
    sc.validate().map_err(|e| io_err(path, e))?;
    Ok(sc)
}

pub fn scenario_digest(sc: &Scenario) -> String {
    sha256_hex(sc.to_toml())
}

/// Parse and validate a model; the error lists every diagnostic.
pub fn cmd_validate(model: &Path) -> Result<String, CliError> {
    let m = load_model(model)?;
    Ok(format!(
        "{}: ok ({} actors, {} goals, {} features, {} events, {} situations)",
        model.display(),
        m.actors.len(),
        m.goals.len(),
        m.features.len(),
        m.events.len(),
        m.situations.len()
    ))
}

/// Derive assurance cases and write them as JSON.
pub fn cmd_cases(model: &Path, out: &Path) -> Result<String, CliError> {
    let m = load_model(model)?;
    let cases = derive_assurance_cases(&m);
    write_atomic(out, &to_json(&cases))?;
    let mut msg = format!("{} assurance case(s) written to {}", cases.len(), out.display());
    if cases.is_empty() {
        msg.push_str("\nwarning: the model has no negative event impacting a goal");
    }
    Ok(msg)
}

fn default_threshold() -> Real {
    0.2
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Campaign description read from a TOML config. Relative paths are taken
/// from the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub model: PathBuf,
    pub scenario: PathBuf,
    pub situation: String,
    pub event: String,
    #[serde(default)]
    pub search: SearchConfig,
    /// Simulator seeds; robustness is averaged when there are several.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Likelihood a leaf needs to become a rule.
    #[serde(default = "default_threshold")]
    pub threshold: Real,
    #[serde(default)]
    pub tree: TreeParams,
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: CampaignConfig = toml::from_str(&read(path)?).map_err(|e| io_err(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.model, &mut cfg.scenario, &mut cfg.out] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Command-line overrides for `run`.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub budget: Option<usize>,
    /// Replaces the simulator seeds; the first also seeds the search.
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub budget: usize,
    pub evaluations: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub best_index: Option<usize>,
    pub best_robustness: Option<Real>,
    pub compliance: usize,
    pub non_compliance: usize,
}

/// Summary of a campaign; every number is recomputable from the archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub campaign_digest: String,
    pub situation: String,
    pub event: String,
    pub algorithm: String,
    pub seeds: Vec<u64>,
    pub model_digest: String,
    pub scenario_digest: String,
    pub evaluations: EvaluationSummary,
    pub artifacts: BTreeMap<String, PathBuf>,
}

fn algorithm_name(cfg: &SearchConfig) -> String {
    serde_json::to_value(cfg.algorithm)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn falsify_err(e: FalsifyError) -> CliError {
    match e {
        FalsifyError::UnknownSituation(_)
        | FalsifyError::UnknownEvent(_)
        | FalsifyError::NotExposed { .. }
        | FalsifyError::Config(_)
        | FalsifyError::NoSeeds => CliError::Io(format!("config: {e}")),
        other => CliError::Domain(other.to_string()),
    }
}

/// Run the campaign a config describes and write `archive.csv`, its header
/// `archive.json`, `config.json` and `summary.json` into the output
/// directory. Violations are results, not failures.
pub fn cmd_run(config: &Path, overrides: &RunOverrides) -> Result<RunSummary, CliError> {
    let mut cfg = CampaignConfig::load(config)?;
    if let Some(b) = overrides.budget {
        cfg.search.budget = b;
    }
    if let Some(&first) = overrides.seeds.first() {
        cfg.seeds = overrides.seeds.clone();
        cfg.search.seed = first;
    }
    if let Some(o) = &overrides.out {
        cfg.out = o.clone();
    }
    if cfg.search.budget == 0 {
        return Err(CliError::Empty("budget is 0".into()));
    }
    let model = load_model(&cfg.model)?;
    let scenario = load_scenario(&cfg.scenario)?;
    let campaign = Campaign {
        situation: cfg.situation.clone(),
        event: cfg.event.clone(),
        search: cfg.search.clone(),
        seeds: cfg.seeds.clone(),
    };
    let space = make_feature_space(&model, &cfg.situation).map_err(falsify_err)?;
    let archive = run_campaign(&model, &scenario, &campaign).map_err(falsify_err)?;
    if archive.is_empty() {
        return Err(CliError::Empty("the search returned no points".into()));
    }

    let model_digest = model.digest();
    let scen_digest = scenario_digest(&scenario);
    let header = ArchiveHeader {
        situation: cfg.situation.clone(),
        event: cfg.event.clone(),
        features: space.names().map(str::to_string).collect(),
        search: cfg.search.clone(),
        seeds: cfg.seeds.clone(),
        model_digest: model_digest.clone(),
        scenario_digest: scen_digest.clone(),
        evaluations: archive.len(),
        violations: archive.violations.len(),
        best: archive.best,
    };
    let mut csv = Vec::new();
    write_archive_csv(&archive, &space, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    let config_json = to_json(&cfg);
    // paths are left out: the inputs enter through their content digests
    let mut settings = cfg.clone();
    settings.model = PathBuf::new();
    settings.scenario = PathBuf::new();
    settings.out = PathBuf::new();
    let campaign_digest = sha256_hex(
        [
            sha256_hex(to_json(&settings)),
            model_digest.clone(),
            scen_digest.clone(),
            format!("{:?}", cfg.seeds),
        ]
        .join("\n"),
    );

    let archive_path = cfg.out.join("archive.csv");
    let header_path = header_path(&archive_path);
    let config_path = cfg.out.join("config.json");
    let summary_path = cfg.out.join("summary.json");
    write_atomic(&archive_path, &csv)?;
    write_atomic(&header_path, &to_json(&header))?;
    write_atomic(&config_path, &config_json)?;

    let nc = archive
        .points
        .iter()
        .filter(|p| p.outcome.label == Label::NonCompliance)
        .count();
    let summary = RunSummary {
        campaign_digest,
        situation: cfg.situation.clone(),
        event: cfg.event.clone(),
        algorithm: algorithm_name(&cfg.search),
        seeds: cfg.seeds.clone(),
        model_digest,
        scenario_digest: scen_digest,
        evaluations: EvaluationSummary {
            budget: cfg.search.budget,
            evaluations: archive.len(),
            violations: archive.violations.len(),
            first_violation: archive.violations.first().copied(),
            best_index: archive.best,
            best_robustness: archive.best_point().map(|p| p.robustness),
            compliance: archive.len() - nc,
            non_compliance: nc,
        },
        artifacts: BTreeMap::from([
            ("archive".to_string(), archive_path),
            ("archive_header".to_string(), header_path),
            ("config".to_string(), config_path),
            ("summary".to_string(), summary_path.clone()),
        ]),
    };
    write_atomic(&summary_path, &to_json(&summary))?;
    Ok(summary)
}

/// The JSON header that accompanies an archive CSV.
pub fn header_path(archive: &Path) -> PathBuf {
    archive.with_extension("json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub campaign: ArchiveHeader,
    pub algorithm: String,
    pub threshold: Real,
    pub tree: TreeParams,
    pub rows: usize,
    pub compliance: usize,
    pub non_compliance: usize,
    pub event: String,
    pub likelihood: riskloop::risk_model::Likelihood,
    pub rules: Vec<Rule>,
    pub artifacts: BTreeMap<String, PathBuf>,
}

/// Settings `explain` takes from the `config.json` that `run` left next to
/// the archive, or the defaults when there is none.
fn campaign_settings(archive: &Path) -> Result<(TreeParams, Real), CliError> {
    let path = archive.with_file_name("config.json");
    if !path.is_file() {
        return Ok((TreeParams::default(), default_threshold()));
    }
    let cfg: CampaignConfig = serde_json::from_str(&read(&path)?).map_err(|e| io_err(&path, e))?;
    Ok((cfg.tree, cfg.threshold))
}

/// Induce a tree over an archive, extract rules at `threshold` (by default
/// the campaign's), sample counterexamples per rule and write a
/// likelihood-annotated model.
pub fn cmd_explain(
    archive: &Path,
    model: &Path,
    threshold: Option<Real>,
    out: &Path,
) -> Result<ExplainReport, CliError> {
    let m = load_model(model)?;
    let hpath = header_path(archive);
    let header: ArchiveHeader =
        serde_json::from_str(&read(&hpath)?).map_err(|e| io_err(&hpath, e))?;
    if header.model_digest != m.digest() {
        return Err(CliError::Domain(format!(
            "model digest mismatch: {} was not generated from {}",
            archive.display(),
            model.display()
        )));
    }
    let space = make_feature_space(&m, &header.situation).map_err(falsify_err)?;
    let names: Vec<String> = space.names().map(str::to_string).collect();
    if names != header.features {
        return Err(CliError::Domain(format!(
            "archive features {:?} do not match the model's {:?}",
            header.features, names
        )));
    }
    let file = fs::File::open(archive).map_err(|e| io_err(archive, e))?;
    let loaded = read_archive(file, &space).map_err(|e| CliError::Domain(e.to_string()))?;
    let data = build_dataset(&loaded, &space).map_err(|e| CliError::Domain(e.to_string()))?;
    let (params, campaign_threshold) = campaign_settings(archive)?;
    let threshold = threshold.unwrap_or(campaign_threshold);
    let tree = induce_tree(&data, params).map_err(|e| CliError::Empty(e.to_string()))?;
    let rules = extract_rules(&tree, threshold).map_err(|e| CliError::Io(e.to_string()))?;
    let augmentation: Vec<AugmentationSet> = rules
        .iter()
        .map(|r| {
            generate_counterexamples(r, &space, AUGMENTATION_SIZE, header.search.seed + r.id as u64)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let likelihood = estimate_event_likelihood(&data, &header.event)
        .map_err(|e| CliError::Empty(e.to_string()))?;
    let annotated = m
        .annotate_likelihoods(&BTreeMap::from([(header.event.clone(), likelihood)]))
        .map_err(|e| CliError::Domain(e.to_string()))?;

    let stem = model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let paths = BTreeMap::from([
        ("tree".to_string(), out.join("tree.json")),
        ("rules".to_string(), out.join("rules.json")),
        ("rules_text".to_string(), out.join("rules.txt")),
        ("augmentation".to_string(), out.join("augmentation.json")),
        ("annotated_model".to_string(), out.join(format!("{stem}.annotated.riskml"))),
        ("report".to_string(), out.join("report.json")),
    ]);
    write_atomic(&paths["tree"], &to_json(&tree))?;
    write_atomic(&paths["rules"], &to_json(&rules))?;
    write_atomic(&paths["rules_text"], render_report(&rules).as_bytes())?;
    write_atomic(&paths["augmentation"], &to_json(&augmentation))?;
    write_atomic(&paths["annotated_model"], serialize_model(&annotated).as_bytes())?;

    let (compliance, non_compliance) = data.label_counts();
    let report = ExplainReport {
        algorithm: algorithm_name(&header.search),
        event: header.event.clone(),
        campaign: header,
        threshold,
        tree: params,
        rows: data.len(),
        compliance,
        non_compliance,
        likelihood,
        rules,
        artifacts: paths.clone(),
    };
    write_atomic(&paths["report"], &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub situation: String,
    pub seeds: Vec<u64>,
    pub verdict: Verdict,
}

/// Simulate one assignment (a JSON object of feature values) and write the
/// trace of the first seed plus the verdict over all seeds.
pub fn cmd_replay(
    model: &Path,
    scenario: &Path,
    assignment: &Path,
    seeds: &[u64],
    out: &Path,
) -> Result<ReplayOutcome, CliError> {
    let m = load_model(model)?;
    let sc = load_scenario(scenario)?;
    let a: FeatureAssignment =
        serde_json::from_str(&read(assignment)?).map_err(|e| io_err(assignment, e))?;
    let situation = m
        .situations
        .iter()
        .find(|s| {
            s.features.len() == a.len() && s.features.iter().all(|f| a.contains_key(f))
        })
        .map(|s| s.name.clone())
        .ok_or_else(|| {
            CliError::Domain("no situation has exactly the assignment's features".into())
        })?;
    let seeds = if seeds.is_empty() { default_seeds() } else { seeds.to_vec() };
    let verdict =
        evaluate_assignment(&m, &situation, &sc, &a, &seeds).map_err(falsify_err)?;
    let bound = bind_assignment(&sc, &m, &a).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut trace = Vec::new();
    simulate(&bound, seeds[0])
        .write_csv(&mut trace)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let outcome = ReplayOutcome {
        situation,
        seeds,
        verdict,
    };
    write_atomic(&out.join("trace.csv"), &trace)?;
    write_atomic(&out.join("verdict.json"), &to_json(&outcome))?;
    Ok(outcome)
}
