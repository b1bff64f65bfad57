//! TOML scenario files.
//!
//! Durations carry their unit in the key name (`gate_time_us`,
//! `reaction_time_ms`, ...). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::adder::UncomputeMode;
use crate::distance::CodeDistance;
use crate::error::{Error, Result};
use crate::error_model::ErrorModelParams;
use crate::factory::CultivationCurve;
use crate::lookup::UnlookupMode;
use crate::optimizer::{Objective, SweepSpec};
use crate::physical::PhysicalParams;
use crate::shor::{AlgorithmConfig, FactorySettings, LookupSettings, Scenario};

/// A parsed scenario plus the optional `[sweep]` section.
#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: Scenario,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AutoOr {
    Number(f64),
    Word(String),
}

impl AutoOr {
    fn resolve(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self {
            AutoOr::Number(v) => Ok(Some(*v)),
            AutoOr::Word(w) if w == "auto" => Ok(None),
            AutoOr::Word(w) => Err(config_error(
                section,
                key,
                format!("expected \"auto\" or a number, got \"{w}\""),
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    physical: RawPhysical,
    error_model: RawErrorModel,
    algorithm: RawAlgorithm,
    #[serde(default)]
    factory: RawFactory,
    #[serde(default)]
    lookup: RawLookup,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweepFile {
    sweep: RawSweep,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    site_spacing_um: Option<f64>,
    acceleration_m_s2: Option<f64>,
    gate_time_us: Option<f64>,
    measure_time_us: Option<f64>,
    decode_time_us: Option<f64>,
    reaction_time_ms: Option<f64>,
    coherence_time_s: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawErrorModel {
    c: Option<f64>,
    lambda: Option<f64>,
    p_phys: Option<f64>,
    p_thres: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    n_bits: Option<u64>,
    exponent_bits: Option<u64>,
    w_exp: Option<u32>,
    w_mul: Option<u32>,
    r_sep: Option<u64>,
    r_pad: Option<u64>,
    d: Option<u32>,
    max_factories: Option<u64>,
    ccz_budget_fraction: Option<f64>,
    total_error_budget: Option<f64>,
    uncompute: Option<UncomputeMode>,
    storage_density_factor: Option<f64>,
    storage_interval_ms: Option<AutoOr>,
    qubit_cap: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFactory {
    se_rounds_per_layer: Option<AutoOr>,
    cultivation_curve: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLookup {
    ghz_grid_spacing: Option<u64>,
    pipeline_copies: Option<u64>,
    unlookup_mode: Option<UnlookupMode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    objective: Option<Objective>,
    w_exp: Option<Vec<u32>>,
    w_mul: Option<Vec<u32>>,
    r_sep: Option<Vec<u64>>,
    max_factories: Option<Vec<u64>>,
    d: Option<Vec<u32>>,
    ghz_grid_spacing: Option<Vec<u64>>,
    pipeline_copies: Option<Vec<u64>>,
    max_passes: Option<usize>,
    qubit_cap: Option<u64>,
    error_budget: Option<f64>,
}

fn config_error(section: &str, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        section: section.to_string(),
        key: key.to_string(),
        message: message.into(),
    }
}

/// Locates the section and key of a deserialization error from its span.
fn locate(text: &str, err: &toml::de::Error) -> Error {
    let message = err.message().to_string();
    if let Some(field) = backticked(&message, "missing field `") {
        return config_error(&field, "", message);
    }
    let Some(span) = err.span() else {
        return Error::Parse(message);
    };
    let mut section = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if offset > span.start {
            break;
        }
        if trimmed.starts_with('[') {
            section = trimmed
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        offset += line.len();
    }
    if let Some(field) = backticked(&message, "unknown field `") {
        key = field;
    }
    if section.is_empty() && key.is_empty() {
        return Error::Parse(message);
    }
    config_error(&section, &key, message)
}

fn backticked(message: &str, prefix: &str) -> Option<String> {
    let rest = &message[message.find(prefix)? + prefix.len()..];
    Some(rest[..rest.find('`')?].to_string())
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| locate(text, &e))
}

fn set<T: Copy>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

fn physical(raw: RawPhysical) -> PhysicalParams {
    let mut p = PhysicalParams::default();
    set(&mut p.site_spacing_m, raw.site_spacing_um.map(|v| v * 1e-6));
    set(&mut p.acceleration_m_s2, raw.acceleration_m_s2);
    set(&mut p.gate_time_s, raw.gate_time_us.map(|v| v * 1e-6));
    set(&mut p.measure_time_s, raw.measure_time_us.map(|v| v * 1e-6));
    set(&mut p.decode_time_s, raw.decode_time_us.map(|v| v * 1e-6));
    set(
        &mut p.reaction_time_s,
        raw.reaction_time_ms.map(|v| v * 1e-3),
    );
    set(&mut p.coherence_time_s, raw.coherence_time_s);
    p
}

fn error_model(raw: RawErrorModel) -> ErrorModelParams {
    let mut e = ErrorModelParams::default();
    set(&mut e.c, raw.c);
    set(&mut e.lambda, raw.lambda);
    set(&mut e.p_phys, raw.p_phys);
    set(&mut e.p_thres, raw.p_thres);
    set(&mut e.alpha, raw.alpha);
    e
}

fn algorithm(raw: RawAlgorithm) -> Result<AlgorithmConfig> {
    let mut a = AlgorithmConfig::rsa2048();
    if let Some(n) = raw.n_bits {
        a.n_bits = n;
        a.exponent_bits = AlgorithmConfig::default_exponent_bits(n);
    }
    set(&mut a.exponent_bits, raw.exponent_bits);
    set(&mut a.w_exp, raw.w_exp);
    set(&mut a.w_mul, raw.w_mul);
    set(&mut a.r_sep, raw.r_sep);
    set(&mut a.r_pad, raw.r_pad);
    if let Some(d) = raw.d {
        a.d = CodeDistance::new(d).map_err(|e| config_error("algorithm", "d", e.to_string()))?;
    }
    set(&mut a.max_factories, raw.max_factories);
    set(&mut a.ccz_budget_fraction, raw.ccz_budget_fraction);
    set(&mut a.total_error_budget, raw.total_error_budget);
    set(&mut a.uncompute, raw.uncompute);
    set(&mut a.storage_density_factor, raw.storage_density_factor);
    if let Some(v) = raw.storage_interval_ms {
        a.storage_interval_s = v
            .resolve("algorithm", "storage_interval_ms")?
            .map(|ms| ms * 1e-3);
    }
    a.qubit_cap = raw.qubit_cap;
    Ok(a)
}

fn factory(raw: RawFactory, base_dir: &Path) -> Result<FactorySettings> {
    let se_rounds_per_layer = match raw.se_rounds_per_layer {
        Some(v) => v.resolve("factory", "se_rounds_per_layer")?,
        None => None,
    };
    let curve = match raw.cultivation_curve {
        Some(path) => {
            let path = base_dir.join(path);
            let file = std::fs::File::open(&path).map_err(|e| {
                config_error(
                    "factory",
                    "cultivation_curve",
                    format!("{}: {e}", path.display()),
                )
            })?;
            CultivationCurve::from_csv(file)
                .map_err(|e| config_error("factory", "cultivation_curve", e.to_string()))?
        }
        None => CultivationCurve::default(),
    };
    Ok(FactorySettings {
        se_rounds_per_layer,
        curve,
    })
}

fn lookup(raw: RawLookup) -> LookupSettings {
    let mut l = LookupSettings::default();
    set(&mut l.ghz_grid_spacing, raw.ghz_grid_spacing);
    set(&mut l.pipeline_copies, raw.pipeline_copies);
    set(&mut l.unlookup_mode, raw.unlookup_mode);
    l
}

fn sweep(raw: RawSweep) -> Result<SweepSpec> {
    let mut s = SweepSpec::default();
    set(&mut s.objective, raw.objective);
    macro_rules! grid {
        ($field:ident) => {
            if let Some(v) = raw.$field {
                s.$field = v;
            }
        };
    }
    grid!(w_exp);
    grid!(w_mul);
    grid!(r_sep);
    grid!(max_factories);
    grid!(d);
    grid!(ghz_grid_spacing);
    grid!(pipeline_copies);
    set(&mut s.max_passes, raw.max_passes);
    s.qubit_cap = raw.qubit_cap;
    s.error_budget = raw.error_budget;
    s.validate()
        .map_err(|e| config_error("sweep", "", e.to_string()))?;
    Ok(s)
}

/// Parses a scenario. Relative file references resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<Config> {
    let raw: RawFile = parse(text)?;
    let scenario = Scenario {
        physical: physical(raw.physical),
        error_model: error_model(raw.error_model),
        algorithm: algorithm(raw.algorithm)?,
        factory: factory(raw.factory, base_dir)?,
        lookup: lookup(raw.lookup),
    };
    scenario.validate()?;
    let sweep = raw.sweep.map(sweep).transpose()?;
    Ok(Config { scenario, sweep })
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses a file holding only a `[sweep]` section.
pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let raw: RawSweepFile = parse(text)?;
    sweep(raw.sweep)
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_sweep(&text)
}
