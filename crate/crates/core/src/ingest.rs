//! CSV ingestion with locale-aware number parsing and unit harmonization.
//!
//! Input CSV layout: a header `id,label,sector_code,<part>...` followed by one
//! row per entity. Values are converted to the canonical unit of their
//! column before validation.

use std::collections::{BTreeMap, HashMap, HashSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{replace_zeros, validate_table, CompositionError, Entity, IndicatorTable, Part, RatioDefinition, Role, ZeroStrategy};
use crate::report::format_sig17;

pub const CANONICAL_UNITS: [&str; 5] = ["EUR_MM", "MWh", "m3", "t", "headcount"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("parse error at line {line}, column {column}: {message} ({token:?})")]
    Parse { line: u64, column: usize, token: String, message: String },
    #[error("unknown unit {unit:?} for column {column:?}")]
    UnknownUnit { column: String, unit: String },
    #[error("invalid unit definition {unit:?}: {reason}")]
    InvalidUnit { unit: String, reason: String },
    #[error("line {line}, column {column}: {source}")]
    Invalid { line: u64, column: usize, source: CompositionError },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

impl IngestError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parse { .. } => "ParseError",
            Self::UnknownUnit { .. } => "UnknownUnit",
            Self::InvalidUnit { .. } => "InvalidUnit",
            Self::Invalid { source, .. } => source.kind(),
            Self::Config(_) => "ConfigError",
            Self::Composition(e) => e.kind(),
        }
    }
}

/// Maps declared units to one of [`CANONICAL_UNITS`] with a positive factor.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRegistry {
    units: HashMap<String, (String, f64)>,
}

impl Default for UnitRegistry {
    fn default() -> Self {
        let mut units = HashMap::new();
        for c in CANONICAL_UNITS {
            units.insert(c.to_string(), (c.to_string(), 1.0));
        }
        for (unit, canonical, factor) in [
            ("EUR", "EUR_MM", 1e-6),
            ("GWh", "MWh", 1e3),
            ("kWh", "MWh", 1e-3),
            ("L", "m3", 1e-3),
            ("kg", "t", 1e-3),
            ("kt", "t", 1e3),
        ] {
            units.insert(unit.to_string(), (canonical.to_string(), factor));
        }
        Self { units }
    }
}

impl UnitRegistry {
    /// Canonical unit and multiplicative factor for `unit`.
    pub fn resolve(&self, unit: &str) -> Option<(&str, f64)> {
        self.units.get(unit).map(|(c, f)| (c.as_str(), *f))
    }

    /// Registers `unit` as `factor` times `target`, which may itself be any
    /// known unit; factors compose by multiplication.
    pub fn register(&mut self, unit: &str, target: &str, factor: f64) -> Result<(), IngestError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(IngestError::InvalidUnit { unit: unit.into(), reason: format!("factor {factor}") });
        }
        if CANONICAL_UNITS.contains(&unit) {
            return Err(IngestError::InvalidUnit { unit: unit.into(), reason: "canonical units are fixed".into() });
        }
        let (canonical, base) = self
            .resolve(target)
            .map(|(c, f)| (c.to_string(), f))
            .ok_or_else(|| IngestError::InvalidUnit { unit: unit.into(), reason: format!("unknown target {target:?}") })?;
        self.units.insert(unit.to_string(), (canonical, factor * base));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locale {
    /// `1234.5`
    #[default]
    PointDecimal,
    /// `1.234,5`: dot groups thousands, comma is the decimal mark.
    Eu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitDefinition {
    /// Known unit this one is expressed in.
    pub target: String,
    pub factor: f64,
}

/// Ingestion settings, read from a JSON document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub locale: Locale,
    /// Column name to declared unit; columns of the default schema fall back
    /// to their canonical unit.
    pub unit_map: BTreeMap<String, String>,
    pub zero_strategy: ZeroStrategy,
    /// Ratios to analyse; the default catalog when absent.
    pub ratio_catalog: Option<Vec<RatioDefinition>>,
    pub extra_units: BTreeMap<String, UnitDefinition>,
    /// Role overrides; otherwise the default schema, else inferred from the unit.
    pub roles: BTreeMap<String, Role>,
}

impl IngestConfig {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let config: Self = serde_json::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), IngestError> {
        if let ZeroStrategy::Multiplicative(delta) = self.zero_strategy {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(IngestError::Config(format!("zero replacement fraction {delta} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn registry(&self) -> Result<UnitRegistry, IngestError> {
        let mut registry = UnitRegistry::default();
        // definitions may refer to each other; resolve until no progress
        let mut pending: Vec<(&String, &UnitDefinition)> = self.extra_units.iter().collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for (unit, def) in pending {
                if registry.resolve(&def.target).is_some() {
                    registry.register(unit, &def.target, def.factor)?;
                } else {
                    rest.push((unit, def));
                }
            }
            if rest.len() == before {
                let (unit, def) = rest[0];
                return Err(IngestError::InvalidUnit { unit: unit.clone(), reason: format!("unknown target {:?}", def.target) });
            }
            pending = rest;
        }
        Ok(registry)
    }

    pub fn ratios(&self) -> Vec<RatioDefinition> {
        self.ratio_catalog.clone().unwrap_or_else(default_ratio_catalog)
    }

    /// Config that re-reads a table written by [`write_table`].
    pub fn canonical_for(table: &IndicatorTable<f64>) -> Self {
        Self {
            unit_map: table.parts().iter().map(|p| (p.name.clone(), p.unit.clone())).collect(),
            roles: table.parts().iter().map(|p| (p.name.clone(), p.role)).collect(),
            ..Self::default()
        }
    }
}

/// The eight indicators of the reference workflow: name, canonical unit, role.
pub const DEFAULT_SCHEMA: [(&str, &str, Role); 8] = [
    ("net_revenue", "EUR_MM", Role::Financial),
    ("total_assets", "EUR_MM", Role::Financial),
    ("total_liabilities", "EUR_MM", Role::Financial),
    ("energy_consumption", "MWh", Role::Environmental),
    ("water_consumption", "m3", Role::Environmental),
    ("waste_generation", "t", Role::Environmental),
    ("male_employees", "headcount", Role::Social),
    ("female_employees", "headcount", Role::Social),
];

pub fn default_ratio_catalog() -> Vec<RatioDefinition> {
    vec![
        RatioDefinition::new("solvency", "total_assets", "total_liabilities", "total assets / total liabilities"),
        RatioDefinition::new("energy_intensity", "energy_consumption", "net_revenue", "MWh per million EUR of net revenue"),
        RatioDefinition::new("water_intensity", "water_consumption", "net_revenue", "m3 per million EUR of net revenue"),
        RatioDefinition::new("waste_intensity", "waste_generation", "net_revenue", "tons per million EUR of net revenue"),
        RatioDefinition::new("gender_employment_gap", "male_employees", "female_employees", "male / female employees"),
    ]
}

fn role_for_unit(canonical: &str) -> Role {
    match canonical {
        "EUR_MM" => Role::Financial,
        "headcount" => Role::Social,
        _ => Role::Environmental,
    }
}

/// Parses one numeric token according to `locale`.
pub fn parse_number(token: &str, locale: Locale) -> Result<f64, String> {
    let token = token.trim();
    if token.is_empty() {
        return Err("empty cell".into());
    }
    match locale {
        Locale::PointDecimal => {
            if token.contains(',') {
                return Err("comma in point-decimal number".into());
            }
            token.parse::<f64>().map_err(|e| e.to_string())
        }
        Locale::Eu => {
            let (sign, body) = match token.strip_prefix('-') {
                Some(rest) => ("-", rest),
                None => ("", token.strip_prefix('+').unwrap_or(token)),
            };
            let mut halves = body.split(',');
            let int = halves.next().unwrap_or("");
            let frac = halves.next();
            if halves.next().is_some() {
                return Err("more than one decimal comma".into());
            }
            let groups: Vec<&str> = int.split('.').collect();
            let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
            if !groups.iter().all(|g| digits(g)) {
                return Err("malformed integer part".into());
            }
            if groups.len() > 1 && (groups[0].len() > 3 || groups[1..].iter().any(|g| g.len() != 3)) {
                return Err("thousands groups must have three digits".into());
            }
            let mut text = format!("{sign}{}", groups.concat());
            if let Some(frac) = frac {
                if !digits(frac) {
                    return Err("malformed decimal part".into());
                }
                text.push('.');
                text.push_str(frac);
            }
            text.parse::<f64>().map_err(|e| e.to_string())
        }
    }
}

const HEADER: [&str; 3] = ["id", "label", "sector_code"];

pub fn parse_table(csv_bytes: &[u8], config: &IngestConfig) -> Result<IndicatorTable<f64>, IngestError> {
    config.check()?;
    let registry = config.registry()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_bytes);
    let parse_err = |line: u64, column: usize, token: &str, message: String| IngestError::Parse {
        line,
        column,
        token: token.to_string(),
        message,
    };

    let header = reader
        .headers()
        .map_err(|e| parse_err(1, 0, "", e.to_string()))?
        .clone();
    for (i, expected) in HEADER.iter().enumerate() {
        let found = header.get(i).unwrap_or("");
        if found != *expected {
            return Err(parse_err(1, i + 1, found, format!("expected header {expected:?}")));
        }
    }

    let schema: HashMap<&str, (&str, Role)> = DEFAULT_SCHEMA.iter().map(|(n, u, r)| (*n, (*u, *r))).collect();
    let mut parts = Vec::new();
    let mut factors = Vec::new();
    for (c, name) in header.iter().enumerate().skip(HEADER.len()) {
        let declared = config
            .unit_map
            .get(name)
            .map(String::as_str)
            .or_else(|| schema.get(name).map(|(u, _)| *u))
            .ok_or_else(|| IngestError::UnknownUnit { column: name.to_string(), unit: String::new() })?;
        let (canonical, factor) = registry
            .resolve(declared)
            .ok_or_else(|| IngestError::UnknownUnit { column: name.to_string(), unit: declared.to_string() })?;
        let role = config
            .roles
            .get(name)
            .copied()
            .or_else(|| schema.get(name).map(|(_, r)| *r))
            .unwrap_or_else(|| role_for_unit(canonical));
        parts.push(Part::new(c - HEADER.len(), name, canonical, role));
        factors.push(factor);
    }

    let width = header.len();
    let mut entities = Vec::new();
    let mut lines = Vec::new();
    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, 0, "", e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse_err(line, record.len().min(width) + 1, "", format!("expected {width} fields, found {}", record.len())));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(parse_err(line, 1, id, "empty entity id".into()));
        }
        if !seen.insert(id.to_string()) {
            return Err(IngestError::Invalid { line, column: 1, source: CompositionError::DuplicateEntityId(id.to_string()) });
        }
        entities.push(Entity::new(id, &record[1], &record[2]));
        for (c, factor) in factors.iter().enumerate() {
            let token = &record[c + HEADER.len()];
            let value = parse_number(token, config.locale).map_err(|m| parse_err(line, c + HEADER.len() + 1, token, m))?;
            cells.push(value * factor);
        }
        lines.push(line);
    }

    let values = Array2::from_shape_vec((entities.len(), parts.len()), cells)
        .map_err(|e| IngestError::Config(e.to_string()))?;
    let locate = |e: CompositionError| match e {
        CompositionError::NonPositiveValue { row, col, .. }
        | CompositionError::NonFiniteValue { row, col }
        | CompositionError::NegativeValue { row, col, .. } => {
            IngestError::Invalid { line: lines[row], column: col + HEADER.len() + 1, source: e }
        }
        CompositionError::DegenerateRow { row } | CompositionError::ReplacementExceedsRow { row } => IngestError::Invalid { line: lines[row], column: 0, source: e },
        other => IngestError::Composition(other),
    };
    let values = replace_zeros(&values, config.zero_strategy).map_err(locate)?;
    validate_table(values, parts, entities).map_err(locate)
}

/// Writes a table as CSV in canonical units with point decimals.
pub fn write_table(table: &IndicatorTable<f64>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header: Vec<&str> = HEADER.to_vec();
    header.extend(table.parts().iter().map(|p| p.name.as_str()));
    w.write_record(&header).expect("write to memory");
    for (e, row) in table.entities().iter().zip(table.values().rows()) {
        let mut rec = vec![e.id.clone(), e.label.clone(), e.sector_code.clone()];
        rec.extend(row.iter().map(|v| format_sig17(*v)));
        w.write_record(&rec).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}
