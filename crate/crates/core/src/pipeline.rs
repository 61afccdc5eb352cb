//! End-to-end analysis stages producing named artifacts.
//!
//! Every stage is a pure function of the table, the ratio catalog and its
//! own options; `run_pipeline` is the union of the individual stages.

use std::fmt::Write as _;

use crate::biplot::{fit_biplot, link_for_ratio, rank_along_link, BiplotModel, DEFAULT_ALPHA, DEFAULT_RANK};
use crate::cluster::{cluster_profile, distance_matrix, hierarchical_cluster, Cut, Linkage};
use crate::composition::{clr_matrix, IndicatorTable, RatioDefinition};
use crate::error::Error;
use crate::render::{render_biplot, RenderOptions};
use crate::report::{
    clr_csv, clusters_csv, clusters_json, describe_csv, model_json, ranking_csv, to_json, RankingSummary, ReportSet,
};
use crate::stats::pathology_report;

pub const DESCRIBE_FILE: &str = "describe.csv";
pub const PATHOLOGY_FILE: &str = "pathology.json";
pub const CLR_FILE: &str = "clr.csv";
pub const MODEL_FILE: &str = "model.json";
pub const CLUSTERS_CSV_FILE: &str = "clusters.csv";
pub const CLUSTERS_JSON_FILE: &str = "clusters.json";
pub const SVG_FILE: &str = "biplot.svg";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn ranking_csv_file(ratio: &str) -> String {
    format!("ranking_{ratio}.csv")
}

pub fn ranking_json_file(ratio: &str) -> String {
    format!("ranking_{ratio}.json")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiplotSettings {
    pub alpha: f64,
    pub rank: usize,
}

impl Default for BiplotSettings {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, rank: DEFAULT_RANK }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSettings {
    pub linkage: Linkage,
    pub cut: Cut,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self { linkage: Linkage::Complete, cut: Cut::LargestGap }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSettings {
    pub alpha: f64,
    /// Ratio names to draw; every usable ratio when `None`.
    pub links: Option<Vec<String>>,
    pub width: u32,
    pub height: u32,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, links: None, width: 800, height: 800 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineSettings {
    pub biplot: BiplotSettings,
    pub cluster: ClusterSettings,
    pub render: RenderSettings,
}

/// A validated table together with the ratios to analyse.
#[derive(Debug, Clone)]
pub struct Analysis {
    table: IndicatorTable<f64>,
    ratios: Vec<RatioDefinition>,
    skipped: Vec<(String, String)>,
}

impl Analysis {
    /// Ratios whose parts are missing from the table are set aside and
    /// reported by [`Analysis::skipped`].
    pub fn new(table: IndicatorTable<f64>, catalog: Vec<RatioDefinition>) -> Self {
        let mut ratios = Vec::new();
        let mut skipped = Vec::new();
        for def in catalog {
            match def.resolve(&table) {
                Ok(_) => ratios.push(def),
                Err(e) => skipped.push((def.name.clone(), e.to_string())),
            }
        }
        Self { table, ratios, skipped }
    }

    pub fn table(&self) -> &IndicatorTable<f64> {
        &self.table
    }

    pub fn ratios(&self) -> &[RatioDefinition] {
        &self.ratios
    }

    /// `(ratio name, reason)` for catalog entries that do not resolve.
    pub fn skipped(&self) -> &[(String, String)] {
        &self.skipped
    }

    fn ratio(&self, name: &str) -> Result<&RatioDefinition, Error> {
        self.ratios.iter().find(|r| r.name == name).ok_or_else(|| Error::UnknownRatio(name.to_string()))
    }

    pub fn validation_report(&self) -> String {
        let t = &self.table;
        let mut out = String::new();
        let _ = writeln!(out, "status: valid");
        let _ = writeln!(out, "entities: {}", t.n());
        let _ = writeln!(out, "parts: {}", t.d());
        for p in t.parts() {
            let _ = writeln!(out, "part {}: {} [{}] {}", p.index, p.name, p.unit, p.role);
        }
        for r in &self.ratios {
            let unit = r.unit(t.parts()).unwrap_or_default();
            let _ = writeln!(out, "ratio {}: {}/{} [{}]", r.name, r.numerator, r.denominator, unit);
        }
        for (name, reason) in &self.skipped {
            let _ = writeln!(out, "ratio {name}: skipped ({reason})");
        }
        out
    }

    pub fn describe(&self, out: &mut ReportSet) -> Result<(), Error> {
        out.insert(DESCRIBE_FILE, describe_csv(&self.table, &self.ratios)?);
        Ok(())
    }

    pub fn diagnose(&self, out: &mut ReportSet) -> Result<(), Error> {
        let report = pathology_report(&self.table, &self.ratios)?;
        out.insert(PATHOLOGY_FILE, to_json(&report));
        Ok(())
    }

    pub fn clr(&self, out: &mut ReportSet) {
        out.insert(CLR_FILE, clr_csv(&clr_matrix(&self.table)));
    }

    pub fn fit(&self, settings: &BiplotSettings) -> Result<BiplotModel<f64>, Error> {
        Ok(fit_biplot(&clr_matrix(&self.table), settings.alpha, settings.rank)?)
    }

    pub fn biplot(&self, settings: &BiplotSettings, out: &mut ReportSet) -> Result<(), Error> {
        out.insert(MODEL_FILE, model_json(&self.fit(settings)?));
        Ok(())
    }

    pub fn rank(&self, ratio: &str, settings: &BiplotSettings, out: &mut ReportSet) -> Result<(), Error> {
        let def = self.ratio(ratio)?;
        let model = self.fit(settings)?;
        self.rank_with(&model, def, out)
    }

    fn rank_with(&self, model: &BiplotModel<f64>, def: &RatioDefinition, out: &mut ReportSet) -> Result<(), Error> {
        let ranking = rank_along_link(model, &link_for_ratio(model, def)?)?;
        out.insert(ranking_csv_file(&def.name), ranking_csv(&ranking));
        out.insert(ranking_json_file(&def.name), to_json(&RankingSummary::new(def, model, &ranking)));
        Ok(())
    }

    pub fn cluster(&self, settings: &ClusterSettings, out: &mut ReportSet) -> Result<(), Error> {
        let clr = clr_matrix(&self.table);
        let dist = distance_matrix(&clr)?;
        let assignment = hierarchical_cluster(&dist, settings.linkage, settings.cut)?;
        let profiles = cluster_profile(&self.table, &assignment, &self.ratios)?;
        out.insert(CLUSTERS_CSV_FILE, clusters_csv(&assignment));
        out.insert(CLUSTERS_JSON_FILE, clusters_json(&assignment, &profiles));
        Ok(())
    }

    pub fn render(&self, settings: &RenderSettings, out: &mut ReportSet) -> Result<(), Error> {
        let links = match &settings.links {
            Some(names) => {
                for name in names {
                    self.ratio(name)?;
                }
                names.clone()
            }
            None => self.ratios.iter().map(|r| r.name.clone()).collect(),
        };
        let model = self.fit(&BiplotSettings { alpha: settings.alpha, rank: 2 })?;
        let options = RenderOptions {
            width: settings.width,
            height: settings.height,
            show_links: links,
            ..RenderOptions::for_table(&self.table)
        };
        out.insert(SVG_FILE, render_biplot(&model, &self.table, &options, &self.ratios)?);
        Ok(())
    }

    /// All stages in order: describe, diagnose, clr, biplot, rank (every
    /// usable ratio), cluster, render.
    pub fn run_pipeline(&self, settings: &PipelineSettings) -> Result<ReportSet, Error> {
        let mut out = ReportSet::new();
        self.describe(&mut out)?;
        self.diagnose(&mut out)?;
        self.clr(&mut out);
        self.biplot(&settings.biplot, &mut out)?;
        let model = self.fit(&settings.biplot)?;
        for def in &self.ratios {
            self.rank_with(&model, def, &mut out)?;
        }
        self.cluster(&settings.cluster, &mut out)?;
        self.render(&settings.render, &mut out)?;
        Ok(out)
    }
}
