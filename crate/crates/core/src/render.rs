//! Deterministic SVG rendering of a rank-2 biplot.
//!
//! Data coordinates are mapped to the canvas with a single scale factor for
//! both axes, so perpendicular projections onto links stay perpendicular on
//! screen.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::biplot::{link_for_ratio, BiplotError, BiplotModel};
use crate::composition::{IndicatorTable, RatioDefinition};
use crate::scalar::Scalar;

/// Colours for sectors other than 101X/102X, assigned in sorted sector order.
pub const PALETTE_CYCLE: [&str; 10] = [
    "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

const TICK_HALF_LENGTH: f64 = 5.0;
const POINT_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("biplot rendering needs k = 2, model has k = {0}")]
    UnsupportedRank(usize),
    #[error("no palette colour for sector {0:?}")]
    UnknownSector(String),
    #[error("unknown ratio {0:?}")]
    UnknownRatio(String),
    #[error("invalid render options: {0}")]
    InvalidOptions(String),
    #[error("all coordinates coincide")]
    DegenerateBox,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error(transparent)]
    Biplot(#[from] BiplotError),
}

impl RenderError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::UnsupportedRank(_) => "UnsupportedRank",
            Self::UnknownSector(_) => "UnknownSector",
            Self::UnknownRatio(_) => "UnknownRatio",
            Self::InvalidOptions(_) => "InvalidOptions",
            Self::DegenerateBox => "DegenerateBox",
            Self::NonFinite => "NonFinite",
            Self::Biplot(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    /// Sector code (or pattern with trailing `X` wildcards) to `#rrggbb`.
    pub sector_palette: BTreeMap<String, String>,
    /// Ratio names whose links are drawn.
    pub show_links: Vec<String>,
    pub label_points: bool,
    pub margin_fraction: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 800,
            height: 800,
            sector_palette: default_palette(std::iter::empty::<&str>()),
            show_links: Vec::new(),
            label_points: true,
            margin_fraction: 0.08,
        }
    }
}

impl RenderOptions {
    /// Defaults with a palette covering every sector of `table`.
    pub fn for_table<T: Scalar>(table: &IndicatorTable<T>) -> Self {
        Self {
            sector_palette: default_palette(table.entities().iter().map(|e| e.sector_code.as_str())),
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), RenderError> {
        if self.width < 100 || self.height < 100 {
            return Err(RenderError::InvalidOptions(format!("canvas {}x{} smaller than 100x100", self.width, self.height)));
        }
        if !(self.margin_fraction >= 0.0 && self.margin_fraction < 0.5) {
            return Err(RenderError::InvalidOptions(format!("margin fraction {}", self.margin_fraction)));
        }
        for (sector, colour) in &self.sector_palette {
            if !is_hex_colour(colour) {
                return Err(RenderError::InvalidOptions(format!("colour {colour:?} for sector {sector:?}")));
            }
        }
        Ok(())
    }
}

fn is_hex_colour(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].bytes().all(|b| b.is_ascii_hexdigit())
}

/// 101X red, 102X blue, remaining sectors from [`PALETTE_CYCLE`].
pub fn default_palette<'a>(sectors: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, String> {
    let mut palette = BTreeMap::new();
    palette.insert("101X".to_string(), "#d62728".to_string());
    palette.insert("102X".to_string(), "#1f77b4".to_string());
    let others: BTreeSet<&str> = sectors.into_iter().collect();
    let mut cycle = PALETTE_CYCLE.iter().cycle();
    for s in others {
        if palette_lookup(&palette, s).is_none() {
            palette.insert(s.to_string(), cycle.next().expect("cycle").to_string());
        }
    }
    palette
}

/// Exact match first, then patterns where trailing `X`s match any character.
pub fn palette_lookup<'a>(palette: &'a BTreeMap<String, String>, sector: &str) -> Option<&'a str> {
    if let Some(c) = palette.get(sector) {
        return Some(c);
    }
    palette.iter().find_map(|(pattern, colour)| {
        let stem = pattern.trim_end_matches('X');
        let wild = pattern.len() - stem.len();
        (wild > 0 && pattern.len() == sector.len() && sector.starts_with(stem)).then_some(colour.as_str())
    })
}

/// Uniform scale plus translation, with the y axis pointing up in data space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewportTransform {
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

impl ViewportTransform {
    pub fn apply(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (self.tx + self.scale * x, self.ty - self.scale * y)
    }

    pub fn scale_x(&self) -> f64 {
        self.scale
    }

    pub fn scale_y(&self) -> f64 {
        self.scale
    }
}

/// Fits the joint bounding box of `points` and the ray segments (origin to
/// tip) into the margined canvas, centred.
pub fn scale_to_viewport(
    points: &[(f64, f64)],
    rays: &[(f64, f64)],
    options: &RenderOptions,
) -> Result<ViewportTransform, RenderError> {
    let mut all: Vec<(f64, f64)> = points.iter().chain(rays).copied().collect();
    if !rays.is_empty() {
        all.push((0.0, 0.0));
    }
    if all.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(RenderError::NonFinite);
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        xmin = xmin.min(*x);
        xmax = xmax.max(*x);
        ymin = ymin.min(*y);
        ymax = ymax.max(*y);
    }
    let (bw, bh) = (xmax - xmin, ymax - ymin);
    if !(bw > 0.0 || bh > 0.0) {
        return Err(RenderError::DegenerateBox);
    }
    let (w, h) = (options.width as f64, options.height as f64);
    let avail_w = w * (1.0 - 2.0 * options.margin_fraction);
    let avail_h = h * (1.0 - 2.0 * options.margin_fraction);
    let scale = match (bw > 0.0, bh > 0.0) {
        (true, true) => (avail_w / bw).min(avail_h / bh),
        (true, false) => avail_w / bw,
        _ => avail_h / bh,
    };
    Ok(ViewportTransform {
        scale,
        tx: w / 2.0 - scale * (xmin + xmax) / 2.0,
        ty: h / 2.0 + scale * (ymin + ymax) / 2.0,
    })
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct LinkGeometry {
    name: String,
    start: (f64, f64),
    end: (f64, f64),
    feet: Vec<(f64, f64)>,
}

/// Foot of the perpendicular from `p` onto the line through `a` and `b`,
/// as the parameter `t` with `foot = b + t (a - b)`.
pub fn projection_parameter(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    ((p.0 - b.0) * dx + (p.1 - b.1) * dy) / (dx * dx + dy * dy)
}

pub fn render_biplot<T: Scalar>(
    model: &BiplotModel<T>,
    table: &IndicatorTable<T>,
    options: &RenderOptions,
    ratios: &[RatioDefinition],
) -> Result<String, RenderError> {
    if model.k() != 2 {
        return Err(RenderError::UnsupportedRank(model.k()));
    }
    options.check()?;
    let xy = |row: ndarray::ArrayView1<'_, T>| (row[0].to_f64_lossy(), row[1].to_f64_lossy());
    let points: Vec<(f64, f64)> = model.points().rows().into_iter().map(xy).collect();
    let rays: Vec<(f64, f64)> = model.rays().rows().into_iter().map(xy).collect();

    let colours = table
        .entities()
        .iter()
        .map(|e| palette_lookup(&options.sector_palette, &e.sector_code).ok_or_else(|| RenderError::UnknownSector(e.sector_code.clone())))
        .collect::<Result<Vec<_>, _>>()?;

    let mut links = Vec::new();
    for name in &options.show_links {
        let def = ratios.iter().find(|r| &r.name == name).ok_or_else(|| RenderError::UnknownRatio(name.clone()))?;
        let link = link_for_ratio(model, def)?;
        if link.degenerate {
            return Err(BiplotError::DegenerateLink(link.part_i, link.part_j).into());
        }
        let (a, b) = (rays[link.part_i], rays[link.part_j]);
        let at = |t: f64| (b.0 + t * (a.0 - b.0), b.1 + t * (a.1 - b.1));
        let ts: Vec<f64> = points.iter().map(|p| projection_parameter(*p, a, b)).collect();
        let lo = ts.iter().copied().fold(0.0f64, f64::min);
        let hi = ts.iter().copied().fold(1.0f64, f64::max);
        links.push(LinkGeometry { name: name.clone(), start: at(lo), end: at(hi), feet: ts.iter().map(|t| at(*t)).collect() });
    }

    let mut extent = points.clone();
    for l in &links {
        extent.push(l.start);
        extent.push(l.end);
    }
    let view = scale_to_viewport(&extent, &rays, options)?;
    let (w, h) = (options.width, options.height);
    let c = |v: f64| format!("{v:.6}");

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, "<title>Compositional biplot</title>");
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##);

    let origin = view.apply((0.0, 0.0));
    let explained = model.explained();
    let pct = |m: usize| explained.get(m).map_or(0.0, |e| e.to_f64_lossy() * 100.0);
    let _ = writeln!(svg, r##"<g class="axes" stroke="#bbbbbb" stroke-dasharray="4 3">"##);
    let _ = writeln!(svg, r#"<line class="axis" x1="0" y1="{}" x2="{w}" y2="{}"/>"#, c(origin.1), c(origin.1));
    let _ = writeln!(svg, r#"<line class="axis" x1="{}" y1="0" x2="{}" y2="{h}"/>"#, c(origin.0), c(origin.0));
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{}" y="{}" text-anchor="end">PC1 ({:.1}%)</text>"#,
        c(w as f64 - 6.0),
        c(origin.1 - 6.0),
        pct(0)
    );
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{}" y="14" text-anchor="start">PC2 ({:.1}%)</text>"#,
        c(origin.0 + 6.0),
        pct(1)
    );

    let _ = writeln!(svg, r##"<g class="rays" stroke="#333333" stroke-width="1.2">"##);
    for (part, tip) in model.parts().iter().zip(&rays) {
        let t = view.apply(*tip);
        let _ = writeln!(
            svg,
            r#"<line class="ray" data-part="{}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            escape(&part.name),
            c(origin.0),
            c(origin.1),
            c(t.0),
            c(t.1)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r##"<g class="ray-labels" fill="#333333">"##);
    for (part, tip) in model.parts().iter().zip(&rays) {
        let t = view.apply(*tip);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, c(t.0 + 3.0), c(t.1 - 3.0), escape(&part.name));
    }
    let _ = writeln!(svg, "</g>");

    for l in &links {
        let (s, e) = (view.apply(l.start), view.apply(l.end));
        let (dx, dy) = (e.0 - s.0, e.1 - s.1);
        let len = (dx * dx + dy * dy).sqrt();
        let (nx, ny) = if len > 0.0 { (-dy / len, dx / len) } else { (0.0, 0.0) };
        let _ = writeln!(svg, r##"<g class="link-group" data-ratio="{}" stroke="#2ca02c">"##, escape(&l.name));
        let _ = writeln!(
            svg,
            r#"<line class="link" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="1.5"/>"#,
            c(s.0),
            c(s.1),
            c(e.0),
            c(e.1)
        );
        for foot in &l.feet {
            let f = view.apply(*foot);
            let _ = writeln!(
                svg,
                r#"<line class="tick" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                c(f.0 - nx * TICK_HALF_LENGTH),
                c(f.1 - ny * TICK_HALF_LENGTH),
                c(f.0 + nx * TICK_HALF_LENGTH),
                c(f.1 + ny * TICK_HALF_LENGTH)
            );
        }
        let _ = writeln!(svg, r##"<text class="link-label" x="{}" y="{}" fill="#2ca02c" stroke="none">{}</text>"##, c(e.0 + 3.0), c(e.1 + 12.0), escape(&l.name));
        let _ = writeln!(svg, "</g>");
    }

    let _ = writeln!(svg, r#"<g class="points">"#);
    for ((entity, p), colour) in table.entities().iter().zip(&points).zip(&colours) {
        let q = view.apply(*p);
        let _ = writeln!(
            svg,
            r#"<circle class="point" data-id="{}" cx="{}" cy="{}" r="{POINT_RADIUS}" fill="{colour}"/>"#,
            escape(&entity.id),
            c(q.0),
            c(q.1)
        );
        if options.label_points {
            let text = if entity.label.is_empty() { &entity.id } else { &entity.label };
            let _ = writeln!(svg, r#"<text class="point-label" x="{}" y="{}">{}</text>"#, c(q.0 + 5.0), c(q.1 - 5.0), escape(text));
        }
    }
    let _ = writeln!(svg, "</g>");

    let sectors: BTreeSet<&str> = table.entities().iter().map(|e| e.sector_code.as_str()).collect();
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, sector) in sectors.iter().enumerate() {
        let y = 12.0 + 16.0 * i as f64;
        let colour = palette_lookup(&options.sector_palette, sector).unwrap_or("#000000");
        let _ = writeln!(svg, r#"<rect x="{}" y="{}" width="10" height="10" fill="{colour}"/>"#, c(w as f64 - 90.0), c(y));
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, c(w as f64 - 75.0), c(y + 9.0), escape(sector));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
