use coda_atlas::fixture::{synthetic_table, DEFAULT_SEED};
use coda_atlas::render::ViewportTransform;
use coda_atlas::{clr_matrix, default_ratio_catalog, fit_biplot, render_biplot, scale_to_viewport, RenderOptions};
use proptest::prelude::*;

fn render(seed: u64, links: &[&str], width: u32, height: u32) -> String {
    let table = synthetic_table(seed);
    let model = fit_biplot(&clr_matrix(&table), 1.0, 2).unwrap();
    let options = RenderOptions {
        width,
        height,
        show_links: links.iter().map(|s| s.to_string()).collect(),
        ..RenderOptions::for_table(&table)
    };
    render_biplot(&model, &table, &options, &default_ratio_catalog()).unwrap()
}

fn count(svg: &str, tag: &str, class: &str) -> usize {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants().filter(|n| n.has_tag_name(tag) && n.attribute("class") == Some(class)).count()
}

#[test]
fn element_counts_follow_the_model() {
    let all = ["solvency", "energy_intensity", "water_intensity", "waste_intensity", "gender_employment_gap"];
    for k in 0..=all.len() {
        let svg = render(DEFAULT_SEED, &all[..k], 800, 800);
        assert_eq!(count(&svg, "circle", "point"), 17);
        assert_eq!(count(&svg, "line", "ray"), 8);
        assert_eq!(count(&svg, "line", "link"), k);
        assert_eq!(count(&svg, "line", "tick"), 17 * k);
    }
}

#[test]
fn sectors_get_the_default_colours() {
    let svg = render(DEFAULT_SEED, &[], 800, 800);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let fills: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("point"))
        .filter_map(|n| n.attribute("fill"))
        .collect();
    assert_eq!(fills.iter().filter(|f| **f == "#d62728").count(), 11);
    assert_eq!(fills.iter().filter(|f| **f == "#1f77b4").count(), 6);
}

#[test]
fn rendering_is_pure() {
    assert_eq!(render(5, &["solvency"], 640, 480), render(5, &["solvency"], 640, 480));
}

fn within(svg: &str, width: f64, height: f64) -> bool {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants().filter(|n| n.attribute("class") == Some("point")).all(|n| {
        let x: f64 = n.attribute("cx").unwrap().parse().unwrap();
        let y: f64 = n.attribute("cy").unwrap().parse().unwrap();
        (0.0..=width).contains(&x) && (0.0..=height).contains(&y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_is_uniform(
        pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..30),
        width in 100u32..2000,
        height in 100u32..2000,
    ) {
        let options = RenderOptions { width, height, ..Default::default() };
        let t: ViewportTransform = scale_to_viewport(&pts, &[], &options).unwrap();
        prop_assert_eq!(t.scale_x(), t.scale_y());
        let o = t.apply((0.0, 0.0));
        let (ex, ey) = (t.apply((1.0, 0.0)), t.apply((0.0, 1.0)));
        let (u, v) = ((ex.0 - o.0, ex.1 - o.1), (ey.0 - o.0, ey.1 - o.1));
        prop_assert!((u.0 * v.0 + u.1 * v.1).abs() <= 1e-9 * t.scale_x() * t.scale_x());
        prop_assert!(((u.0.hypot(u.1)) - v.0.hypot(v.1)).abs() <= 1e-12 * t.scale_x());
        for p in &pts {
            let (x, y) = t.apply(*p);
            prop_assert!((-1e-9..=width as f64 + 1e-9).contains(&x));
            prop_assert!((-1e-9..=height as f64 + 1e-9).contains(&y));
        }
    }

    #[test]
    fn points_stay_on_canvas(seed in 0u64..500, width in 200u32..1200, height in 200u32..1200) {
        let svg = render(seed, &["solvency", "water_intensity"], width, height);
        prop_assert!(within(&svg, width as f64, height as f64));
    }
}
