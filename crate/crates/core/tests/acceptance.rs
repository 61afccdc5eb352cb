//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any does.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use coda_atlas::biplot::max_rank;
use coda_atlas::cluster::DistanceMatrix;
use coda_atlas::fixture::{synthetic_table, DEFAULT_SEED};
use coda_atlas::report::format_sig17;
use coda_atlas::svd::thin_svd;
use coda_atlas::{
    center_columns, clr, clr_matrix, default_ratio_catalog, distance_matrix, fit_biplot, hierarchical_cluster,
    link_for_ratio, make_link, named_ratio, pairwise_log_ratio, parse_table, rank_along_link, reconstruct, skewness,
    write_table, Cut, IngestConfig, Linkage, Locale,
};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn clr_structure() -> Outcome {
    let mut rng = rng(1);
    let mut worst_sum = 0.0f64;
    let mut worst_scale = 0.0f64;
    for t in 0..1000 {
        let n = rng.random_range(3..=50);
        let d = rng.random_range(2..=12);
        let values = log_uniform(&mut rng, n, d, 1e-3, 1e6);
        let z = clr_matrix(&table(values.clone()));
        for row in z.values().rows() {
            worst_sum = worst_sum.max(row.sum().abs());
        }
        for lambda in [1e-6, 1.0, 1e6] {
            let scaled = clr_matrix(&table(values.mapv(|v| v * lambda)));
            let diff = (scaled.values() - z.values()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            worst_scale = worst_scale.max(diff);
        }
        for r in 0..n {
            let row = values.row(r).to_vec();
            let by_row = clr(&row);
            let diff = (&by_row.0 - &z.values().row(r)).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            ensure(diff <= 1e-12, || format!("table {t} row {r}: clr and clr_matrix differ by {diff:e}"))?;
            for i in 0..d {
                for j in 0..d {
                    let a = pairwise_log_ratio(&row, i, j).unwrap_or(0.0);
                    let b = pairwise_log_ratio(&row, j, i).unwrap_or(0.0);
                    ensure(a == -b, || format!("table {t} row {r}: ln ratio ({i},{j}) not antisymmetric"))?;
                }
            }
        }
    }
    ensure(worst_sum <= 1e-10, || format!("row sum {worst_sum:e}"))?;
    ensure(worst_scale <= 1e-10, || format!("scale change {worst_scale:e}"))?;
    Ok(format!("max |row sum| {worst_sum:.1e}, max scale drift {worst_scale:.1e}"))
}

fn named_ratios() -> Outcome {
    // Sample means as printed, in the EU number format.
    let csv = "id,label,sector_code,net_revenue,total_assets,total_liabilities,energy_consumption,\
               water_consumption,waste_generation,male_employees,female_employees\n\
               MEAN,sample mean,101X,974,635,378,195.489,1.421.715,45.369,1.371,830\n";
    let config = IngestConfig { locale: Locale::Eu, ..Default::default() };
    let table = parse_table(csv.as_bytes(), &config).map_err(|e| e.to_string())?;
    let catalog = default_ratio_catalog();
    let mut notes = Vec::new();
    for (name, expected) in [("solvency", 1.680), ("energy_intensity", 200.71), ("gender_employment_gap", 1.652)] {
        let def = catalog.iter().find(|r| r.name == name).ok_or(format!("{name} missing from catalog"))?;
        let got = named_ratio(&table, def).map_err(|e| e.to_string())?[0];
        let rel = (got - expected).abs() / expected;
        ensure(rel <= 1e-3, || format!("{name}: {got} vs {expected} (rel {rel:.1e})"))?;
        notes.push(format!("{name} {got:.4}"));
    }
    Ok(notes.join(", "))
}

/// Compares production singular values of `z` with the oracle.
fn svd_matches_oracle(z: &Array2<f64>) -> Result<f64, String> {
    let svd = thin_svd(z).map_err(|e| e.to_string())?;
    let count = svd.s.len();
    let (oracle, lambda) = oracle_singular_values(z, count);
    let s1 = svd.s[0];
    let mut worst = 0.0f64;
    for m in 0..count {
        let s = svd.s[m];
        let sq = (s * s - lambda[m]).abs() / (s1 * s1);
        ensure(sq <= 1e-8, || format!("s[{m}]^2 = {:e} vs eigenvalue {:e}", s * s, lambda[m]))?;
        if s >= 1e-3 * s1 {
            let rel = (s - oracle[m]).abs() / s;
            ensure(rel <= 1e-8, || format!("s[{m}] = {s:e} vs oracle {:e}", oracle[m]))?;
            worst = worst.max(rel);
        }
    }
    let last = svd.s[count - 1];
    ensure(last <= 1e-9 * s1, || format!("smallest singular value {last:e} exceeds 1e-9 * {s1:e}"))?;
    Ok(worst)
}

fn svd_oracle() -> Outcome {
    let (z, _) = center_columns(&clr_matrix(&svd_fixture())).map_err(|e| e.to_string())?;
    let mut worst = svd_matches_oracle(&z)?;
    let model = fit_biplot(&clr_matrix(&svd_fixture()), 1.0, 3).map_err(|e| e.to_string())?;
    let (oracle, lambda) = oracle_singular_values(&z, 3);
    let s1 = model.singular_values()[0];
    for (m, s) in model.singular_values().iter().enumerate() {
        let ok = if *s >= 1e-3 * s1 {
            (s - oracle[m]).abs() <= 1e-8 * s
        } else {
            (s * s - lambda[m]).abs() <= 1e-8 * s1 * s1
        };
        ensure(ok, || format!("fixture model s[{m}] {s:e} vs oracle {:e}", oracle[m]))?;
    }
    let mut rng = rng(3);
    for t in 0..100 {
        let n = rng.random_range(2..=12);
        let d = rng.random_range(2..=8);
        let (z, _) = center_columns(&clr_matrix(&random_table(&mut rng, n, d))).map_err(|e| e.to_string())?;
        worst = worst.max(svd_matches_oracle(&z).map_err(|e| format!("matrix {t} ({n}x{d}): {e}"))?);
    }
    Ok(format!("max relative deviation {worst:.1e}"))
}

fn d3_exactness() -> Outcome {
    let mut rng = rng(4);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let n = rng.random_range(3..=30);
        let table = random_table(&mut rng, n, 3);
        let model = fit_biplot(&clr_matrix(&table), 1.0, 2).map_err(|e| e.to_string())?;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let ranking = rank_along_link(&model, &make_link(&model, i, j).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            ensure(ranking.order == brute_force_order(&table, i, j), || format!("table {t} link ({i},{j}): order differs"))?;
            let fidelity = ranking.fidelity.ok_or(format!("table {t}: fidelity undefined"))?;
            worst = worst.max((fidelity - 1.0).abs());
            ensure((fidelity - 1.0).abs() <= 1e-9, || format!("table {t} link ({i},{j}): fidelity {fidelity}"))?;
        }
    }
    Ok(format!("300 links, max |fidelity - 1| {worst:.1e}"))
}

fn alpha_invariance() -> Outcome {
    let catalog = default_ratio_catalog();
    for seed in 0..50u64 {
        let clr = clr_matrix(&synthetic_table(seed));
        let orders = |alpha: f64| -> Result<Vec<Vec<usize>>, String> {
            let model = fit_biplot(&clr, alpha, 2).map_err(|e| e.to_string())?;
            catalog
                .iter()
                .map(|def| {
                    let link = link_for_ratio(&model, def).map_err(|e| e.to_string())?;
                    Ok(rank_along_link(&model, &link).map_err(|e| e.to_string())?.order)
                })
                .collect()
        };
        let base = orders(0.0)?;
        for alpha in [0.5, 1.0] {
            ensure(orders(alpha)? == base, || format!("seed {seed}: ranking changes at alpha {alpha}"))?;
        }
    }
    Ok("50 tables x 5 ratios x 3 alphas".into())
}

fn reconstruction() -> Outcome {
    let mut rng = rng(6);
    let mut tables = vec![svd_fixture()];
    for _ in 0..50 {
        let n = rng.random_range(4..=20);
        let d = rng.random_range(4..=10);
        tables.push(random_table(&mut rng, n, d));
    }
    let (mut full_worst, mut resid_worst) = (0.0f64, 0.0f64);
    for (t, table) in tables.iter().enumerate() {
        let clr = clr_matrix(table);
        let full = fit_biplot(&clr, 0.5, max_rank(table.n(), table.d())).map_err(|e| e.to_string())?;
        let err = frobenius(&(reconstruct(&full) - full.centered()));
        full_worst = full_worst.max(err);
        ensure(err <= 1e-8, || format!("table {t}: full-rank error {err:e}"))?;

        let two = fit_biplot(&clr, 0.5, 2).map_err(|e| e.to_string())?;
        let residual = frobenius(&(two.centered() - &reconstruct(&two)));
        let spectrum = thin_svd(two.centered()).map_err(|e| e.to_string())?.s;
        let tail: f64 = spectrum.iter().skip(2).map(|s| s * s).sum();
        let expected = tail.sqrt();
        resid_worst = resid_worst.max((residual - expected).abs());
        ensure((residual - expected).abs() <= 1e-8, || format!("table {t}: residual {residual} vs {expected}"))?;
        // the tail energy itself agrees with the oracle spectrum
        let (_, lambda) = oracle_singular_values(two.centered(), spectrum.len());
        let oracle_tail: f64 = lambda.iter().skip(2).sum();
        let scale = spectrum[0] * spectrum[0];
        ensure((tail - oracle_tail).abs() <= 1e-8 * scale, || format!("table {t}: tail {tail:e} vs oracle {oracle_tail:e}"))?;
    }
    Ok(format!("full-rank {full_worst:.1e}, k=2 residual {resid_worst:.1e}"))
}

fn skewness_reduction() -> Outcome {
    let mut rng = rng(7);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut reduced = 0;
    for _ in 0..100 {
        let logs: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng)).collect();
        let raw: Vec<f64> = logs.iter().map(|x| x.exp()).collect();
        let (a, b) = (skewness(&raw).map_err(|e| e.to_string())?, skewness(&logs).map_err(|e| e.to_string())?);
        if b.abs() < a.abs() {
            reduced += 1;
        }
    }
    ensure(reduced >= 95, || format!("only {reduced}/100 trials reduced"))?;
    Ok(format!("{reduced}/100 trials reduced"))
}

fn clustering() -> Outcome {
    let table = two_triples();
    let dist = distance_matrix(&clr_matrix(&table)).map_err(|e| e.to_string())?;
    let (a, b): (Vec<usize>, Vec<usize>) = ((0..3).collect(), (3..6).collect());
    let mut intra = 0.0f64;
    let mut inter = f64::INFINITY;
    for x in 0..6 {
        for y in 0..x {
            let same = a.contains(&x) == a.contains(&y);
            let v = dist.get(x, y);
            if same {
                intra = intra.max(v);
            } else {
                inter = inter.min(v);
            }
        }
    }
    ensure(inter / intra >= 10.0, || format!("fixture separation only {:.2}", inter / intra))?;
    for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
        let assignment = hierarchical_cluster(&dist, linkage, Cut::Count(2)).map_err(|e| e.to_string())?;
        let label = |i: usize| assignment.labels[i].1;
        let ok = a.iter().all(|&i| label(i) == label(0)) && b.iter().all(|&i| label(i) == label(3)) && label(0) != label(3);
        ensure(ok, || format!("{linkage:?}: triples not recovered"))?;
    }

    let mut rng = rng(8);
    for t in 0..100 {
        let n = rng.random_range(2..=25);
        let dim = rng.random_range(1..=5);
        let pts = Array2::from_shape_fn((n, dim), |_| rng.random_range(-10.0..10.0));
        let values = Array2::from_shape_fn((n, n), |(x, y)| {
            (&pts.row(x) - &pts.row(y)).iter().map(|v| v * v).sum::<f64>().sqrt()
        });
        let ids = (0..n).map(|i| format!("R{i:02}")).collect();
        let dist = DistanceMatrix::new(ids, values).map_err(|e| e.to_string())?;
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let assignment = hierarchical_cluster(&dist, linkage, Cut::Count(1)).map_err(|e| e.to_string())?;
            let h: Vec<f64> = assignment.merge_history.iter().map(|m| m.distance).collect();
            ensure(h.windows(2).all(|w| w[0] <= w[1]), || format!("metric {t} {linkage:?}: heights decrease"))?;
            ensure(h.len() == n - 1, || format!("metric {t}: {} merges for {n} points", h.len()))?;
        }
    }
    Ok(format!("separation {:.0}x, 300 monotone dendrograms", inter / intra))
}

fn csv_with_energy_in_gwh(table: &coda_atlas::IndicatorTable) -> String {
    let energy = table.part_index("energy_consumption").unwrap();
    let mut out = String::from("id,label,sector_code");
    for p in table.parts() {
        out.push(',');
        out.push_str(&p.name);
    }
    out.push('\n');
    for (r, e) in table.entities().iter().enumerate() {
        out.push_str(&format!("{},{},{}", e.id, e.label, e.sector_code));
        for (j, v) in table.row(r).iter().enumerate() {
            let v = if j == energy { v / 1000.0 } else { *v };
            out.push(',');
            out.push_str(&format_sig17(v));
        }
        out.push('\n');
    }
    out
}

fn ingestion() -> Outcome {
    let fixture = include_bytes!("../fixtures/synthetic_17x8.csv");
    let config = IngestConfig::default();
    let first = parse_table(fixture, &config).map_err(|e| e.to_string())?;
    let written = write_table(&first);
    let second = parse_table(written.as_bytes(), &config).map_err(|e| e.to_string())?;
    ensure(first == second, || "parse -> write -> parse changed the table".into())?;
    ensure(written.as_bytes() == fixture, || "writer output differs from fixture bytes".into())?;
    ensure(first == synthetic_table(DEFAULT_SEED), || "fixture differs from the seeded generator".into())?;

    let mut gwh = IngestConfig::default();
    gwh.unit_map.insert("energy_consumption".into(), "GWh".into());
    let converted = parse_table(csv_with_energy_in_gwh(&first).as_bytes(), &gwh).map_err(|e| e.to_string())?;
    let rel = (converted.values() - first.values()).iter().zip(first.values()).fold(0.0f64, |m, (d, v)| m.max((d / v).abs()));
    ensure(rel <= 1e-12, || format!("GWh column not converted to MWh (rel {rel:e})"))?;
    let mut worst = 0.0f64;
    let max_diff = |a: &Array2<f64>, b: &Array2<f64>| (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for k in [2, 7] {
        let m1 = fit_biplot(&clr_matrix(&first), 1.0, k).map_err(|e| e.to_string())?;
        let m2 = fit_biplot(&clr_matrix(&converted), 1.0, k).map_err(|e| e.to_string())?;
        for (x, y) in [(m1.centered(), m2.centered()), (m1.points(), m2.points()), (m1.rays(), m2.rays())] {
            worst = worst.max(max_diff(x, y));
        }
        let s = (m1.singular_values() - m2.singular_values()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(s);
    }
    ensure(worst <= 1e-9, || format!("GWh and MWh models differ by {worst:e}"))?;
    Ok(format!("round trip exact, unit models differ by {worst:.1e}"))
}

fn run_cli(input: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_coda-atlas"))
        .arg("pipeline")
        .arg("--input")
        .arg(input)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    std::fs::read(out.join("manifest.json")).map_err(|e| e.to_string())
}

fn end_to_end() -> Outcome {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic_17x8.csv");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run_cli(&input, &a)?;
    let second = run_cli(&input, &b)?;
    ensure(first == second, || "manifests differ between runs".into())?;

    let svg = std::fs::read_to_string(a.join("biplot.svg")).map_err(|e| e.to_string())?;
    let doc = roxmltree::Document::parse(&svg).map_err(|e| e.to_string())?;
    let count = |tag: &str, class: &str| {
        doc.descendants().filter(|n| n.has_tag_name(tag) && n.attribute("class") == Some(class)).count()
    };
    let (points, rays) = (count("circle", "point"), count("line", "ray"));
    ensure(points == 17 && rays == 8, || format!("{points} points, {rays} rays"))?;
    Ok(format!("identical manifests, {points} points, {rays} rays"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("clr structure", clr_structure, 5),
        ("named ratios", named_ratios, 1),
        ("svd oracle", svd_oracle, 10),
        ("d=3 exactness", d3_exactness, 5),
        ("alpha invariance", alpha_invariance, 5),
        ("reconstruction", reconstruction, 2),
        ("skewness reduction", skewness_reduction, 2),
        ("clustering", clustering, 2),
        ("ingestion", ingestion, 2),
        ("end to end", end_to_end, 3),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(*budget) => {
                Err(format!("{detail}; took {:.2}s, budget {budget}s", elapsed.as_secs_f64()))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({:.2}s)", i + 1, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({:.2}s)", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
