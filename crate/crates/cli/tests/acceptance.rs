//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use datasetlens_core::config::{AnalysisParams, ObjectParams};
use datasetlens_core::dataset::{AnnotatedDataset, BBox, DatasetFormat};
use datasetlens_core::gender::{fit_interaction_threshold, person_object_distance};
use datasetlens_core::insight::{rank_queries, AnalysisContext, OutcomePredicate, SynonymTable, TermKind};
use datasetlens_core::object::{area_fraction, detect_duplicate_pairs, scale_distribution};
use datasetlens_core::stats::{
    binary_separability, entropy, fit_quantile_bins, two_proportion_test, wilson_lower, SeparabilityParams,
};
use datasetlens_core::synthetic::{duplicate_scenario, independent_features, recommendation_scenario, separable_blobs};
use datasetlens_core::{RunConfig, SceneGroup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Verdict {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    match result {
        Err(e) => Verdict::Fail(format!("{e} [{elapsed:.2?}]")),
        Ok(detail) => match limit {
            Some(l) if elapsed > l => Verdict::Fail(format!("{detail}; took {elapsed:.2?}, limit {l:?}")),
            _ => Verdict::Pass(format!("{detail} [{elapsed:.2?}]")),
        },
    }
}

// ---------------------------------------------------------------- stats

fn wilson_closed_form(k: f64, n: f64) -> f64 {
    let z = 1.959_963_984_540_054_f64;
    let p = k / n;
    (p + z * z / (2.0 * n) - z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()) / (1.0 + z * z / n)
}

fn stats_exactness() -> Outcome {
    for (k, n, published) in [(10u64, 10u64, 0.7225), (5, 10, 0.2366)] {
        let got = wilson_lower(k, n, 0.95).map_err(|e| e.to_string())?;
        let closed = wilson_closed_form(k as f64, n as f64);
        ensure((got - closed).abs() < 1e-4, || format!("wilson({k},{n}) = {got}, closed form {closed}"))?;
        ensure((got - published).abs() < 1e-4, || format!("wilson({k},{n}) = {got}, expected {published}"))?;
    }
    let h = entropy(&[1; 16]).map_err(|e| e.to_string())?;
    ensure(h.bits == 4.0, || format!("uniform-16 entropy {}", h.bits))?;
    let t = two_proportion_test(50, 100, 60, 100).map_err(|e| e.to_string())?;
    ensure((t.p_value - 0.155).abs() <= 0.005, || format!("two-proportion p {}", t.p_value))?;
    Ok(format!("wilson 0.7225/0.2366, entropy 4 bits, p = {:.4}", t.p_value))
}

// ---------------------------------------------------------------- duplicates

fn clip(b: &BBox, w: f64, h: f64) -> (f64, f64, f64, f64) {
    let x0 = b.x.clamp(0.0, w);
    let y0 = b.y.clamp(0.0, h);
    let x1 = (b.x + b.w).clamp(0.0, w);
    let y1 = (b.y + b.h).clamp(0.0, h);
    (x0, y0, x1, y1)
}

fn oracle_iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let iw = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
    let ih = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
    let inter = iw * ih;
    let union = (a.2 - a.0) * (a.3 - a.1) + (b.2 - b.0) * (b.3 - b.1) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// All-pairs oracle: an image supports a pair when boxed instances of both
/// categories are present, and counts as a match when any cross pair of boxes
/// overlaps above the threshold.
fn duplicate_oracle(ds: &AnnotatedDataset, p: &ObjectParams) -> Vec<(String, String, f64)> {
    let mut tally: BTreeMap<(String, String), (u64, u64)> = BTreeMap::new();
    for (image, insts) in ds.iter_images() {
        let (w, h) = (f64::from(image.width), f64::from(image.height));
        let boxed: Vec<_> = insts
            .iter()
            .filter_map(|i| i.bbox.as_ref().map(|b| (i.category.clone(), clip(b, w, h))))
            .filter(|(_, c)| c.2 > c.0 && c.3 > c.1)
            .collect();
        let cats: BTreeSet<&String> = boxed.iter().map(|(c, _)| c).collect();
        for a in &cats {
            for b in &cats {
                if a >= b {
                    continue;
                }
                let hit = boxed.iter().any(|(ca, ba)| {
                    ca == *a && boxed.iter().any(|(cb, bb)| cb == *b && oracle_iou(*ba, *bb) > p.duplicate_iou)
                });
                let t = tally.entry(((*a).clone(), (*b).clone())).or_default();
                t.0 += 1;
                t.1 += u64::from(hit);
            }
        }
    }
    let mut out: Vec<(String, String, f64)> = tally
        .into_iter()
        .filter_map(|((a, b), (n, k))| {
            let f = k as f64 / n as f64;
            (n >= p.duplicate_min_support && f > p.duplicate_fraction).then_some((a, b, f))
        })
        .collect();
    out.sort_by(|x, y| y.2.total_cmp(&x.2).then_with(|| (&x.0, &x.1).cmp(&(&y.0, &y.1))));
    out
}

fn duplicates_oracle() -> Outcome {
    let params = ObjectParams {
        duplicate_min_support: 2,
        duplicate_fraction: 0.3,
        ..ObjectParams::default()
    };
    let mut flagged = 0;
    for seed in 0..100 {
        let ds = duplicate_scenario(seed);
        ensure(ds.instances().len() <= 200, || format!("seed {seed}: {} instances", ds.instances().len()))?;
        let got: Vec<(String, String, f64)> = detect_duplicate_pairs(&ds, &params)
            .into_iter()
            .map(|p| (p.category_a, p.category_b, p.high_overlap_fraction))
            .collect();
        let want = duplicate_oracle(&ds, &params);
        ensure(got == want, || format!("seed {seed}: got {got:?}, oracle {want:?}"))?;
        flagged += got.len();
    }
    ensure(flagged > 0, || "no pair was ever flagged; the scenario is too easy".into())?;
    Ok(format!("100 datasets, {flagged} flagged pairs, exact match"))
}

// ---------------------------------------------------------------- recommendations

struct OracleRow {
    term: String,
    kind: TermKind,
    k: u64,
    n: u64,
}

/// Enumerates every candidate term and, for each, walks all images.
fn recommendation_oracle(ds: &AnnotatedDataset, target: &str, wanted: &[usize], params: &AnalysisParams) -> Vec<OracleRow> {
    let scale = scale_distribution(ds, &params.object).expect("boxed scenario");
    let success = |pos: usize| {
        ds.instances_of(pos)
            .filter(|i| i.category == target)
            .any(|i| area_fraction(ds, i).is_some_and(|a| wanted.contains(&scale.bin_of(a))))
    };
    let has_target = |pos: usize| ds.instances_of(pos).any(|i| i.category == target);
    let mut terms: Vec<(String, TermKind)> = Vec::new();
    let categories: BTreeSet<&str> = ds.categories().categories().collect();
    for c in &categories {
        if *c != target {
            terms.push((c.to_string(), TermKind::Category));
        }
    }
    let supers: BTreeSet<&str> = ds.categories().entries().map(|(_, s)| s).collect();
    for s in supers {
        if s != target && !categories.contains(s) {
            terms.push((s.to_string(), TermKind::Supercategory));
        }
    }
    for g in SceneGroup::ALL {
        terms.push((g.id().to_string(), TermKind::SceneGroup));
    }
    let mut rows = Vec::new();
    for (term, kind) in terms {
        let (mut k, mut n) = (0, 0);
        for (pos, image) in ds.images().iter().enumerate() {
            if !has_target(pos) {
                continue;
            }
            let present = match kind {
                TermKind::Category => ds.instances_of(pos).any(|i| i.category == term),
                TermKind::Supercategory => ds
                    .instances_of(pos)
                    .any(|i| i.category != target && ds.supercategory_of(&i.category) == term),
                TermKind::SceneGroup => image.scene_group.is_some_and(|g| g.id() == term),
            };
            if present {
                n += 1;
                k += u64::from(success(pos));
            }
        }
        if n > 0 && n >= params.insight.min_support {
            rows.push(OracleRow { term, kind, k, n });
        }
    }
    rows.sort_by(|a, b| {
        (b.k * a.n)
            .cmp(&(a.k * b.n))
            .then(b.n.cmp(&a.n))
            .then(a.kind.cmp(&b.kind))
            .then_with(|| a.term.cmp(&b.term))
    });
    rows
}

fn recommendations_oracle() -> Outcome {
    let mut params = AnalysisParams::default();
    params.insight.min_support = 5;
    let outcome: OutcomePredicate = "size:XS,S".parse().map_err(|e| format!("{e}"))?;
    let mut compared = 0usize;
    for seed in 0..100 {
        let ds = recommendation_scenario(seed);
        ensure(ds.images().len() <= 1000, || format!("seed {seed}: {} images", ds.images().len()))?;
        let got = rank_queries(&ds, "airplane", &outcome, &params, SynonymTable::builtin()).map_err(|e| format!("seed {seed}: {e}"))?;
        let want = recommendation_oracle(&ds, "airplane", &[0, 1], &params);
        ensure(got.recommendations.len() == want.len(), || {
            format!("seed {seed}: {} terms, oracle {}", got.recommendations.len(), want.len())
        })?;
        for (i, (g, w)) in got.recommendations.iter().zip(&want).enumerate() {
            let p = w.k as f64 / w.n as f64;
            ensure(g.term == w.term && g.term_kind == w.kind, || {
                format!("seed {seed} rank {i}: {} vs oracle {}", g.term, w.term)
            })?;
            ensure(g.support == w.n && g.successes == w.k && (g.probability - p).abs() <= 1e-12, || {
                format!("seed {seed} {}: {}/{} vs oracle {}/{}", g.term, g.successes, g.support, w.k, w.n)
            })?;
        }
        compared += want.len();
    }
    Ok(format!("100 datasets, {compared} ranked terms, exact match"))
}

// ---------------------------------------------------------------- quantiles

fn quantile_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..1000 {
        let m = rng.random_range(25..400);
        let mut values: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.len() < 25 {
            continue;
        }
        let bins = fit_quantile_bins(&values, 5).map_err(|e| format!("trial {trial}: {e}"))?;
        let pops = bins.populations(&values);
        let (lo, hi) = (pops.iter().min().unwrap(), pops.iter().max().unwrap());
        ensure(hi - lo <= 1, || format!("trial {trial}: populations {pops:?}"))?;
    }
    Ok("1000 samples, populations within 1".into())
}

// ---------------------------------------------------------------- distance

fn distance_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let random_box = |rng: &mut ChaCha8Rng| {
        BBox::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(1.0..40.0), rng.random_range(1.0..40.0))
    };
    let d = |a: &BBox, b: &BBox| person_object_distance(a, b).map_err(|e| e.to_string());
    for _ in 0..1000 {
        let p = random_box(&mut rng);
        let o = random_box(&mut rng);
        let base = d(&p, &o)?;
        let (dx, dy) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let moved = d(&p.translate(dx, dy), &o.translate(dx, dy))?;
        ensure((moved - base).abs() < 1e-12, || format!("translation changed {base} to {moved}"))?;
        let s = rng.random_range(0.1..10.0);
        let scaled = d(&p.scale(s), &o.scale(s))?;
        ensure((scaled - base / s).abs() < 1e-9, || format!("scale {s}: {scaled} vs {}", base / s))?;
        let outer = BBox::new(
            f64::from(rng.random_range(-100..100)),
            f64::from(rng.random_range(-100..100)),
            f64::from(rng.random_range(3..60)),
            f64::from(rng.random_range(3..60)),
        );
        let inset = f64::from(rng.random_range(1..=(outer.w.min(outer.h) as i32 - 1) / 2));
        let inner = BBox::new(outer.x + inset, outer.y + inset, outer.w - 2.0 * inset, outer.h - 2.0 * inset);
        ensure(d(&outer, &inner)? == 0.0, || format!("concentric {outer:?} {inner:?} not at distance 0"))?;
    }
    Ok("translation, scaling and concentric cases over 1000 box pairs".into())
}

// ---------------------------------------------------------------- threshold

fn mpca_at(t: f64, d: &[f64], y: &[bool]) -> f64 {
    let (mut tp, mut py, mut tn, mut pn) = (0.0, 0.0, 0.0, 0.0);
    for (&v, &l) in d.iter().zip(y) {
        if l {
            py += 1.0;
            tp += f64::from(u8::from(v < t));
        } else {
            pn += 1.0;
            tn += f64::from(u8::from(v >= t));
        }
    }
    (tp / py + tn / pn) / 2.0
}

fn sweep_optimum(d: &[f64], y: &[bool]) -> f64 {
    let mut values = d.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut candidates = values.clone();
    candidates.extend(values.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    candidates.push(f64::INFINITY);
    candidates.iter().map(|&t| mpca_at(t, d, y)).fold(f64::NEG_INFINITY, f64::max)
}

fn threshold_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..300 {
        let n = rng.random_range(2..=500);
        let shift = rng.random_range(0.0..3.0);
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        y[0] = true;
        y[1] = false;
        let d: Vec<f64> = y
            .iter()
            .map(|&l| {
                let v: f64 = rng.random_range(0.0..5.0) + if l { 0.0 } else { shift };
                if trial % 3 == 0 { v.round() } else { v }
            })
            .collect();
        let fit = fit_interaction_threshold("x", &d, &y).map_err(|e| e.to_string())?;
        let best = sweep_optimum(&d, &y);
        ensure((fit.mpca - best).abs() < 1e-12, || format!("trial {trial}: mpca {} vs sweep {best}", fit.mpca))?;
        let at = mpca_at(fit.threshold, &d, &y);
        ensure((at - fit.mpca).abs() < 1e-12, || format!("trial {trial}: threshold scores {at}, reported {}", fit.mpca))?;
        ensure(fit.mpca >= 0.5, || format!("trial {trial}: mpca {} below the constant-prediction baseline", fit.mpca))?;

        let sep_y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let sep_d: Vec<f64> = sep_y.iter().map(|&l| if l { rng.random_range(0.0..1.0) } else { rng.random_range(1.5..3.0) }).collect();
        let sep = fit_interaction_threshold("x", &sep_d, &sep_y).map_err(|e| e.to_string())?;
        ensure(sep.mpca == 1.0, || format!("trial {trial}: separable mpca {}", sep.mpca))?;
    }
    Ok("300 labeled sets up to 500 points match the exhaustive sweep".into())
}

// ---------------------------------------------------------------- svm

fn svm_pipeline() -> Outcome {
    let params = SeparabilityParams::default();
    let ids = |n: usize| (0..n).map(|i| format!("s{i}")).collect::<Vec<_>>();
    let (rows, labels) = separable_blobs(1, 200, 8, 2.0);
    let r = binary_separability(&ids(200), &rows, &labels, &params).map_err(|e| e.to_string())?;
    let ratio = r.shuffled_ratio.unwrap_or(0.0);
    ensure(r.accuracy >= 0.95 && ratio >= 1.5, || format!("blobs: accuracy {:.3}, ratio {ratio:.3}", r.accuracy))?;
    let mut ratios = Vec::new();
    for seed in 0..20 {
        let (rows, labels) = independent_features(100 + seed, 200, 8);
        let p = SeparabilityParams {
            svm: datasetlens_core::stats::SvmParams { seed, ..params.svm.clone() },
            ..params.clone()
        };
        let r = binary_separability(&ids(200), &rows, &labels, &p).map_err(|e| e.to_string())?;
        ratios.push(r.shuffled_ratio.ok_or("independent features: undefined ratio")?);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    ensure((0.8..=1.2).contains(&mean), || format!("independent features: mean ratio {mean:.3}"))?;
    Ok(format!("blobs accuracy {:.3} ratio {ratio:.2}; independent mean ratio {mean:.3}", r.accuracy))
}

// ---------------------------------------------------------------- end to end

fn generated_at(json: &str) -> Result<String, String> {
    let v: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    v["generated_at"].as_str().map(str::to_string).ok_or_else(|| "report has no generated_at".into())
}

fn end_to_end() -> Outcome {
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy/config.toml");
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = || -> Result<(String, String), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_datasetlens"))
            .args(["analyze", "--config"])
            .arg(&toy)
            .arg("--out")
            .arg(out.path())
            .env_remove("DATASETLENS_SEED")
            .env_remove("DATASETLENS_OUT")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        let json = std::fs::read_to_string(out.path().join("report.json")).map_err(|e| e.to_string())?;
        let html = std::fs::read_to_string(out.path().join("report.html")).map_err(|e| e.to_string())?;
        Ok((json, html))
    };
    let (json_a, html_a) = run()?;
    let (json_b, html_b) = run()?;
    let (ta, tb) = (generated_at(&json_a)?, generated_at(&json_b)?);
    ensure(json_a.replace(&ta, "") == json_b.replace(&tb, ""), || "report.json differs between runs".into())?;
    ensure(html_a.replace(&ta, "") == html_b.replace(&tb, ""), || "report.html differs between runs".into())?;
    Ok(format!("two runs, {} bytes of JSON identical apart from the timestamp", json_a.len()))
}

// ---------------------------------------------------------------- COCO

fn coco_files(dir: &Path) -> Option<(PathBuf, PathBuf)> {
    ["val2017", "train2017"].iter().find_map(|split| {
        let inst = dir.join(format!("annotations/instances_{split}.json"));
        let caps = dir.join(format!("annotations/captions_{split}.json"));
        (inst.exists() && caps.exists()).then_some((inst, caps))
    })
}

fn coco_spot_checks(dir: &Path) -> Outcome {
    let (instances, captions) = coco_files(dir).ok_or("no instances/captions json under annotations/")?;
    let mut cfg = RunConfig {
        dataset: Some(instances),
        format: DatasetFormat::Coco,
        captions: Some(captions),
        ..RunConfig::default()
    };
    if let Ok(features) = std::env::var("DATASETLENS_COCO_FEATURES") {
        cfg.features.push(features.into());
    }
    let ctx = AnalysisContext::load(cfg).map_err(|e| e.to_string())?;
    let scale = ctx.scale().map_err(|e| e.to_string())?;
    let xl = |c: &str| scale.get(c).map(|d| d.bin_shares[4]).ok_or(format!("{c} has no boxes"));
    let co = ctx.cooccurrence().map_err(|e| e.to_string())?;
    let given = |c: &str| co.conditional("person", c).ok_or(format!("{c} absent"));
    let checks = [
        ("airplane XL share", xl("airplane")?, 0.77),
        ("pizza XL share", xl("pizza")?, 0.73),
        ("P(person|broccoli)", given("broccoli")?, 0.15),
        ("P(person|hot dog)", given("hot dog")?, 0.56),
    ];
    let mut detail = Vec::new();
    for (name, got, want) in checks {
        ensure((got - want).abs() <= 0.02, || format!("{name} = {got:.3}, expected {want} ± 0.02"))?;
        detail.push(format!("{name} {got:.3}"));
    }
    match ctx.gender_audit() {
        Ok(a) => {
            ensure((a.fraction_male - 0.77).abs() <= 0.02, || format!("audit male fraction {:.3}", a.fraction_male))?;
            detail.push(format!("audit male {:.3}", a.fraction_male));
        }
        Err(e) => detail.push(format!("audit not run: {e}")),
    }
    Ok(detail.join(", "))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let secs = Duration::from_secs;
    results.push(("stats-kit exactness", timed(Some(secs(1)), stats_exactness)));
    results.push(("duplicate detection matches all-pairs oracle", timed(Some(secs(30)), duplicates_oracle)));
    results.push(("query ranking matches exhaustive enumeration", timed(Some(secs(60)), recommendations_oracle)));
    results.push(("quantile bins balanced within one", timed(None, quantile_property)));
    results.push(("person-object distance invariances", timed(None, distance_formula)));
    results.push(("interaction threshold equals sweep optimum", timed(None, threshold_property)));
    results.push(("svm pipeline on blobs and independent features", timed(Some(secs(60)), svm_pipeline)));
    results.push(("analyze is deterministic end to end", timed(None, end_to_end)));
    let coco = match std::env::var("DATASETLENS_COCO_DIR") {
        Ok(dir) => timed(None, || coco_spot_checks(Path::new(&dir))),
        Err(_) => Verdict::Skip("set DATASETLENS_COCO_DIR to a COCO 2017 download".into()),
    };
    results.push(("COCO spot checks (dataset-gated)", coco));

    let mut failed = 0;
    for (name, verdict) in &results {
        match verdict {
            Verdict::Pass(d) => println!("PASS  {name}: {d}"),
            Verdict::Skip(d) => println!("SKIP  {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.iter().filter(|(_, v)| matches!(v, Verdict::Pass(_))).count());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
