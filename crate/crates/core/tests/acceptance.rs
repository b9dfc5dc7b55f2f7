//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal as NormalDist};
use statrs::distribution::{ContinuousCDF, Normal};

use roisense::bootstrap::{bootstrap_ci, resample_counts, weighted_mean, BootstrapConfig};
use roisense::comfort::{violation_probability, ComfortZone, ZoneConfig};
use roisense::evaluate::{evaluate, pairwise, EvalConfig};
use roisense::irs::{irs, RankedScores, RocCurve};
use roisense::kinematics::{corridor_events, gap_distribution, DEFAULT_HALF_WIDTH};
use roisense::prediction::{read_predictions, write_predictions, Gaussian2, GaussianMixture, HorizonDist, PredictiveDistribution};
use roisense::predictors::{predict_scene, Model, PredictConfig};
use roisense::scene::{save_scene, load_scene, Scene};
use roisense::simulator::{generate, save_dataset, load_dataset, Layout, SimConfig};
use roisense::toy::{run_toy, ToyConfig, Variant};
use roisense::{MonteCarloConfig, PlannedPath, Point};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn toy_ordering() -> Outcome {
    let r = run_toy(&ToyConfig::new(1)).expect("toy run");
    let [a, b, c, d] = [Variant::A, Variant::B, Variant::C, Variant::D].map(|v| r.row(v).clone());
    let irs_ok = (a.irs - b.irs).abs() <= 0.01 && b.irs > c.irs && c.irs > d.irs;
    let nll_ok = a.nll < b.nll && (b.nll - c.nll).abs() <= 0.01 && c.nll < d.nll;
    let ade_ok = d.ade < b.ade && (b.ade - c.ade).abs() <= 0.01 && c.ade < a.ade;
    outcome(
        irs_ok && nll_ok && ade_ok,
        format!(
            "IRS {:.3}/{:.3}/{:.3}/{:.3}, NLL {:.3}/{:.3}/{:.3}/{:.3}, ADE {:.3}/{:.3}/{:.3}/{:.3}",
            a.irs, b.irs, c.irs, d.irs, a.nll, b.nll, c.nll, d.nll, a.ade, b.ade, c.ade, d.ade
        ),
    )
}

fn mc_rectangle() -> Outcome {
    // axis-aligned rectangle x ∈ [0, 4], y ∈ [−1, 1] as a zone on a straight path
    let path = PlannedPath::straight(Point::new(-10.0, 0.0), Point::new(20.0, 0.0)).unwrap();
    let cfg = ZoneConfig {
        tau: 1.0,
        width: 2.0,
        tau_rear: 0.0,
    };
    let zone = ComfortZone::new(&path, 10.0, 4.0, cfg);
    let (mx, my, sx, sy) = (1.3, 0.4, 1.1, 0.7);
    let g = Gaussian2::new(Point::new(mx, my), [[sx * sx, 0.0], [0.0, sy * sy]]).unwrap();
    let phi = Normal::new(0.0, 1.0).unwrap();
    let exact = (phi.cdf((4.0 - mx) / sx) - phi.cdf((0.0 - mx) / sx)) * (phi.cdf((1.0 - my) / sy) - phi.cdf((-1.0 - my) / sy));
    let n = 100_000;
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    let mut ests = Vec::new();
    for seed in 0..100 {
        let h = HorizonDist::Mixture(GaussianMixture::single(g.clone()));
        let d = PredictiveDistribution::new("p", 0.0, [h.clone(), h.clone(), h.clone(), h]);
        let p = violation_probability(&d, &zone, 1.0, &MonteCarloConfig { n, seed }, "mc").unwrap();
        ests.push(p);
    }
    let worst = ests.iter().map(|p| (p - exact).abs()).fold(0.0, f64::max);
    let within3 = ests.iter().filter(|p| (*p - exact).abs() <= 3.0 * se).count();
    let mean = ests.iter().sum::<f64>() / ests.len() as f64;
    let sd = (ests.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (ests.len() - 1) as f64).sqrt();
    let pass = worst < 1e-2 && within3 >= 98 && (mean - exact).abs() <= 3.0 * se / 10.0 && (sd / se - 1.0).abs() < 0.25;
    outcome(
        pass,
        format!(
            "exact {exact:.5}, max |err| {worst:.2e}, {within3}/100 within 3 SE, mean err {:.2e} (3 SE of mean {:.2e}), sd/SE {:.2}",
            mean - exact,
            3.0 * se / 10.0,
            sd / se
        ),
    )
}

/// ROC by evaluating every threshold in {+inf} ∪ distinct scores directly.
fn brute_roc(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64)> {
    let p = labels.iter().filter(|&&l| l).count() as f64;
    let n = labels.len() as f64 - p;
    let mut thr: Vec<f64> = scores.to_vec();
    thr.sort_by(|a, b| b.total_cmp(a));
    thr.dedup();
    let mut pts = vec![(0.0, 0.0)];
    for t in thr {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && !**l).count() as f64;
        pts.push((fp / n, tp / p));
    }
    pts
}

fn brute_irs(pts: &[(f64, f64)], target: f64) -> f64 {
    let k = pts.iter().rposition(|p| p.0 <= target).unwrap();
    if k + 1 == pts.len() || pts[k].0 == target {
        return pts[k].1;
    }
    let (a, b) = (pts[k], pts[k + 1]);
    a.1 + (b.1 - a.1) * (target - a.0) / (b.0 - a.0)
}

fn curve_of(scores: &[f64], labels: &[bool]) -> Option<RocCurve> {
    RankedScores::new(scores.iter().zip(labels).enumerate().map(|(i, (&s, &l))| (s, l, i))).roc().ok()
}

fn roc_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    let mut mismatches = 0;
    for _ in 0..2000 {
        let n = rng.random_range(2..=20);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let Some(curve) = curve_of(&scores, &labels) else { continue };
        checked += 1;
        let got: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        let want = brute_roc(&scores, &labels);
        let irs_match = [0.025, 0.05, 0.1, 0.15, 0.5].iter().all(|&f| irs(&curve, f) == brute_irs(&want, f));
        if got != want || !irs_match {
            mismatches += 1;
        }
    }
    let mut runner = TestRunner::new(PtConfig {
        cases: 1000,
        failure_persistence: None,
        ..PtConfig::default()
    });
    let strategy = proptest::collection::vec((0u32..50, any::<bool>()), 2..60);
    let invariance = runner.run(&strategy, |v| {
        let scores: Vec<f64> = v.iter().map(|x| x.0 as f64 / 50.0).collect();
        let labels: Vec<bool> = v.iter().map(|x| x.1).collect();
        let Some(base) = curve_of(&scores, &labels) else { return Ok(()) };
        for f in [|x: f64| x.powi(3), |x: f64| (2.0 * x).exp(), |x: f64| 1.0 / (1.0 + (-5.0 * x).exp())] {
            let t: Vec<f64> = scores.iter().map(|&s| f(s)).collect();
            let curve = curve_of(&t, &labels).unwrap();
            for target in [0.025, 0.05, 0.1, 0.15] {
                prop_assert_eq!(irs(&curve, target), irs(&base, target));
            }
        }
        Ok(())
    });
    outcome(
        mismatches == 0 && invariance.is_ok(),
        format!(
            "{checked} brute-force instances, {mismatches} mismatches; monotone invariance over 1000 cases: {}",
            if invariance.is_ok() { "ok".to_string() } else { format!("{invariance:?}") }
        ),
    )
}

/// BCa written directly from the formulas, sharing only the resampling draws.
fn textbook_bca(x: &[f64], b: usize, level: f64, seed: u64) -> (f64, f64) {
    let n = x.len();
    let stat = |c: &[u32]| weighted_mean(x, c).unwrap();
    let theta = stat(&vec![1; n]);
    let mut reps: Vec<f64> = (0..b).map(|k| stat(&resample_counts(n, seed, k, 0))).collect();
    reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nd = Normal::new(0.0, 1.0).unwrap();
    let z0 = nd.inverse_cdf(reps.iter().filter(|&&r| r < theta).count() as f64 / b as f64);
    let jack: Vec<f64> = (0..n)
        .map(|i| {
            let mut c = vec![1u32; n];
            c[i] = 0;
            stat(&c)
        })
        .collect();
    let jbar = jack.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for t in &jack {
        let d = jbar - t;
        den += d * d;
        num += d * d * d;
    }
    let a = num / (6.0 * den.powf(1.5));
    let alpha = (1.0 - level) / 2.0;
    let pct = |z: f64| nd.cdf(z0 + (z0 + z) / (1.0 - a * (z0 + z)));
    let q = |p: f64| {
        let h = (b - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(b - 1);
        reps[lo] + (h - lo as f64) * (reps[hi] - reps[lo])
    };
    (q(pct(nd.inverse_cdf(alpha))), q(pct(nd.inverse_cdf(1.0 - alpha))))
}

fn bca_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let exp = rand_distr::Exp::new(1.0).unwrap();
    let mut exact = 0;
    let mut nested = 0;
    let seeds = 10;
    for seed in 0..seeds {
        let x: Vec<f64> = (0..20).map(|_| exp.sample(&mut rng)).collect();
        let cfg = |level| BootstrapConfig {
            replications: 2000,
            level,
            seed,
        };
        let got = bootstrap_ci(20, |c| weighted_mean(&x, c), &cfg(0.5)).unwrap();
        let (lo, hi) = textbook_bca(&x, 2000, 0.5, seed);
        if got.lo == lo && got.hi == hi {
            exact += 1;
        }
        let wide = bootstrap_ci(20, |c| weighted_mean(&x, c), &cfg(0.9)).unwrap();
        if wide.lo <= got.lo && got.hi <= wide.hi {
            nested += 1;
        }
    }
    let normal = NormalDist::new(0.0, 1.0).unwrap();
    let repeats = 500;
    let mut covered = 0;
    for r in 0..repeats {
        let x: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
        let cfg = BootstrapConfig {
            replications: 2000,
            level: 0.5,
            seed: 1000 + r,
        };
        let ci = bootstrap_ci(30, |c| weighted_mean(&x, c), &cfg).unwrap();
        if ci.lo <= 0.0 && 0.0 <= ci.hi {
            covered += 1;
        }
    }
    let coverage = covered as f64 / repeats as f64;
    outcome(
        exact == seeds && nested == seeds && (coverage - 0.5).abs() <= 0.06,
        format!("oracle bit-identical {exact}/{seeds}, nested {nested}/{seeds}, coverage {coverage:.3} over {repeats} repeats (B = 2000)"),
    )
}

fn driver_behavior() -> Outcome {
    let mut cfg = SimConfig::new(7, Layout::ZebraRoad);
    cfg.ped.mode_probs = [0.0, 0.7, 0.3, 0.0];
    let sims = generate(&cfg, 1000).unwrap();
    let mut scene_min = Vec::new();
    let mut events = Vec::new();
    for s in &sims {
        let ev = corridor_events(&s.scene, DEFAULT_HALF_WIDTH);
        if let Some(g) = ev.iter().map(|e| e.min_time_gap).reduce(f64::min) {
            scene_min.push(g);
        }
        events.extend(ev);
    }
    let ok = scene_min.iter().filter(|&&g| g >= cfg.driver.min_gap).count();
    let frac = ok as f64 / scene_min.len() as f64;
    let summary = gap_distribution(&events).unwrap();
    let mode = summary.mode_bin();
    let c = cfg.driver.comfort_gap;
    let mode_ok = mode.lo >= c - 1.0 && mode.hi <= c + 1.0;
    outcome(
        scene_min.len() == 1000 && frac >= 0.95 && mode_ok,
        format!(
            "{} crossing scenes, {:.1} % with min gap >= {} s, histogram mode [{:.1}, {:.1}) s, median {:.2} s ({} standing-ego events)",
            scene_min.len(),
            100.0 * frac,
            cfg.driver.min_gap,
            mode.lo,
            mode.hi,
            summary.median,
            summary.n_infinite
        ),
    )
}

fn feature_relevance() -> Outcome {
    let scenes: Vec<Scene> = generate(&SimConfig::new(11, Layout::ZebraRoad), 1000)
        .unwrap()
        .into_iter()
        .map(|s| s.scene)
        .collect();
    let ec = EvalConfig {
        metrics: false,
        ..EvalConfig::default()
    };
    let report = |model| {
        let pc = PredictConfig {
            model,
            ..PredictConfig::default()
        };
        let preds: Vec<_> = scenes.iter().flat_map(|s| predict_scene(s, &pc).unwrap()).collect();
        evaluate(&scenes, &preds, &ec).unwrap()
    };
    let (mapmix, cv) = (report(Model::Mapmix), report(Model::Cv));
    let boot = BootstrapConfig {
        replications: 2000,
        level: 0.9,
        seed: 0,
    };
    let diffs = pairwise(&mapmix, &cv, &boot).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for h in [3.0, 4.0] {
        let (a, b) = (mapmix.irs_at(h).unwrap(), cv.irs_at(h).unwrap());
        let d = diffs.iter().find(|d| d.horizon == h && d.metric == roisense::metrics::MetricName::Irs).unwrap();
        pass &= a > b && d.lo > 0.0;
        detail.push(format!("T={h}: mapmix {a:.3} vs cv {b:.3}, diff 90 % CI [{:.3}, {:.3}]", d.lo, d.hi));
    }
    outcome(pass, detail.join("; "))
}

fn random_prediction(rng: &mut ChaCha8Rng, i: usize) -> PredictiveDistribution {
    let horizon = |rng: &mut ChaCha8Rng| -> HorizonDist {
        if rng.random_bool(0.5) {
            let k = rng.random_range(1..4);
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            GaussianMixture::from_parts(raw.iter().map(|w| {
                let (a, c) = (rng.random_range(0.05..4.0), rng.random_range(0.05..4.0));
                let b = rng.random_range(-0.9..0.9) * (a * c as f64).sqrt();
                (w / total, Point::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)), [[a, b], [b, c]])
            }))
            .map(HorizonDist::Mixture)
            .unwrap()
        } else {
            let n = rng.random_range(1..30);
            HorizonDist::samples((0..n).map(|_| Point::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0))).collect()).unwrap()
        }
    };
    PredictiveDistribution::new(
        format!("s{i}:p{}", rng.random_range(0..5)),
        rng.random_range(0..200) as f64 * 0.1,
        [horizon(rng), horizon(rng), horizon(rng), horizon(rng)],
    )
}

fn round_trips() -> Outcome {
    let dir = std::env::temp_dir().join(format!("roisense-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut sims = Vec::new();
    for k in 0..50 {
        let layout = Layout::ALL[k % 3];
        let cfg = SimConfig::new(rng.random_range(0..1_000_000), layout);
        sims.push(roisense::simulator::generate_scene(&cfg, rng.random_range(0..1000)).unwrap());
    }
    let mut scene_ok = 0;
    for s in &sims {
        let p = dir.join("inline.json");
        save_scene(&s.scene, &p).unwrap();
        if load_scene(&p).unwrap() == s.scene && Scene::from_json(&s.scene.to_json()).unwrap() == s.scene {
            scene_ok += 1;
        }
    }
    let ds = dir.join("dataset");
    save_dataset(&ds, &sims).unwrap();
    let back = load_dataset(&ds).unwrap();
    let mut sorted: Vec<_> = sims.iter().collect();
    sorted.sort_by(|a, b| a.scene.id.cmp(&b.scene.id));
    let dataset_ok = back.len() == sims.len()
        && back
            .iter()
            .zip(&sorted)
            .all(|(a, b)| a.scene == b.scene && a.meta.as_ref() == Some(&b.meta));

    let preds: Vec<_> = (0..100).map(|i| random_prediction(&mut rng, i)).collect();
    let mut buf = Vec::new();
    write_predictions(&preds, &mut buf).unwrap();
    let parsed = read_predictions(std::io::Cursor::new(buf)).unwrap();
    let pred_ok = parsed == preds;
    std::fs::remove_dir_all(&dir).ok();
    outcome(
        scene_ok == 50 && dataset_ok && pred_ok,
        format!("scenes {scene_ok}/50 identical, dataset with sidecars {dataset_ok}, 100 prediction records identical {pred_ok}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 7] = [
        ("toy metric ordering", toy_ordering, Duration::from_secs(60)),
        ("MC rectangle integration", mc_rectangle, Duration::from_secs(60)),
        ("ROC/IRS exactness", roc_exactness, Duration::from_secs(60)),
        ("BCa correctness", bca_correctness, Duration::from_secs(300)),
        ("closed-loop driver", driver_behavior, Duration::from_secs(120)),
        ("feature relevance (mapmix > cv)", feature_relevance, Duration::from_secs(600)),
        ("file format round trips", round_trips, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let t0 = Instant::now();
        let o = run();
        let took = t0.elapsed();
        let pass = o.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} ({:.1} s, budget {} s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
