//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sssl::channel::{measure_trajectory, ChannelParams};
use sssl::harness::{run_fixed_target, run_target_grid, ModeChoice, SimConfig};
use sssl::lls::{localize_set, solve, LinearSystem, ReferenceMode};
use sssl::metrics::{long_term_cdf, min_flight_distance, reliability, RmsePoint};
use sssl::selection::{chlm_from_points, select_fml, select_fmlm, Algorithm, SelectionPlan, Selector};
use sssl::Trajectory;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn track() -> Trajectory<f64> {
    Trajectory::generate_parallel_track(300.0, 30.0, 50.0).unwrap()
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Collinearity of ground points, checked directly against the farthest pair.
fn ground_collinear(points: &[[f64; 2]]) -> bool {
    let p0 = points[0];
    let far = points
        .iter()
        .copied()
        .max_by(|a, b| {
            let da = (a[0] - p0[0]).hypot(a[1] - p0[1]);
            let db = (b[0] - p0[0]).hypot(b[1] - p0[1]);
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    let (ux, uy) = (far[0] - p0[0], far[1] - p0[1]);
    let scale = ux * ux + uy * uy;
    if scale == 0.0 {
        return true;
    }
    points.iter().all(|p| (ux * (p[1] - p0[1]) - uy * (p[0] - p0[0])).abs() <= 1e-9 * scale)
}

fn noiseless_exactness() -> Verdict {
    let start = Instant::now();
    let t = track();
    let plan = SelectionPlan::new(&t).unwrap();
    let channel = ChannelParams::free_space(2.4e9, 20e6, 1.0, 2.0, 0.0).unwrap();
    let cfg = SimConfig::default_grid();
    let (mut exact, mut flagged, mut failures) = (0usize, 0usize, Vec::new());
    for (tid, target) in cfg.targets().into_iter().enumerate() {
        let ms = measure_trajectory(target, &t, &channel, &mut ChaCha8Rng::seed_from_u64(tid as u64)).unwrap();
        for mode in ReferenceMode::ALL {
            for alg in Algorithm::ALL {
                let mut selector = Selector::new(alg);
                for n in alg.warmup()..=t.len() {
                    let seen = &ms[..n];
                    let anchors = selector.select(n, Some(&plan), seen, &t, mode).unwrap();
                    let ground: Vec<[f64; 2]> = anchors.upsilon().iter().map(|&i| t.position(i).ground()).collect();
                    let collinear = ground_collinear(&ground);
                    let est = localize_set(anchors, seen, &t, n);
                    let ok = match (collinear, est.is_valid()) {
                        (true, false) => {
                            flagged += 1;
                            true
                        }
                        (false, true) if est.location.distance(target) < 1e-6 => {
                            exact += 1;
                            true
                        }
                        _ => false,
                    };
                    if !ok && failures.len() < 5 {
                        failures.push(format!("{alg}/{mode} target {tid} n={n} collinear={collinear} valid={}", est.is_valid()));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        failures.is_empty() && within(elapsed, 10.0),
        format!("{exact} exact, {flagged} collinear sets flagged invalid, failures {failures:?}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn solver_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut worst) = (0usize, 0.0f64);
    while checked < 1000 {
        let rows = rng.random_range(3..=40);
        let planar = checked % 2 == 1;
        let a: Vec<[f64; 3]> = (0..rows)
            .map(|_| {
                let z = if planar { 0.0 } else { rng.random_range(-1.0..1.0) };
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), z]
            })
            .collect();
        let b: Vec<f64> = (0..rows).map(|_| rng.random_range(-10.0..10.0)).collect();
        let m = DMatrix::from_fn(rows, 3, |r, c| a[r][c]);
        let svd = m.clone().svd(true, true);
        let sv = &svd.singular_values;
        let nonzero: Vec<f64> = sv.iter().copied().filter(|&s| s > 1e-12).collect();
        let cond = nonzero.iter().copied().fold(0.0, f64::max) / nonzero.iter().copied().fold(f64::INFINITY, f64::min);
        if cond > 1e3 {
            continue;
        }
        let reference = svd.solve(&DVector::from_vec(b.clone()), 1e-12).unwrap();
        let got = solve(&LinearSystem { a, b }).location;
        let diff = ((got.x - reference[0]).powi(2) + (got.y - reference[1]).powi(2) + (got.z - reference[2]).powi(2)).sqrt();
        worst = worst.max(diff / reference.norm().max(f64::MIN_POSITIVE));
        checked += 1;
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-8 && within(elapsed, 5.0),
        format!("{checked} systems, worst relative error {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Extreme points by testing every ordered pair as a candidate edge; duplicates map to their first index.
fn brute_force_hull(points: &[[f64; 2]]) -> Vec<usize> {
    let n = points.len();
    let mut vertices = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if points[i] == points[j] {
                continue;
            }
            let is_edge = (0..n).all(|k| {
                let c = cross(points[i], points[j], points[k]);
                if c != 0.0 {
                    return c > 0.0;
                }
                let seg = [points[j][0] - points[i][0], points[j][1] - points[i][1]];
                let t = (points[k][0] - points[i][0]) * seg[0] + (points[k][1] - points[i][1]) * seg[1];
                (0.0..=seg[0] * seg[0] + seg[1] * seg[1]).contains(&t)
            });
            if is_edge {
                vertices.push(points.iter().position(|p| *p == points[i]).unwrap());
                vertices.push(points.iter().position(|p| *p == points[j]).unwrap());
            }
        }
    }
    vertices.sort_unstable();
    vertices.dedup();
    vertices.into_iter().map(|k| k + 1).collect()
}

fn hull_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut polygons, mut degenerate, mut failures) = (0usize, 0usize, Vec::new());
    for case in 0..500 {
        let n = rng.random_range(3..=50);
        let points: Vec<[f64; 2]> = match case % 10 {
            // exactly collinear, possibly with repeats
            0 | 1 => {
                let (ox, oy) = (rng.random_range(-20..20) as f64, rng.random_range(-20..20) as f64);
                let (dx, dy) = (rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64);
                (0..n).map(|_| {
                    let s = rng.random_range(-10..=10) as f64;
                    [ox + s * dx, oy + s * dy]
                })
                .collect()
            }
            // coarse integer lattice: many duplicates and edge points
            2..=6 => (0..n).map(|_| [rng.random_range(0..8) as f64, rng.random_range(0..8) as f64]).collect(),
            _ => (0..n).map(|_| [rng.random_range(-500..500) as f64, rng.random_range(-500..500) as f64]).collect(),
        };
        let expected_collinear = {
            let p0 = points[0];
            match points.iter().find(|p| **p != p0) {
                None => true,
                Some(&p1) => points.iter().all(|&p| cross(p0, p1, p) == 0.0),
            }
        };
        let got = chlm_from_points(&points).unwrap();
        let ok = if expected_collinear {
            degenerate += 1;
            got.vertices.is_none() && got.upsilon == select_fml(n).unwrap()
        } else {
            polygons += 1;
            let expected = brute_force_hull(&points);
            let verts = got.vertices.clone();
            verts.as_deref() == Some(expected.as_slice())
                && (3..=5).contains(&got.upsilon.len())
                && got.upsilon.iter().all(|u| expected.contains(u))
                && (expected.len() > 5 || {
                    let mut u = got.upsilon.clone();
                    u.sort_unstable();
                    u == expected
                })
        };
        if !ok && failures.len() < 3 {
            failures.push(format!("case {case} n={n} got {got:?}"));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        failures.is_empty() && within(elapsed, 10.0),
        format!("{polygons} polygons, {degenerate} collinear sets, failures {failures:?}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn fml_fmlm_formulas() -> Verdict {
    let t = track();
    let fml_ok = select_fml(121).unwrap() == vec![1, 61, 121];
    let mut mismatches = Vec::new();
    for n in 3..=t.len() {
        let p1 = t.position(1);
        let pn = t.position(n);
        let mut best_m = 2;
        let mut best = f64::NEG_INFINITY;
        for m in 2..n {
            let pm = t.position(m);
            let s = p1.distance(pm) + pm.distance(pn);
            if m == 2 || s > best + 1e-9 * best.max(1.0) {
                best = s;
                best_m = m;
            }
        }
        let got = select_fmlm(n, &t).unwrap();
        if got != vec![1, best_m, n] {
            mismatches.push((n, got, best_m));
        }
    }
    verdict(fml_ok && mismatches.is_empty(), format!("FML(121) ok={fml_ok}, FMLM mismatches over N<=121: {mismatches:?}"))
}

#[derive(Debug, Default)]
struct RankTally {
    a: usize,
    b: usize,
    c: usize,
    d: usize,
}

fn rank_order() -> Verdict {
    let start = Instant::now();
    let mut tally = RankTally::default();
    let mut lines = Vec::new();
    for seed in 1..=10u64 {
        let cfg = SimConfig { seed, trials: 100, sigma_db: 3.0, reference_mode: Some(ModeChoice::Drl), ..SimConfig::default_grid() };
        let report = run_target_grid(&cfg).unwrap();
        let get = |a: Algorithm| &report.result(a, ReferenceMode::Dynamic).unwrap().metrics;
        let acc = |a: Algorithm| get(a).long_term_rmse.unwrap_or(f64::INFINITY);
        let dist = |a: Algorithm| get(a).min_flight_distance;
        let gamma = |a: Algorithm| get(a).reliability.unwrap_or(0.0);

        let cls = acc(Algorithm::Cls);
        let a = Algorithm::ALL.iter().all(|&x| x == Algorithm::Cls || cls < acc(x)) && cls < 5.0;
        let cum = dist(Algorithm::Cum);
        let b = cum.is_some_and(|c| {
            (900.0..=1500.0).contains(&c)
                && Algorithm::ALL.iter().all(|&x| x == Algorithm::Cum || dist(x).is_none_or(|d| c <= d))
        });
        let c = dist(Algorithm::Con).is_none()
            && dist(Algorithm::ConI).is_none()
            && [Algorithm::ConII, Algorithm::Cum, Algorithm::Fml, Algorithm::Chlm].iter().all(|&x| dist(x).is_some());
        let g = |x| gamma(x);
        let d = g(Algorithm::Con) >= g(Algorithm::Cum)
            && g(Algorithm::Cum) == g(Algorithm::Chlm)
            && g(Algorithm::Chlm) >= g(Algorithm::Fml)
            && g(Algorithm::Chlm) >= g(Algorithm::Cls);
        tally.a += a as usize;
        tally.b += b as usize;
        tally.c += c as usize;
        tally.d += d as usize;
        let row: Vec<String> = Algorithm::ALL
            .iter()
            .map(|&x| {
                let m = get(x);
                format!(
                    "{x}: acc={} dist={} gamma={}",
                    m.long_term_rmse.map_or("-".into(), |v| format!("{v:.1}")),
                    m.min_flight_distance.map_or("-".into(), |v| format!("{v:.0}")),
                    m.reliability.map_or("-".into(), |v| format!("{v:.3}")),
                )
            })
            .collect();
        lines.push(format!("      seed {seed:>2}: {}", row.join("; ")));
    }
    let elapsed = start.elapsed();
    for l in &lines {
        println!("{l}");
    }
    let pass = tally.a >= 8 && tally.b >= 8 && tally.c >= 8 && tally.d >= 8 && within(elapsed, 300.0);
    verdict(
        pass,
        format!("seeds passing (a) {}/10 (b) {}/10 (c) {}/10 (d) {}/10, {:.1} s", tally.a, tally.b, tally.c, tally.d, elapsed.as_secs_f64()),
    )
}

fn srl_vs_drl() -> Verdict {
    let mut wins = [0usize; 2];
    let algs = [Algorithm::Cum, Algorithm::Chlm];
    for seed in 1..=20u64 {
        let cfg = SimConfig { seed, algorithms: algs.to_vec(), reference_mode: Some(ModeChoice::Both), ..SimConfig::default() };
        let report = run_fixed_target(&cfg).unwrap();
        for (k, &alg) in algs.iter().enumerate() {
            let lt = |mode| report.result(alg, mode).unwrap().metrics.long_term_rmse.unwrap_or(f64::INFINITY);
            if lt(ReferenceMode::Dynamic) <= lt(ReferenceMode::Static) + 2.0 {
                wins[k] += 1;
            }
        }
    }
    verdict(wins.iter().all(|&w| w >= 14), format!("DRL <= SRL + 2 m on CUM {}/20, CHLM {}/20 seeds (need 14)", wins[0], wins[1]))
}

fn series(values: &[f64]) -> Vec<RmsePoint<f64>> {
    values.iter().enumerate().map(|(k, &rmse)| RmsePoint { index: k + 1, rmse, valid: 1, invalid: 0 }).collect()
}

fn metric_units() -> Verdict {
    let t = track();
    let mut checks = Vec::new();
    // below 20 at i=5..8, back above at i=9, below from i=10 on
    let mut v = vec![30.0; 12];
    for (i, x) in v.iter_mut().enumerate().skip(4) {
        *x = if i == 8 { 25.0 } else { 10.0 };
    }
    checks.push(("re-crossing disqualifies", min_flight_distance(&series(&v), &t, 20.0) == Some(270.0)));
    checks.push(("never below theta", min_flight_distance(&series(&[30.0, 25.0, 21.0]), &t, 20.0).is_none()));
    let r = reliability(&series(&[10.0, 12.0, 11.0, 13.0]), 1.0).unwrap();
    checks.push(("[10,12,11,13] -> 2, 0.5", r.violations == 2 && r.gamma == 0.5));
    let r = reliability(&series(&[10.0, 10.5]), 1.0).unwrap();
    checks.push(("[10,10.5] -> 0, 1", r.violations == 0 && r.gamma == 1.0));
    let r = reliability(&series(&[5.0, 4.0, 3.0, 2.0]), 1.0).unwrap();
    checks.push(("decreasing -> 1", r.violations == 0 && r.gamma == 1.0));
    checks.push(("short series rejected", reliability(&series(&[1.0]), 1.0).is_err()));
    let cdf = long_term_cdf(&[3.0, 1.0, 4.0, 2.0]).unwrap();
    checks.push(("[1,2,3,4] steps", cdf == vec![(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sample: Vec<f64> = (0..500).map(|_| rng.random_range(0.0..50.0f64).floor()).collect();
    let cdf = long_term_cdf(&sample).unwrap();
    let monotone = cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
    checks.push(("random CDF monotone, ends at 1", monotone && cdf.last().unwrap().1 == 1.0));
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    verdict(failed.is_empty(), format!("{} checks, failed {failed:?}", checks.len()))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("grid.toml");
    std::fs::write(&config, "target = \"grid\"\ngrid_n = 3\ntrials = 6\nseed = 11\ntrace = true\ntrial_log = true\nreference_mode = \"both\"\n").unwrap();
    let mut runs = Vec::new();
    for (k, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("out{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_sssl"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        runs.push(read_dir_bytes(&out));
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    verdict(same && names.len() >= 7, format!("3 runs (1 and 4 worker threads), files {names:?}, identical={same}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 noiseless exactness", noiseless_exactness),
        ("2 solver oracle", solver_oracle),
        ("3 hull oracle", hull_oracle),
        ("4 FML/FMLM formulas", fml_fmlm_formulas),
        ("5 rank order at 3 dB", rank_order),
        ("6 SRL vs DRL", srl_vs_drl),
        ("7 metric units", metric_units),
        ("8 determinism", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let v = check();
        println!("[{}] criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
