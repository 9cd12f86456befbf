//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use kwik_core::harness::*;
use kwik_core::kwik_lr::{compute_alpha0, KwikLrLearner, KwikParams, Prediction};
use kwik_core::planning::{value_iteration, ViConfig};
use kwik_core::schema::*;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Maps `f` over `0..n` on scoped threads, keeping the order.
fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism().map_or(4, |p| p.get()).min(n.max(1));
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let f = &f;
        let chunks: Vec<_> = out.chunks_mut(n.div_ceil(workers).max(1)).enumerate().collect();
        let size = n.div_ceil(workers).max(1);
        for (c, chunk) in chunks {
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(f(c * size + i));
                }
            });
        }
    });
    out.into_iter().map(Option::unwrap).collect()
}

fn unit_ball(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

struct Stream {
    n: usize,
    data: Vec<(Vec<f64>, f64)>,
    queries: Vec<Vec<f64>>,
}

fn ridge_streams() -> Vec<Stream> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let len = rng.gen_range(1..=200);
            let theta = unit_ball(&mut rng, n);
            let data = (0..len)
                .map(|_| {
                    let x = unit_ball(&mut rng, n);
                    let z = x.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(-0.1..0.1);
                    (x, z)
                })
                .collect();
            let queries = (0..len).map(|_| unit_ball(&mut rng, n)).collect();
            Stream { n, data, queries }
        })
        .collect()
}

fn ridge_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst_q = 0.0f64;
    let mut worst_pred = 0.0f64;
    let mut known = 0usize;
    for st in ridge_streams() {
        let n = st.n;
        let mut l = KwikLrLearner::new(n, 0.3).unwrap();
        let mut a = DMatrix::<f64>::identity(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for ((x, z), query) in st.data.iter().zip(&st.queries) {
            let v = DVector::from_column_slice(x);
            a += &v * v.transpose();
            b += &v * *z;
            l.update(x, *z).unwrap();
            let q = a.clone().try_inverse().unwrap();
            let theta = &q * &b;
            for i in 0..n {
                for j in 0..n {
                    worst_q = worst_q.max((l.q_entry(i, j) - q[(i, j)]).abs());
                }
            }
            if let Prediction::Known(p) = l.predict(query).unwrap() {
                known += 1;
                let exact = DVector::from_column_slice(query).dot(&theta);
                worst_pred = worst_pred.max((p - exact).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst_q <= 1e-9 && worst_pred <= 1e-9 && known > 0 && elapsed < Duration::from_secs(10),
        format!("max |ΔQ| {worst_q:.2e}, max |Δŷ| {worst_pred:.2e} over {known} Known predictions, {elapsed:.2?}"),
    )
}

fn trace_inequality() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for st in ridge_streams() {
        let mut l = KwikLrLearner::new(st.n, 0.3).unwrap();
        for (x, z) in &st.data {
            let qx = DMatrix::from_row_slice(st.n, st.n, l.q()) * DVector::from_column_slice(x);
            let before = l.trace();
            l.update(x, *z).unwrap();
            // slack of the inequality; must stay <= 1e-12
            worst = worst.max((l.trace() - before) + qx.norm_squared() / 2.0);
            steps += 1;
        }
    }
    check(worst <= 1e-12, format!("max slack {worst:.2e} over {steps} updates"))
}

fn bottom_bound() -> Outcome {
    let (n, alpha0) = (4, 0.3);
    let bound = 2.0 * n as f64 / (alpha0 * alpha0);
    // Adversary: always query the top eigenvector of Q, the direction with
    // the largest ‖Qx‖, until even that one is Known.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut l = KwikLrLearner::new(n, alpha0).unwrap();
    loop {
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, l.q()));
        let top = eig.eigenvalues.imax();
        let x: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x: Vec<f64> = x.iter().map(|v| v / norm * (1.0 - 1e-12)).collect();
        if l.predict(&x).unwrap().is_known() {
            break;
        }
        l.update(&x, rng.gen_range(-1.0..1.0)).unwrap();
    }
    let adversarial = l.bottom_count();
    let mut worst_random = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut l = KwikLrLearner::new(n, alpha0).unwrap();
        for _ in 0..5000 {
            let x = unit_ball(&mut rng, n);
            if l.predict(&x).unwrap() == Prediction::Unknown {
                l.update(&x, rng.gen_range(-1.0..1.0)).unwrap();
            }
        }
        worst_random = worst_random.max(l.bottom_count());
    }
    check(
        adversarial <= 88 && (adversarial as f64) < bound && worst_random <= 88,
        format!("adversarial ⊥ = {adversarial}, worst of 50 random = {worst_random}, bound {bound:.1}"),
    )
}

fn kwik_accuracy() -> Outcome {
    let start = Instant::now();
    let (n, m, s, eps, delta) = (3, 1.0, 0.5, 0.5, 0.1);
    let alpha0 = compute_alpha0(&KwikParams::new(eps, delta, m, s).unwrap()).unwrap();
    let runs = 200;
    let failed: usize = par_map(runs, |run| {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + run as u64);
        let theta: Vec<f64> = unit_ball(&mut rng, n).iter().map(|v| v * m).collect();
        let mut l = KwikLrLearner::new(n, alpha0).unwrap();
        let mut bad = false;
        for _ in 0..2000 {
            let x = unit_ball(&mut rng, n);
            let truth: f64 = x.iter().zip(&theta).map(|(a, b)| a * b).sum();
            match l.predict(&x).unwrap() {
                Prediction::Known(y) => bad |= (y - truth).abs() > eps,
                Prediction::Unknown => l.update(&x, truth + rng.gen_range(-s..=s)).unwrap(),
            }
        }
        usize::from(bad)
    })
    .into_iter()
    .sum();
    let frac = failed as f64 / runs as f64;
    let elapsed = start.elapsed();
    check(
        frac <= 0.15 && elapsed < Duration::from_secs(120),
        format!("α₀ = {alpha0:.4}, {failed}/{runs} runs with a Known error > ε ({frac:.3}), {elapsed:.2?}"),
    )
}

/// α₀ for the probability-accuracy criteria: the threshold rule with ε equal
/// to the 0.05 tolerance, δ = 0.1 and ‖p‖ ≤ 1. The speed criteria keep the
/// 0.2 default.
fn accuracy_alpha0() -> f64 {
    compute_alpha0(&KwikParams::new(0.05, 0.1, 1.0, 1.0).unwrap()).unwrap()
}

struct Accuracy {
    worst: f64,
    known: usize,
    /// Worst error per (action, wall configuration) for the maze.
    by_group: BTreeMap<String, (f64, usize)>,
}

fn schema_accuracy(domain: DomainId, trials: usize) -> Vec<Accuracy> {
    let cfg = ExperimentConfig {
        episodes: 1000,
        trials,
        alpha0: Some(accuracy_alpha0()),
        ..ExperimentConfig::new(domain, AlgorithmId::Alg3Kwik)
    };
    let model = schema_model(&cfg).unwrap();
    let maze = (domain == DomainId::Maze).then(make_maze);
    par_map(trials, |trial| {
        let (_, agent) = schema_trial(&cfg, &model, trial).unwrap();
        let preds = agent.predictions().unwrap();
        let mut acc = Accuracy {
            worst: 0.0,
            known: 0,
            by_group: BTreeMap::new(),
        };
        for s in 0..model.n_states() {
            for a in 0..model.n_actions() {
                let Some(classes) = model.classes(s, a) else { continue };
                let row = preds[s * model.n_actions() + a].as_ref().unwrap();
                for (c, p) in classes.iter().zip(row) {
                    let Some(v) = p.value() else { continue };
                    let err = (v - c.true_prob).abs();
                    acc.worst = acc.worst.max(err);
                    acc.known += 1;
                    if let Some(maze) = &maze {
                        let label = model.state_label(s);
                        let (x, y) = parse_xy(label);
                        let walls = maze.grid().wall_configuration(x as i64, y as i64);
                        let key = format!("{} walls {:?}", model.action_name(a), walls);
                        let e = acc.by_group.entry(key).or_insert((0.0, 0));
                        e.0 = e.0.max(err);
                        e.1 += 1;
                    }
                }
            }
        }
        acc
    })
}

fn parse_xy(label: &str) -> (usize, usize) {
    // agent{x=3,y=1}
    let nums: Vec<usize> = label
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().unwrap())
        .collect();
    (nums[0], nums[1])
}

fn paint_polish_accuracy() -> Outcome {
    let runs = schema_accuracy(DomainId::PaintPolish, 10);
    let worst = runs.iter().map(|r| r.worst).fold(0.0, f64::max);
    let min_known = runs.iter().map(|r| r.known).min().unwrap();
    check(
        worst <= 0.05 && min_known > 0,
        format!("α₀ = {:.2e}, 10 trials × 1000 episodes: max error {worst:.4}, ≥ {min_known} Known classes per trial", accuracy_alpha0()),
    )
}

/// Paired cumulative steps over the first 20 episodes, KWIK vs Partition.
fn paired_speed(domain: DomainId) -> (usize, usize, f64, f64) {
    let reps = 100;
    let totals = |alg| {
        let cfg = ExperimentConfig {
            episodes: 20,
            trials: reps,
            seed: 1,
            ..ExperimentConfig::new(domain, alg)
        };
        let log = run_experiment(&cfg).unwrap();
        (0..reps)
            .map(|t| log.trial(t).map(|r| r.metric).sum::<f64>())
            .collect::<Vec<f64>>()
    };
    let kwik = totals(AlgorithmId::Alg3Kwik);
    let part = totals(AlgorithmId::Partition);
    let wins = kwik.iter().zip(&part).filter(|(k, p)| k < p).count();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (wins, reps, mean(&kwik), mean(&part))
}

fn paint_polish_speed() -> Outcome {
    let (wins, reps, k, p) = paired_speed(DomainId::PaintPolish);
    check(
        wins * 10 >= reps * 9,
        format!("alg3_kwik faster than partition in {wins}/{reps} paired repetitions (mean steps {k:.1} vs {p:.1})"),
    )
}

fn maze_accuracy_and_speed() -> Outcome {
    let runs = schema_accuracy(DomainId::Maze, 10);
    let worst = runs.iter().map(|r| r.worst).fold(0.0, f64::max);
    let mut groups: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in &runs {
        for (k, (e, n)) in &r.by_group {
            let g = groups.entry(k.clone()).or_insert((0.0, 0));
            g.0 = g.0.max(*e);
            g.1 += n;
        }
    }
    let worst_group = groups
        .iter()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(k, v)| format!("{k}: {:.4}", v.0))
        .unwrap_or_default();
    let (wins, reps, k, p) = paired_speed(DomainId::Maze);
    check(
        worst <= 0.05 && !groups.is_empty() && wins * 10 >= reps * 9,
        format!(
            "max error {worst:.4} over {} (action, wall configuration) groups (worst {worst_group}); faster in {wins}/{reps} (mean steps {k:.1} vs {p:.1})",
            groups.len()
        ),
    )
}

fn stocks() -> Outcome {
    let run = |alg| run_experiment(&ExperimentConfig::new(DomainId::Stocks, alg)).unwrap();
    let cfg = ExperimentConfig::default();
    let (trials, steps) = (cfg.trials, cfg.steps);
    let finals = |log: &RunLog| -> Vec<f64> {
        (0..trials)
            .map(|t| log.trial(t).last().unwrap().policy_value.unwrap())
            .collect()
    };
    let first_crossing = |log: &RunLog| -> f64 {
        let total: usize = (0..trials)
            .map(|t| {
                log.trial(t)
                    .find(|r| r.policy_value.unwrap() >= 0.95)
                    .map_or(steps + 1, |r| r.index)
            })
            .sum();
        total as f64 / trials as f64
    };
    let alg2 = run(AlgorithmId::Alg2);
    let plain = run(AlgorithmId::LrPlain);
    let tabular = run(AlgorithmId::Tabular);
    let f2 = finals(&alg2);
    let fp = finals(&plain);
    let mean_final = f2.iter().sum::<f64>() / trials as f64;
    let beats = f2.iter().zip(&fp).filter(|(a, b)| a > b).count();
    let (c2, ct) = (first_crossing(&alg2), first_crossing(&tabular));
    check(
        mean_final >= 0.95 && beats * 10 >= trials * 9 && ct > c2,
        format!(
            "mean final ratio {mean_final:.3}; beats lr_plain in {beats}/{trials}; mean first 95% step alg2 {c2:.1} vs tabular {ct:.1} (censored at {})",
            steps + 1
        ),
    )
}

fn optimistic_vi_reduction() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, model) in [
        ("paint_polish", SchemaModel::compile(&make_paint_polish()).unwrap()),
        ("maze", SchemaModel::compile(&make_maze()).unwrap()),
    ] {
        let preds: RowPredictions = (0..model.n_states())
            .flat_map(|s| (0..model.n_actions()).map(move |a| (s, a)))
            .map(|(s, a)| {
                model
                    .classes(s, a)
                    .map(|cl| cl.iter().map(|c| Prediction::Known(c.true_prob)).collect())
            })
            .collect();
        let cfg = ViConfig {
            gamma: 0.95,
            tol: 1e-8,
            max_iter: 100_000,
        };
        let opt = optimistic_value_iteration(&model, &preds, &cfg, None).unwrap();
        let exact = value_iteration(&model.true_mdp(), &cfg, None).unwrap();
        let diff = opt
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let same_policy = opt.policy == exact.policy;
        ok &= diff <= cfg.tol && same_policy;
        details.push(format!("{name}: max |ΔV| {diff:.1e}, identical policy {same_policy}"));
    }
    check(ok, details.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut checked = 0;
    for domain in DomainId::ALL {
        for &alg in domain.algorithms() {
            let cfg = ExperimentConfig {
                trials: 4,
                steps: 60,
                episodes: 10,
                seed: 99,
                ..ExperimentConfig::new(domain, alg)
            };
            let bytes = |i: usize, exec| {
                let path = dir.path().join(format!("{domain}_{alg}_{i}.csv"));
                write_log_csv(&path, &run_experiment_with(&cfg, exec).unwrap()).unwrap();
                std::fs::read(path).unwrap()
            };
            let a = bytes(0, Execution::default());
            let b = bytes(1, Execution::default());
            let c = bytes(2, Execution::Sequential);
            if a != b || a != c {
                return Err(format!("{domain} {alg}: CSV differs between runs"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} domain/algorithm configs byte-identical across reruns and execution modes"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("ridge-oracle equivalence", ridge_oracle),
        ("trace inequality", trace_inequality),
        ("⊥ bound", bottom_bound),
        ("KWIK accuracy", kwik_accuracy),
        ("Paint/Polish probabilities", paint_polish_accuracy),
        ("Paint/Polish learning speed", paint_polish_speed),
        ("Maze probabilities and speed", maze_accuracy_and_speed),
        ("Stocks reward learning", stocks),
        ("optimistic-VI reduction", optimistic_vi_reduction),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

