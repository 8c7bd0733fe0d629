//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use drcert::advscore::{activation_score, mlp_score, ActivationKind, GammaKind, MlpHead};
use drcert::certificates::{certificate_report, p_ordering_check, PreparedProfile};
use drcert::complexity::{arc_rc_gap_bound, calculus_fixtures, complexity_calculus_checks, LinearHingeClass, OuterLoss, DEFAULT_DRAWS};
use drcert::curves::{grid_with_budgets, log_grid, least_concave_majorant, StarCurve};
use drcert::nn::{Activation, Head, Mlp};
use drcert::oracle::{dr_risk_exact, line_instance};
use drcert::rates::{estimate_rate_at, finite_support_profile, maximal_rate, LossKind, LossSpec, RateProfile, SearchConfig};
use drcert::{CostConfig, Curve, DataPoint, Norm, Order};
use drcert_cli::experiments::{oracle_self_check, sphere_sample, BUDGET_HEADER};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn orders() -> Vec<Order> {
    [1.0, 1.5, 2.0, 4.0].iter().map(|&p| Order::new(p).unwrap()).chain([Order::INFINITY]).collect()
}

fn random_atoms(rng: &mut ChaCha8Rng, support: usize, max_count: usize) -> Vec<(usize, f64)> {
    let count = rng.random_range(1..=max_count.min(support));
    let mut idx: Vec<usize> = (0..support).collect();
    for k in 0..count {
        let j = rng.random_range(k..support);
        idx.swap(k, j);
    }
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    idx.into_iter().take(count).zip(raw.into_iter().map(|w| w / total)).collect()
}

/// Loss values on a uniform 1-D grid of up to 101 points.
fn line_fixture(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<(usize, f64)>) {
    let n = rng.random_range(2..=101);
    let points: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let (a, b, c) = (rng.random_range(-3.0..3.0), rng.random_range(0.0..8.0), rng.random_range(0.0..1.0));
    let loss = points.iter().map(|z| (a * z).abs() + c * (b * z).sin() + rng.random_range(0.0..0.3)).collect();
    let atoms = random_atoms(rng, n, 5);
    (points, loss, atoms)
}

fn sandwich() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let instances = 240;
    let (mut checks, mut violations, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    for _ in 0..instances {
        let (points, loss, atoms) = line_fixture(&mut rng);
        let base = line_instance(&points, &loss, atoms.clone(), Order::ONE, 0.0);
        let profile = finite_support_profile(&loss, &atoms, &base.cost).map_err(|e| e.to_string())?;
        let risk = base.empirical_risk();
        for p in [Order::ONE, Order::new(2.0).unwrap(), Order::INFINITY] {
            let prepared = PreparedProfile::new(&profile, p).map_err(|e| e.to_string())?;
            for k in 1..=8 {
                let eps = 0.08 * k as f64;
                let exact = dr_risk_exact(&base.with_order(p).with_eps(eps)).map_err(|e| e.to_string())?.value;
                let low = risk + prepared.lower(eps) - exact;
                let high = exact - risk - prepared.upper(eps);
                worst = worst.max(low).max(high);
                checks += 1;
                if low > 1e-6 || high > 1e-6 {
                    violations += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        violations == 0 && elapsed < Duration::from_secs(60),
        format!("{instances} instances, {checks} checks, {violations} violations, worst excess {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn regression_sample(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Vec<DataPoint> {
    (0..n)
        .map(|_| DataPoint::regression((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(), rng.random_range(-3.0..3.0)))
        .collect()
}

fn power_profile(alpha: f64, theta: Vec<f64>, cost: CostConfig, data: &[DataPoint], eps: &[f64]) -> Result<RateProfile, String> {
    let loss = LossSpec::new(LossKind::LinearPowerRegression { alpha, theta }, cost).map_err(|e| e.to_string())?;
    let horizon = 2.0 * eps.iter().copied().fold(0.0, f64::max);
    maximal_rate(&loss, data, &grid_with_budgets(horizon, eps), &SearchConfig::default()).map_err(|e| e.to_string())
}

fn tightness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let dim = rng.random_range(1..=5);
        let norm = Norm::ALL[trial % 3];
        let theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let eps: Vec<f64> = {
            let mut e: Vec<f64> = (0..4).map(|_| rng.random_range(1e-3..1.0)).collect();
            e.sort_by(f64::total_cmp);
            e
        };
        let n = rng.random_range(1..=20);
        let data = regression_sample(&mut rng, dim, n);
        let profile = power_profile(1.0, theta.clone(), CostConfig::features_only(norm), &data, &eps)?;
        let report = certificate_report(&profile, Order::ONE, &eps, 0.0, &[]).map_err(|e| e.to_string())?;
        let gain = norm.dual().of(&theta);
        for (k, &e) in eps.iter().enumerate() {
            worst = worst.max((report.lb[k] - e * gain).abs()).max((report.cc[k] - e * gain).abs());
        }
    }
    check(worst < 1e-9, format!("100 random (θ, ε) sets; max |bound − ε‖θ‖_*| = {worst:.2e}"))
}

fn small_mlp(rng: &mut ChaCha8Rng, input: usize, output: usize, head: Head, smooth_only: bool) -> Mlp {
    let depth = rng.random_range(1..=3);
    let choices: &[Activation] =
        if smooth_only { &[Activation::Tanh, Activation::Sigmoid] } else { &[Activation::Tanh, Activation::Sigmoid, Activation::ReLU] };
    let mut sizes = vec![input];
    let mut acts = Vec::new();
    for _ in 1..depth {
        sizes.push(rng.random_range(1..=8));
        acts.push(choices[rng.random_range(0..choices.len())]);
    }
    sizes.push(output);
    acts.push(Activation::Identity);
    Mlp::random(&sizes, &acts, head, rng).unwrap()
}

fn p_dynamics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = [0.02, 0.1, 0.3, 0.7];
    let mut profiles: Vec<(String, RateProfile)> = Vec::new();
    for (k, alpha) in [0.5, 1.0, 1.5, 2.0, 3.0].into_iter().enumerate() {
        let data = regression_sample(&mut rng, 3, 8);
        let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let cost = if k % 2 == 0 { CostConfig::features_only(Norm::ALL[k % 3]) } else { CostConfig::new(Norm::L2, 2.0).unwrap() };
        profiles.push((format!("power α={alpha}"), power_profile(alpha, theta, cost, &data, &eps)?));
    }
    for k in 0..20 {
        let (points, loss, atoms) = line_fixture(&mut rng);
        let inst = line_instance(&points, &loss, atoms.clone(), Order::ONE, 0.0);
        profiles.push((format!("finite support #{k}"), finite_support_profile(&loss, &atoms, &inst.cost).map_err(|e| e.to_string())?));
    }
    for k in 0..3 {
        let net = small_mlp(&mut rng, 2, 3, Head::LogSoftmaxInner, false);
        let data: Vec<DataPoint> = (0..4)
            .map(|i| DataPoint::new(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], (0..3).map(|c| if c == i % 3 { 1.0 } else { 0.0 }).collect()))
            .collect();
        let loss = LossSpec::new(LossKind::MlpClassification(net), CostConfig::features_only(Norm::L2)).map_err(|e| e.to_string())?;
        let search = SearchConfig { steps: 40, starts: 4, boundary_samples: 64, ..SearchConfig::default() };
        let mut grid = log_grid(1.4, 12);
        grid.extend(eps);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        profiles.push((format!("mlp #{k}"), maximal_rate(&loss, &data, &grid, &search).map_err(|e| e.to_string())?));
    }
    let ps = orders();
    let mut violations = Vec::new();
    for (name, profile) in &profiles {
        for &e in &eps {
            let res = p_ordering_check(profile, e, &ps).map_err(|e| e.to_string())?;
            if !res.passed {
                violations.push(format!("{name} at ε={e}: {:?}", res.first_violation));
            }
        }
    }
    check(violations.is_empty(), format!("{} profiles × {} budgets, violations: {}", profiles.len(), eps.len(), if violations.is_empty() { "none".into() } else { violations.join("; ") }))
}

fn finiteness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eps = [0.01, 0.05, 0.1, 0.5, 1.0];
    let data = regression_sample(&mut rng, 2, 10);
    let profile = power_profile(2.0, vec![1.5, -0.5], CostConfig::features_only(Norm::L2), &data, &eps)?;
    let one = certificate_report(&profile, Order::ONE, &eps, 0.0, &[]).map_err(|e| e.to_string())?;
    let two = certificate_report(&profile, Order::new(2.0).unwrap(), &eps, 0.0, &[]).map_err(|e| e.to_string())?;
    let one_inf = !one.finite && one.lb.iter().chain(&one.cc).all(|v| v.is_infinite());
    let two_fin = two.finite && two.lb.iter().chain(&two.cc).all(|v| v.is_finite());
    check(one_inf && two_fin, format!("p=1 all infinite: {one_inf}; p=2 all finite: {two_fin} (cc₂ = {:?})", two.cc))
}

fn monotone_curve(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let n = rng.random_range(1..=64);
    let (mut t, mut v) = (0.0, rng.random_range(0.0..0.5));
    let mut pts = vec![(0.0, v)];
    for _ in 1..n {
        t += rng.random_range(0.001..1.0);
        if rng.random_bool(0.7) {
            v += rng.random_range(0.0..1.0f64).powi(3);
        }
        pts.push((t, v));
    }
    pts
}

fn chord_max(pts: &[(f64, f64)], k: usize) -> f64 {
    let tk = pts[k].0;
    let mut best = pts[k].1;
    for a in &pts[..=k] {
        for b in &pts[k..] {
            if b.0 > a.0 {
                best = best.max(a.1 + (tk - a.0) / (b.0 - a.0) * (b.1 - a.1));
            }
        }
    }
    best
}

fn majorant_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut star_excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..500 {
        let pts = monotone_curve(&mut rng);
        let f = Curve::from_samples(&pts).map_err(|e| e.to_string())?;
        let hull = least_concave_majorant(&f);
        for k in 0..pts.len() {
            worst = worst.max((hull.eval(pts[k].0) - chord_max(&pts, k)).abs());
        }
        let star = StarCurve::new(&f);
        let h = f.horizon().max(1.0);
        for i in 0..=400 {
            let t = 1.25 * h * i as f64 / 400.0;
            star_excess = star_excess.max(star.eval(t) - hull.eval(t));
        }
    }
    check(worst <= 1e-9 && star_excess <= 1e-12, format!("500 curves; max |𝒞 − chord max| = {worst:.2e}; max 𝒮 − 𝒞 = {star_excess:.2e}"))
}

fn one_hot(k: usize, n: usize) -> Vec<f64> {
    (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect()
}

fn score_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eps = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let (mut checks, mut violations, mut tightest) = (0usize, Vec::new(), f64::INFINITY);
    for m in 0..50 {
        let input = rng.random_range(1..=4);
        let norm = Norm::ALL[m % 3];
        let kappa = [f64::INFINITY, 0.5, 4.0][(m / 3) % 3];
        let cost = CostConfig::new(norm, kappa).unwrap();
        let classes = rng.random_range(2..=4);
        let classification = m % 2 == 0;
        let net = if classification { small_mlp(&mut rng, input, classes, Head::LogSoftmaxInner, false) } else { small_mlp(&mut rng, input, 1, Head::AbsDeviation, false) };
        let data: Vec<DataPoint> = (0..20)
            .map(|i| {
                let x: Vec<f64> = (0..input).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = if classification { one_hot(i % classes, classes) } else { vec![rng.random_range(-2.0..2.0)] };
                DataPoint::new(x, y)
            })
            .collect();
        let (kind, head) = if classification {
            let lip = net.lipschitz_product(norm);
            let range = data
                .iter()
                .map(|z| {
                    let o = net.forward(&z.x).unwrap();
                    o.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - o.iter().cloned().fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            let bound = range + (classes as f64).ln() + 2.0 * lip * eps[eps.len() - 1];
            (LossKind::MlpClassification(net.clone()), MlpHead::Classification { output_bound: bound })
        } else {
            let gamma = GammaKind::ABSOLUTE;
            (LossKind::MlpRegression { net: net.clone(), gamma }, MlpHead::Regression { gamma })
        };
        let score = mlp_score(&net, &cost, head).map_err(|e| e.to_string())?;
        let loss = LossSpec::new(kind, cost).map_err(|e| e.to_string())?;
        let search = SearchConfig { seed: m as u64, ..SearchConfig::default() };
        for z in &data {
            for &e in &eps {
                let est = estimate_rate_at(&loss, z, e, &search).map_err(|e| e.to_string())?.value;
                let bound = score.eval(e);
                checks += 1;
                if est > bound * (1.0 + 1e-9) + 1e-12 {
                    violations.push(format!("net {m} ε={e}: Δ̂={est} > score={bound}"));
                }
                if est > 0.0 {
                    tightest = tightest.min(bound / est);
                }
            }
        }
    }
    check(
        violations.is_empty(),
        format!("{checks} (net, point, ε) checks, {} violations, min score/Δ̂ ratio {tightest:.4}{}", violations.len(), violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()),
    )
}

fn saturating_tightness() -> Outcome {
    // Width-one layers carry the margin; wider layers must still be strict.
    let (mut unit, mut wide) = (Vec::new(), Vec::new());
    for (name, kind) in [("sigmoid", ActivationKind::Sigmoid), ("tanh", ActivationKind::Tanh), ("softmax", ActivationKind::Softmax)] {
        for width in [1, 4, 10] {
            for norm in Norm::ALL {
                let s = activation_score(kind, width, norm).map_err(|e| e.to_string())?;
                let margin = (format!("{name}/{width}/{norm}"), s.lipschitz() - s.eval(1.0));
                if width == 1 { unit.push(margin) } else { wide.push(margin) }
            }
        }
    }
    let smallest = |v: &[(String, f64)]| v.iter().cloned().fold((String::new(), f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let (u, w) = (smallest(&unit), smallest(&wide));
    check(
        u.1 > 1e-3 && w.1 > 0.0,
        format!("smallest Lip − F(1): {:.4} at {} over width-one layers, {:.2e} at {} over widths 4 and 10", u.1, u.0, w.1, w.0),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut accepted, mut worst) = (0usize, 0.0f64);
    let h = 1e-6;
    while accepted < 100 {
        let input = rng.random_range(1..=6);
        let classification = rng.random_bool(0.5);
        let classes = if classification { rng.random_range(2..=5) } else { 1 };
        let head = if classification { Head::LogSoftmaxInner } else { Head::AbsDeviation };
        let net = small_mlp(&mut rng, input, classes, head, false);
        let x: Vec<f64> = (0..input).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = if classification { one_hot(rng.random_range(0..classes), classes) } else { vec![rng.random_range(-2.0..2.0)] };
        // Skip points within 1e-3 of a ReLU or absolute-value kink.
        let mut a = nalgebra::DVector::from_vec(x.clone());
        let mut near_kink = false;
        for layer in net.layers() {
            let pre = &layer.weights * &a + &layer.bias;
            if layer.activation == Activation::ReLU && pre.iter().any(|v| v.abs() < 1e-3) {
                near_kink = true;
            }
            a = pre.map(|v| layer.activation.apply(v));
        }
        if !classification && (y[0] - a[0]).abs() < 1e-3 {
            near_kink = true;
        }
        if near_kink {
            continue;
        }
        let z = DataPoint::new(x.clone(), y.clone());
        let (_, g) = net.loss_and_grad_x(&z).map_err(|e| e.to_string())?;
        let fd: Vec<f64> = (0..input)
            .map(|k| {
                let (mut up, mut down) = (x.clone(), x.clone());
                up[k] += h;
                down[k] -= h;
                (net.loss(&DataPoint::new(up, y.clone())).unwrap() - net.loss(&DataPoint::new(down, y.clone())).unwrap()) / (2.0 * h)
            })
            .collect();
        let diff = Norm::L2.distance(&g, &fd);
        let scale = Norm::L2.of(&g).max(Norm::L2.of(&fd)).max(1e-2);
        worst = worst.max(diff / scale);
        accepted += 1;
    }
    check(worst < 1e-5, format!("100 (net, point) pairs; max relative error {worst:.2e}"))
}

fn arc_rc_gap() -> Outcome {
    let eps_grid = [0.02, 0.04, 0.06, 0.08, 0.1];
    let (mut checks, mut failures) = (0usize, Vec::new());
    let mut bounds_by_dim: Vec<Vec<f64>> = Vec::new();
    for (di, &dim) in [16usize, 64, 256].iter().enumerate() {
        let mut bounds = Vec::new();
        for &n in &[25usize, 100, 400] {
            let class = LinearHingeClass { norm: Norm::L2, radius: 1.0, sample: sphere_sample(dim, n, Norm::L2, (di * 1000 + n) as u64) };
            for &e in &eps_grid {
                let est = class.estimate(e, DEFAULT_DRAWS, 9).map_err(|e| e.to_string())?;
                let bound = arc_rc_gap_bound(e * class.radius * class.class_spec().lipschitz, n);
                bounds.push(bound);
                let gap = (est.arc.value - est.rc.value).abs();
                checks += 1;
                if gap > bound + 3.0 * est.gap_std_error {
                    failures.push(format!("n={dim} N={n} ε={e}: gap {gap:.3e} > {bound:.3e} + 3·{:.1e}", est.gap_std_error));
                }
            }
        }
        bounds_by_dim.push(bounds);
    }
    let identical = bounds_by_dim.windows(2).all(|w| w[0] == w[1]);
    check(
        failures.is_empty() && identical,
        format!("{checks} (n, N, ε) cells, {} outside bound + 3 SE; bound identical across n: {identical}{}", failures.len(), failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()),
    )
}

fn calculus() -> Outcome {
    let report = complexity_calculus_checks(
        &calculus_fixtures(10, 8),
        &[OuterLoss::Absolute, OuterLoss::Hinge, OuterLoss::ScaledTanh(2.0)],
        &[0.02, 0.05, 0.1, 0.3, 0.6],
    )
    .map_err(|e| e.to_string())?;
    let mut names: Vec<&str> = report.checks.iter().map(|c| c.property.as_str()).collect();
    names.sort();
    names.dedup();
    let detail = match report.first_violation() {
        None => format!("{} checks over properties [{}] passed", report.checks.len(), names.join(", ")),
        Some(v) => format!("{} failed: {}", v.property, v.detail),
    };
    check(report.passed(), detail)
}

fn oracle_check() -> Outcome {
    let res = oracle_self_check(11, 500).map_err(|e| e.to_string())?;
    check(res.passed, format!("{} instances; max |exact − enumerated| = {:.2e}; W_p ordering failures {}", res.trials, res.max_abs_difference, res.ordering_failures))
}

fn run_binary(args: &[&str]) -> Result<Duration, String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_drcert")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    Ok(start.elapsed())
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> Result<bool, String> {
    for name in names {
        let x = std::fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = std::fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        if x != y {
            return Ok(false);
        }
    }
    Ok(true)
}

fn experiment_smoke() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let mut notes = Vec::new();
    let mut ok = true;

    let (ra, rb) = (path("regress_a"), path("regress_b"));
    let t_reg = run_binary(&["regress", "--data", "synthetic:", "--seed", "7", "--out", &ra])?;
    run_binary(&["regress", "--data", "synthetic:", "--seed", "7", "--out", &rb])?;
    let reg_same = same_files(Path::new(&ra), Path::new(&rb), &["trace.csv", "budgets.csv", "weights.csv"])?;
    let budgets = std::fs::read_to_string(Path::new(&ra).join("budgets.csv")).map_err(|e| e.to_string())?;
    let mut lines = budgets.lines();
    if lines.next() != Some(BUDGET_HEADER) {
        return Err("unexpected budgets.csv header".into());
    }
    let (mut rows, mut bad) = (0usize, Vec::new());
    let mut closest = f64::INFINITY;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect();
        let (eps, lip, adv) = (f[1], f[2], f[4]);
        rows += 1;
        let strict_needed = eps > 0.0;
        if adv > lip || (strict_needed && adv >= lip) || adv.is_nan() {
            bad.push(format!("epoch {} ε={eps}: advscore {adv} vs lipschitz {lip}", f[0]));
        }
        if eps > 0.0 {
            closest = closest.min(1.0 - adv / lip);
        }
    }
    ok &= reg_same && bad.is_empty() && t_reg < Duration::from_secs(120);
    notes.push(format!(
        "regress {:.1}s deterministic {reg_same}, {rows} (epoch, ε) rows, {} with advscore ≥ lipschitz, min relative margin {closest:.2e}",
        t_reg.as_secs_f64(),
        bad.len()
    ));

    let (ca, cb) = (path("classify_a"), path("classify_b"));
    let t_cls = run_binary(&["classify", "--seed", "7", "--out", &ca])?;
    run_binary(&["classify", "--seed", "7", "--out", &cb])?;
    let cls_same = same_files(Path::new(&ca), Path::new(&cb), &["gap_table.csv", "gap_runs.csv", "gap_trend.csv"])?;
    let trend = std::fs::read_to_string(Path::new(&ca).join("gap_trend.csv")).map_err(|e| e.to_string())?;
    let trend_rows: Vec<Vec<String>> = trend.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    let flat = trend_rows.iter().filter(|r| r[3] == "true").count();
    let worst_z = trend_rows
        .iter()
        .map(|r| r[1].parse::<f64>().unwrap_or(f64::NAN).abs() / r[2].parse::<f64>().unwrap_or(f64::NAN))
        .fold(0.0, f64::max);
    ok &= cls_same && flat == trend_rows.len() && !trend_rows.is_empty() && t_cls < Duration::from_secs(120);
    notes.push(format!(
        "classify {:.1}s deterministic {cls_same}, no trend at {flat}/{} budgets (max |slope|/SE {worst_z:.2})",
        t_cls.as_secs_f64(),
        trend_rows.len()
    ));
    if let Some(b) = bad.first() {
        notes.push(format!("first regress violation: {b}"));
    }
    check(ok, notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("sandwich", sandwich),
        ("tightness equality", tightness),
        ("p-dynamics", p_dynamics),
        ("finiteness dichotomy", finiteness),
        ("majorant oracle", majorant_oracle),
        ("score soundness", score_soundness),
        ("saturating tightness", saturating_tightness),
        ("gradient check", gradient_check),
        ("ARC-RC gap", arc_rc_gap),
        ("complexity calculus", calculus),
        ("oracle self-check", oracle_check),
        ("experiment smoke", experiment_smoke),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
