use drcert::curves::{
    is_concave_points, least_concave_majorant, sup_convolution_linear, ConcaveCurve, StarCurve,
};
use drcert::{Curve, Tail};
use proptest::prelude::*;

/// Knots at strictly increasing budgets from 0 with non-decreasing values.
fn monotone_knots(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.01f64..1.0, 0.0f64..1.0), 1..max_len).prop_map(|steps| {
        let (mut t, mut v) = (0.0, 0.0);
        let mut pts = vec![(0.0, 0.0)];
        for (dt, dv) in steps {
            t += dt;
            v += dv * dv;
            pts.push((t, v));
        }
        pts
    })
}

/// Largest chord value over the knot `k`: `max_{i ≤ k ≤ j}` of the segment
/// from knot `i` to knot `j` evaluated at `t_k`.
fn chord_max(pts: &[(f64, f64)], k: usize) -> f64 {
    let tk = pts[k].0;
    let mut best = pts[k].1;
    for i in 0..=k {
        for j in k..pts.len() {
            if i == j {
                continue;
            }
            let (a, b) = (pts[i], pts[j]);
            let w = (tk - a.0) / (b.0 - a.0);
            best = best.max(a.1 + w * (b.1 - a.1));
        }
    }
    best
}

/// `sup_{u ≥ t} t·f(u)/u` over the knots and the step value at `t`.
fn star_brute(f: &Curve, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    f.knots()
        .filter(|(u, _)| *u >= t && *u > 0.0)
        .map(|(u, v)| t * v / u)
        .fold(f.eval_lower(t), f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn concave_majorant_matches_chord_max(pts in monotone_knots(64)) {
        let f = Curve::from_samples(&pts).unwrap();
        let c = least_concave_majorant(&f);
        for k in 0..pts.len() {
            let want = chord_max(&pts, k);
            prop_assert!((c.eval(pts[k].0) - want).abs() <= 1e-9 * want.max(1.0));
        }
        prop_assert!(c.is_concave());
    }

    #[test]
    fn star_majorant_between_curve_and_concave_majorant(pts in monotone_knots(32)) {
        let f = Curve::from_samples(&pts).unwrap();
        let star = StarCurve::new(&f);
        let c = least_concave_majorant(&f);
        let h = f.horizon();
        for i in 0..=200 {
            let t = 1.2 * h * i as f64 / 200.0;
            let s = star.eval(t);
            prop_assert!(s + 1e-12 >= f.eval_lower(t));
            prop_assert!(s <= c.eval(t) + 1e-9);
            prop_assert!((s - star_brute(&f, t)).abs() <= 1e-9 * s.max(1.0));
        }
    }

    #[test]
    fn majorants_are_monotone_in_the_curve(pts in monotone_knots(24), bump in 0.0f64..1.0) {
        let f = Curve::from_samples(&pts).unwrap();
        let raised: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t, v + bump * t)).collect();
        let g = Curve::from_samples(&raised).unwrap();
        let (cf, cg) = (least_concave_majorant(&f), least_concave_majorant(&g));
        let (sf, sg) = (StarCurve::new(&f), StarCurve::new(&g));
        for &(t, _) in &pts {
            prop_assert!(cf.eval(t) <= cg.eval(t) + 1e-9);
            prop_assert!(sf.eval(t) <= sg.eval(t) + 1e-9);
        }
    }

    #[test]
    fn pointwise_max_dominates_each_curve(a in monotone_knots(16), scale in 0.1f64..3.0) {
        let f = Curve::from_samples(&a).unwrap();
        let scaled: Vec<(f64, f64)> = a.iter().map(|&(t, v)| (t, scale * v.sqrt())).collect();
        let g = Curve::from_samples(&scaled).unwrap();
        let m = Curve::pointwise_max(&[f.clone(), g.clone()]).unwrap();
        for (t, v) in m.knots() {
            prop_assert!(v >= f.eval_lower(t) && v >= g.eval_lower(t));
            prop_assert!(v == f.eval_lower(t) || v == g.eval_lower(t));
        }
    }

    #[test]
    fn p_transform_reparametrizes_budgets(pts in monotone_knots(16), p in 1.0f64..4.0) {
        let f = Curve::from_samples(&pts).unwrap();
        let g = f.p_transform(p).unwrap();
        for ((t, v), (s, w)) in f.knots().zip(g.knots()) {
            prop_assert!((s - t.powf(p)).abs() <= 1e-12 * s.max(1.0));
            prop_assert_eq!(v, w);
        }
    }

    #[test]
    fn sup_convolution_of_concave_is_concave(pts in monotone_knots(16), c in 0.0f64..3.0) {
        let f = Curve::from_samples(&pts).unwrap();
        let hull = least_concave_majorant(&f);
        let h = f.horizon();
        let values: Vec<(f64, f64)> = (0..=300)
            .map(|i| {
                let t = 1.5 * h * i as f64 / 300.0;
                (t, sup_convolution_linear(&hull, c, t))
            })
            .collect();
        prop_assert!(is_concave_points(&values));
        for &(t, v) in &values {
            prop_assert!(v + 1e-12 >= hull.eval(t));
        }
    }
}

#[test]
fn majorant_of_concave_curve_is_itself() {
    let pts: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 * 0.1, (i as f64 * 0.1).sqrt())).collect();
    let f = Curve::from_samples(&pts).unwrap();
    let c = least_concave_majorant(&f);
    for &(t, v) in &pts {
        assert!((c.eval(t) - v).abs() < 1e-12);
    }
}

#[test]
fn divergent_tail_has_infinite_majorant() {
    let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, (i * i) as f64)).collect();
    let f = Curve::from_samples(&pts).unwrap().with_tail(Tail::Infinite);
    assert!(least_concave_majorant(&f).is_infinite());
    let tail_free = Curve::from_samples(&pts).unwrap();
    assert!(!least_concave_majorant(&tail_free).is_infinite());
}

#[test]
fn constant_majorant_from_knots() {
    let c = ConcaveCurve::from_knots(&[(0.0, 1.0), (1.0, 1.0)], 0.0).unwrap();
    assert_eq!(c.eval(5.0), 1.0);
}
