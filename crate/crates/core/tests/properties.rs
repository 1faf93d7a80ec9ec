use hyperwalk::config::{ExperimentConfig, Gate};
use hyperwalk::equidist::{loxo_occupation_tree, markov_flow_prediction, tv_distance};
use hyperwalk::estimators::{first_passage_solve, harmonic_kernel, stationarity_residual};
use hyperwalk::mobius::{hyp_distance, HalfPlanePoint, Mobius};
use hyperwalk::model::Model;
use hyperwalk::runner::{run, Command, RunOptions};
use hyperwalk::walk::StepDistribution;
use hyperwalk::word::{translation_length_tree, Letter, ReducedWord};
use hyperwalk::Schottky;
use proptest::prelude::*;

const SCHOTTKY: &str = "
[model]
kind = halfplane
[generators]
a = 3 0 0 1/3 | disk 0 1/3 | outside 0 3
b = 5/3 -4/3 -4/3 5/3 | disk 1.25 0.75 | disk -1.25 0.75
[mu]
uniform
[run]
n = 200
paths = 4
";

fn schottky() -> Schottky {
    match SCHOTTKY.parse::<ExperimentConfig>().unwrap().build_model().unwrap() {
        Model::HalfPlane { group, .. } => group,
        Model::Tree { .. } => unreachable!(),
    }
}

fn arb_word(rank: usize, max_len: usize) -> impl Strategy<Value = ReducedWord> {
    prop::collection::vec(0..2 * rank, 0..max_len)
        .prop_map(|codes| ReducedWord::from_letters(codes.into_iter().map(Letter::from_code)))
}

fn arb_loxo(rank: usize, max_len: usize) -> impl Strategy<Value = ReducedWord> {
    arb_word(rank, max_len).prop_filter("loxodromic", |g| translation_length_tree(g) > 0)
}

/// Nearest-neighbour laws with every letter charged.
fn arb_mu(rank: usize) -> impl Strategy<Value = StepDistribution> {
    prop::collection::vec(0.05..1.0f64, 2 * rank).prop_map(move |w| {
        let total: f64 = w.iter().sum();
        let atoms = w
            .iter()
            .enumerate()
            .map(|(code, x)| (ReducedWord::letter(Letter::from_code(code)), x / total))
            .collect();
        StepDistribution::new(atoms).unwrap()
    })
}

fn arb_map() -> impl Strategy<Value = Mobius<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_filter_map("degenerate", |(a, b, c)| {
            if a.abs() < 0.2 {
                return None;
            }
            Mobius::new(a, b, c, (1.0 + b * c) / a).ok()
        })
}

fn arb_point() -> impl Strategy<Value = HalfPlanePoint<f64>> {
    (-3.0..3.0f64, 0.1..5.0f64).prop_map(|(x, y)| HalfPlanePoint::new(x, y).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_translation_length_is_a_class_function(g in arb_word(3, 12), h in arb_word(3, 8), k in 1i64..5) {
        let c = &(&h * &g) * &h.inverse();
        let l = translation_length_tree(&g);
        prop_assert_eq!(translation_length_tree(&c), l);
        prop_assert_eq!(translation_length_tree(&g.pow(k)), k as usize * l);
        prop_assert_eq!(translation_length_tree(&g.inverse()), l);
    }

    #[test]
    fn plane_translation_length_is_a_class_function(g in arb_loxo(2, 8), h in arb_word(2, 5), k in 1i64..4) {
        let m = Model::half_plane(schottky());
        let l = m.translation_length(&g);
        let c = &(&h * &g) * &h.inverse();
        prop_assert!((m.translation_length(&c) - l).abs() <= 1e-9 * l.max(1.0));
        prop_assert!((m.translation_length(&g.pow(k)) - k as f64 * l).abs() <= 1e-9 * k as f64 * l.max(1.0));
    }

    #[test]
    fn displacement_is_at_least_translation_length(g in arb_word(2, 10)) {
        let m = Model::half_plane(schottky());
        prop_assert!(m.displacement(&g) + 1e-9 >= m.translation_length(&g));
        let t = Model::tree(2).unwrap();
        prop_assert!(t.displacement(&g) >= t.translation_length(&g));
    }

    #[test]
    fn maps_are_isometries(g in arb_map(), h in arb_map(), z in arb_point(), w in arb_point()) {
        let gh = g.compose(&h);
        let d = hyp_distance(z, w);
        prop_assert!((hyp_distance(gh.apply(z), gh.apply(w)) - d).abs() <= 1e-9 * d.max(1.0));
        let back = gh.inverse().apply(gh.apply(z));
        prop_assert!(hyp_distance(back, z) <= 1e-7);
    }

    #[test]
    fn closed_geodesic_measure_depends_on_the_class(g in arb_loxo(2, 10), h in arb_word(2, 6), k in 1i64..4) {
        let depth = translation_length_tree(&g).min(3);
        let base = loxo_occupation_tree(&g, 2, depth).unwrap().measure;
        let c = &(&h * &g.pow(k)) * &h.inverse();
        let other = loxo_occupation_tree(&c, 2, depth).unwrap().measure;
        prop_assert_eq!(tv_distance(&base, &other).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_kernel_is_stochastic_and_stationary(mu in arb_mu(2)) {
        let fp = first_passage_solve(&mu, 2).unwrap();
        prop_assert!(fp.f.iter().all(|&f| f > 0.0 && f < 1.0));
        let k = harmonic_kernel(&fp, &mu).unwrap();
        prop_assert!(k.normalization_gap() <= 1e-12);
        for t in Letter::alphabet(2) {
            let row: f64 = Letter::alphabet(2).filter(|&s| s != t.inverse()).map(|s| k.q(t, s)).sum();
            prop_assert!((row - 1.0).abs() <= 1e-12);
        }
        prop_assert!(stationarity_residual(&k.cylinder_measure(3), &mu, 2).unwrap() <= 1e-12);
    }

    #[test]
    fn markov_prediction_is_shift_consistent(mu in arb_mu(3), depth in 1usize..4) {
        let k = harmonic_kernel(&first_passage_solve(&mu, 3).unwrap(), &mu).unwrap();
        let pred = markov_flow_prediction(&k, depth);
        prop_assert!(pred.shift_gap() <= 1e-12);
        prop_assert!((pred.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gates_round_trip(x in -1e3..1e3f64, y in 0.0..1e3f64) {
        for g in [Gate::AtMost { bound: x }, Gate::AtLeast { bound: x }, Gate::Within { lo: x, hi: x + y }] {
            prop_assert_eq!(g.to_string().parse::<Gate>().unwrap(), g);
        }
    }
}

#[test]
fn reports_round_trip_through_json() {
    let cfg: ExperimentConfig = SCHOTTKY.parse().unwrap();
    let r = run(Command::Drift, &cfg, &RunOptions::default()).unwrap();
    let back = hyperwalk::report::ExperimentReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.to_json(), r.to_json());
}

#[test]
fn seed_override_changes_the_sample_only() {
    let cfg: ExperimentConfig = SCHOTTKY.parse().unwrap();
    let a = run(Command::Drift, &cfg, &RunOptions::default()).unwrap();
    let b = run(
        Command::Drift,
        &cfg,
        &RunOptions {
            seed: Some(7),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(b.provenance.seed, 7);
    assert_eq!(b.config.run.seed, 7);
    assert_ne!(a.estimates["drift"].value, b.estimates["drift"].value);
}
