use irt_explain::irt::{
    estimate_abilities, fit_3pl, icc, icc_gradient, log_likelihood, Degeneracy, FitConfig, ItemParams,
};
use irt_explain::response::ResponseMatrix;
use irt_explain::seed::rng_from_seed;
use irt_explain::simulator::{simulate, SimSpec};
use rand::Rng;

fn small_spec(seed: u64, n_respondents: usize, n_items: usize) -> SimSpec {
    SimSpec {
        n_respondents,
        n_items,
        ..SimSpec::with_seed(seed)
    }
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = rng_from_seed(11);
    let h = 1e-5;
    for _ in 0..1000 {
        let theta = rng.random_range(-4.0..4.0);
        let item = ItemParams {
            a: rng.random_range(-4.0..4.0),
            b: rng.random_range(-4.0..4.0),
            c: rng.random_range(0.0..0.5),
        };
        let g = icc_gradient(theta, &item);
        let fd = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let numeric = [
            fd(&|a| icc(theta, &ItemParams { a, ..item }), item.a),
            fd(&|b| icc(theta, &ItemParams { b, ..item }), item.b),
            fd(&|c| icc(theta, &ItemParams { c, ..item }), item.c),
            fd(&|t| icc(t, &item), theta),
        ];
        let analytic = [g.d_a, g.d_b, g.d_c, g.d_theta];
        for (x, y) in analytic.iter().zip(numeric) {
            assert!((x - y).abs() <= 1e-5 * y.abs().max(1.0), "{x} vs {y} at {theta}, {item:?}");
        }
    }
}

#[test]
fn log_likelihood_matches_cellwise_sum() {
    let mut rng = rng_from_seed(3);
    let cells: Vec<u8> = (0..25).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let m = ResponseMatrix::new(ids("r", 5), ids("i", 5), cells.clone()).unwrap();
    let items: Vec<ItemParams> = (0..5)
        .map(|_| ItemParams {
            a: rng.random_range(-2.0..2.0),
            b: rng.random_range(-2.0..2.0),
            c: rng.random_range(0.0..0.4),
        })
        .collect();
    let thetas: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut expected = 0.0;
    for j in 0..5 {
        for i in 0..5 {
            let p = items[i].c + (1.0 - items[i].c) / (1.0 + (-items[i].a * (thetas[j] - items[i].b)).exp());
            expected += if cells[j * 5 + i] == 1 { p.ln() } else { (1.0 - p).ln() };
        }
    }
    let got = log_likelihood(&m, &items, &thetas).unwrap();
    assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");

    let single = ResponseMatrix::new(ids("r", 1), ids("i", 1), vec![1]).unwrap();
    let ll = log_likelihood(&single, &[ItemParams { a: 1.0, b: 0.0, c: 0.0 }], &[0.0]).unwrap();
    assert!((ll - 0.5f64.ln()).abs() < 1e-15);
    assert!(log_likelihood(&m, &items[..4], &thetas).is_err());
}

#[test]
fn identical_columns_get_identical_parameters() {
    let sim = simulate(&small_spec(5, 60, 8)).unwrap();
    let m = &sim.matrix;
    let mut cells = Vec::new();
    for j in 0..m.n_respondents() {
        cells.extend_from_slice(m.row(j));
        cells.push(m.get(j, 2));
    }
    let mut item_ids = m.item_ids().to_vec();
    item_ids.push("copy".into());
    let doubled = ResponseMatrix::new(m.respondent_ids().to_vec(), item_ids, cells).unwrap();
    let fit = fit_3pl(&doubled, &FitConfig::default()).unwrap();
    let (x, y) = (fit.items[2], fit.items[8]);
    assert!((x.a - y.a).abs() < 1e-6, "{x:?} vs {y:?}");
    assert!((x.b - y.b).abs() < 1e-6, "{x:?} vs {y:?}");
    assert!((x.c - y.c).abs() < 1e-6, "{x:?} vs {y:?}");
}

#[test]
fn all_correct_column_lands_at_low_difficulty() {
    let sim = simulate(&small_spec(8, 50, 6)).unwrap();
    let m = &sim.matrix;
    let mut cells = Vec::new();
    for j in 0..m.n_respondents() {
        cells.extend_from_slice(m.row(j));
        cells.push(1);
    }
    let mut item_ids = m.item_ids().to_vec();
    item_ids.push("easy".into());
    let m = ResponseMatrix::new(m.respondent_ids().to_vec(), item_ids, cells).unwrap();
    let fit = fit_3pl(&m, &FitConfig::default()).unwrap();
    let easy = fit.items[6];
    assert!(easy.b <= -3.0, "{easy:?}");
    assert!(easy.is_finite());
    assert_eq!(fit.item_flags[6], Degeneracy::AllCorrect);
}

#[test]
fn eap_properties() {
    let items: Vec<ItemParams> = (0..6)
        .map(|i| ItemParams {
            a: 0.5 + 0.3 * i as f64,
            b: -1.0 + 0.4 * i as f64,
            c: 0.1,
        })
        .collect();
    let rows: [[u8; 6]; 5] = [
        [1, 1, 1, 1, 1, 1],
        [1, 1, 0, 1, 0, 0],
        [1, 1, 0, 1, 0, 0],
        [1, 1, 1, 1, 1, 0],
        [0, 0, 0, 0, 0, 0],
    ];
    let m = ResponseMatrix::new(ids("r", 5), ids("i", 6), rows.concat()).unwrap();
    let ab = estimate_abilities(&m, &items, &FitConfig::default()).unwrap();
    assert_eq!(ab[1].theta, ab[2].theta);
    assert!(ab[1..].iter().all(|x| ab[0].theta > x.theta));
    assert_eq!(ab[0].degenerate, Degeneracy::AllCorrect);
    assert_eq!(ab[4].degenerate, Degeneracy::AllWrong);
    assert_eq!(ab[1].degenerate, Degeneracy::None);
    assert!(ab.iter().all(|x| x.theta.is_finite() && x.theta.abs() <= 4.0));
    assert!(estimate_abilities(&m, &items[..5], &FitConfig::default()).is_err());
}

#[test]
fn em_ascent_and_determinism() {
    for seed in 0..4 {
        let sim = simulate(&small_spec(seed, 80, 30)).unwrap();
        let config = FitConfig {
            seed,
            parallel: false,
            ..FitConfig::default()
        };
        let fit = fit_3pl(&sim.matrix, &config).unwrap();
        assert!(fit.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "seed {seed}: {:?}", fit.trace);
        assert_eq!(*fit.trace.last().unwrap(), fit.log_likelihood);
        assert!(fit.log_likelihood.is_finite());
        let again = fit_3pl(&sim.matrix, &config).unwrap();
        assert_eq!(fit, again);
        for it in &fit.items {
            assert!(it.a.abs() <= 4.0 && it.b.abs() <= 4.0 && (0.0..=0.5).contains(&it.c));
        }
    }
}

#[test]
fn parallel_matches_serial() {
    let sim = simulate(&small_spec(21, 90, 40)).unwrap();
    let serial = fit_3pl(&sim.matrix, &FitConfig { parallel: false, ..FitConfig::default() }).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let parallel = pool.install(|| fit_3pl(&sim.matrix, &FitConfig::default()).unwrap());
    for (s, p) in serial.items.iter().zip(&parallel.items) {
        assert!((s.a - p.a).abs() <= 1e-9 && (s.b - p.b).abs() <= 1e-9 && (s.c - p.c).abs() <= 1e-9);
    }
    for (s, p) in serial.abilities.iter().zip(&parallel.abilities) {
        assert!((s.theta - p.theta).abs() <= 1e-9);
    }
}

#[test]
fn permutations_act_equivariantly() {
    let sim = simulate(&small_spec(13, 70, 20)).unwrap();
    let config = FitConfig { parallel: false, ..FitConfig::default() };
    let base = fit_3pl(&sim.matrix, &config).unwrap();

    let rows: Vec<usize> = (0..70).rev().collect();
    let fit = fit_3pl(&sim.matrix.permute_respondents(&rows).unwrap(), &config).unwrap();
    for (x, y) in base.items.iter().zip(&fit.items) {
        assert!((x.a - y.a).abs() < 1e-9 && (x.b - y.b).abs() < 1e-9 && (x.c - y.c).abs() < 1e-9);
    }
    for (k, &j) in rows.iter().enumerate() {
        assert!((fit.abilities[k].theta - base.abilities[j].theta).abs() < 1e-9);
    }

    let cols: Vec<usize> = (0..20).map(|i| (i * 7) % 20).collect();
    let fit = fit_3pl(&sim.matrix.permute_items(&cols).unwrap(), &config).unwrap();
    for (k, &i) in cols.iter().enumerate() {
        let (x, y) = (base.items[i], fit.items[k]);
        assert!((x.a - y.a).abs() < 1e-9 && (x.b - y.b).abs() < 1e-9 && (x.c - y.c).abs() < 1e-9);
    }
    for (x, y) in base.abilities.iter().zip(&fit.abilities) {
        assert!((x.theta - y.theta).abs() < 1e-9);
    }
}

#[test]
fn iteration_cap_and_dimension_errors() {
    let sim = simulate(&small_spec(2, 40, 10)).unwrap();
    let fit = fit_3pl(&sim.matrix, &FitConfig { max_em_iterations: 1, ..FitConfig::default() }).unwrap();
    assert!(!fit.converged);
    assert_eq!(fit.iterations, 1);

    let one_row = ResponseMatrix::new(ids("r", 1), ids("i", 3), vec![1, 0, 1]).unwrap();
    assert!(fit_3pl(&one_row, &FitConfig::default()).is_err());
    let one_col = ResponseMatrix::new(ids("r", 3), ids("i", 1), vec![1, 0, 1]).unwrap();
    assert!(fit_3pl(&one_col, &FitConfig::default()).is_err());
    assert!(fit_3pl(&sim.matrix, &FitConfig { quadrature_points: 5, ..FitConfig::default() }).is_err());
}
