use irt_explain::dataset::LabeledDataset;
use irt_explain::learners::{
    predict_pool, train_pool, Classifier, DecisionTree, GaussianNb, KNearestNeighbors, LogisticOptions,
    LogisticRegression, PoolConfig, RandomForest, TreeOptions,
};
use irt_explain::response::{artificial_rows, responses_from_predictions};
use irt_explain::seed::rng_from_seed;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn blobs(seed: u64, n_per_class: usize, shift: f64) -> LabeledDataset {
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2u8 {
        for _ in 0..n_per_class {
            let c = f64::from(class) * shift;
            rows.push(vec![c + noise.sample(&mut rng), 0.5 * c + noise.sample(&mut rng), noise.sample(&mut rng)]);
            labels.push(class);
        }
    }
    LabeledDataset::new("blobs", vec!["a".into(), "b".into(), "c".into()], rows, labels).unwrap()
}

#[test]
fn default_pool_has_131_members() {
    let config = PoolConfig::default();
    let ids: Vec<String> = config.member_specs().into_iter().map(|(id, _)| id).collect();
    assert_eq!(ids.len(), 131);
    assert_eq!(ids.iter().filter(|id| id.starts_with("rf_")).count(), 123);
    for id in ["rf_1", "rf_100", "rf_120", "rf_3_2", "rf_5_2", "rf_100_2", "knn_8", "gaussian_nb", "bernoulli_nb", "decision_tree", "logistic"] {
        assert!(ids.iter().any(|x| x == id), "{id} missing");
    }
    let mut unique = ids.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), ids.len());
}

#[test]
fn single_member_pool_and_config_errors() {
    let train = blobs(1, 20, 2.0);
    let config = PoolConfig {
        rf_tree_counts: vec![1],
        ..PoolConfig::empty(4)
    };
    let pool = train_pool(&train, &config).unwrap();
    assert_eq!(pool.member_ids(), vec!["rf_1"]);

    assert!(train_pool(&train, &PoolConfig::empty(0)).is_err());
    let too_many = PoolConfig {
        knn_ks: vec![41],
        ..PoolConfig::empty(0)
    };
    assert!(train_pool(&train, &too_many).is_err());

    let narrow = LabeledDataset::new("n", vec!["a".into()], vec![vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
    assert!(predict_pool(&pool, &narrow).is_err());
}

#[test]
fn pool_is_deterministic() {
    let train = blobs(2, 30, 1.5);
    let test = blobs(3, 15, 1.5);
    let config = PoolConfig {
        rf_tree_counts: vec![1, 7, 25],
        knn_ks: vec![2, 5],
        seed: 99,
        ..PoolConfig::default()
    };
    let a = predict_pool(&train_pool(&train, &config).unwrap(), &test).unwrap();
    let b = predict_pool(&train_pool(&train, &config).unwrap(), &test).unwrap();
    assert_eq!(a, b);
    let forest = RandomForest::fit(&train, 10, 5);
    assert_eq!(forest.predict(&test), RandomForest::fit(&train, 10, 5).predict(&test));
    assert_eq!(forest.n_trees(), 10);
}

#[test]
fn one_nn_reproduces_training_labels() {
    let train = blobs(4, 25, 0.5);
    let knn = KNearestNeighbors::fit(&train, 1);
    assert_eq!(knn.predict(&train), train.labels());
}

#[test]
fn tree_separates_one_feature() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i)]).collect();
    let labels: Vec<u8> = (0..20).map(|i| u8::from(i >= 12)).collect();
    let train = LabeledDataset::new("sep", vec!["x".into()], rows, labels.clone()).unwrap();
    let all: Vec<usize> = (0..20).collect();
    let tree = DecisionTree::fit(&train, &all, TreeOptions::default(), &mut rng_from_seed(0));
    assert_eq!(tree.predict(&train), labels);
    for x in [-100.0, -1.0, 5.0, 11.4] {
        assert_eq!(tree.predict_one(&[x]), 0);
    }
    for x in [11.6, 12.0, 30.0, 1e6] {
        assert_eq!(tree.predict_one(&[x]), 1);
    }
}

#[test]
fn gaussian_nb_on_separated_classes() {
    let mut rng = rng_from_seed(17);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2u8 {
            let mean = if class == 0 { -5.0 } else { 5.0 };
            let d = Normal::new(mean, 1.0).unwrap();
            for _ in 0..n {
                rows.push(vec![d.sample(rng)]);
                labels.push(class);
            }
        }
        (rows, labels)
    };
    let (rows, labels) = draw(&mut rng, 50);
    let train = LabeledDataset::new("g", vec!["x".into()], rows, labels).unwrap();
    let (rows, labels) = draw(&mut rng, 50);
    let test = LabeledDataset::new("g", vec!["x".into()], rows, labels).unwrap();
    let nb = GaussianNb::fit(&train);
    let predicted = nb.predict(&test);
    let correct: usize = responses_from_predictions(&predicted, test.labels()).unwrap().iter().map(|&r| usize::from(r)).sum();
    assert!(correct as f64 / 100.0 >= 0.99);

    // Brute-force Bayes rule with the true densities and equal priors.
    let bayes: Vec<u8> = (0..test.len())
        .map(|i| {
            let x = test.row(i)[0];
            u8::from((x - 5.0).powi(2) < (x + 5.0).powi(2))
        })
        .collect();
    let agree = predicted.iter().zip(&bayes).filter(|(p, b)| p == b).count();
    assert!(agree >= 99, "{agree}");
}

#[test]
fn logistic_loss_never_increases() {
    let train = blobs(6, 40, 1.0);
    let model = LogisticRegression::fit(&train, LogisticOptions::default());
    let history = model.loss_history();
    assert_eq!(history.len(), 501);
    assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-15), "loss increased");
    assert!(history[500] < history[0]);
    let p = model.probability(train.row(0));
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn no_member_dominates_the_optimal_row() {
    let train = blobs(7, 30, 1.0);
    let test = blobs(8, 12, 1.0);
    let config = PoolConfig {
        rf_tree_counts: vec![1, 3, 10],
        seed: 1,
        ..PoolConfig::default()
    };
    let predictions = predict_pool(&train_pool(&train, &config).unwrap(), &test).unwrap();
    let optimal = &artificial_rows(test.labels(), 0, [1, 2, 3])[0].1;
    for p in &predictions {
        let row = responses_from_predictions(p, test.labels()).unwrap();
        let better = row.iter().zip(optimal).any(|(r, o)| r > o);
        assert!(!better);
    }
}

#[test]
fn knn_majority_vote() {
    let mut rng = rng_from_seed(9);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
    let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] > 0.5)).collect();
    let train = LabeledDataset::new("k", vec!["x".into()], rows, labels).unwrap();
    let knn = KNearestNeighbors::fit(&train, 5);
    assert_eq!(knn.predict_one(&[0.02]), 0);
    assert_eq!(knn.predict_one(&[0.98]), 1);
    assert_eq!(knn.k(), 5);
}
