//! Protocol-level checks of the learning runs and the detection suite.

use std::path::Path;

use ctxnoise::classifier::train_mlr;
use ctxnoise::detector::score_batch;
use ctxnoise::harness::{
    prepare, run_active_learning, run_detection_suite, run_pseudo, ExperimentConfig, ExperimentLog, Method, Mode,
    NoiseModel, Selection,
};
use ctxnoise::relationship::build_relationship;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse_text(text, Path::new("test.cfg")).unwrap()
}

const BASE: &str = "\
dataset = synthetic
synthetic.n_classes = 4
synthetic.per_class = 60
synthetic.feature_dim = 8
synthetic.separation = 2.5
synthetic.concentration = 0.8
synthetic.links_per_instance = 5
epsilon = 1
n_batches = 6
suite_batches = 5
mlr.epochs = 60
mlr.update_epochs = 20
";

/// `BASE` with the keys in `extra` replaced or added.
fn with(extra: &str) -> ExperimentConfig {
    let key = |line: &str| line.split('=').next().unwrap_or("").trim().to_string();
    let overridden: Vec<String> = extra.lines().map(key).collect();
    let kept: Vec<&str> = BASE.lines().filter(|l| !overridden.contains(&key(l))).collect();
    config(&format!("{}\n{extra}", kept.join("\n")))
}

#[test]
fn ten_batches_log_nine_updates() {
    let cfg = with("n_batches = 10\nomega = 0.4\n");
    let log = run_active_learning(&cfg, Mode::Cnld, 0).unwrap();
    assert_eq!(log.batches.len(), 10);
    assert_eq!(log.batches.iter().filter(|b| b.batch > 0).count(), 9);
    assert!(log.batches.windows(2).all(|w| w[1].batch == w[0].batch + 1));
    assert!(log.batches[1..].iter().all(|b| b.metrics.is_some()));
}

#[test]
fn runs_are_bitwise_reproducible() {
    let cfg = with("omega = 0.4\n");
    for mode in Mode::ACTIVE {
        assert_eq!(
            run_active_learning(&cfg, mode, 3).unwrap(),
            run_active_learning(&cfg, mode, 3).unwrap()
        );
    }
    for mode in Mode::PSEUDO {
        assert_eq!(run_pseudo(&cfg, mode, 3).unwrap(), run_pseudo(&cfg, mode, 3).unwrap());
    }
    assert_eq!(
        run_detection_suite(&cfg, 1).unwrap(),
        run_detection_suite(&cfg, 1).unwrap()
    );
}

#[test]
fn noiseless_sn_and_cl_agree() {
    let cfg = with("omega = 0\n");
    let sn = run_active_learning(&cfg, Mode::Sn, 2).unwrap();
    let cl = run_active_learning(&cfg, Mode::Cl, 2).unwrap();
    let strip = |log: &ExperimentLog| -> Vec<(f64, usize, usize, Vec<usize>)> {
        log.batches
            .iter()
            .map(|b| (b.accuracy, b.removed, b.kept, b.queried.clone()))
            .collect()
    };
    assert_eq!(strip(&sn), strip(&cl));
}

#[test]
fn manual_matches_noiseless_cl() {
    let cfg = with("omega = 0\n");
    let manual = run_pseudo(&cfg, Mode::Manual, 4).unwrap();
    let cl = run_active_learning(&cfg, Mode::Cl, 4).unwrap();
    let acc = |log: &ExperimentLog| -> Vec<(f64, usize, Vec<usize>)> {
        log.batches
            .iter()
            .map(|b| (b.accuracy, b.kept, b.queried.clone()))
            .collect()
    };
    assert_eq!(acc(&manual), acc(&cl));
}

#[test]
fn random_selection_queries_the_same_ids_in_every_mode() {
    let cfg = with("omega = 0.4\nselection = random\n");
    let queried = |mode| -> Vec<Vec<usize>> {
        run_active_learning(&cfg, mode, 5)
            .unwrap()
            .batches
            .iter()
            .map(|b| b.queried.clone())
            .collect()
    };
    let reference = queried(Mode::Sn);
    for mode in [Mode::Pb, Mode::Cl, Mode::Cnld] {
        assert_eq!(queried(mode), reference, "{mode}");
    }
}

#[test]
fn filters_share_the_cnld_budget_and_cl_drops_only_flips() {
    let cfg = with("omega = 0.4\nselection = random\n");
    let cnld = run_active_learning(&cfg, Mode::Cnld, 6).unwrap();
    let pb = run_active_learning(&cfg, Mode::Pb, 6).unwrap();
    let cl = run_active_learning(&cfg, Mode::Cl, 6).unwrap();
    // Models coincide until the first filtered batch is folded in.
    let budget = cnld.batches[1].removed;
    assert_eq!(pb.batches[1].removed, budget);
    assert_eq!(
        cl.batches[1].removed,
        budget.min(cl.batches[1].metrics.unwrap().mislabeled_total)
    );
    for b in &cl.batches[1..] {
        let m = b.metrics.unwrap();
        assert_eq!(m.correct_removed, 0);
        assert_eq!(b.kept + b.removed, b.queried.len());
    }
    let sn = run_active_learning(&cfg, Mode::Sn, 6).unwrap();
    assert!(sn.batches.iter().all(|b| b.removed == 0 && b.metrics.is_none()));
}

#[test]
fn correct_pseudo_labels_do_not_hurt() {
    // Far-apart classes: the initial classifier already labels everything right.
    let cfg = config(
        "dataset = synthetic\nsynthetic.n_classes = 3\nsynthetic.per_class = 60\nsynthetic.feature_dim = 4\n\
         synthetic.separation = 12\nn_batches = 5\n",
    );
    for seed in 0..3 {
        let manual = run_pseudo(&cfg, Mode::Manual, seed).unwrap();
        let pseudo = run_pseudo(&cfg, Mode::ManualPseudo, seed).unwrap();
        assert!(pseudo.final_accuracy() >= manual.final_accuracy());
        assert!(pseudo.batches[1].kept > manual.batches[1].kept);
    }
    let filtered = run_pseudo(&cfg, Mode::ManualPseudoCnld, 0).unwrap();
    for b in &filtered.batches[1..] {
        assert_eq!(b.metrics.unwrap().mislabeled_total, 0);
    }
}

#[test]
fn perfect_context_detection_is_near_oracle() {
    let cfg = config(
        "dataset = synthetic\nsynthetic.n_classes = 5\nsynthetic.per_class = 200\nsynthetic.feature_dim = 8\n\
         synthetic.separation = 2.5\nsynthetic.concentration = 1\nsynthetic.links_per_instance = 6\n\
         epsilon = 1\nsuite_batches = 2\nomegas = 0.1\n",
    );
    for seed in 0..3 {
        let rows = run_detection_suite(&cfg, seed).unwrap();
        let cnld = rows.iter().find(|r| r.method == Method::Cnld).unwrap();
        assert!(cnld.metrics.nep.unwrap() >= 0.9, "seed {seed}: {:?}", cnld.metrics);
    }
}

#[test]
fn suite_removes_the_same_count_for_every_method() {
    let cfg = with("omegas = 0.1,0.3,0.5\n");
    let rows = run_detection_suite(&cfg, 0).unwrap();
    assert_eq!(rows.len(), 3 * Method::ALL.len());
    let test_size = prepare(&cfg, 0).unwrap().test.len();
    for r in &rows {
        let m = &r.metrics;
        assert_eq!(m.removed, (r.omega * test_size as f64).round() as usize);
        assert_eq!(m.correct_total + m.mislabeled_total, test_size);
        assert_eq!(m.mislabeled_total, m.mislabeled_removed + m.mislabeled_kept);
        let (er1, nep) = (m.er1.unwrap(), m.nep.unwrap());
        // Correct labels removed, counted two ways.
        assert!((er1 * m.correct_total as f64 - (1.0 - nep) * m.removed as f64).abs() < 1e-9);
    }
}

#[test]
fn document_style_cnld_beats_majority_at_half_noise() {
    let cfg = config(
        "dataset = synthetic\nsynthetic.n_classes = 7\nsynthetic.per_class = 200\nsynthetic.feature_dim = 32\n\
         synthetic.separation = 2.5\nsynthetic.concentration = 0.7\nepsilon = 1\nomegas = 0.3,0.5\n",
    );
    let mut cnld = [0.0; 2];
    let mut majority = [0.0; 2];
    let mut prob = [0.0; 2];
    for seed in 0..3 {
        let rows = run_detection_suite(&cfg, seed).unwrap();
        for r in rows {
            let k = usize::from(r.omega > 0.4);
            let nep = r.metrics.nep.unwrap();
            match r.method {
                Method::Cnld => cnld[k] += nep,
                Method::Majority => majority[k] += nep,
                Method::Probabilistic => prob[k] += nep,
                Method::Consensus => {}
            }
        }
    }
    assert!(cnld[1] > majority[1], "{cnld:?} vs {majority:?}");
    assert!(cnld[0] >= prob[0], "{cnld:?} vs {prob:?}");
}

#[test]
fn nar_suite_removes_the_realized_flip_count() {
    let cfg = with("noise = nar\n");
    let rows = run_detection_suite(&cfg, 0).unwrap();
    assert_eq!(rows.len(), Method::ALL.len());
    for r in &rows {
        assert_eq!(r.metrics.removed, r.metrics.mislabeled_total);
    }
    let log = run_active_learning(&cfg, Mode::Cnld, 0).unwrap();
    assert_eq!(log.batches.len(), cfg.n_batches);
}

#[test]
fn scores_are_per_instance() {
    let cfg = with("");
    let prep = prepare(&cfg, 0).unwrap();
    let ds = &prep.dataset;
    let features: Vec<&[f64]> = prep.train.iter().map(|&i| ds.features(i)).collect();
    let labels: Vec<usize> = prep.train.iter().map(|&i| ds.instances()[i].true_label).collect();
    let model = train_mlr(None, &features, &labels, ds.n_classes(), &cfg.mlr).unwrap();
    let known: Vec<Option<usize>> = ds.true_labels().into_iter().map(Some).collect();
    let rel = build_relationship(ds, &prep.train, &known, &cfg.relationship).unwrap();
    let test = &prep.test;
    let assigned: Vec<usize> = test
        .iter()
        .map(|&i| (ds.instances()[i].true_label + i) % ds.n_classes())
        .collect();
    let all = score_batch(test, &assigned, ds, &model, &rel).unwrap();
    let half: Vec<usize> = (0..test.len()).step_by(2).collect();
    let sub = score_batch(
        &half.iter().map(|&p| test[p]).collect::<Vec<_>>(),
        &half.iter().map(|&p| assigned[p]).collect::<Vec<_>>(),
        ds,
        &model,
        &rel,
    )
    .unwrap();
    assert_eq!(sub, half.iter().map(|&p| all[p]).collect::<Vec<_>>());
}

#[test]
fn mode_protocol_mismatch_is_rejected() {
    let cfg = with("");
    assert!(run_active_learning(&cfg, Mode::Manual, 0).is_err());
    assert!(run_pseudo(&cfg, Mode::Cnld, 0).is_err());
    assert_eq!(cfg.selection, Selection::Entropy);
    assert_eq!(cfg.noise, NoiseModel::Ncar);
}
