use collapse_core::io::{read_features, write_trace, write_trace_file, Checkpoint};
use collapse_core::losses::LossSpec;
use collapse_core::rng::LabRng;
use collapse_core::ufm::{train, Hyper, TrainConfig, UfmState};
use collapse_core::Error;

fn hyper() -> Hyper<f64> {
    Hyper::new(3, 5, 2, 0.01, 0.01, 0.01, LossSpec::ce())
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let hp = hyper();
    let state = UfmState::gaussian(&hp, 0.7, &mut LabRng::new(3));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    Checkpoint::from_state(&state, hp.n).write(&path).unwrap();
    let back = Checkpoint::read(&path).unwrap();
    back.check_hyper(&hp).unwrap();
    assert_eq!(back.to_state::<f64>().unwrap(), state);
    assert!(std::fs::read_to_string(&path).unwrap().ends_with("}\n"));
}

#[test]
fn classifier_only_checkpoint() {
    let text = r#"{"K":2,"d":1,"n":3,"W":[[1.0],[-1.0]],"b":[0.0,0.5]}"#;
    let ck: Checkpoint = serde_json::from_str(text).unwrap();
    assert!(!ck.has_features());
    let (w, b) = ck.classifier::<f64>().unwrap();
    assert_eq!(w.to_rows(), vec![vec![1.0], vec![-1.0]]);
    assert_eq!(b, vec![0.0, 0.5]);
    assert!(matches!(ck.to_state::<f64>(), Err(Error::InvalidArgument(_))));
}

#[test]
fn malformed_checkpoints_are_rejected() {
    let unknown = r#"{"K":1,"d":1,"n":1,"W":[[1.0]],"b":[0.0],"extra":1}"#;
    assert!(serde_json::from_str::<Checkpoint>(unknown).is_err());
    let ragged: Checkpoint = serde_json::from_str(r#"{"K":2,"d":2,"n":1,"W":[[1.0,0.0],[1.0]],"b":[0.0,0.0]}"#).unwrap();
    assert!(matches!(ragged.classifier::<f64>(), Err(Error::Dimension(_))));
    let short_b: Checkpoint = serde_json::from_str(r#"{"K":2,"d":1,"n":1,"W":[[1.0],[2.0]],"b":[0.0]}"#).unwrap();
    assert!(matches!(short_b.classifier::<f64>(), Err(Error::Dimension(_))));
    let hp = hyper();
    assert!(matches!(short_b.check_hyper(&hp), Err(Error::Dimension(_))));
    let missing = tempfile::tempdir().unwrap().path().join("nope.json");
    assert!(matches!(Checkpoint::read(&missing), Err(Error::Io(_))));
}

#[test]
fn trace_csv_is_byte_identical_across_runs() {
    let mut cfg = TrainConfig::new(hyper(), 12);
    cfg.max_iters = 400;
    cfg.log_every = 100;
    cfg.grad_tol = 0.0;
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_trace_file(&a, &train(&cfg).unwrap().trace).unwrap();
    write_trace_file(&b, &train(&cfg).unwrap().trace).unwrap();
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iter,f,g,grad_norm,nc1,nc2,nc3,nc4,cert_gap,balance_residual");
    assert_eq!(lines.count(), 5);
}

#[test]
fn different_seeds_give_different_traces() {
    let mut cfg = TrainConfig::new(hyper(), 1);
    cfg.max_iters = 50;
    cfg.log_every = 10;
    let mut a = Vec::new();
    write_trace(&mut a, &train(&cfg).unwrap().trace).unwrap();
    cfg.seed = 2;
    let mut b = Vec::new();
    write_trace(&mut b, &train(&cfg).unwrap().trace).unwrap();
    assert_ne!(a, b);
}

#[test]
fn features_are_regrouped_class_major() {
    let csv = "label,x,y\n1,10,11\n0,0,1\n0,2,3\n1,12,13\n";
    let dump = read_features::<f64, _>(csv.as_bytes(), 2).unwrap();
    assert_eq!((dump.k, dump.n), (2, 2));
    assert_eq!(dump.h.to_rows(), vec![vec![0.0, 10.0, 2.0, 12.0], vec![1.0, 11.0, 3.0, 13.0]]);
}

#[test]
fn bad_feature_dumps() {
    let unbalanced = "label,x\n0,1\n0,2\n1,3\n";
    assert!(read_features::<f64, _>(unbalanced.as_bytes(), 2).is_err());
    let no_label = "class,x\n0,1\n1,2\n";
    assert!(read_features::<f64, _>(no_label.as_bytes(), 2).is_err());
    let out_of_range = "label,x\n0,1\n2,2\n";
    assert!(read_features::<f64, _>(out_of_range.as_bytes(), 2).is_err());
    let not_a_number = "label,x\n0,abc\n1,2\n";
    assert!(read_features::<f64, _>(not_a_number.as_bytes(), 2).is_err());
}
