use pwrap::{BlackBox, Builtin, Dataset, RangeSpec};

fn eval(spec: &str, labels: &[&str]) -> f64 {
    let b: Builtin = spec.parse().unwrap();
    let root = Dataset::from_labels(labels.iter().copied());
    let mut bb = BlackBox::new(root.clone(), RangeSpec::Unbounded, b);
    bb.query(&root).unwrap()
}

#[test]
fn numeric_builtins() {
    assert_eq!(eval("count", &["a", "b", "c"]), 3.0);
    assert_eq!(eval("sum-clamped:0:2", &["1", "5", "-3"]), 3.0);
    assert_eq!(eval("average-clamped:0:2", &["1", "5", "-3"]), 1.0);
    assert_eq!(eval("average-clamped:0:2", &[]), 0.0);
    assert_eq!(eval("median", &["1", "9", "4"]), 4.0);
    assert_eq!(eval("median", &["1", "9", "4", "6"]), 5.0);
    assert_eq!(eval("median", &[]), 0.0);
    assert_eq!(eval("constant:5", &["x"]), 5.0);
    assert_eq!(eval("sum-clamped:0:1", &["0.5", "word"]), 0.5);
}

#[test]
fn hard_instance_builtin() {
    let b: Builtin = "hard-instance:n=8,alpha=1,rho=4,gamma=3,seed=7,kind=planted".parse().unwrap();
    let Builtin::Hard(inst) = &b else { panic!("expected a hard instance") };
    assert_eq!(inst.n, 8);
    let x = inst.dataset();
    let mut bb = BlackBox::new(x.clone(), RangeSpec::Unbounded, b.clone());
    assert_eq!(bb.query(&x).unwrap(), inst.k as f64);
}

#[test]
fn bad_specs_are_rejected() {
    for spec in ["nope", "sum-clamped:1", "sum-clamped:2:1", "constant", "constant:x", "hard-instance:alpha=1", "hard-instance:n=8,kind=odd"] {
        assert!(spec.parse::<Builtin>().is_err(), "{spec}");
    }
}
