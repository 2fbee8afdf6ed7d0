use std::path::{Path, PathBuf};

use rough_reduct::harness::BenchSpec;
use rough_reduct::{load_csv, ColumnRole, Schema};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn counts(name: &str) -> (usize, usize) {
    let schema = Schema::load(root().join("data/schemas").join(format!("{name}.schema"))).unwrap();
    let count = |role| schema.columns().iter().filter(|(_, r)| *r == role).count();
    (count(ColumnRole::Numeric), count(ColumnRole::Categorical))
}

#[test]
fn table_schemas_declare_the_published_attribute_mix() {
    for (name, numeric, categorical) in [
        ("anneal", 6, 32),
        ("credit", 6, 9),
        ("heart1", 7, 6),
        ("hepatitis", 6, 13),
        ("iono", 34, 0),
        ("wdbc", 30, 0),
        ("zoo", 0, 16),
        ("mocap", 33, 0),
    ] {
        assert_eq!(counts(name), (numeric, categorical), "{name}");
    }
    // the UCI files carry one categorical attribute more, or one fewer,
    // than the published counts
    assert_eq!(counts("german"), (7, 13));
    assert_eq!(counts("horse"), (7, 15));
}

#[test]
fn s1_loads() {
    let sys = load_csv(root().join("data/s1.csv"), &Schema::load(root().join("data/s1.schema")).unwrap()).unwrap();
    assert_eq!((sys.n_samples(), sys.n_attributes(), sys.n_classes()), (4, 2, 2));
}

#[test]
fn bench_specs_parse() {
    for entry in std::fs::read_dir(root().join("benches")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec = BenchSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!spec.datasets.is_empty());
        }
    }
}
