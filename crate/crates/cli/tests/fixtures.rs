use std::path::PathBuf;

use iterint_cli::{load, CliError};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn interval_has_one_edge() {
    let s = load(&fixture("interval_transport.json")).unwrap();
    assert_eq!(s.set().simplices(1).len(), 1);
    assert_eq!(s.set().dim(), 1);
}

#[test]
fn octahedron_combinatorics() {
    let s = load(&fixture("sphere_octahedron.json")).unwrap();
    let counts: Vec<usize> = (0..=2).map(|k| s.set().simplices(k).len()).collect();
    assert_eq!(counts, [6, 12, 8]);
}

#[test]
fn mismatched_face_names_simplex_and_face() {
    match load(&fixture("bad_face.json")) {
        Err(CliError::Invariant(m)) => assert!(m.contains("[0, 1, 2]") && m.contains("face 2"), "{m}"),
        other => panic!("expected an invariant error, got {other:?}"),
    }
}

#[test]
fn every_fixture_but_the_bad_one_loads() {
    for name in ["interval_transport.json", "triangle_two_term.json", "sphere_octahedron.json", "perturbed_rep.json"] {
        load(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn malformed_json_reports_position() {
    let e = iterint_cli::parse("{ \"schema_version\": 1,\n  \"name\": }").unwrap_err();
    assert!(matches!(e, CliError::Schema(_)));
    assert!(e.to_string().contains("line 2"), "{e}");
}
