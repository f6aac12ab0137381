mod common;

use std::fs;

use common::crate_dir;
use dementia_subtypes::pipeline::{render_report, write_fixture_run};

/// The shipped run directory is exactly what the fixture builder writes.
#[test]
fn shipped_fixture_matches_a_fresh_build() {
    let shipped = crate_dir().join("fixtures/reference_matrix");
    let fresh = tempfile::tempdir().unwrap();
    write_fixture_run(fresh.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(fresh.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let expected = fs::read(fresh.path().join(&name)).unwrap();
        let actual = fs::read(shipped.join(&name)).unwrap_or_else(|e| panic!("{name:?}: {e}"));
        assert!(expected == actual, "{name:?} differs from a fresh build");
    }
}

#[test]
fn fixture_report_reproduces_the_reference_matrix() {
    let report = render_report(&crate_dir().join("fixtures/reference_matrix")).unwrap();
    let rows: Vec<Vec<usize>> = (0..6).map(|i| report.json.matrix.row(i).to_vec()).collect();
    assert_eq!(
        rows,
        vec![
            vec![36, 15, 1, 0, 0, 1],
            vec![17, 170, 47, 55, 13, 1],
            vec![1, 19, 44, 66, 24, 10],
            vec![0, 5, 10, 74, 51, 20],
            vec![0, 2, 4, 9, 62, 45],
            vec![0, 0, 0, 1, 10, 79],
        ]
    );
    assert_eq!(report.json.transition_count, 892);
    assert_eq!(report.json.matrix_file_agrees, Some(true));
    assert_eq!(report.json.stage_skips, 2);
    let graph = report.json.progression_graph.expect("graph shipped");
    assert_eq!(graph.edge(9, 14), Some(4));
}
