mod common;

use common::*;
use mnru_index::{IndexError, IndexParams, Label, LayeredGraph, StrategyKind};

fn temp_path(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("mnru-{}-{name}", std::process::id()))
}

#[test]
fn file_round_trip_preserves_search_results() {
    let pts = gaussian(1500, 12, 1);
    let mut g = build(&pts[..1000], IndexParams::new(8, 64).with_seed(2), 1200);
    for i in 0..200u64 {
        g.mark_delete(Label(i * 3)).unwrap();
    }
    for (i, p) in pts[1000..1150].iter().enumerate() {
        g.replace_update(p, Label(2000 + i as u64), StrategyKind::MnThnRu.into())
            .unwrap();
    }
    let path = temp_path("roundtrip.idx");
    g.save(&path).unwrap();
    let back = LayeredGraph::load(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    for q in &pts[1150..1200] {
        assert_eq!(
            back.knn_search(q, 10, 50).unwrap(),
            g.knn_search(q, 10, 50).unwrap()
        );
    }
    assert_eq!(back.reachability_report(), g.reachability_report());
    assert_eq!(adjacency(&back), adjacency(&g));
}

#[test]
fn corrupted_neighbor_is_reported_with_offset() {
    let g = build(&uniform(10, 2, 3), IndexParams::new(2, 4), 10);
    let mut bytes = Vec::new();
    g.write_snapshot(&mut bytes).unwrap();
    // Overwrite the last neighbor id before the vector block.
    let at = bytes.len() - 10 * 2 * 4 - 4;
    bytes[at..at + 4].copy_from_slice(&999u32.to_le_bytes());
    match LayeredGraph::read_snapshot(&bytes[..]) {
        Err(IndexError::Format { offset, .. }) => assert_eq!(offset, at as u64),
        other => panic!("expected format error, got {other:?}"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(
        LayeredGraph::load(temp_path("absent.idx")),
        Err(IndexError::Io(_))
    ));
}
