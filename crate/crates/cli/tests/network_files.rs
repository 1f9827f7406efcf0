//! Network description files: validation errors and the single-road fallback.

use std::io::Write;

use arz_cli::runner::run_scenario;
use arz_cli::{parse_network, ScenarioConfig, Status};

const SINGLE: &str = r#"{
  "description": "one periodic road",
  "roads": [
    {"id": "ring", "length": 2, "rho": "0.2 + 0.1*sin(PI*x)", "v": 0.3, "c": 1, "periodic": true}
  ],
  "junctions": []
}"#;

fn temp_file(name: &str, body: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("arz-netfile-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
    path
}

#[test]
fn no_junctions_runs_as_a_single_road() {
    let net = parse_network(SINGLE).unwrap();
    assert_eq!(net.roads.len(), 1);
    let mut cfg = ScenarioConfig::new("ex5_5").with_cells(40).with_t_end(0.05);
    cfg.network_file = Some(temp_file("single.json", SINGLE));
    let out = run_scenario(&cfg).unwrap();
    let r = &out.report;
    assert_eq!(r.status, Status::Completed);
    assert_eq!(out.names, vec!["ring".to_string()]);
    assert_eq!(out.segments[0].mesh.cells, 80);
    assert!(r.conservation.relative.iter().all(|&d| d <= 1e-12), "{:?}", r.conservation.relative);
    assert_eq!(r.junction_throttles, 0);
}

#[test]
fn distribution_columns_must_sum_to_one() {
    let src = r#"{
  "roads": [
    {"id": "a", "rho": 0.1, "w": 1},
    {"id": "b", "rho": 0.1, "w": 1},
    {"id": "c", "rho": 0.1, "w": 1}
  ],
  "junctions": [
    {"id": "J", "rule": "HB", "incoming": ["a"], "outgoing": ["b", "c"],
     "distribution": [[0.6], [0.5]]}
  ]
}"#;
    let e = parse_network(src).unwrap_err();
    assert!(e.field.starts_with("junctions[0].distribution"), "{e}");
    assert!(e.message.contains("sums to"), "{e}");
    assert_eq!(e.line, Some(8), "{e}");
}

#[test]
fn bundled_networks_parse() {
    for src in [
        include_str!("../networks/ex5_5.json"),
        include_str!("../networks/ex5_6.json"),
        include_str!("../networks/ex5_7_hb.json"),
        include_str!("../networks/ex5_7_ghmw.json"),
        include_str!("../networks/ex5_8.json"),
        include_str!("../networks/ex5_9.json"),
    ] {
        let net = parse_network(src).unwrap();
        assert!(!net.roads.is_empty());
    }
    assert_eq!(parse_network(include_str!("../networks/ex5_9.json")).unwrap().roads.len(), 48);
}
