use std::fs;

use dtsp::aco::run_aco;
use dtsp::instance::{load_instance, DistanceConvention};
use dtsp::{AcoParams, Error, EventKind, EventSchedule};

const TSPLIB: &str = "NAME: square5
TYPE: TSP
COMMENT: four corners and a centre
DIMENSION: 5
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 10 0
3 10 10
4 0 10
5 5 5
EOF
";

const NATIVE: &str = "# corners and a centre
5
1 0 0
2 10 0
3 10 10
4 0 10
5 5 5
";

#[test]
fn tsplib_and_native_files_load_alike() {
    let dir = tempfile::tempdir().unwrap();
    let tsp = dir.path().join("a.tsp");
    let txt = dir.path().join("a.txt");
    fs::write(&tsp, TSPLIB).unwrap();
    fs::write(&txt, NATIVE).unwrap();
    let a = load_instance(&tsp).unwrap();
    let b = load_instance(&txt).unwrap();
    assert_eq!(a.convention(), DistanceConvention::TsplibEuc2d);
    assert_eq!(b.convention(), DistanceConvention::Euclidean);
    assert_eq!(a.ids(), b.ids());
    // 5 * sqrt(2) rounds to 7 under the integer convention
    assert_eq!(a.dist(0, 4), 7.0);
    assert!((b.dist(0, 4) - 50f64.sqrt()).abs() < 1e-12);
}

#[test]
fn loaded_instance_runs_with_a_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("a.txt");
    let ev_path = dir.path().join("events.txt");
    fs::write(&inst_path, NATIVE).unwrap();
    fs::write(
        &ev_path,
        "# iter kind id [x y]\n3 insert 6 20 20\n5 move 2 12 -3\n7 remove 5\n",
    )
    .unwrap();
    let inst = load_instance(&inst_path).unwrap();
    let schedule = EventSchedule::load(&ev_path).unwrap();
    assert!(matches!(schedule.events()[2].kind, EventKind::Remove(5)));
    let last = schedule.validate_against(&inst).unwrap();
    assert_eq!(last.ids(), vec![1, 2, 3, 4, 6]);
    let params = AcoParams {
        max_iters: 10,
        ..AcoParams::default()
    };
    let res = run_aco(&inst, &schedule, &params, 4).unwrap();
    assert_eq!(res.final_instance.ids(), last.ids());
    res.best_tour.validate(&res.final_instance).unwrap();
}

#[test]
fn broken_files_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    fs::write(&p, "3\n1 0 0\n2 1 zero\n3 2 2\n").unwrap();
    assert!(matches!(
        load_instance(&p),
        Err(Error::Format { line: 3, .. })
    ));
    fs::write(&p, "4 jump 1\n").unwrap();
    assert!(matches!(
        EventSchedule::load(&p),
        Err(Error::Format { line: 1, .. })
    ));
    assert!(matches!(
        load_instance(dir.path().join("missing.txt")),
        Err(Error::Io { .. })
    ));
}
