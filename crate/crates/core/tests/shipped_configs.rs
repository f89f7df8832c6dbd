use std::path::PathBuf;

use wakegait::config::{load_config, save_config};
use wakegait::morphology::GaitMode;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn baseline_is_the_paper_operating_point() {
    let cfg = load_config(configs().join("paper_baseline.json")).unwrap();
    assert_eq!(cfg.flight.forward_speed, 1.0);
    assert_eq!(cfg.gait.frequency, 2.0);
    assert_eq!(cfg.wing.mean_chord(), 0.15);
    assert!((2.0 * cfg.wing.semispan() - 0.34).abs() < 1e-15);
    assert_eq!(cfg.solver.dt_per_cycle, 200);
    assert_eq!(cfg.solver.n_keep_cycles, 3);
}

#[test]
fn shipped_configs_round_trip_byte_stable() {
    let tmp = tempfile::TempDir::new().unwrap();
    for name in ["paper_baseline.json", "one_axis.json", "three_axes.json"] {
        let a = load_config(configs().join(name)).unwrap();
        let p1 = tmp.path().join(format!("1_{name}"));
        save_config(&a, &p1).unwrap();
        let b = load_config(&p1).unwrap();
        assert_eq!(a, b, "{name}");
        let p2 = tmp.path().join(format!("2_{name}"));
        save_config(&b, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap(), "{name}");
    }
}

#[test]
fn comparison_pair_differs_only_in_mode() {
    let one = load_config(configs().join("one_axis.json")).unwrap();
    let mut three = load_config(configs().join("three_axes.json")).unwrap();
    assert_eq!(one.gait.mode, GaitMode::OneAxis);
    assert_eq!(three.gait.mode, GaitMode::ThreeAxes);
    three.gait.mode = GaitMode::OneAxis;
    three.output_dir.clone_from(&one.output_dir);
    assert_eq!(one, three);
}
