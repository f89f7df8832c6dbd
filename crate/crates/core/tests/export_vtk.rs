// Files written by the exporter are read back by an independent VTK parser.

use vtkio::model::{Attribute, DataSet, Extent, IOBuffer, Piece};
use vtkio::Vtk;
use wakegait::config::SimConfig;
use wakegait::export::{field_to_vtk, wake_to_vtk};
use wakegait::sim::{simulate, SimulationRun};
use wakegait::wake::{AdvectMode, FieldGrid};
use wakegait::Vec3;

fn small_run() -> SimulationRun {
    let mut cfg = SimConfig::default();
    cfg.wing.n_elements_per_side = 4;
    cfg.solver.dt_per_cycle = 50;
    cfg.solver.wake_mode = AdvectMode::Prescribed;
    cfg.resolve();
    simulate(&cfg).unwrap()
}

fn f64s(buf: IOBuffer) -> Vec<f64> {
    buf.cast_into::<f64>().expect("numeric buffer")
}

fn array(attrs: &[Attribute], name: &str) -> Vec<f64> {
    attrs
        .iter()
        .find_map(|a| match a {
            Attribute::DataArray(d) if d.name == name => Some(f64s(d.data.clone())),
            _ => None,
        })
        .unwrap_or_else(|| panic!("no array `{name}`"))
}

#[test]
fn wake_polydata_parses_with_vtkio() {
    let run = small_run();
    let w = &run.wake;
    let vtk = Vtk::parse_legacy_be(wake_to_vtk(w).as_bytes()).unwrap();
    let DataSet::PolyData { pieces, .. } = vtk.data else {
        panic!("expected POLYDATA")
    };
    let Piece::Inline(p) = pieces.into_iter().next().unwrap() else {
        panic!("expected inline piece")
    };

    let pts = f64s(p.points.clone());
    // (ring rows + 1) x (strips + 1)
    assert_eq!(w.faces.len(), (w.n_rows - 1) * w.n_strips);
    assert_eq!(pts.len(), 3 * w.n_rows * (w.n_strips + 1));
    assert_eq!(pts.len(), 3 * w.vertices.len());
    for (i, v) in w.vertices.iter().enumerate() {
        assert_eq!(Vec3::new(pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]), *v);
    }

    let (n_cells, conn) = p.polys.clone().unwrap().into_legacy();
    assert_eq!(n_cells as usize, w.faces.len());
    for (f, cell) in w.faces.iter().zip(conn.chunks(5)) {
        assert_eq!(cell[0], 4);
        let idx: Vec<usize> = cell[1..].iter().map(|&k| k as usize).collect();
        assert_eq!(idx, f.to_vec());
    }

    assert_eq!(array(&p.data.point, "phase"), w.phase);
    assert_eq!(array(&p.data.cell, "gamma"), w.face_gamma);
}

#[test]
fn field_structured_points_parse_with_vtkio() {
    let run = small_run();
    let grid = FieldGrid::spanning(Vec3::new(0.2, -0.2, -0.1), Vec3::new(0.5, 0.2, 0.1), [7, 5, 4]).unwrap();
    let field = run.vorticity(&grid);
    let vtk = Vtk::parse_legacy_be(field_to_vtk(&field).as_bytes()).unwrap();
    let DataSet::ImageData {
        extent,
        origin,
        spacing,
        pieces,
        ..
    } = vtk.data
    else {
        panic!("expected STRUCTURED_POINTS")
    };
    assert_eq!(extent, Extent::Dims([7, 5, 4]));
    for k in 0..3 {
        assert!((origin[k] as f64 - field.origin[k]).abs() < 1e-6);
        assert!((spacing[k] as f64 - field.spacing[k]).abs() < 1e-6);
    }
    let Piece::Inline(p) = pieces.into_iter().next().unwrap() else {
        panic!("expected inline piece")
    };
    assert_eq!(array(&p.data.point, "omega_x"), field.omega_x);
    let vel = array(&p.data.point, "velocity");
    assert_eq!(vel.len(), 3 * field.len());
    for (i, v) in field.velocity.iter().enumerate() {
        assert_eq!(Vec3::new(vel[3 * i], vel[3 * i + 1], vel[3 * i + 2]), *v);
    }
}

#[test]
fn zero_circulation_run_gives_an_all_zero_grid() {
    let mut cfg = SimConfig::default();
    cfg.wing.n_elements_per_side = 4;
    cfg.solver.dt_per_cycle = 50;
    cfg.gait.flap_amplitude = 0.0;
    cfg.resolve();
    let run = simulate(&cfg).unwrap();
    let grid = FieldGrid::spanning(Vec3::new(0.0, -0.2, -0.1), Vec3::new(0.6, 0.2, 0.1), [6, 5, 4]).unwrap();
    let vtk = Vtk::parse_legacy_be(field_to_vtk(&run.vorticity(&grid)).as_bytes()).unwrap();
    let DataSet::ImageData { pieces, .. } = vtk.data else {
        panic!("expected STRUCTURED_POINTS")
    };
    let Piece::Inline(p) = pieces.into_iter().next().unwrap() else {
        panic!("expected inline piece")
    };
    let omega = array(&p.data.point, "omega_x");
    assert_eq!(omega.len(), 6 * 5 * 4);
    assert!(omega.iter().all(|w| *w == 0.0));
    assert!(array(&p.data.point, "velocity").iter().all(|v| *v == 0.0));
}
