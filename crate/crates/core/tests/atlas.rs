//! Atlas sweeps, contours, center maps and their exports.

use std::collections::BTreeSet;

use afc_core::atlas::{center_map, generate_atlas, AtlasSpec, CenterMethod, CenterSpec, ContourField};
use afc_core::export::{write_atlas, write_center_map, Format};
use afc_core::FrequencyGrid;

fn small_spec(eta: f64, d0: &str, f: &str) -> AtlasSpec {
    let mut spec = AtlasSpec::new(eta);
    spec.d0_axis = d0.parse().unwrap();
    spec.f_axis = f.parse().unwrap();
    spec.grid = FrequencyGrid::symmetric(1.5, 2049).unwrap();
    spec.search.step = 0.025;
    spec
}

fn all_formats() -> BTreeSet<Format> {
    [Format::Csv, Format::Json, Format::Svg].into_iter().collect()
}

#[test]
fn worker_count_does_not_change_the_atlas() {
    let spec = small_spec(0.7, "10:40:10", "4:10:2");
    let one = generate_atlas(&spec, 1).unwrap();
    let many = generate_atlas(&spec, 4).unwrap();
    assert_eq!(one, many);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
}

#[test]
fn cells_are_complete_and_grow_with_depth() {
    let spec = small_spec(0.9, "2:60:4", "3:9:3");
    let atlas = generate_atlas(&spec, 0).unwrap();
    assert_eq!(atlas.cells.len(), atlas.f_axis.len());
    assert!(atlas.meta.failures.is_empty());
    for row in &atlas.cells {
        assert_eq!(row.len(), atlas.d0_axis.len());
        assert!(row.iter().all(|c| c.delta_qm_max >= 0.0 && c.delta_qm_max.is_finite()));
        for pair in row.windows(2) {
            assert!(pair[1].delta_qm_max >= pair[0].delta_qm_max - 1e-3, "{:?} -> {:?}", pair[0], pair[1]);
        }
    }
}

// At low targets the band can reach the comb edge, where η drops to zero in
// a dip narrower than the grid step.
#[test]
fn band_never_crosses_the_comb_edge() {
    let spec = small_spec(0.2, "10:60:10", "3:6:1.5");
    let atlas = generate_atlas(&spec, 0).unwrap();
    for c in atlas.cells.iter().flatten() {
        assert!(c.delta_qm_max <= c.delta0_opt + 1e-9, "{c:?}");
    }
}

#[test]
fn frontier_depth_is_monotone_in_width() {
    let spec = small_spec(0.5, "2:60:2", "5:5:1");
    let atlas = generate_atlas(&spec, 0).unwrap();
    let row = &atlas.cells[0];
    let frontier = |w: f64| row.iter().find(|c| c.delta_qm_max >= w).map(|c| c.d0);
    let mut last = 0.0;
    for k in 1..=12 {
        let w = 0.1 * k as f64;
        match frontier(w) {
            Some(d0) => {
                assert!(d0 >= last, "width {w}: d0 {d0} < {last}");
                last = d0;
            }
            None => last = f64::INFINITY,
        }
    }
}

#[test]
fn contour_vertices_straddle_their_level() {
    let spec = small_spec(0.7, "10:60:5", "3:12:1.5");
    let atlas = generate_atlas(&spec, 0).unwrap();
    assert!(atlas.contours.iter().any(|c| c.field == ContourField::DeltaQm));
    assert!(atlas.contours.iter().any(|c| c.field == ContourField::Delta0));
    let (x, y) = (&atlas.d0_axis, &atlas.f_axis);
    for line in &atlas.contours {
        let field = match line.field {
            ContourField::DeltaQm => atlas.delta_qm_matrix(),
            _ => atlas.delta0_matrix(),
        };
        for p in &line.points {
            let i = x.partition_point(|&v| v < p[0] - 1e-9).min(x.len() - 1);
            let j = y.partition_point(|&v| v < p[1] - 1e-9).min(y.len() - 1);
            let (a, b) = if (x[i] - p[0]).abs() < 1e-9 {
                (field[j.max(1) - 1][i], field[j.max(1)][i])
            } else {
                assert!((y[j] - p[1]).abs() < 1e-9, "vertex {p:?} off the grid lines");
                (field[j][i.max(1) - 1], field[j][i.max(1)])
            };
            assert!(a.min(b) - 1e-12 <= line.level && line.level <= a.max(b) + 1e-12);
        }
    }
}

#[test]
fn exports_are_complete_and_reproducible() {
    let spec = small_spec(0.7, "20:30:10", "5:6:1");
    let atlas = generate_atlas(&spec, 1).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = write_atlas(&atlas, a.path(), &all_formats()).unwrap();
    write_atlas(&atlas, b.path(), &all_formats()).unwrap();
    assert_eq!(files.len(), 3);
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let csv = std::fs::read_to_string(a.path().join("atlas_eta0.7.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "d0,f,delta_qm_max,delta0_opt");
    assert_eq!(lines.len(), 5);
    let svg = std::fs::read_to_string(a.path().join("atlas_eta0.7.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), atlas.contours.len());
    assert!(svg.contains("optical depth") && svg.contains("finesse"));
    let back: afc_core::atlas::EfficiencyAtlas =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("atlas_eta0.7.json")).unwrap()).unwrap();
    assert_eq!(back, atlas);
}

#[test]
fn export_reports_the_failing_path() {
    let spec = small_spec(0.7, "20:20:1", "5:5:1");
    let atlas = generate_atlas(&spec, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let err = write_atlas(&atlas, &blocker.join("sub"), &all_formats()).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn center_maps_agree_without_wings() {
    let mut analytic = CenterSpec::new(CenterMethod::Analytic);
    analytic.d0_axis = "1:60:3".parse().unwrap();
    analytic.f_axis = "2:15:1".parse().unwrap();
    let mut srf = analytic.clone();
    srf.method = CenterMethod::Srf;
    srf.design = srf.design.with_delta0(6.0).unwrap();
    let a = center_map(&analytic).unwrap();
    let s = center_map(&srf).unwrap();
    for (ra, rs) in a.eta_center.iter().zip(&s.eta_center) {
        for (x, y) in ra.iter().zip(rs) {
            assert!((x - y).abs() <= 0.02);
            assert!((0.0..=1.0).contains(y));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let files = write_center_map(&a, dir.path(), &all_formats()).unwrap();
    assert_eq!(files.len(), 3);
    let svg = std::fs::read_to_string(dir.path().join("center_map_analytic.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), a.contours.len());
}

#[test]
fn dilution_kills_high_finesse_column() {
    let mut spec = CenterSpec::new(CenterMethod::Analytic);
    spec.d0_axis = "10:10:1".parse().unwrap();
    spec.f_axis = "100:1000:300".parse().unwrap();
    let map = center_map(&spec).unwrap();
    let col: Vec<f64> = map.eta_center.iter().map(|r| r[0]).collect();
    assert!(col.windows(2).all(|p| p[1] < p[0]));
    assert!(col[col.len() - 1] < 2e-4);
}
