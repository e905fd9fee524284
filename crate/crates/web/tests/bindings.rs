use momentum_lmm_web::{locus_points, method, region_cells, toy_points};

#[test]
fn locus_is_interleaved_pairs() {
    let pts = locus_points("ab", 1, 1.0, 9).unwrap();
    assert_eq!(pts.len(), 18);
    // Euler traces e^{iθ} - 1, so θ = -π lands on -2
    assert!((pts[0] + 2.0).abs() < 1e-15 && pts[1].abs() < 1e-15);
}

#[test]
fn region_matches_euler_disk() {
    let cells = region_cells("ab", 1, 1.0, -2.0, 0.0, -1.0, 1.0, 5).unwrap();
    assert_eq!(cells.len(), 25);
    // row 2 is im = 0: re = -2, -1.5, -1, -0.5, 0 all on or inside the disk |z + 1| <= 1
    assert_eq!(&cells[10..15], &[1, 1, 1, 1, 1]);
    assert_eq!(cells[0], 0);
}

#[test]
fn toy_trajectory_triples() {
    let pts = toy_points("ghvb", 2, 0.9, 26).unwrap();
    assert_eq!(pts.len(), 27 * 3);
    assert_eq!(&pts[..3], &[0.0, -1.0, 0.0]);
    assert_eq!(pts[78], 3.0);
}

#[test]
fn bad_input_is_reported() {
    assert!(method("rk4", 2, 0.5).is_err());
    assert!(method("hb", 7, 0.5).is_err());
    assert!(locus_points("ghvb", 2, 0.0, 64).is_err());
    assert!(region_cells("ab", 2, 1.0, 0.0, 0.0, -1.0, 1.0, 5).is_err());
}
