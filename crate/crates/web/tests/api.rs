use reservoir_lattice_web::{eigenmode, exclusion_snapshot, harmonic};

#[test]
fn harmonic_profile_of_a_constant_is_that_constant() {
    for shape in ["square", "disk", "lshape"] {
        let f = harmonic(shape, 0.125, "1", "0.4").unwrap();
        assert_eq!(f.xs().len(), f.sites());
        assert!(f.values().iter().all(|v| (v - 0.4).abs() < 1e-10), "{shape}");
        assert_eq!(f.outer_values().len(), f.outer_xs().len());
    }
}

#[test]
fn ground_mode_is_positive_and_ordered() {
    let g = eigenmode("square", 0.125, "0", 0).unwrap();
    let e = eigenmode("square", 0.125, "0", 1).unwrap();
    assert!(g.values().iter().all(|v| *v > 0.0));
    assert!(g.scalar() > 0.0 && g.scalar() <= e.scalar());
    assert_eq!(eigenmode("disk", 0.125, "inf", 0).unwrap().scalar(), 0.0);
}

#[test]
fn snapshots_respect_exclusion_and_seeds() {
    let a = exclusion_snapshot("lshape", 0.0625, "0", "0.5 + 0.4 * x1", 0.3, 7).unwrap();
    let b = exclusion_snapshot("lshape", 0.0625, "0", "0.5 + 0.4 * x1", 0.3, 7).unwrap();
    assert_eq!(a.values(), b.values());
    assert!(a.values().iter().all(|v| *v == 0.0 || *v == 1.0));
    assert_eq!(a.scalar(), a.values().iter().sum::<f64>());
    assert!(a.scalar() > 0.0);
}

#[test]
fn bad_inputs_are_reported() {
    assert!(harmonic("triangle", 0.125, "1", "0.5").is_err());
    assert!(harmonic("square", 0.001, "1", "0.5").is_err());
    assert!(harmonic("square", 0.125, "inf", "0.5").is_err());
    assert!(harmonic("square", 0.125, "1", "0.5 +").is_err());
    assert!(exclusion_snapshot("square", 0.125, "1", "1.5", 0.1, 1).is_err());
}
