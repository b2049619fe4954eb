use shelfmix_web::{curve, profile, valley_laws, MAX_CURVE_POINTS};

#[test]
fn curve_interleaves_exact_and_asymptotic() {
    let c = curve(52, 52).unwrap();
    assert_eq!(c.len(), 104);
    assert!((c[102] - 0.14721).abs() < 5e-6);
    assert!((c[103] - 0.15071).abs() < 5e-6);
    assert_eq!(c[0], 1.0);
}

#[test]
fn curve_one_card_has_no_asymptotic() {
    let c = curve(1, 3).unwrap();
    assert_eq!(c[0], 0.0);
    assert!(c[1].is_nan());
}

#[test]
fn curve_bounds() {
    assert!(curve(52, 0).is_err());
    assert!(curve(52, MAX_CURVE_POINTS + 1).is_err());
    assert!(curve(65, 10).is_err());
}

#[test]
fn profile_decreases() {
    let p = profile(52, -3.0, 3.0, 13).unwrap();
    assert_eq!(p.len(), 13);
    assert!(p.windows(2).all(|w| w[0] >= w[1]));
    assert!(profile(52, 1.0, 1.0, 5).is_err());
    assert!(profile(52, 0.0, 1.0, 1).is_err());
}

#[test]
fn laws_are_probability_vectors() {
    let v = valley_laws(10, 4).unwrap();
    assert_eq!(v.len(), 10);
    let (a, b) = v.split_at(5);
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // Four shelves cannot reach four valleys.
    assert_eq!(a[4], 0.0);
}
