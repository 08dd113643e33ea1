use emfactor_demo::{bands_json, eq7_residuals_json, r0_decay_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn constant_bands_are_free_cones() {
    let v = parse(bands_json("constant", 0.0, 3, 1.2).unwrap());
    let rows = v["values"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    // At Γ the window |λ| ≤ 1.2 holds 0 (×8) and ±1 (×4 each, six modes).
    assert_eq!(rows[0].as_array().unwrap().len(), 8 + 48);
    assert_eq!(v["hermitian_defect"].as_f64().unwrap(), 0.0);
}

#[test]
fn dealiased_residual_decays_with_n() {
    let v = parse(eq7_residuals_json("periodic-mild", 0.3, &[4, 8, 5, 16], 1).unwrap());
    let rows: Vec<(f64, f64)> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["aliased"].as_f64().unwrap(), r["dealiased"].as_f64().unwrap()))
        .collect();
    assert_eq!(rows.len(), 3);
    for (a, d) in &rows {
        assert!(*a > 100.0 * d, "{a} vs {d}");
    }
    assert!(rows[1].1 < 1e-2 * rows[0].1 && rows[2].1 < 1e-4 * rows[1].1);
    assert!(rows[2].1 < 1e-10);
}

#[test]
fn decay_report_and_errors() {
    let v = parse(r0_decay_json(0.3, 0.5, vec![5.0, 10.0, 20.0]).unwrap());
    assert!(v["spread"].as_f64().unwrap() < 2.0);
    assert!(r0_decay_json(0.3, 0.5, vec![2.0, 1.0]).is_err());
    assert!(bands_json("nope", 0.0, 3, 1.0).is_err());
}
