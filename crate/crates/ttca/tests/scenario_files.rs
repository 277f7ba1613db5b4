use rand::{Rng, SeedableRng};
use ttca::scenario::{kmh_to_ms, load_scenario, ms_to_kmh, parse_speed, LoadError};
use ttca_core::plan::{run_cpf, run_ttca, Scenario};
use ttca_core::Error;

const HIGHWAY: &str = include_str!("../../../scenarios/highway.json");

#[test]
fn highway_file_matches_builtin_scenario() {
    let s = load_scenario(HIGHWAY).unwrap();
    assert!((s.ego.speed - 30.0).abs() < 1e-12);
    assert!((s.obstacle.unwrap().speed - 25.0).abs() < 1e-12);
    assert_eq!(s, Scenario::highway());
}

#[test]
fn empty_file_is_missing_its_road() {
    for text in ["", "  \n", "{}"] {
        match load_scenario(text) {
            Err(LoadError::Validation(m)) => assert!(m.contains("road"), "{m}"),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn obstacle_off_the_road_is_rejected() {
    let text = HIGHWAY.replace(r#""x": 120.0, "y": 6.0"#, r#""x": 120.0, "y": 9.0"#);
    assert!(matches!(load_scenario(&text), Err(LoadError::Validation(_))));
}

#[test]
fn parse_errors_name_line_and_key() {
    let text = "{\n  \"road\": { \"edge_lower_y\": 1.5, \"lane_width\": 3.0 },\n  \"ego\": { \"x\": 0, \"y\": 6, \"speed\": 30, \"colour\": 1 }\n}";
    match load_scenario(text) {
        Err(LoadError::Parse { line, key, message, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(key, "ego.colour");
            assert!(message.contains("unknown field"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    match load_scenario("{\"road\": {\"edge_lower_y\": \"low\"}}") {
        Err(LoadError::Parse { line: 1, key, .. }) => assert_eq!(key, "road.edge_lower_y"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn speed_units() {
    assert_eq!(parse_speed("30").unwrap(), 30.0);
    assert_eq!(parse_speed("30 m/s").unwrap(), 30.0);
    assert!((parse_speed("90km/h").unwrap() - 25.0).abs() < 1e-12);
    assert!(parse_speed("55 mph").is_err());
    assert!(parse_speed("fast").is_err());
    let mut rng = rand::rngs::StdRng::seed_from_u64(2);
    for _ in 0..10_000 {
        let v: f64 = rng.gen_range(0.0..300.0);
        assert!((ms_to_kmh(kmh_to_ms(v)) - v).abs() <= 1e-12);
        assert!((kmh_to_ms(ms_to_kmh(v)) - v).abs() <= 1e-12);
    }
}

#[test]
fn absent_keys_take_derived_defaults() {
    let s = load_scenario(HIGHWAY).unwrap();
    let b = Scenario::highway();
    assert_eq!(s.field.xi, b.field.xi);
    let tuned = HIGHWAY.replace(r#""sim": { "dt": 0.01 }"#, r#""sim": { "dt": 0.01 }, "field": { "a_lane": 0.5 }"#);
    let t = load_scenario(&tuned).unwrap();
    assert_eq!(t.field.a_lane, 0.5);
    assert!(t.field.xi > s.field.xi, "edge scale follows the divider height");
}

#[test]
fn inverted_corridor_is_infeasible() {
    let text = HIGHWAY.replace(r#""sim": { "dt": 0.01 }"#, r#""sim": { "dt": 0.01 }, "fit": { "corridor": [4.0, 3.0] }"#);
    let s = load_scenario(&text).unwrap();
    assert_eq!(run_ttca(&s).unwrap_err(), Error::Infeasible);
}

#[test]
fn empty_road_ahead_has_no_lane_change() {
    let text = r#"{ "road": { "edge_lower_y": 1.5, "lane_width": 3.0 }, "ego": { "x": 0, "y": 6, "speed": 30 } }"#;
    let s = load_scenario(text).unwrap();
    assert!(matches!(run_cpf(&s), Err(Error::NoLaneChangeDetected { .. })));
}

#[test]
fn doubled_lane_width_moves_one_wider_lane() {
    let text = r#"{
        "road": { "edge_lower_y": -3.0, "lane_width": 6.0 },
        "ego": { "x": 0, "y": 6, "speed": "108 km/h" },
        "obstacle": { "x": 120, "y": 6, "speed": "90 km/h" }
    }"#;
    let s = load_scenario(text).unwrap();
    let r = run_cpf(&s).unwrap();
    let last = r.log.samples.last().unwrap();
    assert!((6.0 - last.y - 6.0).abs() <= 0.1, "ends at y = {}", last.y);
}
