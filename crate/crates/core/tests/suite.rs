use mmbox::suite::{run_suite, PROPERTIES};

#[test]
fn default_battery_passes() {
    let r = run_suite(0, &[]);
    for p in &r.properties {
        assert!(p.passed, "{}: {:?}", p.name, p.failures);
    }
    assert_eq!(r.properties.len(), PROPERTIES.len());
}

#[test]
fn subset_run() {
    let r = run_suite(3, &["triangle".to_string()]);
    assert_eq!(r.properties.len(), 1);
    assert!(r.passed);
}

#[test]
fn unknown_property_fails() {
    assert!(!run_suite(0, &["no-such".to_string()]).passed);
}

#[test]
fn every_property_checks_something() {
    let r = run_suite(1, &[]);
    for p in &r.properties {
        assert!(p.checked > 0, "{} checked nothing", p.name);
        println!("{} {} {}", p.name, p.checked, p.passed);
    }
}
