use bosonic_lindblad::validation;

#[test]
fn every_module_suite_passes() {
    let checks = validation::module_suites(20_240_601);
    assert_eq!(checks.len(), 16);
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}/{}: {}", c.suite, c.name, c.detail))
        .collect();
    assert!(failed.is_empty(), "{failed:#?}");
}

#[test]
fn criteria_are_addressable_by_number() {
    assert!(validation::criterion(0, 1).is_none());
    assert!(validation::criterion(11, 1).is_none());
    let c = validation::criterion(7, 1).expect("criterion 7");
    assert!(c.name.starts_with("criterion 7:"));
    assert!(c.passed, "{}", c.detail);
}
