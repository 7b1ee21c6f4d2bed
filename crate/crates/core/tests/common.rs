#![allow(dead_code)]

use std::path::PathBuf;

use elq::harness::{run, Config, Report, Scenario};

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn run_fixture(doc: &str, css: &str, scenario: &str) -> Report {
    run_with(doc, css, scenario, &Config::default())
}

pub fn run_with(doc: &str, css: &str, scenario: &str, config: &Config) -> Report {
    let scenario = Scenario::parse(&fixture(scenario)).unwrap();
    run(&fixture(doc), &fixture(css), &scenario, config).unwrap()
}

pub fn classes(report: &Report, id_or_class: &str) -> Vec<String> {
    element(report, id_or_class).classes.clone()
}

/// Looks an element up by id, falling back to the first one with the class.
pub fn element<'a>(report: &'a Report, key: &str) -> &'a elq::harness::ElementReport {
    report
        .element_by_id(key)
        .or_else(|| report.elements.iter().find(|e| e.classes.iter().any(|c| c == key)))
        .unwrap_or_else(|| panic!("no element {key}"))
}

pub fn style<'a>(report: &'a Report, key: &str, property: &str) -> Option<&'a str> {
    element(report, key).style.get(property).map(String::as_str)
}
