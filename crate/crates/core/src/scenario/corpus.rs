use super::{parse_scenario, Scenario, ScenarioErrors};

/// Bundled scenarios as (name, document).
pub const BUNDLED: &[(&str, &str)] = &[
    ("coastal_radar", include_str!("../../scenarios/coastal_radar.json")),
    ("mocn_shared", include_str!("../../scenarios/mocn_shared.json")),
    ("standalone_A", include_str!("../../scenarios/standalone_A.json")),
    ("standalone_B", include_str!("../../scenarios/standalone_B.json")),
    (
        "batch_vs_realtime",
        include_str!("../../scenarios/batch_vs_realtime.json"),
    ),
    ("dca_grid", include_str!("../../scenarios/dca_grid.json")),
];

pub fn corpus_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Looks up and parses a bundled scenario; `None` if the name is unknown.
pub fn bundled(name: &str) -> Option<Result<Scenario, ScenarioErrors>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text))
}
