//! Scenario presets shipped with the binary.

/// `(name, description, TOML)`.
pub const PRESETS: &[(&str, &str, &str)] = &[
    ("lv-coexistence", "mass system, stable coexistence point", include_str!("../presets/lv-coexistence.toml")),
    ("lv-exclusion-u", "mass system, u excludes v", include_str!("../presets/lv-exclusion-u.toml")),
    ("lv-exclusion-v", "mass system, v excludes u", include_str!("../presets/lv-exclusion-v.toml")),
    ("lv-degenerate", "mass system, line of equilibria", include_str!("../presets/lv-degenerate.toml")),
    ("lv-bistable", "mass system, saddle with two basins", include_str!("../presets/lv-bistable.toml")),
    ("separatrix-symmetric", "bistable separatrix with equal rates", include_str!("../presets/separatrix-symmetric.toml")),
    ("separatrix-d-above-m", "bistable separatrix, concave", include_str!("../presets/separatrix-d-above-m.toml")),
    ("separatrix-d-below-m", "bistable separatrix, convex", include_str!("../presets/separatrix-d-below-m.toml")),
    ("ode-coexistence", "integro-differential coexistence, masses (1, 0.5)", include_str!("../presets/ode-coexistence.toml")),
    ("ode-coexistence-large", "integro-differential coexistence, masses (8, 2)", include_str!("../presets/ode-coexistence-large.toml")),
    ("ode-u-wins", "integro-differential exclusion of v", include_str!("../presets/ode-u-wins.toml")),
    ("ode-v-wins", "integro-differential exclusion of u", include_str!("../presets/ode-v-wins.toml")),
    ("ode-continuum", "integro-differential degenerate case", include_str!("../presets/ode-continuum.toml")),
    ("ode-bistable-u", "integro-differential bistable, u side", include_str!("../presets/ode-bistable-u.toml")),
    ("ode-bistable-v", "integro-differential bistable, v side", include_str!("../presets/ode-bistable-v.toml")),
    ("pde-coexistence", "reaction-diffusion coexistence", include_str!("../presets/pde-coexistence.toml")),
    ("pde-stationary", "reaction-diffusion started at the steady state", include_str!("../presets/pde-stationary.toml")),
    ("pde-symmetric-u", "reaction-diffusion bistable, symmetric landscapes, u side", include_str!("../presets/pde-symmetric-u.toml")),
    ("pde-symmetric-v", "reaction-diffusion bistable, symmetric landscapes, v side", include_str!("../presets/pde-symmetric-v.toml")),
    ("pde-asymmetric-u", "reaction-diffusion bistable, shifted landscapes, u side", include_str!("../presets/pde-asymmetric-u.toml")),
    ("pde-asymmetric-v", "reaction-diffusion bistable, shifted landscapes, v side", include_str!("../presets/pde-asymmetric-v.toml")),
    ("steady-coexistence", "steady state of the coexistence landscapes", include_str!("../presets/steady-coexistence.toml")),
    ("sweep-c", "c sweep across the coexistence threshold", include_str!("../presets/sweep-c.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RunConfig;

    #[test]
    fn every_preset_parses_and_round_trips() {
        for (name, _, text) in PRESETS {
            let cfg = RunConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg, "{name}");
        }
    }

    #[test]
    fn lookup() {
        assert!(preset("ode-coexistence").is_some());
        assert!(preset("nope").is_none());
    }
}
