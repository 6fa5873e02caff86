//! Catalog of builtin experiments, one per verified statement.

use crate::config::ExperimentConfig;

pub struct Builtin {
    pub name: &'static str,
    pub description: &'static str,
    preset: &'static str,
}

const CATALOG: &[Builtin] = &[
    Builtin {
        name: "classical-bs-1d",
        description: "classical functional inequality on the line: Gaussian pair attains 2 pi, 100 best-response pairs stay below",
        preset: r#"{"experiment": "verify-functional", "mode": "bound", "seed": 1, "trials": 100,
            "cost": {"family": "inner-product", "N": 2, "n": 1}, "grid": {"half_width": 8.0, "points": 321},
            "reference": "gaussian", "oracle": {"value": 6.283185307179586, "tol": 0.01},
            "bound": {"value": 6.283185307179586, "tol": 0.02}, "tuple": {"source": "random"}}"#,
    },
    Builtin {
        name: "thm-1.1-product-cost",
        description: "triple product cost on the line: transport maximizer attains (2 Gamma(1/3) / 3^(2/3))^3, 50 random tuples stay below",
        preset: r#"{"experiment": "verify-functional", "mode": "bound", "seed": 2, "trials": 50,
            "cost": {"family": "product", "N": 3, "n": 1}, "grid": {"half_width": 8.0, "points": 321},
            "reference": "maximize", "oracle": {"value": 17.089750624529515, "tol": 0.01},
            "bound": {"value": 17.089750624529515, "tol": 0.02}, "tuple": {"source": "random"}}"#,
    },
    Builtin {
        name: "product-cost-plane",
        description: "triple product cost in the plane: separable maximizer attains the squared line constant, separable random tuples stay below",
        preset: r#"{"experiment": "verify-functional", "mode": "bound", "seed": 3, "trials": 10,
            "cost": {"family": "product", "N": 3, "n": 2}, "grid": {"half_width": 6.0, "points": 121},
            "reference": "maximize-separable", "oracle": {"value": 292.059576408607, "tol": 0.03},
            "bound": {"value": 292.059576408607, "tol": 0.03}, "tuple": {"source": "random", "separable": true}}"#,
    },
    Builtin {
        name: "maximizer-homogeneity",
        description: "maximizer for c = xy on the line is 2-homogeneous",
        preset: r#"{"experiment": "verify-functional", "mode": "homogeneity",
            "cost": {"family": "product", "N": 2, "n": 1}, "reference": "maximize",
            "homogeneity": {"value": 2.0, "tol": 0.1}}"#,
    },
    Builtin {
        name: "maximizer-homogeneity-triple",
        description: "maximizer for the triple product cost on the line is 3-homogeneous",
        preset: r#"{"experiment": "verify-functional", "mode": "homogeneity",
            "cost": {"family": "product", "N": 3, "n": 1}, "reference": "maximize",
            "homogeneity": {"value": 3.0, "tol": 0.15}}"#,
    },
    Builtin {
        name: "stationarity-identities",
        description: "first-order and variance identities at the Gaussian pair",
        preset: r#"{"experiment": "verify-functional", "mode": "stationarity",
            "cost": {"family": "product", "N": 2, "n": 1}, "reference": "gaussian",
            "stationarity": {"first_order_tol": 1e-3, "variance_target": 1.0, "variance_tol": 5e-3}}"#,
    },
    Builtin {
        name: "transport-monotonicity",
        description: "transport step does not lower the functional on 50 random discrete instances, exact LP",
        preset: r#"{"experiment": "transport", "mode": "monotonicity", "seed": 5, "trials": 50, "max_points": 6,
            "costs": [{"family": "product", "N": 2, "n": 1}, {"family": "product", "N": 3, "n": 1},
                      {"family": "product", "N": 2, "n": 2}, {"family": "product", "N": 3, "n": 2}]}"#,
    },
    Builtin {
        name: "thm-2.4-transport-entropy",
        description: "transport-entropy inequality at the even maximizer, 50 random nu per cost family",
        preset: r#"{"experiment": "transport", "mode": "transport-entropy", "seed": 6, "trials": 50, "max_points": 6,
            "costs": [{"family": "inner-product", "N": 2, "n": 1}, {"family": "product", "N": 3, "n": 1}]}"#,
    },
    Builtin {
        name: "dual-certificate",
        description: "transport-entropy chain certifies the even maximizer against random admissible challengers",
        preset: r#"{"experiment": "transport", "mode": "certificate", "seed": 7, "trials": 20, "max_points": 6,
            "costs": [{"family": "inner-product", "N": 2, "n": 1}, {"family": "product", "N": 3, "n": 1}]}"#,
    },
    Builtin {
        name: "set-function-lift",
        description: "lifts of 20 polygon tuples are admissible; the lifted disk pair dominates 20 random function tuples",
        preset: r#"{"experiment": "verify-sets", "mode": "lift", "seed": 8, "trials": 20,
            "cost": {"family": "product", "N": 2, "n": 2}, "grid": {"half_width": 14.0, "points": 281},
            "tuple": {"source": "builtin", "name": "disk"}, "slack_tol": 1e-6, "ratio_tol": 1e-3, "rel_tol": 0.02}"#,
    },
    Builtin {
        name: "layer-cake",
        description: "integral of exp(-|x|_K^b) equals |K| Gamma(1 + n/b) for 10 random polygons",
        preset: r#"{"experiment": "verify-sets", "mode": "layer-cake", "seed": 11, "trials": 10,
            "cost": {"family": "product", "N": 2, "n": 2}, "grid": {"half_width": 6.0, "points": 241},
            "betas": [2.0, 3.0, 4.0], "rel_tol": 1e-3}"#,
    },
    Builtin {
        name: "symmetrization",
        description: "coordinate symmetrization of 100 polygon tuples: monotone steps, unconditional within 8 rounds",
        preset: r#"{"experiment": "symmetrize", "mode": "unconditionalize", "seed": 12, "trials": 100, "max_rounds": 8,
            "cost": {"family": "product", "N": 2, "n": 2},
            "measures": [{"kind": "lebesgue"}, {"kind": "gaussian"}]}"#,
    },
    Builtin {
        name: "sphere-reduction",
        description: "homogeneous lift multiplies the spherical value by a constant; feasibility signs agree",
        preset: r#"{"experiment": "sphere", "mode": "reduction", "seed": 9, "trials": 20,
            "cost": {"family": "inner-product", "N": 2, "n": 2}, "grid": {"half_width": 6.0, "points": 121},
            "ratio_tol": 1e-3}"#,
    },
    Builtin {
        name: "spherical-improvement",
        description: "transport step on profiles never lowers the spherical value and fixes the constant profiles",
        preset: r#"{"experiment": "sphere", "mode": "improvement", "seed": 10, "trials": 20, "directions": 48,
            "cost": {"family": "inner-product", "N": 2, "n": 2}, "ratio_tol": 1e-3}"#,
    },
    Builtin {
        name: "exponent-system",
        description: "product cost exponents (alpha, beta, tau, p) = (1, N, 1/N, N) in exact arithmetic",
        preset: r#"{"experiment": "exponents", "mode": "product-cost", "cost": {"family": "product", "N": 3, "n": 2}}"#,
    },
    Builtin {
        name: "exponent-system-weighted",
        description: "weighted product exponents give beta_i = A in exact arithmetic",
        preset: r#"{"experiment": "exponents", "mode": "weighted-product", "degrees": ["1", "1/2", "2/3"],
            "cost": {"family": "product", "N": 3, "n": 2}}"#,
    },
    Builtin {
        name: "weighted-product-inequality",
        description: "weighted product inequality on the positive half-line with rho = exp(-u), random AM-GM tuples",
        preset: r#"{"experiment": "verify-functional", "mode": "weighted-product", "seed": 13, "trials": 10,
            "cost": {"family": "weighted-product", "N": 3, "n": 1, "params": {"alpha": [1.0, 2.0, 1.5]}},
            "grid": {"half_width": 8.0, "points": 4001}}"#,
    },
];

pub fn catalog() -> &'static [Builtin] {
    CATALOG
}

/// The preset config of a builtin, with its `builtin` field set.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let b = CATALOG.iter().find(|b| b.name == name)?;
    let mut cfg: ExperimentConfig = serde_json::from_str(b.preset).expect("builtin presets are valid");
    cfg.builtin = Some(name.to_string());
    Some(cfg)
}
