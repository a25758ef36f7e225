use proptest::prelude::*;
use waternet::engine::optimize;
use waternet::gen::{generate, random_network, shape_specs, Shape, Variant};
use waternet::milp::BuildOptions;
use waternet::network::Network;
use waternet::scenario::{sample_instance, trial_flows, ParamValue};
use waternet::solver::SolveLimits;
use waternet::validate::validate;
use waternet::OptimizeRequest;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(seed in 0u64..10_000) {
        let net = random_network(seed);
        prop_assert!(validate(&net).is_valid());
        let text = net.to_canonical_json();
        let back = Network::from_json(&text).unwrap();
        prop_assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn sampled_values_stay_in_range(seed in 0u64..1_000, trial in 0usize..500) {
        let base = generate(Shape::Refinery, Variant::Updated, 0).unwrap();
        let specs = shape_specs(Shape::Refinery);
        let a = sample_instance(&base, &specs, seed, trial, false).unwrap();
        let b = sample_instance(&base, &specs, seed, trial, false).unwrap();
        prop_assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        let json: serde_json::Value = serde_json::from_str(&a.to_canonical_json()).unwrap();
        for spec in &specs {
            let ParamValue::Range { lower, upper, .. } = spec.value else { continue };
            let mut node = &json["components"][&spec.target];
            for part in spec.attribute.split('.') {
                node = &node[part];
            }
            let v = node.as_f64().unwrap_or_else(|| panic!("{}.{} missing", spec.target, spec.attribute));
            prop_assert!(v >= lower && v <= upper, "{}.{} = {v}", spec.target, spec.attribute);
        }
    }

    #[test]
    fn treated_water_balances(seed in 0u64..400) {
        let net = random_network(seed);
        let request = OptimizeRequest { build: BuildOptions::with_k(4), limits: SolveLimits::exact(), ..OptimizeRequest::default() };
        let solution = optimize(&net, &request).unwrap();
        if let Some(t) = trial_flows(&net, &solution) {
            let out = t.discharged + t.reused + t.other_received + t.losses;
            prop_assert!((t.treated - out).abs() <= 1e-6 * t.treated.max(1.0), "{t:?}");
            prop_assert!(t.freshwater_intake <= t.total_intake + 1e-9);
        }
    }
}
