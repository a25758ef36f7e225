use waternet::engine::{check, check_options_for, optimize};
use waternet::gen::{generate, implement, shape_config, Shape, Variant};
use waternet::network::{ObjectiveKind, Sense};
use waternet::scenario::{compare_networks, has_attribute, run_trials, TrialStatus};

#[test]
fn every_shape_solves_and_checks() {
    for shape in Shape::ALL {
        for variant in [Variant::Current, Variant::Updated] {
            let net = generate(shape, variant, 7).unwrap();
            let config = shape_config(shape);
            let mut request = config.request();
            // Exclusivity is only declared for the updated layouts.
            if variant == Variant::Current {
                request.build.conflicts.clear();
            }
            // The larger layouts may stop on time; their incumbent must still hold.
            request.limits.max_time = 5.0;
            let solution = optimize(&net, &request).unwrap();
            assert!(solution.has_flows(), "{shape} {variant:?}: {:?}", solution.status);
            let report = check(&net, &solution, &check_options_for(&request.build)).unwrap();
            assert!(report.feasible, "{shape} {variant:?}: {:?}", report.violations);
            let (a, b) = (solution.objective_value.unwrap(), report.objective_value.unwrap());
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{shape} {variant:?}: {a} vs {b}");
        }
    }
}

#[test]
fn chem_a_minimizes_freshwater() {
    let net = generate(Shape::ChemA, Variant::Current, 3).unwrap();
    let objective = net.objective.clone().unwrap();
    assert_eq!((objective.kind, objective.sense), (ObjectiveKind::TotalFlow, Sense::Minimize));
    assert_eq!(objective.scope, ["FW1", "FW2"]);
    let mut request = shape_config(Shape::ChemA).request();
    request.build.conflicts.clear();
    let solution = optimize(&net, &request).unwrap();
    let intake: f64 = solution.flows.iter().filter(|(e, _)| e.starts_with("FW")).map(|(_, f)| f).sum();
    assert!((intake - solution.objective_value.unwrap()).abs() < 1e-6);
}

#[test]
fn refinery_trials_repeat_across_worker_counts() {
    let base = generate(Shape::Refinery, Variant::Updated, 11).unwrap();
    let mut config = shape_config(Shape::Refinery);
    config.n_trials = 24;
    config.seed = 5;
    let one = run_trials(&config, &base, 1).unwrap();
    let two = run_trials(&config, &base, 2).unwrap();
    assert_eq!(one.to_json(), two.to_json());
    assert_eq!(one.errored, 0);
    let tallied: usize = one.frequencies.values().sum::<usize>() + one.no_option + one.infeasible + one.errored;
    assert_eq!(tallied, config.n_trials);
    assert!(one.per_trial.iter().all(|t| t.status != TrialStatus::TimedOut));
}

#[test]
fn refinery_upgrade_reuses_water_and_cuts_losses() {
    let current = generate(Shape::Refinery, Variant::Current, 2).unwrap();
    let updated = implement(&generate(Shape::Refinery, Variant::Updated, 2).unwrap(), &["S3", "B"]);
    let mut config = shape_config(Shape::Refinery);
    config.n_trials = 20;
    // Ranges of the settings that were not chosen no longer apply.
    config.specs.retain(|s| has_attribute(&current, &s.target, &s.attribute) || has_attribute(&updated, &s.target, &s.attribute));
    let comparison = compare_networks(&current, &updated, &config, 1).unwrap();
    assert_eq!(comparison.current.reused_pct, 0.0);
    assert!(comparison.updated.reused_pct > 0.0);
    let feasible: Vec<_> = comparison.per_trial.iter().filter_map(|t| t.current.as_ref().filter(|c| c.treated > 1e-9).map(|c| (c, t.updated.as_ref()))).collect();
    assert!(!feasible.is_empty());
    let lower = feasible.iter().filter(|(c, u)| u.is_some_and(|u| u.treated > 1e-9 && u.losses / u.treated < c.losses / c.treated)).count();
    assert!(lower * 10 >= feasible.len() * 9, "{lower} of {}", feasible.len());
}

#[test]
fn shapes_are_reproducible_from_the_seed() {
    for shape in Shape::ALL {
        let a = generate(shape, Variant::Updated, 42).unwrap();
        let b = generate(shape, Variant::Updated, 42).unwrap();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        assert_ne!(a.to_canonical_json(), generate(shape, Variant::Updated, 43).unwrap().to_canonical_json());
    }
}
