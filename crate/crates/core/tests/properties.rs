use nalgebra::DMatrix;
use proptest::prelude::*;
use qsl_core::dynamics::{norm, propagate_forward};
use qsl_core::fields::{
    field_to_unbounded, generate_random_field, unbounded_to_field, Bounds, RandomFieldSpec, TimeGrid,
};
use qsl_core::gates::{entangling_power_of, make_gate, GateName};
use qsl_core::models::{AtomArrayConfig, FieldConfiguration, PlatformConfig, TransmonPlaquetteConfig};
use qsl_core::optimizer::KrotovOptions;
use qsl_core::qslscan::{qsl_from_best, GateProblem, GuessSpec};
use qsl_core::C64;

fn hermiticity_defect(h: &DMatrix<C64>) -> f64 {
    (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn controls_within(platform: &PlatformConfig, fc: FieldConfiguration, unit: &[f64]) -> Vec<f64> {
    let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
    let (_, fields) = platform.build(fc, &grid).unwrap();
    fields
        .iter()
        .zip(unit.iter().cycle())
        .map(|(f, &x)| match f.bounds {
            Some(b) => b.center() + 0.999 * x * b.half_width(),
            None => std::f64::consts::PI * x,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounded_map_round_trip(lo in -50.0..50.0f64, width in 0.01..100.0f64, u in -30.0..30.0f64) {
        let b = Bounds::new(lo, lo + width).unwrap();
        let v = unbounded_to_field(u, b);
        prop_assert!(v > b.min && v < b.max);
        if u.abs() < 5.0 {
            let back = field_to_unbounded(v, b).unwrap();
            prop_assert!((back - u).abs() < 1e-6 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn random_fields_reproducible(seed: u64, m_min in 1u32..5, extra in 0u32..20) {
        let grid = TimeGrid::new(0.0, 10.0, 64).unwrap();
        let spec = RandomFieldSpec { m_min, m_max: m_min + extra, seed, scale: 1.0 };
        prop_assert_eq!(generate_random_field(&spec, &grid).unwrap(), generate_random_field(&spec, &grid).unwrap());
    }

    #[test]
    fn atom_hamiltonians_hermitian(unit in prop::collection::vec(-1.0..1.0f64, 8), n in 2usize..=4) {
        let platform = PlatformConfig::Atoms(AtomArrayConfig::standard(n).unwrap());
        for fc in [FieldConfiguration::AtomsParallel, FieldConfiguration::AtomsPhase] {
            let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
            let (model, _) = platform.build(fc, &grid).unwrap();
            let h = model.hamiltonian(&controls_within(&platform, fc, &unit));
            prop_assert!(hermiticity_defect(&h) < 1e-12);
        }
    }

    #[test]
    fn transmon_hamiltonians_hermitian(unit in prop::collection::vec(-1.0..1.0f64, 8)) {
        let platform = PlatformConfig::Transmons(TransmonPlaquetteConfig::standard(2).unwrap());
        for fc in [FieldConfiguration::ScFull, FieldConfiguration::ScNoX, FieldConfiguration::ScInteraction] {
            let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
            let (model, _) = platform.build(fc, &grid).unwrap();
            let h = model.hamiltonian(&controls_within(&platform, fc, &unit));
            prop_assert!(hermiticity_defect(&h) < 1e-12);
        }
    }

    #[test]
    fn atom_propagation_is_unitary(seed: u64) {
        let problem = GateProblem {
            platform: PlatformConfig::Atoms(AtomArrayConfig::standard(2).unwrap()),
            configuration: FieldConfiguration::AtomsPhase,
            gate: make_gate(GateName::Cz, None, false).unwrap(),
            duration: 200.0,
            max_dt: 1.0,
        };
        let mut p = problem.prepare().unwrap();
        problem.randomize(&mut p.fields, &GuessSpec::default(), seed).unwrap();
        for psi in &p.targets.initial {
            let traj = propagate_forward(&p.model, &p.fields, psi).unwrap();
            prop_assert!(traj.states.iter().all(|s| (norm(s) - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn qsl_never_below_a_failed_duration(errors in prop::collection::vec(0.0..2e-3f64, 1..8)) {
        let t: Vec<f64> = (0..errors.len()).map(|i| 500.0 - 50.0 * i as f64).collect();
        match qsl_from_best(&t, &errors, 1e-3) {
            Some(q) => {
                let idx = t.iter().position(|&x| x == q).unwrap();
                prop_assert!(errors[..=idx].iter().all(|&e| e <= 1e-3));
                prop_assert!(errors.get(idx + 1).map_or(true, |&e| e > 1e-3));
            }
            None => prop_assert!(errors[0] > 1e-3),
        }
    }

    #[test]
    fn entangling_power_ignores_global_phase(gamma in 0.0..std::f64::consts::PI, alpha in -3.0..3.0f64) {
        let g = make_gate(GateName::Zzz, Some(gamma), false).unwrap();
        let a = entangling_power_of(&g.matrix, 3, 256, 5).unwrap();
        let shifted = g.matrix.map(|z| z * C64::from_polar(1.0, alpha));
        let b = entangling_power_of(&shifted, 3, 256, 5).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn krotov_is_monotone_on_short_atom_problems(seed: u64) {
        let problem = GateProblem {
            platform: PlatformConfig::Atoms(AtomArrayConfig::standard(2).unwrap()),
            configuration: FieldConfiguration::AtomsPhase,
            gate: make_gate(GateName::Cz, None, false).unwrap(),
            duration: 120.0,
            max_dt: 2.0,
        };
        let opts = KrotovOptions { max_iterations: 8, ..KrotovOptions::default() };
        let res = problem.optimize(&GuessSpec::default(), seed, &opts).unwrap();
        prop_assert!(res.monotonic);
        prop_assert!(res.j_trace.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        prop_assert!(res.fields.iter().all(|f| f.validate().is_ok()));
    }
}

#[test]
fn parity_gates_symmetric_about_half_pi() {
    for name in [GateName::Zzz, GateName::Zzzz] {
        for gamma in [0.2, 0.5, 0.9, 1.3] {
            let n = name.n_qubits();
            let a = entangling_power_of(&make_gate(name, Some(gamma), false).unwrap().matrix, n, 2048, 9).unwrap();
            let b = entangling_power_of(
                &make_gate(name, Some(std::f64::consts::PI - gamma), false)
                    .unwrap()
                    .matrix,
                n,
                2048,
                9,
            )
            .unwrap();
            assert!(
                (a.mean - b.mean).abs() < 1e-12,
                "{name} at {gamma}: {} vs {}",
                a.mean,
                b.mean
            );
        }
    }
}
