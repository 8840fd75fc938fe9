use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dea_beam::ad::HyperDual;
use dea_beam::discretization::{
    element_gradient, element_hessian, element_reduced_strains, element_viscous_jacobians, potential_gradient,
    viscous_generalized_force,
};
use dea_beam::kinematics::ReducedStrains;
use dea_beam::materials::dea_beam_energy_analytic;
use dea_beam::scenario::{build_scenario, ScenarioConfig, ScenarioKind};

fn element_kernels(c: &mut Criterion) {
    let s = build_scenario(&ScenarioConfig::new(ScenarioKind::Torsion)).unwrap();
    let q = s.q0.clone();
    c.bench_function("element_gradient", |b| {
        b.iter(|| element_gradient(black_box(&s.mesh), 3, black_box(&q)).unwrap())
    });
    let sv = element_reduced_strains(&s.mesh, 3, &q).unwrap().to_array();
    c.bench_function("energy_hessian_analytic", |b| {
        b.iter(|| {
            let st = ReducedStrains::from_array(&HyperDual::<11>::seed(black_box(&sv), 0));
            dea_beam_energy_analytic(&st, s.mesh.element_reference(3), &s.mesh.section, &s.mesh.params)
        })
    });
    c.bench_function("element_hessian", |b| {
        b.iter(|| element_hessian(black_box(&s.mesh), 3, black_box(&q)).unwrap())
    });
    let mut damped = s.mesh.clone();
    damped.params.eta = 0.5;
    let mut v = q.clone();
    for (i, x) in v.0.iter_mut().enumerate() {
        *x = 1e-3 * ((i % 7) as f64 - 3.0);
    }
    c.bench_function("element_viscous_jacobians", |b| {
        b.iter(|| element_viscous_jacobians(black_box(&damped), 3, black_box(&q), black_box(&v)).unwrap())
    });
    c.bench_function("viscous_force_torsion", |b| {
        b.iter(|| viscous_generalized_force(black_box(&q), black_box(&v), black_box(&damped)).unwrap())
    });
    c.bench_function("potential_gradient_torsion", |b| {
        b.iter(|| potential_gradient(black_box(&q), black_box(&s.mesh)).unwrap())
    });
}

fn integrator_kernels(c: &mut Criterion) {
    for kind in [ScenarioKind::Contraction, ScenarioKind::Torsion] {
        let s = build_scenario(&ScenarioConfig::new(kind)).unwrap();
        let integ = s.integrator().unwrap();
        let (state, _) = integ.initialize(&s.q0, None).unwrap();
        let u = vec![0.0; integ.n_unknowns()];
        let t = 2.0 * integ.dt;
        c.bench_function(&format!("residual_{}", kind.name()), |b| {
            b.iter(|| {
                integ
                    .residual(&state.momentum, &state.q_curr, black_box(&u), t)
                    .unwrap()
            })
        });
        c.bench_function(&format!("tangent_{}", kind.name()), |b| {
            b.iter(|| integ.tangent(&state.q_curr, black_box(&u), t).unwrap())
        });
        c.bench_function(&format!("step_{}", kind.name()), |b| {
            b.iter_batched(
                || state.clone(),
                |mut st| integ.step(&mut st).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = element_kernels, integrator_kernels
}
criterion_main!(benches);
