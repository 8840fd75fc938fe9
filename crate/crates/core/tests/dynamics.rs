use dea_beam::discretization::NODE_DOFS;
use dea_beam::tensor::Vec3;
use dea_beam::{
    build_scenario, BeamMesh, DirichletMask, DofSchedule, EnergyModel, GlobalConfiguration, Integrator, MaterialParams,
    NewtonOptions, ScenarioConfig, ScenarioKind, SectionProperties,
};

fn node_vec(p: &[f64], o: usize) -> Vec3 {
    Vec3([p[o], p[o + 1], p[o + 2]])
}

/// Linear and angular momentum of a configuration-momentum pair.
fn momenta(q: &GlobalConfiguration, p: &[f64]) -> (Vec3, Vec3) {
    let mut lin = Vec3::zeros();
    let mut ang = Vec3::zeros();
    for i in 0..q.n_nodes() {
        let o = NODE_DOFS * i;
        let pp = node_vec(p, o);
        lin = lin + pp;
        ang = ang + node_vec(&q.0, o).cross(&pp);
        for d in 0..3 {
            ang = ang + node_vec(&q.0, o + 3 + 3 * d).cross(&node_vec(p, o + 3 + 3 * d));
        }
    }
    (lin, ang)
}

#[test]
fn free_beam_conserves_linear_and_angular_momentum() {
    let mesh = BeamMesh::straight(
        4,
        0.1,
        SectionProperties::square(0.02, 1.0),
        MaterialParams::default(),
        EnergyModel::default(),
    )
    .unwrap();
    let mut mask = DirichletMask::free(mesh.n_nodes());
    for m in &mut mask.nodes {
        m.electric = [Some(DofSchedule::constant(0.0)); 3];
    }
    let q0 = mesh.reference_configuration();
    // drift, spin about a transverse axis and an axial stretch rate
    let m = mesh.mass_diagonal();
    let mut p0 = vec![0.0; q0.0.len()];
    for i in 0..mesh.n_nodes() {
        let o = NODE_DOFS * i;
        let n = q0.node(i);
        let omega = Vec3([0.0, 3.0, 1.0]);
        let v = Vec3([0.2, -0.1, 0.5 * n.phi[2]]) + omega.cross(&n.phi);
        for k in 0..3 {
            p0[o + k] = m[o + k] * v[k];
        }
        for d in 0..3 {
            let dd = omega.cross(&n.d[d]);
            for k in 0..3 {
                p0[o + 3 + 3 * d + k] = m[o + 3 + 3 * d + k] * dd[k];
            }
        }
    }
    let (l0, a0) = momenta(&q0, &p0);
    let integ = Integrator::new(mesh, mask, 1e-4, NewtonOptions::default()).unwrap();
    let (mut state, _) = integ.initialize(&q0, Some(&p0)).unwrap();
    for _ in 0..200 {
        integ.step(&mut state).unwrap();
    }
    let (l, a) = momenta(&state.q_curr, &state.momentum);
    assert!((l - l0).max_abs() <= 1e-10 * l0.max_abs(), "{l:?} vs {l0:?}");
    assert!((a - a0).max_abs() <= 1e-8 * a0.max_abs(), "{a:?} vs {a0:?}");
    assert!(state.q_curr.constraint_violation() <= 1e-12);
}

fn final_configuration(dt: f64, t_end: f64) -> GlobalConfiguration {
    let mut c = ScenarioConfig::new(ScenarioKind::Contraction);
    c.time.dt_ms = dt;
    c.time.t_end_ms = t_end;
    let s = build_scenario(&c).unwrap();
    let mut last = None;
    s.simulate(|x| {
        last = Some(x.q.clone());
        Ok(())
    })
    .unwrap();
    last.unwrap()
}

#[test]
fn second_order_once_mesh_modes_are_resolved() {
    let q: Vec<_> = [1e-4, 5e-5, 2.5e-5, 1.25e-5]
        .iter()
        .map(|&dt| final_configuration(dt, 0.02))
        .collect();
    let e: Vec<f64> = q.windows(2).map(|w| w[0].max_abs_diff(&w[1])).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.15, "{e:?}");
    }
}

#[test]
fn damping_dissipates_energy() {
    let mut c = ScenarioConfig::new(ScenarioKind::Contraction);
    c.material.eta = 0.1;
    c.time.t_end_ms = 0.05;
    let s = build_scenario(&c).unwrap();
    let mut h = Vec::new();
    s.simulate(|x| {
        h.push(x.energy.hamiltonian);
        Ok(())
    })
    .unwrap();
    // H_d is non-increasing up to the quadrature of the viscous work
    let rise = h.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    assert!(rise <= 1e-3 * (h[0] - h[h.len() - 1]).abs(), "rise {rise}");
    assert!(h[h.len() - 1] < h[0]);
}
