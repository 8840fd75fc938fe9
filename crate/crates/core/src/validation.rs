//! Self-checks run from the command line: derivative consistency and the
//! agreement of the two energy paths.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::derivcheck::{fd_gradient, fd_jacobian, max_relative_error, FdSettings};
use crate::discretization::{potential_energy, potential_gradient, BeamMesh, GlobalConfiguration, NODE_DOFS};
use crate::error::Result;
use crate::integrator::to_dense;
use crate::materials::{EnergyModel, EnergyPath};
use crate::scenario::Scenario;
use crate::so3::exp_map;
use crate::tensor::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub unknowns: usize,
    /// `max |K_fd - K| / max |K|` for the reduced tangent at the first
    /// regular step.
    pub tangent_relative_error: f64,
    pub gradient_states: usize,
    /// Worst `max |g_fd - g| / max |g|` over the random states.
    pub gradient_relative_error: f64,
}

/// Random configuration near `q0`: small translations and rotations of every
/// node, electrical values on the scale of those in `q0`.
pub fn random_state(rng: &mut impl Rng, mesh: &BeamMesh, q0: &GlobalConfiguration) -> GlobalConfiguration {
    let h = (0..mesh.n_elements())
        .map(|e| mesh.element_length(e))
        .fold(f64::INFINITY, f64::min);
    let mut phi_scale: f64 = 1e3;
    let mut grad_scale: f64 = 1e4;
    for i in 0..q0.n_nodes() {
        let e = q0.node(i).elec;
        phi_scale = phi_scale.max(e[0].abs());
        grad_scale = grad_scale.max(e[1].abs()).max(e[2].abs());
    }
    let mut q = q0.clone();
    for i in 0..q.n_nodes() {
        let mut n = q.node(i);
        let r = exp_map(&Vec3(std::array::from_fn(|_| rng.gen_range(-0.05..0.05))));
        for k in 0..3 {
            n.phi[k] += rng.gen_range(-1e-3..1e-3) * h;
        }
        n.d = n.d.map(|d| r.mul_vec(&d));
        n.elec = Vec3([
            rng.gen_range(-1.0..1.0) * phi_scale,
            rng.gen_range(-1.0..1.0) * grad_scale,
            rng.gen_range(-1.0..1.0) * grad_scale,
        ]);
        q.set_node(i, &n);
    }
    q
}

/// Tangent against central differences of the reduced residual at the first
/// regular step, and the potential gradient against central differences on
/// `gradient_states` random configurations.
pub fn check_derivatives(scenario: &Scenario, gradient_states: usize, seed: u64) -> Result<DerivativeReport> {
    let integ = scenario.integrator()?;
    let (state, _) = integ.initialize(&scenario.q0, None)?;
    let t_next = 2.0 * integ.dt;
    let sol = integ.solve(&state.momentum, &state.q_curr, t_next, state.step)?;
    let u = sol.increment;
    let k = to_dense(&integ.tangent(&state.q_curr, &u, t_next)?);
    let fd = fd_jacobian(
        |x: &[f64]| integ.residual(&state.momentum, &state.q_curr, x, t_next),
        &u,
        &FdSettings::default(),
    )?;
    let tangent_relative_error = max_relative_error(&fd, &k, 0.0);

    let mesh = &scenario.mesh;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut gradient_relative_error: f64 = 0.0;
    for _ in 0..gradient_states {
        let q = random_state(&mut rng, mesh, &scenario.q0);
        let (_, g) = potential_gradient(&q, mesh)?;
        let fd = fd_gradient(
            |x: &[f64]| potential_energy(&GlobalConfiguration(x.to_vec()), mesh),
            &q.0,
            &FdSettings::default(),
        )?;
        gradient_relative_error = gradient_relative_error.max(max_relative_error(&[fd], &[g], 0.0));
    }
    Ok(DerivativeReport {
        unknowns: integ.n_unknowns(),
        tangent_relative_error,
        gradient_states,
        gradient_relative_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyPathReport {
    pub samples: usize,
    /// `max_n |V_a(q_n) - V_q(q_n)| / max_n |V_q(q_n)|` along the analytic run.
    pub potential_relative_deviation: f64,
    /// Max tip-position difference between the two runs relative to the
    /// largest tip displacement.
    pub tip_relative_deviation: f64,
    pub max_relative_deviation: f64,
}

/// Runs the scenario once with each energy path and compares the stored
/// energies and the tip trajectories.
pub fn compare_energy_paths(scenario: &Scenario) -> Result<EnergyPathReport> {
    let with_path = |path: EnergyPath| -> Result<Scenario> {
        let mut s = scenario.clone();
        s.config.solver.energy_path = path;
        s.mesh.energy = EnergyModel {
            path,
            quadrature_order: scenario.mesh.energy.quadrature_order,
        };
        Ok(s)
    };
    let analytic = with_path(EnergyPath::Analytic)?;
    let quadrature = with_path(EnergyPath::Quadrature)?;
    let tip = scenario.mesh.n_nodes() - 1;
    let o = NODE_DOFS * tip;
    let tip_reference: [f64; 3] = std::array::from_fn(|k| scenario.q0.0[o + k]);

    let mut tips_a = Vec::new();
    let (mut v_dev, mut v_max): (f64, f64) = (0.0, 0.0);
    analytic.simulate(|s| {
        let va = s.energy.potential;
        let vq = potential_energy(s.q, &quadrature.mesh)?;
        v_dev = v_dev.max((va - vq).abs());
        v_max = v_max.max(vq.abs());
        tips_a.push([s.q.0[o], s.q.0[o + 1], s.q.0[o + 2]]);
        Ok(())
    })?;
    let mut tips_q = Vec::new();
    quadrature.simulate(|s| {
        tips_q.push([s.q.0[o], s.q.0[o + 1], s.q.0[o + 2]]);
        Ok(())
    })?;
    let (mut tip_dev, mut tip_max): (f64, f64) = (0.0, 0.0);
    for (a, q) in tips_a.iter().zip(&tips_q) {
        for k in 0..3 {
            tip_dev = tip_dev.max((a[k] - q[k]).abs());
            tip_max = tip_max.max((q[k] - tip_reference[k]).abs());
        }
    }
    let ratio = |d: f64, m: f64| if m > 0.0 { d / m } else { d };
    let potential_relative_deviation = ratio(v_dev, v_max);
    let tip_relative_deviation = ratio(tip_dev, tip_max);
    Ok(EnergyPathReport {
        samples: tips_a.len(),
        potential_relative_deviation,
        tip_relative_deviation,
        max_relative_deviation: potential_relative_deviation.max(tip_relative_deviation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_scenario, ScenarioConfig, ScenarioKind};

    #[test]
    fn contraction_derivatives_agree() {
        let s = build_scenario(&ScenarioConfig::new(ScenarioKind::Contraction)).unwrap();
        let r = check_derivatives(&s, 3, 1).unwrap();
        assert_eq!(r.unknowns, 30);
        assert!(r.tangent_relative_error <= 1e-6, "{r:?}");
        assert!(r.gradient_relative_error <= 1e-6, "{r:?}");
    }

    #[test]
    fn energy_paths_agree_on_short_contraction() {
        let mut c = ScenarioConfig::new(ScenarioKind::Contraction);
        c.time.t_end_ms = 2e-3;
        let s = build_scenario(&c).unwrap();
        let r = compare_energy_paths(&s).unwrap();
        assert_eq!(r.samples, 21);
        assert!(r.max_relative_deviation < 1e-2, "{r:?}");
    }
}
