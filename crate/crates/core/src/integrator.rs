//! Constrained variational time integration.
//!
//! The discrete Lagrangian uses the midpoint rule,
//! `L_d(qa, qb) = dt T((qb - qa)/dt) - dt V((qa + qb)/2)`. Each step solves
//! the null-space projected discrete Euler-Lagrange equations for the nodal
//! increments `u = [u_phi, theta, v]`, with the directors updated through the
//! exponential map so the orthonormality constraints hold exactly.

use crate::ad::Dual;
use crate::discretization::{
    assemble_global_null_space, element_hessian, element_viscous_jacobians, kinetic_energy, potential_energy,
    potential_gradient, viscous_generalized_force, BeamMesh, DirichletMask, GlobalConfiguration, NODE_DOFS,
    NODE_GEN_DOFS,
};
use crate::error::{Error, Result};
use crate::linalg::BandedMatrix;
use crate::so3::exp_map;
use crate::tensor::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Converged when `max |R| <= tolerance * dt`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
        }
    }
}

/// Two consecutive configurations plus the discrete momentum at `q_curr`.
#[derive(Clone, Debug)]
pub struct StepState {
    pub q_prev: GlobalConfiguration,
    pub q_curr: GlobalConfiguration,
    /// Time of `q_curr` (ms).
    pub t: f64,
    pub dt: f64,
    /// Index of `q_curr`.
    pub step: usize,
    /// `D2 L_d(q_prev, q_curr)` plus the discrete viscous force at `q_curr`.
    pub momentum: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub iterations: usize,
    pub residual: f64,
}

/// Converged Newton solve of one step.
#[derive(Clone, Debug)]
pub struct Solution {
    pub q_next: GlobalConfiguration,
    /// Reduced increment (free generalized DOFs only).
    pub increment: Vec<f64>,
    pub diagnostics: StepDiagnostics,
}

/// Per-node generalized increments, 9 entries per node.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedIncrement(pub Vec<f64>);

impl GeneralizedIncrement {
    pub fn zeros(n_nodes: usize) -> Self {
        Self(vec![0.0; NODE_GEN_DOFS * n_nodes])
    }
}

/// Energies of one sample of the discrete flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample {
    pub kinetic: f64,
    pub potential: f64,
    pub hamiltonian: f64,
}

/// `dt [T((qb - qa)/dt) - V((qa + qb)/2)]`.
pub fn discrete_lagrangian(
    qa: &GlobalConfiguration,
    qb: &GlobalConfiguration,
    dt: f64,
    mesh: &BeamMesh,
) -> Result<f64> {
    let v = qa.rate_to(qb, dt);
    let mid = qa.midpoint(qb);
    Ok(dt * (kinetic_energy(&v, mesh) - potential_energy(&mid, mesh)?))
}

/// Next configuration from the increments: `phi + u_phi`, `exp(theta) d_i`,
/// `elec + v`. Prescribed translational and electrical entries take their
/// schedule value at `t_next`; masked rotation components are held at zero.
pub fn reparametrize(
    u: &GeneralizedIncrement,
    q_n: &GlobalConfiguration,
    mask: &DirichletMask,
    t_next: f64,
) -> GlobalConfiguration {
    let mut q = q_n.clone();
    for i in 0..q_n.n_nodes() {
        let g = &u.0[NODE_GEN_DOFS * i..NODE_GEN_DOFS * (i + 1)];
        let m = &mask.nodes[i];
        let mut node = q_n.node(i);
        let theta = Vec3(std::array::from_fn(|k| if m.rotation[k] { 0.0 } else { g[3 + k] }));
        for k in 0..3 {
            node.phi[k] += g[k];
            node.elec[k] += g[6 + k];
        }
        if theta.0.iter().any(|x| *x != 0.0) {
            let r = exp_map(&theta);
            node.d = node.d.map(|d| r.mul_vec(&d));
        }
        q.set_node(i, &node);
    }
    mask.apply(&mut q, t_next);
    q
}

/// `d(q_next)/du` for one node: 15 x 9, identity blocks for position and
/// electrics and the exponential-map derivative for the directors.
fn node_update_jacobian(theta: &Vec3, d_n: &[Vec3; 3]) -> [[f64; NODE_GEN_DOFS]; NODE_DOFS] {
    let mut j = [[0.0; NODE_GEN_DOFS]; NODE_DOFS];
    for k in 0..3 {
        j[k][k] = 1.0;
        j[12 + k][6 + k] = 1.0;
    }
    let r = exp_map(&Vec3(Dual::<3>::seed(&theta.0, 0)));
    for (i, d) in d_n.iter().enumerate() {
        let rd = r.mul_vec(&d.lift());
        for row in 0..3 {
            for c in 0..3 {
                j[3 + 3 * i + row][3 + c] = rd[row].g[c];
            }
        }
    }
    j
}

/// Discrete momentum at `q_curr`: `D2 L_d(q_prev, q_curr)` plus the
/// discrete viscous force `-dt/2 f_vis(mid, v)`.
pub fn discrete_momentum(
    q_prev: &GlobalConfiguration,
    q_curr: &GlobalConfiguration,
    dt: f64,
    mesh: &BeamMesh,
) -> Result<Vec<f64>> {
    let v = q_prev.rate_to(q_curr, dt);
    let mid = q_prev.midpoint(q_curr);
    let (_, grad) = potential_gradient(&mid, mesh)?;
    let fvis = viscous_generalized_force(&mid, &v, mesh)?;
    let m = mesh.mass_diagonal();
    Ok((0..v.0.len())
        .map(|a| m[a] * v.0[a] - 0.5 * dt * grad[a] - 0.5 * dt * fvis[a])
        .collect())
}

/// Full (unprojected) residual `p - M v - dt/2 grad V(mid) - dt/2 f_vis(mid, v)`.
fn full_residual(
    p_plus: &[f64],
    q_n: &GlobalConfiguration,
    q_next: &GlobalConfiguration,
    dt: f64,
    mesh: &BeamMesh,
    mass: &[f64],
) -> Result<Vec<f64>> {
    let v = q_n.rate_to(q_next, dt);
    let mid = q_n.midpoint(q_next);
    let (_, grad) = potential_gradient(&mid, mesh)?;
    let fvis = viscous_generalized_force(&mid, &v, mesh)?;
    Ok((0..v.0.len())
        .map(|a| p_plus[a] - mass[a] * v.0[a] - 0.5 * dt * grad[a] - 0.5 * dt * fvis[a])
        .collect())
}

/// Projected discrete Euler-Lagrange residual for the increment `u`, with
/// the incoming momentum evaluated from `(q_prev, q_n)`.
pub fn del_residual(
    q_prev: &GlobalConfiguration,
    q_n: &GlobalConfiguration,
    u: &GeneralizedIncrement,
    dt: f64,
    mesh: &BeamMesh,
    mask: &DirichletMask,
    t_next: f64,
) -> Result<Vec<f64>> {
    let p = discrete_momentum(q_prev, q_n, dt, mesh)?;
    let q_next = reparametrize(u, q_n, mask, t_next);
    let r = full_residual(&p, q_n, &q_next, dt, mesh, &mesh.mass_diagonal())?;
    Ok(assemble_global_null_space(q_n, mask).project(&r))
}

/// Time stepper bound to one mesh, mask and step size.
#[derive(Clone, Debug)]
pub struct Integrator {
    pub mesh: BeamMesh,
    pub mask: DirichletMask,
    pub dt: f64,
    pub newton: NewtonOptions,
    mass: Vec<f64>,
    free: Vec<usize>,
    reduced_index: Vec<Option<usize>>,
    bandwidth: usize,
}

impl Integrator {
    pub fn new(mesh: BeamMesh, mask: DirichletMask, dt: f64, newton: NewtonOptions) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("time step {dt} must be positive")));
        }
        mask.validate(mesh.n_nodes())?;
        let free = mask.free_dofs();
        let mut reduced_index = vec![None; NODE_GEN_DOFS * mesh.n_nodes()];
        for (r, &g) in free.iter().enumerate() {
            reduced_index[g] = Some(r);
        }
        let mut bandwidth = 0;
        for e in 0..mesh.n_elements() {
            let idx: Vec<usize> = (NODE_GEN_DOFS * e..NODE_GEN_DOFS * (e + 2))
                .filter_map(|g| reduced_index[g])
                .collect();
            if let (Some(lo), Some(hi)) = (idx.iter().min(), idx.iter().max()) {
                bandwidth = bandwidth.max(hi - lo);
            }
        }
        Ok(Self {
            mass: mesh.mass_diagonal(),
            mesh,
            mask,
            dt,
            newton,
            free,
            reduced_index,
            bandwidth,
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.free.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    fn expand(&self, u_red: &[f64]) -> GeneralizedIncrement {
        let mut u = GeneralizedIncrement::zeros(self.mesh.n_nodes());
        for (r, &g) in self.free.iter().enumerate() {
            u.0[g] = u_red[r];
        }
        u
    }

    /// Reduced residual for the reduced increment `u_red`.
    pub fn residual(&self, p_plus: &[f64], q_n: &GlobalConfiguration, u_red: &[f64], t_next: f64) -> Result<Vec<f64>> {
        let q_next = reparametrize(&self.expand(u_red), q_n, &self.mask, t_next);
        let r = full_residual(p_plus, q_n, &q_next, self.dt, &self.mesh, &self.mass)?;
        Ok(assemble_global_null_space(q_n, &self.mask).project(&r))
    }

    /// Exact derivative of [`Integrator::residual`] with respect to `u_red`.
    pub fn tangent(&self, q_n: &GlobalConfiguration, u_red: &[f64], t_next: f64) -> Result<BandedMatrix> {
        let dt = self.dt;
        let mesh = &self.mesh;
        let u = self.expand(u_red);
        let q_next = reparametrize(&u, q_n, &self.mask, t_next);
        let v = q_n.rate_to(&q_next, dt);
        let mid = q_n.midpoint(&q_next);
        let null = assemble_global_null_space(q_n, &self.mask);
        let n_nodes = mesh.n_nodes();

        let update: Vec<_> = (0..n_nodes)
            .map(|i| {
                let m = &self.mask.nodes[i];
                let g = &u.0[NODE_GEN_DOFS * i..NODE_GEN_DOFS * (i + 1)];
                let theta = Vec3(std::array::from_fn(|k| if m.rotation[k] { 0.0 } else { g[3 + k] }));
                node_update_jacobian(&theta, &q_n.node(i).d)
            })
            .collect();

        let nb = self.bandwidth;
        let mut k_mat = BandedMatrix::zeros(self.free.len(), nb, nb);
        let viscous = mesh.params.eta != 0.0;

        // 15x15 block of the unprojected Jacobian, folded into the reduced matrix
        let mut scatter = |a: usize, b: usize, block: &[[f64; NODE_DOFS]; NODE_DOFS]| {
            let pa = &null.blocks[a];
            let db = &update[b];
            // block * D_b : 15 x 9
            let mut bd = [[0.0; NODE_GEN_DOFS]; NODE_DOFS];
            for r in 0..NODE_DOFS {
                for c in 0..NODE_GEN_DOFS {
                    let mut acc = 0.0;
                    for k in 0..NODE_DOFS {
                        acc += block[r][k] * db[k][c];
                    }
                    bd[r][c] = acc;
                }
            }
            for ra in 0..NODE_GEN_DOFS {
                let Some(row) = self.reduced_index[NODE_GEN_DOFS * a + ra] else {
                    continue;
                };
                for cb in 0..NODE_GEN_DOFS {
                    let Some(col) = self.reduced_index[NODE_GEN_DOFS * b + cb] else {
                        continue;
                    };
                    let mut acc = 0.0;
                    for k in 0..NODE_DOFS {
                        acc += pa[k][ra] * bd[k][cb];
                    }
                    if acc != 0.0 {
                        k_mat.add(row, col, acc);
                    }
                }
            }
        };

        for i in 0..n_nodes {
            let mut block = [[0.0; NODE_DOFS]; NODE_DOFS];
            for k in 0..NODE_DOFS {
                block[k][k] = -self.mass[NODE_DOFS * i + k] / dt;
            }
            scatter(i, i, &block);
        }
        for e in 0..mesh.n_elements() {
            let (_, _, h) = element_hessian(mesh, e, &mid)?;
            let vis = if viscous {
                Some(element_viscous_jacobians(mesh, e, &mid, &v)?)
            } else {
                None
            };
            for (la, a) in [(0, e), (1, e + 1)] {
                for (lb, b) in [(0, e), (1, e + 1)] {
                    let mut block = [[0.0; NODE_DOFS]; NODE_DOFS];
                    for r in 0..NODE_DOFS {
                        for c in 0..NODE_DOFS {
                            let (ri, ci) = (NODE_DOFS * la + r, NODE_DOFS * lb + c);
                            let mut x = -0.25 * dt * h[ri][ci];
                            if let Some((_, dq, dv)) = &vis {
                                x -= 0.5 * dt * (0.5 * dq[ri][ci] + dv[ri][ci] / dt);
                            }
                            block[r][c] = x;
                        }
                    }
                    scatter(a, b, &block);
                }
            }
        }
        Ok(k_mat)
    }

    /// Newton solve for `q_next` given the incoming momentum.
    pub fn solve(&self, p_plus: &[f64], q_n: &GlobalConfiguration, t_next: f64, step: usize) -> Result<Solution> {
        let tol = self.newton.tolerance * self.dt;
        let mut u = vec![0.0; self.free.len()];
        let mut iterations = 0;
        loop {
            let r = self.residual(p_plus, q_n, &u, t_next)?;
            let norm = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !norm.is_finite() {
                return Err(Error::NoConvergence {
                    step,
                    iterations,
                    residual: norm,
                });
            }
            if norm <= tol {
                let q_next = reparametrize(&self.expand(&u), q_n, &self.mask, t_next);
                return Ok(Solution {
                    q_next,
                    increment: u,
                    diagnostics: StepDiagnostics {
                        iterations,
                        residual: norm,
                    },
                });
            }
            if iterations >= self.newton.max_iterations {
                return Err(Error::NoConvergence {
                    step,
                    iterations,
                    residual: norm,
                });
            }
            let lu = self.tangent(q_n, &u, t_next)?.factorize()?;
            let du = lu.solve(&r);
            for (ui, di) in u.iter_mut().zip(&du) {
                *ui -= di;
            }
            iterations += 1;
        }
    }

    /// First step from the initial configuration and momentum (zero when
    /// `p0` is `None`).
    pub fn initialize(&self, q0: &GlobalConfiguration, p0: Option<&[f64]>) -> Result<(StepState, StepDiagnostics)> {
        let zero = vec![0.0; q0.0.len()];
        let p0 = p0.unwrap_or(&zero);
        let Solution {
            q_next: q1,
            diagnostics: diag,
            ..
        } = self.solve(p0, q0, self.dt, 0)?;
        let momentum = discrete_momentum(q0, &q1, self.dt, &self.mesh)?;
        Ok((
            StepState {
                q_prev: q0.clone(),
                q_curr: q1,
                t: self.dt,
                dt: self.dt,
                step: 1,
                momentum,
            },
            diag,
        ))
    }

    /// Advances the state by one step.
    pub fn step(&self, state: &mut StepState) -> Result<StepDiagnostics> {
        let t_next = (state.step + 1) as f64 * self.dt;
        let Solution {
            q_next,
            diagnostics: diag,
            ..
        } = self.solve(&state.momentum, &state.q_curr, t_next, state.step)?;
        let momentum = discrete_momentum(&state.q_curr, &q_next, self.dt, &self.mesh)?;
        state.q_prev = std::mem::replace(&mut state.q_curr, q_next);
        state.momentum = momentum;
        state.step += 1;
        state.t = t_next;
        Ok(diag)
    }

    /// Energies at `state.q_curr` from the stored momentum.
    pub fn energies(&self, state: &StepState) -> Result<EnergySample> {
        let v = state.q_prev.rate_to(&state.q_curr, self.dt);
        hamiltonian_from_momentum(&state.q_curr, &state.momentum, &v, &self.mesh, &self.mask)
    }
}

/// Reduced mass `w blockdiag(A_rho I, M1 I, M2 I)` and constraint Jacobian
/// of one node.
fn reduced_blocks(mesh: &BeamMesh, node: usize, d1: &Vec3, d2: &Vec3) -> ([f64; 9], [[f64; 9]; 3]) {
    let w = mesh.lumping_weight(node);
    let s = &mesh.section;
    let mut m = [0.0; 9];
    for k in 0..3 {
        m[k] = w * s.a_rho;
        m[3 + k] = w * s.m_rho1;
        m[6 + k] = w * s.m_rho2;
    }
    let mut g = [[0.0; 9]; 3];
    for k in 0..3 {
        g[0][3 + k] = d1[k];
        g[1][6 + k] = d2[k];
        g[2][3 + k] = d2[k];
        g[2][6 + k] = d1[k];
    }
    (m, g)
}

/// Projector `Q = I - G^T (G M^-1 G^T)^-1 G M^-1` onto momenta compatible
/// with the director constraints of one node.
pub fn momentum_projector(mesh: &BeamMesh, node: usize, d1: &Vec3, d2: &Vec3) -> [[f64; 9]; 9] {
    let (m, g) = reduced_blocks(mesh, node, d1, d2);
    let mut s = Mat3::<f64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            s.0[i][j] = (0..9).map(|k| g[i][k] * g[j][k] / m[k]).sum();
        }
    }
    let s_inv = s
        .inverse()
        .expect("constraint Gram matrix of a valid triad is invertible");
    let mut q = [[0.0; 9]; 9];
    for r in 0..9 {
        for c in 0..9 {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += g[i][r] * s_inv.0[i][j] * g[j][c];
                }
            }
            q[r][c] = if r == c { 1.0 } else { 0.0 } - acc / m[c];
        }
    }
    q
}

/// Energies at `q` for a full-length momentum `p`: the first nine entries of
/// each node are projected onto the constraint-compatible subspace and
/// `sum 1/2 p^T M^-1 p + V(q)` is returned. Nodes whose position and
/// orientation are fully prescribed contribute `1/2 v^T M v` from `v`
/// instead, so the support reaction does not show up as momentum.
pub fn hamiltonian_from_momentum(
    q: &GlobalConfiguration,
    p: &[f64],
    v: &GlobalConfiguration,
    mesh: &BeamMesh,
    mask: &DirichletMask,
) -> Result<EnergySample> {
    let potential = potential_energy(q, mesh)?;
    let mut kinetic = 0.0;
    for i in 0..mesh.n_nodes() {
        let node = q.node(i);
        let (m, _) = reduced_blocks(mesh, i, &node.d[0], &node.d[1]);
        let o = NODE_DOFS * i;
        if mask.nodes[i].mechanically_clamped() {
            kinetic += 0.5 * (0..9).map(|k| m[k] * v.0[o + k] * v.0[o + k]).sum::<f64>();
            continue;
        }
        let q_bar = momentum_projector(mesh, i, &node.d[0], &node.d[1]);
        let pn: [f64; 9] = std::array::from_fn(|r| (0..9).map(|c| q_bar[r][c] * p[o + c]).sum());
        kinetic += 0.5 * (0..9).map(|k| pn[k] * pn[k] / m[k]).sum::<f64>();
    }
    Ok(EnergySample {
        kinetic,
        potential,
        hamiltonian: kinetic + potential,
    })
}

/// Discrete Hamiltonian at `q_n` from the left momentum
/// `-D1 L_d(q_n, q_next)` minus the discrete viscous force, which equals the
/// right momentum of the previous step on a solved trajectory.
pub fn discrete_hamiltonian(
    q_n: &GlobalConfiguration,
    q_next: &GlobalConfiguration,
    dt: f64,
    mesh: &BeamMesh,
    mask: &DirichletMask,
) -> Result<EnergySample> {
    let v = q_n.rate_to(q_next, dt);
    let mid = q_n.midpoint(q_next);
    let (_, grad) = potential_gradient(&mid, mesh)?;
    let fvis = viscous_generalized_force(&mid, &v, mesh)?;
    let m = mesh.mass_diagonal();
    let p: Vec<f64> = (0..v.0.len())
        .map(|a| m[a] * v.0[a] + 0.5 * dt * grad[a] + 0.5 * dt * fvis[a])
        .collect();
    hamiltonian_from_momentum(q_n, &p, &v, mesh, mask)
}

/// Dense copy of a banded matrix, for tests and diagnostics.
pub fn to_dense(m: &BandedMatrix) -> Vec<Vec<f64>> {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
}
