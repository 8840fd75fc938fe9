//! Spatial discretization: two-node elements with linear shape functions and
//! one midpoint quadrature point along the axis.
//!
//! Every node carries 15 configuration entries `[phi, d1, d2, d3, elec]` and
//! 9 generalized increments `[u_phi, theta, v]`.

use serde::{Deserialize, Serialize};

use crate::ad::{Dual, HyperDual, Scalar};
use crate::error::{Error, Result};
use crate::kinematics::{
    element_strains, gram_schmidt, placement_gradient, NodeState, ReducedStrains, ReferenceFrame, Triad, J_MIN,
};
use crate::materials::{
    min_section_jacobian, section_points, viscous_piola, EnergyModel, MaterialParams, SectionProperties,
};
use crate::so3::hat;
use crate::tensor::{Mat3, Vec3};

pub const NODE_DOFS: usize = 15;
pub const NODE_GEN_DOFS: usize = 9;
/// Configuration entries of one element (two nodes).
pub const ELEM_DOFS: usize = 30;

pub type ElementMatrix = [[f64; ELEM_DOFS]; ELEM_DOFS];
pub type NullSpaceBlock = [[f64; NODE_GEN_DOFS]; NODE_DOFS];

/// Straight or curved beam mesh with a uniform cross-section.
#[derive(Clone, Debug)]
pub struct BeamMesh {
    pub frames: Vec<ReferenceFrame>,
    pub section: SectionProperties,
    pub params: MaterialParams,
    pub energy: EnergyModel,
    lengths: Vec<f64>,
    element_frames: Vec<Triad>,
}

impl BeamMesh {
    pub fn new(
        frames: Vec<ReferenceFrame>,
        section: SectionProperties,
        params: MaterialParams,
        energy: EnergyModel,
    ) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::Config("a mesh needs at least two nodes".into()));
        }
        params.validate()?;
        energy.validate()?;
        let mut lengths = Vec::with_capacity(frames.len() - 1);
        let mut element_frames = Vec::with_capacity(frames.len() - 1);
        for w in frames.windows(2) {
            let l = w[1].s - w[0].s;
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::DegenerateElement { length: l });
            }
            lengths.push(l);
            element_frames.push(if w[0].d0 == w[1].d0 {
                w[0].d0
            } else {
                let m = |i: usize| (w[0].d0[i] + w[1].d0[i]) * 0.5;
                gram_schmidt(&m(0), &m(1))
            });
        }
        Ok(Self {
            frames,
            section,
            params,
            energy,
            lengths,
            element_frames,
        })
    }

    /// Uniform straight mesh along the third axis.
    pub fn straight(
        n_elements: usize,
        length: f64,
        section: SectionProperties,
        params: MaterialParams,
        energy: EnergyModel,
    ) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::Config("n_elements must be at least 1".into()));
        }
        let frames = (0..=n_elements)
            .map(|i| ReferenceFrame::straight(length * i as f64 / n_elements as f64))
            .collect();
        Self::new(frames, section, params, energy)
    }

    pub fn n_nodes(&self) -> usize {
        self.frames.len()
    }

    pub fn n_elements(&self) -> usize {
        self.lengths.len()
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn element_reference(&self, e: usize) -> &Triad {
        &self.element_frames[e]
    }

    /// Half the sum of the adjacent element lengths.
    pub fn lumping_weight(&self, node: usize) -> f64 {
        let left = if node > 0 { self.lengths[node - 1] } else { 0.0 };
        let right = self.lengths.get(node).copied().unwrap_or(0.0);
        0.5 * (left + right)
    }

    pub fn total_length(&self) -> f64 {
        self.frames[self.n_nodes() - 1].s - self.frames[0].s
    }

    /// Diagonal of the lumped mass matrix, 15 entries per node.
    pub fn mass_diagonal(&self) -> Vec<f64> {
        let mut m = vec![0.0; NODE_DOFS * self.n_nodes()];
        for i in 0..self.n_nodes() {
            let w = self.lumping_weight(i);
            let o = NODE_DOFS * i;
            for k in 0..3 {
                m[o + k] = w * self.section.a_rho;
                m[o + 3 + k] = w * self.section.m_rho1;
                m[o + 6 + k] = w * self.section.m_rho2;
            }
        }
        m
    }

    pub fn reference_configuration(&self) -> GlobalConfiguration {
        let mut q = GlobalConfiguration::zeros(self.n_nodes());
        for (i, f) in self.frames.iter().enumerate() {
            q.set_node(i, &NodeState::reference(f));
        }
        q
    }
}

/// Flat configuration (or rate) vector, 15 entries per node.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalConfiguration(pub Vec<f64>);

impl GlobalConfiguration {
    pub fn zeros(n_nodes: usize) -> Self {
        Self(vec![0.0; NODE_DOFS * n_nodes])
    }

    pub fn n_nodes(&self) -> usize {
        self.0.len() / NODE_DOFS
    }

    pub fn node(&self, i: usize) -> NodeState {
        NodeState::from_slice(&self.0[NODE_DOFS * i..NODE_DOFS * (i + 1)])
    }

    pub fn set_node(&mut self, i: usize, n: &NodeState) {
        n.write_to(&mut self.0[NODE_DOFS * i..NODE_DOFS * (i + 1)]);
    }

    pub fn midpoint(&self, o: &Self) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    /// `(o - self) / dt`.
    pub fn rate_to(&self, o: &Self, dt: f64) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| (b - a) / dt).collect())
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.0.iter().zip(&o.0).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest orthonormality-constraint violation over all nodes.
    pub fn constraint_violation(&self) -> f64 {
        (0..self.n_nodes())
            .flat_map(|i| node_constraints(&self.node(i)))
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Time-dependent prescribed value: linear ramp from `start` to `end` over
/// `ramp_ms`, constant afterwards. A non-positive ramp applies `end` at once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DofSchedule {
    pub start: f64,
    pub end: f64,
    pub ramp_ms: f64,
}

impl DofSchedule {
    pub fn constant(v: f64) -> Self {
        Self {
            start: v,
            end: v,
            ramp_ms: 0.0,
        }
    }

    pub fn step(v: f64) -> Self {
        Self {
            start: 0.0,
            end: v,
            ramp_ms: 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.ramp_ms <= 0.0 || t >= self.ramp_ms {
            self.end
        } else if t <= 0.0 {
            self.start
        } else {
            self.start + (self.end - self.start) * (t / self.ramp_ms)
        }
    }
}

/// Dirichlet data of one node. Masked rotation components keep a zero
/// rotation increment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeMask {
    pub translation: [Option<DofSchedule>; 3],
    pub rotation: [bool; 3],
    pub electric: [Option<DofSchedule>; 3],
}

impl NodeMask {
    pub fn is_masked(&self, k: usize) -> bool {
        match k {
            0..=2 => self.translation[k].is_some(),
            3..=5 => self.rotation[k - 3],
            _ => self.electric[k - 6].is_some(),
        }
    }

    pub fn mechanically_clamped(&self) -> bool {
        self.translation.iter().all(Option::is_some) && self.rotation.iter().all(|r| *r)
    }

    /// Clamps position and orientation at their current values.
    pub fn clamp(&mut self, node: &NodeState) {
        self.translation = node.phi.0.map(|x| Some(DofSchedule::constant(x)));
        self.rotation = [true; 3];
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletMask {
    pub nodes: Vec<NodeMask>,
}

impl DirichletMask {
    pub fn free(n_nodes: usize) -> Self {
        Self {
            nodes: vec![NodeMask::default(); n_nodes],
        }
    }

    /// Global generalized indices (`9 * node + k`) that remain unknown.
    pub fn free_dofs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            for k in 0..NODE_GEN_DOFS {
                if !n.is_masked(k) {
                    out.push(NODE_GEN_DOFS * i + k);
                }
            }
        }
        out
    }

    /// Overwrites prescribed translational and electrical entries with their
    /// schedule values at time `t`.
    pub fn apply(&self, q: &mut GlobalConfiguration, t: f64) {
        for (i, n) in self.nodes.iter().enumerate() {
            let o = NODE_DOFS * i;
            for k in 0..3 {
                if let Some(s) = n.translation[k] {
                    q.0[o + k] = s.value(t);
                }
                if let Some(s) = n.electric[k] {
                    q.0[o + 12 + k] = s.value(t);
                }
            }
        }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        if self.nodes.len() != n_nodes {
            return Err(Error::Config(format!(
                "mask has {} nodes, mesh has {n_nodes}",
                self.nodes.len()
            )));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            for s in n.translation.iter().chain(&n.electric).flatten() {
                if ![s.start, s.end, s.ramp_ms].iter().all(|x| x.is_finite()) {
                    return Err(Error::Config(format!("non-finite schedule at node {i}")));
                }
            }
        }
        Ok(())
    }
}

/// Orthonormality constraints of one node,
/// `[1/2(d1.d1-1), 1/2(d2.d2-1), 1/2(d3.d3-1), d1.d2, d1.d3, d2.d3]`.
pub fn node_constraints(node: &NodeState) -> [f64; 6] {
    let [d1, d2, d3] = node.d;
    [
        0.5 * (d1.dot(&d1) - 1.0),
        0.5 * (d2.dot(&d2) - 1.0),
        0.5 * (d3.dot(&d3) - 1.0),
        d1.dot(&d2),
        d1.dot(&d3),
        d2.dot(&d3),
    ]
}

/// Jacobian of [`node_constraints`] with respect to the 15 nodal entries.
pub fn node_constraint_jacobian(node: &NodeState) -> [[f64; NODE_DOFS]; 6] {
    let mut g = [[0.0; NODE_DOFS]; 6];
    let d = node.d;
    let mut put = |row: usize, dir: usize, v: &Vec3| {
        for k in 0..3 {
            g[row][3 + 3 * dir + k] += v[k];
        }
    };
    put(0, 0, &d[0]);
    put(1, 1, &d[1]);
    put(2, 2, &d[2]);
    put(3, 0, &d[1]);
    put(3, 1, &d[0]);
    put(4, 0, &d[2]);
    put(4, 2, &d[0]);
    put(5, 1, &d[2]);
    put(5, 2, &d[1]);
    g
}

/// Internal null-space block `[[I,0,0],[0,-hat(d1),0],[0,-hat(d2),0],[0,-hat(d3),0],[0,0,I]]`.
pub fn node_null_space(node: &NodeState) -> NullSpaceBlock {
    let mut p = [[0.0; NODE_GEN_DOFS]; NODE_DOFS];
    for k in 0..3 {
        p[k][k] = 1.0;
        p[12 + k][6 + k] = 1.0;
    }
    for i in 0..3 {
        let h = hat(&node.d[i]);
        for r in 0..3 {
            for c in 0..3 {
                p[3 + 3 * i + r][3 + c] = -h.0[r][c];
            }
        }
    }
    p
}

/// Nodal null-space blocks with the columns of masked generalized DOFs zeroed.
#[derive(Clone, Debug)]
pub struct GlobalNullSpace {
    pub blocks: Vec<NullSpaceBlock>,
    pub free: Vec<usize>,
}

impl GlobalNullSpace {
    /// Dense `15n x 9n` matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.blocks.len();
        let mut m = vec![vec![0.0; NODE_GEN_DOFS * n]; NODE_DOFS * n];
        for (i, b) in self.blocks.iter().enumerate() {
            for r in 0..NODE_DOFS {
                for c in 0..NODE_GEN_DOFS {
                    m[NODE_DOFS * i + r][NODE_GEN_DOFS * i + c] = b[r][c];
                }
            }
        }
        m
    }

    /// Applies the transpose to a full-length vector, keeping free rows only.
    pub fn project(&self, r: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|&g| {
                let (i, k) = (g / NODE_GEN_DOFS, g % NODE_GEN_DOFS);
                (0..NODE_DOFS)
                    .map(|row| self.blocks[i][row][k] * r[NODE_DOFS * i + row])
                    .sum()
            })
            .collect()
    }
}

pub fn assemble_global_null_space(q: &GlobalConfiguration, mask: &DirichletMask) -> GlobalNullSpace {
    let blocks = (0..q.n_nodes())
        .map(|i| {
            let mut b = node_null_space(&q.node(i));
            for k in 0..NODE_GEN_DOFS {
                if mask.nodes[i].is_masked(k) {
                    for row in b.iter_mut() {
                        row[k] = 0.0;
                    }
                }
            }
            b
        })
        .collect();
    GlobalNullSpace {
        blocks,
        free: mask.free_dofs(),
    }
}

/// Lumped kinetic energy `sum w (1/2 A_rho |phi'|^2 + 1/2 sum_{i=1,2} M_rho^i |d_i'|^2)`.
pub fn kinetic_energy(qdot: &GlobalConfiguration, mesh: &BeamMesh) -> f64 {
    let m = mesh.mass_diagonal();
    0.5 * qdot.0.iter().zip(&m).map(|(v, m)| m * v * v).sum::<f64>()
}

fn local_nodes<T: Scalar>(q: &[T; ELEM_DOFS]) -> (NodeState<T>, NodeState<T>) {
    (NodeState::from_slice(&q[..15]), NodeState::from_slice(&q[15..]))
}

fn gather(q: &GlobalConfiguration, e: usize) -> [f64; ELEM_DOFS] {
    let mut out = [0.0; ELEM_DOFS];
    out.copy_from_slice(&q.0[NODE_DOFS * e..NODE_DOFS * (e + 2)]);
    out
}

/// Local index (0..30) of mechanical entry `m` (0..24).
#[inline]
fn mech_index(m: usize) -> usize {
    if m < 12 {
        m
    } else {
        m + 3
    }
}

/// Electrical strains `(eps1, eps2, eps3, e1, e2)` are linear in the nodal
/// electrical entries; row `k` lists `(local index, coefficient)` pairs.
fn electrical_rows(l: f64) -> [[(usize, f64); 2]; 5] {
    let h = 0.5;
    let il = 1.0 / l;
    [
        [(13, h), (28, h)],
        [(14, h), (29, h)],
        [(12, -il), (27, il)],
        [(13, -il), (28, il)],
        [(14, -il), (29, il)],
    ]
}

fn checked_strains(mesh: &BeamMesh, e: usize, s: &ReducedStrains<f64>) -> Result<()> {
    let (j, point) = min_section_jacobian(s, mesh.element_reference(e), &mesh.section);
    if j <= J_MIN {
        return Err(Error::InvertedElement { jacobian: j, point });
    }
    Ok(())
}

fn element_strains_local<T: Scalar>(mesh: &BeamMesh, e: usize, q: &[T; ELEM_DOFS]) -> Result<ReducedStrains<T>> {
    let (a, b) = local_nodes(q);
    let s = element_strains((&a, &b), (&mesh.frames[e], &mesh.frames[e + 1]), mesh.lengths[e])?;
    Ok(s.reduced())
}

/// Midpoint strains of element `e`.
pub fn element_reduced_strains(mesh: &BeamMesh, e: usize, q: &GlobalConfiguration) -> Result<ReducedStrains> {
    element_strains_local(mesh, e, &gather(q, e))
}

/// Energy of element `e` (N mm).
pub fn element_energy(mesh: &BeamMesh, e: usize, q: &GlobalConfiguration) -> Result<f64> {
    let s = element_strains_local(mesh, e, &gather(q, e))?;
    checked_strains(mesh, e, &s)?;
    let w = mesh
        .energy
        .energy(&s, mesh.element_reference(e), &mesh.section, &mesh.params)?;
    Ok(mesh.lengths[e] * w)
}

/// Mechanical strains depend on the 24 nodal entries only through
/// `z = (d1_mid, d2_mid, phi', d1', d2', d3')`: six midpoint director
/// entries `y` and twelve difference quotients `x`, with the strains linear
/// in `x`.
const Z_VARS: usize = 18;

/// Row `i` of the linear map from mechanical entries (0..24) to `z`.
fn z_rows(l: f64) -> [[(usize, f64); 2]; Z_VARS] {
    let il = 1.0 / l;
    std::array::from_fn(|i| {
        let c = i % 3;
        match i / 3 {
            0 => [(3 + c, 0.5), (15 + c, 0.5)],
            1 => [(6 + c, 0.5), (18 + c, 0.5)],
            2 => [(c, -il), (12 + c, il)],
            3 => [(3 + c, -il), (15 + c, il)],
            4 => [(6 + c, -il), (18 + c, il)],
            _ => [(9 + c, -il), (21 + c, il)],
        }
    })
}

/// `z` evaluated with the same arithmetic as [`element_strains`].
fn z_values(ql: &[f64; ELEM_DOFS], l: f64) -> [f64; Z_VARS] {
    let il = 1.0 / l;
    std::array::from_fn(|i| {
        let c = i % 3;
        let (a, b) = match i / 3 {
            0 => (3, 18),
            1 => (6, 21),
            2 => (0, 15),
            3 => (3, 18),
            4 => (6, 21),
            _ => (9, 24),
        };
        if i < 6 {
            (ql[a + c] + ql[b + c]) * 0.5
        } else {
            (ql[b + c] - ql[a + c]) * il
        }
    })
}

/// `(Gamma, K)` in the reference basis.
fn strains_from_z<T: Scalar>(y: &[T], x: &[T], reference: &Triad) -> [T; 6] {
    let v = |a: &[T], o: usize| Vec3([a[o], a[o + 1], a[o + 2]]);
    let t = gram_schmidt(&v(y, 0), &v(y, 3));
    let gamma = v(x, 0) - t[2];
    let kappa = (t[0].cross(&v(x, 3)) + t[1].cross(&v(x, 6)) + t[2].cross(&v(x, 9))) * 0.5;
    let mut out = [T::zero(); 6];
    for (o, w) in [(0, gamma), (3, kappa)] {
        let c = [t[0].dot(&w), t[1].dot(&w), t[2].dot(&w)];
        for j in 0..3 {
            out[o + j] = c[0] * reference[0][j] + c[1] * reference[1][j] + c[2] * reference[2][j];
        }
    }
    out
}

/// Electrical strains `(eps1, eps2, eps3, e1, e2)`.
fn electrical_strains(ql: &[f64; ELEM_DOFS], l: f64) -> [f64; 5] {
    let il = 1.0 / l;
    [
        (ql[13] + ql[28]) * 0.5,
        (ql[14] + ql[29]) * 0.5,
        (ql[27] - ql[12]) * il,
        (ql[28] - ql[13]) * il,
        (ql[29] - ql[14]) * il,
    ]
}

/// Reduced strains and their Jacobian `B` (11 x 30).
fn strains_and_jacobian(mesh: &BeamMesh, e: usize, ql: &[f64; ELEM_DOFS]) -> ([f64; 11], Box<[[f64; ELEM_DOFS]; 11]>) {
    let l = mesh.lengths[e];
    let z = z_values(ql, l);
    let zd = Dual::<Z_VARS>::seed(&z, 0);
    let sd = strains_from_z(&zd[..6], &zd[6..], mesh.element_reference(e));
    let mut sv = [0.0; 11];
    for k in 0..6 {
        sv[k] = sd[k].v;
    }
    sv[6..].copy_from_slice(&electrical_strains(ql, l));
    let rows = z_rows(l);
    let mut b = Box::new([[0.0; ELEM_DOFS]; 11]);
    for k in 0..6 {
        for (i, row) in rows.iter().enumerate() {
            let g = sd[k].g[i];
            for &(m, c) in row {
                b[k][mech_index(m)] += g * c;
            }
        }
    }
    for (k, row) in electrical_rows(l).iter().enumerate() {
        for &(idx, c) in row {
            b[6 + k][idx] = c;
        }
    }
    (sv, b)
}

/// `sum_k c_k d^2 s_k / dz^2` for the six mechanical strains.
fn weighted_strain_hessian(c: &[f64], z: &[f64; Z_VARS], reference: &Triad) -> [[f64; Z_VARS]; Z_VARS] {
    let weigh = |s: [HyperDual<6>; 6]| (0..6).fold(HyperDual::<6>::constant(0.0), |acc, k| acc + s[k] * c[k]);
    let mut h = [[0.0; Z_VARS]; Z_VARS];
    let y = HyperDual::<6>::seed(&[z[0], z[1], z[2], z[3], z[4], z[5]], 0);
    let x: [HyperDual<6>; 12] = std::array::from_fn(|j| HyperDual::constant(z[6 + j]));
    let hyy = weigh(strains_from_z(&y, &x, reference)).hessian();
    for i in 0..6 {
        h[i][..6].copy_from_slice(&hyy[i]);
    }
    // linear in x: the mixed block is the y-gradient of the x-coefficients
    let yd = Dual::<6>::seed(&[z[0], z[1], z[2], z[3], z[4], z[5]], 0);
    let weigh1 = |x: &[Dual<6>; 12]| {
        let s = strains_from_z(&yd, x, reference);
        (0..6).fold(Dual::<6>::constant(0.0), |acc, k| acc + s[k] * c[k])
    };
    let base = weigh1(&[Dual::constant(0.0); 12]);
    for j in 0..12 {
        let mut unit = [Dual::constant(0.0); 12];
        unit[j] = Dual::constant(1.0);
        let bj = weigh1(&unit);
        for i in 0..6 {
            let v = bj.g[i] - base.g[i];
            h[i][6 + j] = v;
            h[6 + j][i] = v;
        }
    }
    h
}

/// Element energy and its gradient with respect to the 30 local entries.
pub fn element_gradient(mesh: &BeamMesh, e: usize, q: &GlobalConfiguration) -> Result<(f64, [f64; ELEM_DOFS])> {
    let ql = gather(q, e);
    let l = mesh.lengths[e];
    let (sv, b) = strains_and_jacobian(mesh, e, &ql);
    checked_strains(mesh, e, &ReducedStrains::from_array(&sv))?;
    let omega = mesh.energy.energy(
        &ReducedStrains::from_array(&Dual::<11>::seed(&sv, 0)),
        mesh.element_reference(e),
        &mesh.section,
        &mesh.params,
    )?;
    let mut grad = [0.0; ELEM_DOFS];
    for k in 0..11 {
        let wk = l * omega.g[k];
        for (g, bk) in grad.iter_mut().zip(&b[k]) {
            *g += wk * bk;
        }
    }
    Ok((l * omega.v, grad))
}

/// Element energy, gradient and Hessian with respect to the 30 local entries.
pub fn element_hessian(
    mesh: &BeamMesh,
    e: usize,
    q: &GlobalConfiguration,
) -> Result<(f64, [f64; ELEM_DOFS], Box<ElementMatrix>)> {
    let ql = gather(q, e);
    let l = mesh.lengths[e];
    let (sv, b) = strains_and_jacobian(mesh, e, &ql);
    checked_strains(mesh, e, &ReducedStrains::from_array(&sv))?;
    let omega = mesh.energy.energy(
        &ReducedStrains::from_array(&HyperDual::<11>::seed(&sv, 0)),
        mesh.element_reference(e),
        &mesh.section,
        &mesh.params,
    )?;
    let w_s = omega.g;
    let w_ss = omega.hessian();

    let mut grad = [0.0; ELEM_DOFS];
    for k in 0..11 {
        for (a, g) in grad.iter_mut().enumerate() {
            *g += l * w_s[k] * b[k][a];
        }
    }

    let mut h: Box<ElementMatrix> = Box::new([[0.0; ELEM_DOFS]; ELEM_DOFS]);
    // W_ss B
    let mut wb = [[0.0; ELEM_DOFS]; 11];
    for i in 0..11 {
        for k in 0..11 {
            let c = w_ss[i][k];
            if c != 0.0 {
                for a in 0..ELEM_DOFS {
                    wb[i][a] += c * b[k][a];
                }
            }
        }
    }
    for i in 0..11 {
        for a in 0..ELEM_DOFS {
            let bia = b[i][a];
            if bia != 0.0 {
                for c in 0..ELEM_DOFS {
                    h[a][c] += bia * wb[i][c];
                }
            }
        }
    }
    // sum_k W_k d^2 s_k, mapped back from z
    let z = z_values(&ql, l);
    let hz = weighted_strain_hessian(&w_s[..6], &z, mesh.element_reference(e));
    let rows = z_rows(l);
    for (i, ri) in rows.iter().enumerate() {
        for (j, rj) in rows.iter().enumerate() {
            let v = hz[i][j];
            if v == 0.0 {
                continue;
            }
            for &(m, cm) in ri {
                for &(n, cn) in rj {
                    h[mech_index(m)][mech_index(n)] += cm * v * cn;
                }
            }
        }
    }
    for row in h.iter_mut() {
        for v in row.iter_mut() {
            *v *= l;
        }
    }
    Ok((l * omega.v, grad, h))
}

/// Total stored energy `sum_e l_e Omega_b` (N mm).
pub fn potential_energy(q: &GlobalConfiguration, mesh: &BeamMesh) -> Result<f64> {
    (0..mesh.n_elements()).map(|e| element_energy(mesh, e, q)).sum()
}

/// Energy and full gradient (15 entries per node).
pub fn potential_gradient(q: &GlobalConfiguration, mesh: &BeamMesh) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; q.0.len()];
    let mut v = 0.0;
    for e in 0..mesh.n_elements() {
        let (ve, ge) = element_gradient(mesh, e, q)?;
        v += ve;
        for (a, x) in ge.iter().enumerate() {
            g[NODE_DOFS * e + a] += x;
        }
    }
    Ok((v, g))
}

/// Viscous generalized force of one element for configuration `q` and rate `v`.
fn element_viscous<T: Scalar>(
    mesh: &BeamMesh,
    e: usize,
    q: &[T; ELEM_DOFS],
    v: &[T; ELEM_DOFS],
) -> Result<[T; ELEM_DOFS]> {
    let l = mesh.lengths[e];
    let reference = mesh.element_reference(e);
    let (qa, qb) = local_nodes(q);
    let (va, vb) = local_nodes(v);
    let mut out = [T::zero(); ELEM_DOFS];
    let d0: [Vec3<T>; 3] = reference.map(|d| d.lift());
    for (x1, x2, w) in section_points(&mesh.section, mesh.energy.quadrature_order)? {
        let f = placement_gradient((&qa, &qb), reference, l, x1, x2);
        let fdot = placement_gradient((&va, &vb), reference, l, x1, x2);
        let j = f.determinant();
        let p = viscous_piola(&f, &fdot, j, &mesh.params)?;
        let pd = d0.map(|d| p.mul_vec(&d));
        for k in 0..3 {
            let axial = pd[2][k] * w;
            out[k] = out[k] - axial;
            out[15 + k] = out[15 + k] + axial;
            let s1 = pd[0][k] * (0.5 * l * w);
            let s2 = pd[1][k] * (0.5 * l * w);
            out[3 + k] = out[3 + k] + s1 - pd[2][k] * (x1 * w);
            out[18 + k] = out[18 + k] + s1 + pd[2][k] * (x1 * w);
            out[6 + k] = out[6 + k] + s2 - pd[2][k] * (x2 * w);
            out[21 + k] = out[21 + k] + s2 + pd[2][k] * (x2 * w);
        }
    }
    Ok(out)
}

/// Kelvin-Voigt generalized force `int P_vis : dF/dq dA ds` (15 per node).
pub fn viscous_generalized_force(
    q: &GlobalConfiguration,
    qdot: &GlobalConfiguration,
    mesh: &BeamMesh,
) -> Result<Vec<f64>> {
    let mut f = vec![0.0; q.0.len()];
    if mesh.params.eta == 0.0 {
        return Ok(f);
    }
    for e in 0..mesh.n_elements() {
        let fe = element_viscous(mesh, e, &gather(q, e), &gather(qdot, e))?;
        for (a, x) in fe.iter().enumerate() {
            f[NODE_DOFS * e + a] += x;
        }
    }
    Ok(f)
}

/// Element viscous force with its Jacobians with respect to configuration and rate.
///
/// The placement gradient is linear in the first fifteen midpoint variables
/// `z`, `F = sum_g z_(g,r) e_r (x) c_g` with `c = (d1^0, d2^0, d3^0, X1 d3^0,
/// X2 d3^0)`, so only the pointwise stress is differentiated.
pub fn element_viscous_jacobians(
    mesh: &BeamMesh,
    e: usize,
    q: &GlobalConfiguration,
    qdot: &GlobalConfiguration,
) -> Result<([f64; ELEM_DOFS], Box<ElementMatrix>, Box<ElementMatrix>)> {
    const NZ: usize = 15;
    let ql = gather(q, e);
    let vl = gather(qdot, e);
    let l = mesh.lengths[e];
    let d0 = mesh.element_reference(e);
    let (zq, zv) = (z_values(&ql, l), z_values(&vl, l));
    let mut fz = [0.0; NZ];
    let mut jq = [[0.0; NZ]; NZ];
    let mut jv = [[0.0; NZ]; NZ];
    for (x1, x2, w) in section_points(&mesh.section, mesh.energy.quadrature_order)? {
        let c = [d0[0], d0[1], d0[2], d0[2] * x1, d0[2] * x2];
        let placement = |z: &[f64; Z_VARS]| {
            let mut f = [[0.0; 3]; 3];
            for (g, cg) in c.iter().enumerate() {
                for r in 0..3 {
                    for t in 0..3 {
                        f[r][t] += z[3 * g + r] * cg[t];
                    }
                }
            }
            f
        };
        let (f, fdot) = (placement(&zq), placement(&zv));
        let mut seeds = [0.0; 18];
        for r in 0..3 {
            for t in 0..3 {
                seeds[3 * r + t] = f[r][t];
                seeds[9 + 3 * r + t] = fdot[r][t];
            }
        }
        let sd = Dual::<18>::seed(&seeds, 0);
        let fd = Mat3(std::array::from_fn(|r| std::array::from_fn(|t| sd[3 * r + t])));
        let fdd = Mat3(std::array::from_fn(|r| std::array::from_fn(|t| sd[9 + 3 * r + t])));
        let p = viscous_piola(&fd, &fdd, fd.determinant(), &mesh.params)?;
        for (h, ch) in c.iter().enumerate() {
            for r in 0..3 {
                // (P c_h)_r and its derivatives
                let mut val = 0.0;
                let mut grad = [0.0; 18];
                for k in 0..3 {
                    val += p.0[r][k].v * ch[k];
                    for (gi, pg) in grad.iter_mut().zip(&p.0[r][k].g) {
                        *gi += pg * ch[k];
                    }
                }
                let row = 3 * h + r;
                fz[row] += w * val;
                for (g, cg) in c.iter().enumerate() {
                    for s_ in 0..3 {
                        let (mut a, mut b) = (0.0, 0.0);
                        for t in 0..3 {
                            a += grad[3 * s_ + t] * cg[t];
                            b += grad[9 + 3 * s_ + t] * cg[t];
                        }
                        jq[row][3 * g + s_] += w * a;
                        jv[row][3 * g + s_] += w * b;
                    }
                }
            }
        }
    }
    let rows = z_rows(l);
    let mut f = [0.0; ELEM_DOFS];
    let mut dq: Box<ElementMatrix> = Box::new([[0.0; ELEM_DOFS]; ELEM_DOFS]);
    let mut dv: Box<ElementMatrix> = Box::new([[0.0; ELEM_DOFS]; ELEM_DOFS]);
    for i in 0..NZ {
        for &(m, cm) in &rows[i] {
            f[mech_index(m)] += l * cm * fz[i];
            for j in 0..NZ {
                for &(n, cn) in &rows[j] {
                    dq[mech_index(m)][mech_index(n)] += l * cm * jq[i][j] * cn;
                    dv[mech_index(m)][mech_index(n)] += l * cm * jv[i][j] * cn;
                }
            }
        }
    }
    Ok((f, dq, dv))
}
