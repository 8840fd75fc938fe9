//! Scenario configuration, construction and output writing.
//!
//! Configs are TOML with unit-suffixed keys. Lengths are in mm, time in ms,
//! potentials in V and potential gradients in V/mm; with g for mass this makes
//! forces come out in N and stresses in MPa.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discretization::{BeamMesh, DirichletMask, DofSchedule, GlobalConfiguration, NODE_DOFS};
use crate::error::{Error, Result};
use crate::integrator::{discrete_hamiltonian, EnergySample, Integrator, NewtonOptions};
use crate::materials::{EnergyModel, EnergyPath, MaterialParams, SectionProperties};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Contraction,
    Shear,
    Bending,
    Torsion,
    Custom,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Contraction => "contraction",
            Self::Shear => "shear",
            Self::Bending => "bending",
            Self::Torsion => "torsion",
            Self::Custom => "custom",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contraction" => Ok(Self::Contraction),
            "shear" => Ok(Self::Shear),
            "bending" => Ok(Self::Bending),
            "torsion" => Ok(Self::Torsion),
            "custom" => Ok(Self::Custom),
            _ => Err(Error::Config(format!("unknown scenario kind `{s}`"))),
        }
    }
}

/// Beam geometry; unset fields take the preset of the scenario kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_mm: Option<f64>,
    /// Side of the square cross-section.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<usize>,
}

/// Electrical loading; unset fields take the preset of the scenario kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricalConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_o_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_v_per_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_v_per_mm: Option<f64>,
    /// Linear ramp of all prescribed potentials; zero applies a step at t = 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp_ms: Option<f64>,
    /// Torsion only: the spiral turns by pi/8 per `length / spiral_reference_elements`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spiral_reference_elements: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt_ms: f64,
    pub t_end_ms: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            dt_ms: 1e-4,
            t_end_ms: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub energy_path: EnergyPath,
    pub quadrature_order: usize,
    /// Newton stops once the max-norm of the residual is below this times dt.
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let e = EnergyModel::default();
        let n = NewtonOptions::default();
        Self {
            energy_path: e.path,
            quadrature_order: e.quadrature_order,
            newton_tolerance: n.tolerance,
            newton_max_iterations: n.max_iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            stride: 1,
        }
    }
}

/// Per-node Dirichlet override, applied after the scenario preset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// Zero-based node index.
    pub node: usize,
    /// Hold position and orientation at the reference values.
    #[serde(default)]
    pub clamp: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_o: Option<DofSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<DofSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<DofSchedule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub material: MaterialParams,
    #[serde(default)]
    pub electrical: ElectricalConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<BoundaryConfig>,
}

/// Fully resolved geometry and loading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedParameters {
    pub length: f64,
    pub width: f64,
    pub elements: usize,
    pub phi_o: f64,
    pub alpha: f64,
    pub beta: f64,
    pub ramp_ms: f64,
    pub spiral_reference_elements: f64,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            geometry: GeometryConfig::default(),
            material: MaterialParams::default(),
            electrical: ElectricalConfig::default(),
            time: TimeConfig::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            boundary: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Geometry and loading presets of the four named scenarios, overridden by
    /// any explicitly configured value.
    pub fn resolved(&self) -> ResolvedParameters {
        let (length, width, elements, phi_o, alpha, beta) = match self.kind {
            ScenarioKind::Contraction => (0.1, 0.02, 5, 2e4, 0.0, 0.0),
            ScenarioKind::Bending => (0.1, 0.005, 40, 2e2, 2e4, 0.0),
            ScenarioKind::Shear => (0.1, 0.005, 40, 2e2, 2e4, 0.0),
            ScenarioKind::Torsion => (0.05, 0.005, 80, 2e3, 3e4, 3e4),
            ScenarioKind::Custom => (0.1, 0.02, 5, 0.0, 0.0, 0.0),
        };
        let g = &self.geometry;
        let e = &self.electrical;
        ResolvedParameters {
            length: g.length_mm.unwrap_or(length),
            width: g.width_mm.unwrap_or(width),
            elements: g.elements.unwrap_or(elements),
            phi_o: e.phi_o_v.unwrap_or(phi_o),
            alpha: e.alpha_v_per_mm.unwrap_or(alpha),
            beta: e.beta_v_per_mm.unwrap_or(beta),
            ramp_ms: e.ramp_ms.unwrap_or(0.0),
            spiral_reference_elements: e.spiral_reference_elements.unwrap_or(80.0),
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.time.t_end_ms / self.time.dt_ms).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.resolved();
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("geometry.length_mm", r.length)?;
        positive("geometry.width_mm", r.width)?;
        positive("electrical.spiral_reference_elements", r.spiral_reference_elements)?;
        positive("time.dt_ms", self.time.dt_ms)?;
        if r.elements == 0 {
            return Err(Error::Config("geometry.elements must be at least 1".into()));
        }
        if !(self.time.t_end_ms >= self.time.dt_ms) {
            return Err(Error::Config(format!(
                "time.t_end_ms ({}) must be at least time.dt_ms ({})",
                self.time.t_end_ms, self.time.dt_ms
            )));
        }
        if r.ramp_ms < 0.0 || !r.ramp_ms.is_finite() {
            return Err(Error::Config(format!(
                "electrical.ramp_ms must be non-negative, got {}",
                r.ramp_ms
            )));
        }
        for (name, v) in [
            ("phi_o_v", r.phi_o),
            ("alpha_v_per_mm", r.alpha),
            ("beta_v_per_mm", r.beta),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("electrical.{name} must be finite")));
            }
        }
        if self.output.stride == 0 {
            return Err(Error::Config("output.stride must be at least 1".into()));
        }
        if self.solver.newton_max_iterations == 0 {
            return Err(Error::Config("solver.newton_max_iterations must be at least 1".into()));
        }
        positive("solver.newton_tolerance", self.solver.newton_tolerance)?;
        for b in &self.boundary {
            if b.node > r.elements {
                return Err(Error::Config(format!(
                    "boundary node {} out of range (mesh has {} nodes)",
                    b.node,
                    r.elements + 1
                )));
            }
        }
        self.material.validate()?;
        self.energy_model().validate()
    }

    pub fn energy_model(&self) -> EnergyModel {
        EnergyModel {
            path: self.solver.energy_path,
            quadrature_order: self.solver.quadrature_order,
        }
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tolerance: self.solver.newton_tolerance,
            max_iterations: self.solver.newton_max_iterations,
        }
    }
}

/// Assembled problem: mesh, Dirichlet data and initial configuration.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mesh: BeamMesh,
    pub mask: DirichletMask,
    pub q0: GlobalConfiguration,
}

/// Target nodal electrical values `(phi_o, alpha, beta)` of a named scenario.
fn electrical_targets(kind: ScenarioKind, r: &ResolvedParameters, mesh: &BeamMesh) -> Option<Vec<[f64; 3]>> {
    let n = mesh.n_nodes();
    let ne = (n - 1) as f64;
    let targets = match kind {
        ScenarioKind::Contraction => (0..n).map(|i| [r.phi_o * i as f64 / ne, 0.0, 0.0]).collect(),
        ScenarioKind::Bending => (0..n)
            .map(|i| if i % 2 == 0 { [0.0; 3] } else { [r.phi_o, r.alpha, 0.0] })
            .collect(),
        ScenarioKind::Shear => (0..n).map(|i| [i as f64 * r.phi_o, r.alpha, 0.0]).collect(),
        ScenarioKind::Torsion => {
            let spacing = r.length / r.spiral_reference_elements;
            (0..n)
                .map(|i| {
                    let theta = std::f64::consts::FRAC_PI_8 * mesh.frames[i].s / spacing;
                    let (s, c) = theta.sin_cos();
                    [r.phi_o, r.alpha * (c - s), r.beta * (c + s)]
                })
                .collect()
        }
        ScenarioKind::Custom => return None,
    };
    Some(targets)
}

/// Mesh, mask and initial state. Node 0 is clamped in all mechanical DOFs
/// and, for the named scenarios, every electrical DOF follows its schedule.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let r = config.resolved();
    let section = SectionProperties::square(r.width, config.material.rho);
    let mesh = BeamMesh::straight(r.elements, r.length, section, config.material, config.energy_model())?;
    let reference = mesh.reference_configuration();
    let mut mask = DirichletMask::free(mesh.n_nodes());
    mask.nodes[0].clamp(&reference.node(0));
    if let Some(targets) = electrical_targets(config.kind, &r, &mesh) {
        for (m, t) in mask.nodes.iter_mut().zip(&targets) {
            m.electric = t.map(|v| {
                Some(DofSchedule {
                    start: 0.0,
                    end: v,
                    ramp_ms: r.ramp_ms,
                })
            });
        }
    }
    for b in &config.boundary {
        let m = &mut mask.nodes[b.node];
        if b.clamp {
            m.clamp(&reference.node(b.node));
        }
        for (slot, s) in m.electric.iter_mut().zip([b.phi_o, b.alpha, b.beta]) {
            if s.is_some() {
                *slot = s;
            }
        }
    }
    mask.validate(mesh.n_nodes())?;
    let mut q0 = reference;
    mask.apply(&mut q0, 0.0);
    Ok(Scenario {
        config: config.clone(),
        mesh,
        mask,
        q0,
    })
}

/// One recorded time level.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub step: usize,
    pub t: f64,
    pub q: &'a GlobalConfiguration,
    pub energy: EnergySample,
    /// Newton iterations of the solve that produced `q` (0 at the start).
    pub iterations: usize,
    pub constraint_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyStatistics {
    pub initial: f64,
    pub final_value: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub kind: String,
    pub nodes: usize,
    pub steps: usize,
    pub dt_ms: f64,
    pub t_end_ms: f64,
    pub tip_displacement_mm: [f64; 3],
    /// Axis-angle vector of the tip rotation relative to the reference triad.
    pub tip_rotation: [f64; 3],
    pub hamiltonian: EnergyStatistics,
    pub kinetic: EnergyStatistics,
    pub max_constraint_violation: f64,
    pub newton_iterations: usize,
    pub max_newton_iterations: usize,
}

/// Rotation vector of an orthonormal matrix.
fn rotation_vector(r: &[[f64; 3]; 3]) -> [f64; 3] {
    let tr = r[0][0] + r[1][1] + r[2][2];
    let c = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = c.acos();
    let axis = [r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]];
    let s = angle.sin();
    if angle < 1e-12 {
        return axis.map(|a| 0.5 * a);
    }
    if s.abs() > 1e-6 {
        return axis.map(|a| a * angle / (2.0 * s));
    }
    // near pi: axis from the diagonal of (R + I) / 2
    let mut best = 0;
    for k in 1..3 {
        if r[k][k] > r[best][best] {
            best = k;
        }
    }
    let mut n = [0.0; 3];
    n[best] = ((r[best][best] + 1.0) / 2.0).max(0.0).sqrt();
    for k in 0..3 {
        if k != best {
            n[k] = (r[k][best] + r[best][k]) / (4.0 * n[best]);
        }
    }
    n.map(|x| x * angle)
}

struct Stats {
    first: f64,
    last: f64,
    min: f64,
    max: f64,
    sum: f64,
    count: usize,
}

impl Stats {
    fn new() -> Self {
        Self {
            first: f64::NAN,
            last: f64::NAN,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.first = x;
        }
        self.last = x;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.sum += x;
        self.count += 1;
    }

    fn finish(&self) -> EnergyStatistics {
        EnergyStatistics {
            initial: self.first,
            final_value: self.last,
            min: self.min,
            max: self.max,
            mean: self.sum / self.count as f64,
        }
    }
}

impl Scenario {
    pub fn integrator(&self) -> Result<Integrator> {
        Integrator::new(
            self.mesh.clone(),
            self.mask.clone(),
            self.config.time.dt_ms,
            self.config.newton_options(),
        )
    }

    /// Integrates to `t_end`, calling `observe` for every time level
    /// including the initial one.
    pub fn simulate<F>(&self, mut observe: F) -> Result<RunSummary>
    where
        F: FnMut(&Sample) -> Result<()>,
    {
        let integ = self.integrator()?;
        let dt = integ.dt;
        let n_steps = self.config.n_steps();
        let (mut state, diag) = integ.initialize(&self.q0, None)?;

        let mut h_stats = Stats::new();
        let mut t_stats = Stats::new();
        let mut max_violation: f64 = 0.0;
        let mut total_iterations = diag.iterations;
        let mut max_iterations = diag.iterations;

        let mut record = |step: usize, q: &GlobalConfiguration, energy: EnergySample, iterations: usize| {
            let violation = q.constraint_violation();
            max_violation = max_violation.max(violation);
            h_stats.push(energy.hamiltonian);
            t_stats.push(energy.kinetic);
            observe(&Sample {
                step,
                t: step as f64 * dt,
                q,
                energy,
                iterations,
                constraint_violation: violation,
            })
        };

        let e0 = discrete_hamiltonian(&state.q_prev, &state.q_curr, dt, &integ.mesh, &integ.mask)?;
        record(0, &state.q_prev, e0, 0)?;
        let mut last_iterations = diag.iterations;
        for n in 1..=n_steps {
            if n > 1 {
                let d = integ.step(&mut state)?;
                last_iterations = d.iterations;
                total_iterations += d.iterations;
                max_iterations = max_iterations.max(d.iterations);
            }
            let e = integ.energies(&state)?;
            record(n, &state.q_curr, e, last_iterations)?;
        }

        let tip = self.mesh.n_nodes() - 1;
        let (now, reference) = (state.q_curr.node(tip), self.q0.node(tip));
        let mut rot = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rot[i][j] = (0..3).map(|k| now.d[k][i] * reference.d[k][j]).sum();
            }
        }
        Ok(RunSummary {
            kind: self.config.kind.name().into(),
            nodes: self.mesh.n_nodes(),
            steps: n_steps,
            dt_ms: dt,
            t_end_ms: n_steps as f64 * dt,
            tip_displacement_mm: std::array::from_fn(|k| now.phi[k] - reference.phi[k]),
            tip_rotation: rotation_vector(&rot),
            hamiltonian: h_stats.finish(),
            kinetic: t_stats.finish(),
            max_constraint_violation: max_violation,
            newton_iterations: total_iterations,
            max_newton_iterations: max_iterations,
        })
    }
}

const NODE_FIELDS: [&str; NODE_DOFS] = [
    "phi_x", "phi_y", "phi_z", "d1_x", "d1_y", "d1_z", "d2_x", "d2_y", "d2_z", "d3_x", "d3_y", "d3_z", "phi_o",
    "alpha", "beta",
];

fn trajectory_header(n_nodes: usize) -> String {
    let mut h = String::from("step,t_ms");
    for i in 0..n_nodes {
        for f in NODE_FIELDS {
            write!(h, ",n{i}_{f}").unwrap();
        }
    }
    h.push_str(",hamiltonian,kinetic,potential,newton_iterations");
    h
}

const ENERGY_HEADER: &str = "step,t_ms,hamiltonian,kinetic,potential,newton_iterations,constraint_violation";

/// Files written by [`write_outputs`].
#[derive(Clone, Debug)]
pub struct OutputFiles {
    pub trajectory: std::path::PathBuf,
    pub energy: std::path::PathBuf,
    pub summary: std::path::PathBuf,
}

/// Runs the scenario and writes `trajectory.csv`, `energy.csv` and
/// `summary.json` into `dir`, keeping every `stride`-th time level. Floats
/// carry 17 significant digits.
pub fn write_outputs(scenario: &Scenario, dir: &Path, stride: usize) -> Result<(RunSummary, OutputFiles)> {
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    fs::create_dir_all(dir)?;
    let files = OutputFiles {
        trajectory: dir.join("trajectory.csv"),
        energy: dir.join("energy.csv"),
        summary: dir.join("summary.json"),
    };
    let mut traj = BufWriter::new(fs::File::create(&files.trajectory)?);
    let mut energy = BufWriter::new(fs::File::create(&files.energy)?);
    writeln!(traj, "{}", trajectory_header(scenario.mesh.n_nodes()))?;
    writeln!(energy, "{ENERGY_HEADER}")?;
    let mut line = String::new();
    let summary = scenario.simulate(|s| {
        if s.step % stride != 0 {
            return Ok(());
        }
        line.clear();
        write!(line, "{},{:.16e}", s.step, s.t).unwrap();
        for x in &s.q.0 {
            write!(line, ",{x:.16e}").unwrap();
        }
        let e = &s.energy;
        write!(
            line,
            ",{:.16e},{:.16e},{:.16e},{}",
            e.hamiltonian, e.kinetic, e.potential, s.iterations
        )
        .unwrap();
        writeln!(traj, "{line}")?;
        writeln!(
            energy,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            s.step, s.t, e.hamiltonian, e.kinetic, e.potential, s.iterations, s.constraint_violation
        )?;
        Ok(())
    })?;
    traj.flush()?;
    energy.flush()?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&files.summary, json + "\n")?;
    Ok((summary, files))
}
