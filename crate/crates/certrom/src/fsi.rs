//! Computable stability margins for partitioned fluid-structure
//! coupling: the added-mass coefficient, the time-step and Robin
//! parameter margins, the convection smallness regime check, and a
//! one-dimensional linear Robin-Robin testbed whose per-step energy
//! ledger certifies the coupled inequality with every constant
//! recorded.
//!
//! The testbed fluid is a linear diffusion surrogate on the unit
//! interval (viscous term only), coupled at one point to a linear
//! elastic rod on the neighbouring interval; the coupling mechanism
//! under study (viscous coercivity, Robin penalties, added-mass
//! remainder) is unchanged by dropping convection, and every report
//! emitted from the testbed states that restriction.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FsiError {
    #[error("{which} matrix deviates from symmetry by {defect:.3e}")]
    AsymmetricMatrix { which: &'static str, defect: f64 },
    #[error("mass matrix is not positive definite")]
    IndefiniteMass,
    #[error("stiffness is {stiffness}x{stiffness} but mass is {mass}x{mass}")]
    DimensionMismatch { stiffness: usize, mass: usize },
    #[error("matrices must be square and non-empty")]
    EmptyMatrix,
    #[error("parameter {name} is out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("state vector {name} has length {got}, testbed needs {expected}")]
    StateSizeMismatch {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("triplet text line {line}: {message}")]
    TripletParse { line: usize, message: String },
    #[error("linear solve failed at step {step}")]
    SolveFailure { step: usize },
}

/// Symmetric structure stiffness and positive-definite mass pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrices {
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
}

fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let mut defect = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            defect = defect.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    defect
}

impl StructureMatrices {
    pub fn new(stiffness: DMatrix<f64>, mass: DMatrix<f64>) -> Result<Self, FsiError> {
        if stiffness.nrows() == 0 || stiffness.nrows() != stiffness.ncols()
            || mass.nrows() != mass.ncols()
        {
            return Err(FsiError::EmptyMatrix);
        }
        if stiffness.nrows() != mass.nrows() {
            return Err(FsiError::DimensionMismatch {
                stiffness: stiffness.nrows(),
                mass: mass.nrows(),
            });
        }
        let scale_k = stiffness.amax().max(1.0);
        let defect_k = symmetry_defect(&stiffness);
        if defect_k > 1e-12 * scale_k {
            return Err(FsiError::AsymmetricMatrix {
                which: "stiffness",
                defect: defect_k,
            });
        }
        let scale_m = mass.amax().max(1.0);
        let defect_m = symmetry_defect(&mass);
        if defect_m > 1e-12 * scale_m {
            return Err(FsiError::AsymmetricMatrix {
                which: "mass",
                defect: defect_m,
            });
        }
        Ok(StructureMatrices { stiffness, mass })
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    /// Serializes both matrices as plain-text sparse triplets under a
    /// versioned manifest. Values use the shortest digit strings that
    /// round-trip, so parsing recovers the exact bits.
    pub fn to_triplet_text(&self) -> String {
        let mut entries: Vec<(&str, &DMatrix<f64>)> =
            vec![("stiffness", &self.stiffness), ("mass", &self.mass)];
        let mut text = String::from("# certrom-triplet v1\n");
        let counts: Vec<usize> = entries
            .iter()
            .map(|(_, m)| m.iter().filter(|v| **v != 0.0).count())
            .collect();
        for ((name, matrix), count) in entries.iter().zip(&counts) {
            text.push_str(&format!(
                "# matrix {} rows {} cols {} entries {}\n",
                name,
                matrix.nrows(),
                matrix.ncols(),
                count
            ));
        }
        for (name, matrix) in entries.drain(..) {
            for j in 0..matrix.ncols() {
                for i in 0..matrix.nrows() {
                    let value = matrix[(i, j)];
                    if value != 0.0 {
                        text.push_str(&format!("{name} {i} {j} {value}\n"));
                    }
                }
            }
        }
        text
    }

    pub fn from_triplet_text(text: &str) -> Result<Self, FsiError> {
        let parse_fail = |line: usize, message: &str| FsiError::TripletParse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_fail(1, "empty input"))?;
        if header.trim() != "# certrom-triplet v1" {
            return Err(parse_fail(1, "missing '# certrom-triplet v1' header"));
        }
        let mut dims: std::collections::HashMap<String, (usize, usize, usize)> =
            std::collections::HashMap::new();
        let mut data: std::collections::HashMap<String, DMatrix<f64>> =
            std::collections::HashMap::new();
        let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
        for (index, raw) in lines {
            let line_no = index + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# matrix ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 7 || parts[1] != "rows" || parts[3] != "cols" || parts[5] != "entries"
                {
                    return Err(parse_fail(
                        line_no,
                        "manifest line must read '# matrix NAME rows R cols C entries M'",
                    ));
                }
                let rows: usize = parts[2]
                    .parse()
                    .map_err(|_| parse_fail(line_no, "row count is not an integer"))?;
                let cols: usize = parts[4]
                    .parse()
                    .map_err(|_| parse_fail(line_no, "column count is not an integer"))?;
                let entries: usize = parts[6]
                    .parse()
                    .map_err(|_| parse_fail(line_no, "entry count is not an integer"))?;
                dims.insert(parts[0].to_string(), (rows, cols, entries));
                data.insert(parts[0].to_string(), DMatrix::zeros(rows, cols));
                seen.insert(parts[0].to_string(), 0);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(parse_fail(line_no, "data line must read 'NAME ROW COL VALUE'"));
            }
            let name = parts[0];
            let matrix = data
                .get_mut(name)
                .ok_or_else(|| parse_fail(line_no, "matrix name missing from the manifest"))?;
            let row: usize = parts[1]
                .parse()
                .map_err(|_| parse_fail(line_no, "row index is not an integer"))?;
            let col: usize = parts[2]
                .parse()
                .map_err(|_| parse_fail(line_no, "column index is not an integer"))?;
            let value: f64 = parts[3]
                .parse()
                .map_err(|_| parse_fail(line_no, "value is not a number"))?;
            if row >= matrix.nrows() || col >= matrix.ncols() {
                return Err(parse_fail(line_no, "index outside the declared shape"));
            }
            matrix[(row, col)] = value;
            *seen.get_mut(name).unwrap() += 1;
        }
        for (name, (_, _, declared)) in &dims {
            let got = seen.get(name).copied().unwrap_or(0);
            if got != *declared {
                return Err(FsiError::TripletParse {
                    line: 0,
                    message: format!(
                        "matrix {name} declares {declared} entries but {got} were read"
                    ),
                });
            }
        }
        let stiffness = data
            .remove("stiffness")
            .ok_or_else(|| parse_fail(0, "manifest lacks a 'stiffness' matrix"))?;
        let mass = data
            .remove("mass")
            .ok_or_else(|| parse_fail(0, "manifest lacks a 'mass' matrix"))?;
        StructureMatrices::new(stiffness, mass)
    }
}

/// Largest generalized eigenvalue of the stiffness against the mass,
/// computed by Cholesky reduction to a symmetric standard problem.
pub fn lambda_h(m: &StructureMatrices) -> Result<f64, FsiError> {
    let chol = Cholesky::new(m.mass.clone()).ok_or(FsiError::IndefiniteMass)?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&m.stiffness)
        .ok_or(FsiError::IndefiniteMass)?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(FsiError::IndefiniteMass)?;
    let symmetrized = 0.5 * (&z + z.transpose());
    let eigen = symmetrized.symmetric_eigen();
    Ok(eigen.eigenvalues.max())
}

/// Validated parameter block of the coupled margin computation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FsiParams {
    pub rho_f: f64,
    pub rho_s: f64,
    pub nu: f64,
    pub c_tr_h: f64,
    pub lambda_h: f64,
    pub alpha: f64,
    pub dt: f64,
    pub c_coercivity: f64,
    pub kappa: f64,
}

impl FsiParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rho_f: f64,
        rho_s: f64,
        nu: f64,
        c_tr_h: f64,
        lambda_h: f64,
        alpha: f64,
        dt: f64,
        c_coercivity: f64,
        kappa: f64,
    ) -> Result<Self, FsiError> {
        let positive = [
            ("rho_f", rho_f),
            ("rho_s", rho_s),
            ("nu", nu),
            ("c_tr_h", c_tr_h),
            ("alpha", alpha),
            ("dt", dt),
            ("c_coercivity", c_coercivity),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(FsiError::InvalidParameter { name, value });
            }
        }
        if !lambda_h.is_finite() || lambda_h < 0.0 {
            return Err(FsiError::InvalidParameter {
                name: "lambda_h",
                value: lambda_h,
            });
        }
        if !kappa.is_finite() || kappa <= 0.0 || kappa >= 1.0 {
            return Err(FsiError::InvalidParameter {
                name: "kappa",
                value: kappa,
            });
        }
        Ok(FsiParams {
            rho_f,
            rho_s,
            nu,
            c_tr_h,
            lambda_h,
            alpha,
            dt,
            c_coercivity,
            kappa,
        })
    }
}

/// Added-mass coefficient `(rho_f / rho_s) C_tr^2 Lambda_h`.
pub fn added_mass_coefficient(p: &FsiParams) -> f64 {
    (p.rho_f / p.rho_s) * p.c_tr_h * p.c_tr_h * p.lambda_h
}

/// Largest stable time step for a fixed Robin parameter:
/// `alpha / (2 C_am alpha + 1)`.
pub fn dt_margin(alpha: f64, c_am: f64) -> f64 {
    alpha / (2.0 * c_am * alpha + 1.0)
}

/// Smallest sufficient Robin parameter for a fixed time step:
/// `(sqrt(1 + 8 C_am dt) - 1) / (2 dt)`.
pub fn alpha_margin(dt: f64, c_am: f64) -> f64 {
    ((1.0 + 8.0 * c_am * dt).sqrt() - 1.0) / (2.0 * dt)
}

/// Convection smallness check
/// `rho_f * sup_l2 * l2_grad <= kappa * nu` (non-strict).
pub fn regime_check(p: &FsiParams, sup_l2: f64, l2_grad: f64) -> bool {
    p.rho_f * sup_l2 * l2_grad <= p.kappa * p.nu
}

/// Margin verdict with the constants needed to recompute it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginReport {
    pub c_am: f64,
    pub dt_max: f64,
    pub alpha_min: f64,
    pub margin_ok: bool,
    pub regime_ok: bool,
    pub rho_f: f64,
    pub rho_s: f64,
    pub c_tr_h: f64,
    pub lambda_h: f64,
    pub alpha: f64,
    pub dt: f64,
}

/// Evaluates both margins at the supplied parameters; `flow_norms` is
/// the pair (sup-in-time L2 norm, L2-in-time gradient norm) of the
/// fluid velocity, supplied or measured from a run.
pub fn margin_report(p: &FsiParams, flow_norms: (f64, f64)) -> MarginReport {
    let c_am = added_mass_coefficient(p);
    let dt_max = dt_margin(p.alpha, c_am);
    let alpha_min = alpha_margin(p.dt, c_am);
    MarginReport {
        c_am,
        dt_max,
        alpha_min,
        margin_ok: p.dt <= dt_max,
        regime_ok: regime_check(p, flow_norms.0, flow_norms.1),
        rho_f: p.rho_f,
        rho_s: p.rho_s,
        c_tr_h: p.c_tr_h,
        lambda_h: p.lambda_h,
        alpha: p.alpha,
        dt: p.dt,
    }
}

/// Mesh of the one-dimensional coupled testbed: piecewise-linear
/// elements on the fluid interval (0,1) and the structure interval
/// (1,2), interface at x = 1, outer ends clamped.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TestbedConfig {
    pub fluid_cells: usize,
    pub structure_cells: usize,
    pub elastic_modulus: f64,
}

impl TestbedConfig {
    pub fn new(
        fluid_cells: usize,
        structure_cells: usize,
        elastic_modulus: f64,
    ) -> Result<Self, FsiError> {
        if fluid_cells < 2 {
            return Err(FsiError::InvalidParameter {
                name: "fluid_cells",
                value: fluid_cells as f64,
            });
        }
        if structure_cells < 2 {
            return Err(FsiError::InvalidParameter {
                name: "structure_cells",
                value: structure_cells as f64,
            });
        }
        if !elastic_modulus.is_finite() || elastic_modulus <= 0.0 {
            return Err(FsiError::InvalidParameter {
                name: "elastic_modulus",
                value: elastic_modulus,
            });
        }
        Ok(TestbedConfig {
            fluid_cells,
            structure_cells,
            elastic_modulus,
        })
    }
}

fn p1_matrices(cells: usize, length: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = cells + 1;
    let h = length / cells as f64;
    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    for e in 0..cells {
        for (a, b, m_ab, k_ab) in [
            (e, e, 2.0 * h / 6.0, 1.0 / h),
            (e, e + 1, h / 6.0, -1.0 / h),
            (e + 1, e, h / 6.0, -1.0 / h),
            (e + 1, e + 1, 2.0 * h / 6.0, 1.0 / h),
        ] {
            mass[(a, b)] += m_ab;
            stiffness[(a, b)] += k_ab;
        }
    }
    (mass, stiffness)
}

fn drop_row_col(m: &DMatrix<f64>, index: usize) -> DMatrix<f64> {
    m.clone().remove_row(index).remove_column(index)
}

/// Assembled testbed operators plus the constants measured from them.
#[derive(Debug, Clone)]
pub struct Testbed {
    config: TestbedConfig,
    fluid_mass: DMatrix<f64>,
    fluid_stiffness: DMatrix<f64>,
    structure: StructureMatrices,
    /// Index of the interface node in the fluid DOF vector.
    fluid_interface: usize,
    /// Index of the interface node in the structure DOF vector.
    structure_interface: usize,
    c_tr_h: f64,
    lambda_h: f64,
}

fn trace_constant_sq(
    mass: &DMatrix<f64>,
    unit_stiffness: &DMatrix<f64>,
    interface: usize,
) -> Result<f64, FsiError> {
    let h1 = mass + unit_stiffness;
    let chol = Cholesky::new(h1).ok_or(FsiError::IndefiniteMass)?;
    let mut e = DVector::zeros(mass.nrows());
    e[interface] = 1.0;
    let solved = chol.solve(&e);
    Ok(e.dot(&solved))
}

impl Testbed {
    /// Assembles the element matrices, eliminates the clamped outer
    /// nodes, and measures the discrete trace constant (the exact
    /// extremal constant of the trace inequality on the element space)
    /// and the stiffness-to-mass eigenvalue ratio.
    pub fn assemble(config: TestbedConfig) -> Result<Self, FsiError> {
        let (full_mf, full_kf) = p1_matrices(config.fluid_cells, 1.0);
        let fluid_mass = drop_row_col(&full_mf, 0);
        let fluid_stiffness = drop_row_col(&full_kf, 0);
        let fluid_interface = fluid_mass.nrows() - 1;

        let (full_ms, full_ks_unit) = p1_matrices(config.structure_cells, 1.0);
        let last = full_ms.nrows() - 1;
        let structure_mass = drop_row_col(&full_ms, last);
        let structure_unit_stiffness = drop_row_col(&full_ks_unit, last);
        let structure_interface = 0;
        let structure_stiffness = config.elastic_modulus * &structure_unit_stiffness;
        let structure = StructureMatrices::new(structure_stiffness, structure_mass.clone())?;

        let fluid_trace_sq = trace_constant_sq(&fluid_mass, &fluid_stiffness, fluid_interface)?;
        let structure_trace_sq = trace_constant_sq(
            &structure_mass,
            &structure_unit_stiffness,
            structure_interface,
        )?;
        let c_tr_h = fluid_trace_sq.max(structure_trace_sq).sqrt();
        let lambda = lambda_h(&structure)?;

        Ok(Testbed {
            config,
            fluid_mass,
            fluid_stiffness,
            structure,
            fluid_interface,
            structure_interface,
            c_tr_h,
            lambda_h: lambda,
        })
    }

    pub fn config(&self) -> &TestbedConfig {
        &self.config
    }

    pub fn fluid_dofs(&self) -> usize {
        self.fluid_mass.nrows()
    }

    pub fn structure_dofs(&self) -> usize {
        self.structure.dim()
    }

    pub fn structure_matrices(&self) -> &StructureMatrices {
        &self.structure
    }

    pub fn fluid_mass(&self) -> &DMatrix<f64> {
        &self.fluid_mass
    }

    pub fn fluid_stiffness(&self) -> &DMatrix<f64> {
        &self.fluid_stiffness
    }

    pub fn fluid_interface(&self) -> usize {
        self.fluid_interface
    }

    pub fn structure_interface(&self) -> usize {
        self.structure_interface
    }

    /// Exact extremal discrete trace constant over both subdomains.
    pub fn trace_constant(&self) -> f64 {
        self.c_tr_h
    }

    /// Largest generalized stiffness-to-mass eigenvalue.
    pub fn stiffness_ratio(&self) -> f64 {
        self.lambda_h
    }

    /// Fills the margin parameter block with the constants measured
    /// from this mesh.
    pub fn params(
        &self,
        rho_f: f64,
        rho_s: f64,
        nu: f64,
        alpha: f64,
        dt: f64,
        kappa: f64,
    ) -> Result<FsiParams, FsiError> {
        FsiParams::new(
            rho_f,
            rho_s,
            nu,
            self.c_tr_h,
            self.lambda_h,
            alpha,
            dt,
            self.config.elastic_modulus,
            kappa,
        )
    }

    pub fn zero_state(&self) -> TestbedState {
        TestbedState {
            fluid: DVector::zeros(self.fluid_dofs()),
            displacement: DVector::zeros(self.structure_dofs()),
            velocity: DVector::zeros(self.structure_dofs()),
        }
    }

    /// Random nodal values in [-amplitude, amplitude] for every field.
    pub fn random_state<R: Rng>(&self, amplitude: f64, rng: &mut R) -> TestbedState {
        let draw = |len: usize, rng: &mut R| {
            DVector::from_fn(len, |_, _| rng.random_range(-amplitude..amplitude))
        };
        TestbedState {
            fluid: draw(self.fluid_dofs(), rng),
            displacement: draw(self.structure_dofs(), rng),
            velocity: draw(self.structure_dofs(), rng),
        }
    }
}

/// Nodal unknowns of the coupled testbed at one time level.
#[derive(Debug, Clone)]
pub struct TestbedState {
    pub fluid: DVector<f64>,
    pub displacement: DVector<f64>,
    pub velocity: DVector<f64>,
}

/// Constant-in-time nodal load vectors.
#[derive(Debug, Clone)]
pub struct TestbedForcing {
    pub fluid: DVector<f64>,
    pub structure: DVector<f64>,
}

/// Coupled energy split into its defining summands.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub fluid_kinetic: f64,
    pub structure_kinetic: f64,
    pub elastic: f64,
    /// Robin interface reservoir `alpha dt / 2` times the squared
    /// structure interface velocity; the telescoped part of the
    /// per-step identity.
    pub interface_reservoir: f64,
}

impl EnergyBreakdown {
    /// Coupled energy without the interface reservoir.
    pub fn coupled(&self) -> f64 {
        self.fluid_kinetic + self.structure_kinetic + self.elastic
    }

    /// Augmented energy the per-step identity telescopes.
    pub fn total(&self) -> f64 {
        self.coupled() + self.interface_reservoir
    }
}

/// One step of the coupled ledger: the energy split after the step,
/// the dissipation and penalty terms, the forcing work, and the slack
/// of the energy inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupledLedgerEntry {
    pub step: usize,
    pub energy: EnergyBreakdown,
    pub viscous_dissipation: f64,
    pub fluid_mismatch_penalty: f64,
    pub structure_mismatch_penalty: f64,
    pub forcing_work: f64,
    pub inequality_slack: f64,
}

/// Output of a partitioned testbed run.
#[derive(Debug, Clone)]
pub struct FsiRun {
    pub times: Vec<f64>,
    pub states: Vec<TestbedState>,
    pub initial_energy: EnergyBreakdown,
    pub ledger: Vec<CoupledLedgerEntry>,
    pub margin: MarginReport,
    /// `1e-10` relative to the initial coupled energy; all solves are
    /// direct, so roundoff is the only slack source.
    pub ledger_tol: f64,
    /// Steps at which the non-augmented coupled energy grew by more
    /// than the ledger tolerance; informational only, the certified
    /// statement is the per-step slack.
    pub energy_growth_steps: Vec<usize>,
    pub failure: Option<String>,
}

impl FsiRun {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn ledger_certified(&self) -> bool {
        self.ledger
            .iter()
            .all(|entry| entry.inequality_slack >= -self.ledger_tol)
    }
}

fn quadratic(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}

fn energy_breakdown(
    testbed: &Testbed,
    params: &FsiParams,
    state: &TestbedState,
) -> EnergyBreakdown {
    let gamma = state.velocity[testbed.structure_interface];
    EnergyBreakdown {
        fluid_kinetic: 0.5 * params.rho_f * quadratic(&testbed.fluid_mass, &state.fluid),
        structure_kinetic: 0.5
            * params.rho_s
            * quadratic(testbed.structure.mass(), &state.velocity),
        elastic: 0.5 * quadratic(testbed.structure.stiffness(), &state.displacement),
        interface_reservoir: 0.5 * params.alpha * params.dt * gamma * gamma,
    }
}

/// Marches the partitioned Robin-Robin scheme: a backward Euler fluid
/// step with the Robin datum taken from the previous structure
/// velocity, then an implicit structure step with the Robin datum
/// taken from the new fluid trace. Each step books the coupled energy
/// identity; the slack collects the scheme's positive squares and is
/// certified against the ledger tolerance.
pub fn robin_partitioned_run(
    testbed: &Testbed,
    params: &FsiParams,
    initial: &TestbedState,
    forcing: Option<&TestbedForcing>,
    steps: usize,
) -> Result<FsiRun, FsiError> {
    if initial.fluid.len() != testbed.fluid_dofs() {
        return Err(FsiError::StateSizeMismatch {
            name: "fluid",
            got: initial.fluid.len(),
            expected: testbed.fluid_dofs(),
        });
    }
    for (name, v) in [
        ("displacement", &initial.displacement),
        ("velocity", &initial.velocity),
    ] {
        if v.len() != testbed.structure_dofs() {
            return Err(FsiError::StateSizeMismatch {
                name,
                got: v.len(),
                expected: testbed.structure_dofs(),
            });
        }
    }
    if let Some(f) = forcing {
        if f.fluid.len() != testbed.fluid_dofs() {
            return Err(FsiError::StateSizeMismatch {
                name: "fluid forcing",
                got: f.fluid.len(),
                expected: testbed.fluid_dofs(),
            });
        }
        if f.structure.len() != testbed.structure_dofs() {
            return Err(FsiError::StateSizeMismatch {
                name: "structure forcing",
                got: f.structure.len(),
                expected: testbed.structure_dofs(),
            });
        }
    }

    let dt = params.dt;
    let alpha = params.alpha;
    let i_f = testbed.fluid_interface;
    let i_s = testbed.structure_interface;

    let mut fluid_system =
        (params.rho_f / dt) * &testbed.fluid_mass + params.nu * &testbed.fluid_stiffness;
    fluid_system[(i_f, i_f)] += alpha;
    let fluid_solver = Cholesky::new(fluid_system).ok_or(FsiError::SolveFailure { step: 0 })?;

    let mut structure_system =
        (params.rho_s / dt) * testbed.structure.mass() + dt * testbed.structure.stiffness();
    structure_system[(i_s, i_s)] += alpha;
    let structure_solver =
        Cholesky::new(structure_system).ok_or(FsiError::SolveFailure { step: 0 })?;

    let initial_energy = energy_breakdown(testbed, params, initial);
    let ledger_tol = 1e-10 * initial_energy.coupled().max(1e-300);

    let mut times = vec![0.0];
    let mut states = vec![initial.clone()];
    let mut ledger = Vec::with_capacity(steps);
    let mut energy_growth_steps = Vec::new();
    let mut previous_energy = initial_energy;

    for k in 0..steps {
        let state = states[k].clone();

        let mut fluid_rhs = (params.rho_f / dt) * (&testbed.fluid_mass * &state.fluid);
        fluid_rhs[i_f] += alpha * state.velocity[i_s];
        if let Some(f) = forcing {
            fluid_rhs += &f.fluid;
        }
        let new_fluid = fluid_solver.solve(&fluid_rhs);

        let fluid_trace = new_fluid[i_f];
        let mut structure_rhs = (params.rho_s / dt) * (testbed.structure.mass() * &state.velocity)
            - testbed.structure.stiffness() * &state.displacement;
        structure_rhs[i_s] += alpha * fluid_trace;
        if let Some(f) = forcing {
            structure_rhs += &f.structure;
        }
        let new_velocity = structure_solver.solve(&structure_rhs);
        let new_displacement = &state.displacement + dt * &new_velocity;

        let next = TestbedState {
            fluid: new_fluid,
            displacement: new_displacement,
            velocity: new_velocity,
        };

        let energy = energy_breakdown(testbed, params, &next);
        let viscous_dissipation =
            params.nu * dt * quadratic(&testbed.fluid_stiffness, &next.fluid);
        let fluid_mismatch = next.fluid[i_f] - state.velocity[i_s];
        let structure_mismatch = next.velocity[i_s] - next.fluid[i_f];
        let fluid_mismatch_penalty = 0.5 * alpha * dt * fluid_mismatch * fluid_mismatch;
        let structure_mismatch_penalty =
            0.5 * alpha * dt * structure_mismatch * structure_mismatch;
        let forcing_work = match forcing {
            Some(f) => dt * (f.fluid.dot(&next.fluid) + f.structure.dot(&next.velocity)),
            None => 0.0,
        };
        let inequality_slack = forcing_work + previous_energy.total() - energy.total()
            - viscous_dissipation
            - fluid_mismatch_penalty
            - structure_mismatch_penalty;

        if energy.coupled() > previous_energy.coupled() + ledger_tol {
            energy_growth_steps.push(k);
        }

        ledger.push(CoupledLedgerEntry {
            step: k,
            energy,
            viscous_dissipation,
            fluid_mismatch_penalty,
            structure_mismatch_penalty,
            forcing_work,
            inequality_slack,
        });
        times.push((k + 1) as f64 * dt);
        states.push(next);
        previous_energy = energy;
    }

    let sup_l2 = states
        .iter()
        .map(|s| quadratic(&testbed.fluid_mass, &s.fluid).max(0.0).sqrt())
        .fold(0.0f64, f64::max);
    let l2_grad = states
        .iter()
        .skip(1)
        .map(|s| dt * quadratic(&testbed.fluid_stiffness, &s.fluid))
        .sum::<f64>()
        .sqrt();
    let margin = margin_report(params, (sup_l2, l2_grad));

    Ok(FsiRun {
        times,
        states,
        initial_energy,
        ledger,
        margin,
        ledger_tol,
        energy_growth_steps,
        failure: None,
    })
}
