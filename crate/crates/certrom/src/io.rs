//! Versioned on-disk formats: the spectral snapshot CSV, the reduced
//! model container with its human-readable manifest, and the CSV
//! emitters for ledgers, residual series, and parameter sweeps.
//!
//! Every float is written with the shortest digit string that parses
//! back to the same bits, so all text formats round-trip exactly and
//! emissions are deterministic byte for byte.

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::EnergyLedger;
use crate::estimate::ResidualSeries;
use crate::fsi::FsiRun;
use crate::rom::{Closure, ReducedForcing, ReducedOperators, RomBasis, RomError};
use crate::spectral::grid::wavenumber;
use crate::spectral::SpectralVelocity;

pub const SNAPSHOT_FORMAT: &str = "# certrom-spectral-velocity v1";
pub const ROM_CONTAINER_MAGIC: &[u8] = b"CERTROM-ROM1\n";
pub const ROM_MANIFEST_FORMAT: &str = "certrom-rom v1";
pub const LEDGER_FORMAT: &str = "# certrom-ledger v1";
pub const RESIDUAL_FORMAT: &str = "# certrom-residual v1";
pub const SWEEP_FORMAT: &str = "# certrom-sigma-sweep v1";
pub const FSI_LEDGER_FORMAT: &str = "# certrom-fsi-ledger v1";

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("container is not in the reduced-model format: {0}")]
    Container(String),
    #[error(transparent)]
    Rom(#[from] RomError),
}

fn format_fail(line: usize, message: impl Into<String>) -> IoFormatError {
    IoFormatError::Format {
        line,
        message: message.into(),
    }
}

/// A velocity snapshot with the scalars its header carries.
#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub field: SpectralVelocity,
    pub viscosity: f64,
    pub time: f64,
}

/// Writes one spectral snapshot: a version line, a scalar header, a
/// column header, then one row per Fourier mode in row-major index
/// order with integer wavenumbers.
pub fn snapshot_to_csv(field: &SpectralVelocity, viscosity: f64, time: f64) -> String {
    let n = field.modes_per_dim();
    let coeffs = field.raw();
    let mut text = String::new();
    text.push_str(SNAPSHOT_FORMAT);
    text.push('\n');
    text.push_str(&format!(
        "# modes_per_dim {n} viscosity {viscosity} time {time}\n"
    ));
    text.push_str("k1,k2,re_u1,im_u1,re_u2,im_u2\n");
    for i in 0..n {
        for j in 0..n {
            let k1 = wavenumber(n, i);
            let k2 = wavenumber(n, j);
            let u1 = coeffs[(0, i, j)];
            let u2 = coeffs[(1, i, j)];
            text.push_str(&format!(
                "{k1},{k2},{},{},{},{}\n",
                u1.re, u1.im, u2.re, u2.im
            ));
        }
    }
    text
}

fn index_of_wavenumber(n: usize, k: i64) -> Option<usize> {
    let half = (n as i64) / 2;
    if k >= 0 && k < half {
        Some(k as usize)
    } else if k >= -half && k < 0 {
        Some((k + n as i64) as usize)
    } else {
        None
    }
}

pub fn snapshot_from_csv(text: &str) -> Result<SnapshotRecord, IoFormatError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| format_fail(1, "empty input"))?;
    if first.trim() != SNAPSHOT_FORMAT {
        return Err(format_fail(1, format!("missing '{SNAPSHOT_FORMAT}' header")));
    }
    let (_, scalars) = lines
        .next()
        .ok_or_else(|| format_fail(2, "missing scalar header"))?;
    let parts: Vec<&str> = scalars.split_whitespace().collect();
    if parts.len() != 7
        || parts[0] != "#"
        || parts[1] != "modes_per_dim"
        || parts[3] != "viscosity"
        || parts[5] != "time"
    {
        return Err(format_fail(
            2,
            "scalar header must read '# modes_per_dim N viscosity NU time T'",
        ));
    }
    let n: usize = parts[2]
        .parse()
        .map_err(|_| format_fail(2, "modes_per_dim is not an integer"))?;
    let viscosity: f64 = parts[4]
        .parse()
        .map_err(|_| format_fail(2, "viscosity is not a number"))?;
    let time: f64 = parts[6]
        .parse()
        .map_err(|_| format_fail(2, "time is not a number"))?;
    if n == 0 || n % 2 != 0 {
        return Err(format_fail(2, "modes_per_dim must be even and positive"));
    }
    let (_, columns) = lines
        .next()
        .ok_or_else(|| format_fail(3, "missing column header"))?;
    if columns.trim() != "k1,k2,re_u1,im_u1,re_u2,im_u2" {
        return Err(format_fail(3, "unexpected column header"));
    }

    let mut coeffs = Array3::<Complex64>::zeros((2, n, n));
    let mut rows = 0usize;
    for (index, raw) in lines {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(format_fail(line_no, "row needs exactly 6 comma-separated fields"));
        }
        let k1: i64 = fields[0]
            .parse()
            .map_err(|_| format_fail(line_no, "k1 is not an integer"))?;
        let k2: i64 = fields[1]
            .parse()
            .map_err(|_| format_fail(line_no, "k2 is not an integer"))?;
        let i = index_of_wavenumber(n, k1)
            .ok_or_else(|| format_fail(line_no, "k1 outside the resolvable range"))?;
        let j = index_of_wavenumber(n, k2)
            .ok_or_else(|| format_fail(line_no, "k2 outside the resolvable range"))?;
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields[2..]) {
            *slot = field
                .parse()
                .map_err(|_| format_fail(line_no, "coefficient is not a number"))?;
        }
        coeffs[(0, i, j)] = Complex64::new(values[0], values[1]);
        coeffs[(1, i, j)] = Complex64::new(values[2], values[3]);
        rows += 1;
    }
    if rows != n * n {
        return Err(format_fail(
            0,
            format!("expected {} mode rows, found {rows}", n * n),
        ));
    }
    Ok(SnapshotRecord {
        field: SpectralVelocity::from_parts(n, coeffs),
        viscosity,
        time,
    })
}

#[derive(Serialize, Deserialize)]
struct FieldRecord {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl FieldRecord {
    fn from_field(field: &SpectralVelocity) -> Self {
        let coeffs = field.raw();
        FieldRecord {
            re: coeffs.iter().map(|z| z.re).collect(),
            im: coeffs.iter().map(|z| z.im).collect(),
        }
    }

    fn into_field(self, n: usize) -> Result<SpectralVelocity, IoFormatError> {
        let len = 2 * n * n;
        if self.re.len() != len || self.im.len() != len {
            return Err(IoFormatError::Container(format!(
                "mode record holds {} coefficients, grid needs {len}",
                self.re.len()
            )));
        }
        let values: Vec<Complex64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(re, im)| Complex64::new(*re, *im))
            .collect();
        let coeffs = Array3::from_shape_vec((2, n, n), values)
            .map_err(|e| IoFormatError::Container(e.to_string()))?;
        Ok(SpectralVelocity::from_parts(n, coeffs))
    }
}

#[derive(Serialize, Deserialize)]
enum ForcingRecord {
    Zero,
    Constant(Vec<f64>),
    Sampled {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
enum ClosureRecord {
    None,
    LinearDamping { alpha: f64 },
    EddyViscosity { coefficient: f64, regime_radius: f64 },
}

pub(crate) fn closure_json(closure: &Closure) -> serde_json::Value {
    match closure {
        Closure::None => serde_json::json!({ "kind": "none" }),
        Closure::LinearDamping { alpha } => {
            serde_json::json!({ "kind": "linear-damping", "alpha": alpha })
        }
        Closure::EddyViscosity {
            coefficient,
            regime_radius,
        } => serde_json::json!({
            "kind": "eddy-viscosity",
            "coefficient": coefficient,
            "regime_radius": regime_radius,
        }),
    }
}

impl From<&Closure> for ClosureRecord {
    fn from(closure: &Closure) -> Self {
        match closure {
            Closure::None => ClosureRecord::None,
            Closure::LinearDamping { alpha } => ClosureRecord::LinearDamping { alpha: *alpha },
            Closure::EddyViscosity {
                coefficient,
                regime_radius,
            } => ClosureRecord::EddyViscosity {
                coefficient: *coefficient,
                regime_radius: *regime_radius,
            },
        }
    }
}

impl From<ClosureRecord> for Closure {
    fn from(record: ClosureRecord) -> Self {
        match record {
            ClosureRecord::None => Closure::None,
            ClosureRecord::LinearDamping { alpha } => Closure::LinearDamping { alpha },
            ClosureRecord::EddyViscosity {
                coefficient,
                regime_radius,
            } => Closure::EddyViscosity {
                coefficient,
                regime_radius,
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RomContainer {
    format: String,
    modes_per_dim: usize,
    spectrum: Vec<f64>,
    tail_energy: f64,
    modes: Vec<FieldRecord>,
    viscosity: f64,
    dim: usize,
    stokes: Vec<f64>,
    convection: Vec<f64>,
    forcing: ForcingRecord,
    closure: ClosureRecord,
}

/// Serializes a basis and its reduced operators into the versioned
/// binary container.
pub fn rom_container_bytes(basis: &RomBasis, ops: &ReducedOperators) -> Vec<u8> {
    let forcing = match ops.forcing() {
        ReducedForcing::Zero => ForcingRecord::Zero,
        ReducedForcing::Constant(v) => ForcingRecord::Constant(v.iter().copied().collect()),
        ReducedForcing::Sampled { times, values } => ForcingRecord::Sampled {
            times: times.clone(),
            values: values.iter().map(|v| v.iter().copied().collect()).collect(),
        },
    };
    let container = RomContainer {
        format: ROM_MANIFEST_FORMAT.to_string(),
        modes_per_dim: basis.modes_per_dim(),
        spectrum: basis.spectrum().to_vec(),
        tail_energy: basis.tail_energy(),
        modes: basis.modes().iter().map(FieldRecord::from_field).collect(),
        viscosity: ops.viscosity(),
        dim: ops.dim(),
        stokes: ops.stokes().iter().copied().collect(),
        convection: ops.convection_raw().to_vec(),
        forcing,
        closure: ClosureRecord::from(ops.closure()),
    };
    let mut bytes = ROM_CONTAINER_MAGIC.to_vec();
    bytes.extend(bincode::serialize(&container).expect("container types serialize infallibly"));
    bytes
}

pub fn rom_from_container_bytes(
    bytes: &[u8],
) -> Result<(RomBasis, ReducedOperators), IoFormatError> {
    let payload = bytes
        .strip_prefix(ROM_CONTAINER_MAGIC)
        .ok_or_else(|| IoFormatError::Container("missing container magic".to_string()))?;
    let container: RomContainer = bincode::deserialize(payload)
        .map_err(|e| IoFormatError::Container(e.to_string()))?;
    if container.format != ROM_MANIFEST_FORMAT {
        return Err(IoFormatError::Container(format!(
            "unsupported container format '{}'",
            container.format
        )));
    }
    let n = container.modes_per_dim;
    let mut modes = Vec::with_capacity(container.modes.len());
    for record in container.modes {
        modes.push(record.into_field(n)?);
    }
    if container.spectrum.len() < modes.len() {
        return Err(IoFormatError::Container(
            "spectrum is shorter than the mode list".to_string(),
        ));
    }
    let basis = RomBasis::from_parts(modes, container.spectrum, container.tail_energy);
    if basis.dim() != container.dim {
        return Err(IoFormatError::Container(format!(
            "operators are {}-dimensional but the basis holds {} modes",
            container.dim,
            basis.dim()
        )));
    }
    let dim = container.dim;
    if container.stokes.len() != dim * dim {
        return Err(IoFormatError::Container(
            "dissipation matrix entry count does not match the dimension".to_string(),
        ));
    }
    let stokes = DMatrix::from_iterator(dim, dim, container.stokes.iter().copied());
    let forcing = match container.forcing {
        ForcingRecord::Zero => ReducedForcing::Zero,
        ForcingRecord::Constant(v) => {
            if v.len() != dim {
                return Err(IoFormatError::Container(
                    "constant forcing length does not match the dimension".to_string(),
                ));
            }
            ReducedForcing::Constant(DVector::from_vec(v))
        }
        ForcingRecord::Sampled { times, values } => {
            if times.len() != values.len() || values.iter().any(|v| v.len() != dim) {
                return Err(IoFormatError::Container(
                    "sampled forcing shape does not match the dimension".to_string(),
                ));
            }
            ReducedForcing::Sampled {
                times,
                values: values.into_iter().map(DVector::from_vec).collect(),
            }
        }
    };
    let ops = ReducedOperators::from_raw(
        container.viscosity,
        stokes,
        container.convection,
        forcing,
        container.closure.into(),
    )?;
    Ok((basis, ops))
}

#[derive(Serialize)]
struct RomManifest<'a> {
    format: &'static str,
    modes_per_dim: usize,
    dim: usize,
    viscosity: f64,
    spectrum: &'a [f64],
    tail_energy: f64,
    closure: serde_json::Value,
    forcing: &'static str,
    operator_digest: String,
}

/// Human-readable JSON companion of the binary container.
pub fn rom_manifest(basis: &RomBasis, ops: &ReducedOperators) -> String {
    let manifest = RomManifest {
        format: ROM_MANIFEST_FORMAT,
        modes_per_dim: basis.modes_per_dim(),
        dim: basis.dim(),
        viscosity: ops.viscosity(),
        spectrum: basis.spectrum(),
        tail_energy: basis.tail_energy(),
        closure: closure_json(ops.closure()),
        forcing: match ops.forcing() {
            ReducedForcing::Zero => "zero",
            ReducedForcing::Constant(_) => "constant",
            ReducedForcing::Sampled { .. } => "sampled",
        },
        operator_digest: ops.digest(),
    };
    let mut text =
        serde_json::to_string_pretty(&manifest).expect("manifest types serialize infallibly");
    text.push('\n');
    text
}

/// Energy ledger as CSV: one roll-up header with the cumulative bound,
/// then one row per step.
pub fn ledger_csv(ledger: &EnergyLedger) -> String {
    let mut text = String::new();
    text.push_str(LEDGER_FORMAT);
    text.push('\n');
    text.push_str(&format!(
        "# young_epsilon {} sup_state_sq {} dissipation_sum {} bound_lhs {} bound_rhs {} bound_certified {}\n",
        ledger.young_epsilon,
        ledger.sup_state_sq,
        ledger.dissipation_sum,
        ledger.bound_lhs,
        ledger.bound_rhs,
        ledger.bound_certified
    ));
    text.push_str(
        "step,time,energy_before,energy_after,viscous_dissipation,closure_dissipation,forcing_work,inequality_slack,young_lhs,young_rhs,skew_defect_obs,diss_defect_obs,solver_iters,certified\n",
    );
    for e in &ledger.entries {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            e.step,
            e.time,
            e.energy_before,
            e.energy_after,
            e.viscous_dissipation,
            e.closure_dissipation,
            e.forcing_work,
            e.inequality_slack,
            e.young_lhs,
            e.young_rhs,
            e.skew_defect_obs,
            e.diss_defect_obs,
            e.solver_iters,
            e.certified
        ));
    }
    text
}

/// Residual series as CSV with its quadrature metadata.
pub fn residual_csv(series: &ResidualSeries) -> String {
    let mut text = String::new();
    text.push_str(RESIDUAL_FORMAT);
    text.push('\n');
    text.push_str(&format!(
        "# dt {} horizon {} rule {} riesz_solver_tol {} operator_digest {}\n",
        series.dt, series.horizon, series.rule, series.riesz_solver_tol, series.operator_digest
    ));
    text.push_str("time,dual_norm,quadrature_weight\n");
    let weights = series.quadrature_weights();
    for ((time, norm), weight) in series.times.iter().zip(&series.dual_norms).zip(&weights) {
        text.push_str(&format!("{time},{norm},{weight}\n"));
    }
    text
}

/// Resolvent sweep as CSV.
pub fn sigma_sweep_csv(sweep: &[(f64, f64)]) -> String {
    let mut text = String::new();
    text.push_str(SWEEP_FORMAT);
    text.push('\n');
    text.push_str("sigma,resolvent_norm\n");
    for (sigma, norm) in sweep {
        text.push_str(&format!("{sigma},{norm}\n"));
    }
    text
}

/// Coupled testbed ledger as CSV with the initial energy split in the
/// header.
pub fn fsi_ledger_csv(run: &FsiRun) -> String {
    let mut text = String::new();
    text.push_str(FSI_LEDGER_FORMAT);
    text.push('\n');
    text.push_str(&format!(
        "# ledger_tol {} initial_fluid_kinetic {} initial_structure_kinetic {} initial_elastic {} initial_interface_reservoir {}\n",
        run.ledger_tol,
        run.initial_energy.fluid_kinetic,
        run.initial_energy.structure_kinetic,
        run.initial_energy.elastic,
        run.initial_energy.interface_reservoir
    ));
    text.push_str(
        "step,fluid_kinetic,structure_kinetic,elastic,interface_reservoir,viscous_dissipation,fluid_mismatch_penalty,structure_mismatch_penalty,forcing_work,inequality_slack\n",
    );
    for e in &run.ledger {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            e.step,
            e.energy.fluid_kinetic,
            e.energy.structure_kinetic,
            e.energy.elastic,
            e.energy.interface_reservoir,
            e.viscous_dissipation,
            e.fluid_mismatch_penalty,
            e.structure_mismatch_penalty,
            e.forcing_work,
            e.inequality_slack
        ));
    }
    text
}
