//! Run orchestration and output files.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dynamo_core::diagnostics::{
    butterfly_header, butterfly_record, cell_centres, meridional_slice, write_butterfly_row, write_energy_row,
    write_slice, DiagnosticsRecord, ENERGY_HEADER,
};
use dynamo_core::snapshot::{read_snapshot, write_snapshot};
use dynamo_core::solenoidal::{project_field, SolenoidalState};
use dynamo_core::sph::build_grid;
use dynamo_core::stepper::{run, DiagnosticsSink, StepWorkspace};
use dynamo_core::DynamoError;
use log::info;
use thiserror::Error;

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.toml";
pub const ENERGY: &str = "energy.tsv";
pub const BUTTERFLY: &str = "butterfly.tsv";

pub fn slice_name(step: u64) -> String {
    format!("slice_{step}.tsv")
}

pub fn snapshot_name(step: u64) -> String {
    format!("snapshot_{step}.bin")
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Solver(#[from] DynamoError),
}

impl RunError {
    pub const EXIT_CONFIG: i32 = 3;
    pub const EXIT_IO: i32 = 4;
    pub const EXIT_DIVERGENCE: i32 = 5;
    pub const EXIT_OTHER: i32 = 1;

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => Self::EXIT_CONFIG,
            Self::Io { .. } => Self::EXIT_IO,
            Self::Solver(e) => match e {
                DynamoError::Divergence { .. } => Self::EXIT_DIVERGENCE,
                DynamoError::Io(_) | DynamoError::Format(_) | DynamoError::Checksum { .. } => Self::EXIT_IO,
                DynamoError::Config(_)
                | DynamoError::Resolution(_)
                | DynamoError::Argument(_)
                | DynamoError::SizeMismatch { .. } => Self::EXIT_CONFIG,
                _ => Self::EXIT_OTHER,
            },
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub first_step: u64,
    pub last_step: u64,
    pub last_record: Option<DiagnosticsRecord>,
}

/// Opens a table for appending, writing `header` when it is new or `fresh` is set.
fn open_table(path: &Path, header: &str, fresh: bool) -> Result<BufWriter<File>, RunError> {
    let exists = path.exists();
    let file = if fresh {
        File::create(path)
    } else {
        OpenOptions::new().append(true).create(true).open(path)
    }
    .map_err(io_at(path))?;
    let mut w = BufWriter::new(file);
    if fresh || !exists {
        writeln!(w, "{header}").map_err(io_at(path))?;
    }
    Ok(w)
}

struct Outputs<'a> {
    config: &'a RunConfig,
    workspace: &'a StepWorkspace,
    dir: PathBuf,
    energy: BufWriter<File>,
    butterfly: BufWriter<File>,
    last_step: u64,
    last_record: Option<DiagnosticsRecord>,
}

impl Outputs<'_> {
    fn write(&mut self, step: u64, state: &SolenoidalState) -> Result<(), RunError> {
        let out = &self.config.output;
        let due = |every: u64| step.is_multiple_of(every);
        if due(out.energy_every) {
            let rec = DiagnosticsRecord::compute(step, state, &self.workspace.transform)?;
            let path = self.dir.join(ENERGY);
            write_energy_row(&mut self.energy, &rec).map_err(io_at(&path))?;
            self.energy.flush().map_err(io_at(&path))?;
            info!(
                "step {step} t={:.6} energy={:.6e} div/max|B|={:.2e}",
                rec.time,
                rec.energy,
                rec.divergence_residual / rec.max_field.max(f64::MIN_POSITIVE)
            );
            self.last_record = Some(rec);
        }
        if due(out.butterfly_every) {
            let b = butterfly_record(state, self.config.geometry.tachocline, out.slice_phi, out.butterfly_points)?;
            let path = self.dir.join(BUTTERFLY);
            write_butterfly_row(&mut self.butterfly, step, state.time, &b).map_err(io_at(&path))?;
            self.butterfly.flush().map_err(io_at(&path))?;
        }
        if due(out.slice_every) {
            let [nr, nt] = out.slice_resolution;
            let slice = meridional_slice(state, out.slice_phi, nr, nt)?;
            let path = self.dir.join(slice_name(step));
            let mut w = BufWriter::new(File::create(&path).map_err(io_at(&path))?);
            write_slice(&mut w, &slice).map_err(io_at(&path))?;
            w.flush().map_err(io_at(&path))?;
        }
        if due(out.snapshot_every) || step == self.config.time.steps {
            write_snapshot(&self.dir.join(snapshot_name(step)), state, step)?;
        }
        self.last_step = step;
        Ok(())
    }
}

impl DiagnosticsSink for Outputs<'_> {
    fn record(&mut self, step: u64, state: &SolenoidalState) -> dynamo_core::Result<()> {
        self.write(step, state).map_err(|e| match e {
            RunError::Solver(e) => e,
            RunError::Io { source, .. } => DynamoError::Io(source),
            RunError::Config(m) => DynamoError::Config(m),
        })
    }
}

/// Writes the manifest and, unless `dry_run`, runs to `time.steps`, starting
/// from the snapshot `resume` when given.
pub fn execute(config: &RunConfig, resume: Option<&Path>, dry_run: bool) -> Result<RunSummary, RunError> {
    let dir = config.output.directory.clone();
    fs::create_dir_all(&dir).map_err(io_at(&dir))?;
    let physics = config.physics_config();
    physics.validate().map_err(|e| RunError::Config(e.to_string()))?;
    let res = &config.resolution;
    build_grid(res.n_theta, res.n_phi, res.max_degree).map_err(|e| RunError::Config(e.to_string()))?;
    let manifest = dir.join(MANIFEST);
    fs::write(&manifest, config.manifest()).map_err(io_at(&manifest))?;
    if dry_run {
        return Ok(RunSummary {
            first_step: 0,
            last_step: 0,
            last_record: None,
        });
    }

    let workspace = StepWorkspace::new(&physics)?;
    let (initial, start) = match resume {
        Some(path) => {
            let snap = read_snapshot(path, Some(res.max_degree))?;
            if snap.state.basis != workspace.basis {
                return Err(RunError::Config(format!(
                    "snapshot {} has N={} radii {:?}; configuration has N={} radii {:?}",
                    path.display(),
                    snap.state.basis.n,
                    snap.state.basis.radii,
                    workspace.basis.n,
                    workspace.basis.radii
                )));
            }
            if snap.step > config.time.steps {
                return Err(RunError::Config(format!(
                    "snapshot step {} is beyond time.steps = {}",
                    snap.step, config.time.steps
                )));
            }
            (snap.state, snap.step)
        }
        None => (
            project_field(config.initial_field(), &workspace.basis, &workspace.transform)?,
            0,
        ),
    };
    let fresh = resume.is_none();
    let thetas = cell_centres(std::f64::consts::PI, config.output.butterfly_points);
    let mut outputs = Outputs {
        config,
        workspace: &workspace,
        energy: open_table(&dir.join(ENERGY), ENERGY_HEADER, fresh)?,
        butterfly: open_table(&dir.join(BUTTERFLY), &butterfly_header(&thetas), fresh)?,
        dir,
        last_step: start,
        last_record: None,
    };
    info!(
        "running steps {}..={} (M={}, N={}, grid {}x{})",
        start + 1,
        config.time.steps,
        res.max_degree,
        res.radial_degree,
        res.n_theta,
        res.n_phi
    );
    run(&workspace, &initial, start, config.time.steps - start, &mut outputs)?;
    Ok(RunSummary {
        first_step: start,
        last_step: outputs.last_step,
        last_record: outputs.last_record,
    })
}
