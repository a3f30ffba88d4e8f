//! Library side of the `locc-cert` command: file formats, report rendering
//! and the command bodies. `main.rs` only parses arguments and maps the
//! returned [`Output`] to stdout and an exit code.

pub mod format;
pub mod report;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use locc_cert_core::bounds::{certify, density_profile, pin_ordering};
use locc_cert_core::generators::{
    density_family_truncation, domino, rotated_domino, tight_protocol, tight_protocol_with_omissions,
};
use locc_cert_core::tree::audit;
use locc_cert_core::{Conclusion, Error, Mode, SeparableMeasurement, Tolerances};

use format::{FileMode, MeasurementFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATED: i32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError(pub String);

impl CliError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

/// What a command printed, and the exit code it asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::new(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::new(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances, CliError> {
    match tol {
        None => Ok(Tolerances::default()),
        Some(t) if t.is_finite() && t > 0.0 => Ok(Tolerances::uniform(t)),
        Some(t) => Err(CliError::new(format!("--tol must be a positive number, got {t}"))),
    }
}

fn render(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("JSON rendering");
    s.push('\n');
    s
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    pub backend: Option<FileMode>,
    pub tol: Option<f64>,
    pub dedupe: bool,
    pub party: Option<usize>,
    pub format: OutputFormat,
}

/// Loads a measurement file, honouring the backend, tolerance and dedupe
/// options. Returns the measurement and any merge warnings.
pub fn load_measurement(
    text: &str,
    backend: Option<FileMode>,
    tol: Option<f64>,
    dedupe: bool,
) -> Result<(SeparableMeasurement, Vec<String>), CliError> {
    let tol = tolerances(tol)?;
    let file = format::parse_measurement_file(text)?;
    let mut elements = format::elements_of(&file, &tol)?;
    match (file.mode, backend.unwrap_or(file.mode)) {
        (FileMode::Float, FileMode::Exact) => {
            return Err(CliError::new(
                "the exact backend needs an exact-mode file; float entries cannot be certified exactly",
            ))
        }
        (FileMode::Exact, FileMode::Float) => {
            elements = elements.iter().map(|el| el.to_float()).collect();
        }
        _ => {}
    }
    if dedupe {
        Ok(SeparableMeasurement::new_merging_duplicates(file.dims, elements, tol)?)
    } else {
        match SeparableMeasurement::new(file.dims, elements, tol) {
            Ok(m) => Ok((m, Vec::new())),
            Err(Error::DuplicateElements { pairs }) => Err(CliError::new(format!(
                "duplicate POVM elements at index pairs {pairs:?}; pass --dedupe to merge them"
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

pub fn cmd_check(path: &Path, opts: &CheckOptions) -> Result<Output, CliError> {
    let (m, warnings) = load_measurement(&read(path)?, opts.backend, opts.tol, opts.dedupe)?;
    if let Some(a) = opts.party.filter(|&a| a >= m.party_count()) {
        return Err(CliError::new(format!(
            "--party {a} is out of range for {} parties",
            m.party_count()
        )));
    }
    let c = certify(&m)?;
    let text = match opts.format {
        OutputFormat::Json => render(report::certificate_json(&c, opts.party, &warnings)),
        OutputFormat::Text => report::certificate_text(&c, opts.party, &warnings),
    };
    let code = match c.conclusion {
        Conclusion::NotFiniteRoundLocc => EXIT_VIOLATED,
        Conclusion::Inconclusive => EXIT_OK,
    };
    Ok(Output { text, code })
}

/// The audit always exits 0 once a report exists; `passed` carries the
/// outcome.
pub fn cmd_tree_audit(
    tree_path: &Path,
    measurement_path: &Path,
    tol: Option<f64>,
    format: OutputFormat,
) -> Result<Output, CliError> {
    let (m, _) = load_measurement(&read(measurement_path)?, None, tol, false)?;
    let tree_file = format::parse_tree_file(&read(tree_path)?)?;
    if tree_file.dims != m.dims() {
        return Err(CliError::new(format!(
            "tree dims {:?} differ from measurement dims {:?}",
            tree_file.dims,
            m.dims()
        )));
    }
    if Mode::from(tree_file.mode) != m.mode() {
        return Err(CliError::new("tree and measurement files use different modes"));
    }
    let t = format::tree_of(&tree_file, m.tolerances())?;
    let r = audit(&t, &m)?;
    let text = match format {
        OutputFormat::Json => render(report::audit_json(&r)),
        OutputFormat::Text => report::audit_text(&r),
    };
    Ok(Output { text, code: EXIT_OK })
}

#[derive(Clone, Debug, PartialEq)]
pub enum GenerateKind {
    Domino,
    RotatedDomino { angles: [f64; 4] },
    Tight { parties: usize, n: usize },
    TightOmit { parties: usize, n: usize, k: usize },
    Density { parties: usize, subtrees: usize },
}

/// Serialized generator output: a measurement file and, for protocol
/// generators, the matching tree file.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub measurement: String,
    pub tree: Option<String>,
}

pub fn generate(kind: &GenerateKind) -> Result<Generated, CliError> {
    let with_tree = |tree: &locc_cert_core::LoccTree, m: &SeparableMeasurement, ordering: Option<String>| Generated {
        measurement: format::render_measurement_file(&format::measurement_file(m, ordering)),
        tree: Some(format::render_tree_file(&format::tree_file(tree))),
    };
    Ok(match kind {
        GenerateKind::Domino => Generated {
            measurement: format::render_measurement_file(&format::measurement_file(&domino(), None)),
            tree: None,
        },
        GenerateKind::RotatedDomino { angles } => Generated {
            measurement: format::render_measurement_file(&format::measurement_file(
                &rotated_domino(*angles, Tolerances::default())?,
                None,
            )),
            tree: None,
        },
        GenerateKind::Tight { parties, n } => {
            let p = tight_protocol(*parties, *n)?;
            with_tree(&p.tree, &p.measurement, None)
        }
        GenerateKind::TightOmit { parties, n, k } => {
            let p = tight_protocol_with_omissions(*parties, *n, *k)?;
            with_tree(&p.tree, &p.measurement, None)
        }
        GenerateKind::Density { parties, subtrees } => {
            let f = density_family_truncation(*parties, *subtrees)?;
            with_tree(&f.tree, &f.measurement, Some("right-to-left leaves".into()))
        }
    })
}

pub fn cmd_generate(
    kind: &GenerateKind,
    out: Option<&Path>,
    tree_out: Option<&Path>,
) -> Result<Output, CliError> {
    let g = generate(kind)?;
    if tree_out.is_some() && g.tree.is_none() {
        return Err(CliError::new("this generator produces no tree; drop --tree-out"));
    }
    if let (Some(path), Some(tree)) = (tree_out, &g.tree) {
        write_atomic(path, tree)?;
    }
    let text = match out {
        Some(path) => {
            write_atomic(path, &g.measurement)?;
            String::new()
        }
        None => g.measurement,
    };
    Ok(Output { text, code: EXIT_OK })
}

#[derive(Clone, Debug, Default)]
pub struct DensityOptions {
    /// Defaults to every prefix `1..=N`.
    pub prefixes: Option<Vec<usize>>,
    /// Element indices moved to the front, in this order.
    pub pin: Vec<usize>,
    pub tol: Option<f64>,
    pub format: OutputFormat,
}

pub fn cmd_density(path: &Path, opts: &DensityOptions) -> Result<Output, CliError> {
    let tol = tolerances(opts.tol)?;
    let file: MeasurementFile = format::parse_measurement_file(&read(path)?)?;
    let elements = format::elements_of(&file, &tol)?;
    let elements = if opts.pin.is_empty() {
        elements
    } else {
        pin_ordering(&elements, &opts.pin)?
    };
    let prefixes = opts
        .prefixes
        .clone()
        .unwrap_or_else(|| (1..=elements.len()).collect());
    let mut r = density_profile(&elements, file.parties, &prefixes, &tol)?;
    r.ordering_id = file.ordering.clone();
    let text = match opts.format {
        OutputFormat::Json => render(report::density_json(&r)),
        OutputFormat::Text => report::density_text(&r),
    };
    Ok(Output { text, code: EXIT_OK })
}

/// Runs a command body and writes its text to `out` (atomically) or returns
/// it for stdout.
pub fn deliver(result: Result<Output, CliError>, out: Option<&PathBuf>) -> Result<Output, CliError> {
    let o = result?;
    match out {
        Some(path) => {
            write_atomic(path, &o.text)?;
            Ok(Output { text: String::new(), code: o.code })
        }
        None => Ok(o),
    }
}
