//! Measurement and tree files.
//!
//! Both are JSON. Exact entries are `{"re": "p/q", "im": "p/q"}` with
//! decimal-free rationals; float entries are `[re, im]`. Parties are
//! numbered from 0. Files are written with one element (or the whole tree)
//! per line so that regenerating and re-serializing is byte-identical.

use std::fmt;
use std::str::FromStr;

use locc_cert_core::measurement::ProductPovmElement;
use locc_cert_core::operator::{ExactComplex, HermitianOperator, Mode, Tolerances};
use locc_cert_core::tree::{LoccTree, NodeSpec};
use locc_cert_core::SeparableMeasurement;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    Exact(ExactComplex),
    Float(Complex64),
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    if s.contains(['.', 'e', 'E']) {
        return Err(format!("invalid rational {s:?}: expected an integer or p/q"));
    }
    BigRational::from_str(s.trim()).map_err(|e| format!("invalid rational {s:?}: {e}"))
}

fn de_rational<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
    let s = String::deserialize(d)?;
    parse_rational(&s).map_err(de::Error::custom)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExactEntry {
    #[serde(deserialize_with = "de_rational")]
    re: BigRational,
    #[serde(deserialize_with = "de_rational")]
    im: BigRational,
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct EntryVisitor;

        impl<'de> Visitor<'de> for EntryVisitor {
            type Value = Entry;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str(r#"{"re": "p/q", "im": "p/q"} or [re, im]"#)
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Entry, A::Error> {
                let e = ExactEntry::deserialize(de::value::MapAccessDeserializer::new(map))?;
                Ok(Entry::Exact(Complex::new(e.re, e.im)))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Entry, A::Error> {
                let re: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Entry::Float(Complex64::new(re, im)))
            }
        }

        d.deserialize_any(EntryVisitor)
    }
}

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Entry::Exact(z) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("re", &z.re.to_string())?;
                m.serialize_entry("im", &z.im.to_string())?;
                m.end()
            }
            Entry::Float(z) => [z.re, z.im].serialize(s),
        }
    }
}

pub type Matrix = Vec<Vec<Entry>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileMode {
    Exact,
    Float,
}

impl From<FileMode> for Mode {
    fn from(m: FileMode) -> Mode {
        match m {
            FileMode::Exact => Mode::Exact,
            FileMode::Float => Mode::Float,
        }
    }
}

impl From<Mode> for FileMode {
    fn from(m: Mode) -> FileMode {
        match m {
            Mode::Exact => FileMode::Exact,
            Mode::Float => FileMode::Float,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub factors: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementFile {
    pub parties: usize,
    pub dims: Vec<usize>,
    pub mode: FileMode,
    /// Name of the element ordering, for density runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<String>,
    pub elements: Vec<ElementRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub party: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub parties: usize,
    pub dims: Vec<usize>,
    pub mode: FileMode,
    pub root: NodeRecord,
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::new(format!("{what}: {inner}"))
        } else {
            CliError::new(format!("{what}: {path}: {inner}"))
        }
    })
}

pub fn parse_measurement_file(text: &str) -> Result<MeasurementFile, CliError> {
    from_json(text, "measurement file")
}

pub fn parse_tree_file(text: &str) -> Result<TreeFile, CliError> {
    from_json(text, "tree file")
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("in-memory JSON serialization")
}

fn header(out: &mut String, parties: usize, dims: &[usize], mode: FileMode) {
    out.push_str("{\n");
    out.push_str(&format!("  \"parties\": {parties},\n"));
    out.push_str(&format!("  \"dims\": {},\n", json(&dims)));
    out.push_str(&format!("  \"mode\": {},\n", json(&mode)));
}

pub fn render_measurement_file(f: &MeasurementFile) -> String {
    let mut out = String::new();
    header(&mut out, f.parties, &f.dims, f.mode);
    if let Some(o) = &f.ordering {
        out.push_str(&format!("  \"ordering\": {},\n", json(o)));
    }
    out.push_str("  \"elements\": [\n");
    for (i, el) in f.elements.iter().enumerate() {
        let sep = if i + 1 == f.elements.len() { "" } else { "," };
        out.push_str(&format!("    {}{sep}\n", json(el)));
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn render_tree_file(f: &TreeFile) -> String {
    let mut out = String::new();
    header(&mut out, f.parties, &f.dims, f.mode);
    out.push_str(&format!("  \"root\": {}\n}}\n", json(&f.root)));
    out
}

pub fn matrix_of(op: &HermitianOperator) -> Matrix {
    let d = op.dim();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| match (op.exact_entries(), op.float_entries()) {
                    (Some(e), _) => Entry::Exact(e[i * d + j].clone()),
                    (_, Some(e)) => Entry::Float(e[i * d + j]),
                    _ => unreachable!("an operator is exact or float"),
                })
                .collect()
        })
        .collect()
}

fn operator_of(
    m: &Matrix,
    dim: usize,
    mode: FileMode,
    tol: &Tolerances,
    path: &str,
) -> Result<HermitianOperator, CliError> {
    if m.len() != dim {
        return Err(CliError::new(format!("{path}: expected {dim} rows, found {}", m.len())));
    }
    let mut exact = Vec::new();
    let mut float = Vec::new();
    for (r, row) in m.iter().enumerate() {
        if row.len() != dim {
            return Err(CliError::new(format!(
                "{path}[{r}]: expected {dim} entries, found {}",
                row.len()
            )));
        }
        for (c, e) in row.iter().enumerate() {
            match (e, mode) {
                (Entry::Exact(z), FileMode::Exact) => exact.push(z.clone()),
                (Entry::Float(z), FileMode::Float) => float.push(*z),
                (Entry::Exact(_), FileMode::Float) => {
                    return Err(CliError::new(format!(
                        "{path}[{r}][{c}]: exact entry in a float-mode file"
                    )))
                }
                (Entry::Float(_), FileMode::Exact) => {
                    return Err(CliError::new(format!(
                        "{path}[{r}][{c}]: float entry in an exact-mode file"
                    )))
                }
            }
        }
    }
    let op = match mode {
        FileMode::Exact => HermitianOperator::from_exact(dim, exact),
        FileMode::Float => HermitianOperator::from_float(dim, float, tol),
    };
    op.map_err(|e| CliError::new(format!("{path}: {e}")))
}

fn check_header(parties: usize, dims: &[usize]) -> Result<(), CliError> {
    if parties == 0 || dims.len() != parties {
        return Err(CliError::new(format!(
            "dims: {} dimensions given for {parties} parties",
            dims.len()
        )));
    }
    if let Some(a) = dims.iter().position(|&d| d == 0) {
        return Err(CliError::new(format!("dims[{a}]: dimension must be positive")));
    }
    Ok(())
}

/// The file's elements as product operators, in file order.
pub fn elements_of(f: &MeasurementFile, tol: &Tolerances) -> Result<Vec<ProductPovmElement>, CliError> {
    check_header(f.parties, &f.dims)?;
    if f.elements.is_empty() {
        return Err(CliError::new("elements: at least one element is required"));
    }
    f.elements
        .iter()
        .enumerate()
        .map(|(i, el)| {
            if el.factors.len() != f.parties {
                return Err(CliError::new(format!(
                    "elements[{i}].factors: expected {} factors, found {}",
                    f.parties,
                    el.factors.len()
                )));
            }
            let factors = el
                .factors
                .iter()
                .enumerate()
                .map(|(a, m)| operator_of(m, f.dims[a], f.mode, tol, &format!("elements[{i}].factors[{a}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let el_op = ProductPovmElement::new(factors);
            Ok(match &el.id {
                Some(id) => el_op.with_id(id.clone()),
                None => el_op,
            })
        })
        .collect()
}

pub fn measurement_file(m: &SeparableMeasurement, ordering: Option<String>) -> MeasurementFile {
    MeasurementFile {
        parties: m.party_count(),
        dims: m.dims().to_vec(),
        mode: m.mode().into(),
        ordering,
        elements: m
            .elements()
            .iter()
            .map(|el| ElementRecord {
                id: el.id.clone(),
                factors: el.factors.iter().map(matrix_of).collect(),
            })
            .collect(),
    }
}

pub fn tree_file(t: &LoccTree) -> TreeFile {
    fn record(s: &NodeSpec) -> NodeRecord {
        NodeRecord {
            party: s.party,
            label: s.label.as_ref().map(matrix_of),
            children: s.children.iter().map(record).collect(),
            element_index: s.leaf_element,
        }
    }
    TreeFile {
        parties: t.party_count(),
        dims: t.dims().to_vec(),
        mode: t.mode().into(),
        root: record(&t.to_spec()),
    }
}

pub fn tree_of(f: &TreeFile, tol: &Tolerances) -> Result<LoccTree, CliError> {
    check_header(f.parties, &f.dims)?;
    fn spec(
        r: &NodeRecord,
        f: &TreeFile,
        tol: &Tolerances,
        path: &str,
    ) -> Result<NodeSpec, CliError> {
        let label = match (&r.label, r.party) {
            (Some(m), Some(a)) => {
                let dim = *f.dims.get(a).ok_or_else(|| {
                    CliError::new(format!("{path}.party: party {a} out of range"))
                })?;
                Some(operator_of(m, dim, f.mode, tol, &format!("{path}.label"))?)
            }
            (None, None) => None,
            _ => {
                return Err(CliError::new(format!(
                    "{path}: party and label must be given together"
                )))
            }
        };
        let children = r
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| spec(c, f, tol, &format!("{path}.children[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NodeSpec {
            party: r.party,
            label,
            children,
            leaf_element: r.element_index,
        })
    }
    let root = spec(&f.root, f, tol, "root")?;
    LoccTree::from_spec(f.dims.clone(), f.mode.into(), &root).map_err(CliError::from)
}
