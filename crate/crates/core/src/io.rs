//! JSON interchange: instance files, analysis reports and a formatter that
//! writes every float with 17 significant digits.
//!
//! Linear maps are stored as row-major nested arrays acting on the
//! column-major vectorization of `X`: entry `k = i + j m` of `vec(X)` is `X[i][j]`.

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::cones::{PolyhedralConeSpec, TrivialityMethod};
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::model::{HKind, HSpec, KKTPoint, ProblemInstance};
use crate::solver::{self, SolverConfig};
use crate::stability::{self, CalmnessOptions, StabilityReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HFile {
    pub kind: HKind,
    pub target: Vec<f64>,
    pub weight: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub e: usize,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: PolyhedralConeSpec,
    pub h: HFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn nested(x: &Mat) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).iter().cloned().collect()).collect()
}

fn from_nested(what: &str, rows: &[Vec<f64>], r: usize, c: usize) -> Result<Mat> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        let got_cols = rows.first().map(|row| row.len()).unwrap_or(0);
        return Err(Error::Shape(format!("{what} must be {r}x{c}, got {}x{got_cols}", rows.len())));
    }
    let m = Mat::from_fn(r, c, |i, j| rows[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

fn vector(what: &str, v: &[f64], len: usize) -> Result<Vector> {
    if v.len() != len {
        return Err(Error::Shape(format!("{what} must have length {len}, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Vector::from_column_slice(v))
}

impl InstanceFile {
    pub fn from_instance(inst: &ProblemInstance, reference: Option<&KKTPoint>) -> Self {
        InstanceFile {
            m: inst.m,
            n: inst.n,
            d: inst.d(),
            e: inst.e(),
            f: nested(&inst.f),
            a: nested(&inst.amap),
            c: nested(&inst.c),
            b: inst.b.iter().cloned().collect(),
            q: inst.q.clone(),
            h: HFile {
                kind: inst.h.kind,
                target: inst.h.target.iter().cloned().collect(),
                weight: inst.h.weight.iter().cloned().collect(),
            },
            reference: reference.map(|p| ReferenceFile {
                x: nested(&p.x),
                y: p.y.iter().cloned().collect(),
                w: p.w.iter().cloned().collect(),
                s: nested(&p.s),
            }),
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_instance(&self) -> Result<ProblemInstance> {
        let (m, n, d, e) = (self.m, self.n, self.d, self.e);
        let mn = m * n;
        let h = HSpec::quadratic(vector("h.target", &self.h.target, d)?, vector("h.weight", &self.h.weight, d)?)?;
        let inst = ProblemInstance {
            m,
            n,
            f: from_nested("F", &self.f, d, mn)?,
            amap: from_nested("A", &self.a, e, mn)?,
            c: from_nested("C", &self.c, m, n)?,
            b: vector("b", &self.b, e)?,
            q: self.q.clone(),
            h,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn reference_point(&self, inst: &ProblemInstance) -> Result<Option<KKTPoint>> {
        let Some(r) = &self.reference else { return Ok(None) };
        let mut pt = KKTPoint {
            x: from_nested("reference.X", &r.x, self.m, self.n)?,
            y: vector("reference.y", &r.y, self.e)?,
            w: vector("reference.w", &r.w, self.d)?,
            s: from_nested("reference.S", &r.s, self.m, self.n)?,
            residuals: BTreeMap::new(),
        };
        pt.refresh(inst)?;
        Ok(Some(pt))
    }

    /// Parse and validate; errors carry the line and column of the problem.
    pub fn parse(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        file.to_instance()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        to_json_17(self)
    }
}

/// Pretty JSON with floats written as `{:.16e}` (17 significant digits).
pub struct Digits17 {
    inner: PrettyFormatter<'static>,
}

impl Default for Digits17 {
    fn default() -> Self {
        Digits17 { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn to_json_17<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17::default());
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

// ---------------------------------------------------------------------------
// Analysis reports

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub seed: u64,
    pub calmness: bool,
    pub radii: Vec<f64>,
    pub trials: usize,
    /// Solver tolerance on the KKT residual.
    pub tol: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { seed: 0, calmness: false, radii: vec![1e-2, 1e-3, 1e-4], trials: 50, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    /// Where the analyzed point came from: the file's reference or a fresh solve.
    pub point_source: String,
    pub point_residual: f64,
    pub methods: BTreeMap<String, TrivialityMethod>,
    pub report: StabilityReport,
    pub notes: Vec<String>,
    pub timestamp: String,
}

impl ReportFile {
    pub fn to_json(&self) -> String {
        to_json_17(self)
    }

    /// JSON with the timestamp blanked, for reproducibility comparisons.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut copy = self.clone();
        copy.timestamp.clear();
        copy.to_json()
    }
}

fn timestamp() -> String {
    match std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH) {
        Ok(d) => format!("{}", d.as_secs()),
        Err(_) => String::new(),
    }
}

/// Analyze an instance at its reference point (or at a solution computed
/// from scratch when the file has none).
pub fn analyze(file: &InstanceFile, opts: &AnalyzeOptions) -> Result<ReportFile> {
    let inst = file.to_instance()?;
    let (point, source) = match file.reference_point(&inst)? {
        Some(p) => (p, "reference"),
        None => {
            let cfg = SolverConfig { tol_kkt: opts.tol, ..Default::default() };
            let out = solver::solve_perturbed(&inst, &Mat::zeros(inst.m, inst.n), &Vector::zeros(inst.e()), &cfg)?;
            if !out.converged {
                return Err(Error::NotKkt { residual: out.residual, tol: opts.tol });
            }
            (KKTPoint::from_primal(&inst, out.point.x, out.point.y)?, "solver")
        }
    };
    let calm_opts = opts.calmness.then(|| CalmnessOptions {
        radii: opts.radii.clone(),
        trials: opts.trials,
        seed: opts.seed,
        solver: SolverConfig { tol_kkt: opts.tol, ..Default::default() },
    });
    let report = stability::theorem53_report(&inst, &point, calm_opts.as_ref(), opts.seed)?;
    let methods = BTreeMap::from([
        ("rcq".to_string(), report.rcq.method),
        ("sosc_primal".to_string(), report.sosc_primal.method),
        ("srcq_dual".to_string(), report.srcq_dual.method),
        ("srcq_primal".to_string(), report.srcq_primal.method),
        ("sosc_dual".to_string(), report.sosc_dual.method),
    ]);
    let tolerances = BTreeMap::from([
        ("kkt_acceptance".to_string(), stability::KKT_TOL),
        ("solver".to_string(), opts.tol),
        ("witness".to_string(), 1e-9),
    ]);
    Ok(ReportFile {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        tolerances,
        point_source: source.to_string(),
        point_residual: point.max_residual(),
        methods,
        report,
        notes: vec![
            "srcq_primal and sosc_dual share the block structure of the polar critical cone; their agreement is a weaker check than sosc_primal vs srcq_dual".to_string(),
        ],
        timestamp: timestamp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{plant_instance, PlantSpec};

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json_17(&vec![0.1f64, 1.0 / 3.0]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn instance_round_trip() {
        let (inst, pt) = plant_instance(&PlantSpec::running_example(), 0).unwrap();
        let file = InstanceFile::from_instance(&inst, Some(&pt));
        let text = file.to_json();
        let parsed = InstanceFile::parse(&text).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_json(), text);
        assert_eq!(parsed.to_instance().unwrap(), inst);
    }

    #[test]
    fn column_major_convention() {
        // F picks X[1][0], which is coordinate 1 of vec(X) for a 2x2 matrix.
        let (mut inst, _) = plant_instance(&PlantSpec::running_example(), 0).unwrap();
        inst.f = Mat::zeros(1, 4);
        inst.f[(0, 1)] = 1.0;
        inst.h = HSpec::quadratic(Vector::zeros(1), Vector::repeat(1, 1.0)).unwrap();
        let file = InstanceFile::from_instance(&inst, None);
        let text = file.to_json();
        let back = InstanceFile::parse(&text).unwrap().to_instance().unwrap();
        let x = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(back.apply_f(&x)[0], 3.0);
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = InstanceFile::parse("{\n  \"m\": 2,\n  \"n\": }").unwrap_err();
        assert!(matches!(&err, Error::Input(msg) if msg.starts_with("line 3")), "{err}");
    }
}
