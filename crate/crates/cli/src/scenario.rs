//! Scenario files: JSON description of a finite simplicial set carrying
//! flat superconnections, plus optional gauges, perturbations and expected
//! results. See `docs/scenario-schema.md`.

use std::collections::BTreeMap;
use std::path::Path;

use iterint::forms::{Domain, GaugeElement, PolyForm, SuperconnectionMC};
use iterint::holonomy::FormValuedComplex;
use iterint::poly::MatPoly;
use iterint::simplicial::{FiniteSimplicialSet, Simplex};
use iterint::{GradedVectorSpace, Mat};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub config: ConfigOverrides,
    /// Graded spaces by id: list of `[degree, dimension]`.
    pub spaces: BTreeMap<String, Vec<(i32, usize)>>,
    pub complex: ComplexSpec,
    pub bundle: BundleSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gauges: Vec<GaugeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<PerturbationSpec>,
    #[serde(default)]
    pub expect: Expectations,
}

/// Numerical settings; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subdivide_t: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComplexSpec {
    Explicit { vertices: usize, maximal: Vec<Vec<usize>> },
    Standard { dim: usize },
    Octahedron,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    /// Fibre over every vertex, unless `vertex_spaces` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_spaces: Option<Vec<String>>,
    /// Forms on maximal simplices; faces receive restrictions.
    pub forms: Vec<SimplexForm>,
    /// Extra forms on lower simplices, checked against restrictions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub face_forms: Vec<SimplexForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexForm {
    pub simplex: Vec<usize>,
    pub terms: Vec<TermSpec>,
}

/// `Σ_monomials t^exp · matrix` times `dt_{i_1} ∧ … ∧ dt_{i_p}`, with
/// matrices of endomorphism degree `degree`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dt: Vec<usize>,
    #[serde(default)]
    pub degree: i32,
    pub monomials: Vec<MonomialSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub exp: Vec<u32>,
    pub matrix: Vec<Vec<f64>>,
}

/// Gauge function on a simplex of the bundle, given with its inverse.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub simplex: Vec<usize>,
    pub f: Vec<MonomialSpec>,
    pub inverse: Vec<MonomialSpec>,
}

/// Matrix added to `F(σ)` after integration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub simplex: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub holonomy: Vec<ExpectedHolonomy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betti: Option<ExpectedBetti>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedHolonomy {
    pub simplex: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default = "default_expect_tol")]
    pub tol: f64,
}

fn default_expect_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedBetti {
    /// Degree of the first entry.
    #[serde(default)]
    pub from_degree: i32,
    pub values: Vec<usize>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub config: ConfigOverrides,
    pub complex: FormValuedComplex<f64>,
    pub spaces: Vec<GradedVectorSpace>,
    pub gauges: Vec<(Simplex, GaugeElement<f64>)>,
    pub perturbations: Vec<(Simplex, Mat<f64>)>,
    pub expect: Expectations,
}

impl Scene {
    pub fn set(&self) -> &FiniteSimplicialSet {
        self.complex.set()
    }
}

pub fn load(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("{}: cannot read: {e}", path.display())))?;
    parse(&text).map_err(|e| e.context(&path.display().to_string()))
}

pub fn parse(text: &str) -> Result<Scene, CliError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    build(file)
}

fn schema<T>(field: &str, msg: impl std::fmt::Display) -> Result<T, CliError> {
    Err(CliError::Schema(format!("{field}: {msg}")))
}

fn matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<Mat<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return schema(field, format!("expected a {n}x{n} matrix"));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return schema(field, "entries must be finite");
    }
    Ok(Mat::from_fn(n, n, |r, c| rows[r][c]))
}

fn matpoly(field: &str, monomials: &[MonomialSpec], k: usize, n: usize) -> Result<MatPoly<f64>, CliError> {
    let mut p = MatPoly::zero(k, n, n);
    for (i, m) in monomials.iter().enumerate() {
        let f = format!("{field}.monomials[{i}]");
        if m.exp.len() != k {
            return schema(&f, format!("exponent needs {k} entries"));
        }
        p.add_term(m.exp.clone(), matrix(&format!("{f}.matrix"), &m.matrix, n)?);
    }
    Ok(p)
}

fn form(field: &str, spec: &SimplexForm, space: &GradedVectorSpace) -> Result<PolyForm<f64>, CliError> {
    let k = spec.simplex.len() - 1;
    let dom = Domain::Simplex(k);
    let n = space.total_dim();
    let mut out = PolyForm::zero(dom, space);
    for (i, t) in spec.terms.iter().enumerate() {
        let f = format!("{field}.terms[{i}]");
        let p = matpoly(&f, &t.monomials, k, n)?;
        let term = PolyForm::from_dense_term(dom, space, &t.dt, t.degree, p)
            .or_else(|e| schema(&f, e))?;
        if term.total_degree().is_some_and(|d| d != 1) {
            return schema(&f, format!("total degree must be 1 (form degree {} + degree {})", t.dt.len(), t.degree));
        }
        out = out.add(&term).or_else(|e| schema(&f, e))?;
    }
    Ok(out)
}

fn build(file: ScenarioFile) -> Result<Scene, CliError> {
    if file.schema_version != SCHEMA_VERSION {
        return schema(
            "schema_version",
            format!("unsupported version {} (this build reads {SCHEMA_VERSION})", file.schema_version),
        );
    }
    let mut spaces = BTreeMap::new();
    for (id, dims) in &file.spaces {
        let v = GradedVectorSpace::new(dims.iter().copied()).or_else(|e| schema(&format!("spaces.{id}"), e))?;
        spaces.insert(id.clone(), v);
    }
    let set = match &file.complex {
        ComplexSpec::Explicit { vertices, maximal } => {
            FiniteSimplicialSet::from_maximal(*vertices, maximal).or_else(|e| schema("complex", e))?
        }
        ComplexSpec::Standard { dim } => FiniteSimplicialSet::standard(*dim),
        ComplexSpec::Octahedron => FiniteSimplicialSet::octahedron(),
    };
    let lookup = |field: &str, id: &str| -> Result<GradedVectorSpace, CliError> {
        spaces.get(id).cloned().map_or_else(|| schema(field, format!("unknown space id {id:?}")), Ok)
    };
    let fibres: Vec<GradedVectorSpace> = match (&file.bundle.space, &file.bundle.vertex_spaces) {
        (Some(id), None) => vec![lookup("bundle.space", id)?; set.n_vertices()],
        (None, Some(ids)) => {
            if ids.len() != set.n_vertices() {
                return schema("bundle.vertex_spaces", format!("expected {} entries", set.n_vertices()));
            }
            ids.iter()
                .enumerate()
                .map(|(i, id)| lookup(&format!("bundle.vertex_spaces[{i}]"), id))
                .collect::<Result<_, _>>()?
        }
        _ => return schema("bundle", "give exactly one of `space` and `vertex_spaces`"),
    };
    let mc_tol = file.bundle.mc_tol.unwrap_or(1e-10);
    let read_forms = |list: &[SimplexForm], name: &str| -> Result<BTreeMap<Simplex, SuperconnectionMC<f64>>, CliError> {
        let mut out = BTreeMap::new();
        for (i, spec) in list.iter().enumerate() {
            let field = format!("bundle.{name}[{i}]");
            let s = &spec.simplex;
            if s.is_empty() || !set.contains(s) || s.windows(2).any(|w| w[0] >= w[1]) {
                return schema(&field, format!("{s:?} is not a nondegenerate simplex of the complex"));
            }
            let v = &fibres[s[0]];
            if s.iter().any(|&x| &fibres[x] != v) {
                return schema(&field, format!("simplex {s:?} joins vertices with different fibres"));
            }
            let w = form(&field, spec, v)?;
            let mc = SuperconnectionMC::with_tolerance(w, mc_tol)
                .map_err(|e| CliError::Invariant(format!("{field} on simplex {s:?}: {e}")))?;
            if out.insert(s.clone(), mc).is_some() {
                return schema(&field, format!("simplex {s:?} listed twice"));
            }
        }
        Ok(out)
    };
    let mut top = read_forms(&file.bundle.forms, "forms")?;
    let faces = read_forms(&file.bundle.face_forms, "face_forms")?;
    for k in 1..=set.dim() {
        for s in set.simplices(k) {
            let covered = top.keys().any(|t| s.iter().all(|v| t.contains(v)));
            if !covered {
                return schema("bundle.forms", format!("no form covers simplex {s:?}"));
            }
        }
    }
    for (s, w) in faces {
        if top.contains_key(&s) {
            return schema("bundle.face_forms", format!("simplex {s:?} already has a form"));
        }
        top.insert(s, w);
    }
    // zero forms on isolated vertices
    for s in set.simplices(0) {
        if set.dim() == 0 {
            top.entry(s.clone()).or_insert_with(|| SuperconnectionMC::zero(0, &fibres[s[0]]));
        }
    }
    let complex = FormValuedComplex::from_top_forms(set.clone(), fibres.clone(), top)
        .map_err(|e| CliError::Invariant(format!("bundle: {e}")))?;
    let mut gauges = Vec::new();
    for (i, g) in file.gauges.iter().enumerate() {
        let field = format!("gauges[{i}]");
        let s = &g.simplex;
        if !set.contains(s) || s.windows(2).any(|w| w[0] >= w[1]) {
            return schema(&field, format!("{s:?} is not a nondegenerate simplex of the complex"));
        }
        let v = &fibres[s[0]];
        let k = s.len() - 1;
        let n = v.total_dim();
        let dom = Domain::Simplex(k);
        let f = PolyForm::from_dense_term(dom, v, &[], 0, matpoly(&format!("{field}.f"), &g.f, k, n)?)
            .or_else(|e| schema(&format!("{field}.f"), e))?;
        let finv = PolyForm::from_dense_term(dom, v, &[], 0, matpoly(&format!("{field}.inverse"), &g.inverse, k, n)?)
            .or_else(|e| schema(&format!("{field}.inverse"), e))?;
        let ge = GaugeElement::new(f, finv).map_err(|e| CliError::Invariant(format!("{field} on simplex {s:?}: {e}")))?;
        gauges.push((s.clone(), ge));
    }
    let mut perturbations = Vec::new();
    for (i, p) in file.perturbations.iter().enumerate() {
        let field = format!("perturbations[{i}]");
        if !set.contains(&p.simplex) || p.simplex.windows(2).any(|w| w[0] >= w[1]) {
            return schema(&field, format!("{:?} is not a nondegenerate simplex of the complex", p.simplex));
        }
        let n = fibres[p.simplex[0]].total_dim();
        perturbations.push((p.simplex.clone(), matrix(&format!("{field}.matrix"), &p.matrix, n)?));
    }
    for (i, h) in file.expect.holonomy.iter().enumerate() {
        if !set.contains(&h.simplex) {
            return schema(&format!("expect.holonomy[{i}]"), format!("{:?} is not a simplex of the complex", h.simplex));
        }
        matrix(&format!("expect.holonomy[{i}].matrix"), &h.matrix, fibres[h.simplex[0]].total_dim())?;
    }
    Ok(Scene {
        name: file.name,
        config: file.config,
        complex,
        spaces: fibres,
        gauges,
        perturbations,
        expect: file.expect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(terms: &str) -> String {
        format!(
            r#"{{
  "schema_version": 1,
  "name": "edge",
  "spaces": {{ "V": [[0, 2]] }},
  "complex": {{ "kind": "standard", "dim": 1 }},
  "bundle": {{ "space": "V", "forms": [{{ "simplex": [0, 1], "terms": {terms} }}] }}
}}"#
        )
    }

    const NILPOTENT: &str = r#"[{ "dt": [1], "monomials": [{ "exp": [0], "matrix": [[0, 1], [0, 0]] }] }]"#;

    #[test]
    fn minimal_edge_parses() {
        let s = parse(&edge(NILPOTENT)).unwrap();
        assert_eq!(s.name, "edge");
        assert_eq!(s.set().simplices(1).len(), 1);
        assert_eq!(s.spaces[0].total_dim(), 2);
        assert_eq!(s.config, ConfigOverrides::default());
    }

    #[test]
    fn wrong_total_degree_names_the_term() {
        let terms = r#"[{ "dt": [1], "degree": 1, "monomials": [{ "exp": [0], "matrix": [[0, 0], [1, 0]] }] }]"#;
        let e = parse(&edge(terms).replace("[[0, 2]]", "[[0, 1], [1, 1]]")).unwrap_err();
        assert!(matches!(e, CliError::Schema(_)));
        assert!(e.to_string().contains("bundle.forms[0].terms[0]"), "{e}");
    }

    #[test]
    fn bad_shapes_are_schema_errors() {
        let short = r#"[{ "dt": [1], "monomials": [{ "exp": [0], "matrix": [[0, 1]] }] }]"#;
        assert!(parse(&edge(short)).unwrap_err().to_string().contains("2x2"));
        let exp = r#"[{ "dt": [1], "monomials": [{ "exp": [0, 1], "matrix": [[0, 1], [0, 0]] }] }]"#;
        assert!(parse(&edge(exp)).unwrap_err().to_string().contains("exponent"));
        let unknown = edge(NILPOTENT).replace(r#""space": "V""#, r#""space": "W""#);
        assert!(parse(&unknown).unwrap_err().to_string().contains("unknown space"));
        let off = r#"[{ "dt": [1], "monomials": [{ "exp": [0], "matrix": [[0, 1], [0, 0]] }] }]"#;
        let e = parse(&edge(off).replace("[[0, 2]]", "[[0, 1], [1, 1]]")).unwrap_err();
        assert!(matches!(e, CliError::Schema(_)), "{e}");
    }

    #[test]
    fn uncovered_simplex_is_reported() {
        let text = edge(NILPOTENT).replace(r#""kind": "standard", "dim": 1"#, r#""kind": "standard", "dim": 2"#);
        assert!(matches!(parse(&text), Err(CliError::Schema(_))));
    }

    #[test]
    fn curved_form_is_an_invariant_error() {
        // a t dt_1 + b dt_2 with [a, b] != 0 on the triangle
        let text = r#"{
  "schema_version": 1,
  "name": "curved",
  "spaces": { "V": [[0, 2]] },
  "complex": { "kind": "standard", "dim": 2 },
  "bundle": { "space": "V", "forms": [{ "simplex": [0, 1, 2], "terms": [
    { "dt": [1], "monomials": [{ "exp": [0, 1], "matrix": [[0, 1], [0, 0]] }] },
    { "dt": [2], "monomials": [{ "exp": [0, 0], "matrix": [[0, 0], [1, 0]] }] }
  ] }] }
}"#;
        assert!(matches!(parse(text), Err(CliError::Invariant(_))));
    }

    #[test]
    fn round_trip_keeps_the_file() {
        let f: ScenarioFile = serde_json::from_str(&edge(NILPOTENT)).unwrap();
        let again: ScenarioFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(serde_json::to_value(&f).unwrap(), serde_json::to_value(&again).unwrap());
    }
}
