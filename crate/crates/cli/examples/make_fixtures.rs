//! Regenerates the scenario files in `fixtures/`.
//!
//! `cargo run -p iterint-cli --example make_fixtures [-- <dir>]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use iterint::forms::{gauge_act, mask_indices, Domain, PolyForm, SuperconnectionMC};
use iterint::generators::random_gauge;
use iterint::simplex::face_map;
use iterint::oracles::{parallel_transport_ode, TransportProblem};
use iterint::poly::MatPoly;
use iterint::simplicial::FiniteSimplicialSet;
use iterint::{GradedVectorSpace, Mat};
use iterint_cli::report::rows;
use iterint_cli::scenario::{
    BundleSpec, ComplexSpec, ConfigOverrides, ExpectedBetti, ExpectedHolonomy, Expectations, GaugeSpec, MonomialSpec,
    PerturbationSpec, ScenarioFile, SimplexForm, TermSpec, SCHEMA_VERSION,
};
use iterint_cli::suites::octahedron_orientation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn monomials(p: &MatPoly<f64>) -> Vec<MonomialSpec> {
    p.terms
        .iter()
        .filter(|(_, m)| m.amax() > 0.0)
        .map(|(e, m)| MonomialSpec { exp: e.clone(), matrix: rows(m) })
        .collect()
}

fn terms(f: &PolyForm<f64>) -> Vec<TermSpec> {
    f.terms()
        .iter()
        .map(|((mask, degree), p)| TermSpec { dt: mask_indices(*mask), degree: *degree, monomials: monomials(p) })
        .filter(|t| !t.monomials.is_empty())
        .collect()
}

fn zero_form_poly(f: &PolyForm<f64>) -> MatPoly<f64> {
    let k = f.domain().dim();
    let mut out = MatPoly::zero(k, f.dim(), f.dim());
    for ((mask, _), p) in f.terms() {
        if *mask == 0 {
            out = out.add(p);
        }
    }
    out
}

fn spaces(entries: &[(&str, &[(i32, usize)])]) -> BTreeMap<String, Vec<(i32, usize)>> {
    entries.iter().map(|(id, d)| (id.to_string(), d.to_vec())).collect()
}

fn scenario(name: &str, description: &str, complex: ComplexSpec, bundle: BundleSpec) -> ScenarioFile {
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        description: Some(description.into()),
        config: ConfigOverrides { max_n: Some(64), tol: Some(1e-10), ..ConfigOverrides::default() },
        spaces: BTreeMap::new(),
        complex,
        bundle,
        gauges: Vec::new(),
        perturbations: Vec::new(),
        expect: Expectations::default(),
    }
}

fn interval() -> ScenarioFile {
    let v = GradedVectorSpace::concentrated(0, 2);
    let mut a = MatPoly::zero(1, 2, 2);
    a.add_term(vec![0], Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    a.add_term(vec![1], Mat::from_row_slice(2, 2, &[0.3, 0.0, -0.5, 0.2]));
    a.add_term(vec![2], Mat::from_row_slice(2, 2, &[0.1, -0.4, 0.0, 0.3]));
    let form = PolyForm::from_dense_term(Domain::Simplex(1), &v, &[1], 0, a).expect("degree 0");
    // frozen from the ODE oracle
    let ode = parallel_transport_ode(&TransportProblem::from_connection(&form).expect("edge"), 4096).expect("steps");
    let mut s = scenario(
        "interval transport",
        "Polynomial connection on a single edge; the holonomy is its parallel transport.",
        ComplexSpec::Standard { dim: 1 },
        BundleSpec {
            space: Some("V".into()),
            vertex_spaces: None,
            forms: vec![SimplexForm { simplex: vec![0, 1], terms: terms(&form) }],
            face_forms: Vec::new(),
            mc_tol: None,
        },
    );
    s.spaces = spaces(&[("V", &[(0, 2)])]);
    s.expect.holonomy.push(ExpectedHolonomy { simplex: vec![0, 1], matrix: rows(&ode.value), tol: 1e-6 });
    s
}

/// `∂ + b(t) x yᵀ dt_1 ∧ dt_2 + dh · 1` on `ℝ² → ℝ²` with `∂ = u vᵀ`;
/// `v·x = y·u = 0` makes it flat. A random gauge then mixes everything.
fn triangle_parts() -> (ScenarioFile, PolyForm<f64>) {
    let v = GradedVectorSpace::new([(0, 2), (1, 2)]).expect("valid");
    let dom = Domain::Simplex(2);
    let mut del = Mat::zeros(4, 4);
    let (u, vv) = ([1.0, 0.5], [1.0, -1.0]);
    let (x, y) = ([1.0, 1.0], [0.5, -1.0]);
    let mut b = Mat::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            del[(2 + i, j)] = u[i] * vv[j];
            b[(i, 2 + j)] = x[i] * y[j];
        }
    }
    let mut bp = MatPoly::zero(2, 4, 4);
    bp.add_term(vec![0, 0], &b * 0.4);
    bp.add_term(vec![1, 0], &b * 0.6);
    bp.add_term(vec![0, 2], &b * -0.3);
    let mut h = MatPoly::zero(2, 4, 4);
    h.add_term(vec![1, 1], Mat::identity(4, 4) * 0.3);
    h.add_term(vec![0, 1], Mat::identity(4, 4) * -0.2);
    let base = PolyForm::from_dense_term(dom, &v, &[], 1, MatPoly::constant(2, del))
        .and_then(|f| f.add(&PolyForm::from_dense_term(dom, &v, &[1, 2], -1, bp)?))
        .and_then(|f| f.add(&PolyForm::from_dense_term(dom, &v, &[], 0, h)?.exterior_derivative()))
        .expect("well formed");
    let base = SuperconnectionMC::new(base).expect("flat");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let g = random_gauge::<f64, _>(&mut rng, 2, &v, 1).expect("gauge");
    let w: SuperconnectionMC<f64> = gauge_act(&base, &g).expect("gauge acts");
    let mut s = scenario(
        "triangle with two-term fibre",
        "Flat superconnection on one triangle with fibre a rank-one complex R^2 -> R^2 in degrees 0 and 1.",
        ComplexSpec::Standard { dim: 2 },
        BundleSpec {
            space: Some("V".into()),
            vertex_spaces: None,
            forms: vec![SimplexForm { simplex: vec![0, 1, 2], terms: terms(w.form()) }],
            face_forms: Vec::new(),
            mc_tol: None,
        },
    );
    s.spaces = spaces(&[("V", &[(0, 2), (1, 2)])]);
    let h = random_gauge::<f64, _>(&mut rng, 2, &v, 1).expect("gauge");
    s.gauges.push(GaugeSpec {
        simplex: vec![0, 1, 2],
        f: monomials(&zero_form_poly(h.f())),
        inverse: monomials(&zero_form_poly(h.inverse())),
    });
    (s, w.form().clone())
}

fn sphere() -> ScenarioFile {
    let set = FiniteSimplicialSet::octahedron();
    let mut forms = Vec::new();
    for s in set.simplices(2) {
        let c = octahedron_orientation(s) * std::f64::consts::PI;
        forms.push(SimplexForm {
            simplex: s.clone(),
            terms: vec![TermSpec {
                dt: vec![1, 2],
                degree: -1,
                monomials: vec![MonomialSpec { exp: vec![0, 0], matrix: vec![vec![0.0, c], vec![0.0, 0.0]] }],
            }],
        });
    }
    let mut s = scenario(
        "octahedral sphere",
        "Octahedron with the volume form of total mass 4 pi acting by the degree -1 map of R + R[-1].",
        ComplexSpec::Octahedron,
        BundleSpec { space: Some("E".into()), vertex_spaces: None, forms, face_forms: Vec::new(), mc_tol: None },
    );
    s.spaces = spaces(&[("E", &[(0, 1), (1, 1)])]);
    s.expect.betti = Some(ExpectedBetti { from_degree: 0, values: vec![1, 0, 0, 1] });
    s
}

/// The edge `[0, 1]` gets its true restriction plus `dt`, which is still
/// flat and agrees at the endpoints, so only the face check can catch it.
fn bad_face(tri: &ScenarioFile, top: &PolyForm<f64>) -> ScenarioFile {
    let mut s = tri.clone();
    s.name = "mismatched face".into();
    s.description = Some("The form given on the edge [0, 1] is not the restriction of the triangle form.".into());
    s.gauges.clear();
    let edge = top.pullback_affine(&face_map(2, 1).expect("face")).expect("pullback");
    let shift = PolyForm::from_dense_term(Domain::Simplex(1), top.space(), &[1], 0, MatPoly::constant(1, Mat::identity(4, 4) * 0.5))
        .expect("degree 0");
    s.bundle.face_forms.push(SimplexForm { simplex: vec![0, 1], terms: terms(&edge.add(&shift).expect("same space")) });
    s
}

fn perturbed(tri: &ScenarioFile) -> ScenarioFile {
    let mut s = tri.clone();
    s.name = "perturbed triangle".into();
    s.description = Some("Triangle scene with F_2 shifted by a degree -1 matrix after integration.".into());
    s.gauges.clear();
    s.perturbations.push(PerturbationSpec {
        simplex: vec![0, 1, 2],
        matrix: vec![
            vec![0.0, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, -0.25, 0.1],
            vec![0.0; 4],
            vec![0.0; 4],
        ],
    });
    s
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir).expect("fixture directory");
    let (tri, top) = triangle_parts();
    let files = [
        ("interval_transport.json", interval()),
        ("triangle_two_term.json", tri.clone()),
        ("sphere_octahedron.json", sphere()),
        ("bad_face.json", bad_face(&tri, &top)),
        ("perturbed_rep.json", perturbed(&tri)),
    ];
    for (name, s) in files {
        let mut text = serde_json::to_string_pretty(&s).expect("serializable");
        text.push('\n');
        std::fs::write(dir.join(name), text).expect("write fixture");
        println!("wrote {}", dir.join(name).display());
    }
}
