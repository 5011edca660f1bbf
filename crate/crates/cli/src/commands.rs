use iterint::forms::gauge_act;
use iterint::holonomy::{hol_object, integrate_rep};
use iterint::simplicial::{twisted_cohomology, SimplicialRep};
use iterint::{GradedMap, Mat};

use crate::report::{rows, Betti, Check, CheckClass, HolonomyEntry, Relation, Report, Settings};
use crate::scenario::{ConfigOverrides, Scene};
use crate::{suites, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Holonomy,
    CheckRep,
    Cohomology,
    SphereDemo,
    VerifyAinfty,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Holonomy => "holonomy",
            Command::CheckRep => "check-rep",
            Command::Cohomology => "cohomology",
            Command::SphereDemo => "sphere-demo",
            Command::VerifyAinfty => "verify-ainfty",
        }
    }

    pub fn needs_scenario(self) -> bool {
        matches!(self, Command::Holonomy | Command::CheckRep | Command::Cohomology)
    }

    /// Settings the built-in data of a command needs beyond the defaults;
    /// scenario files and flags still take precedence.
    pub fn builtin_overrides(self) -> ConfigOverrides {
        match self {
            Command::SphereDemo | Command::VerifyAinfty => {
                ConfigOverrides { max_n: Some(64), tol: Some(1e-10), ..ConfigOverrides::default() }
            }
            _ => ConfigOverrides::default(),
        }
    }
}

/// Settings from defaults, then the command's built-in needs, then the
/// scenario file, then the flags.
pub fn resolve(cmd: Command, scene: Option<&Scene>, flags: &ConfigOverrides) -> Result<Settings, CliError> {
    let builtin = cmd.builtin_overrides();
    let empty = ConfigOverrides::default();
    let from_file = scene.map_or(&empty, |s| &s.config);
    let s = Settings::default().layered(&[&builtin, from_file, flags]);
    s.chen().validate().map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(s)
}

pub fn run(cmd: Command, scene: Option<&Scene>, settings: &Settings) -> Result<Report, CliError> {
    let name = scene.map(|s| s.name.clone());
    let mut report = Report::new(cmd.name(), name, settings.clone());
    let need = || scene.ok_or_else(|| CliError::Schema(format!("{} needs a scenario file", cmd.name())));
    match cmd {
        Command::Holonomy => holonomy(need()?, settings, &mut report)?,
        Command::CheckRep => check_rep(need()?, settings, &mut report)?,
        Command::Cohomology => cohomology(need()?, settings, &mut report)?,
        Command::SphereDemo => sphere_demo(settings, &mut report)?,
        Command::VerifyAinfty => verify_ainfty(settings, &mut report),
    }
    Ok(report)
}

/// Integrated representation with the scene's perturbations applied.
fn integrated(scene: &Scene, settings: &Settings) -> Result<SimplicialRep<f64>, CliError> {
    let complex = scene.complex.clone().with_dim_cap(settings.dim_cap);
    let mut rep = integrate_rep(&complex, &settings.chen())?;
    for (s, m) in &scene.perturbations {
        let old = rep.value(s);
        let sum = old.to_dense() + m;
        let new = GradedMap::from_dense(old.source(), old.target(), old.degree(), &sum)?;
        if (new.to_dense() - &sum).amax() > 0.0 {
            return Err(CliError::Schema(format!(
                "perturbation on {s:?} has entries outside degree {}",
                old.degree()
            )));
        }
        rep.set_value(s, new)?;
    }
    Ok(rep)
}

fn holonomy_entries(scene: &Scene, rep: &SimplicialRep<f64>, cap: usize) -> Vec<HolonomyEntry> {
    let mut out = Vec::new();
    for k in 1..=scene.set().dim().min(cap) {
        for s in scene.set().simplices(k) {
            let v = rep.value(s);
            out.push(HolonomyEntry { simplex: s.clone(), degree: v.degree(), matrix: rows(&v.to_dense()) });
        }
    }
    out
}

fn label(s: &[usize]) -> String {
    let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
    parts.join("-")
}

fn holonomy(scene: &Scene, settings: &Settings, report: &mut Report) -> Result<(), CliError> {
    let rep = integrated(scene, settings)?;
    report.holonomies = holonomy_entries(scene, &rep, settings.dim_cap);
    let cfg = settings.chen();
    for e in scene.set().simplices(1) {
        let name = format!("ode.{}", label(e));
        let w = scene.complex.form(e).ok_or_else(|| CliError::Invariant(format!("no form on {e:?}")))?;
        let c = (|| -> Result<Check, CliError> {
            let p = iterint::oracles::TransportProblem::from_connection(w.form())?;
            let ode = iterint::oracles::parallel_transport_ode(&p, 256)?;
            let d = iterint::graded::op_norm(&(rep.value(e).to_dense() - ode.value));
            Ok(Check::at_most(name.clone(), d, 1e-6, CheckClass::Accuracy))
        })();
        report.push(c.unwrap_or_else(|e| Check::errored(name, &e)));
    }
    for (s, g) in &scene.gauges {
        let name = format!("gauge.{}", label(s));
        let w = scene.complex.form(s).ok_or_else(|| CliError::Invariant(format!("no form on {s:?}")))?;
        let c = (|| -> Result<Check, CliError> {
            let k = s.len() - 1;
            let lhs = hol_object(&gauge_act(w, g)?, &cfg)?.to_dense();
            let f0inv = g
                .at(&vec![0.0; k])?
                .try_inverse()
                .ok_or_else(|| CliError::Invariant(format!("gauge on {s:?} is singular at its first vertex")))?;
            let rhs = f0inv * hol_object(w, &cfg)?.to_dense() * g.at(&vec![1.0; k])?;
            Ok(Check::at_most(name.clone(), (lhs - rhs).amax(), 1e-6, CheckClass::Invariant))
        })();
        report.push(c.unwrap_or_else(|e| Check::errored(name, &e)));
    }
    for h in &scene.expect.holonomy {
        let got = rep.value(&h.simplex).to_dense();
        let want = Mat::from_fn(got.nrows(), got.ncols(), |r, c| h.matrix[r][c]);
        report.push(Check::at_most(
            format!("expect.{}", label(&h.simplex)),
            (got - want).amax(),
            h.tol,
            CheckClass::Accuracy,
        ));
    }
    Ok(())
}

fn check_rep(scene: &Scene, settings: &Settings, report: &mut Report) -> Result<(), CliError> {
    let rep = integrated(scene, settings)?;
    report.holonomies = holonomy_entries(scene, &rep, settings.dim_cap);
    report.extend(suites::rep_checks("", &rep));
    Ok(())
}

fn cohomology(scene: &Scene, settings: &Settings, report: &mut Report) -> Result<(), CliError> {
    let rep = integrated(scene, settings)?;
    report.extend(suites::rep_checks("", &rep));
    let top = scene.spaces.iter().flat_map(|v| v.degrees()).max().unwrap_or(0) + settings.dim_cap as i32;
    let h = twisted_cohomology(&rep, top)?;
    let lo = h.betti.keys().next().copied().unwrap_or(0).min(0);
    let values = h.betti_in(lo, top);
    if let Some(want) = &scene.expect.betti {
        let got = h.betti_in(want.from_degree, want.from_degree + want.values.len() as i32 - 1);
        let mismatch = got.iter().zip(&want.values).filter(|(a, b)| a != b).count();
        report.push(
            Check::new("expect.betti", mismatch as f64, Relation::Equal, 0.0, CheckClass::Invariant)
                .with_note(format!("got {got:?}, want {:?}", want.values)),
        );
    }
    report.betti = Some(Betti { from_degree: lo, values });
    Ok(())
}

fn sphere_demo(settings: &Settings, report: &mut Report) -> Result<(), CliError> {
    report.scenario = Some("octahedral sphere".into());
    let (checks, rep, betti) = suites::sphere(settings)?;
    let set = iterint::simplicial::FiniteSimplicialSet::octahedron();
    for s in set.simplices(2) {
        let v = rep.value(s);
        report.holonomies.push(HolonomyEntry { simplex: s.clone(), degree: v.degree(), matrix: rows(&v.to_dense()) });
    }
    report.betti = Some(Betti { from_degree: 0, values: betti });
    report.extend(checks);
    Ok(())
}

fn verify_ainfty(settings: &Settings, report: &mut Report) {
    report.extend(suites::psi_bar_relations(settings));
    report.extend(suites::functor_equations(settings));
    report.extend(suites::factorization(settings));
    report.extend(suites::theta_degree(settings));
    report.extend(suites::algebraic(settings));
}
