//! Identity suite: every operator and observable invariant on one embedding,
//! reported as named checks with their largest defect.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sembed::discrete_ops::{
    assemble_s_laplacian, check_discrete_integral, check_s_positivity, d_s, dbar_s, reconstruct_quad_field, VertexField,
};
use sembed::fkmodel::{build_h, exact_f, observable_squares, FkDomain};
use sembed::sembedding::{weight_from_ratio, LorentzMap, SEmbedding, WeightFormula};
use sembed::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub defect: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// where the largest defect occurred
    pub location: String,
}

impl Check {
    /// Passes when `defect ≤ tolerance`.
    fn at_most(name: &str, defect: f64, tolerance: f64, location: String) -> Self {
        Self { name: name.into(), defect, tolerance, passed: defect <= tolerance, location }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdentityReport {
    pub checks: Vec<Check>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `name,defect,tolerance,passed,location` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,defect,tolerance,passed,location\n");
        for c in &self.checks {
            let _ = writeln!(s, "{},{:e},{:e},{},{}", c.name, c.defect, c.tolerance, c.passed, c.location);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    /// random Lorentz maps for the invariance check
    pub boosts: usize,
    pub max_beta: f64,
    pub seed: u64,
    /// run the exact-observable checks when the domain has at most this many free edges
    pub exact_cap: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { boosts: 20, max_beta: 0.5, seed: 1, exact_cap: 12 }
    }
}

fn argmax<I: IntoIterator<Item = (String, f64)>>(it: I) -> (f64, String) {
    it.into_iter().fold((0.0, String::from("-")), |(m, at), (loc, x)| if x > m { (x, loc) } else { (m, at) })
}

/// Operator checks on `embedding`; observable checks on `domain` when given
/// and under the enumeration cap. `weights`, when given, are compared with
/// the weights implied by the geometry under the domain's weight formula.
pub fn run_identity_suite(
    embedding: &SEmbedding,
    domain: Option<&FkDomain>,
    weights: Option<&[f64]>,
    opts: &SuiteOptions,
) -> IdentityReport {
    let mut checks = Vec::new();
    let g = embedding.graph();
    let n = g.n_vertices();

    let formula = domain.map_or(WeightFormula::default(), |d| d.weight_formula());
    if let Some(w) = weights {
        let expected = embedding.weights_with(formula);
        let (d, at) =
            argmax(w.iter().zip(&expected).enumerate().map(|(q, (a, b))| (format!("quad {q}"), (a - b).abs())));
        checks.push(Check::at_most("weights", d, 1e-12, at));
    } else {
        // recompute from the distance ratio as an internal consistency check
        let (d, at) = argmax((0..g.quads().len()).map(|q| {
            let r = embedding.distance_ratio(q);
            let x = match formula {
                WeightFormula::AsPrinted => weight_from_ratio(r),
                WeightFormula::SquareRoot => weight_from_ratio(r.sqrt()),
            };
            (format!("quad {q}"), (x - embedding.weights_with(formula)[q]).abs())
        }));
        checks.push(Check::at_most("weights", d, 1e-12, at));
    }

    let fields = [
        ("kernel_one", VertexField::constant(n, C64::new(1.0, 0.0))),
        ("kernel_s", VertexField::new(embedding.positions().to_vec())),
        ("kernel_q", VertexField::real(embedding.lifts())),
    ];
    for (name, f) in fields {
        match dbar_s(embedding, &f) {
            Ok(r) => {
                let (d, at) = argmax(r.values.iter().enumerate().map(|(q, z)| (format!("quad {q}"), z.norm())));
                checks.push(Check::at_most(name, d, 1e-10, at));
            }
            Err(e) => checks.push(Check {
                name: name.into(),
                defect: f64::INFINITY,
                tolerance: 1e-10,
                passed: false,
                location: e.to_string(),
            }),
        }
    }

    let interior = g.interior_vertices();
    if !interior.is_empty() {
        match assemble_s_laplacian(embedding, &interior) {
            Ok(lap) => {
                checks.push(Check::at_most("laplacian_real", lap.max_imag(), 1e-10, "-".into()));
                let (d, at) = argmax(lap.rows().iter().flat_map(|&v| {
                    let lap = &lap;
                    lap.stencil(v)
                        .unwrap()
                        .iter()
                        .filter(|(u, _)| lap.stencil(*u).is_some())
                        .map(move |&(u, x)| (format!("rows {v},{u}"), (x - lap.entry(u, v)).abs()))
                }));
                checks.push(Check::at_most("laplacian_symmetric", d, 1e-10, at));
                let kernel = [
                    embedding.positions().iter().map(|z| z.re).collect::<Vec<_>>(),
                    embedding.positions().iter().map(|z| z.im).collect(),
                    embedding.lifts().to_vec(),
                    vec![1.0; n],
                ];
                let d = kernel.iter().flat_map(|f| lap.apply(f)).fold(0.0f64, |m, x| m.max(x.abs()));
                checks.push(Check::at_most("laplacian_kernel", d, 1e-8, "-".into()));
                checks.push(lorentz_check(embedding, &interior, &lap, opts));
            }
            Err(e) => checks.push(Check {
                name: "laplacian".into(),
                defect: f64::INFINITY,
                tolerance: 0.0,
                passed: false,
                location: e.to_string(),
            }),
        }
    }

    if let Some(d) = domain {
        if d.n_free() <= opts.exact_cap {
            observable_checks(embedding, d, opts, &mut checks);
        }
    }
    IdentityReport { checks }
}

fn lorentz_check(
    embedding: &SEmbedding,
    interior: &[usize],
    lap: &sembed::discrete_ops::SLaplacian,
    opts: &SuiteOptions,
) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale = lap.rows().iter().flat_map(|&v| lap.stencil(v).unwrap().iter().map(|e| e.1.abs())).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut at = String::from("-");
    let mut failed = 0;
    let mut folded = 0;
    for k in 0..opts.boosts {
        let map = LorentzMap::random(&mut rng, opts.max_beta);
        // the projected quads of a boosted curved embedding may turn non-convex;
        // the operator is still defined and must still agree
        let Ok(other) = embedding.isometric_image(&map) else {
            failed += 1;
            continue;
        };
        folded += usize::from(other.check_proper().is_err());
        let Ok(l2) = assemble_s_laplacian(&other, interior) else {
            failed += 1;
            continue;
        };
        for &v in lap.rows() {
            for &(u, x) in lap.stencil(v).unwrap() {
                let d = (x - l2.entry(v, u)).abs() / scale;
                if d > worst {
                    worst = d;
                    at = format!("map {k}, rows {v},{u}");
                }
            }
        }
    }
    let mut c = Check::at_most("laplacian_lorentz", worst, 1e-8, at);
    if folded > 0 {
        c.location = format!("{}; {folded} of {} images not proper", c.location, opts.boosts);
    }
    if failed > 0 {
        c.passed = false;
        c.location = format!("{failed} of {} maps gave no embedding", opts.boosts);
    }
    c
}

fn observable_checks(embedding: &SEmbedding, d: &FkDomain, opts: &SuiteOptions, checks: &mut Vec<Check>) {
    let f = match exact_f(d, opts.exact_cap) {
        Ok(f) => f,
        Err(e) => {
            checks.push(Check {
                name: "exact_f".into(),
                defect: f64::INFINITY,
                tolerance: 0.0,
                passed: false,
                location: e.to_string(),
            });
            return;
        }
    };
    checks.push(Check::at_most("f_on_lines", f.max_line_residual(), 1e-12, "-".into()));
    let x2 = observable_squares(d, &f);
    let (p, at) = argmax((0..d.quads().len()).map(|q| {
        let cs = embedding.graph().quad_corners(q);
        (format!("quad {q}"), (x2[cs[0]] + x2[cs[2]] - x2[cs[1]] - x2[cs[3]]).norm())
    }));
    checks.push(Check::at_most("propagation_of_squares", p, 1e-12, at));
    let (fe, residual) = match reconstruct_quad_field(embedding, &f) {
        Ok(r) => r,
        Err(e) => {
            checks.push(Check {
                name: "reconstruction".into(),
                defect: f64::INFINITY,
                tolerance: 1e-10,
                passed: false,
                location: e.to_string(),
            });
            return;
        }
    };
    checks.push(Check::at_most("reconstruction", residual, 1e-10, "-".into()));
    let h = match build_h(d, &f, f64::INFINITY) {
        Ok(h) => h,
        Err(e) => {
            checks.push(Check {
                name: "h".into(),
                defect: f64::INFINITY,
                tolerance: 0.0,
                passed: false,
                location: e.to_string(),
            });
            return;
        }
    };
    let hb = d.boundary();
    let (bd, at) = argmax(
        hb.dual_arc
            .iter()
            .map(|&v| (format!("vertex {v}"), h.values[v].norm()))
            .chain(hb.primal_arc.iter().map(|&v| (format!("vertex {v}"), (h.values[v] - 1.0).norm()))),
    );
    checks.push(Check::at_most("h_boundary", bd, 1e-10, at));
    let (hm, at) = argmax(h.values.iter().enumerate().map(|(v, z)| (format!("vertex {v}"), (z.norm() - 1.0).max(0.0))));
    checks.push(Check::at_most("h_bound", hm, 1e-10, at));
    match d_s(embedding, &h) {
        Ok(dsh) => {
            let (x, at) = argmax((0..fe.values.len()).map(|q| {
                let target = fe.values[q] * fe.values[q] / C64::new(0.0, 4.0);
                (format!("quad {q}"), (dsh.values[q] - target).norm())
            }));
            checks.push(Check::at_most("ds_h", x, 1e-10, at));
        }
        Err(e) => checks.push(Check {
            name: "ds_h".into(),
            defect: f64::INFINITY,
            tolerance: 1e-10,
            passed: false,
            location: e.to_string(),
        }),
    }
    checks.push(Check::at_most("discrete_integral", check_discrete_integral(embedding, &fe, &h), 1e-10, "-".into()));
    let interior = embedding.graph().interior_vertices();
    if !interior.is_empty() {
        if let Ok(lap) = assemble_s_laplacian(embedding, &interior) {
            let m = check_s_positivity(&lap, &VertexField::new(h.values.clone()));
            checks.push(Check::at_most("s_positivity", (-m).max(0.0), 1e-10, "-".into()));
        }
    }
}
