//! Built-in example catalog.
//!
//! Each entry carries its source tag, the scenario it expands to, the
//! expected verdict, and a set of reference assertions that are re-checked
//! on every run: the `example` task fails loudly if an expectation drifts.
//! Where the source displays a formula that disagrees with what the
//! conformal formulas and the oracle produce, the entry records both forms
//! as notes instead of asserting the displayed one.

use crate::curvature::ConformalMetric;
use crate::error::{Error, Result};
use crate::exprlang::parse;
use crate::grid::Grid;
use crate::prescribed::Tolerances;
use crate::report::{Report, Verdict};
use crate::scenario::{run, Scenario, Task, TensorSpec};
use crate::tensors::{kulkarni_nomizu, tensor_max_norm, SymBilinear};

pub struct CatalogEntry {
    pub id: &'static str,
    pub source_tag: &'static str,
    pub description: &'static str,
    pub expected_verdict: Verdict,
    scenario: fn() -> Scenario,
    /// extra notes recorded on every run (displayed-vs-derived remarks)
    notes: fn() -> Vec<String>,
    /// reference assertions; returns drift messages (empty = all good)
    check: fn(&Report) -> Vec<String>,
}

fn base_scenario(task: Task, n: usize) -> Scenario {
    Scenario {
        task,
        n,
        background: "1".to_string(),
        tensor: None,
        phi: None,
        base_point: vec![0.0; n],
        grid: Grid::new(vec![0.0; n], 2.0, 9),
        tolerances: Tolerances::default(),
        example_id: None,
    }
}

fn approx(x: f64, expected: f64, tol: f64, what: &str, drift: &mut Vec<String>) {
    if !((x - expected).abs() <= tol) {
        drift.push(format!("{what}: got {x}, expected {expected} (tol {tol})"));
    }
}

// --- corollary45-ex1: h = sinh(x1) ------------------------------------------

fn ex1_scenario() -> Scenario {
    let mut s = base_scenario(Task::Verify, 3);
    let f = "-(sinh(x1)^2)/2 * exp(2*cosh(x1) - 2)";
    let f_k = "(sinh(x1)^2 - 2*cosh(x1))/2 * exp(2*cosh(x1) - 2)";
    s.tensor = Some(TensorSpec::List(vec![
        f_k.to_string(),
        f.to_string(),
        f.to_string(),
    ]));
    s.phi = Some("exp(1 - cosh(x1))".to_string());
    s
}

fn ex1_notes() -> Vec<String> {
    vec![
        "antiderivatives are anchored at 0, so the factor is C e^{1 - cosh x1}; \
         the displayed C e^{-cosh x1} differs by a constant absorbed into C"
            .to_string(),
        "the source displays scalar curvature -(n-1) C e^{-cosh}(2 cosh^2 + (n-2) sinh^2); \
         recomputation from the conformal formulas gives \
         -(n-1) C^2 e^{-2 cosh}(2 cosh + (n-2) sinh^2); the report trusts the recomputation"
            .to_string(),
    ]
}

fn ex1_check(report: &Report) -> Vec<String> {
    let mut drift = Vec::new();
    approx(
        report.max_residual(),
        0.0,
        1e-10,
        "verify residual for the sinh generator",
        &mut drift,
    );
    // sectional curvatures from the oracle: K(i,j) = -C² sinh² e^{-2cosh},
    // K(i,k) = -C² cosh e^{-2cosh}, for the displayed (unanchored) factor
    let metric = ConformalMetric::euclidean(parse::<f64>("exp(-cosh(x1))", 3).unwrap());
    let t = 0.8f64;
    let p = [t, 0.3, -0.4];
    let w = (-2.0 * t.cosh()).exp();
    match metric.sectional(&p, 1, 2) {
        Ok(k) => approx(
            k,
            -t.sinh().powi(2) * w,
            1e-9,
            "K(d2,d3) for ex1",
            &mut drift,
        ),
        Err(e) => drift.push(format!("sectional computation failed: {e}")),
    }
    match metric.sectional(&p, 1, 0) {
        Ok(k) => approx(k, -t.cosh() * w, 1e-9, "K(d2,d1) for ex1", &mut drift),
        Err(e) => drift.push(format!("sectional computation failed: {e}")),
    }
    drift
}

// --- corollary45-ex2: h = 2x1/(1+x1^2) --------------------------------------

fn ex2_scenario() -> Scenario {
    let mut s = base_scenario(Task::Verify, 3);
    s.tensor = Some(TensorSpec::List(vec![
        "4*x1^2 - 2".to_string(),
        "-2*x1^2".to_string(),
        "-2*x1^2".to_string(),
    ]));
    s.phi = Some("1/(1+x1^2)".to_string());
    s
}

fn ex2_notes() -> Vec<String> {
    vec![
        "the source displays scalar curvature with denominator (1+x1^2)^2; \
         recomputation from the conformal formulas gives (1+x1^2)^4; \
         both agree at x1 = 0, where the value -4(n-1)C^2 = -8 is asserted"
            .to_string(),
    ]
}

fn ex2_check(report: &Report) -> Vec<String> {
    let mut drift = Vec::new();
    approx(
        report.max_residual(),
        0.0,
        1e-10,
        "verify residual for the rational generator",
        &mut drift,
    );
    let metric = ConformalMetric::euclidean(parse::<f64>("1/(1+x1^2)", 3).unwrap());
    match metric.scalar_curv(&[0.0, 0.0, 0.0]) {
        Ok(k) => approx(k, -8.0, 1e-9, "scalar curvature at the origin", &mut drift),
        Err(e) => drift.push(format!("scalar curvature failed: {e}")),
    }
    let p = [1.0, 0.0, 0.0];
    match metric.sectional(&p, 1, 2) {
        Ok(k) => approx(k, -0.25, 1e-9, "K(d2,d3) at x1 = 1", &mut drift),
        Err(e) => drift.push(format!("sectional failed: {e}")),
    }
    match metric.sectional(&p, 1, 0) {
        Ok(k) => approx(k, 0.0, 1e-9, "K(d2,d1) at x1 = 1", &mut drift),
        Err(e) => drift.push(format!("sectional failed: {e}")),
    }
    drift
}

// --- corollary45-ex3: h = 2x1 ------------------------------------------------

fn ex3_scenario() -> Scenario {
    let mut s = base_scenario(Task::Solve, 3);
    s.tensor = Some(TensorSpec::Generator {
        h: "2*x1".to_string(),
        k: 1,
        c: 1.0,
    });
    s
}

fn ex3_notes() -> Vec<String> {
    vec![
        "the factor is u = C e^{-x1^2}; the metric is complete (bounded factor)".to_string(),
        "the source displays the transverse Ricci component as -2(1 - 2(n-2)x1^2); \
         recomputation from the conformal formulas (confirmed by the oracle) gives \
         -2(1 + 2(n-2)x1^2), a sign flip on the x1^2 term; the axis component \
         -2(n-1) and the scalar curvature agree with the displayed forms"
            .to_string(),
    ]
}

fn ex3_check(report: &Report) -> Vec<String> {
    let mut drift = Vec::new();
    // Ricci of the factor: axis component -2(n-1) as displayed, transverse
    // component -2 - 4(n-2)t^2 (the displayed sign on t^2 is flipped)
    let metric = ConformalMetric::euclidean(parse::<f64>("exp(-x1^2)", 3).unwrap());
    let t = 0.8f64;
    match metric.ricci(&[t, 0.1, -0.3]) {
        Ok(ric) => {
            approx(
                ric.get(0, 0),
                -4.0,
                1e-9,
                "axis Ricci component",
                &mut drift,
            );
            approx(
                ric.get(1, 1),
                -2.0 - 4.0 * t * t,
                1e-9,
                "transverse Ricci component",
                &mut drift,
            );
        }
        Err(e) => drift.push(format!("ricci computation failed: {e}")),
    }
    match report.recovered_c {
        Some(c) => approx(c, 1.0, 1e-7, "recovered scale C", &mut drift),
        None => drift.push("no recovered scale in the report".to_string()),
    }
    if report.completeness.as_deref() != Some("complete") {
        drift.push(format!(
            "completeness flag: got {:?}, expected complete",
            report.completeness
        ));
    }
    match &report.table {
        Some(table) => {
            let phicol = table.columns.len() - 1;
            for row in &table.rows {
                let x = row[0];
                let expected = (-x * x).exp();
                if (row[phicol] - expected).abs() > 1e-6 {
                    drift.push(format!(
                        "factor at x1 = {x}: got {}, expected {expected}",
                        row[phicol]
                    ));
                }
            }
        }
        None => drift.push("no factor table in the report".to_string()),
    }
    drift
}

// --- theorem42-sphere and theorem42-sphere-singular --------------------------

fn sphere_scenario() -> Scenario {
    let mut s = base_scenario(Task::Classify, 3);
    s.tensor = Some(TensorSpec::Quadratic {
        a: 1.0,
        b: vec![0.0; 3],
        c: 1.0,
    });
    s
}

fn sphere_notes() -> Vec<String> {
    vec![
        "lambda = -4 < 0: the factor 1 + |x|^2 never vanishes and the metric is \
         globally defined with sectional curvature +4"
            .to_string(),
    ]
}

fn sphere_check(report: &Report) -> Vec<String> {
    let mut drift = Vec::new();
    match &report.recovered_family {
        Some(fam) => approx(fam.lambda, -4.0, 1e-12, "lambda", &mut drift),
        None => drift.push("no recovered family".to_string()),
    }
    match &report.singular_set {
        Some(s) if s.kind == "empty" => {}
        other => drift.push(format!("singular set: got {other:?}, expected empty")),
    }
    let metric = ConformalMetric::euclidean(parse::<f64>("1 + x1^2 + x2^2 + x3^2", 3).unwrap());
    match metric.sectional(&[0.4, -0.2, 0.7], 0, 1) {
        Ok(k) => approx(k, 4.0, 1e-9, "sectional curvature", &mut drift),
        Err(e) => drift.push(format!("sectional failed: {e}")),
    }
    drift
}

fn sphere_singular_scenario() -> Scenario {
    let mut s = base_scenario(Task::Classify, 3);
    s.tensor = Some(TensorSpec::Quadratic {
        a: 1.0,
        b: vec![0.0; 3],
        c: -1.0,
    });
    s
}

fn sphere_singular_notes() -> Vec<String> {
    vec!["lambda = 4 > 0 with a != 0: the factor vanishes on the unit sphere".to_string()]
}

fn sphere_singular_check(report: &Report) -> Vec<String> {
    let mut drift = Vec::new();
    match &report.singular_set {
        Some(s) if s.kind == "sphere" => {
            approx(
                s.radius.unwrap_or(f64::NAN),
                1.0,
                1e-12,
                "radius",
                &mut drift,
            );
        }
        other => drift.push(format!("singular set: got {other:?}, expected a sphere")),
    }
    drift
}

// --- theorem43-separable ------------------------------------------------------

fn separable_scenario() -> Scenario {
    let mut s = base_scenario(Task::Solve, 3);
    s.tensor = Some(TensorSpec::List(vec![
        "exp(x1)".to_string(),
        "exp(x2)".to_string(),
        "exp(x3)".to_string(),
    ]));
    s.grid = Grid::new(vec![0.0; 3], 2.0, 5);
    s
}

fn separable_notes() -> Vec<String> {
    vec![
        "each component depends only on its own variable, which forces a constant \
         factor and hence a vanishing tensor: no metric exists"
            .to_string(),
    ]
}

fn separable_check(report: &Report) -> Vec<String> {
    let mut drift = Vec::new();
    match &report.witness {
        Some(w) if w.witness == "theorem43" => {}
        other => drift.push(format!("witness: got {other:?}, expected theorem43")),
    }
    drift
}

// --- hyperbolic-halfspace ------------------------------------------------------

fn hyperbolic_scenario() -> Scenario {
    let mut s = base_scenario(Task::Solve, 3);
    s.background = "x3".to_string();
    s.tensor = Some(TensorSpec::List(vec![
        "-(2*x3^2-1)^2/(2*x3^2)*exp(2*x3^2)".to_string(),
        "-(2*x3^2-1)^2/(2*x3^2)*exp(2*x3^2)".to_string(),
        "(4*x3^4 - 8*x3^2 - 1)/(2*x3^2)*exp(2*x3^2)".to_string(),
    ]));
    s.base_point = vec![0.0, 0.0, 1.25];
    s.grid = Grid::new(vec![0.0, 0.0, 1.25], 0.75, 9);
    s
}

fn hyperbolic_notes() -> Vec<String> {
    vec![
        "the source's Example 1 displays this tensor with x3^4 denominators; the \
         oracle confirms R = T (*) g_hyp for the x3^2 form stored here, while the \
         displayed x3^4 form satisfies the euclidean pairing R = T (*) delta instead \
         (a uniform x3^2 factor separates the two)"
            .to_string(),
        "the source displays K(di,dn) = 2 x3^2 (2 x3^2 - 3) e^{-2 x3^2}; the oracle \
         confirms -(1 + 2 x3^2) e^{-2 x3^2} instead; the transverse sectional \
         -(1 - 2 x3^2)^2 e^{-2 x3^2} agrees with the displayed form"
            .to_string(),
        "the factor relative to the hyperbolic background is phi = e^{-x3^2}, \
         bounded, so the metric is complete on the upper half-space"
            .to_string(),
    ]
}

fn hyperbolic_check(report: &Report) -> Vec<String> {
    let mut drift = Vec::new();
    // sectional values: the oracle-confirmed forms, not the displayed ones
    let metric = ConformalMetric::new(
        parse::<f64>("x3", 3).unwrap(),
        parse::<f64>("exp(-x3^2)", 3).unwrap(),
    )
    .unwrap();
    for z in [0.6f64, 1.0, 1.5] {
        let p = [0.2, -0.1, z];
        let w = (-2.0 * z * z).exp();
        match metric.sectional(&p, 0, 2) {
            Ok(k) => approx(
                k,
                -(1.0 + 2.0 * z * z) * w,
                1e-9,
                "axis-plane sectional curvature",
                &mut drift,
            ),
            Err(e) => drift.push(format!("sectional failed: {e}")),
        }
        match metric.sectional(&p, 0, 1) {
            Ok(k) => approx(
                k,
                -(1.0 - 2.0 * z * z).powi(2) * w,
                1e-9,
                "transverse sectional curvature",
                &mut drift,
            ),
            Err(e) => drift.push(format!("sectional failed: {e}")),
        }
    }
    match &report.table {
        Some(table) => {
            let zcol = 2;
            let phicol = table.columns.len() - 1;
            for row in &table.rows {
                let z = row[zcol];
                let expected = (-z * z).exp();
                if (row[phicol] - expected).abs() > 1e-6 {
                    drift.push(format!(
                        "relative factor at x3 = {z}: got {}, expected {expected}",
                        row[phicol]
                    ));
                }
            }
        }
        None => drift.push("no factor table in the report".to_string()),
    }
    // oracle pairing check: the stored tensor matches the hyperbolic pairing
    let metric = ConformalMetric::new(
        parse::<f64>("x3", 3).unwrap(),
        parse::<f64>("exp(-x3^2)", 3).unwrap(),
    )
    .unwrap();
    let t_hyp: Vec<crate::Expr64> = hyperbolic_scenario()
        .tensor
        .map(|spec| match spec {
            TensorSpec::List(texts) => texts.iter().map(|t| parse::<f64>(t, 3).unwrap()).collect(),
            _ => unreachable!(),
        })
        .unwrap();
    for z in [0.5, 1.0, 1.6, 2.0] {
        let p = [0.2, -0.1, z];
        let oracle = match metric.riemann_oracle(&p) {
            Ok(r) => r,
            Err(e) => {
                drift.push(format!("oracle failed at {p:?}: {e}"));
                continue;
            }
        };
        let mut t_matrix = SymBilinear::zero(3);
        for (i, expr) in t_hyp.iter().enumerate() {
            t_matrix.set(i, i, expr.eval(&p).unwrap());
        }
        let g_hyp = SymBilinear::scaled_identity(3, 1.0 / (z * z));
        let paired = kulkarni_nomizu(&t_matrix, &g_hyp).unwrap();
        let diff = tensor_max_norm(&oracle.sub(&paired).unwrap());
        let scale = 1.0 + tensor_max_norm(&oracle);
        if diff > 1e-8 * scale {
            drift.push(format!(
                "hyperbolic pairing residual {diff:e} at x3 = {z} exceeds 1e-8"
            ));
        }
    }
    drift
}

// ---------------------------------------------------------------------------

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            id: "corollary45-ex1",
            source_tag: "Example 2(1)",
            description: "generator h = sinh(x1): factor C e^{1-cosh x1}, complete metric",
            expected_verdict: Verdict::Ok,
            scenario: ex1_scenario,
            notes: ex1_notes,
            check: ex1_check,
        },
        CatalogEntry {
            id: "corollary45-ex2",
            source_tag: "Example 2(2)",
            description: "generator h = 2x1/(1+x1^2): factor C/(1+x1^2), complete metric",
            expected_verdict: Verdict::Ok,
            scenario: ex2_scenario,
            notes: ex2_notes,
            check: ex2_check,
        },
        CatalogEntry {
            id: "corollary45-ex3",
            source_tag: "Example 2(3)",
            description: "generator h = 2x1: factor C e^{-x1^2}, complete metric",
            expected_verdict: Verdict::Solution,
            scenario: ex3_scenario,
            notes: ex3_notes,
            check: ex3_check,
        },
        CatalogEntry {
            id: "theorem42-sphere",
            source_tag: "Theorem 3.3, item (1)",
            description: "quadratic family (a, b, c) = (1, 0, 1): lambda = -4, empty singular set",
            expected_verdict: Verdict::Ok,
            scenario: sphere_scenario,
            notes: sphere_notes,
            check: sphere_check,
        },
        CatalogEntry {
            id: "theorem42-sphere-singular",
            source_tag: "Theorem 3.3, item 2(d)",
            description: "quadratic family (1, 0, -1): lambda = 4, unit-sphere singular set",
            expected_verdict: Verdict::Ok,
            scenario: sphere_singular_scenario,
            notes: sphere_singular_notes,
            check: sphere_singular_check,
        },
        CatalogEntry {
            id: "theorem43-separable",
            source_tag: "Theorem 3.4",
            description: "components f_i = e^{x_i}: provably no conformal metric",
            expected_verdict: Verdict::NonExistent,
            scenario: separable_scenario,
            notes: separable_notes,
            check: separable_check,
        },
        CatalogEntry {
            id: "hyperbolic-halfspace",
            source_tag: "Example 1",
            description: "background F = x3 (hyperbolic half-space), factor e^{-x3^2}",
            expected_verdict: Verdict::Solution,
            scenario: hyperbolic_scenario,
            notes: hyperbolic_notes,
            check: hyperbolic_check,
        },
    ]
}

pub fn find(id: &str) -> Result<CatalogEntry> {
    entries()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownExample(id.to_string()))
}

/// The preloaded scenario for an example id, tagged as an example task.
pub fn scenario_for(id: &str) -> Result<Scenario> {
    let entry = find(id)?;
    let mut s = (entry.scenario)();
    s.task = Task::Example;
    s.example_id = Some(id.to_string());
    Ok(s)
}

/// Execute a catalog entry with its reference assertions.
pub fn run_example(id: &str) -> Report {
    let entry = match find(id) {
        Ok(e) => e,
        Err(e) => {
            let mut report = Report::new("example", 0);
            report.errors.push(e.to_string());
            return report;
        }
    };
    let inner = (entry.scenario)();
    let mut report = run(&inner);
    report.task = format!("example:{id}");
    report
        .notes
        .insert(0, format!("source: {}", entry.source_tag));
    for note in (entry.notes)() {
        report.notes.push(note);
    }
    let mut drift = Vec::new();
    if report.verdict != entry.expected_verdict {
        drift.push(format!(
            "verdict drifted: got {}, expected {}",
            report.verdict.as_str(),
            entry.expected_verdict.as_str()
        ));
    }
    drift.extend((entry.check)(&report));
    if drift.is_empty() {
        report
            .notes
            .push("all catalog expectations hold".to_string());
    } else {
        report.errors.extend(drift);
        report.verdict = Verdict::Mismatch;
    }
    report
}
