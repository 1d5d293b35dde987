//! Scenario files: the JSON task descriptions the CLI consumes.
//!
//! Parsing is strict: unknown keys are rejected with their path, exactly one
//! tensor description form may be present, and task-specific required fields
//! are enforced up front. Missing optional fields get the documented
//! defaults (grid centered at the origin with half-width 2 and 9 points per
//! axis, tolerances 1e-8 / 1e-4 / 1e-10, base point at the grid center).

use std::path::Path;
use std::sync::Arc;

use serde_json::Value;

use crate::curvature::ConformalMetric;
use crate::error::{Error, Result};
use crate::exprlang::{parse, ScalarExpr};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::prescribed::quadratic::{
    theorem42_classify, theorem42_detect, DetectOutcome, QuadraticFamily, SingularSet,
};
use crate::prescribed::single_variable::{completeness_flag, corollary45_construct, Completeness};
use crate::prescribed::{
    solve, theorem46_lift, verify, DiagonalTensorField, LiftOutcome, Outcome, PrescribedProblem,
    Tolerances,
};
use crate::report::{Report, ResidualEntry, SingularSetEntry, Table, Verdict, WitnessEntry};

/// Default probe interval and bound for the completeness criterion.
const COMPLETENESS_PROBE: (f64, f64) = (-10.0, 10.0);
const COMPLETENESS_BOUND: f64 = 50.0;
const COMPLETENESS_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Verify,
    Solve,
    Classify,
    Curvature,
    Example,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Verify => "verify",
            Task::Solve => "solve",
            Task::Classify => "classify",
            Task::Curvature => "curvature",
            Task::Example => "example",
        }
    }

    fn from_str(s: &str) -> Result<Task> {
        Ok(match s {
            "verify" => Task::Verify,
            "solve" => Task::Solve,
            "classify" => Task::Classify,
            "curvature" => Task::Curvature,
            "example" => Task::Example,
            other => return Err(Error::schema("task", format!("unknown task `{other}`"))),
        })
    }
}

/// One of the four tensor description forms.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorSpec {
    /// n expression texts, one per axis
    List(Vec<String>),
    /// transverse component f, axis component f_k, one-based axis k
    SingleVariable { f: String, f_k: String, k: usize },
    /// generator h with one-based axis k and scale C
    Generator { h: String, k: usize, c: f64 },
    /// quadratic family parameters
    Quadratic { a: f64, b: Vec<f64>, c: f64 },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub task: Task,
    pub n: usize,
    pub background: String,
    pub tensor: Option<TensorSpec>,
    pub phi: Option<String>,
    pub base_point: Vec<f64>,
    pub grid: Grid<f64>,
    pub tolerances: Tolerances<f64>,
    pub example_id: Option<String>,
}

// ---------------------------------------------------------------------------
// Strict JSON parsing
// ---------------------------------------------------------------------------

fn expect_object<'v>(v: &'v Value, path: &str) -> Result<&'v serde_json::Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::schema(path, "expected an object"))
}

fn get_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::schema(path, "expected a number"))
}

fn get_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::schema(path, "expected a nonnegative integer"))
}

fn get_str(v: &Value, path: &str) -> Result<String> {
    v.as_str()
        .map(|s| s.to_string())
        .ok_or_else(|| Error::schema(path, "expected a string"))
}

fn get_f64_vec(v: &Value, path: &str, n: usize) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected an array of numbers"))?;
    if arr.len() != n {
        return Err(Error::schema(
            path,
            format!("expected {n} entries, got {}", arr.len()),
        ));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| get_f64(x, &format!("{path}[{i}]")))
        .collect()
}

fn check_keys(map: &serde_json::Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            let full = if path.is_empty() {
                key.clone()
            } else {
                format!("{path}.{key}")
            };
            return Err(Error::schema(full, "unknown key"));
        }
    }
    Ok(())
}

fn parse_tensor_spec(v: &Value, n: usize) -> Result<TensorSpec> {
    if let Some(arr) = v.as_array() {
        if arr.len() != n {
            return Err(Error::schema(
                "tensor",
                format!("expected {n} component expressions, got {}", arr.len()),
            ));
        }
        let list: Result<Vec<String>> = arr
            .iter()
            .enumerate()
            .map(|(i, x)| get_str(x, &format!("tensor[{i}]")))
            .collect();
        return Ok(TensorSpec::List(list?));
    }
    let map = expect_object(v, "tensor")?;
    let has = |k: &str| map.contains_key(k);
    let forms = [
        has("list"),
        has("f") || has("f_k"),
        has("h") || has("C"),
        has("a") || has("b") || has("c"),
    ];
    if forms.iter().filter(|&&b| b).count() != 1 {
        return Err(Error::schema(
            "tensor",
            "exactly one tensor description form must be present \
             (a list, {f, f_k, k}, {h, k, C} or {a, b, c})",
        ));
    }
    if has("list") {
        check_keys(map, &["list"], "tensor")?;
        return parse_tensor_spec(&map["list"], n);
    }
    if has("f") {
        check_keys(map, &["f", "f_k", "k"], "tensor")?;
        let f = get_str(
            map.get("f")
                .ok_or_else(|| Error::schema("tensor.f", "missing"))?,
            "tensor.f",
        )?;
        let f_k = get_str(
            map.get("f_k")
                .ok_or_else(|| Error::schema("tensor.f_k", "missing"))?,
            "tensor.f_k",
        )?;
        let k = get_usize(
            map.get("k")
                .ok_or_else(|| Error::schema("tensor.k", "missing"))?,
            "tensor.k",
        )?;
        if k == 0 || k > n {
            return Err(Error::schema(
                "tensor.k",
                format!("axis must be in 1..={n}"),
            ));
        }
        return Ok(TensorSpec::SingleVariable { f, f_k, k });
    }
    if has("h") {
        check_keys(map, &["h", "k", "C"], "tensor")?;
        let h = get_str(
            map.get("h")
                .ok_or_else(|| Error::schema("tensor.h", "missing"))?,
            "tensor.h",
        )?;
        let k = get_usize(
            map.get("k")
                .ok_or_else(|| Error::schema("tensor.k", "missing"))?,
            "tensor.k",
        )?;
        if k == 0 || k > n {
            return Err(Error::schema(
                "tensor.k",
                format!("axis must be in 1..={n}"),
            ));
        }
        let c = get_f64(
            map.get("C")
                .ok_or_else(|| Error::schema("tensor.C", "missing"))?,
            "tensor.C",
        )?;
        if !(c > 0.0) {
            return Err(Error::schema("tensor.C", "scale must be positive"));
        }
        return Ok(TensorSpec::Generator { h, k, c });
    }
    check_keys(map, &["a", "b", "c"], "tensor")?;
    let a = get_f64(
        map.get("a")
            .ok_or_else(|| Error::schema("tensor.a", "missing"))?,
        "tensor.a",
    )?;
    let b = get_f64_vec(
        map.get("b")
            .ok_or_else(|| Error::schema("tensor.b", "missing"))?,
        "tensor.b",
        n,
    )?;
    let c = get_f64(
        map.get("c")
            .ok_or_else(|| Error::schema("tensor.c", "missing"))?,
        "tensor.c",
    )?;
    Ok(TensorSpec::Quadratic { a, b, c })
}

/// Parse scenario JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::schema("", format!("invalid JSON: {e}")))?;
    let map = expect_object(&root, "")?;
    check_keys(
        map,
        &[
            "schema_version",
            "task",
            "n",
            "background",
            "tensor",
            "phi",
            "base_point",
            "grid",
            "tolerances",
            "example_id",
        ],
        "",
    )?;
    let version = get_usize(
        map.get("schema_version")
            .ok_or_else(|| Error::schema("schema_version", "missing"))?,
        "schema_version",
    )?;
    if version != 1 {
        return Err(Error::schema(
            "schema_version",
            format!("unsupported version {version}"),
        ));
    }
    let task = Task::from_str(&get_str(
        map.get("task")
            .ok_or_else(|| Error::schema("task", "missing"))?,
        "task",
    )?)?;

    if task == Task::Example {
        check_keys(map, &["schema_version", "task", "example_id"], "")?;
        let id = get_str(
            map.get("example_id")
                .ok_or_else(|| Error::schema("example_id", "missing for the example task"))?,
            "example_id",
        )?;
        return crate::catalog::scenario_for(&id);
    }

    let n = get_usize(
        map.get("n").ok_or_else(|| Error::schema("n", "missing"))?,
        "n",
    )?;
    if n < 3 {
        return Err(Error::schema("n", "dimension must be at least 3"));
    }

    let background = match map.get("background") {
        Some(v) => get_str(v, "background")?,
        None => "1".to_string(),
    };

    let grid = match map.get("grid") {
        Some(v) => {
            let gmap = expect_object(v, "grid")?;
            check_keys(gmap, &["center", "half_width", "points_per_axis"], "grid")?;
            let center = match gmap.get("center") {
                Some(c) => get_f64_vec(c, "grid.center", n)?,
                None => vec![0.0; n],
            };
            let half_width = match gmap.get("half_width") {
                Some(h) => get_f64(h, "grid.half_width")?,
                None => 2.0,
            };
            if !(half_width > 0.0) {
                return Err(Error::schema("grid.half_width", "must be positive"));
            }
            let ppa = match gmap.get("points_per_axis") {
                Some(p) => get_usize(p, "grid.points_per_axis")?,
                None => 9,
            };
            if ppa < 3 || ppa % 2 == 0 {
                return Err(Error::schema(
                    "grid.points_per_axis",
                    "must be an odd integer >= 3",
                ));
            }
            Grid::new(center, half_width, ppa)
        }
        None => Grid::new(vec![0.0; n], 2.0, 9),
    };

    let base_point = match map.get("base_point") {
        Some(v) => get_f64_vec(v, "base_point", n)?,
        None => grid.center().to_vec(),
    };

    let tolerances = match map.get("tolerances") {
        Some(v) => {
            let tmap = expect_object(v, "tolerances")?;
            check_keys(tmap, &["accept", "reject", "quadrature"], "tolerances")?;
            let accept = tmap
                .get("accept")
                .map(|x| get_f64(x, "tolerances.accept"))
                .transpose()?
                .unwrap_or(1e-8);
            let reject = tmap
                .get("reject")
                .map(|x| get_f64(x, "tolerances.reject"))
                .transpose()?
                .unwrap_or(1e-4);
            let quadrature = tmap
                .get("quadrature")
                .map(|x| get_f64(x, "tolerances.quadrature"))
                .transpose()?
                .unwrap_or(1e-10);
            if !(accept > 0.0 && reject > accept) {
                return Err(Error::schema("tolerances", "require 0 < accept < reject"));
            }
            Tolerances {
                accept,
                reject,
                quadrature,
            }
        }
        None => Tolerances::default(),
    };

    let tensor = map
        .get("tensor")
        .map(|v| parse_tensor_spec(v, n))
        .transpose()?;
    let phi = map.get("phi").map(|v| get_str(v, "phi")).transpose()?;
    let example_id = map
        .get("example_id")
        .map(|v| get_str(v, "example_id"))
        .transpose()?;

    // task-specific requirements
    match task {
        Task::Verify | Task::Solve | Task::Classify => {
            if tensor.is_none() {
                return Err(Error::schema("tensor", "required for this task"));
            }
        }
        Task::Curvature => {}
        Task::Example => unreachable!(),
    }
    if matches!(task, Task::Verify | Task::Curvature) && phi.is_none() {
        return Err(Error::schema("phi", "required for this task"));
    }

    Ok(Scenario {
        task,
        n,
        background,
        tensor,
        phi,
        base_point,
        grid,
        tolerances,
        example_id,
    })
}

/// Load a scenario from a file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

/// Build the tensor field a spec describes, plus any notes worth reporting
/// (the generator form also yields its factor and completeness flag).
pub struct MaterializedTensor {
    pub field: DiagonalTensorField<f64>,
    pub generator_factor: Option<Arc<dyn ScalarField<f64>>>,
    pub completeness: Option<Completeness>,
}

pub fn materialize_tensor(
    spec: &TensorSpec,
    n: usize,
    quad_tol: f64,
) -> Result<MaterializedTensor> {
    match spec {
        TensorSpec::List(texts) => {
            let exprs: Result<Vec<ScalarExpr<f64>>> = texts.iter().map(|t| parse(t, n)).collect();
            Ok(MaterializedTensor {
                field: DiagonalTensorField::from_exprs(exprs?)?,
                generator_factor: None,
                completeness: None,
            })
        }
        TensorSpec::SingleVariable { f, f_k, k } => {
            let axis = k - 1;
            let f = parse::<f64>(f, n)?;
            let f_k = parse::<f64>(f_k, n)?;
            let components: Vec<ScalarExpr<f64>> = (0..n)
                .map(|i| if i == axis { f_k.clone() } else { f.clone() })
                .collect();
            Ok(MaterializedTensor {
                field: DiagonalTensorField::from_exprs(components)?,
                generator_factor: None,
                completeness: None,
            })
        }
        TensorSpec::Generator { h, k, c } => {
            let axis = k - 1;
            let h_expr = parse::<f64>(h, n)?;
            let (field, factor) = corollary45_construct(&h_expr, axis, *c, quad_tol)?;
            let completeness = completeness_flag(
                &h_expr,
                axis,
                COMPLETENESS_PROBE,
                COMPLETENESS_BOUND,
                COMPLETENESS_SAMPLES,
            )?;
            Ok(MaterializedTensor {
                field,
                generator_factor: Some(factor as Arc<dyn ScalarField<f64>>),
                completeness: Some(completeness),
            })
        }
        TensorSpec::Quadratic { a, b, c } => {
            let fam = QuadraticFamily {
                a: *a,
                b: b.clone(),
                c: *c,
            };
            let f = fam.component_expr()?;
            let components = vec![f; n];
            Ok(MaterializedTensor {
                field: DiagonalTensorField::from_exprs(components)?,
                generator_factor: None,
                completeness: None,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

fn verdict_from_max(max: f64, tol: &Tolerances<f64>) -> Verdict {
    if max <= tol.accept {
        Verdict::Ok
    } else if max >= tol.reject {
        Verdict::Mismatch
    } else {
        Verdict::Indeterminate
    }
}

fn singular_entry(set: &SingularSet<f64>) -> SingularSetEntry {
    match set {
        SingularSet::Empty => SingularSetEntry {
            kind: "empty".to_string(),
            center: None,
            radius: None,
            normal: None,
            offset: None,
        },
        SingularSet::Point(center) => SingularSetEntry {
            kind: "point".to_string(),
            center: Some(center.clone()),
            radius: None,
            normal: None,
            offset: None,
        },
        SingularSet::Hyperplane { normal, offset } => SingularSetEntry {
            kind: "hyperplane".to_string(),
            center: None,
            radius: None,
            normal: Some(normal.clone()),
            offset: Some(*offset),
        },
        SingularSet::Sphere { center, radius } => SingularSetEntry {
            kind: "sphere".to_string(),
            center: Some(center.clone()),
            radius: Some(*radius),
            normal: None,
            offset: None,
        },
    }
}

/// Execute a scenario. Operational errors are folded into the report rather
/// than escaping: the report's `errors` list is the crash boundary.
pub fn run(scenario: &Scenario) -> Report {
    let task = scenario.task;
    if task == Task::Example {
        // parse_scenario resolves example ids to concrete scenarios; an
        // example task can only reach here through catalog execution
        return crate::catalog::run_example(scenario.example_id.as_deref().unwrap_or_default());
    }
    let mut report = Report::new(task.as_str(), scenario.n);
    match run_inner(scenario, &mut report) {
        Ok(()) => {}
        Err(e) => {
            report.errors.push(e.to_string());
            report.verdict = Verdict::Indeterminate;
        }
    }
    report
}

fn run_inner(scenario: &Scenario, report: &mut Report) -> Result<()> {
    let n = scenario.n;
    let tol = scenario.tolerances;
    let background = parse::<f64>(&scenario.background, n)?;
    let flat_background = scenario.background.trim() == "1";

    match scenario.task {
        Task::Verify => {
            let mat = materialize_tensor(
                scenario.tensor.as_ref().expect("validated"),
                n,
                tol.quadrature,
            )?;
            let phi_text = scenario.phi.as_ref().expect("validated");
            let phi = parse::<f64>(phi_text, n)?;
            let tensor = if flat_background {
                mat.field
            } else {
                // verify against a curved background via the effective tensor
                let shifted = (0..n)
                    .map(|i| {
                        Arc::new(crate::field::QuotientBySquare::new(
                            mat.field.component_arc(i),
                            background.clone(),
                        )) as Arc<dyn ScalarField<f64>>
                    })
                    .collect();
                DiagonalTensorField::from_fields(shifted)?
            };
            let phi_total: Arc<dyn ScalarField<f64>> = if flat_background {
                Arc::new(phi)
            } else {
                // the governing system constrains u = phi_rel * F
                Arc::new(ProductField {
                    a: Arc::new(phi),
                    b: Arc::new(background.clone()),
                })
            };
            let problem = PrescribedProblem {
                tensor: Arc::new(tensor),
                base_point: scenario.base_point.clone(),
                grid: scenario.grid.clone(),
                tol,
            };
            let stats = verify(&problem, phi_total.as_ref())?;
            report.residuals = stats.into_iter().map(ResidualEntry::from).collect();
            report.verdict = verdict_from_max(report.max_residual(), &tol);
            if let Some(c) = mat.completeness {
                report.completeness = Some(completeness_label(c).to_string());
            }
        }
        Task::Solve => {
            let mat = materialize_tensor(
                scenario.tensor.as_ref().expect("validated"),
                n,
                tol.quadrature,
            )?;
            if let Some(c) = mat.completeness {
                report.completeness = Some(completeness_label(c).to_string());
            }
            if flat_background {
                let problem = PrescribedProblem {
                    tensor: Arc::new(mat.field),
                    base_point: scenario.base_point.clone(),
                    grid: scenario.grid.clone(),
                    tol,
                };
                match solve(&problem)? {
                    Outcome::Solution(s) => {
                        report.verdict = Verdict::Solution;
                        report.recovered_c = Some(s.scale);
                        report.residuals = s
                            .residuals
                            .iter()
                            .cloned()
                            .map(ResidualEntry::from)
                            .collect();
                        report.table = Some(factor_table(&problem, |q| s.phi_at(q))?);
                    }
                    Outcome::NonExistence(w) => {
                        report.verdict = Verdict::NonExistent;
                        report.witness = Some(WitnessEntry {
                            witness: w.witness.label(),
                            location: w.location,
                            magnitude: w.magnitude,
                        });
                    }
                    Outcome::Indeterminate(ind) => {
                        report.verdict = Verdict::Indeterminate;
                        report.notes.push(ind.note.clone());
                        report.witness = Some(WitnessEntry {
                            witness: "indeterminate".to_string(),
                            location: ind.location,
                            magnitude: ind.residual,
                        });
                    }
                }
            } else {
                let problem_grid = scenario.grid.clone();
                match theorem46_lift(
                    &background,
                    &mat.field,
                    scenario.base_point.clone(),
                    problem_grid.clone(),
                    tol,
                )? {
                    LiftOutcome::Solution(lift) => {
                        report.verdict = Verdict::Solution;
                        report.recovered_c = Some(lift.solution.scale);
                        report.residuals = lift
                            .solution
                            .residuals
                            .iter()
                            .cloned()
                            .map(ResidualEntry::from)
                            .collect();
                        let problem = PrescribedProblem {
                            tensor: Arc::new(mat.field),
                            base_point: scenario.base_point.clone(),
                            grid: problem_grid,
                            tol,
                        };
                        report.table = Some(factor_table(&problem, |q| lift.phi_rel_at(q))?);
                        report
                            .notes
                            .push("table lists the relative factor phi = u/F".to_string());
                    }
                    LiftOutcome::NonExistence(w) => {
                        report.verdict = Verdict::NonExistent;
                        report.witness = Some(WitnessEntry {
                            witness: w.witness.label(),
                            location: w.location,
                            magnitude: w.magnitude,
                        });
                    }
                    LiftOutcome::Indeterminate(ind) => {
                        report.verdict = Verdict::Indeterminate;
                        report.notes.push(ind.note.clone());
                    }
                }
            }
        }
        Task::Classify => {
            let spec = scenario.tensor.as_ref().expect("validated");
            match spec {
                TensorSpec::Quadratic { a, b, c } => {
                    let fam = QuadraticFamily {
                        a: *a,
                        b: b.clone(),
                        c: *c,
                    };
                    if *a == 0.0 && *c == 0.0 && b.iter().all(|&x| x == 0.0) {
                        return Err(Error::DegenerateFamily);
                    }
                    report.verdict = Verdict::Ok;
                    report.recovered_family = Some(crate::report::RecoveredFamily {
                        a: fam.a,
                        b: fam.b.clone(),
                        c: fam.c,
                        lambda: fam.lambda(),
                    });
                    report.singular_set = Some(singular_entry(&theorem42_classify(&fam)));
                }
                TensorSpec::List(texts) => {
                    let f = parse::<f64>(&texts[0], n)?;
                    // the family applies to isotropic tensors only
                    let mut max_dev: f64 = 0.0;
                    for text in &texts[1..] {
                        let other = parse::<f64>(text, n)?;
                        for p in scenario.grid.points() {
                            let a = f.eval(&p)?;
                            let b = other.eval(&p)?;
                            max_dev = max_dev.max((a - b).abs() / (1.0 + a.abs()));
                        }
                    }
                    if max_dev > tol.accept {
                        report.verdict = Verdict::Mismatch;
                        report.notes.push(format!(
                            "components differ by {max_dev:e}: not an isotropic tensor"
                        ));
                        return Ok(());
                    }
                    match theorem42_detect(&f, &scenario.grid, tol.accept)? {
                        DetectOutcome::Family(fam) => {
                            report.verdict = Verdict::Ok;
                            report.recovered_family = Some(crate::report::RecoveredFamily {
                                a: fam.a,
                                b: fam.b.clone(),
                                c: fam.c,
                                lambda: fam.lambda(),
                            });
                            report.singular_set = Some(singular_entry(&theorem42_classify(&fam)));
                        }
                        DetectOutcome::Mismatch { max_deviation, at } => {
                            report.verdict = Verdict::Mismatch;
                            report.witness = Some(WitnessEntry {
                                witness: "quadratic-family-mismatch".to_string(),
                                location: at,
                                magnitude: max_deviation,
                            });
                        }
                    }
                }
                _ => {
                    return Err(Error::schema(
                        "tensor",
                        "classify expects an isotropic component list or {a, b, c}",
                    ))
                }
            }
        }
        Task::Curvature => {
            let phi_text = scenario.phi.as_ref().expect("validated");
            let phi = parse::<f64>(phi_text, n)?;
            let metric = ConformalMetric::new(background, phi)?;
            report.table = Some(curvature_table(&metric, &scenario.grid)?);
            report.verdict = Verdict::Ok;
        }
        Task::Example => unreachable!("handled by run()"),
    }
    Ok(())
}

fn completeness_label(c: Completeness) -> &'static str {
    match c {
        Completeness::Complete => "complete",
        Completeness::Inconclusive => "inconclusive",
    }
}

/// A pointwise product of two fields (used for u = phi_rel * F).
struct ProductField {
    a: Arc<dyn ScalarField<f64>>,
    b: Arc<dyn ScalarField<f64>>,
}

impl ScalarField<f64> for ProductField {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn jet2(&self, p: &[f64]) -> Result<crate::jets::Jet2<f64>> {
        Ok(self.a.jet2(p)?.mul(&self.b.jet2(p)?))
    }

    fn free_vars(&self) -> Vec<usize> {
        let mut vars = self.a.free_vars();
        for v in self.b.free_vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        vars.sort_unstable();
        vars
    }

    fn describe(&self) -> String {
        format!("({}) * ({})", self.a.describe(), self.b.describe())
    }
}

/// Sampled factor values over the problem's effective sample set.
fn factor_table(
    problem: &PrescribedProblem<f64>,
    factor: impl Fn(&[f64]) -> Result<f64>,
) -> Result<Table> {
    let n = problem.tensor.n();
    let mut columns: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    columns.push("phi".to_string());
    let mut rows = Vec::new();
    for p in problem.sample_points() {
        let mut row = p.clone();
        row.push(factor(&p)?);
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

/// Scalar, Ricci and sectional curvature over the grid, row-major.
fn curvature_table(metric: &ConformalMetric<f64>, grid: &Grid<f64>) -> Result<Table> {
    let n = metric.n();
    let mut columns: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    columns.push("scalar".to_string());
    for i in 1..=n {
        for j in 1..=n {
            columns.push(format!("ric_{i}{j}"));
        }
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            columns.push(format!("K_{i}{j}"));
        }
    }
    use rayon::prelude::*;
    let points = grid.points();
    let rows: Result<Vec<Vec<f64>>> = points
        .par_iter()
        .map(|p| {
            let mut row = p.clone();
            row.push(metric.scalar_curv(p)?);
            let ric = metric.ricci(p)?;
            for i in 0..n {
                for j in 0..n {
                    row.push(ric.get(i, j));
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    row.push(metric.sectional(p, i, j)?);
                }
            }
            Ok(row)
        })
        .collect();
    Ok(Table {
        columns,
        rows: rows?,
    })
}
