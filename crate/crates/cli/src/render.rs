//! Text rendering and fixed-precision float output.

use serde_json::Value;
use std::fmt::Write;

/// Rounds to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// Shortest form of `x` rounded to 15 significant digits; scientific outside `[1e-4, 1e15)`.
pub fn fmt(x: f64) -> String {
    let r = round15(x);
    if r == 0.0 || !r.is_finite() || (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Applies [`round15`] to every non-integer number in the document.
pub fn round_floats(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            serde_json::Number::from_f64(round15(n.as_f64().unwrap_or(f64::NAN))).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, v)| (k.clone(), round_floats(v))).collect()),
        other => other.clone(),
    }
}

fn num(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => fmt(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::Null => "n/a".into(),
        other => other.to_string(),
    }
}

fn vector(v: &Value) -> String {
    match v.as_array() {
        Some(a) => format!("({})", a.iter().map(num).collect::<Vec<_>>().join(", ")),
        None => num(v),
    }
}

fn facets(doc: &Value) -> String {
    let mut s = String::new();
    for f in doc["facets"].as_array().into_iter().flatten() {
        let offset = match &f["offset"] {
            Value::String(s) => s.clone(),
            o => num(o),
        };
        let _ = writeln!(s, "    <{}, x> + {} >= 0", vector(&f["normal"]), offset);
    }
    s
}

fn dimensions(out: &mut String, d: &Value) {
    let _ = writeln!(
        out,
        "automorphisms: dim eta = {}, reductive = {}, unipotent = {}",
        d["dim_eta"], d["dim_reductive"], d["dim_unipotent"]
    );
}

pub fn roots_text(doc: &Value) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "input polytope:\n{}", facets(&doc["input"]));
    let _ = writeln!(out, "privileged center: {}", vector(&doc["privileged_center"]));
    let _ = writeln!(out, "algebraic polytope:\n{}", facets(&doc["algebraic"]));
    let vs: Vec<String> = doc["vertices"].as_array().into_iter().flatten().map(vector).collect();
    let _ = writeln!(out, "vertices: {}", vs.join(" "));
    let roots = doc["roots"].as_array().cloned().unwrap_or_default();
    let _ = writeln!(out, "roots ({}):", roots.len());
    for r in &roots {
        let _ = writeln!(out, "  alpha = {:<10} facet {}", vector(&r["alpha"]), r["distinguished_facet"]);
    }
    let list = |k: &str| doc[k].as_array().into_iter().flatten().map(vector).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "semisimple: {}", list("semisimple"));
    let _ = writeln!(out, "unipotent:  {}", list("unipotent"));
    dimensions(&mut out, &doc["dimensions"]);
    out
}

pub fn soliton_text(doc: &Value) -> String {
    let s = &doc["soliton"];
    let mut out = String::new();
    let _ = writeln!(out, "soliton vector a = {}", vector(&s["a"]));
    let _ = writeln!(out, "einstein constant = {}", num(&s["lambda"]));
    let _ = writeln!(out, "futaki residuals (1, x_1, ..) = {}", vector(&s["futaki_residuals"]));
    let _ = writeln!(out, "quadrature order = {}", s["quadrature_order"]);
    let _ = writeln!(out, "newton iterations:");
    for (i, it) in s["iterations"].as_array().into_iter().flatten().enumerate() {
        let _ = writeln!(
            out,
            "  {:>2}  a = {}  V = {}  |grad|/V = {}  step = {}",
            i,
            vector(&it["a"]),
            num(&it["value"]),
            num(&it["relative_gradient"]),
            num(&it["step_length"])
        );
    }
    out
}

fn blocks(out: &mut String, d: &Value) {
    let _ = writeln!(out, "eigenvalue-2 blocks by gamma = 2<alpha, a>:");
    for b in d["blocks"].as_array().into_iter().flatten() {
        let roots: Vec<String> = b["roots"].as_array().into_iter().flatten().map(vector).collect();
        let _ = writeln!(
            out,
            "  gamma = {:<20} dim {}  affine {}  semisimple {}  unipotent {}  roots {}",
            num(&b["gamma"]),
            b["complex_dim"],
            b["includes_affine"],
            b["semisimple_roots"],
            b["unipotent_roots"],
            roots.join(" ")
        );
    }
    let _ = writeln!(out, "total complex dimension = {}", d["total_complex_dim"]);
}

pub fn decompose_text(doc: &Value) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "potential: {}", doc["potential"].as_str().unwrap_or(""));
    let _ = writeln!(out, "soliton vector a = {}", vector(&doc["a"]));
    dimensions(&mut out, &doc["dimensions"]);
    blocks(&mut out, &doc["decomposition"]);
    if let Some(name) = doc["first_failure"].as_str() {
        let _ = writeln!(out, "verification failed: {name}");
    }
    out
}

pub fn verify_text(doc: &Value) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "potential: {}", doc["potential"].as_str().unwrap_or(""));
    let _ = writeln!(out, "soliton vector a = {}", vector(&doc["soliton"]["a"]));
    dimensions(&mut out, &doc["dimensions"]);
    let r = &doc["residuals"];
    let _ = writeln!(out, "grid points: {} (finite differences: {})", r["grid_points"], r["fd_grid_points"]);
    let _ = writeln!(
        out,
        "scalar curvature: min {}  max {}  mean {}  weighted mean {}",
        num(&r["scalar_curvature_min"]),
        num(&r["scalar_curvature_max"]),
        num(&r["scalar_curvature_mean"]),
        num(&r["scalar_curvature_weighted_mean"])
    );
    let _ = writeln!(out, "roots:");
    for root in doc["roots"].as_array().into_iter().flatten() {
        let _ = writeln!(
            out,
            "  alpha = {:<9} facet {}  sign {:>2}  lambda_hat {}  residual {}  gamma {}  gamma_hat {}",
            vector(&root["alpha"]),
            root["rho_alpha"],
            root["mode_sign"],
            num(&root["lambda_hat"]),
            num(&root["max_rel_residual"]),
            num(&root["gamma"]),
            num(&root["gamma_hat"])
        );
    }
    blocks(&mut out, &doc["decomposition"]);
    let _ = writeln!(out, "checks:");
    for c in doc["checks"].as_array().into_iter().flatten() {
        let _ = writeln!(
            out,
            "  {} {:<30} {} (threshold {})",
            if c["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" },
            c["name"].as_str().unwrap_or(""),
            num(&c["value"]),
            num(&c["threshold"])
        );
    }
    for n in doc["notes"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "note: {}", n.as_str().unwrap_or(""));
    }
    out
}

pub fn calabi_text(doc: &Value) -> String {
    let r = &doc["report"];
    let mut out = String::new();
    let keys = [
        "a1",
        "equation_residual",
        "m",
        "scal_mean",
        "a_at_alpha1",
        "a_at_alpha2",
        "a_prime_at_alpha1",
        "a_prime_at_alpha2",
        "b_at_beta1",
        "b_at_beta2",
        "b_prime_at_beta1",
        "b_prime_at_beta2",
        "min_a_interior",
        "ode_max_residual",
        "b_ode_max_residual",
        "alternative_scal_mean",
        "alternative_ode_max_residual",
    ];
    for k in keys {
        let _ = writeln!(out, "{k:<30} {}", num(&r[k]));
    }
    let _ = writeln!(out, "{:<30} {}", "alternative_consistent", r["alternative_consistent"]);
    out
}
