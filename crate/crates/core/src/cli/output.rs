//! Text encodings of trajectories and Legendre tables.

use serde_json::{json, Map, Value};

use crate::dynamics::Trajectory;
use crate::ode::Method;
use crate::vars;

use super::config::Model;

/// 17 significant digits, enough to round-trip any `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn columns(tr: &Trajectory) -> Vec<(String, Vec<f64>)> {
    let (n, d) = (tr.x[0].len(), tr.y[0].len());
    let mut cols = vec![(vars::TIME.to_string(), tr.t.clone())];
    let pick = |rows: &[Vec<f64>], i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    for (i, name) in vars::bases(n).into_iter().enumerate() {
        cols.push((name, pick(&tr.x, i)));
    }
    for (i, name) in vars::fibers(d).into_iter().enumerate() {
        cols.push((name, pick(&tr.y, i)));
    }
    for (i, name) in vars::duals(d).into_iter().enumerate() {
        cols.push((name, pick(&tr.momenta, i)));
    }
    cols.push(("adm_res".into(), tr.adm_res.clone()));
    cols.push(("el_res".into(), tr.el_res.clone()));
    for (name, v) in &tr.monitors {
        cols.push((name.clone(), v.clone()));
    }
    cols
}

pub fn trajectories_csv(runs: &[Trajectory]) -> String {
    let multi = runs.len() > 1;
    let mut out = String::new();
    for (r, tr) in runs.iter().enumerate() {
        let cols = columns(tr);
        if r == 0 {
            let mut header: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();
            if multi {
                header.insert(0, "run");
            }
            out.push_str(&header.join(","));
            out.push('\n');
        }
        for k in 0..tr.len() {
            let mut cells: Vec<String> = cols.iter().map(|(_, v)| num(v[k])).collect();
            if multi {
                cells.insert(0, r.to_string());
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn trajectories_json(model: &Model, method: Method, runs: &[Trajectory]) -> String {
    let runs: Vec<Value> = runs
        .iter()
        .map(|tr| {
            let cols: Map<String, Value> = columns(tr).into_iter().map(|(n, v)| (n, json!(v))).collect();
            Value::Object(cols)
        })
        .collect();
    let doc = json!({
        "model": model.name,
        "kind": model.structure.kind(),
        "method": method.to_string(),
        "runs": runs,
    });
    let mut s = serde_json::to_string(&doc).expect("trajectory serializes");
    s.push('\n');
    s
}

type Row = (Vec<f64>, Vec<f64>, f64);

fn transform_header(d: usize) -> Vec<String> {
    let mut h = vars::duals(d);
    h.extend(vars::fibers(d));
    h.push("h".into());
    h
}

pub fn transform_csv(d: usize, rows: &[Row]) -> String {
    let mut out = transform_header(d).join(",");
    out.push('\n');
    for (xi, y, h) in rows {
        let cells: Vec<String> = xi.iter().chain(y).chain([h]).map(|v| num(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn transform_json(d: usize, rows: &[Row]) -> String {
    let header = transform_header(d);
    let mut cols: Map<String, Value> = Map::new();
    for (i, name) in header.iter().enumerate() {
        let v: Vec<f64> = rows
            .iter()
            .map(|(xi, y, h)| if i < d { xi[i] } else if i < 2 * d { y[i - d] } else { *h })
            .collect();
        cols.insert(name.clone(), json!(v));
    }
    let mut s = serde_json::to_string(&Value::Object(cols)).expect("table serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn transform_table_layout() {
        let rows = vec![(vec![1.0], vec![2.0], 0.5)];
        let csv = transform_csv(1, &rows);
        assert!(csv.starts_with("p1,y1,h\n"));
        let json: Value = serde_json::from_str(&transform_json(1, &rows)).unwrap();
        assert_eq!(json["h"][0], 0.5);
    }
}
