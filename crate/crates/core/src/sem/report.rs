use super::fit::SemFit;
use super::model::{display_name, LinkKind, ParamKind, SemModel};

/// One reported relationship: a loading (`↔`), regression (`←`) or
/// residual covariance (`cov`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub left: String,
    pub operator: &'static str,
    pub right: String,
    pub coefficient: f64,
    pub se: Option<f64>,
    pub stars: String,
}

/// Rows in model declaration order, one per link; explicit variance
/// declarations are not listed.
pub fn report_rows(model: &SemModel, fit: &SemFit) -> Vec<ReportRow> {
    model
        .links()
        .iter()
        .filter(|l| !(l.kind == LinkKind::Covariance && l.lhs == l.rhs))
        .filter_map(|l| {
            let (kind, lhs, rhs, op) = match l.kind {
                LinkKind::Loading => (ParamKind::Loading, &l.rhs, &l.lhs, "↔"),
                LinkKind::Regression => (ParamKind::Regression, &l.lhs, &l.rhs, "←"),
                LinkKind::Covariance => (ParamKind::Covariance, &l.lhs, &l.rhs, "cov"),
            };
            let est = fit.get(kind, lhs, rhs)?;
            Some(ReportRow {
                left: display_name(&l.lhs).to_string(),
                operator: op,
                right: display_name(&l.rhs).to_string(),
                coefficient: est.estimate,
                se: est.se,
                stars: est.stars.clone(),
            })
        })
        .collect()
}

/// Aligned plain-text coefficient table with fit diagnostics underneath.
pub fn render_text(title: &str, model: &SemModel, fit: &SemFit) -> String {
    let rows = report_rows(model, fit);
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.left.clone(),
                r.operator.to_string(),
                r.right.clone(),
                format!("{:.3}{}", r.coefficient, r.stars),
                r.se.map(|s| format!("{s:.3}")).unwrap_or_else(|| "n/a".into()),
            ]
        })
        .collect();
    let header = ["Relationship", "", "", "Coefficient", "Std.Err."];
    let mut widths = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let pad = |s: &str, w: usize, right: bool| {
        let fill = " ".repeat(w - s.chars().count());
        if right {
            format!("{fill}{s}")
        } else {
            format!("{s}{fill}")
        }
    };
    let line = |row: &[String; 5]| {
        let parts: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, c)| pad(c, widths[i], i >= 3))
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = String::new();
    out.push_str(title);
    out.push('\n');
    out.push_str(&line(&header.map(String::from)));
    out.push('\n');
    for row in &cells {
        out.push_str(&line(row));
        out.push('\n');
    }
    out.push_str("Note: *p<0.1; **p<0.05; ***p<0.01\n");
    out.push_str(&format!(
        "N = {}, F = {:.6}, chi-square = {:.3}, df = {}, iterations = {}, converged = {}\n",
        fit.n, fit.discrepancy, fit.chi_square, fit.degrees_of_freedom, fit.iterations, fit.converged
    ));
    for p in fit.parameters.iter().filter(|p| !p.free) {
        let what = if model.latent().contains(&p.lhs) {
            format!("{} (disturbance) variance", display_name(&p.lhs))
        } else {
            format!("{} residual variance", display_name(&p.lhs))
        };
        out.push_str(&format!("fixed: {what} = {}\n", p.estimate));
    }
    for d in &fit.diagnostics {
        out.push_str(&format!("diagnostic: {d}\n"));
    }
    out
}

/// `left,operator,right,coefficient,se,stars`.
pub fn render_csv(model: &SemModel, fit: &SemFit) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["left", "operator", "right", "coefficient", "se", "stars"])
        .expect("in-memory write");
    for r in report_rows(model, fit) {
        w.write_record([
            r.left,
            r.operator.to_string(),
            r.right,
            format!("{:.6}", r.coefficient),
            r.se.map(|s| format!("{s:.6}")).unwrap_or_default(),
            r.stars,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
