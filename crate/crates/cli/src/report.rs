//! `sweep.csv` and accuracy heatmaps.

use std::fmt::Write;

use crate::sweep::{SweepResult, SweepRow};

pub const SWEEP_HEADER: &str = "method,sigma,t2,trials,successes,accuracy,mean_max_err,wall_ms";

/// Renders the sweep rows; accuracy has four decimals, other reals use shortest round-trip form.
pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.4},{},{}",
            r.method, r.sigma, r.t2, r.trials, r.successes, r.accuracy, r.mean_max_err, r.wall_ms
        );
    }
    s
}

/// Parses [`sweep_to_csv`] output. Accuracy is recomputed from the counts.
pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SWEEP_HEADER) {
        return Err("unexpected sweep header".into());
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != 8 {
                return Err(format!("bad row {l:?}"));
            }
            let f = |i: usize| c[i].parse::<f64>().map_err(|e| format!("{l:?}: {e}"));
            let u = |i: usize| c[i].parse::<u64>().map_err(|e| format!("{l:?}: {e}"));
            let trials = u(3)? as usize;
            let successes = u(4)? as usize;
            let accuracy = successes as f64 / trials as f64;
            if (accuracy - f(5)?).abs() > 5.1e-5 {
                return Err(format!("accuracy column disagrees with counts in {l:?}"));
            }
            Ok(SweepRow {
                method: c[0].to_string(),
                sigma: f(1)?,
                t2: f(2)?,
                trials,
                successes,
                accuracy,
                mean_max_err: f(6)?,
                wall_ms: u(7)?,
            })
        })
        .collect()
}

/// Accuracy heatmap of one method: σ down the rows, T₂ across the columns.
pub fn heatmap_svg(result: &SweepResult, method: &str, sigmas: &[f64], t2s: &[f64]) -> String {
    let (cell, left, top) = (90.0, 80.0, 50.0);
    let w = left + cell * t2s.len() as f64 + 20.0;
    let h = top + cell * sigmas.len() as f64 + 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="22" font-size="15">accuracy: {method}</text>"#
    );
    for (i, &sigma) in sigmas.iter().enumerate() {
        let y = top + cell * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">σ={sigma}</text>"#,
            left - 6.0,
            y + cell / 2.0 + 4.0
        );
        for (j, &t2) in t2s.iter().enumerate() {
            let x = left + cell * j as f64;
            let acc = result
                .row(method, sigma, t2)
                .map(|r| r.accuracy)
                .unwrap_or(f64::NAN);
            let shade = if acc.is_finite() {
                (255.0 * (1.0 - acc)).round() as u8
            } else {
                200
            };
            let ink = if acc > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="white"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{acc:.2}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    let base = top + cell * sigmas.len() as f64 + 18.0;
    for (j, &t2) in t2s.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{base}" text-anchor="middle">T₂={t2}</text>"#,
            left + cell * j as f64 + cell / 2.0
        );
    }
    s.push_str("</svg>\n");
    s
}
