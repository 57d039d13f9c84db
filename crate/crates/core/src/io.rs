//! Plain-text CSV formats for coefficient tables, sample fields, fold ledgers and recovery reports.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::encoder::{BandLedger, FoldEvent, FoldLedger};
use crate::error::{Error, Result};
use crate::filters::BandGeometry;
use crate::grid::{GridSpec, SampleField};
use crate::lattice::{BandlimitedSignal, Bandwidth, DomainBox};
use crate::recovery::{DetectedFold, ReconstructionResult};
use crate::scalar::Real;

/// Formats a value with 17 significant digits.
pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64().unwrap())
}

fn parse_real<T: Real>(s: &str) -> Result<T> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
    T::from_f64(v).ok_or_else(|| Error::Parse(format!("value out of range: {s}")))
}

fn parse_int(s: &str) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
}

fn header(prefix: &str, from: usize, count: usize, tail: &[&str]) -> String {
    let mut cols: Vec<String> = (from..from + count)
        .map(|d| format!("{prefix}{d}"))
        .collect();
    cols.extend(tail.iter().map(|s| s.to_string()));
    cols.join(",")
}

/// Rows of a CSV body after checking the header, split on commas.
fn rows<'a>(text: &'a str, expected_header: &str) -> Result<Vec<Vec<&'a str>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines
        .next()
        .ok_or_else(|| Error::Parse("missing header".into()))?;
    if head.trim() != expected_header {
        return Err(Error::Parse(format!(
            "header {:?}, expected {expected_header:?}",
            head.trim()
        )));
    }
    let width = expected_header.split(',').count();
    lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != width {
                Err(Error::Parse(format!(
                    "row {l:?} has {} cells, expected {width}",
                    cells.len()
                )))
            } else {
                Ok(cells)
            }
        })
        .collect()
}

fn field_header(dim: usize) -> String {
    header("k", 1, dim, &["value"])
}

/// `k1,...,kD,value`, one row per index in row-major order.
pub fn field_to_csv<T: Real>(field: &SampleField<T>) -> String {
    let mut s = field_header(field.grid().dim());
    s.push('\n');
    for (k, &v) in field.grid().indices().zip(field.data()) {
        for ki in &k {
            let _ = write!(s, "{ki},");
        }
        s += &fmt_real(v);
        s.push('\n');
    }
    s
}

/// Parses [`field_to_csv`] output; every index of the bounding box must appear exactly once.
pub fn field_from_csv<T: Real>(text: &str, dim: usize) -> Result<SampleField<T>> {
    let body = rows(text, &field_header(dim))?;
    if body.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut entries = Vec::with_capacity(body.len());
    let mut lo = vec![i64::MAX; dim];
    let mut hi = vec![i64::MIN; dim];
    for r in &body {
        let k: Vec<i64> = r[..dim]
            .iter()
            .map(|c| parse_int(c))
            .collect::<Result<_>>()?;
        for d in 0..dim {
            lo[d] = lo[d].min(k[d]);
            hi[d] = hi[d].max(k[d]);
        }
        entries.push((k, parse_real::<T>(r[dim])?));
    }
    let grid = GridSpec::new(lo, hi)?;
    if grid.len() != entries.len() {
        return Err(Error::Parse(format!(
            "{} rows do not fill a {}-sample box",
            entries.len(),
            grid.len()
        )));
    }
    let mut seen = vec![false; grid.len()];
    let mut field = SampleField::zeros(grid.clone());
    for (k, v) in entries {
        let o = grid.offset(&k).unwrap();
        if std::mem::replace(&mut seen[o], true) {
            return Err(Error::Parse(format!("duplicate index {k:?}")));
        }
        field.data_mut()[o] = v;
    }
    Ok(field)
}

/// Coefficient table of a signal in the field format (the constant term is not included).
pub fn signal_to_csv<T: Real>(sig: &BandlimitedSignal<T>) -> String {
    let field = SampleField::from_vec(sig.coeff_grid(), sig.coeffs().to_vec()).unwrap();
    field_to_csv(&field)
}

/// Rebuilds a signal from its coefficient table; the index box must be symmetric about zero.
pub fn signal_from_csv<T: Real>(
    text: &str,
    bandwidth: Bandwidth<T>,
    domain: DomainBox<T>,
) -> Result<BandlimitedSignal<T>> {
    let field: SampleField<T> = field_from_csv(text, bandwidth.dim())?;
    let g = field.grid();
    if g.lo().iter().zip(g.hi()).any(|(&l, &h)| l != -h) {
        return Err(Error::Parse(
            "coefficient box must be symmetric about zero".into(),
        ));
    }
    let half = g.hi().iter().map(|&h| h as usize).collect();
    BandlimitedSignal::new(bandwidth, half, field.into_vec(), domain)
}

fn band_cols(band: &[i64]) -> String {
    band.iter().map(|b| format!("{b},")).collect()
}

/// `(events, levels)` CSVs: `b2..bD,r,tau,sign` and `b2..bD,M`.
pub fn ledger_to_csv<T: Real>(ledger: &FoldLedger<T>) -> (String, String) {
    let nb = ledger.geometry.per_band().len();
    let mut ev = header("b", 2, nb, &["r", "tau", "sign"]) + "\n";
    let mut lv = header("b", 2, nb, &["M"]) + "\n";
    for (band, bl) in &ledger.bands {
        let _ = writeln!(lv, "{}{}", band_cols(band), bl.level);
        for e in &bl.events {
            let _ = writeln!(
                ev,
                "{}{},{},{}",
                band_cols(band),
                e.r,
                fmt_real(e.tau),
                e.sign
            );
        }
    }
    (ev, lv)
}

/// Parses the two ledger CSVs back into a ledger with the given geometry.
pub fn ledger_from_csv<T: Real>(
    events: &str,
    levels: &str,
    geometry: BandGeometry<T>,
) -> Result<FoldLedger<T>> {
    let nb = geometry.per_band().len();
    let mut bands: BTreeMap<Vec<i64>, BandLedger<T>> = BTreeMap::new();
    for r in rows(levels, &header("b", 2, nb, &["M"]))? {
        let band: Vec<i64> = r[..nb]
            .iter()
            .map(|c| parse_int(c))
            .collect::<Result<_>>()?;
        bands.insert(
            band,
            BandLedger {
                level: parse_int(r[nb])?,
                events: Vec::new(),
            },
        );
    }
    for r in rows(events, &header("b", 2, nb, &["r", "tau", "sign"]))? {
        let band: Vec<i64> = r[..nb]
            .iter()
            .map(|c| parse_int(c))
            .collect::<Result<_>>()?;
        let sign = parse_int(r[nb + 2])?;
        if sign != 1 && sign != -1 {
            return Err(Error::Parse(format!("sign {sign} not ±1")));
        }
        bands
            .get_mut(&band)
            .ok_or_else(|| Error::Parse(format!("event for band {band:?} without a level row")))?
            .events
            .push(FoldEvent {
                r: parse_int(r[nb])?,
                tau: parse_real(r[nb + 1])?,
                sign: sign as i8,
            });
    }
    for bl in bands.values_mut() {
        bl.events.sort_by_key(|e| e.r);
    }
    Ok(FoldLedger { geometry, bands })
}

/// `(folds, levels)` CSVs: `b2..bD,r,m_min,tau_est,sign_est` and `b2..bD,M_est`.
pub fn recovery_to_csv<T: Real>(
    rec: &ReconstructionResult<T>,
    transverse_dims: usize,
) -> (String, String) {
    let mut fv = header(
        "b",
        2,
        transverse_dims,
        &["r", "m_min", "tau_est", "sign_est"],
    ) + "\n";
    let mut lv = header("b", 2, transverse_dims, &["M_est"]) + "\n";
    for (band, folds) in &rec.detection.bands {
        for f in folds {
            let _ = writeln!(
                fv,
                "{}{},{},{},{}",
                band_cols(band),
                f.r,
                f.m_min,
                fmt_real(f.tau_est),
                f.sign_est
            );
        }
    }
    for (band, m) in &rec.levels {
        let _ = writeln!(lv, "{}{m}", band_cols(band));
    }
    (fv, lv)
}

/// Parses the fold rows of [`recovery_to_csv`].
pub fn detected_folds_from_csv<T: Real>(
    text: &str,
    transverse_dims: usize,
) -> Result<BTreeMap<Vec<i64>, Vec<DetectedFold<T>>>> {
    let mut out: BTreeMap<Vec<i64>, Vec<DetectedFold<T>>> = BTreeMap::new();
    for r in rows(
        text,
        &header(
            "b",
            2,
            transverse_dims,
            &["r", "m_min", "tau_est", "sign_est"],
        ),
    )? {
        let nb = transverse_dims;
        let band: Vec<i64> = r[..nb]
            .iter()
            .map(|c| parse_int(c))
            .collect::<Result<_>>()?;
        out.entry(band).or_default().push(DetectedFold {
            r: parse_int(r[nb])?,
            m_min: parse_int(r[nb + 1])?,
            tau_est: parse_real(r[nb + 2])?,
            sign_est: parse_int(r[nb + 3])? as i8,
        });
    }
    Ok(out)
}
