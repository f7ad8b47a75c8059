//! CSV artifacts, the comparison table and the experiment driver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use boltzprice_core::{compare_fields, compare_series, PriceSeries, PriceSource};

use crate::config::{CompareWhat, Experiment, ResolvedComparison};
use crate::runner::{execute_all, RunOutcome, Snapshot};

pub const SERIES_HEADER: &str = "t,price,mass_f,mass_g,mean_bid,mean_ask,total_volume,leakage";
pub const FIELDS_HEADER: &str = "x,f,g,mu";
pub const COMPARISONS_HEADER: &str = "a,b,quantity,l1,l2,linf,window_max";

/// Fixed-width scientific notation with `digits` significant digits.
#[derive(Debug, Clone, Copy)]
pub struct NumberFormat {
    digits: usize,
}

impl NumberFormat {
    pub fn new(digits: usize) -> NumberFormat {
        NumberFormat {
            digits: digits.clamp(1, 17),
        }
    }

    pub fn write(&self, out: &mut String, v: f64) {
        if v.is_finite() {
            let _ = write!(out, "{:.*e}", self.digits - 1, v);
        } else {
            out.push_str("nan");
        }
    }

    fn write_opt(&self, out: &mut String, v: Option<f64>) {
        self.write(out, v.unwrap_or(f64::NAN));
    }
}

/// Time label used in field file names: up to nine decimals, trailing
/// zeros dropped.
pub fn time_label(t: f64) -> String {
    let s = format!("{t:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn fields_path(dir: &Path, label: &str, t: f64) -> PathBuf {
    dir.join(format!("fields_{label}_{}.csv", time_label(t)))
}

pub fn series_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("series_{label}.csv"))
}

pub fn render_series(outcome: &RunOutcome, fmt: NumberFormat) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for rec in &outcome.records {
        fmt.write(&mut out, rec.t);
        for v in [
            rec.price,
            Some(rec.mass_f),
            Some(rec.mass_g),
            rec.mean_bid,
            rec.mean_ask,
            Some(rec.total_volume),
            Some(rec.boundary_leakage()),
        ] {
            out.push(',');
            fmt.write_opt(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn render_fields(snap: &Snapshot, fmt: NumberFormat) -> String {
    let mut out = String::from(FIELDS_HEADER);
    out.push('\n');
    let grid = snap.f.grid();
    let rows = snap
        .f
        .values()
        .iter()
        .zip(snap.g.values())
        .zip(snap.mu.values());
    for (j, ((f, g), mu)) in rows.enumerate() {
        fmt.write(&mut out, grid.x(j));
        for v in [f, g, mu] {
            out.push(',');
            fmt.write(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

fn price_series(outcome: &RunOutcome) -> PriceSeries {
    let mut series = PriceSeries::new(
        outcome
            .records
            .first()
            .map_or(PriceSource::LevelSet, |r| r.price_source),
    );
    for rec in &outcome.records {
        series.push(rec.t, rec.price);
    }
    series
}

/// One row of `comparisons.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub a: String,
    pub b: String,
    pub quantity: String,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub window_max: f64,
}

/// Field comparisons give one row each for `f` and `g` at the final time;
/// price comparisons give one row over the common sample times.
pub fn compare(
    cmp: &ResolvedComparison,
    a: &RunOutcome,
    b: &RunOutcome,
) -> anyhow::Result<Vec<ComparisonRow>> {
    let row = |quantity: &str, m: boltzprice_core::ErrorMetrics, window_max: f64| ComparisonRow {
        a: cmp.a.clone(),
        b: cmp.b.clone(),
        quantity: quantity.into(),
        l1: m.l1,
        l2: m.l2,
        linf: m.linf,
        window_max,
    };
    match cmp.quantity {
        CompareWhat::Price => {
            let c = compare_series(&price_series(a), &price_series(b), cmp.window)?;
            Ok(vec![row("price", c.metrics, c.window_max)])
        }
        CompareWhat::Fields => {
            let (sa, sb) = match (a.final_snapshot(), b.final_snapshot()) {
                (Some(sa), Some(sb)) => (sa, sb),
                _ => anyhow::bail!("missing final state"),
            };
            let mf = compare_fields(&sa.f, &sb.f)?;
            let mg = compare_fields(&sa.g, &sb.g)?;
            Ok(vec![row("f", mf, mf.linf), row("g", mg, mg.linf)])
        }
    }
}

pub fn render_comparisons(rows: &[ComparisonRow], fmt: NumberFormat) -> String {
    let mut out = String::from(COMPARISONS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{}", r.a, r.b, r.quantity);
        for v in [r.l1, r.l2, r.linf, r.window_max] {
            out.push(',');
            fmt.write(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// What an experiment produced.
#[derive(Debug)]
pub struct Report {
    pub dir: PathBuf,
    pub outcomes: Vec<RunOutcome>,
    pub comparisons: Vec<ComparisonRow>,
    /// Lines written to `error.txt`.
    pub errors: Vec<String>,
}

impl Report {
    pub fn succeeded(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn outcome(&self, label: &str) -> Option<&RunOutcome> {
        self.outcomes.iter().find(|o| o.label == label)
    }
}

/// Runs every run, then every comparison, and writes all artifacts under
/// `dir`. Solver failures do not abort the experiment: the failing run keeps
/// its partial CSVs, comparisons involving it are skipped and the failures
/// are listed in `error.txt`.
pub fn run_experiment(exp: &Experiment, dir: &Path) -> anyhow::Result<Report> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stale = dir.join("error.txt");
    if stale.exists() {
        fs::remove_file(&stale)?;
    }
    let fmt = NumberFormat::new(exp.output.precision);
    let outcomes = execute_all(&exp.runs)?;

    let mut errors = Vec::new();
    for outcome in &outcomes {
        write(
            &series_path(dir, &outcome.label),
            &render_series(outcome, fmt),
        )?;
        for snap in &outcome.snapshots {
            write(
                &fields_path(dir, &outcome.label, snap.t),
                &render_fields(snap, fmt),
            )?;
        }
        if let Some(fail) = &outcome.failure {
            errors.push(format!(
                "run {} failed at step {}: {}",
                outcome.label, fail.step, fail.message
            ));
        }
    }

    let find = |label: &str| outcomes.iter().find(|o| o.label == label);
    let mut rows = Vec::new();
    for cmp in &exp.comparisons {
        let (Some(a), Some(b)) = (find(&cmp.a), find(&cmp.b)) else {
            continue;
        };
        if a.failure.is_some() || b.failure.is_some() {
            log::warn!("skipping comparison {} vs {}: a run failed", cmp.a, cmp.b);
            continue;
        }
        match compare(cmp, a, b) {
            Ok(r) => rows.extend(r),
            Err(e) => errors.push(format!("comparison {} vs {} failed: {e}", cmp.a, cmp.b)),
        }
    }
    if !exp.comparisons.is_empty() {
        write(
            &dir.join("comparisons.csv"),
            &render_comparisons(&rows, fmt),
        )?;
    }
    if !errors.is_empty() {
        let mut text = errors.join("\n");
        text.push('\n');
        write(&stale, &text)?;
    }
    Ok(Report {
        dir: dir.to_path_buf(),
        outcomes,
        comparisons: rows,
        errors,
    })
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
