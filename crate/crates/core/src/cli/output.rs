//! Run outputs: CSV time series, a summary and saturation snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{save_cell_field, FieldFormat};
use crate::simulation::RunRecord;

pub const ERRORS_HEADER: &str = "step,pvi,epsilon,method,flux_err,sat_err,bf_homog_cum,bf_part_cum";

/// 15 significant digits.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.14e}")
    } else {
        format!("{v}").to_lowercase()
    }
}

pub fn errors_csv(record: &RunRecord) -> String {
    let mut out = String::from(ERRORS_HEADER);
    out.push('\n');
    for s in &record.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.step,
            num(s.pvi),
            num(s.epsilon),
            u8::from(s.rebuild),
            num(s.flux_err),
            num(s.sat_err),
            s.counts.homogeneous,
            s.counts.particular
        );
    }
    out
}

/// One line per basis build, with the drift that triggered it.
pub fn events_csv(record: &RunRecord) -> String {
    let mut out = String::from("update,step,pvi,epsilon_trigger\n");
    for (k, &step) in record.events.iter().enumerate() {
        let trigger = if step == 0 { 0.0 } else { record.steps[step - 1].epsilon };
        let _ = writeln!(out, "{k},{step},{},{}", num(record.steps[step].pvi), num(trigger));
    }
    out
}

pub fn summary(record: &RunRecord, reference: &RunRecord) -> Result<String> {
    let mut out = String::new();
    let last = record.steps.last().expect("a run has at least one step");
    let counts = record.counts();
    let _ = writeln!(out, "method: {}", record.method.name());
    let _ = writeln!(out, "elliptic_solves: {}", record.t_e());
    let _ = writeln!(out, "basis_builds: {}", record.rebuilds());
    let _ = writeln!(out, "basis_updates: {}", record.updates());
    let _ = writeln!(out, "subdomains: {}", record.n_sub);
    let _ = writeln!(out, "homogeneous_per_build: {}", record.n_hat);
    let _ = writeln!(out, "homogeneous_solves: {}", counts.homogeneous);
    let _ = writeln!(out, "particular_solves: {}", counts.particular);
    let _ = writeln!(out, "downscale_solves: {}", counts.downscale);
    if record.n_sub > 0 {
        let model = record.cost_model()?;
        let (mrcm, mpm) = model.cost_estimates(1.0);
        let _ = writeln!(out, "rcr_percent: {:.2}", model.rcr());
        let _ = writeln!(out, "cost_rebuild_every_step: {mrcm}");
        let _ = writeln!(out, "cost_this_run: {mpm}");
    }
    let bt = |r: &RunRecord| match r.breakthrough {
        Some(step) => format!("{step} (pvi {})", num(r.steps[step].pvi)),
        None => "none".into(),
    };
    let _ = writeln!(out, "breakthrough_step: {}", bt(record));
    let _ = writeln!(out, "reference_breakthrough_step: {}", bt(reference));
    let _ = writeln!(out, "final_pvi: {}", num(last.pvi));
    let _ = writeln!(out, "final_flux_err: {}", num(last.flux_err));
    let _ = writeln!(out, "final_sat_err: {}", num(last.sat_err));
    let worst = record.steps.iter().map(|s| s.conservation).fold(0.0, f64::max);
    let _ = writeln!(out, "max_conservation_residual: {}", num(worst));
    let warnings = record.steps.iter().filter(|s| s.repair_warning).count();
    let _ = writeln!(out, "downscale_repair_warnings: {warnings}");
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write every output of a run into `dir`.
pub fn write_run(dir: &Path, record: &RunRecord, reference: &RunRecord, format: FieldFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("errors.csv"), &errors_csv(record))?;
    write(&dir.join("events.csv"), &events_csv(record))?;
    write(&dir.join("summary.txt"), &summary(record, reference)?)?;
    let ext = match format {
        FieldFormat::Vtk => "vtk",
        FieldFormat::PlainMatrix => "txt",
    };
    let runs = if std::ptr::eq(reference, record) { vec![record] } else { vec![reference, record] };
    for r in runs {
        for snap in &r.snapshots {
            let name = format!("{}_{:06}.{ext}", r.method.name(), snap.step);
            save_cell_field(&dir.join(name), &snap.s, format, "saturation")?;
        }
    }
    Ok(())
}

/// `(step, flux_err, sat_err)` rows of an errors file.
pub fn read_errors(path: &Path) -> Result<Vec<(usize, f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, why: &str| Error::Config(format!("{}:{line}: {why}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some(ERRORS_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 8 {
                return Err(bad(k + 2, "expected 8 columns"));
            }
            let step = cols[0].parse().map_err(|_| bad(k + 2, "bad step"))?;
            let flux = cols[4].parse().map_err(|_| bad(k + 2, "bad flux_err"))?;
            let sat = cols[5].parse().map_err(|_| bad(k + 2, "bad sat_err"))?;
            Ok((step, flux, sat))
        })
        .collect()
}
