//! Viscous fingering in a long channel from the `finger` preset: a perturbed
//! front advanced with basis reuse, printing the finger length as it grows.
//!
//! cargo run --release --example finger_growth -- [steps]

use mrcmflow::cli::preset;
use mrcmflow::simulation::{run, StopRule};

fn main() -> mrcmflow::Result<()> {
    let steps = std::env::args().nth(1).map(|a| a.parse().expect("step count")).unwrap_or(40);
    let cfg = preset("finger")?;
    let problem = cfg.problem()?;
    let mut splitting = cfg.splitting();
    splitting.stop = StopRule::Steps(steps);
    splitting.snapshot_steps = (0..steps).step_by((steps / 4).max(1)).collect();

    let record = run(&problem, &cfg.candidate()?, &splitting)?;
    let g = problem.s0.grid;
    // The finger tip is the furthest column holding water, its base the nearest column that is not fully swept.
    let extent = |s: &mrcmflow::grid::CellField| {
        let wet = |i: usize, t: f64| (0..g.ny).any(|j| s.values[g.cell(i, j)] > t);
        let dry = |i: usize, t: f64| (0..g.ny).any(|j| s.values[g.cell(i, j)] < t);
        let tip = (0..g.nx).rev().find(|&i| wet(i, 0.1)).unwrap_or(0);
        let base = (0..g.nx).find(|&i| dry(i, 0.9)).unwrap_or(g.nx);
        (base as f64 * g.hx(), tip as f64 * g.hx())
    };
    println!("{:>6} {:>10} {:>10} {:>10}", "step", "base x", "tip x", "length");
    for snap in &record.snapshots {
        let (base, tip) = extent(&snap.s);
        println!("{:>6} {base:>10.3} {tip:>10.3} {:>10.3}", snap.step, tip - base);
    }
    println!(
        "{} elliptic steps, {} basis builds, last flux error {:.3e}",
        record.t_e(),
        record.rebuilds(),
        record.steps.last().map(|s| s.flux_err).unwrap_or(0.0)
    );
    Ok(())
}
