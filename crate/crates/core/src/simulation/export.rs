//! CSV export of trajectories and field snapshots.
//!
//! Values are written in scientific notation with 12 significant digits.

use std::io::{self, Write};

use super::analysis::{sup_displacement, FieldSnapshots};
use super::Trajectory;

fn number(v: f64) -> String {
    format!("{v:.11e}")
}

/// Columns: `time, c_1_-1, c_1_+1, …, u1, u2, state_norm, sup_displacement`.
/// The supremum is taken over `x_grid`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, x_grid: &[f64], mut out: W) -> io::Result<()> {
    let mut header = vec!["time".to_string()];
    for n in 1..=traj.n_sim() {
        header.push(format!("c_{n}_-1"));
        header.push(format!("c_{n}_+1"));
    }
    header.extend(["u1", "u2", "state_norm", "sup_displacement"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..traj.len() {
        let c = &traj.coeffs()[i];
        let mut row = Vec::with_capacity(header.len());
        row.push(number(traj.times()[i]));
        row.extend(c.iter().map(|v| number(*v)));
        row.push(number(traj.controls()[i][0]));
        row.push(number(traj.controls()[i][1]));
        row.push(number(traj.state_norms()[i]));
        row.push(number(sup_displacement(c, traj.params(), x_grid)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldComponent {
    Displacement,
    Velocity,
}

/// One row per time: `time, f(x_0), f(x_1), …`; the header lists the grid.
pub fn write_field_csv<W: Write>(
    snapshots: &FieldSnapshots,
    component: FieldComponent,
    mut out: W,
) -> io::Result<()> {
    let mut header = vec!["time".to_string()];
    header.extend(snapshots.x_grid.iter().map(|x| format!("x={}", number(*x))));
    writeln!(out, "{}", header.join(","))?;
    let rows = match component {
        FieldComponent::Displacement => &snapshots.displacement,
        FieldComponent::Velocity => &snapshots.velocity,
    };
    for (t, row) in snapshots.times.iter().zip(rows) {
        let mut line = vec![number(*t)];
        line.extend(row.iter().map(|v| number(*v)));
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
