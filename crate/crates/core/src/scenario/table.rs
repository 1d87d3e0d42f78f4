use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::mild::Trajectory;

/// Node values read back from a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub modes: usize,
    pub times: Vec<f64>,
    /// Row `k` holds `x_1..x_N` at `times[k]`.
    pub states: Vec<Vec<f64>>,
    /// Row `k` holds `u_1..u_N` at `times[k]`.
    pub controls: Vec<Vec<f64>>,
}

fn push_value(line: &mut String, v: f64) {
    line.push(',');
    // 17 significant digits
    write!(line, "{v:.16e}").unwrap();
}

/// Renders `t,x_1..x_N,u_1..u_N`, one row per time node.
pub fn format_trajectory(traj: &Trajectory, control: &ControlSignal) -> Result<String> {
    let modes = traj.modes();
    if control.modes() != modes || control.nodes() != traj.len() {
        return Err(Error::Shape(format!(
            "control is {}x{}, trajectory has {} modes on {} nodes",
            control.modes(),
            control.nodes(),
            modes,
            traj.len()
        )));
    }
    let mut out = String::from("t");
    for prefix in ["x", "u"] {
        for n in 1..=modes {
            write!(out, ",{prefix}_{n}").unwrap();
        }
    }
    out.push('\n');
    for (k, (t, state)) in traj.times().iter().zip(traj.states()).enumerate() {
        let mut line = format!("{t:.16e}");
        for &c in state.coeffs() {
            push_value(&mut line, c);
        }
        for n in 1..=modes {
            push_value(&mut line, control.get(n, k));
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trajectory(traj: &Trajectory, control: &ControlSignal, path: &Path) -> Result<()> {
    let text = format_trajectory(traj, control)?;
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_trajectory(text: &str) -> Result<TrajectoryTable> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::Parse("empty trajectory file".into()))?.split(',').collect();
    if header.first() != Some(&"t") || header.len().is_multiple_of(2) {
        return Err(Error::Parse("trajectory header must be t,x_1..x_N,u_1..u_N".into()));
    }
    let modes = (header.len() - 1) / 2;
    let mut table = TrajectoryTable {
        modes,
        times: Vec::new(),
        states: Vec::new(),
        controls: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("line {}: expected {} fields, got {}", i + 2, header.len(), row.len())));
        }
        table.times.push(row[0]);
        table.states.push(row[1..=modes].to_vec());
        table.controls.push(row[modes + 1..].to_vec());
    }
    Ok(table)
}

pub fn read_trajectory(path: &Path) -> Result<TrajectoryTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_trajectory(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralState;

    #[test]
    fn zero_trajectory_has_zero_columns() {
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.25).collect();
        let traj = Trajectory::constant(times.clone(), SpectralState::zeros(3)).unwrap();
        let text = format_trajectory(&traj, &ControlSignal::zeros(3, 5)).unwrap();
        assert!(text.starts_with("t,x_1,x_2,x_3,u_1,u_2,u_3\n"));
        let table = parse_trajectory(&text).unwrap();
        assert_eq!(table.times, times);
        assert!(table.states.iter().chain(&table.controls).flatten().all(|&v| v == 0.0));
    }
}
