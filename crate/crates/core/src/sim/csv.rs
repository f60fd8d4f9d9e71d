use std::io::{self, Write};

use super::{EventLog, Trajectory};

/// Writes `t, x_1..x_n, V, S, residual`, 17 significant digits.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x_{i}"));
    }
    header.push_str(",V,S,residual");
    writeln!(w, "{header}")?;
    for i in 0..traj.len() {
        write!(w, "{:.16e}", traj.times[i])?;
        for v in &traj.states[i] {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w, ",{:.16e},{:.16e},{:.16e}", traj.v_values[i], traj.s_values[i], traj.residuals[i])?;
    }
    Ok(())
}

/// Writes `k, t_k, dt_k`; `dt_k` is empty for the initial update.
pub fn write_events_csv<W: Write>(log: &EventLog, mut w: W) -> io::Result<()> {
    writeln!(w, "k,t_k,dt_k")?;
    for (k, t) in log.trigger_times.iter().enumerate() {
        if k == 0 {
            writeln!(w, "0,{t:.16e},")?;
        } else {
            writeln!(w, "{k},{t:.16e},{:.16e}", log.inter_event_times[k - 1])?;
        }
    }
    Ok(())
}
