"""Trajectory CSV output, one row per control interval, SI units."""

import csv
import io

TRAJECTORY_HEADER = (
    "t", "p_cc", "p_gg", "mr_gg", "mr_glob", "omega_h", "omega_o",
    "u_vgh", "u_vgo", "u_vgc", "reward",
)


def trajectory_row(t, obs, controlled_positions, reward):
    """``controlled_positions`` are the three controlled valves in config order.

    For the expander-bleed preset the ``u_vgh/u_vgo/u_vgc`` columns carry
    VTB/VCO/VTO.
    """
    u = list(controlled_positions)
    return (t, obs.p_cc, obs.p_gg, obs.mr_gg, obs.mr_glob, obs.omega_h, obs.omega_o,
            u[0], u[1], u[2], reward)


def format_trajectory(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_trajectory(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write(format_trajectory(rows))


def read_trajectory(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header {reader.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in reader]
