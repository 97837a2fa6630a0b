//! Trajectory CSV output.
//!
//! One row per sample. Columns: `t`, then per node `k` the phasor parts
//! `re_v_k`, `im_v_k`, the magnitude `mag_v_k`, the continuously unwrapped
//! angle `theta_k`, and the complex frequency `re_varpi_k`, `im_varpi_k`;
//! then the distances `dist_S`, `dist_T` and the Lyapunov value `V`.
//! Every float is written as `{:.16e}` (17 significant digits), NaN spelled
//! `NaN`. The file ends with a comment line carrying the final verdict:
//! `# sync=<bool> varpi=<re>,<im>`.

use cdroop_core::sim::{SyncVerdict, Trajectory};
use std::io::{self, Write};

fn cell(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the whole trajectory; `verdict` fills the trailing comment.
pub fn write_csv(
    w: &mut dyn Write,
    traj: &Trajectory,
    verdict: Option<&SyncVerdict>,
) -> io::Result<()> {
    let n = traj.samples.first().map_or(0, |s| s.v.len());
    let mut header = String::from("t");
    for k in 0..n {
        header.push_str(&format!(
            ",re_v_{k},im_v_{k},mag_v_{k},theta_{k},re_varpi_{k},im_varpi_{k}"
        ));
    }
    header.push_str(",dist_S,dist_T,V");
    writeln!(w, "{header}")?;

    // Unwrap each node's angle against its previous row so plots stay
    // continuous across branch cuts; a zero phasor yields NaN and leaves
    // the unwrap reference untouched.
    let mut prev_theta = vec![f64::NAN; n];
    for s in &traj.samples {
        let mut row = cell(s.t);
        for (k, prev) in prev_theta.iter_mut().enumerate() {
            let v = s.v[k];
            let mag = v.norm();
            let theta = if mag == 0.0 {
                f64::NAN
            } else {
                let raw = v.arg();
                let t = if prev.is_finite() {
                    let two_pi = std::f64::consts::TAU;
                    raw + two_pi * ((*prev - raw) / two_pi).round()
                } else {
                    raw
                };
                *prev = t;
                t
            };
            row.push_str(&format!(
                ",{},{},{},{},{},{}",
                cell(v.re),
                cell(v.im),
                cell(mag),
                cell(theta),
                cell(s.varpi[k].re),
                cell(s.varpi[k].im)
            ));
        }
        row.push_str(&format!(
            ",{},{},{}",
            cell(s.dist_s),
            cell(s.dist_t),
            cell(s.lyapunov)
        ));
        writeln!(w, "{row}")?;
    }

    match verdict {
        Some(v) => writeln!(
            w,
            "# sync={} varpi={},{}",
            v.synchronized,
            cell(v.varpi_mean.re),
            cell(v.varpi_mean.im)
        ),
        None => writeln!(w, "# sync=false varpi=NaN,NaN"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdroop_core::sim::{Sample, SegmentSpan};
    use cdroop_core::{CVector, C64};

    fn sample(t: f64, v: C64) -> Sample {
        Sample {
            t,
            v: CVector::from_vec(vec![v]),
            varpi: CVector::from_vec(vec![C64::new(0.0, 1.0)]),
            dist_s: 0.0,
            dist_t: f64::NAN,
            lyapunov: f64::NAN,
        }
    }

    #[test]
    fn unwrap_keeps_angles_continuous_across_the_cut() {
        // Two states straddling the -pi/pi cut: naive arg() jumps by
        // almost 2*pi, the unwrapped column must move only slightly.
        let traj = Trajectory {
            samples: vec![
                sample(0.0, C64::from_polar(1.0, 3.1)),
                sample(1.0, C64::from_polar(1.0, -3.1)),
            ],
            segments: vec![SegmentSpan {
                t_start: 0.0,
                t_end: 1.0,
                first_sample: 0,
                last_sample: 1,
            }],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &traj, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 4); // header, two rows, comment
        let theta0: f64 = rows[1].split(',').nth(4).unwrap().parse().unwrap();
        let theta1: f64 = rows[2].split(',').nth(4).unwrap().parse().unwrap();
        assert!((theta0 - 3.1).abs() < 1e-14);
        assert!((theta1 - (2.0 * std::f64::consts::PI - 3.1)).abs() < 1e-12);
        assert!(text.trim_end().ends_with("# sync=false varpi=NaN,NaN"));
    }

    #[test]
    fn header_names_every_column_once() {
        let traj = Trajectory {
            samples: vec![sample(0.0, C64::new(1.0, 0.0))],
            segments: vec![],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &traj, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "t,re_v_0,im_v_0,mag_v_0,theta_0,re_varpi_0,im_varpi_0,dist_S,dist_T,V"
        );
    }
}
