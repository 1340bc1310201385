//! CSV and portable-graymap writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::stability::RegionScan;

use super::ConvergenceResult;

/// 17 significant digits; `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Columns `dt,resolution,rel_l2,rel_linf,blow_up`, then one `# fitted_order` line per resolution.
pub fn convergence_csv(result: &ConvergenceResult) -> String {
    let mut out = String::from("dt,resolution,rel_l2,rel_linf,blow_up\n");
    for r in &result.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.dt),
            r.resolution,
            fmt_opt(r.rel_l2),
            fmt_opt(r.rel_linf),
            r.blow_up
        );
    }
    for fit in &result.fits {
        let order = fit.order.map(fmt_f64).unwrap_or_else(|| "none".into());
        let _ = writeln!(out, "# fitted_order,{},{},{}", fit.resolution, order, fit.points_used);
    }
    out
}

/// Columns `dt,resolution,wall_time_s`.
pub fn timings_csv(result: &ConvergenceResult) -> String {
    let mut out = String::from("dt,resolution,wall_time_s\n");
    for r in &result.records {
        let _ = writeln!(out, "{},{},{}", fmt_f64(r.dt), r.resolution, fmt_f64(r.wall_time));
    }
    out
}

/// Columns `xi_l_im,xi_n_im,amplification,stable`, row-major in `xi_L`.
pub fn region_csv(scan: &RegionScan) -> String {
    let mut out = String::from("xi_l_im,xi_n_im,amplification,stable\n");
    for (r, &y) in scan.xi_l_im.iter().enumerate() {
        for (c, &b) in scan.xi_n_im.iter().enumerate() {
            let (a, s) = scan.at(r, c);
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(y), fmt_f64(b), fmt_f64(a), u8::from(s));
        }
    }
    out
}

/// Binary 8-bit graymap: `xi_N` to the right, `xi_L` upwards.
/// Stable cells are white, unstable cells darken as `|A|` grows.
pub fn region_pgm(scan: &RegionScan) -> Vec<u8> {
    let (w, h) = (scan.xi_n_im.len(), scan.xi_l_im.len());
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in (0..h).rev() {
        for c in 0..w {
            let (a, s) = scan.at(r, c);
            let v = if s {
                255
            } else {
                (200.0 * (-(a - 1.0)).exp()).clamp(0.0, 200.0) as u8
            };
            out.push(v);
        }
    }
    out
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        let x = 0.1f64 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
