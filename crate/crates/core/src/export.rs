//! CSV, PGM and gnuplot writers. Every number goes through [`sig9`].

use std::io::Write;

use crate::dct::{energy_distribution, CoeffVector, DctBasis};
use crate::error::{EimError, Result};
use crate::propagate::{Field, PropagationTrace};
use crate::relativity::SweepTable;
use crate::spectra::SpectrumReport;

/// Formats like C's `%.9g`: nine significant digits, trailing zeros
/// trimmed, scientific notation outside `1e-5 ..= 1e9`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // round first so that 9.99999999996 is classified by its printed exponent
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

pub fn write_trace_csv<W: Write>(trace: &PropagationTrace, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "centroid_x", "centroid_y", "sigma_x", "mass"])?;
    for r in &trace.records {
        out.write_record([
            r.t.to_string(),
            sig9(r.centroid_x),
            sig9(r.centroid_y),
            sig9(r.sigma_x),
            sig9(r.mass),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Non-zero pixels of every frame, in centred coordinates.
pub fn write_frames_csv<W: Write>(frames: &[Field], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "y", "value"])?;
    for (t, f) in frames.iter().enumerate() {
        let (ox, oy) = f.origin();
        for y in 0..f.height() {
            for x in 0..f.width() {
                let v = f.get(x, y);
                if v != 0.0 {
                    out.write_record([
                        t.to_string(),
                        (x as i64 - ox as i64).to_string(),
                        (y as i64 - oy as i64).to_string(),
                        sig9(v),
                    ])?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Binary PGM (P5), `|f|` scaled so the frame maximum maps to 255.
pub fn write_pgm<W: Write>(field: &Field, mut w: W) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", field.width(), field.height())?;
    let max = field.max_abs();
    let pixels: Vec<u8> = field
        .values()
        .iter()
        .map(|v| {
            if max > 0.0 {
                (v.abs() / max * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    w.write_all(&pixels)?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(tables: &[SweepTable], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "beta_sq",
        "size",
        "activation",
        "measured_ratio_sq",
        "predicted_ratio_sq",
    ])?;
    for table in tables {
        for p in &table.points {
            out.write_record([
                sig9(p.beta_sq),
                p.kernel_size.to_string(),
                p.activation.name().to_string(),
                sig9(p.measured_speed_ratio_sq),
                sig9(p.predicted_speed_ratio_sq),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One whitespace-separated block per table, separated by two blank lines
/// so gnuplot can address them with `index`.
pub fn write_sweep_gnuplot<W: Write>(tables: &[SweepTable], mut w: W) -> Result<()> {
    writeln!(w, "# beta_sq measured_ratio_sq predicted_ratio_sq")?;
    for (i, table) in tables.iter().enumerate() {
        if i > 0 {
            writeln!(w, "\n")?;
        }
        let c = &table.config;
        writeln!(
            w,
            "# index {i}: size {} activation {} schedule {}",
            c.size,
            c.activation.name(),
            c.schedule.name()
        )?;
        for p in &table.points {
            writeln!(
                w,
                "{} {} {}",
                sig9(p.beta_sq),
                sig9(p.measured_speed_ratio_sq),
                sig9(p.predicted_speed_ratio_sq)
            )?;
        }
    }
    Ok(())
}

/// Coefficient table: `k,u,v,sym_class,omega,energy_fraction`. The fraction
/// column is empty for an all-zero kernel.
pub fn write_coeffs_csv<W: Write>(omega: &CoeffVector, basis: &DctBasis, w: W) -> Result<()> {
    if omega.omega.len() != basis.len() {
        return Err(EimError::Shape("coefficients do not match the basis".into()));
    }
    let fractions = energy_distribution(omega).ok();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "u", "v", "sym_class", "omega", "energy_fraction"])?;
    for (i, it) in basis.items().iter().enumerate() {
        out.write_record([
            basis.size().to_string(),
            it.u.to_string(),
            it.v.to_string(),
            it.sym_class.as_str().to_string(),
            sig9(omega.omega[i]),
            fractions.as_ref().map_or(String::new(), |f| sig9(f[i])),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Basis listing: `order,u,v,sym_class` followed by the kernel values.
pub fn write_basis_csv<W: Write>(basis: &DctBasis, w: W) -> Result<()> {
    let k = basis.size();
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["order".to_string(), "u".into(), "v".into(), "sym_class".into()];
    header.extend((0..k * k).map(|i| format!("w{}_{}", i % k, i / k)));
    out.write_record(&header)?;
    for (i, it) in basis.items().iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            it.u.to_string(),
            it.v.to_string(),
            it.sym_class.as_str().into(),
        ];
        row.extend(it.basis.values().iter().map(|&v| sig9(v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(report: &SpectrumReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["layer_name", "u", "v", "mean_energy_fraction"])?;
    for layer in &report.layers {
        for (&(u, v), f) in layer.indices.iter().zip(&layer.mean_fractions) {
            out.write_record([layer.name.clone(), u.to_string(), v.to_string(), sig9(*f)])?;
        }
    }
    out.flush()?;
    Ok(())
}
