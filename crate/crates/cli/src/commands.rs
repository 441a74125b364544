use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use gcf_core::export::{write_coefficients_csv, write_grid_csv, write_json, write_table_csv, Column};
use gcf_core::filter::{expand_full_polynomial, multiply_stage, stage_multiplier};
use gcf_core::fixedpoint::{
    design_word_lengths, monte_carlo_coverage, quantization_error_response, sensitivity,
    FixedPointFormat, Realization, ToleranceSpec, WordLengthReport,
};
use gcf_core::sim::run_experiment;
use gcf_core::spectral::{
    attenuation_per_band, worst_case_attenuation, FrequencyGrid, ResponseGrid,
};
use gcf_core::{CombSpec, GcfDesign, GcfSpec};

use crate::config::DesignConfig;
use crate::error::CliError;

fn word_lengths(cfg: &DesignConfig, design: &GcfDesign) -> Result<WordLengthReport, CliError> {
    let width = cfg.require_input_width()?;
    let tol = cfg.tolerance()?;
    let mut report =
        design_word_lengths(design, &tol, width, cfg.points_per_band, cfg.normalization)?;
    if let Some(f) = cfg.f_n {
        report.f_n = f;
        report.total_bits = report.format().total;
    }
    Ok(report)
}

/// Fraction width for commands where `input_width` is optional.
fn chosen_f_n(cfg: &DesignConfig, design: &GcfDesign) -> Result<u32, CliError> {
    if let Some(f) = cfg.f_n {
        return Ok(f);
    }
    let tol = cfg.tolerance()?;
    Ok(design_word_lengths(design, &tol, 1, cfg.points_per_band, cfg.normalization)?.f_n)
}

pub fn design(cfg: &DesignConfig, sweep: Option<&[usize]>) -> Result<(), CliError> {
    let design = cfg.design()?;
    let report = word_lengths(cfg, &design)?;
    let exact = Realization::exact(&design);
    let quant = exact.quantized(report.f_n);
    let echo = cfg.echo();
    let out = &cfg.out_dir;

    write_json(&out.join("report.json"), &json!({ "config": echo, "report": report }))?;
    write_coefficients_csv(&out.join("coefficients_exact.csv"), &exact.multipliers(), &echo)?;
    write_coefficients_csv(&out.join("coefficients_quantized.csv"), &quant.multipliers(), &echo)?;
    let impulse: Vec<f64> = {
        let e = exact.expanded();
        let g = exact.dc_gain();
        e.iter().map(|v| v / g).collect()
    };
    write_json(
        &out.join("coefficients.json"),
        &json!({
            "config": echo,
            "spec": design.spec,
            "bank": exact.bank,
            "bank_quantized": quant.bank,
            "cascade": exact.cascade.r,
            "cascade_quantized": quant.cascade.r,
            "first_stage": exact.cascade.first_stage,
            "h_o": design.gain.h_o,
            "impulse_response": impulse,
        }),
    )?;
    println!("{report}");
    if quant == exact {
        println!("  quantized coefficients are exact");
    }

    if let Some(decimations) = sweep {
        let rows = sweep_rows(cfg, decimations)?;
        write_table_csv(
            &out.join("fn_sweep.csv"),
            &["decimation", "d1", "pp", "chi", "y", "f_n", "f_n_exact", "s_t_max"],
            &rows,
            &echo,
        )?;
        println!("  sweep: {} rows -> {}", rows.len(), out.join("fn_sweep.csv").display());
    }
    Ok(())
}

/// F_n over chi in {5e-3, 1e-3, 1e-4}, y in {2, 1.63} and every split of
/// each decimation factor, keeping `f_c D` fixed at the configured value.
fn sweep_rows(cfg: &DesignConfig, decimations: &[usize]) -> Result<Vec<Vec<String>>, CliError> {
    let f_c_d = cfg.band_edge() * cfg.decimation_factor as f64;
    let mut rows = Vec::new();
    for &d in decimations {
        let base = GcfSpec::new(d, -1, cfg.q, f_c_d / d as f64)?;
        for pp in base.splits() {
            let design = GcfDesign::new(base.with_split(pp)?)?;
            for chi in [5e-3, 1e-3, 1e-4] {
                for y in [2.0, 1.63] {
                    let tol = ToleranceSpec::with_y(chi, y)?;
                    let r = design_word_lengths(&design, &tol, 1, cfg.points_per_band, cfg.normalization)?;
                    rows.push(vec![
                        d.to_string(),
                        design.spec.d1().to_string(),
                        pp.to_string(),
                        chi.to_string(),
                        y.to_string(),
                        r.f_n.to_string(),
                        r.f_n_exact.to_string(),
                        r.s_t_max.to_string(),
                    ]);
                }
            }
        }
    }
    Ok(rows)
}

fn unit_gain_impulse(real: &Realization) -> Vec<f64> {
    let g = real.dc_gain();
    real.expanded().iter().map(|v| v / g).collect()
}

pub fn response(cfg: &DesignConfig) -> Result<(), CliError> {
    let design = cfg.design()?;
    let bands = cfg.bands()?;
    let f_n = chosen_f_n(cfg, &design)?;
    let grid = FrequencyGrid::new(&bands, cfg.points_per_band, cfg.global_points)?;
    let exact = Realization::exact(&design);
    let quant_coeffs = unit_gain_impulse(&exact.quantized(f_n));
    let comb = CombSpec::new(cfg.decimation_factor, 3)?;

    let g_exact = ResponseGrid::evaluate(&grid, &design);
    let g_quant = ResponseGrid::evaluate(&grid, quant_coeffs.as_slice());
    let g_comb = ResponseGrid::evaluate(&grid, &comb);
    let delta: Vec<f64> = g_quant
        .magnitude
        .iter()
        .zip(&g_exact.magnitude)
        .map(|(q, e)| q - e)
        .collect();

    let echo = cfg.echo();
    let out = &cfg.out_dir;
    write_grid_csv(&out.join("response_exact.csv"), &g_exact, &[], &echo)?;
    write_grid_csv(
        &out.join("response_quantized.csv"),
        &g_quant,
        &[Column { name: "delta_h", values: &delta }],
        &echo,
    )?;
    write_grid_csv(&out.join("response_comb.csv"), &g_comb, &[], &echo)?;

    let band_rows: Vec<Vec<String>> = bands
        .bands
        .iter()
        .enumerate()
        .map(|(k, (lo, hi))| {
            vec![(k + 1).to_string(), bands.centre(k + 1).to_string(), lo.to_string(), hi.to_string()]
        })
        .collect();
    write_table_csv(&out.join("bands.csv"), &["band", "centre", "lo", "hi"], &band_rows, &echo)?;
    write_attenuation_table(&out.join("attenuation.csv"), &[&g_exact, &g_quant, &g_comb], cfg, &echo)?;

    let max_dev = delta
        .iter()
        .zip(&grid.in_band)
        .filter(|(_, &m)| m)
        .fold(0.0f64, |m, (d, _)| m.max(d.abs()));
    let summary = json!({
        "config": echo,
        "f_n": f_n,
        "max_in_band_deviation": max_dev,
        "worst_case_attenuation_db": {
            "gcf": worst_case_attenuation(&g_exact)?,
            "gcf_quantized": worst_case_attenuation(&g_quant)?,
            "comb": worst_case_attenuation(&g_comb)?,
        },
    });
    write_json(&out.join("response.json"), &summary)?;
    println!("F_n = {f_n}: max in-band |delta|H|| = {max_dev:.3e} (chi = {:e})", cfg.chi);
    Ok(())
}

fn write_attenuation_table(
    path: &Path,
    grids: &[&ResponseGrid; 3],
    cfg: &DesignConfig,
    echo: &serde_json::Value,
) -> Result<(), CliError> {
    let bands = cfg.bands()?;
    let per: Vec<Vec<f64>> = grids.iter().map(|g| attenuation_per_band(g, &bands)).collect();
    let rows: Vec<Vec<String>> = (0..bands.k_max)
        .map(|k| {
            vec![
                (k + 1).to_string(),
                per[0][k].to_string(),
                per[1][k].to_string(),
                per[2][k].to_string(),
            ]
        })
        .collect();
    write_table_csv(path, &["band", "gcf_dB", "gcf_quantized_dB", "comb_dB"], &rows, echo)?;
    Ok(())
}

pub fn sensitivity_grid(cfg: &DesignConfig) -> Result<(), CliError> {
    let design = cfg.design()?;
    let bands = cfg.bands()?;
    let f_n = chosen_f_n(cfg, &design)?;
    let grid = FrequencyGrid::new(&bands, cfg.points_per_band, cfg.global_points)?;
    let s = sensitivity(&design, &grid.freqs, cfg.normalization);
    let err = quantization_error_response(&design, f_n, &grid.freqs);
    let g = ResponseGrid::evaluate(&grid, &design);
    let echo = cfg.echo();
    write_grid_csv(
        &cfg.out_dir.join("sensitivity.csv"),
        &g,
        &[
            Column { name: "s_t", values: &s.s_t },
            Column { name: "sigma_dh", values: &err.sigma_dh },
            Column { name: "delta_h", values: &err.delta_h },
        ],
        &echo,
    )?;
    println!(
        "{:?}: {} multipliers, max S_T = {:.4e} over {} points",
        s.case,
        s.n_multipliers,
        s.max(),
        s.s_t.len()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

pub fn validate(cfg: &DesignConfig, corrupt: bool) -> Result<(), CliError> {
    let mut design = cfg.design()?;
    if corrupt {
        match design.bank.h_p.get_mut(1) {
            Some(h) if design.spec.d1() > 1 => *h += 1e-3,
            _ => design.cascade.r[0] += 1e-3,
        }
    }
    let spec = design.spec.clone();
    let mut checks = Vec::new();

    // Stored bank times stored cascade must equal the pure p-stage product.
    let stored = design
        .cascade
        .stages()
        .fold(design.bank.h_p.clone(), |acc, (k, r)| multiply_stage(&acc, k, r));
    let oracle = (0..spec.p()).fold(vec![1.0], |acc, k| {
        multiply_stage(&acc, k, stage_multiplier(spec.alpha(), k))
    });
    let fact_err = max_rel_diff(&stored, &oracle);
    checks.push(Check::new(
        "factorization",
        fact_err <= 1e-10,
        format!("max rel. difference {fact_err:.2e}"),
    ));

    let base = expand_full_polynomial(&spec.with_split(-1)?);
    let mut split_err = 0.0f64;
    for pp in spec.splits() {
        split_err = split_err.max(max_rel_diff(&expand_full_polynomial(&spec.with_split(pp)?), &base));
    }
    checks.push(Check::new(
        "split_invariance",
        split_err <= 1e-10,
        format!("max rel. difference {split_err:.2e} over splits {:?}", spec.splits()),
    ));

    let fd_err = finite_difference_error(&design);
    checks.push(Check::new(
        "sensitivity_finite_difference",
        fd_err <= 1e-5,
        format!("max rel. error {fd_err:.2e}"),
    ));

    let tol = cfg.tolerance()?;
    let f_n = chosen_f_n(cfg, &design)?;
    let bands = cfg.bands()?;
    let freqs = FrequencyGrid::in_band_only(&bands, cfg.points_per_band)?.freqs;
    let mc = monte_carlo_coverage(&design, f_n, tol.y, cfg.trials, cfg.seed, &freqs)?;
    let predicted = tol.prob;
    checks.push(Check::new(
        "monte_carlo_coverage",
        (mc.coverage - predicted).abs() <= 0.02,
        format!(
            "coverage {:.4} vs Gaussian {predicted:.4} at y = {:.4}, F_n = {f_n}, {} trials",
            mc.coverage, tol.y, cfg.trials
        ),
    ));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let echo = cfg.echo();
    write_json(
        &cfg.out_dir.join("validate.json"),
        &json!({ "config": echo, "passed": failed.is_empty(), "checks": checks }),
    )?;
    for c in &checks {
        println!("{:<32} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
}

/// Analytic cascade derivatives against central differences of the
/// stage-by-stage product, at 50 frequencies spread over `(0, 1/2)`.
fn finite_difference_error(design: &GcfDesign) -> f64 {
    let first = design.cascade.first_stage;
    let h_n = |r: &[f64], omega: f64| -> num_complex::Complex64 {
        r.iter()
            .enumerate()
            .map(|(i, &rk)| {
                let w = num_complex::Complex64::cis(-omega * f64::from(1u32 << (first + i as u32)));
                1.0 + rk * (w + w * w) + w * w * w
            })
            .product()
    };
    let mut worst = 0.0f64;
    for i in 0..50 {
        let omega = PI * (i as f64 + 0.5) / 50.0 * 0.999;
        let analytic = design.cascade_derivatives(omega);
        for u in 0..design.cascade.len() {
            let h = 1e-6;
            let mut up = design.cascade.r.clone();
            let mut dn = design.cascade.r.clone();
            up[u] += h;
            dn[u] -= h;
            let fd = (h_n(&up, omega) - h_n(&dn, omega)) / (2.0 * h);
            let a = analytic[u].norm();
            if a > 0.0 {
                worst = worst.max((analytic[u] - fd).norm() / a);
            }
        }
    }
    worst
}

pub fn simulate(cfg: &DesignConfig) -> Result<(), CliError> {
    let design = cfg.design()?;
    if !design.spec.is_cascaded() {
        return Err(CliError::Config(
            "simulate runs the cascaded decimator; set pp_split = -1".into(),
        ));
    }
    let report = word_lengths(cfg, &design)?;
    let fmt: FixedPointFormat = report.format();
    let sd = cfg.sd_config();
    let run = run_experiment(&sd, &design, &fmt)?;
    let dir = cfg.out_dir.join("simulation");
    run.write_dir(&dir, Some(&json!({ "config": cfg.echo(), "report": report })))?;
    let edge = sd.fx_ratio * cfg.decimation_factor as f64;
    println!(
        "{} samples -> {} decimated, F_n = {}, widths {:?}, overloads {}, decimated band edge {edge:.4}",
        run.bitstream.len(),
        run.decimated.len(),
        fmt.f_n,
        fmt.i_n,
        run.overload_count
    );
    println!("  written to {}", dir.display());
    Ok(())
}

pub fn compare(cfg: &DesignConfig) -> Result<(), CliError> {
    let design = cfg.design()?;
    let bands = cfg.bands()?;
    let grid = FrequencyGrid::new(&bands, cfg.points_per_band, cfg.global_points)?;
    let g = ResponseGrid::evaluate(&grid, &design);
    let c = ResponseGrid::evaluate(&grid, &CombSpec::new(cfg.decimation_factor, 3)?);
    let a_g = attenuation_per_band(&g, &bands);
    let a_c = attenuation_per_band(&c, &bands);
    let mut rows: Vec<Vec<String>> = (0..bands.k_max)
        .map(|k| {
            vec![
                (k + 1).to_string(),
                bands.centre(k + 1).to_string(),
                a_g[k].to_string(),
                a_c[k].to_string(),
                (a_g[k] - a_c[k]).to_string(),
            ]
        })
        .collect();
    let (wg, wc) = (worst_case_attenuation(&g)?, worst_case_attenuation(&c)?);
    rows.push(vec![
        "worst".into(),
        String::new(),
        wg.to_string(),
        wc.to_string(),
        (wg - wc).to_string(),
    ]);
    write_table_csv(
        &cfg.out_dir.join("compare.csv"),
        &["band", "centre", "gcf_dB", "comb_dB", "improvement_dB"],
        &rows,
        &cfg.echo(),
    )?;
    println!("band  centre    GCF dB   comb dB   gain dB");
    for (k, (x, y)) in a_g.iter().zip(&a_c).enumerate() {
        println!("{:>4}  {:.5}  {x:>7.2}  {y:>8.2}  {:>8.2}", k + 1, bands.centre(k + 1), x - y);
    }
    println!("worst           {wg:>7.2}  {wc:>8.2}  {:>8.2}", wg - wc);
    Ok(())
}
