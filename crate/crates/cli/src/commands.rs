//! The six subcommands, each producing a [`Table`] from resolved run
//! inputs. Exit codes: every command reports usage and configuration
//! problems as errors (code 2); `check-appendix` additionally returns
//! code 1 when an identity fails its 4-sigma test.

use serde_json::json;

use voltex::mc::{appendix_full_report, mc_atm_skew, mc_smile, IdentityKind};
use voltex::quad::adaptive_simpson;

use crate::config::{CliError, ModelSpec, Resolved, Result};
use crate::output::{Cell, Table};

const OUT_OF_DOMAIN: &str = "expansion-out-of-domain";
const OUT_OF_BOUNDS: &str = "mc-out-of-bounds";

/// Expansion coefficients per maturity, with the vol-of-vol regime
/// diagnostic for rough Bergomi (blank for regular models, which have no
/// short-maturity regime constraint).
pub fn coeffs(r: &Resolved) -> Result<Table> {
    let model = r.model()?;
    let mut t = Table::new(
        "coeffs",
        &["theta", "sigma0", "kappa2", "kappa3", "kappa4", "eta_theta_H", "regime_warning"],
    );
    for &theta in &r.thetas {
        let (c, eta_theta_h, warn) = model.coefficients(theta)?;
        if warn {
            eprintln!(
                "warning: eta * theta^h = {} >= 1 at theta = {theta}; the expansion's \
                 small-vol-of-vol regime is strained there",
                eta_theta_h.expect("the warning only arises with the diagnostic present")
            );
        }
        t.push(vec![
            Cell::Num(theta),
            Cell::Num(c.sigma0()),
            Cell::Num(c.kappa2()),
            Cell::Num(c.kappa3()),
            Cell::Num(c.kappa4()),
            eta_theta_h.map(Cell::Num).unwrap_or(Cell::Blank),
            Cell::Bool(warn),
        ]);
    }
    Ok(t)
}

/// Second-order implied-vol smile on the z grid. Points where the
/// expansion leaves its domain (the quadratic dips to zero or below) get
/// a blank value and a flag instead of aborting the run.
pub fn smile(r: &Resolved) -> Result<Table> {
    let model = r.model()?;
    let mut t = Table::new("smile", &["theta", "z", "k", "iv_expansion", "flag"]);
    for &theta in &r.thetas {
        let (c, _, _) = model.coefficients(theta)?;
        for &z in &r.z_grid {
            let k = theta.sqrt() * z;
            match c.implied_vol_expansion(z) {
                Ok(iv) => t.push(vec![
                    Cell::Num(theta),
                    Cell::Num(z),
                    Cell::Num(k),
                    Cell::Num(iv),
                    Cell::Blank,
                ]),
                Err(voltex::Error::ExpansionOutOfDomain { .. }) => t.push(vec![
                    Cell::Num(theta),
                    Cell::Num(z),
                    Cell::Num(k),
                    Cell::Blank,
                    Cell::Str(OUT_OF_DOMAIN.into()),
                ]),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(t)
}

/// Expansion vs Monte Carlo smile on shared paths, one simulation per
/// maturity. Rows keep going when either side degenerates: the expansion
/// out of its domain or the Monte Carlo price outside the no-arbitrage
/// band both flag the row rather than stopping the run.
pub fn mc_compare(r: &Resolved) -> Result<Table> {
    let model = r.model()?;
    let params = model.rough("mc-compare")?;
    let mut t = Table::new(
        "mc-compare",
        &[
            "theta",
            "z",
            "k",
            "iv_expansion",
            "iv_mc",
            "iv_mc_stderr",
            "abs_gap",
            "gap_in_stderr",
            "flag",
        ],
    );
    for &theta in &r.thetas {
        let (c, _, _) = model.coefficients(theta)?;
        let points = mc_smile(params, &r.mc, theta, &r.z_grid)?;
        for pt in &points {
            let mut flags: Vec<&str> = Vec::new();
            let iv_exp = match c.implied_vol_expansion(pt.z) {
                Ok(iv) => Some(iv),
                Err(voltex::Error::ExpansionOutOfDomain { .. }) => {
                    flags.push(OUT_OF_DOMAIN);
                    None
                }
                Err(e) => return Err(e.into()),
            };
            let mc = match &pt.point {
                Some(sp) => Some((sp.iv, sp.stderr.unwrap_or(0.0))),
                None => {
                    flags.push(OUT_OF_BOUNDS);
                    None
                }
            };
            let gap = match (iv_exp, mc) {
                (Some(e), Some((m, _))) => Some((e - m).abs()),
                _ => None,
            };
            let gap_in_se = match (gap, mc) {
                (Some(g), Some((_, se))) if se > 0.0 => Some(g / se),
                _ => None,
            };
            let opt = |v: Option<f64>| v.map(Cell::Num).unwrap_or(Cell::Blank);
            t.push(vec![
                Cell::Num(theta),
                Cell::Num(pt.z),
                Cell::Num(pt.k),
                opt(iv_exp),
                opt(mc.map(|(m, _)| m)),
                opt(mc.map(|(_, se)| se)),
                opt(gap),
                opt(gap_in_se),
                if flags.is_empty() {
                    Cell::Blank
                } else {
                    Cell::Str(flags.join(";"))
                },
            ]);
        }
    }
    Ok(t)
}

/// Least-squares fit of ln|y| against ln x. None when the fit is
/// degenerate (a zero or non-finite skew has no log).
fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mut pts = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        let (lx, ly) = (x.ln(), y.abs().ln());
        if !lx.is_finite() || !ly.is_finite() {
            return None;
        }
        pts.push((lx, ly));
    }
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, mean_y - slope * mean_x))
}

/// At-the-money skew and curvature per maturity, with a Monte Carlo skew
/// column (rough Bergomi, unless skipped) and a power-law fit of the
/// term structure in the footer. The fit runs on the Monte Carlo skews
/// when present, otherwise on the expansion skews; its slope estimates
/// h - 1/2, reported as `implied_h = slope + 1/2`.
pub fn skew(r: &Resolved, bump_z: f64, no_mc: bool) -> Result<Table> {
    if r.thetas.len() < 3 {
        return Err(CliError(format!(
            "config error: `skew` fits a power law across maturities and needs at least \
             3 values in theta_list, got {}",
            r.thetas.len()
        )));
    }
    if !(bump_z > 0.0) || !bump_z.is_finite() {
        return Err(CliError(format!(
            "config error: --bump-z must be positive and finite, got {bump_z}"
        )));
    }
    let model = r.model()?;
    let with_mc = !no_mc && matches!(model, ModelSpec::Rough(_));
    let mut t = Table::new(
        "skew",
        &["theta", "skew_expansion", "curvature_expansion", "skew_mc", "skew_mc_stderr"],
    );
    let mut fit_ys = Vec::with_capacity(r.thetas.len());
    for &theta in &r.thetas {
        let (c, _, _) = model.coefficients(theta)?;
        let mc = if with_mc {
            let rep = mc_atm_skew(model.rough("skew")?, &r.mc, theta, bump_z * theta.sqrt())?;
            Some(rep)
        } else {
            None
        };
        fit_ys.push(mc.as_ref().map(|rep| rep.skew).unwrap_or_else(|| c.atm_skew()));
        t.push(vec![
            Cell::Num(theta),
            Cell::Num(c.atm_skew()),
            Cell::Num(c.atm_curvature()),
            mc.as_ref().map(|rep| Cell::Num(rep.skew)).unwrap_or(Cell::Blank),
            mc.as_ref().map(|rep| Cell::Num(rep.stderr)).unwrap_or(Cell::Blank),
        ]);
    }
    let series = if with_mc { "mc" } else { "expansion" };
    t.meta.push(match log_log_fit(&r.thetas, &fit_ys) {
        Some((slope, intercept)) => json!({
            "series": series,
            "slope": slope,
            "intercept": intercept,
            "implied_h": slope + 0.5,
        }),
        None => json!({
            "series": series,
            "slope": null,
            "intercept": null,
            "implied_h": null,
        }),
    });
    Ok(t)
}

/// Second-order density of the normalized log return on the x grid, with
/// one footer per maturity reporting the numerical integral of the
/// density over [-12, 12] (which should sit within 1e-8 of one).
pub fn density(r: &Resolved) -> Result<Table> {
    let model = r.model()?;
    let x_grid = r.x_grid.as_ref().ok_or_else(|| {
        CliError("config error: `density` needs an x_grid in the configuration".into())
    })?;
    let mut t = Table::new("density", &["theta", "x", "q_theta"]);
    for &theta in &r.thetas {
        let (c, _, _) = model.coefficients(theta)?;
        for &x in x_grid {
            t.push(vec![Cell::Num(theta), Cell::Num(x), Cell::Num(c.density_q(x))]);
        }
        let norm = adaptive_simpson(|x| c.density_q(x), -12.0, 12.0, 1e-10);
        t.meta.push(json!({ "theta": theta, "normalization": norm }));
    }
    Ok(t)
}

/// Monte Carlo checks of the kernel-functional identities behind the
/// expansion coefficients: one row per identity carrying its binding
/// projection (the largest |z-score|); an identity passes when every one
/// of its projections sits within 4 standard errors of the analytic
/// value. Returns exit code 1 and names the failures on stderr when any
/// identity fails.
pub fn check_appendix(r: &Resolved) -> Result<(Table, i32)> {
    let rows = appendix_full_report(r.kernel, &r.mc)?;
    let mut t = Table::new(
        "check-appendix",
        &["identity", "analytic", "mc", "stderr", "z_score", "pass"],
    );
    let mut all_pass = true;
    for kind in IdentityKind::ALL {
        let group: Vec<_> = rows.iter().filter(|p| p.identity == kind).collect();
        let binding = group
            .iter()
            .max_by(|a, b| a.z_score.abs().total_cmp(&b.z_score.abs()))
            .expect("every identity reports at least one projection");
        let pass = group.iter().all(|p| p.pass);
        if !pass {
            all_pass = false;
            eprintln!(
                "identity {} failed: |z| = {:.2} exceeds 4",
                kind.name(),
                binding.z_score.abs()
            );
        }
        t.push(vec![
            Cell::Str(kind.name().into()),
            Cell::Num(binding.target),
            Cell::Num(binding.mc_value),
            Cell::Num(binding.stderr),
            Cell::Num(binding.z_score),
            Cell::Bool(pass),
        ]);
    }
    Ok((t, if all_pass { 0 } else { 1 }))
}
