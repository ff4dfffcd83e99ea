//! Table builders of the reporting subcommands.

use calabi_bergman::center_of_mass::{center_of_mass, mu_outside};
use calabi_bergman::fiber_integrals::band_sweep;
use calabi_bergman::profile::{double_root_residuals, MomentumProfile};
use calabi_bergman::riemann_roch::{band_count, dimension_report, FiberArea};
use calabi_bergman::transforms::CoordinateChart;

use crate::config::RunConfig;
use crate::table::{Cell, Table};
use crate::CliError;

pub const DEFAULT_K: f64 = 400.0;
pub const DEFAULT_K_LIST: [f64; 3] = [100.0, 200.0, 400.0];
const PHI_SAMPLES: usize = 8;

pub fn chart(cfg: &RunConfig) -> Result<CoordinateChart, CliError> {
    let mp = MomentumProfile::new(cfg.params.clone())?;
    Ok(CoordinateChart::new(mp)?)
}

pub fn profile(cfg: &RunConfig) -> Result<Table, CliError> {
    let mp = MomentumProfile::new(cfg.params.clone())?;
    let tau0 = mp.tau0();
    let f = mp.cofactor()?;
    let grid = 10_000;
    let min_f = (0..grid)
        .map(|i| f.eval(tau0 * i as f64 / (grid - 1) as f64))
        .fold(f64::INFINITY, f64::min);
    let (phi0, dphi0) = double_root_residuals(&mp);
    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |q: String, v: Cell| t.push(vec![Cell::Str(q), v]);
    row("n".into(), (mp.n() as i64).into());
    row("s_m".into(), mp.params().s_m().into());
    row("c0".into(), mp.c0().into());
    row("tau0".into(), tau0.into());
    row("eta2_tau0".into(), mp.eta2_at_tau0()?.into());
    row("factor_min_f".into(), min_f.into());
    row("phi_tau0_abs".into(), phi0.into());
    row("dphi_tau0_abs".into(), dphi0.into());
    for i in 1..PHI_SAMPLES {
        let tau = tau0 * i as f64 / PHI_SAMPLES as f64;
        row(format!("phi({i}/{PHI_SAMPLES} tau0)"), mp.phi(tau).into());
    }
    Ok(t)
}

pub fn dims(cfg: &RunConfig) -> Result<Table, CliError> {
    let mp = MomentumProfile::new(cfg.params.clone())?;
    let area = FiberArea::Approx(mp.tau0());
    let mut t = Table::new(&[
        "k",
        "dim_hk",
        "band_total",
        "band_count",
        "a0",
        "a1",
        "b0",
        "b1",
        "vol_lhat",
        "vol_d",
        "sigma",
        "normalized_volume",
    ]);
    for k in cfg.k_values(&DEFAULT_K_LIST)? {
        let d = dimension_report(&cfg.geometry, &area, k)?;
        t.push(vec![
            k.into(),
            d.dim_hk.into(),
            d.band_total.into(),
            d.band_multiplicities.len().into(),
            d.a0.into(),
            d.a1.into(),
            d.b0.into(),
            d.b1.into(),
            d.vol_lhat.into(),
            d.vol_d.into(),
            d.sigma.into(),
            d.normalized_volume().into(),
        ]);
    }
    Ok(t)
}

pub fn bands(cfg: &RunConfig) -> Result<Table, CliError> {
    let ch = chart(cfg)?;
    let k = cfg.single_k(DEFAULT_K)?;
    let a_values: Vec<f64> = cfg.band_range(band_count(k, ch.tau0())).map(|a| a as f64).collect();
    let mut t = Table::new(&["a", "tau_a", "t_a", "log_I_exact", "log_I_laplace", "rel_err", "regime"]);
    for b in band_sweep(&ch, k, &a_values, cfg.quad_tol) {
        let b = b?;
        t.push(vec![
            (b.a as i64).into(),
            b.tau_a.into(),
            b.t_a.into(),
            b.log_i_exact.into(),
            b.log_i_laplace.into(),
            b.rel_err().into(),
            b.regime.as_str().into(),
        ]);
    }
    Ok(t)
}

pub fn mu(cfg: &RunConfig) -> Result<Table, CliError> {
    let ch = chart(cfg)?;
    let k = cfg.single_k(DEFAULT_K)?;
    let r = center_of_mass(&ch, &cfg.geometry, k, cfg.quad_tol)?;
    let mut t = Table::new(&["a", "m_a", "regime", "mu_a", "mu_fiber", "mu_outside", "mu_d"]);
    for a in cfg.band_range(r.entries.len()) {
        let e = &r.entries[a - 1];
        t.push(vec![
            e.a.into(),
            e.m_a.into(),
            e.regime.as_str().into(),
            e.mu_a.into(),
            e.mu_fiber.into(),
            e.mu_outside.into(),
            e.mu_d.into(),
        ]);
    }
    Ok(t)
}

pub fn energy(cfg: &RunConfig) -> Result<Table, CliError> {
    let ch = chart(cfg)?;
    let mut t = Table::new(&[
        "k",
        "diag_energy",
        "trace_residual",
        "modeled_offdiag",
        "v",
        "sigma",
        "c0",
        "dim_hk",
        "energy_per_dim",
        "v_expansion_residual_k2",
        "outside_minus_v_k2",
    ]);
    for k in cfg.k_values(&DEFAULT_K_LIST)? {
        let r = center_of_mass(&ch, &cfg.geometry, k, cfg.quad_tol)?;
        let e = r.energy;
        t.push(vec![
            k.into(),
            e.diag_energy.into(),
            e.trace_residual.into(),
            e.modeled_offdiag.into(),
            e.v.into(),
            r.sigma.into(),
            r.c0.into(),
            r.dim_hk.into(),
            (e.diag_energy / r.dim_hk).into(),
            ((e.v - 1.0 - r.sigma / k) * k * k).into(),
            ((mu_outside(ch.profile(), k) - e.v) * k * k).into(),
        ]);
    }
    Ok(t)
}
