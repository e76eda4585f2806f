//! Plain-text key=value configuration with '#' comments. Unknown keys are
//! rejected with the offending line number; missing keys take the default
//! simulation parameters.

use fkqkd::channel::{ChannelSpec, SourceSpec};
use fkqkd::detector::DetectorSpec;
use fkqkd::key_length::{compose_budget, SecurityBudget};
use fkqkd::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub length_km: f64,
    pub alpha_db_per_km: f64,
    pub p_dark: f64,
    pub eta_det: f64,
    pub e_mis: f64,
    pub n_total: u64,
    pub p_za: f64,
    pub p_zb: f64,
    pub f_ec: f64,
    pub tol_eta: f64,
    pub tol_dc: f64,
    pub delta_spf: f64,
    pub eps_side: f64,
    pub eps_sec: f64,
    pub eps_corr: f64,
    pub sweep_l_min: f64,
    pub sweep_l_max: f64,
    pub sweep_l_step: f64,
    pub decoy_fraction: f64,
    pub mc_trials: u64,
    pub mc_seed: u64,
    pub mc_eps_sq: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            length_km: 0.0,
            alpha_db_per_km: 0.2,
            p_dark: 1e-8,
            eta_det: 0.73,
            e_mis: 0.0,
            n_total: 1_000_000_000_000,
            p_za: 0.5,
            p_zb: 0.5,
            f_ec: 1.16,
            tol_eta: 0.0,
            tol_dc: 0.0,
            delta_spf: 0.0,
            eps_side: 0.0,
            eps_sec: 1e-10,
            eps_corr: 1e-10,
            sweep_l_min: 0.0,
            sweep_l_max: 200.0,
            sweep_l_step: 10.0,
            decoy_fraction: 0.5,
            mc_trials: 100_000,
            mc_seed: 1,
            mc_eps_sq: 0.01,
        }
    }
}

/// Parses key=value text; validates every invariant the typed specs impose.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg = Config::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Domain(format!("line {line_no}: expected key=value, got {line:?}"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let f = |field: &mut f64| -> Result<()> {
            *field = value.parse::<f64>().map_err(|e| {
                Error::Domain(format!("line {line_no}: bad value for {key}: {e}"))
            })?;
            Ok(())
        };
        let u = |field: &mut u64| -> Result<()> {
            // Accept scientific notation for counts (n_total=1e12).
            if let Ok(v) = value.parse::<u64>() {
                *field = v;
                return Ok(());
            }
            let v = value.parse::<f64>().map_err(|e| {
                Error::Domain(format!("line {line_no}: bad value for {key}: {e}"))
            })?;
            if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                return Err(Error::Domain(format!(
                    "line {line_no}: {key} must be a non-negative integer, got {value}"
                )));
            }
            *field = v as u64;
            Ok(())
        };
        match key {
            "length_km" => f(&mut cfg.length_km)?,
            "alpha_db_per_km" => f(&mut cfg.alpha_db_per_km)?,
            "p_dark" => f(&mut cfg.p_dark)?,
            "eta_det" => f(&mut cfg.eta_det)?,
            "e_mis" => f(&mut cfg.e_mis)?,
            "n_total" => u(&mut cfg.n_total)?,
            "p_za" => f(&mut cfg.p_za)?,
            "p_zb" => f(&mut cfg.p_zb)?,
            "f_ec" => f(&mut cfg.f_ec)?,
            "tol_eta" => f(&mut cfg.tol_eta)?,
            "tol_dc" => f(&mut cfg.tol_dc)?,
            "delta_spf" => f(&mut cfg.delta_spf)?,
            "eps_side" => f(&mut cfg.eps_side)?,
            "eps_sec" => f(&mut cfg.eps_sec)?,
            "eps_corr" => f(&mut cfg.eps_corr)?,
            "sweep_l_min" => f(&mut cfg.sweep_l_min)?,
            "sweep_l_max" => f(&mut cfg.sweep_l_max)?,
            "sweep_l_step" => f(&mut cfg.sweep_l_step)?,
            "decoy_fraction" => f(&mut cfg.decoy_fraction)?,
            "mc_trials" => u(&mut cfg.mc_trials)?,
            "mc_seed" => u(&mut cfg.mc_seed)?,
            "mc_eps_sq" => f(&mut cfg.mc_eps_sq)?,
            _ => {
                return Err(Error::Domain(format!(
                    "line {line_no}: unknown key {key:?}"
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    /// Cross-field validation via the typed specs.
    pub fn validate(&self) -> Result<()> {
        self.channel_spec().validate()?;
        self.detector_spec()?;
        self.source_spec().validate()?;
        compose_budget(self.eps_sec, self.eps_corr, false)?;
        if !(0.0..=1.0).contains(&self.decoy_fraction) {
            return Err(Error::Domain(format!(
                "decoy_fraction {} outside [0, 1]",
                self.decoy_fraction
            )));
        }
        if self.sweep_l_step <= 0.0 || self.sweep_l_max < self.sweep_l_min {
            return Err(Error::Domain("bad sweep grid".into()));
        }
        if !(self.mc_eps_sq > 0.0 && self.mc_eps_sq <= 1.0) {
            return Err(Error::Domain(format!(
                "mc_eps_sq {} outside (0, 1]",
                self.mc_eps_sq
            )));
        }
        Ok(())
    }

    /// Normalized dump: one line per key, fixed order, parseable back.
    pub fn dump(&self) -> String {
        let f = |v: f64| format!("{v:.17e}");
        [
            format!("alpha_db_per_km={}", f(self.alpha_db_per_km)),
            format!("decoy_fraction={}", f(self.decoy_fraction)),
            format!("delta_spf={}", f(self.delta_spf)),
            format!("e_mis={}", f(self.e_mis)),
            format!("eps_corr={}", f(self.eps_corr)),
            format!("eps_sec={}", f(self.eps_sec)),
            format!("eps_side={}", f(self.eps_side)),
            format!("eta_det={}", f(self.eta_det)),
            format!("f_ec={}", f(self.f_ec)),
            format!("length_km={}", f(self.length_km)),
            format!("mc_eps_sq={}", f(self.mc_eps_sq)),
            format!("mc_seed={}", self.mc_seed),
            format!("mc_trials={}", self.mc_trials),
            format!("n_total={}", self.n_total),
            format!("p_dark={}", f(self.p_dark)),
            format!("p_za={}", f(self.p_za)),
            format!("p_zb={}", f(self.p_zb)),
            format!("sweep_l_max={}", f(self.sweep_l_max)),
            format!("sweep_l_min={}", f(self.sweep_l_min)),
            format!("sweep_l_step={}", f(self.sweep_l_step)),
            format!("tol_dc={}", f(self.tol_dc)),
            format!("tol_eta={}", f(self.tol_eta)),
        ]
        .join("\n")
            + "\n"
    }

    pub fn channel_spec(&self) -> ChannelSpec {
        ChannelSpec {
            length_km: self.length_km,
            alpha_db_per_km: self.alpha_db_per_km,
            p_dark: self.p_dark,
            eta_det: self.eta_det,
            e_mis: self.e_mis,
            n_total: self.n_total,
            p_za: self.p_za,
            p_zb: self.p_zb,
            f_ec: self.f_ec,
        }
    }

    pub fn detector_spec(&self) -> Result<DetectorSpec> {
        DetectorSpec::new(self.eta_det, self.p_dark, self.tol_eta, self.tol_dc)
    }

    pub fn source_spec(&self) -> SourceSpec {
        SourceSpec {
            delta_spf: self.delta_spf,
            eps_side: self.eps_side,
        }
    }

    pub fn budget(&self, decoy: bool) -> Result<SecurityBudget> {
        compose_budget(self.eps_sec, self.eps_corr, decoy)
    }

    pub fn sweep_grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut l = self.sweep_l_min;
        while l <= self.sweep_l_max + 1e-9 {
            grid.push(l);
            l += self.sweep_l_step;
        }
        grid
    }
}
