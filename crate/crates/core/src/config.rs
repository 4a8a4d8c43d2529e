//! Flat key-value experiment configuration.
//!
//! A config file is plain text: one `key = value` per line, `#` starts a
//! comment. The same keys back the command line's `--set key=value`
//! overrides. Unknown keys are rejected so typos surface immediately.
//!
//! Keys: `variant`, `snr_db`, `sir_db`, `doppler_hz`, `delay_us`,
//! `theta_desired`, `theta_cci`, `path_powers`, `n_rx`, `frames_per_point`,
//! `seed`, `subcarriers`, `cp_len`, `pilot_count`, `pilot_seed`, `mu`,
//! `mu_scale`, `lms_frames`, `lms_tolerance`, `lms_init`, `reference`,
//! `train`, `null_width_deg`, `grid_points`, `interferer_mode`, `trellis`,
//! `trellis_states`, `trellis_table`.

use crate::beamform::{LmsConfig, PilotReference, StepSize, WeightInit};
use crate::error::{Error, Result};
use crate::sim::{CancellerVariant, InterfererMode, SimConfig, TrainMode, TrellisSpec};

fn bad(key: &str, value: &str, want: &str) -> Error {
    Error::Config(format!("key '{key}': cannot parse '{value}' as {want}"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    match value.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        v => v.parse().map_err(|_| bad(key, value, "a number")),
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(key, value, "an unsigned integer"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(key, value, "an unsigned integer"))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_f64(key, v))
        .collect()
}

fn parse_angle_pair(key: &str, value: &str) -> Result<[f64; 2]> {
    let parts = parse_f64_list(key, value)?;
    if parts.len() != 2 {
        return Err(bad(key, value, "an angle pair 'a,b'"));
    }
    Ok([parts[0], parts[1]])
}

/// Apply one override to a config.
pub fn apply_kv(cfg: &mut SimConfig, key: &str, value: &str) -> Result<()> {
    let key = key.trim();
    let value = value.trim();
    match key {
        "variant" => {
            cfg.variant = match value {
                "conventional" => CancellerVariant::Conventional,
                "null-steering" | "nullsteer" => CancellerVariant::NullSteering,
                "adaptive" | "adaptive-deepening" => CancellerVariant::AdaptiveDeepening,
                _ => {
                    return Err(bad(
                        key,
                        value,
                        "one of conventional | null-steering | adaptive",
                    ))
                }
            }
        }
        "snr_db" => cfg.snr_db = parse_f64_list(key, value)?,
        "sir_db" => cfg.sir_db = parse_f64(key, value)?,
        "doppler_hz" => cfg.doppler_hz = parse_f64(key, value)?,
        "delay_us" => cfg.delay_us = parse_f64(key, value)?,
        "theta_desired" => cfg.desired_doas = parse_angle_pair(key, value)?,
        "theta_cci" => {
            cfg.interferer_doas = if value.is_empty() || value == "none" {
                Vec::new()
            } else {
                value
                    .split(';')
                    .map(|pair| parse_angle_pair(key, pair))
                    .collect::<Result<_>>()?
            }
        }
        "path_powers" => {
            let p = parse_f64_list(key, value)?;
            if p.len() != 2 {
                return Err(bad(key, value, "two path powers 'p1,p2'"));
            }
            cfg.path_powers = [p[0], p[1]];
        }
        "n_rx" => cfg.n_rx = parse_usize(key, value)?,
        "frames_per_point" | "frames" => cfg.frames_per_point = parse_usize(key, value)?,
        "seed" => cfg.seed = parse_u64(key, value)?,
        "subcarriers" => cfg.subcarriers = parse_usize(key, value)?,
        "cp_len" => cfg.cp_len = parse_usize(key, value)?,
        "pilot_count" => cfg.pilot_count = parse_usize(key, value)?,
        "pilot_seed" => cfg.pilot_seed = parse_u64(key, value)?,
        "mu" => {
            cfg.lms.step = match value {
                "auto" => StepSize::Auto { scale: 0.5 },
                v => StepSize::Fixed(parse_f64(key, v)?),
            }
        }
        "mu_scale" => cfg.lms.step = StepSize::Auto {
            scale: parse_f64(key, value)?,
        },
        "lms_frames" => cfg.lms.max_frames = parse_usize(key, value)?,
        "lms_tolerance" => cfg.lms.tolerance = parse_f64(key, value)?,
        "lms_init" => {
            cfg.lms.init = if value == "e1" {
                WeightInit::FirstElement
            } else if let Some(theta) = value.strip_prefix("steer:") {
                WeightInit::Steer(parse_f64(key, theta)?)
            } else {
                return Err(bad(key, value, "'e1' or 'steer:<degrees>'"));
            }
        }
        "reference" => {
            cfg.reference = match value {
                "path" | "path-mixture" => PilotReference::PathMixture,
                "antenna" | "antenna-pilot" => PilotReference::AntennaPilot,
                _ => return Err(bad(key, value, "'path' or 'antenna'")),
            }
        }
        "train" => {
            cfg.train = match value {
                "per-point" => TrainMode::PerPoint,
                "per-trial" => TrainMode::PerTrial,
                _ => return Err(bad(key, value, "'per-point' or 'per-trial'")),
            }
        }
        "null_width_deg" => cfg.null_width_deg = parse_f64(key, value)?,
        "grid_points" => cfg.grid_points = parse_usize(key, value)?,
        "interferer_mode" => {
            cfg.interferer_mode = match value {
                "sttc" => InterfererMode::Sttc,
                "white" | "white-qpsk" => InterfererMode::WhiteQpsk,
                _ => return Err(bad(key, value, "'sttc' or 'white'")),
            }
        }
        "trellis" => {
            cfg.trellis = match value {
                "default16" => TrellisSpec::Default16,
                "dd4" | "delay-diversity" => TrellisSpec::DelayDiversity4,
                _ => return Err(bad(key, value, "'default16' or 'dd4'")),
            }
        }
        "trellis_states" => {
            let n = parse_usize(key, value)?;
            cfg.trellis = match std::mem::replace(&mut cfg.trellis, TrellisSpec::Default16) {
                TrellisSpec::Table { entries, .. } => TrellisSpec::Table {
                    n_states: n,
                    entries,
                },
                _ => TrellisSpec::Table {
                    n_states: n,
                    entries: Vec::new(),
                },
            };
        }
        "trellis_table" => {
            // 'next,out1,out2' triples joined by ';', state-major then input
            let entries: Vec<(u16, u8, u8)> = value
                .split(';')
                .map(|triple| -> Result<(u16, u8, u8)> {
                    let nums: Vec<&str> = triple.split(',').map(str::trim).collect();
                    if nums.len() != 3 {
                        return Err(bad(key, triple, "'next,out1,out2'"));
                    }
                    Ok((
                        nums[0].parse().map_err(|_| bad(key, triple, "integers"))?,
                        nums[1].parse().map_err(|_| bad(key, triple, "integers"))?,
                        nums[2].parse().map_err(|_| bad(key, triple, "integers"))?,
                    ))
                })
                .collect::<Result<_>>()?;
            cfg.trellis = match std::mem::replace(&mut cfg.trellis, TrellisSpec::Default16) {
                TrellisSpec::Table { n_states, .. } => TrellisSpec::Table { n_states, entries },
                _ => TrellisSpec::Table {
                    n_states: entries.len() / 4,
                    entries,
                },
            };
        }
        _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
    }
    Ok(())
}

/// Parse a config document on top of the defaults.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    parse_config_onto(SimConfig::default(), text)
}

/// Parse a config document on top of an existing config.
pub fn parse_config_onto(mut cfg: SimConfig, text: &str) -> Result<SimConfig> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        apply_kv(&mut cfg, key, value)?;
    }
    Ok(cfg)
}

/// Render a config as a document that [`parse_config`] reads back.
pub fn render_config(cfg: &SimConfig) -> String {
    let variant = match cfg.variant {
        CancellerVariant::Conventional => "conventional",
        CancellerVariant::NullSteering => "null-steering",
        CancellerVariant::AdaptiveDeepening => "adaptive",
    };
    let fmt_f64 = |x: f64| {
        if x.is_infinite() {
            "inf".to_string()
        } else {
            format!("{x}")
        }
    };
    let snr = cfg
        .snr_db
        .iter()
        .map(|&s| fmt_f64(s))
        .collect::<Vec<_>>()
        .join(",");
    let cci = cfg
        .interferer_doas
        .iter()
        .map(|p| format!("{},{}", p[0], p[1]))
        .collect::<Vec<_>>()
        .join(";");
    let mut out = String::new();
    out.push_str(&format!("variant = {variant}\n"));
    out.push_str(&format!("snr_db = {snr}\n"));
    out.push_str(&format!("sir_db = {}\n", fmt_f64(cfg.sir_db)));
    out.push_str(&format!("doppler_hz = {}\n", cfg.doppler_hz));
    out.push_str(&format!("delay_us = {}\n", cfg.delay_us));
    out.push_str(&format!(
        "theta_desired = {},{}\n",
        cfg.desired_doas[0], cfg.desired_doas[1]
    ));
    out.push_str(&format!("theta_cci = {}\n", if cci.is_empty() { "none" } else { &cci }));
    out.push_str(&format!(
        "path_powers = {},{}\n",
        cfg.path_powers[0], cfg.path_powers[1]
    ));
    out.push_str(&format!("n_rx = {}\n", cfg.n_rx));
    out.push_str(&format!("frames_per_point = {}\n", cfg.frames_per_point));
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out.push_str(&format!("subcarriers = {}\n", cfg.subcarriers));
    out.push_str(&format!("cp_len = {}\n", cfg.cp_len));
    out.push_str(&format!("pilot_count = {}\n", cfg.pilot_count));
    out.push_str(&format!("pilot_seed = {}\n", cfg.pilot_seed));
    match cfg.lms.step {
        StepSize::Auto { scale } => out.push_str(&format!("mu_scale = {scale}\n")),
        StepSize::Fixed(mu) => out.push_str(&format!("mu = {mu}\n")),
    }
    out.push_str(&format!("lms_frames = {}\n", cfg.lms.max_frames));
    out.push_str(&format!("lms_tolerance = {}\n", cfg.lms.tolerance));
    match cfg.lms.init {
        WeightInit::FirstElement => out.push_str("lms_init = e1\n"),
        WeightInit::Steer(t) => out.push_str(&format!("lms_init = steer:{t}\n")),
    }
    out.push_str(&format!(
        "reference = {}\n",
        match cfg.reference {
            PilotReference::PathMixture => "path",
            PilotReference::AntennaPilot => "antenna",
        }
    ));
    out.push_str(&format!(
        "train = {}\n",
        match cfg.train {
            TrainMode::PerPoint => "per-point",
            TrainMode::PerTrial => "per-trial",
        }
    ));
    out.push_str(&format!("null_width_deg = {}\n", cfg.null_width_deg));
    out.push_str(&format!("grid_points = {}\n", cfg.grid_points));
    out.push_str(&format!(
        "interferer_mode = {}\n",
        match cfg.interferer_mode {
            InterfererMode::Sttc => "sttc",
            InterfererMode::WhiteQpsk => "white",
        }
    ));
    match &cfg.trellis {
        TrellisSpec::Default16 => out.push_str("trellis = default16\n"),
        TrellisSpec::DelayDiversity4 => out.push_str("trellis = dd4\n"),
        TrellisSpec::Table { n_states, entries } => {
            out.push_str(&format!("trellis_states = {n_states}\n"));
            let table = entries
                .iter()
                .map(|(n, a, b)| format!("{n},{a},{b}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!("trellis_table = {table}\n"));
        }
    }
    out
}

/// Default LMS settings exposed for documentation.
pub fn default_lms() -> LmsConfig {
    LmsConfig::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_text() {
        let mut cfg = SimConfig::default();
        cfg.variant = CancellerVariant::NullSteering;
        cfg.snr_db = vec![8.0, 12.0];
        cfg.sir_db = f64::INFINITY;
        cfg.interferer_doas = vec![[50.0, -20.0], [80.0, 0.0]];
        cfg.lms.step = StepSize::Fixed(1e-3);
        let text = render_config(&cfg);
        let back = parse_config(&text).unwrap();
        assert_eq!(back.variant, cfg.variant);
        assert_eq!(back.snr_db, cfg.snr_db);
        assert!(back.sir_db.is_infinite());
        assert_eq!(back.interferer_doas, cfg.interferer_doas);
        assert_eq!(back.lms.step, cfg.lms.step);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = parse_config(
            "# experiment\n\nsnr_db = 10,12 # grid\nseed=42\n",
        )
        .unwrap();
        assert_eq!(cfg.snr_db, vec![10.0, 12.0]);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(matches!(
            parse_config("bogus = 1\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse_config("snr_db = banana\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse_config("snr_db\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn trellis_table_parses() {
        // a 1-state code written out explicitly
        let cfg = parse_config(
            "trellis_states = 1\ntrellis_table = 0,0,0;0,1,1;0,2,2;0,3,3\n",
        )
        .unwrap();
        match &cfg.trellis {
            TrellisSpec::Table { n_states, entries } => {
                assert_eq!(*n_states, 1);
                assert_eq!(entries.len(), 4);
            }
            other => panic!("expected table, got {other:?}"),
        }
        cfg.trellis.build().unwrap();
    }

    #[test]
    fn empty_cci_list() {
        let cfg = parse_config("theta_cci = none\n").unwrap();
        assert!(cfg.interferer_doas.is_empty());
    }
}
