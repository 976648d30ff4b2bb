//! Plain-text key-value experiment configuration.
//!
//! Every key has a built-in default reproducing the stock experiment
//! (10-sensor half-wavelength ULA at 2.4 GHz, N = 2048, B T = 0.8 over the
//! index range [-819, 818], three raised-cosine shaped waves, 100 trials),
//! so an empty file is a valid configuration. Unknown keys are rejected
//! with their line number. `dump()` renders the canonical form; loading a
//! dump reproduces the configuration exactly.

use std::fmt;

use num_complex::Complex;
use wdoa_core::array_model::{ArrayConfig, DoaVector, Pattern};
use wdoa_core::estimator::DetectorConfig;
use wdoa_core::search1d::SearchConfig;
use wdoa_core::signal_sim::{ScenarioConfig, ScenarioKind};

/// Configuration-file errors: parse problems carry the line number,
/// validation problems the field name.
#[derive(Debug)]
pub enum ConfigError {
    Parse {
        line: usize,
        message: String,
    },
    Invalid {
        field: &'static str,
        message: String,
    },
    Core(wdoa_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Invalid { field, message } => write!(f, "invalid `{field}`: {message}"),
            ConfigError::Core(e) => write!(f, "{e}"),
            ConfigError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<wdoa_core::Error> for ConfigError {
    fn from(e: wdoa_core::Error) -> Self {
        ConfigError::Core(e)
    }
}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError::Io(e)
    }
}

/// Which estimator to run, with its compression order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Chebyshev-compressed ML with `P` interpolation terms.
    ChebMl { order: usize },
    /// Bin-compressed ML with `P_b` spectral bins.
    BinMl { bins: usize },
    /// Incoherent MUSIC over `P_b` spectral bins (known component count).
    IcMusic { bins: usize },
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::ChebMl { .. } => "cheb-ml",
            EstimatorKind::BinMl { .. } => "bin-ml",
            EstimatorKind::IcMusic { .. } => "ic-music",
        }
    }

    pub fn order(&self) -> usize {
        match self {
            EstimatorKind::ChebMl { order } => *order,
            EstimatorKind::BinMl { bins } | EstimatorKind::IcMusic { bins } => *bins,
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let (name, order) = text
            .split_once(':')
            .ok_or_else(|| format!("expected `name:order`, got `{text}`"))?;
        let order: usize = order
            .trim()
            .parse()
            .map_err(|_| format!("bad order in `{text}`"))?;
        if order == 0 {
            return Err(format!("order must be positive in `{text}`"));
        }
        match name.trim() {
            "cheb-ml" => Ok(EstimatorKind::ChebMl { order }),
            "bin-ml" => Ok(EstimatorKind::BinMl { bins: order }),
            "ic-music" => Ok(EstimatorKind::IcMusic { bins: order }),
            other => Err(format!("unknown estimator `{other}`")),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.label(), self.order())
    }
}

/// Full experiment description. All frequencies in Hz, delays in units of
/// `1/(2 carrier_hz)`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sensors: usize,
    pub carrier_hz: f64,
    pub velocity_mps: f64,
    pub dft_len: usize,
    pub bt_product: f64,
    pub bandwidth_hz: f64,
    pub r1: i64,
    pub r2: i64,
    pub scenario: ScenarioKind,
    pub amplitudes: Vec<Complex<f64>>,
    pub delays: Vec<f64>,
    pub gamma_true: Vec<f64>,
    pub rolloff: f64,
    pub symbol_rate_hz: f64,
    pub snr_grid_db: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub search_order: usize,
    pub oversample_factor: usize,
    pub p_fa: f64,
    pub snr_clamp_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let carrier = 2.4e9;
        let bandwidth = 0.1 * carrier;
        Self {
            sensors: 10,
            carrier_hz: carrier,
            velocity_mps: 2.99792458e8,
            dft_len: 2048,
            bt_product: 0.8,
            bandwidth_hz: bandwidth,
            r1: -819,
            r2: 818,
            scenario: ScenarioKind::Independent,
            amplitudes: vec![
                Complex::new(0.626, 0.7798),
                Complex::new(-0.4432, -0.552),
                Complex::new(0.3138, 0.3908),
            ],
            delays: vec![0.0, 0.6, 37.53],
            gamma_true: vec![-0.71, -0.63, 0.27],
            rolloff: 0.2,
            symbol_rate_hz: bandwidth,
            snr_grid_db: vec![-10.0, 0.0, 10.0, 20.0, 30.0],
            estimators: vec![
                EstimatorKind::ChebMl { order: 6 },
                EstimatorKind::BinMl { bins: 60 },
                EstimatorKind::IcMusic { bins: 50 },
            ],
            search_order: 50,
            oversample_factor: 2,
            p_fa: 0.01,
            snr_clamp_db: 37.0,
            trials: 100,
            seed: 1,
            output_dir: "out".to_string(),
        }
    }
}

fn parse_complex(text: &str) -> Result<Complex<f64>, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".to_string());
    }
    if !s.ends_with('j') {
        return s
            .parse::<f64>()
            .map(|re| Complex::new(re, 0.0))
            .map_err(|e| e.to_string());
    }
    let body = &s[..s.len() - 1];
    // Split at the last +/- that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            split = Some(i);
            break;
        }
    }
    match split {
        Some(i) => {
            let re: f64 = body[..i]
                .parse()
                .map_err(|_| format!("bad real part in `{text}`"))?;
            let im_text = &body[i..];
            let im: f64 = if im_text == "+" {
                1.0
            } else if im_text == "-" {
                -1.0
            } else {
                im_text
                    .parse()
                    .map_err(|_| format!("bad imaginary part in `{text}`"))?
            };
            Ok(Complex::new(re, im))
        }
        None => {
            let im: f64 = if body.is_empty() {
                1.0
            } else {
                body.parse()
                    .map_err(|_| format!("bad imaginary part in `{text}`"))?
            };
            Ok(Complex::new(0.0, im))
        }
    }
}

fn format_complex(z: &Complex<f64>) -> String {
    if z.im >= 0.0 {
        format!("{:?}+{:?}j", z.re, z.im)
    } else {
        format!("{:?}{:?}j", z.re, z.im)
    }
}

fn parse_list<T, F: Fn(&str) -> Result<T, String>>(text: &str, f: F) -> Result<Vec<T>, String> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed.split(',').map(|tok| f(tok.trim())).collect()
}

impl ExperimentConfig {
    /// Parses the key-value text; missing keys take their defaults,
    /// unknown keys are rejected with the line number.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut symbol_rate_set = false;
        let mut bandwidth_set = false;
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
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| ConfigError::Parse {
                line: line_no,
                message,
            };
            match key {
                "sensors" => {
                    cfg.sensors = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "carrier_hz" => {
                    cfg.carrier_hz = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?
                }
                "velocity_mps" => {
                    cfg.velocity_mps = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?
                }
                "dft_len" => {
                    cfg.dft_len = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "bt_product" => {
                    cfg.bt_product = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?
                }
                "bandwidth_hz" => {
                    cfg.bandwidth_hz = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?;
                    bandwidth_set = true;
                }
                "r1" => {
                    cfg.r1 = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "r2" => {
                    cfg.r2 = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "scenario" => {
                    cfg.scenario = match value {
                        "is" => ScenarioKind::Independent,
                        "cs" => ScenarioKind::Correlated,
                        other => {
                            return Err(bad(format!(
                                "scenario must be `is` or `cs`, got `{other}`"
                            )))
                        }
                    }
                }
                "amplitudes" => cfg.amplitudes = parse_list(value, parse_complex).map_err(&bad)?,
                "delays" => {
                    cfg.delays = parse_list(value, |t| {
                        t.parse().map_err(|_| format!("bad number `{t}`"))
                    })
                    .map_err(&bad)?
                }
                "gamma_true" => {
                    cfg.gamma_true = parse_list(value, |t| {
                        t.parse().map_err(|_| format!("bad number `{t}`"))
                    })
                    .map_err(&bad)?
                }
                "rolloff" => {
                    cfg.rolloff = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?
                }
                "symbol_rate_hz" => {
                    cfg.symbol_rate_hz = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?;
                    symbol_rate_set = true;
                }
                "snr_grid_db" => {
                    cfg.snr_grid_db = parse_list(value, |t| {
                        t.parse().map_err(|_| format!("bad number `{t}`"))
                    })
                    .map_err(&bad)?
                }
                "estimators" => {
                    cfg.estimators = parse_list(value, EstimatorKind::parse).map_err(&bad)?
                }
                "search_order" => {
                    cfg.search_order = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "oversample_factor" => {
                    cfg.oversample_factor = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "p_fa" => {
                    cfg.p_fa = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?
                }
                "snr_clamp_db" => {
                    cfg.snr_clamp_db = value
                        .parse()
                        .map_err(|_| bad(format!("bad number `{value}`")))?
                }
                "trials" => {
                    cfg.trials = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| bad(format!("bad integer `{value}`")))?
                }
                "output_dir" => cfg.output_dir = value.to_string(),
                other => {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        if bandwidth_set && !symbol_rate_set {
            cfg.symbol_rate_hz = cfg.bandwidth_hz;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let invalid =
            |field: &'static str, message: String| ConfigError::Invalid { field, message };
        if self.sensors < 2 {
            return Err(invalid("sensors", "need at least two sensors".into()));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(invalid("carrier_hz", "must be positive".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(invalid("bandwidth_hz", "must be positive".into()));
        }
        if !(self.bt_product > 0.0 && self.bt_product < 1.0) {
            return Err(invalid("bt_product", "must lie in (0, 1)".into()));
        }
        if self.r1 >= self.r2 {
            return Err(invalid("r1", "requires r1 < r2".into()));
        }
        if self.amplitudes.len() != self.delays.len()
            || self.amplitudes.len() != self.gamma_true.len()
        {
            return Err(invalid(
                "amplitudes",
                "amplitudes, delays and gamma_true must have equal length".into(),
            ));
        }
        if self.gamma_true.iter().any(|g| g.abs() > 1.0) {
            return Err(invalid("gamma_true", "entries must lie in [-1, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(invalid("rolloff", "must lie in [0, 1]".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(invalid("snr_grid_db", "needs at least one SNR".into()));
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators", "needs at least one estimator".into()));
        }
        if self.search_order < 2 {
            return Err(invalid("search_order", "must be at least 2".into()));
        }
        if self.oversample_factor < 2 {
            return Err(invalid("oversample_factor", "must be at least 2".into()));
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(invalid("p_fa", "must lie in (0, 1)".into()));
        }
        if self.trials < 1 {
            return Err(invalid("trials", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical rendering; `parse(dump())` reproduces the configuration.
    pub fn dump(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut out = String::new();
        out.push_str(&format!("sensors = {}\n", self.sensors));
        out.push_str(&format!("carrier_hz = {:?}\n", self.carrier_hz));
        out.push_str(&format!("velocity_mps = {:?}\n", self.velocity_mps));
        out.push_str(&format!("dft_len = {}\n", self.dft_len));
        out.push_str(&format!("bt_product = {:?}\n", self.bt_product));
        out.push_str(&format!("bandwidth_hz = {:?}\n", self.bandwidth_hz));
        out.push_str(&format!("r1 = {}\n", self.r1));
        out.push_str(&format!("r2 = {}\n", self.r2));
        out.push_str(&format!(
            "scenario = {}\n",
            match self.scenario {
                ScenarioKind::Independent => "is",
                ScenarioKind::Correlated => "cs",
            }
        ));
        out.push_str(&format!(
            "amplitudes = {}\n",
            self.amplitudes
                .iter()
                .map(format_complex)
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str(&format!("delays = {}\n", list(&self.delays)));
        out.push_str(&format!("gamma_true = {}\n", list(&self.gamma_true)));
        out.push_str(&format!("rolloff = {:?}\n", self.rolloff));
        out.push_str(&format!("symbol_rate_hz = {:?}\n", self.symbol_rate_hz));
        out.push_str(&format!("snr_grid_db = {}\n", list(&self.snr_grid_db)));
        out.push_str(&format!(
            "estimators = {}\n",
            self.estimators
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str(&format!("search_order = {}\n", self.search_order));
        out.push_str(&format!("oversample_factor = {}\n", self.oversample_factor));
        out.push_str(&format!("p_fa = {:?}\n", self.p_fa));
        out.push_str(&format!("snr_clamp_db = {:?}\n", self.snr_clamp_db));
        out.push_str(&format!("trials = {}\n", self.trials));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("output_dir = {}\n", self.output_dir));
        out
    }

    /// FNV-1a hash of the canonical dump, embedded in every output file.
    /// The output directory is excluded: it does not affect the results.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for line in self.dump().lines().filter(|l| !l.starts_with("output_dir")) {
            for byte in line.as_bytes().iter().chain(b"\n") {
                h ^= *byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }

    /// Sampling period `T = BT / B`.
    pub fn sample_period(&self) -> f64 {
        self.bt_product / self.bandwidth_hz
    }

    pub fn array_config(&self) -> Result<ArrayConfig<f64>, ConfigError> {
        Ok(ArrayConfig::new(
            (0..self.sensors)
                .map(|m| m as f64 * self.velocity_mps / (2.0 * self.carrier_hz))
                .collect(),
            vec![Pattern::Isotropic; self.sensors],
            self.carrier_hz,
            self.velocity_mps,
            self.dft_len,
            self.sample_period(),
            self.r1,
            self.r2,
        )?)
    }

    /// Scenario template at a given SNR and seed.
    pub fn scenario(&self, snr_db: f64, seed: u64) -> Result<ScenarioConfig<f64>, ConfigError> {
        Ok(ScenarioConfig::new(
            self.scenario,
            self.amplitudes.clone(),
            self.delays.clone(),
            DoaVector::new(self.gamma_true.clone())?,
            self.rolloff,
            self.symbol_rate_hz,
            snr_db,
            seed,
        )?)
    }

    pub fn search_config(&self) -> Result<SearchConfig<f64>, ConfigError> {
        Ok(SearchConfig::new(
            self.search_order,
            self.oversample_factor,
        )?)
    }

    /// Detector for a data set with the given realized noise variance,
    /// with the SNR clamp applied.
    pub fn detector(
        &self,
        noise_var: f64,
        snr_db: f64,
    ) -> Result<DetectorConfig<f64>, ConfigError> {
        let base = DetectorConfig::new(self.p_fa, noise_var.max(f64::MIN_POSITIVE))?
            .with_snr_clamp(self.snr_clamp_db);
        let effective = base.effective_noise_var(snr_db);
        Ok(DetectorConfig::new(self.p_fa, effective)?.with_snr_clamp(self.snr_clamp_db))
    }
}
