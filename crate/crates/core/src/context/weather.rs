//! Hourly exogenous weather and tariff series.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = [
    "hour",
    "outdoor_temp_c",
    "ground_temp_c",
    "solar_wm2",
    "occupancy_frac",
    "price_per_kwh",
];

pub const HOURS_PER_YEAR: usize = 8760;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherProfile {
    pub name: String,
    pub timestep_s: f64,
    pub outdoor_temp: Vec<f64>,
    pub ground_temp: Vec<f64>,
    /// Solar irradiance on glazing, W/m².
    pub solar_wm2: Vec<f64>,
    pub occupancy_frac: Vec<f64>,
    /// Currency per kWh.
    pub price_per_kwh: Vec<f64>,
}

impl WeatherProfile {
    pub fn len(&self) -> usize {
        self.outdoor_temp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outdoor_temp.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let series = [
            &self.ground_temp,
            &self.solar_wm2,
            &self.occupancy_frac,
            &self.price_per_kwh,
        ];
        if n == 0 || series.iter().any(|s| s.len() != n) {
            return Err(Error::Validation(format!(
                "weather '{}' series are empty or of unequal length",
                self.name
            )));
        }
        for row in 0..n {
            self.check_row(row)
                .map_err(|message| Error::Ingestion {
                    source_name: self.name.clone(),
                    row: row + 1,
                    message,
                })?;
        }
        Ok(())
    }

    fn check_row(&self, row: usize) -> std::result::Result<(), String> {
        let vals = [
            self.outdoor_temp[row],
            self.ground_temp[row],
            self.solar_wm2[row],
            self.occupancy_frac[row],
            self.price_per_kwh[row],
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        if self.solar_wm2[row] < 0.0 {
            return Err(format!("negative solar {}", self.solar_wm2[row]));
        }
        if !(0.0..=1.0).contains(&self.occupancy_frac[row]) {
            return Err(format!(
                "occupancy fraction {} outside [0, 1]",
                self.occupancy_frac[row]
            ));
        }
        if self.price_per_kwh[row] < 0.0 {
            return Err(format!("negative price {}", self.price_per_kwh[row]));
        }
        Ok(())
    }

    /// Parses the hourly CSV format. Row numbers in errors count data rows from 1.
    pub fn from_csv<R: Read>(name: &str, reader: R) -> Result<Self> {
        let ingest = |row: usize, message: String| Error::Ingestion {
            source_name: name.to_string(),
            row,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| ingest(0, format!("unreadable header: {e}")))?;
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(ingest(
                0,
                format!("header must be '{}'", CSV_HEADER.join(",")),
            ));
        }

        let mut w = WeatherProfile {
            name: name.to_string(),
            timestep_s: 3600.0,
            outdoor_temp: Vec::new(),
            ground_temp: Vec::new(),
            solar_wm2: Vec::new(),
            occupancy_frac: Vec::new(),
            price_per_kwh: Vec::new(),
        };
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| ingest(row, e.to_string()))?;
            if rec.len() != CSV_HEADER.len() {
                return Err(ingest(
                    row,
                    format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len()),
                ));
            }
            let hour: usize = rec[0]
                .parse()
                .map_err(|_| ingest(row, format!("hour '{}' is not an integer", &rec[0])))?;
            if hour != i {
                return Err(ingest(row, format!("hour {hour} out of sequence, expected {i}")));
            }
            let mut vals = [0.0; 5];
            for (k, v) in vals.iter_mut().enumerate() {
                let field = &rec[k + 1];
                *v = field.parse().map_err(|_| {
                    ingest(row, format!("{} '{field}' is not numeric", CSV_HEADER[k + 1]))
                })?;
            }
            w.outdoor_temp.push(vals[0]);
            w.ground_temp.push(vals[1]);
            w.solar_wm2.push(vals[2]);
            w.occupancy_frac.push(vals[3]);
            w.price_per_kwh.push(vals[4]);
            w.check_row(i).map_err(|m| ingest(row, m))?;
        }
        if w.is_empty() {
            return Err(ingest(0, "no data rows".into()));
        }
        Ok(w)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
        wtr.write_record(CSV_HEADER).map_err(to_err)?;
        for i in 0..self.len() {
            wtr.write_record(&[
                i.to_string(),
                self.outdoor_temp[i].to_string(),
                self.ground_temp[i].to_string(),
                self.solar_wm2[i].to_string(),
                self.occupancy_frac[i].to_string(),
                self.price_per_kwh[i].to_string(),
            ])
            .map_err(to_err)?;
        }
        wtr.flush()
            .map_err(|e| Error::Validation(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Parameters of the synthetic climate generator used for the shipped profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateParams {
    pub annual_mean_c: f64,
    pub annual_amplitude_c: f64,
    pub diurnal_amplitude_c: f64,
    pub peak_solar_wm2: f64,
    /// Mean fraction of clear sky, 0..1.
    pub clearness: f64,
    pub offpeak_price: f64,
    pub peak_price: f64,
    pub seed: u64,
}

fn round_to(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

/// Deterministic synthetic hourly year: seasonal and diurnal temperature
/// cycles with AR(1) anomalies, clear-sky solar scaled by a daily cloud
/// factor, weekday office occupancy and a time-of-use tariff. Day 0 is a Monday.
pub fn synthesize(name: &str, p: &ClimateParams, hours: usize) -> WeatherProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let shock = Normal::new(0.0, 0.35).expect("valid sigma");
    let cloud = Normal::new(0.0, 0.2).expect("valid sigma");
    let mut anomaly = 0.0;
    let mut clear = p.clearness;

    let mut w = WeatherProfile {
        name: name.to_string(),
        timestep_s: 3600.0,
        outdoor_temp: Vec::with_capacity(hours),
        ground_temp: Vec::with_capacity(hours),
        solar_wm2: Vec::with_capacity(hours),
        occupancy_frac: Vec::with_capacity(hours),
        price_per_kwh: Vec::with_capacity(hours),
    };
    for h in 0..hours {
        let day = h / 24;
        let hod = (h % 24) as f64;
        let weekday = day % 7 < 5;
        // Coldest around 20 January.
        let season = -(2.0 * PI * (h as f64 - 480.0) / HOURS_PER_YEAR as f64).cos();
        let diurnal = (2.0 * PI * (hod - 15.0) / 24.0).cos();
        anomaly = 0.97 * anomaly + shock.sample(&mut rng);
        if h % 24 == 0 {
            clear = (p.clearness + cloud.sample(&mut rng)).clamp(0.15, 1.0);
        }
        let outdoor = p.annual_mean_c
            + p.annual_amplitude_c * season
            + p.diurnal_amplitude_c * clear * diurnal
            + anomaly;
        // Ground lags the air by about a month with a damped swing.
        let ground_season =
            -(2.0 * PI * (h as f64 - 1200.0) / HOURS_PER_YEAR as f64).cos();
        let ground = p.annual_mean_c + 0.35 * p.annual_amplitude_c * ground_season;

        let half_day = 6.0 + 1.5 * season;
        let sun = ((hod + 0.5 - (12.0 - half_day)) / (2.0 * half_day)).clamp(0.0, 1.0);
        let elevation = (PI * sun).sin();
        let solar = p.peak_solar_wm2 * (0.75 + 0.25 * season) * clear * elevation;

        let occupancy = if weekday && (8.0..18.0).contains(&hod) { 0.9 } else { 0.05 };
        let price = if weekday && (14.0..20.0).contains(&hod) {
            p.peak_price
        } else if (7.0..22.0).contains(&hod) {
            0.5 * (p.peak_price + p.offpeak_price)
        } else {
            p.offpeak_price
        };

        w.outdoor_temp.push(round_to(outdoor, 2));
        w.ground_temp.push(round_to(ground, 2));
        w.solar_wm2.push(round_to(solar.max(0.0), 1));
        w.occupancy_frac.push(occupancy);
        w.price_per_kwh.push(round_to(price, 4));
    }
    w
}
