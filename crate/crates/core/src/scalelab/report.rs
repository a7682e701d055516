//! The assembled scaling report and its JSON and CSV forms.

use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{
    GeometryEntry, GeometryMode, KEntry, Lab, Measurement, ParaEntry, RecurrenceResidual, Settings, SlopeFit,
    WindingEntry,
};
use crate::error::{Error, Result};
use crate::quaddyn::Profile;

/// Sequences a report can carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    M,
    Para,
    K,
    Hausdorff,
    Winding,
}

impl Section {
    pub const ALL: [Section; 5] = [Section::M, Section::Para, Section::K, Section::Hausdorff, Section::Winding];
}

impl FromStr for Section {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "m" => Ok(Section::M),
            "para" => Ok(Section::Para),
            "k" => Ok(Section::K),
            "hausdorff" => Ok(Section::Hausdorff),
            "winding" => Ok(Section::Winding),
            other => Err(Error::Config(format!(
                "unknown report section {other:?} (expected m, para, k, hausdorff, winding)"
            ))),
        }
    }
}

/// Identifies the run that produced an output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub config_hash: String,
    /// Arithmetic of the measurements.
    pub precision: String,
    pub profile: Profile,
    pub settings: Settings,
    /// How tolerances are defined.
    pub tolerance_note: String,
}

impl ReportHeader {
    pub fn new(config_hash: String, profile: Profile, settings: Settings) -> Self {
        Self {
            config_hash,
            precision: "f64; superstable centers in double-double".into(),
            profile,
            settings,
            tolerance_note: "modulus tolerance = |fine - coarse| of the Richardson pair; slope band = 2 standard errors + propagated tolerances".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub header: ReportHeader,
    #[serde(with = "crate::points::one")]
    pub c: C64,
    pub depth: usize,
    pub levels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m_seq: Option<Vec<Measurement>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho_seq: Option<Vec<RecurrenceResidual>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub para_seq: Option<Vec<ParaEntry>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_seq: Option<Vec<KEntry>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hausdorff_seq: Option<Vec<GeometryEntry>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub winding_seq: Option<Vec<WindingEntry>>,
    pub slopes: Vec<SlopeFit>,
    /// `(para slope / dynamical slope, band)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slope_ratio: Option<(f64, f64)>,
}

impl ScalingReport {
    /// Run the requested sections on `lab`.
    pub fn run(lab: &Lab, sections: &[Section], header: ReportHeader) -> Result<Self> {
        let want = |s: Section| sections.contains(&s);
        let mut r = ScalingReport {
            header,
            c: lab.c(),
            depth: lab.depth(),
            levels: (1..=lab.depth()).collect(),
            m_seq: None,
            rho_seq: None,
            para_seq: None,
            k_seq: None,
            hausdorff_seq: None,
            winding_seq: None,
            slopes: Vec::new(),
            slope_ratio: None,
        };
        if want(Section::M) {
            let d = lab.dynamical_scaling()?;
            r.slopes.push(d.slope);
            r.m_seq = Some(d.m_seq);
            r.rho_seq = Some(d.rho_seq);
        }
        if want(Section::Para) {
            let p = lab.parameter_scaling()?;
            r.slopes.push(p.para_slope);
            if !want(Section::M) {
                r.slopes.push(p.dynamical_slope);
            }
            r.slope_ratio = Some((p.ratio, p.ratio_band));
            r.para_seq = Some(p.para_seq);
            if want(Section::Winding) {
                r.winding_seq = Some(p.winding_seq);
            }
        }
        if want(Section::Winding) && r.winding_seq.is_none() {
            r.winding_seq = Some(lab.winding_seq()?);
        }
        if want(Section::K) {
            let k = lab.k_decay()?;
            r.slopes.extend(k.rate);
            r.k_seq = Some(k.entries);
        }
        if want(Section::Hausdorff) {
            let mut h = lab.geometry_convergence(GeometryMode::Dynamical)?.entries;
            h.extend(lab.geometry_convergence(GeometryMode::Parameter)?.entries);
            r.hausdorff_seq = Some(h);
        }
        Ok(r)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// One row per entry: `sequence,n,label,value,tolerance,resolution,raw,residual`
    /// plus the config hash and precision on every row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "sequence",
            "n",
            "label",
            "value",
            "tolerance",
            "resolution",
            "raw",
            "residual",
            "config_hash",
            "precision",
        ])
        .map_err(csv_err)?;
        let h = &self.header;
        let mut row = |seq: &str, n: usize, label: &str, value: f64, tol: f64, res: usize, raw: f64, resid: f64| {
            w.write_record([
                seq.to_string(),
                n.to_string(),
                label.to_string(),
                format!("{value:?}"),
                format!("{tol:?}"),
                res.to_string(),
                format!("{raw:?}"),
                format!("{resid:?}"),
                h.config_hash.clone(),
                h.precision.clone(),
            ])
        };
        let pair = |m: &Measurement| format!("{} \\ {}", m.outer, m.inner);
        for m in self.m_seq.iter().flatten() {
            row("m", m.n, &pair(m), m.value, m.tolerance, m.resolution, m.raw, m.residual).map_err(csv_err)?;
        }
        for r in self.rho_seq.iter().flatten() {
            row("rho", r.n, "", r.value, r.tolerance, 0, r.value, 0.0).map_err(csv_err)?;
        }
        for e in self.para_seq.iter().flatten() {
            let d = &e.direct;
            row("para", e.n, &pair(d), d.value, d.tolerance, d.resolution, d.raw, d.residual).map_err(csv_err)?;
            if let Some(i) = &e.image {
                row("para_image", e.n, &pair(i), i.value, i.tolerance, i.resolution, i.raw, i.residual)
                    .map_err(csv_err)?;
            }
        }
        for k in self.k_seq.iter().flatten() {
            let label = format!("k = {:?}{:+?}i", k.k.re, k.k.im);
            row("k", k.n, &label, k.distance, k.residual, 0, k.distance, k.residual).map_err(csv_err)?;
        }
        for g in self.hausdorff_seq.iter().flatten() {
            row("hausdorff", g.n, &g.rescaling, g.distance, g.tolerance, 0, g.distance, 0.0).map_err(csv_err)?;
        }
        for e in self.winding_seq.iter().flatten() {
            let label = format!("about {:?}{:+?}i", e.about.re, e.about.im);
            let v = e.winding as f64;
            row("winding", e.n, &label, v, 0.0, e.samples, v, 0.0).map_err(csv_err)?;
        }
        for s in &self.slopes {
            let last = s.levels.last().copied().unwrap_or(0);
            let label = format!("slope {} levels {:?}", s.quantity, s.levels);
            row("slope", last, &label, s.slope, s.band, 0, s.slope, 0.0).map_err(csv_err)?;
        }
        if let Some((ratio, band)) = self.slope_ratio {
            row("slope_ratio", self.depth, "para / m", ratio, band, 0, ratio, 0.0).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
    }
}
