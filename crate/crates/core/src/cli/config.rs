//! Flat `key = value` run configuration.
//!
//! A config file holds one `key = value` per line; blank lines and lines starting with
//! `#` are ignored. Command-line overrides are applied on top of the file, then every
//! key is validated against its documented range. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::conformal::Pole;
use crate::error::{Error, Result};
use crate::parapuzzle::RescalingSign;
use crate::quaddyn::{Profile, C64};
use crate::scalelab::{Section, Settings};

/// Every accepted key with its default and a one-line description, in canonical order.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("command", "", "render | nest | report | measure; must match the subcommand when set"),
    ("c", "fibonacci", "parameter: fibonacci, <re> or <re>,<im>"),
    ("depth", "6", "nest depth, 1..=16 (the exact-angle budget ends at 7 for c_fib)"),
    ("equip_level", "1", "Green's value of the initial equipotential, (0, 8]"),
    ("resolution", "512", "first modulus grid resolution, 64..=8192"),
    ("max_resolution", "1024", "cap of the resolution doubling, resolution..=8192"),
    ("solver_tol", "1e-8", "relative residual of the grid solver, [1e-14, 1e-3]"),
    ("target_change", "0.002", "fine/coarse agreement that stops doubling, (0, 1]"),
    ("julia_samples", "20000", "reference Julia set samples, 100..=10000000"),
    ("marker_depth", "3", "Misiurewicz marker depth l (2^l markers), 0..=12"),
    ("rescaling_sign", "maps-to-minus-one", "maps-to-minus-one | reciprocal"),
    ("steps_per_halving", "8", "ray tracer potential steps per halving, 1..=256"),
    ("newton_max_iter", "30", "Newton cap per ray step, 1..=1000"),
    ("max_bisections", "12", "step bisections before a stall, 0..=40"),
    ("landing_threshold", "1e-7", "potential below which landing refinement runs, (0, 1)"),
    ("max_iter", "4096", "escape-time cap for Green's values, 16..=1000000"),
    ("big_potential", "16", "potential reached before Newton on iterates, [1, 1000]"),
    ("green_bailout", "1e10", "escape radius of Green's values, [1e3, 1e300]"),
    ("seed", "0", "seed of the render jitter, any u64"),
    ("plane", "julia", "render plane: julia | mandelbrot"),
    ("width", "512", "render width in pixels, 1..=16384"),
    ("height", "512", "render height in pixels, 1..=16384"),
    ("re_min", "-2", "render window"),
    ("re_max", "2", "render window"),
    ("im_min", "-2", "render window"),
    ("im_max", "2", "render window"),
    ("iterations", "1000", "render escape-time cap, 1..=1000000"),
    ("overlay", "none", "none | nest | para (piece boundaries to depth)"),
    ("supersample", "1", "jittered samples per pixel side, 1..=16"),
    ("only", "m,para,k,hausdorff,winding", "report sections"),
    ("parapieces", "true", "nest: also write P(n) and Q(n)"),
    ("kind", "modulus", "measure: modulus | capacity"),
    ("outer", "", "measure: outer piece JSON"),
    ("inner", "", "measure: inner piece JSON (modulus)"),
    ("pole", "infinity", "measure: capacity pole, infinity or <re>,<im>"),
    ("output", "out", "output directory (not part of the config hash)"),
];

/// Text describing the arithmetic, embedded next to the profile in every output.
pub const PRECISION: &str = "f64; superstable centers in double-double";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Render,
    Nest,
    Report,
    Measure,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Render => "render",
            Command::Nest => "nest",
            Command::Report => "report",
            Command::Measure => "measure",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Param {
    Fibonacci,
    Value(C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plane {
    Julia,
    Mandelbrot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Overlay {
    None,
    Nest,
    Para,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderConfig {
    pub plane: Plane,
    pub width: usize,
    pub height: usize,
    /// `(re_min, re_max, im_min, im_max)`.
    pub window: (f64, f64, f64, f64),
    pub iterations: u32,
    pub overlay: Overlay,
    pub supersample: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    Modulus,
    Capacity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureConfig {
    pub kind: MeasureKind,
    pub outer: Option<PathBuf>,
    pub inner: Option<PathBuf>,
    pub pole: Pole,
}

/// A validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub c: Param,
    pub depth: usize,
    pub equip_level: f64,
    pub profile: Profile,
    pub settings: Settings,
    pub seed: u64,
    pub render: RenderConfig,
    pub sections: Vec<Section>,
    pub parapieces: bool,
    pub measure: MeasureConfig,
    pub output: PathBuf,
    /// Resolved `key = value` pairs, every key present.
    values: BTreeMap<String, String>,
}

/// Parse `key = value` lines.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{origin}:{}: expected key = value, got {line:?}", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parse one `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn bad(key: &str, value: &str, why: &str) -> Error {
    Error::Config(format!("{key} = {value:?}: {why}"))
}

fn complex(key: &str, v: &str) -> Result<C64> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite());
    match parts.as_slice() {
        [re] => num(re).map(|re| C64::new(re, 0.0)),
        [re, im] => num(re).zip(num(im)).map(|(re, im)| C64::new(re, im)),
        _ => None,
    }
    .ok_or_else(|| bad(key, v, "expected <re> or <re>,<im>"))
}

struct Values<'a>(&'a BTreeMap<String, String>);

impl Values<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    fn int<T: std::str::FromStr + PartialOrd + Copy>(&self, key: &str, lo: T, hi: T) -> Result<T> {
        let v = self.raw(key);
        let x: T = v.parse().map_err(|_| bad(key, v, "expected an integer"))?;
        if x < lo || x > hi {
            return Err(bad(key, v, "out of range"));
        }
        Ok(x)
    }

    /// A finite float in `[lo, hi]`, or `(lo, hi]` when `open_lo`.
    fn float(&self, key: &str, lo: f64, hi: f64, open_lo: bool) -> Result<f64> {
        let v = self.raw(key);
        let x: f64 = v.parse().map_err(|_| bad(key, v, "expected a number"))?;
        if !x.is_finite() || x > hi || x < lo || (open_lo && x == lo) {
            return Err(bad(key, v, "out of range"));
        }
        Ok(x)
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<T> {
        let v = self.raw(key);
        options.iter().find(|o| o.0 == v).map(|o| o.1).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            bad(key, v, &format!("expected one of {}", names.join(", ")))
        })
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }
}

impl RunConfig {
    /// Defaults, then `file` pairs, then `overrides`, for `command`.
    pub fn resolve(command: Command, file: &[(String, String)], overrides: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        for (k, v) in file.iter().chain(overrides) {
            match values.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => return Err(Error::Config(format!("unknown key {k:?}"))),
            }
        }
        let given = values["command"].clone();
        if !given.is_empty() && given != command.name() {
            return Err(bad("command", &given, &format!("config is for {given}, run as {}", command.name())));
        }
        values.insert("command".into(), command.name().into());
        Self::from_values(command, values)
    }

    /// Read the config file at `path` (if any) and apply overrides.
    pub fn load(command: Command, path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                parse_pairs(&text, &p.display().to_string())?
            }
            None => Vec::new(),
        };
        Self::resolve(command, &file, overrides)
    }

    fn from_values(command: Command, values: BTreeMap<String, String>) -> Result<Self> {
        let v = Values(&values);
        let c = match v.raw("c") {
            "fibonacci" => Param::Fibonacci,
            s => Param::Value(complex("c", s)?),
        };
        let profile = Profile {
            steps_per_halving: v.int("steps_per_halving", 1, 256)?,
            newton_max_iter: v.int("newton_max_iter", 1, 1000)?,
            max_bisections: v.int("max_bisections", 0, 40)?,
            landing_threshold: v.float("landing_threshold", 0.0, 1.0, true)?,
            max_iter: v.int("max_iter", 16, 1_000_000)?,
            big_potential: v.float("big_potential", 1.0, 1e3, false)?,
            green_bailout: v.float("green_bailout", 1e3, 1e300, false)?,
        };
        if profile.landing_threshold >= 1.0 {
            return Err(bad("landing_threshold", v.raw("landing_threshold"), "out of range"));
        }
        let resolution = v.int("resolution", 64, 8192)?;
        let settings = Settings {
            resolution,
            max_resolution: v.int("max_resolution", resolution, 8192)?,
            solver_tol: v.float("solver_tol", 1e-14, 1e-3, false)?,
            target_change: v.float("target_change", 0.0, 1.0, true)?,
            julia_samples: v.int("julia_samples", 100, 10_000_000)?,
            marker_depth: v.int("marker_depth", 0, 12)?,
            rescaling_sign: v.choice(
                "rescaling_sign",
                &[("maps-to-minus-one", RescalingSign::MapsToMinusOne), ("reciprocal", RescalingSign::Reciprocal)],
            )?,
        };
        let window = (
            v.float("re_min", -1e6, 1e6, false)?,
            v.float("re_max", -1e6, 1e6, false)?,
            v.float("im_min", -1e6, 1e6, false)?,
            v.float("im_max", -1e6, 1e6, false)?,
        );
        if !(window.0 < window.1) {
            return Err(Error::Config(format!("render window re_min = {} is not below re_max = {}", window.0, window.1)));
        }
        if !(window.2 < window.3) {
            return Err(Error::Config(format!("render window im_min = {} is not below im_max = {}", window.2, window.3)));
        }
        let render = RenderConfig {
            plane: v.choice("plane", &[("julia", Plane::Julia), ("mandelbrot", Plane::Mandelbrot)])?,
            width: v.int("width", 1, 16384)?,
            height: v.int("height", 1, 16384)?,
            window,
            iterations: v.int("iterations", 1, 1_000_000)?,
            overlay: v.choice("overlay", &[("none", Overlay::None), ("nest", Overlay::Nest), ("para", Overlay::Para)])?,
            supersample: v.int("supersample", 1, 16)?,
        };
        let mut sections = Vec::new();
        for s in v.raw("only").split(',').filter(|s| !s.trim().is_empty()) {
            let s: Section = s.parse()?;
            if !sections.contains(&s) {
                sections.push(s);
            }
        }
        if sections.is_empty() {
            return Err(bad("only", v.raw("only"), "no report section selected"));
        }
        sections.sort();
        let pole = match v.raw("pole") {
            "infinity" => Pole::Infinity,
            s => Pole::Point(complex("pole", s)?),
        };
        let measure = MeasureConfig {
            kind: v.choice("kind", &[("modulus", MeasureKind::Modulus), ("capacity", MeasureKind::Capacity)])?,
            outer: v.path("outer"),
            inner: v.path("inner"),
            pole,
        };
        Ok(Self {
            command,
            c,
            depth: v.int("depth", 1, 16)?,
            equip_level: v.float("equip_level", 0.0, 8.0, true)?,
            profile,
            settings,
            seed: v.int("seed", 0, u64::MAX)?,
            render,
            sections,
            parapieces: v.choice("parapieces", &[("true", true), ("false", false)])?,
            measure,
            output: PathBuf::from(v.raw("output")),
            values,
        })
    }

    /// Canonical `key = value` text of every key but `output`, in [`KEYS`] order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, _, _) in KEYS {
            if *k != "output" {
                s.push_str(k);
                s.push_str(" = ");
                s.push_str(&self.values[*k]);
                s.push('\n');
            }
        }
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: &str) -> Vec<(String, String)> {
        parse_pairs(s, "test").unwrap()
    }

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::resolve(Command::Report, &[], &[]).unwrap();
        assert_eq!(c.c, Param::Fibonacci);
        assert_eq!(c.depth, 6);
        assert_eq!(c.settings, Settings::default());
        assert_eq!(c.profile, Profile::default());
        assert_eq!(c.sections, Section::ALL.to_vec());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn overrides_beat_the_file() {
        let file = pairs("# comment\ndepth = 3\n\nc = -1, 0.25\n");
        let c = RunConfig::resolve(Command::Nest, &file, &[("depth".into(), "5".into())]).unwrap();
        assert_eq!(c.depth, 5);
        assert_eq!(c.c, Param::Value(C64::new(-1.0, 0.25)));
    }

    #[test]
    fn unknown_keys_and_bad_ranges_are_config_errors() {
        let e = |f: &str| RunConfig::resolve(Command::Render, &pairs(f), &[]).unwrap_err();
        assert!(matches!(e("colour = red"), Error::Config(m) if m.contains("colour")));
        assert!(matches!(e("depth = 0"), Error::Config(_)));
        assert!(matches!(e("resolution = 1024\nmax_resolution = 512"), Error::Config(_)));
        assert!(matches!(e("re_min = 1\nre_max = -1"), Error::Config(m) if m.contains("window")));
        assert!(matches!(e("only = m,bogus"), Error::Config(_)));
        assert!(matches!(e("command = nest"), Error::Config(_)));
        assert!(matches!(parse_pairs("depth 3", "f"), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_output_and_tracks_values() {
        let a = RunConfig::resolve(Command::Report, &[], &[("output".into(), "x".into())]).unwrap();
        let b = RunConfig::resolve(Command::Report, &[], &[("output".into(), "y".into())]).unwrap();
        let c = RunConfig::resolve(Command::Report, &[], &[("depth".into(), "5".into())]).unwrap();
        let d = RunConfig::resolve(Command::Nest, &[], &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn every_key_has_a_valid_default() {
        for cmd in [Command::Render, Command::Nest, Command::Report, Command::Measure] {
            let c = RunConfig::resolve(cmd, &[], &[]).unwrap();
            for (k, _, _) in KEYS {
                assert!(c.value(k).is_some(), "{k}");
            }
        }
    }
}
