use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{MeasureKind, Overlay, Param, Plane, RunConfig, PRECISION};
use super::render::{escape_time, overlay};
use super::{exit, Outputs};
use crate::conformal::{self, AnnulusSpec, Estimate, Pole};
use crate::error::{Error, Result};
use crate::parapuzzle::{build_parapiece, find_fibonacci_parameter, find_superstable, ParaKind, ParaPiece, MAX_CENTER_LEVEL};
use crate::puzzle::{build_principal_nest, PrincipalNest, PuzzlePiece};
use crate::quaddyn::{QuadraticMap, C64};
use crate::scalelab::{Lab, ReportHeader, ScalingReport};

/// What a command wrote and the exit code it asks for.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub diagnostics: Vec<String>,
    pub code: i32,
}

fn parameter(cfg: &RunConfig) -> Result<C64> {
    Ok(match cfg.c {
        Param::Fibonacci => C64::new(find_fibonacci_parameter(1e-13)?.c, 0.0),
        Param::Value(c) => c,
    })
}

fn build_nest(cfg: &RunConfig, c: C64) -> Result<PrincipalNest> {
    build_principal_nest(&QuadraticMap::new(c)?, cfg.depth, cfg.equip_level, &cfg.profile)
}

fn parapieces(nest: &PrincipalNest, cfg: &RunConfig, kinds: &[ParaKind]) -> Result<Vec<ParaPiece>> {
    let jobs: Vec<(usize, ParaKind)> = (1..=nest.depth())
        .flat_map(|n| kinds.iter().map(move |&k| (n, k)))
        .filter(|&(n, k)| k == ParaKind::P || n >= 2)
        .collect();
    jobs.into_par_iter()
        .map(|(n, k)| build_parapiece(n, k, nest, &cfg.profile))
        .collect()
}

fn truncation_note(nest: &PrincipalNest, cfg: &RunConfig) -> Option<String> {
    (nest.depth() < cfg.depth).then(|| {
        format!(
            "truncated: built depth {} of {}: {}",
            nest.depth(),
            cfg.depth,
            nest.diagnostics.join("; ")
        )
    })
}

pub fn render_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let r = &cfg.render;
    match (r.overlay, r.plane) {
        (Overlay::Nest, Plane::Mandelbrot) => {
            return Err(Error::Config("overlay = nest draws dynamical pieces; use plane = julia".into()))
        }
        (Overlay::Para, Plane::Julia) => {
            return Err(Error::Config("overlay = para draws parameter pieces; use plane = mandelbrot".into()))
        }
        _ => {}
    }
    let c = parameter(cfg)?;
    let mut img = escape_time(r, c, cfg.seed);
    let mut diagnostics = Vec::new();
    let mut code = exit::OK;
    let curves: Vec<Vec<C64>> = match r.overlay {
        Overlay::None => Vec::new(),
        Overlay::Nest | Overlay::Para => {
            let nest = build_nest(cfg, c)?;
            if let Some(note) = truncation_note(&nest, cfg) {
                diagnostics.push(note);
                code = exit::TRUNCATED;
            }
            if r.overlay == Overlay::Nest {
                nest.levels
                    .iter()
                    .flat_map(|l| std::iter::once(&l.central).chain(l.off_critical.as_ref()))
                    .map(|p| p.boundary().to_vec())
                    .collect()
            } else {
                parapieces(&nest, cfg, &[ParaKind::P])?
                    .into_iter()
                    .map(|p| p.boundary().to_vec())
                    .collect()
            }
        }
    };
    let refs: Vec<&[C64]> = curves.iter().map(Vec::as_slice).collect();
    if !refs.is_empty() {
        overlay(&mut img, r, &refs);
    }
    let comments = vec![
        format!("config_hash {}", cfg.hash()),
        format!("precision {PRECISION}"),
        format!("profile {}", serde_json::to_string(&cfg.profile)?),
    ];
    let mut out = Outputs::default();
    out.add("render.ppm", img.to_ppm(&comments));
    let plane = match r.plane {
        Plane::Julia => "julia",
        Plane::Mandelbrot => "mandelbrot",
    };
    out.json(
        cfg,
        "render.json",
        json!({
            "plane": plane,
            "c": [c.re, c.im],
            "width": img.width,
            "height": img.height,
            "window": [r.window.0, r.window.1, r.window.2, r.window.3],
            "iterations": r.iterations,
            "supersample": r.supersample,
            "seed": cfg.seed,
            "interior_pixels": img.interior,
            "overlay_curves": curves.len(),
            "overlay_pixels": img.overlay,
        }),
    )?;
    Ok(Outcome {
        written: out.write(&cfg.output)?,
        diagnostics,
        code,
    })
}

fn piece_json(piece: &impl serde::Serialize) -> Result<Value> {
    Ok(serde_json::to_value(piece)?)
}

pub fn nest(cfg: &RunConfig) -> Result<Outcome> {
    let c = parameter(cfg)?;
    let nest = build_nest(cfg, c)?;
    let mut diagnostics = Vec::new();
    let truncated = truncation_note(&nest, cfg);
    let checks = nest.check()?;
    let paras = if cfg.parapieces {
        parapieces(&nest, cfg, &[ParaKind::P, ParaKind::Q])?
    } else {
        Vec::new()
    };
    let centers: Vec<_> = (1..=(nest.depth() + 1).min(MAX_CENTER_LEVEL))
        .into_par_iter()
        .map(find_superstable)
        .collect::<Result<_>>()?;

    let mut out = Outputs::default();
    for lv in nest.levels.iter().skip(1) {
        out.json(cfg, format!("central_{}.json", lv.n), piece_json(&lv.central)?)?;
        if let Some(off) = &lv.off_critical {
            out.json(cfg, format!("off_critical_{}.json", lv.n), piece_json(off)?)?;
        }
    }
    for p in &paras {
        let kind = match p.kind {
            ParaKind::P => "p",
            ParaKind::Q => "q",
        };
        out.json(cfg, format!("para_{kind}_{}.json", p.n), piece_json(p)?)?;
    }
    let passed = checks.passed();
    out.json(
        cfg,
        "checks.json",
        json!({
            "c": [c.re, c.im],
            "requested_depth": cfg.depth,
            "depth": nest.depth(),
            "truncated": truncated.is_some(),
            "diagnostics": nest.diagnostics,
            "return_iterates": nest.return_iterates(),
            "passed": passed,
            "checks": serde_json::to_value(&checks)?,
        }),
    )?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["n", "u(n+1)", "c_n", "c_n_lo", "residual", "in_P(n)", "config_hash", "precision"])
        .map_err(csv_err)?;
    let hash = cfg.hash();
    for s in &centers {
        let inside = paras
            .iter()
            .find(|p| p.kind == ParaKind::P && p.n == s.n)
            .map(|p| p.contains(C64::new(s.c, 0.0)).map(|b| b.to_string()))
            .transpose()?
            .unwrap_or_default();
        w.write_record([
            s.n.to_string(),
            s.return_time.to_string(),
            format!("{:?}", s.c),
            format!("{:?}", s.c_lo),
            format!("{:e}", s.residual),
            inside,
            hash.clone(),
            PRECISION.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.add("centers.csv", w.into_inner().map_err(|e| Error::Io(e.to_string()))?);

    let code = if let Some(note) = truncated {
        diagnostics.push(note);
        exit::TRUNCATED
    } else if !passed {
        diagnostics.push("nest checks failed; see checks.json".into());
        exit::CHECK_FAILED
    } else {
        exit::OK
    };
    Ok(Outcome {
        written: out.write(&cfg.output)?,
        diagnostics,
        code,
    })
}

pub fn report(cfg: &RunConfig) -> Result<Outcome> {
    let c = parameter(cfg)?;
    let nest = build_nest(cfg, c)?;
    if let Some(note) = truncation_note(&nest, cfg) {
        return Ok(Outcome {
            diagnostics: vec![note],
            code: exit::TRUNCATED,
            ..Default::default()
        });
    }
    let lab = Lab::from_nest(nest, cfg.profile.clone(), cfg.settings.clone());
    let header = ReportHeader::new(cfg.hash(), cfg.profile.clone(), cfg.settings.clone());
    let r = ScalingReport::run(&lab, &cfg.sections, header)?;
    let mut out = Outputs::default();
    let mut json = r.to_json()?;
    json.push('\n');
    out.add("report.json", json.into_bytes());
    out.add("report.csv", r.to_csv()?.into_bytes());
    Ok(Outcome {
        written: out.write(&cfg.output)?,
        ..Default::default()
    })
}

fn load_piece(path: &Option<PathBuf>, key: &str) -> Result<(String, PuzzlePiece)> {
    let p: &Path = path
        .as_deref()
        .ok_or_else(|| Error::Config(format!("measure needs {key} = <piece JSON>")))?;
    let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("cannot read {}: {e}", p.display())))?;
    let piece = PuzzlePiece::from_json(&text)?;
    if piece.boundary().len() < 3 {
        return Err(Error::Serde(format!("{} has no boundary polyline", p.display())));
    }
    Ok((piece.label.to_string(), piece))
}

pub fn measure(cfg: &RunConfig) -> Result<Outcome> {
    let m = &cfg.measure;
    let s = &cfg.settings;
    let (outer_label, outer) = load_piece(&m.outer, "outer")?;
    let (label, pole, e): (String, String, Estimate) = match m.kind {
        MeasureKind::Modulus => {
            let (inner_label, inner) = load_piece(&m.inner, "inner")?;
            let a = AnnulusSpec::new(outer.boundary().to_vec(), inner.boundary().to_vec())?;
            let e = conformal::modulus_adaptive(&a, s.resolution, s.max_resolution, s.target_change, s.solver_tol)?;
            (format!("{outer_label} \\ {inner_label}"), String::new(), e)
        }
        MeasureKind::Capacity => {
            let e = conformal::capacity(outer.boundary(), m.pole, s.resolution, s.solver_tol)?;
            let pole = match m.pole {
                Pole::Infinity => "infinity".to_string(),
                Pole::Point(z) => format!("{:?},{:?}", z.re, z.im),
            };
            (outer_label, pole, e)
        }
    };
    let kind = match m.kind {
        MeasureKind::Modulus => "modulus",
        MeasureKind::Capacity => "capacity",
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "kind",
        "pieces",
        "pole",
        "resolution",
        "raw",
        "coarse",
        "richardson",
        "change",
        "residual",
        "config_hash",
        "precision",
    ])
    .map_err(csv_err)?;
    w.write_record([
        kind.to_string(),
        label.clone(),
        pole.clone(),
        e.resolution.to_string(),
        format!("{:?}", e.value),
        format!("{:?}", e.coarse),
        format!("{:?}", e.richardson),
        format!("{:?}", e.change()),
        format!("{:?}", e.residual),
        cfg.hash(),
        PRECISION.to_string(),
    ])
    .map_err(csv_err)?;
    let mut out = Outputs::default();
    out.add("measure.csv", w.into_inner().map_err(|e| Error::Io(e.to_string()))?);
    out.json(
        cfg,
        "measure.json",
        json!({
            "kind": kind,
            "pieces": label,
            "pole": pole,
            "estimate": serde_json::to_value(e)?,
        }),
    )?;
    Ok(Outcome {
        written: out.write(&cfg.output)?,
        ..Default::default()
    })
}
