//! Radial profile CSV: `r,u,h,U,V,A0,Amag`, every value written with 17
//! significant digits so that a read-back reproduces the doubles exactly.

use std::fmt::Write as _;
use std::path::Path;

use css_core::gauge::GaugeFields;
use css_core::ModelParams;

use crate::error::CliError;

pub const HEADER: &str = "r,u,h,U,V,A0,Amag";

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub params: Option<ModelParams>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub u_mag: Vec<f64>,
    pub v: Vec<f64>,
    pub a0: Vec<f64>,
    pub a_mag: Vec<f64>,
}

impl Profile {
    pub fn from_gauge(g: &GaugeFields, params: Option<ModelParams>) -> Profile {
        Profile {
            params,
            r: g.phi.grid().nodes().to_vec(),
            u: g.phi.values().to_vec(),
            h: g.h.clone(),
            u_mag: g.u_mag.clone(),
            v: g.a0.clone(),
            a0: g.a0.clone(),
            a_mag: g.a_mag.clone(),
        }
    }

    fn columns(&self) -> [&[f64]; 7] {
        [
            &self.r,
            &self.u,
            &self.h,
            &self.u_mag,
            &self.v,
            &self.a0,
            &self.a_mag,
        ]
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let n = self.r.len();
        if let Some(bad) = self.columns().iter().find(|c| c.len() != n) {
            return Err(CliError::Config(format!(
                "profile columns disagree in length ({n} vs {})",
                bad.len()
            )));
        }
        let mut out = String::with_capacity(n * 170);
        if let Some(p) = &self.params {
            let _ = writeln!(out, "# model p={} eps={} alpha={}", p.p, p.eps, p.alpha);
        }
        out.push_str(HEADER);
        out.push('\n');
        for i in 0..n {
            let row: Vec<String> = self
                .columns()
                .iter()
                .map(|c| format!("{:.16e}", c[i]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = self.to_csv()?;
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn parse(text: &str, path: &Path) -> Result<Profile, CliError> {
        let bad = |message: String| CliError::Profile {
            path: path.to_path_buf(),
            message,
        };
        let mut params = None;
        let mut cols: [Vec<f64>; 7] = Default::default();
        let mut header_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                params = parse_model_comment(rest).or(params);
                continue;
            }
            if !header_seen {
                if line != HEADER {
                    return Err(bad(format!("expected header `{HEADER}`, found `{line}`")));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(bad(format!(
                    "line {}: expected 7 columns, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            for (col, f) in cols.iter_mut().zip(fields) {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("line {}: `{f}` is not a number", lineno + 1)))?;
                col.push(v);
            }
        }
        if !header_seen {
            return Err(bad("missing header".into()));
        }
        let [r, u, h, u_mag, v, a0, a_mag] = cols;
        Ok(Profile {
            params,
            r,
            u,
            h,
            u_mag,
            v,
            a0,
            a_mag,
        })
    }

    pub fn read(path: &Path) -> Result<Profile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Profile::parse(&text, path)
    }
}

fn parse_model_comment(s: &str) -> Option<ModelParams> {
    let rest = s.trim().strip_prefix("model")?;
    let mut p = None;
    let mut eps = None;
    let mut alpha = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=')?;
        let v: f64 = v.parse().ok()?;
        match k {
            "p" => p = Some(v),
            "eps" => eps = Some(v),
            "alpha" => alpha = Some(v),
            _ => {}
        }
    }
    Some(ModelParams {
        p: p?,
        eps: eps?,
        alpha: alpha?,
    })
}
