//! Curve files.
//!
//! ```json
//! {"version":1,"ambient":{"kind":"flat_torus","dim":2},"grid":64,
//!  "points":[[0.0,0.5],...],"winding":[1,0]}
//! ```
//!
//! Torus points are stored reduced to `[0,1)^n`; the lift is rebuilt from
//! the winding on load. `winding` is omitted for the other ambients.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ambient::{reduce_torus, AmbientSpace};
use crate::curve::Embedding;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub version: u32,
    pub ambient: AmbientSpace,
    pub grid: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winding: Option<Vec<i64>>,
}

impl CurveFile {
    pub fn from_embedding(x: &Embedding) -> Self {
        let space = x.space();
        let points = (0..x.len())
            .map(|i| {
                let c = x.coord(i);
                if space.is_torus() {
                    reduce_torus(c)
                } else {
                    c.to_vec()
                }
            })
            .collect();
        Self {
            version: FORMAT_VERSION,
            ambient: space,
            grid: x.len(),
            points,
            winding: space.is_torus().then(|| x.winding().to_vec()),
        }
    }

    pub fn to_embedding(&self) -> Result<Embedding> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported curve file version {}", self.version)));
        }
        self.ambient.validate()?;
        if self.points.len() != self.grid {
            return Err(Error::Parse(format!(
                "grid is {} but {} points are given",
                self.grid,
                self.points.len()
            )));
        }
        let d = self.ambient.coord_len();
        if let Some(i) = self.points.iter().position(|p| p.len() != d) {
            return Err(Error::Parse(format!("point {i} does not have {d} coordinates")));
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite coordinate".into()));
        }
        if self.ambient.is_torus() {
            let w = self
                .winding
                .clone()
                .ok_or_else(|| Error::Parse("torus curve without winding".into()))?;
            Embedding::from_torus_points(self.ambient, &self.points, w)
        } else {
            if self.winding.is_some() {
                return Err(Error::Parse("winding given for a non-torus ambient".into()));
            }
            Embedding::from_flat(self.ambient, self.points.concat(), Vec::new())
        }
    }
}

pub fn parse_curve(text: &str) -> Result<Embedding> {
    let file: CurveFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_embedding()
}

pub fn curve_to_json(x: &Embedding) -> String {
    serde_json::to_string(&CurveFile::from_embedding(x)).expect("curve file serializes")
}

pub fn read_curve(path: &Path) -> Result<Embedding> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_curve(&text)
}

pub fn write_curve(path: &Path, x: &Embedding) -> std::io::Result<()> {
    fs::write(path, curve_to_json(x) + "\n")
}
