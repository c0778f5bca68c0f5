//! Curve snapshots: `{"time": t, "ambient": name, "points": [[x, y, ...], ...]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ambient::AmbientModel;
use crate::curve::DiscreteCurve;
use crate::error::{Error, Result};
use crate::vector::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub time: f64,
    pub ambient: String,
    pub points: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn of(curve: &DiscreteCurve, time: f64) -> Self {
        Snapshot {
            time,
            ambient: curve.ambient().name(),
            points: curve.points().iter().map(|p| p.as_slice().to_vec()).collect(),
        }
    }

    /// Rebuilds the curve on `ambient`, whose name must match the snapshot.
    pub fn to_curve(&self, ambient: AmbientModel) -> Result<DiscreteCurve> {
        if ambient.name() != self.ambient {
            return Err(Error::Format(format!(
                "snapshot ambient {:?} does not match {:?}",
                self.ambient,
                ambient.name()
            )));
        }
        let points = self
            .points
            .iter()
            .map(|c| Vector::try_from_slice(c).ok_or_else(|| Error::Format(format!("bad point of length {}", c.len()))))
            .collect::<Result<Vec<_>>>()?;
        DiscreteCurve::new(ambient, points)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::presets;

    #[test]
    fn round_trip_is_exact() {
        let c = presets::sphere_latitude(64, 0.7).unwrap().perturb_normal(0.05, 3, 9).unwrap();
        let snap = Snapshot::from_json(&Snapshot::of(&c, 1.25).to_json()).unwrap();
        assert_eq!(snap.time, 1.25);
        let back = snap.to_curve(AmbientModel::sphere()).unwrap();
        for (a, b) in c.points().iter().zip(back.points()) {
            assert_eq!(a.as_slice(), b.as_slice());
        }
    }

    #[test]
    fn rejects_mismatched_ambient_and_junk() {
        let c = presets::euclidean_circle(32, 1.0).unwrap();
        let snap = Snapshot::of(&c, 0.0);
        assert!(snap.to_curve(AmbientModel::sphere()).is_err());
        assert!(Snapshot::from_json("{\"time\": 0}").is_err());
        assert!(Snapshot::from_json("{\"time\": 0, \"ambient\": \"sphere2\", \"points\": [], \"extra\": 1}").is_err());
    }
}
