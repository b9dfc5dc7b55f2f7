//! Predictive distributions over future pedestrian positions and their JSON Lines format.
//!
//! Each record holds one distribution per horizon `T ∈ {1, 2, 3, 4}` s, either as a
//! 2-D Gaussian mixture or as an equally weighted sample set.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, RigidTransform};

/// Prediction horizons in seconds.
pub const HORIZONS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// Default isotropic kernel width used to turn sample sets into mixtures.
pub const DEFAULT_KERNEL_SIGMA: f64 = 0.2;

const WEIGHT_SUM_TOL: f64 = 1e-9;
const MIN_EIGENVALUE: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;

/// Index of horizon `t` in [`HORIZONS`].
pub fn horizon_index(t: f64) -> Result<usize> {
    HORIZONS
        .iter()
        .position(|&h| (h - t).abs() < 1e-9)
        .ok_or(Error::MissingHorizon(t))
}

/// Bivariate normal with a validated SPD covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian2 {
    mean: Point,
    cov: [[f64; 2]; 2],
    // lower Cholesky factor: [l00, l10, l11]
    chol: [f64; 3],
    inv: [[f64; 2]; 2],
    log_norm: f64,
}

impl Gaussian2 {
    pub fn new(mean: Point, cov: [[f64; 2]; 2]) -> Result<Self> {
        if !mean.is_finite() || cov.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invariant("cov", "non-finite mean or covariance"));
        }
        let (a, b, b2, c) = (cov[0][0], cov[0][1], cov[1][0], cov[1][1]);
        if (b - b2).abs() > SYMMETRY_TOL * b.abs().max(b2.abs()).max(1.0) {
            return Err(Error::invariant("cov", "covariance not symmetric"));
        }
        let b = 0.5 * (b + b2);
        let half_trace = 0.5 * (a + c);
        let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let min_eig = half_trace - disc;
        if min_eig <= MIN_EIGENVALUE {
            return Err(Error::invariant(
                "cov",
                format!("covariance not positive definite (min eigenvalue {min_eig:e})"),
            ));
        }
        let det = a * c - b * b;
        let l00 = a.sqrt();
        let l10 = b / l00;
        let l11 = (c - l10 * l10).sqrt();
        Ok(Self {
            mean,
            cov,
            chol: [l00, l10, l11],
            inv: [[c / det, -b / det], [-b / det, a / det]],
            log_norm: -(2.0 * PI).ln() - 0.5 * det.ln(),
        })
    }

    pub fn isotropic(mean: Point, sigma: f64) -> Result<Self> {
        let v = sigma * sigma;
        Self::new(mean, [[v, 0.0], [0.0, v]])
    }

    pub fn mean(&self) -> Point {
        self.mean
    }

    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn log_pdf(&self, p: Point) -> f64 {
        let d = p - self.mean;
        let q = d.x * (self.inv[0][0] * d.x + self.inv[0][1] * d.y)
            + d.y * (self.inv[1][0] * d.x + self.inv[1][1] * d.y);
        self.log_norm - 0.5 * q
    }

    /// Map a standard-normal pair through the Cholesky factor.
    pub fn from_standard(&self, z0: f64, z1: f64) -> Point {
        let [l00, l10, l11] = self.chol;
        Point::new(self.mean.x + l00 * z0, self.mean.y + l10 * z0 + l11 * z1)
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Result<Self> {
        Self::new(tf.apply(self.mean), tf.apply_cov(self.cov))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub gaussian: Gaussian2,
}

/// Finite Gaussian mixture with positive weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    components: Vec<MixtureComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invariant("weights", "mixture has no components"));
        }
        if let Some(c) = components.iter().find(|c| !(c.weight > 0.0) || !c.weight.is_finite()) {
            return Err(Error::invariant("weights", format!("non-positive weight {}", c.weight)));
        }
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invariant("weights", format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { components })
    }

    /// Build from `(weight, mean, cov)` triples.
    pub fn from_parts(parts: impl IntoIterator<Item = (f64, Point, [[f64; 2]; 2])>) -> Result<Self> {
        let components = parts
            .into_iter()
            .map(|(w, m, c)| {
                Ok(MixtureComponent {
                    weight: w,
                    gaussian: Gaussian2::new(m, c)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    pub fn single(g: Gaussian2) -> Self {
        Self {
            components: vec![MixtureComponent { weight: 1.0, gaussian: g }],
        }
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// log Σ_k w_k N(p; μ_k, Σ_k), via log-sum-exp.
    pub fn log_pdf(&self, p: Point) -> f64 {
        let logs: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.gaussian.log_pdf(p))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }

    pub fn mean(&self) -> Point {
        self.components
            .iter()
            .fold(Point::default(), |acc, c| acc + c.gaussian.mean() * c.weight)
    }

    /// Moment-matched single Gaussian.
    pub fn collapse(&self) -> Result<Gaussian2> {
        let m = self.mean();
        let mut cov = [[0.0; 2]; 2];
        for c in &self.components {
            let d = c.gaussian.mean() - m;
            let s = c.gaussian.cov();
            cov[0][0] += c.weight * (s[0][0] + d.x * d.x);
            cov[0][1] += c.weight * (s[0][1] + d.x * d.y);
            cov[1][1] += c.weight * (s[1][1] + d.y * d.y);
        }
        cov[1][0] = cov[0][1];
        Gaussian2::new(m, cov)
    }

    /// Draw `n` points. Each draw consumes one uniform (component) and two normals.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Point> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let g = self.pick(u);
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            out.push(g.from_standard(z0, z1));
        }
        out
    }

    fn pick(&self, u: f64) -> &Gaussian2 {
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                return &c.gaussian;
            }
        }
        &self.components.last().expect("non-empty").gaussian
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(MixtureComponent {
                    weight: c.weight,
                    gaussian: c.gaussian.transformed(tf)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }
}

/// Distribution over the position at one horizon.
#[derive(Clone, Debug, PartialEq)]
pub enum HorizonDist {
    Mixture(GaussianMixture),
    /// Equally weighted samples.
    Samples(Vec<Point>),
}

impl HorizonDist {
    pub fn samples(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invariant("samples", "sample set is empty"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invariant("samples", "non-finite sample"));
        }
        Ok(HorizonDist::Samples(points))
    }

    pub fn mean(&self) -> Point {
        match self {
            HorizonDist::Mixture(m) => m.mean(),
            HorizonDist::Samples(s) => {
                s.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / s.len() as f64)
            }
        }
    }

    /// Mixture view; sample sets become equal-weight isotropic kernels of width `kernel_sigma`.
    pub fn to_mixture(&self, kernel_sigma: f64) -> Result<GaussianMixture> {
        match self {
            HorizonDist::Mixture(m) => Ok(m.clone()),
            HorizonDist::Samples(s) => {
                let w = 1.0 / s.len() as f64;
                let v = kernel_sigma * kernel_sigma;
                let components = s
                    .iter()
                    .map(|&p| {
                        Ok(MixtureComponent {
                            weight: w,
                            gaussian: Gaussian2::new(p, [[v, 0.0], [0.0, v]])?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                // Equal weights may sum to 1 ± n·ulp; skip the tolerance check.
                Ok(GaussianMixture { components })
            }
        }
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Result<Self> {
        Ok(match self {
            HorizonDist::Mixture(m) => HorizonDist::Mixture(m.transformed(tf)?),
            HorizonDist::Samples(s) => HorizonDist::Samples(s.iter().map(|&p| tf.apply(p)).collect()),
        })
    }
}

/// Per-horizon predictive distribution for one track issued at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveDistribution {
    pub track_id: String,
    pub issue_time: f64,
    horizons: [HorizonDist; 4],
}

impl PredictiveDistribution {
    pub fn new(track_id: impl Into<String>, issue_time: f64, horizons: [HorizonDist; 4]) -> Self {
        Self {
            track_id: track_id.into(),
            issue_time,
            horizons,
        }
    }

    pub fn at(&self, horizon: f64) -> Result<&HorizonDist> {
        Ok(&self.horizons[horizon_index(horizon)?])
    }

    pub fn horizons(&self) -> &[HorizonDist; 4] {
        &self.horizons
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Result<Self> {
        let h = &self.horizons;
        Ok(Self {
            track_id: self.track_id.clone(),
            issue_time: self.issue_time,
            horizons: [
                h[0].transformed(tf)?,
                h[1].transformed(tf)?,
                h[2].transformed(tf)?,
                h[3].transformed(tf)?,
            ],
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    track_id: String,
    t: f64,
    horizons: BTreeMap<String, WireHorizon>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireHorizon {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mixture: Option<Vec<WireComponent>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    samples: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireComponent {
    w: f64,
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

const HORIZON_KEYS: [&str; 4] = ["1", "2", "3", "4"];

fn horizon_from_wire(key: &str, h: WireHorizon) -> Result<HorizonDist> {
    match (h.mixture, h.samples) {
        (Some(m), None) => {
            let mix = GaussianMixture::from_parts(m.into_iter().map(|c| (c.w, c.mean.into(), c.cov)))
                .map_err(|e| match e {
                    Error::Invariant { field, message } => {
                        Error::invariant(format!("horizons.{key}.{field}"), message)
                    }
                    other => other,
                })?;
            Ok(HorizonDist::Mixture(mix))
        }
        (None, Some(s)) => HorizonDist::samples(s.into_iter().map(Point::from).collect()),
        _ => Err(Error::invariant(
            format!("horizons.{key}"),
            "exactly one of \"mixture\" or \"samples\" required",
        )),
    }
}

fn horizon_to_wire(h: &HorizonDist) -> WireHorizon {
    match h {
        HorizonDist::Mixture(m) => WireHorizon {
            mixture: Some(
                m.components()
                    .iter()
                    .map(|c| WireComponent {
                        w: c.weight,
                        mean: c.gaussian.mean().into(),
                        cov: c.gaussian.cov(),
                    })
                    .collect(),
            ),
            samples: None,
        },
        HorizonDist::Samples(s) => WireHorizon {
            mixture: None,
            samples: Some(s.iter().map(|&p| p.into()).collect()),
        },
    }
}

/// Parse and validate one JSON Lines record.
pub fn parse_prediction(line: &str) -> Result<PredictiveDistribution> {
    let rec: WireRecord = serde_json::from_str(line).map_err(Error::from_json)?;
    if !rec.t.is_finite() || rec.t < 0.0 {
        return Err(Error::invariant("t", "issue time must be finite and non-negative"));
    }
    let mut horizons = rec.horizons;
    if let Some(extra) = horizons.keys().find(|k| !HORIZON_KEYS.contains(&k.as_str())) {
        return Err(Error::invariant("horizons", format!("unexpected horizon key {extra:?}")));
    }
    let mut take = |key: &str| -> Result<HorizonDist> {
        let h = horizons
            .remove(key)
            .ok_or_else(|| Error::invariant("horizons", format!("missing horizon \"{key}\"")))?;
        horizon_from_wire(key, h)
    };
    let hs = [take("1")?, take("2")?, take("3")?, take("4")?];
    Ok(PredictiveDistribution::new(rec.track_id, rec.t, hs))
}

/// Canonical single-line JSON encoding (no trailing newline).
pub fn prediction_to_json(d: &PredictiveDistribution) -> String {
    let rec = WireRecord {
        track_id: d.track_id.clone(),
        t: d.issue_time,
        horizons: HORIZON_KEYS
            .iter()
            .zip(d.horizons.iter())
            .map(|(k, h)| (k.to_string(), horizon_to_wire(h)))
            .collect(),
    };
    serde_json::to_string(&rec).expect("finite values serialize")
}

/// Read a prediction file; errors carry the 0-based index of the offending record.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictiveDistribution>> {
    let mut out = Vec::new();
    let mut index = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("line {}", lineno + 1), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_prediction(&line).map_err(|e| e.at_record(index))?);
        index += 1;
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictiveDistribution>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(BufReader::new(f))
}

pub fn write_predictions<W: Write>(dists: &[PredictiveDistribution], mut w: W) -> std::io::Result<()> {
    for d in dists {
        w.write_all(prediction_to_json(d).as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_predictions(dists: &[PredictiveDistribution], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_predictions(dists, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ONE_MODE: &str = r#"{"mixture":[{"w":1.0,"mean":[0.0,0.0],"cov":[[1.0,0.0],[0.0,1.0]]}]}"#;

    fn record(h3: &str) -> String {
        format!(r#"{{"track_id":"a","t":1.0,"horizons":{{"1":{ONE_MODE},"2":{ONE_MODE},"3":{h3},"4":{ONE_MODE}}}}}"#)
    }

    #[test]
    fn weights_must_sum_to_one() {
        let bad = r#"{"mixture":[{"w":0.9,"mean":[0.0,0.0],"cov":[[1.0,0.0],[0.0,1.0]]}]}"#;
        let err = parse_prediction(&record(bad)).unwrap_err().to_string();
        assert!(err.contains("weights"), "{err}");
    }

    #[test]
    fn rejects_non_spd_covariance() {
        let bad = r#"{"mixture":[{"w":1.0,"mean":[0.0,0.0],"cov":[[1.0,2.0],[2.0,1.0]]}]}"#;
        assert!(parse_prediction(&record(bad)).is_err());
        let asym = r#"{"mixture":[{"w":1.0,"mean":[0.0,0.0],"cov":[[1.0,0.1],[0.2,1.0]]}]}"#;
        assert!(parse_prediction(&record(asym)).is_err());
    }

    #[test]
    fn missing_horizon_rejected_with_record_index() {
        let ok = record(ONE_MODE);
        let missing = format!(r#"{{"track_id":"b","t":2.0,"horizons":{{"1":{ONE_MODE},"2":{ONE_MODE},"4":{ONE_MODE}}}}}"#);
        let text = format!("{ok}\n{missing}\n");
        let err = read_predictions(text.as_bytes()).unwrap_err();
        match err {
            Error::Record { index, source } => {
                assert_eq!(index, 1);
                assert!(source.to_string().contains("\"3\""));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mixed_representations_accepted() {
        let samples = r#"{"samples":[[0.0,1.0],[2.0,3.0]]}"#;
        let d = parse_prediction(&record(samples)).unwrap();
        assert!(matches!(d.at(3.0).unwrap(), HorizonDist::Samples(s) if s.len() == 2));
        assert!(matches!(d.at(1.0).unwrap(), HorizonDist::Mixture(_)));
        assert_eq!(prediction_to_json(&d), record(samples));
    }

    #[test]
    fn unit_gaussian_log_density_at_mean() {
        let g = Gaussian2::isotropic(Point::new(1.0, 2.0), 1.0).unwrap();
        assert!((g.log_pdf(Point::new(1.0, 2.0)) + (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn draws_match_moments() {
        let mix = GaussianMixture::from_parts([
            (0.3, Point::new(-2.0, 0.0), [[0.5, 0.1], [0.1, 0.4]]),
            (0.7, Point::new(1.0, 1.0), [[0.2, 0.0], [0.0, 0.3]]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = mix.draw(&mut rng, 200_000);
        let m = pts.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / pts.len() as f64);
        let expect = mix.mean();
        assert!(m.dist(expect) < 0.01, "{m:?} vs {expect:?}");
        let g = mix.collapse().unwrap();
        let vx = pts.iter().map(|p| (p.x - m.x).powi(2)).sum::<f64>() / pts.len() as f64;
        assert!((vx - g.cov()[0][0]).abs() < 0.02);
    }
}
