//! Scenes: planned path, ego states, pedestrian tracks and the semantic grid.
//!
//! Scenes are validated on construction and on load; violating inputs are rejected.
//! Files recorded at a rate other than 10 Hz are resampled by linear interpolation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_degrees, PlannedPath, Point};
use crate::grid::SemanticGrid;

/// Scene time step in seconds (10 Hz).
pub const DT: f64 = 0.1;

const TIME_TOL: f64 = 1e-6;
const EGO_ON_PATH_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PedState {
    pub t: f64,
    pub pos: Point,
    /// Head orientation in degrees, `[0, 360)`.
    pub head_deg: Option<f64>,
    /// Body orientation in degrees, `[0, 360)`.
    pub body_deg: Option<f64>,
}

impl PedState {
    pub fn new(t: f64, pos: Point) -> Self {
        Self {
            t,
            pos,
            head_deg: None,
            body_deg: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PedTrack {
    pub id: String,
    pub states: Vec<PedState>,
}

impl PedTrack {
    pub fn start_time(&self) -> f64 {
        self.states.first().map_or(0.0, |s| s.t)
    }

    pub fn end_time(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    pub fn index_of(&self, t: f64, dt: f64) -> Option<usize> {
        let first = self.states.first()?;
        let k = ((t - first.t) / dt).round();
        if k < 0.0 || k as usize >= self.states.len() {
            return None;
        }
        let k = k as usize;
        ((self.states[k].t - t).abs() < TIME_TOL).then_some(k)
    }

    pub fn state_at(&self, t: f64, dt: f64) -> Option<&PedState> {
        self.index_of(t, dt).map(|k| &self.states[k])
    }

    pub fn position_at(&self, t: f64, dt: f64) -> Option<Point> {
        self.state_at(t, dt).map(|s| s.pos)
    }

    /// The `h` most recent states ending at `t` (inclusive).
    pub fn history(&self, t: f64, dt: f64, h: usize) -> Option<&[PedState]> {
        let k = self.index_of(t, dt)?;
        (k + 1 >= h).then(|| &self.states[k + 1 - h..=k])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgoState {
    pub t: f64,
    /// Arc-length position on the planned path.
    pub s: f64,
    pub v: f64,
    pub pos: Point,
    /// Radians.
    pub heading: f64,
}

impl EgoState {
    /// Ego state placed on `path` at arc length `s`.
    pub fn on_path(path: &PlannedPath, t: f64, s: f64, v: f64) -> Self {
        Self {
            t,
            s,
            v,
            pos: path.point_at(s),
            heading: path.heading_at(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub id: String,
    pub dt: f64,
    pub path: PlannedPath,
    pub ego: Vec<EgoState>,
    pub tracks: Vec<PedTrack>,
    pub grid: SemanticGrid,
}

fn on_grid(t: f64, dt: f64) -> bool {
    t >= 0.0 && t.is_finite() && ((t / dt).round() * dt - t).abs() < TIME_TOL
}

fn check_series<'a>(field: &str, times: impl Iterator<Item = &'a f64>, dt: f64) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (i, &t) in times.enumerate() {
        if !on_grid(t, dt) {
            return Err(Error::invariant(field, format!("t[{i}] = {t} not a non-negative multiple of dt = {dt}")));
        }
        if let Some(p) = prev {
            if ((t - p) - dt).abs() > TIME_TOL {
                return Err(Error::invariant(field, format!("step {} → {} is not dt = {dt}", p, t)));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

impl Scene {
    pub fn new(
        id: impl Into<String>,
        dt: f64,
        path: PlannedPath,
        ego: Vec<EgoState>,
        tracks: Vec<PedTrack>,
        grid: SemanticGrid,
    ) -> Result<Self> {
        let scene = Self {
            id: id.into(),
            dt,
            path,
            ego,
            tracks,
            grid,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invariant("dt", "must be positive"));
        }
        if self.ego.is_empty() {
            return Err(Error::invariant("ego", "at least one ego state required"));
        }
        check_series("ego.t", self.ego.iter().map(|e| &e.t), self.dt)?;
        for (i, e) in self.ego.iter().enumerate() {
            if !(e.v >= 0.0 && e.v.is_finite()) {
                return Err(Error::invariant("ego.v", format!("ego[{i}].v = {} must be ≥ 0", e.v)));
            }
            if !e.s.is_finite() || !e.heading.is_finite() {
                return Err(Error::invariant("ego", format!("ego[{i}] has non-finite values")));
            }
            let on_path = self.path.point_at(e.s);
            if on_path.dist(e.pos) > EGO_ON_PATH_TOL {
                return Err(Error::invariant(
                    "ego.position",
                    format!("ego[{i}] is {:.3e} m off the path point at s = {}", on_path.dist(e.pos), e.s),
                ));
            }
        }
        for (k, tr) in self.tracks.iter().enumerate() {
            let field = format!("tracks[{k}]");
            if tr.states.is_empty() {
                return Err(Error::invariant(field, "track has no states"));
            }
            check_series(&format!("{field}.t"), tr.states.iter().map(|s| &s.t), self.dt)?;
            let heads = tr.states.iter().filter(|s| s.head_deg.is_some()).count();
            let bodies = tr.states.iter().filter(|s| s.body_deg.is_some()).count();
            for (name, n) in [("head_deg", heads), ("body_deg", bodies)] {
                if n != 0 && n != tr.states.len() {
                    return Err(Error::invariant(format!("{field}.{name}"), "present for some states only"));
                }
            }
            for s in &tr.states {
                if !s.pos.is_finite() {
                    return Err(Error::invariant(field, "non-finite position"));
                }
                for a in [s.head_deg, s.body_deg].into_iter().flatten() {
                    if !(0.0..360.0).contains(&a) {
                        return Err(Error::invariant(format!("{field}.angle"), format!("{a} outside [0, 360)")));
                    }
                }
            }
        }
        let mut ids: Vec<&str> = self.tracks.iter().map(|t| t.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invariant("tracks.id", "duplicate track id"));
        }
        Ok(())
    }

    pub fn ego_start(&self) -> f64 {
        self.ego[0].t
    }

    pub fn ego_end(&self) -> f64 {
        self.ego[self.ego.len() - 1].t
    }

    pub fn ego_at(&self, t: f64) -> Option<&EgoState> {
        let k = ((t - self.ego_start()) / self.dt).round();
        if k < 0.0 || k as usize >= self.ego.len() {
            return None;
        }
        let e = &self.ego[k as usize];
        ((e.t - t).abs() < TIME_TOL).then_some(e)
    }

    pub fn track(&self, id: &str) -> Option<&PedTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// Canonical compact JSON (trailing newline included).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&WireScene::from_scene(self, None)).expect("finite values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: WireScene = serde_json::from_str(text).map_err(Error::from_json)?;
        wire.into_scene(None)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePath {
    vertices: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireEgo {
    t: f64,
    s: f64,
    v: f64,
    x: f64,
    y: f64,
    heading: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePedState {
    t: f64,
    x: f64,
    y: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    head_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    body_deg: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireTrack {
    id: String,
    states: Vec<WirePedState>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    cells: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    cells_file: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireScene {
    id: String,
    dt: f64,
    path: WirePath,
    ego: Vec<WireEgo>,
    tracks: Vec<WireTrack>,
    grid: WireGrid,
}

impl WireScene {
    fn from_scene(s: &Scene, cells_file: Option<&str>) -> Self {
        WireScene {
            id: s.id.clone(),
            dt: s.dt,
            path: WirePath {
                vertices: s.path.vertices().iter().map(|&p| p.into()).collect(),
            },
            ego: s
                .ego
                .iter()
                .map(|e| WireEgo {
                    t: e.t,
                    s: e.s,
                    v: e.v,
                    x: e.pos.x,
                    y: e.pos.y,
                    heading: e.heading,
                })
                .collect(),
            tracks: s
                .tracks
                .iter()
                .map(|tr| WireTrack {
                    id: tr.id.clone(),
                    states: tr
                        .states
                        .iter()
                        .map(|st| WirePedState {
                            t: st.t,
                            x: st.pos.x,
                            y: st.pos.y,
                            head_deg: st.head_deg,
                            body_deg: st.body_deg,
                        })
                        .collect(),
                })
                .collect(),
            grid: WireGrid {
                width: s.grid.width(),
                height: s.grid.height(),
                resolution: s.grid.resolution(),
                origin: s.grid.origin().into(),
                cells: cells_file.is_none().then(|| s.grid.cells().to_vec()),
                cells_file: cells_file.map(str::to_string),
            },
        }
    }

    fn into_scene(self, base_dir: Option<&Path>) -> Result<Scene> {
        let path = PlannedPath::new(self.path.vertices.into_iter().map(Point::from).collect())?;
        let g = self.grid;
        let cells = match (g.cells, g.cells_file) {
            (Some(c), None) => c,
            (None, Some(f)) => {
                let p = base_dir.map_or_else(|| Path::new(&f).to_path_buf(), |d| d.join(&f));
                SemanticGrid::read_cells_file(&p, g.width, g.height)?
            }
            _ => {
                return Err(Error::invariant(
                    "grid",
                    "exactly one of \"cells\" or \"cells_file\" required",
                ))
            }
        };
        let grid = SemanticGrid::new(g.width, g.height, g.resolution, g.origin.into(), cells)?;
        let ego = self
            .ego
            .into_iter()
            .map(|e| EgoState {
                t: e.t,
                s: e.s,
                v: e.v,
                pos: Point::new(e.x, e.y),
                heading: e.heading,
            })
            .collect();
        let tracks = self
            .tracks
            .into_iter()
            .map(|t| PedTrack {
                id: t.id,
                states: t
                    .states
                    .into_iter()
                    .map(|s| PedState {
                        t: s.t,
                        pos: Point::new(s.x, s.y),
                        head_deg: s.head_deg,
                        body_deg: s.body_deg,
                    })
                    .collect(),
            })
            .collect();
        let scene = Scene::new(self.id, self.dt, path, ego, tracks, grid)?;
        if (scene.dt - DT).abs() > 1e-12 {
            return resample(&scene, DT);
        }
        Ok(scene)
    }
}

/// Load and validate a scene file. Scenes at other rates come back resampled to [`DT`].
pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let wire: WireScene = serde_json::from_str(&text).map_err(Error::from_json)?;
    wire.into_scene(path.parent())
}

/// Write the canonical encoding with inline cells.
pub fn save_scene(scene: &Scene, path: &Path) -> Result<()> {
    std::fs::write(path, scene.to_json()).map_err(|e| Error::io(path, e))
}

/// Write the scene with its grid in a separate binary file `cells_name`, placed next to
/// the scene file and referenced relative to it.
pub fn save_scene_with_cells_file(scene: &Scene, path: &Path, cells_name: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    scene.grid.write_cells_file(&dir.join(cells_name))?;
    let mut s = serde_json::to_string(&WireScene::from_scene(scene, Some(cells_name))).expect("serializable");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    a + (b - a) * u
}

fn lerp_degrees(a: f64, b: f64, u: f64) -> f64 {
    let mut d = (b - a).rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    wrap_degrees(a + d * u)
}

fn lerp_radians(a: f64, b: f64, u: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut d = (b - a).rem_euclid(tau);
    if d > std::f64::consts::PI {
        d -= tau;
    }
    a + d * u
}

/// Grid times `k / rate` inside `[t0, t1]`.
fn grid_times(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let per_sec = (1.0 / dt).round();
    let k0 = (t0 * per_sec - 1e-6).ceil() as i64;
    let k1 = (t1 * per_sec + 1e-6).floor() as i64;
    (k0..=k1).map(|k| k as f64 / per_sec).collect()
}

/// Locate `t` in a sorted series: `(i, u)` with value = lerp(x[i], x[i+1], u).
fn bracket(times: &[f64], t: f64) -> (usize, f64) {
    if times.len() == 1 {
        return (0, 0.0);
    }
    let i = times.partition_point(|&x| x <= t).saturating_sub(1).min(times.len() - 2);
    let u = ((t - times[i]) / (times[i + 1] - times[i])).clamp(0.0, 1.0);
    (i, u)
}

/// Resample a validated scene to step `dt` by linear interpolation (circular for angles).
pub fn resample(scene: &Scene, dt: f64) -> Result<Scene> {
    let ego_times: Vec<f64> = scene.ego.iter().map(|e| e.t).collect();
    let ego = grid_times(scene.ego_start(), scene.ego_end(), dt)
        .into_iter()
        .map(|t| {
            let (i, u) = bracket(&ego_times, t);
            let a = &scene.ego[i];
            let b = scene.ego.get(i + 1).unwrap_or(a);
            let s = lerp(a.s, b.s, u);
            EgoState {
                t,
                s,
                v: lerp(a.v, b.v, u),
                pos: scene.path.point_at(s),
                heading: lerp_radians(a.heading, b.heading, u),
            }
        })
        .collect::<Vec<_>>();
    if ego.is_empty() {
        return Err(Error::invariant("ego", "no ego state falls on the resampled time grid"));
    }
    let mut tracks = Vec::with_capacity(scene.tracks.len());
    for tr in &scene.tracks {
        let times: Vec<f64> = tr.states.iter().map(|s| s.t).collect();
        let states: Vec<PedState> = grid_times(tr.start_time(), tr.end_time(), dt)
            .into_iter()
            .map(|t| {
                let (i, u) = bracket(&times, t);
                let a = &tr.states[i];
                let b = tr.states.get(i + 1).unwrap_or(a);
                PedState {
                    t,
                    pos: a.pos + (b.pos - a.pos) * u,
                    head_deg: a.head_deg.zip(b.head_deg).map(|(x, y)| lerp_degrees(x, y, u)),
                    body_deg: a.body_deg.zip(b.body_deg).map(|(x, y)| lerp_degrees(x, y, u)),
                }
            })
            .collect();
        if !states.is_empty() {
            tracks.push(PedTrack {
                id: tr.id.clone(),
                states,
            });
        }
    }
    Scene::new(scene.id.clone(), dt, scene.path.clone(), ego, tracks, scene.grid.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"id":"s0","dt":0.1,"path":{"vertices":[[0.0,0.0],[50.0,0.0]]},"ego":[{"t":0.0,"s":5.0,"v":10.0,"x":5.0,"y":0.0,"heading":0.0}],"tracks":[{"id":"p0","states":[{"t":0.0,"x":20.0,"y":3.0,"head_deg":90.0,"body_deg":180.0}]}],"grid":{"width":4,"height":4,"resolution":0.5,"origin":[0.0,0.0],"cells":[0,1,2,3,4,5,6,0,1,1,1,1,2,2,2,2]}}
"#;

    #[test]
    fn minimal_scene_roundtrip() {
        let s = Scene::from_json(MINIMAL).unwrap();
        assert_eq!(s.id, "s0");
        assert_eq!(s.ego[0].v, 10.0);
        assert_eq!(s.tracks[0].states[0].pos, Point::new(20.0, 3.0));
        assert_eq!(s.tracks[0].states[0].body_deg, Some(180.0));
        assert_eq!(s.grid.cells()[5], 5);
        assert_eq!(s.to_json(), MINIMAL);
    }

    #[test]
    fn ego_off_path_rejected() {
        let bad = MINIMAL.replace(r#""x":5.0,"y":0.0"#, r#""x":5.0,"y":0.1"#);
        let err = Scene::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("ego.position"), "{err}");
    }

    #[test]
    fn partial_orientation_rejected() {
        let text = MINIMAL.replace(
            r#"{"t":0.0,"x":20.0,"y":3.0,"head_deg":90.0,"body_deg":180.0}"#,
            r#"{"t":0.0,"x":20.0,"y":3.0,"head_deg":90.0},{"t":0.1,"x":20.0,"y":3.0}"#,
        );
        let err = Scene::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("head_deg"), "{err}");
    }

    #[test]
    fn gap_in_track_rejected() {
        let text = MINIMAL.replace(
            r#"{"t":0.0,"x":20.0,"y":3.0,"head_deg":90.0,"body_deg":180.0}"#,
            r#"{"t":0.0,"x":20.0,"y":3.0},{"t":0.2,"x":20.0,"y":3.0}"#,
        );
        assert!(Scene::from_json(&text).is_err());
    }

    #[test]
    fn parse_error_has_position() {
        match Scene::from_json("{\"id\": 3}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn twenty_hertz_resampled_to_ten() {
        let path = PlannedPath::straight(Point::new(0.0, 0.0), Point::new(100.0, 0.0)).unwrap();
        let ego: Vec<EgoState> = (0..=10)
            .map(|k| EgoState::on_path(&path, k as f64 * 0.05, k as f64 * 0.5, 10.0))
            .collect();
        let states = (0..=10)
            .map(|k| PedState::new(k as f64 * 0.05, Point::new(30.0, k as f64 * 0.07)))
            .collect();
        let grid = SemanticGrid::filled(2, 2, 1.0, Point::default(), crate::grid::CellClass::Road).unwrap();
        let s = Scene::new("r", 0.05, path, ego, vec![PedTrack { id: "p".into(), states }], grid).unwrap();
        let r = resample(&s, DT).unwrap();
        assert_eq!(r.ego.len(), 6);
        assert_eq!(r.ego[3].t, 0.3);
        assert!((r.ego[3].s - 3.0).abs() < 1e-9);
        assert!((r.tracks[0].states[2].pos.y - 0.28).abs() < 1e-9);
    }

    #[test]
    fn cells_file_roundtrip() {
        let dir = std::env::temp_dir().join(format!("roisense-scene-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let s = Scene::from_json(MINIMAL).unwrap();
        let p = dir.join("scene.json");
        save_scene_with_cells_file(&s, &p, "scene.cells").unwrap();
        let back = load_scene(&p).unwrap();
        assert_eq!(back, s);
        std::fs::remove_dir_all(&dir).ok();
    }
}
