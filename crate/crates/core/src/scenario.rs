//! Experiment geometry, radio and budget parameters, and the scenario file.
//!
//! A scenario file is a list of `key = value` lines. `#` starts a comment,
//! vectors are comma separated, and each user is a `[user]` block with
//! `position`, `space` and `order` keys. Solver settings and the method may
//! appear in the same file (see [`crate::settings`]). Every key is optional
//! and falls back to [`Scenario::default`].

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;

use crate::error::ScenarioError;
use crate::settings::{Method, Settings};

pub type Point = Vector2<f64>;

/// Which side of the surface a user is on, hence which beamformer serves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Reflection,
    Transmission,
}

impl Space {
    pub const BOTH: [Space; 2] = [Space::Reflection, Space::Transmission];

    pub fn index(self) -> usize {
        match self {
            Space::Reflection => 0,
            Space::Transmission => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Space::Reflection => "reflection",
            Space::Transmission => "transmission",
        }
    }

    fn parse(s: &str) -> Option<Space> {
        match s {
            "reflection" | "r" => Some(Space::Reflection),
            "transmission" | "t" => Some(Space::Transmission),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub position: Point,
    pub space: Space,
    /// Position in the successive-cancellation decoding order, 1-based.
    pub order: usize,
}

/// Immutable configuration of one experiment. Lengths in meters, powers in
/// watts, gains linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub uav_altitude: f64,
    pub surface_height: f64,
    /// Horizontal position of the surface's first element.
    pub surface_position: Point,
    /// Users sorted by decoding order once validated.
    pub users: Vec<UserSpec>,
    pub elements: usize,
    pub slots: usize,
    /// Largest horizontal displacement within one slot.
    pub max_step: f64,
    pub start: Point,
    pub end: Point,
    pub max_power: f64,
    pub noise_power: f64,
    /// Path gain at the 1 m reference distance.
    pub ref_gain: f64,
    pub exp_direct: f64,
    pub exp_uav_surface: f64,
    pub exp_surface_user: f64,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            uav_altitude: 30.0,
            surface_height: 20.0,
            surface_position: Point::new(0.0, 0.0),
            users: default_users(),
            elements: 40,
            slots: 30,
            max_step: 30.0,
            start: Point::new(10.0, -250.0),
            end: Point::new(10.0, 250.0),
            max_power: 1.0,
            noise_power: 1e-11,
            ref_gain: 1e-3,
            exp_direct: 3.0,
            exp_uav_surface: 2.0,
            exp_surface_user: 2.8,
            element_spacing: 0.5,
            seed: 1,
        }
    }
}

/// One reflection-space user on the UAV's side of the surface (x > 0) and
/// three transmission-space users behind it.
pub fn default_users() -> Vec<UserSpec> {
    let u = |x, y, space, order| UserSpec { position: Point::new(x, y), space, order };
    vec![
        u(-40.0, 30.0, Space::Transmission, 1),
        u(-30.0, -25.0, Space::Transmission, 2),
        u(-15.0, 10.0, Space::Transmission, 3),
        u(15.0, -5.0, Space::Reflection, 4),
    ]
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn user(&self, k: usize) -> &UserSpec {
        &self.users[k]
    }

    /// Checks every invariant and sorts users by decoding order.
    pub fn validated(mut self) -> Result<Scenario, ScenarioError> {
        let bad = |what: &str| Err(ScenarioError::Invalid(what.to_string()));
        let finite = [
            self.uav_altitude,
            self.surface_height,
            self.max_step,
            self.max_power,
            self.noise_power,
            self.ref_gain,
            self.exp_direct,
            self.exp_uav_surface,
            self.exp_surface_user,
            self.element_spacing,
            self.surface_position.x,
            self.surface_position.y,
            self.start.x,
            self.start.y,
            self.end.x,
            self.end.y,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all numeric parameters must be finite");
        }
        if !(self.surface_height > 0.0) {
            return bad("surface_height > 0");
        }
        if !(self.uav_altitude > self.surface_height) {
            return bad("uav_altitude > surface_height");
        }
        if self.elements < 1 {
            return bad("elements >= 1");
        }
        if self.slots < 1 {
            return bad("slots >= 1");
        }
        if !(self.max_step >= 0.0) {
            return bad("max_step >= 0");
        }
        if !(self.max_power > 0.0) {
            return bad("max_power > 0");
        }
        if !(self.noise_power > 0.0) {
            return bad("noise_power > 0");
        }
        if !(self.ref_gain > 0.0) {
            return bad("ref_gain > 0");
        }
        if !(self.exp_direct > 0.0 && self.exp_uav_surface > 0.0 && self.exp_surface_user > 0.0) {
            return bad("path-loss exponents > 0");
        }
        if !(self.element_spacing > 0.0) {
            return bad("element_spacing > 0");
        }
        let span = (self.end - self.start).norm();
        let reach = self.slots as f64 * self.max_step;
        if span > reach * (1.0 + 1e-12) {
            return Err(ScenarioError::Invalid(format!(
                "end not reachable from start: distance {span} > slots * max_step = {reach}"
            )));
        }
        if self.users.is_empty() {
            return bad("at least one user");
        }
        if self.users.iter().any(|u| !u.position.iter().all(|v| v.is_finite())) {
            return bad("user positions must be finite");
        }
        let k = self.users.len();
        let mut seen = vec![false; k];
        for u in &self.users {
            if u.order < 1 || u.order > k || seen[u.order - 1] {
                return Err(ScenarioError::Invalid(format!(
                    "user orders must be a permutation of 1..={k}"
                )));
            }
            seen[u.order - 1] = true;
        }
        self.users.sort_by_key(|u| u.order);
        Ok(self)
    }

    pub fn count_in(&self, space: Space) -> usize {
        self.users.iter().filter(|u| u.space == space).count()
    }
}

/// Everything a scenario file can carry.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFile {
    pub scenario: Scenario,
    pub settings: Settings,
    pub method: Option<Method>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    Ok(load_experiment(path)?.scenario)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentFile, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    parse_experiment(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Ok(parse_experiment(text)?.scenario)
}

#[derive(Default)]
struct PartialUser {
    line: usize,
    position: Option<Point>,
    space: Option<Space>,
    order: Option<usize>,
}

pub fn parse_experiment(text: &str) -> Result<ExperimentFile, ScenarioError> {
    let mut sc = Scenario { users: Vec::new(), ..Scenario::default() };
    let mut settings = Settings::default();
    let mut method = None;
    let mut users: Vec<PartialUser> = Vec::new();
    let mut seen_top: Vec<String> = Vec::new();
    let mut seen_user: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ScenarioError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[user]" {
                return Err(err(format!("unknown section {content}")));
            }
            users.push(PartialUser { line, ..Default::default() });
            seen_user.clear();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        if value.is_empty() {
            return Err(err(format!("missing value for `{key}`")));
        }

        if let Some(u) = users.last_mut() {
            if seen_user.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key `{key}` in [user] block")));
            }
            seen_user.push(key.to_string());
            match key {
                "position" => u.position = Some(parse_point(value).map_err(err)?),
                "space" => {
                    u.space = Some(Space::parse(value).ok_or_else(|| {
                        err(format!("space must be reflection or transmission, got `{value}`"))
                    })?)
                }
                "order" => u.order = Some(parse_int(value).map_err(err)?),
                _ => return Err(err(format!("unknown user key `{key}`"))),
            }
            continue;
        }

        if seen_top.iter().any(|k| k == key) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        seen_top.push(key.to_string());
        match key {
            "uav_altitude" => sc.uav_altitude = parse_num(value).map_err(err)?,
            "surface_height" => sc.surface_height = parse_num(value).map_err(err)?,
            "surface_position" => sc.surface_position = parse_point(value).map_err(err)?,
            "elements" => sc.elements = parse_int(value).map_err(err)?,
            "slots" => sc.slots = parse_int(value).map_err(err)?,
            "max_step" => sc.max_step = parse_num(value).map_err(err)?,
            "start" => sc.start = parse_point(value).map_err(err)?,
            "end" => sc.end = parse_point(value).map_err(err)?,
            "max_power" => sc.max_power = parse_power(value).map_err(err)?,
            "noise_power" => sc.noise_power = parse_power(value).map_err(err)?,
            "ref_gain" => sc.ref_gain = parse_gain(value).map_err(err)?,
            "exp_direct" => sc.exp_direct = parse_num(value).map_err(err)?,
            "exp_uav_surface" => sc.exp_uav_surface = parse_num(value).map_err(err)?,
            "exp_surface_user" => sc.exp_surface_user = parse_num(value).map_err(err)?,
            "element_spacing" => sc.element_spacing = parse_num(value).map_err(err)?,
            "seed" => sc.seed = value.parse().map_err(|_| err(format!("bad seed `{value}`")))?,
            "method" => {
                method = Some(
                    Method::parse(value)
                        .ok_or_else(|| err(format!("unknown method `{value}`")))?,
                )
            }
            _ => {
                if !settings.apply(key, value).map_err(err)? {
                    return Err(err(format!("unknown key `{key}`")));
                }
            }
        }
    }

    if !users.is_empty() {
        sc.users = users
            .into_iter()
            .map(|u| {
                let missing = |what: &str| ScenarioError::Parse {
                    line: u.line,
                    message: format!("[user] block without `{what}`"),
                };
                Ok(UserSpec {
                    position: u.position.ok_or_else(|| missing("position"))?,
                    space: u.space.ok_or_else(|| missing("space"))?,
                    order: u.order.ok_or_else(|| missing("order"))?,
                })
            })
            .collect::<Result<_, ScenarioError>>()?;
    } else {
        sc.users = default_users();
    }
    settings.validate().map_err(ScenarioError::Invalid)?;
    Ok(ExperimentFile { scenario: sc.validated()?, settings, method })
}

fn parse_num(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("non-finite number `{v}`"))
    }
}

fn parse_int(v: &str) -> Result<usize, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn parse_point(v: &str) -> Result<Point, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{v}`"));
    }
    Ok(Point::new(parse_num(parts[0])?, parse_num(parts[1])?))
}

fn split_unit(v: &str) -> (&str, &str) {
    let cut = v
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic())
        .last()
        .map(|(i, _)| i)
        .unwrap_or(v.len());
    (v[..cut].trim(), &v[cut..])
}

/// `1 W`, `1000 mW` or `30 dBm`; a bare number is rejected.
fn parse_power(v: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(v);
    let x = parse_num(num)?;
    let watts = match unit {
        "W" => x,
        "mW" => x * 1e-3,
        "dBm" => 10f64.powf((x - 30.0) / 10.0),
        "" => return Err(format!("power `{v}` needs a unit (W, mW or dBm)")),
        _ => return Err(format!("unknown power unit `{unit}` (use W, mW or dBm)")),
    };
    Ok(watts)
}

/// Linear, or in dB with a `dB` suffix.
fn parse_gain(v: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(v);
    let x = parse_num(num)?;
    match unit {
        "" => Ok(x),
        "dB" => Ok(10f64.powf(x / 10.0)),
        _ => Err(format!("unknown gain unit `{unit}` (use dB or a linear value)")),
    }
}

/// Canonical file text for a resolved experiment. Numbers use the shortest
/// representation that parses back to the same value, so re-reading the text
/// reproduces the experiment exactly.
pub fn render_experiment(sc: &Scenario, settings: &Settings, method: Option<Method>) -> String {
    let mut s = String::new();
    let pt = |p: &Point| format!("{}, {}", p.x, p.y);
    let _ = writeln!(s, "uav_altitude = {}", sc.uav_altitude);
    let _ = writeln!(s, "surface_height = {}", sc.surface_height);
    let _ = writeln!(s, "surface_position = {}", pt(&sc.surface_position));
    let _ = writeln!(s, "elements = {}", sc.elements);
    let _ = writeln!(s, "slots = {}", sc.slots);
    let _ = writeln!(s, "max_step = {}", sc.max_step);
    let _ = writeln!(s, "start = {}", pt(&sc.start));
    let _ = writeln!(s, "end = {}", pt(&sc.end));
    let _ = writeln!(s, "max_power = {} W", sc.max_power);
    let _ = writeln!(s, "noise_power = {} W", sc.noise_power);
    let _ = writeln!(s, "ref_gain = {}", sc.ref_gain);
    let _ = writeln!(s, "exp_direct = {}", sc.exp_direct);
    let _ = writeln!(s, "exp_uav_surface = {}", sc.exp_uav_surface);
    let _ = writeln!(s, "exp_surface_user = {}", sc.exp_surface_user);
    let _ = writeln!(s, "element_spacing = {}", sc.element_spacing);
    let _ = writeln!(s, "seed = {}", sc.seed);
    if let Some(m) = method {
        let _ = writeln!(s, "method = {}", m.name());
    }
    for (k, v) in settings.entries() {
        let _ = writeln!(s, "{k} = {v}");
    }
    for u in &sc.users {
        let _ = writeln!(s, "\n[user]");
        let _ = writeln!(s, "position = {}", pt(&u.position));
        let _ = writeln!(s, "space = {}", u.space.name());
        let _ = writeln!(s, "order = {}", u.order);
    }
    s
}
