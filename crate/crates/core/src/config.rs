//! Line-oriented `key = value` configuration with `[section]` headers and
//! dotted keys, plus the checked-in experiment presets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::beam::{clamped_dofs, BeamLoads, BeamMaterial, BeamMesh, RigidMotion};
use crate::driver::{AitkenParams, BeamModel, CouplingAlgorithm, CouplingVariant, Setup};
use crate::error::{FbiError, Result};
use crate::fluid::{BoundaryConditions, FluidParams};
use crate::mesh::{build_box_mesh, read_mesh, BoxFace, FluidMesh, PatchSpec};
use crate::time_function::TimeFunction;
use crate::Vec3;

/// Embedded preset files by name.
pub const PRESETS: [(&str, &str); 2] = [
    ("obstacle_channel", include_str!("../presets/obstacle_channel.cfg")),
    ("light_fiber", include_str!("../presets/light_fiber.cfg")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Keys accepted outside `bc.*`.
const KEYS: &[&str] = &[
    "preset",
    "mesh.dims",
    "mesh.cells",
    "mesh.patches",
    "mesh.file",
    "fluid.density",
    "fluid.viscosity",
    "fluid.theta",
    "fluid.body_force",
    "fluid.c_inv",
    "fluid.grad_div_scale",
    "fluid.stabilization",
    "fluid.newton_tol",
    "fluid.newton_max",
    "beam.mode",
    "beam.start",
    "beam.end",
    "beam.elements",
    "beam.density",
    "beam.area",
    "beam.ea",
    "beam.ei",
    "beam.rho_inf",
    "beam.fixed_nodes",
    "beam.initial_velocity",
    "beam.distributed_force",
    "beam.motion.center",
    "beam.motion.angular_velocity",
    "beam.motion.velocity",
    "beam.motion.function",
    "coupling.algorithm",
    "coupling.epsilon",
    "coupling.tol_partition",
    "coupling.max_outer",
    "coupling.gauss_points",
    "coupling.search_radius",
    "coupling.omega_init",
    "coupling.omega_min",
    "coupling.omega_max",
    "time.dt",
    "time.t_end",
    "output.dir",
    "output.csv",
    "output.vtk_every_n",
    "output.segments",
    "output.profile_start",
    "output.profile_end",
    "output.profile_points",
];

const BC_KEYS: &[&str] = &["patch", "type", "components", "value", "traction", "function"];

/// Raw entries in file order: key to `(value, origin)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
    order: Vec<String>,
}

impl RawConfig {
    /// Parses the text. A `preset = name` line supplies every key not set
    /// elsewhere in the file from the embedded preset.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        let mut section = String::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", lineno + 1);
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() => section = name.trim().to_string(),
                    _ => errors.push(format!("{at}: malformed section header '{line}'")),
                }
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(format!("{at}: expected 'key = value', got '{line}'"));
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                errors.push(format!("{at}: empty key"));
                continue;
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            if key == "preset" {
                match preset_text(v) {
                    Some(t) => match RawConfig::parse(t, &format!("preset {v}")) {
                        Ok(base) => {
                            for k in &base.order {
                                if !raw.entries.contains_key(k) {
                                    let (val, org) = &base.entries[k];
                                    raw.insert(k, val, org);
                                }
                            }
                        }
                        Err(e) => errors.push(e.to_string()),
                    },
                    None => errors.push(format!("{at}: unknown preset '{v}'")),
                }
            }
            if raw.entries.contains_key(&key) && raw.entries[&key].1.starts_with(origin) {
                errors.push(format!("{at}: duplicate key '{key}'"));
                continue;
            }
            raw.insert(&key, v, &at);
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(FbiError::Validation(errors))
        }
    }

    /// Reads a file, or an embedded preset when `source` names one and no such file exists.
    pub fn load(source: &str) -> Result<Self> {
        let path = Path::new(source);
        if !path.exists() {
            if let Some(text) = preset_text(source) {
                return RawConfig::parse(text, &format!("preset {source}"));
            }
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| FbiError::Config(format!("cannot read config '{source}': {e}")))?;
        RawConfig::parse(&text, source)
    }

    fn insert(&mut self, key: &str, value: &str, origin: &str) {
        if !self.entries.contains_key(key) {
            self.order.push(key.to_string());
        }
        self.entries
            .insert(key.to_string(), (value.to_string(), origin.to_string()));
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        let mut errors = Vec::new();
        for o in overrides {
            let o = o.as_ref();
            match o.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => self.insert(k.trim(), v.trim(), "override"),
                _ => errors.push(format!("override '{o}' is not of the form key=value")),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(FbiError::Validation(errors))
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Fully resolved `key = value` listing in insertion order. The `preset`
    /// entry is left out since its entries are already expanded.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in self.order.iter().filter(|k| *k != "preset") {
            let _ = writeln!(out, "{k} = {}", self.entries[k].0);
        }
        out
    }

    fn unknown_keys(&self) -> Vec<String> {
        let mut errors = Vec::new();
        for k in &self.order {
            let origin = &self.entries[k].1;
            if let Some(rest) = k.strip_prefix("bc.") {
                match rest.rsplit_once('.') {
                    Some((name, field)) if !name.is_empty() && BC_KEYS.contains(&field) => {}
                    _ => errors.push(format!("{origin}: unknown key '{k}'")),
                }
            } else if !KEYS.contains(&k.as_str()) {
                errors.push(format!("{origin}: unknown key '{k}'"));
            }
        }
        errors
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Box {
        dims: [f64; 3],
        cells: [usize; 3],
        patches: PatchSpec,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Step report file name inside `dir`; `None` disables it.
    pub csv: Option<String>,
    /// VTK output every n steps; 0 disables it.
    pub vtk_every_n: usize,
    pub segments: bool,
    /// Straight sampling line `(start, end, points)` for the final velocity profile.
    pub profile: Option<(Vec3, Vec3, usize)>,
}

/// Validated simulation parameters.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub preset: Option<String>,
    pub mesh: MeshSource,
    pub fluid: FluidParams,
    pub bcs: BoundaryConditions,
    pub beam_start: Vec3,
    pub beam_end: Vec3,
    pub beam_elements: usize,
    pub beam: BeamModel,
    pub algorithm: CouplingAlgorithm,
    pub dt: f64,
    pub t_end: f64,
    pub output: OutputConfig,
    pub raw: RawConfig,
}

/// Typed lookups that collect every error instead of stopping at the first.
struct Reader<'a> {
    raw: &'a RawConfig,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn text(&mut self, key: &str) -> Option<&str> {
        self.raw.get(key)
    }

    fn fail(&mut self, key: &str, msg: String) {
        let origin = self.raw.entries.get(key).map_or("", |(_, o)| o.as_str());
        if origin.is_empty() {
            self.errors.push(format!("{key}: {msg}"));
        } else {
            self.errors.push(format!("{origin}: {key}: {msg}"));
        }
    }

    fn parse<T>(
        &mut self,
        key: &str,
        default: Option<T>,
        f: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Option<T> {
        match self.raw.get(key) {
            Some(v) => match f(v) {
                Ok(x) => Some(x),
                Err(msg) => {
                    self.fail(key, msg);
                    None
                }
            },
            None if default.is_some() => default,
            None => {
                self.errors.push(format!("missing required key '{key}'"));
                None
            }
        }
    }

    fn f64(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        self.parse(key, default, parse_f64)
    }

    fn positive(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        let v = self.f64(key, default)?;
        if v > 0.0 {
            Some(v)
        } else {
            self.fail(key, format!("must be positive, got {v}"));
            None
        }
    }

    fn usize(&mut self, key: &str, default: Option<usize>) -> Option<usize> {
        self.parse(key, default, |s| {
            s.parse::<usize>()
                .map_err(|_| format!("expected a non-negative integer, got '{s}'"))
        })
    }

    fn bool(&mut self, key: &str, default: Option<bool>) -> Option<bool> {
        self.parse(key, default, |s| match s {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("expected true or false, got '{s}'")),
        })
    }

    fn vec3(&mut self, key: &str, default: Option<Vec3>) -> Option<Vec3> {
        self.parse(key, default, |s| {
            let v = numbers(s)?;
            if v.len() == 3 {
                Ok(Vec3::new(v[0], v[1], v[2]))
            } else {
                Err(format!("expected three numbers, got '{s}'"))
            }
        })
    }

    fn function(&mut self, key: &str) -> Option<TimeFunction> {
        self.parse(key, Some(TimeFunction::Constant(1.0)), |s| {
            TimeFunction::parse(s).map_err(|e| e.to_string())
        })
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got '{s}'")),
    }
}

fn numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(parse_f64)
        .collect()
}

fn parse_components(s: &str) -> std::result::Result<[bool; 3], String> {
    let mut c = [false; 3];
    for t in s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
    {
        match t {
            "x" => c[0] = true,
            "y" => c[1] = true,
            "z" => c[2] = true,
            "all" => c = [true; 3],
            _ => return Err(format!("unknown component '{t}' (expected x, y, z or all)")),
        }
    }
    if c == [false; 3] {
        return Err("no components given".into());
    }
    Ok(c)
}

/// `name:face,face name:face ...`
fn parse_patches(s: &str) -> std::result::Result<PatchSpec, String> {
    let mut spec = PatchSpec::new();
    for item in s.split_whitespace() {
        let (name, faces) = item
            .split_once(':')
            .ok_or_else(|| format!("patch entry '{item}' is not of the form name:face[,face]"))?;
        let faces = faces
            .split(',')
            .map(|f| f.parse::<BoxFace>().map_err(|e| e.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        spec = spec.with(name, &faces);
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

impl SimulationConfig {
    /// Validates `raw`, reporting all problems at once.
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let mut r = Reader {
            raw: &raw,
            errors: raw.unknown_keys(),
        };

        let mesh = match r.text("mesh.file").map(str::to_string) {
            Some(f) => {
                for k in ["mesh.dims", "mesh.cells", "mesh.patches"] {
                    if raw.get(k).is_some() {
                        r.fail(k, "cannot be combined with mesh.file".into());
                    }
                }
                Some(MeshSource::File(PathBuf::from(f)))
            }
            None => {
                let dims = r.parse("mesh.dims", None, |s| match numbers(s).as_deref() {
                    Ok(&[a, b, c]) if a > 0.0 && b > 0.0 && c > 0.0 => Ok([a, b, c]),
                    _ => Err(format!("expected three positive lengths, got '{s}'")),
                });
                let cells = r.parse("mesh.cells", None, |s| {
                    let v: std::result::Result<Vec<usize>, _> = s.split_whitespace().map(str::parse::<usize>).collect();
                    match v.as_deref() {
                        Ok([a, b, c]) if *a > 0 && *b > 0 && *c > 0 => Ok([*a, *b, *c]),
                        _ => Err(format!("expected three positive integers, got '{s}'")),
                    }
                });
                let patches = r.parse("mesh.patches", Some(PatchSpec::per_face()), parse_patches);
                match (dims, cells, patches) {
                    (Some(dims), Some(cells), Some(patches)) => Some(MeshSource::Box { dims, cells, patches }),
                    _ => None,
                }
            }
        };

        let defaults = FluidParams::new(1.0, 1.0);
        let fluid = (|| {
            let mut p = FluidParams::new(r.positive("fluid.density", None)?, r.positive("fluid.viscosity", None)?);
            p.theta = r.f64("fluid.theta", Some(defaults.theta))?;
            p.body_force = r.vec3("fluid.body_force", Some(Vec3::zeros()))?;
            p.c_inv = r.positive("fluid.c_inv", Some(defaults.c_inv))?;
            p.grad_div_scale = r.f64("fluid.grad_div_scale", Some(defaults.grad_div_scale))?;
            p.stabilization = r.bool("fluid.stabilization", Some(true))?;
            p.newton_tol = r.positive("fluid.newton_tol", Some(defaults.newton_tol))?;
            p.newton_max = r.usize("fluid.newton_max", Some(defaults.newton_max))?;
            Some(p)
        })();
        if let Some(Err(e)) = fluid.as_ref().map(|p| p.validate()) {
            match e {
                FbiError::Validation(v) => r.errors.extend(v),
                e => r.errors.push(e.to_string()),
            }
        }

        let bcs = read_bcs(&mut r, &raw);

        let beam_start = r.vec3("beam.start", None);
        let beam_end = r.vec3("beam.end", None);
        let beam_elements = r.usize("beam.elements", Some(1));
        if beam_elements == Some(0) {
            r.fail("beam.elements", "must be at least 1".into());
        }
        let mode = r.parse("beam.mode", Some("rigid".to_string()), |s| match s {
            "rigid" | "elastic" => Ok(s.to_string()),
            _ => Err(format!("expected rigid or elastic, got '{s}'")),
        });
        let rigid_only = [
            "beam.motion.center",
            "beam.motion.angular_velocity",
            "beam.motion.velocity",
            "beam.motion.function",
        ];
        let elastic_only = [
            "beam.density",
            "beam.area",
            "beam.ea",
            "beam.ei",
            "beam.rho_inf",
            "beam.fixed_nodes",
            "beam.initial_velocity",
            "beam.distributed_force",
        ];
        let beam = match mode.as_deref() {
            Some("rigid") => {
                for k in elastic_only {
                    if raw.get(k).is_some() {
                        r.fail(k, "only valid with beam.mode = elastic".into());
                    }
                }
                (|| {
                    Some(BeamModel::Rigid(RigidMotion {
                        center: r.vec3("beam.motion.center", Some(Vec3::zeros()))?,
                        angular_velocity: r.vec3("beam.motion.angular_velocity", Some(Vec3::zeros()))?,
                        velocity: r.vec3("beam.motion.velocity", Some(Vec3::zeros()))?,
                        time_function: r.function("beam.motion.function")?,
                    }))
                })()
            }
            Some("elastic") => {
                for k in rigid_only {
                    if raw.get(k).is_some() {
                        r.fail(k, "only valid with beam.mode = rigid".into());
                    }
                }
                let n_nodes = beam_elements.unwrap_or(1) + 1;
                let material = (|| {
                    Some(BeamMaterial {
                        density: r.positive("beam.density", None)?,
                        area: r.positive("beam.area", None)?,
                        ea: r.positive("beam.ea", None)?,
                        ei: r.positive("beam.ei", None)?,
                    })
                })();
                let rho_inf = r.f64("beam.rho_inf", Some(1.0));
                if let Some(v) = rho_inf.filter(|v| !(0.0..=1.0).contains(v)) {
                    r.fail("beam.rho_inf", format!("must lie in [0, 1], got {v}"));
                }
                let fixed = r.parse("beam.fixed_nodes", Some(Vec::new()), |s| {
                    s.split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|t| !t.is_empty())
                        .map(|t| match t.parse::<usize>() {
                            Ok(n) if n < n_nodes => Ok(n),
                            _ => Err(format!("'{t}' is not a beam node id below {n_nodes}")),
                        })
                        .collect()
                });
                let v0 = r.vec3("beam.initial_velocity", Some(Vec3::zeros()));
                let force = r.vec3("beam.distributed_force", Some(Vec3::zeros()));
                match (material, rho_inf, fixed, v0, force) {
                    (Some(material), Some(rho_inf), Some(fixed), Some(v0), Some(force)) => Some(BeamModel::Elastic {
                        material,
                        fixed_dofs: clamped_dofs(&fixed),
                        loads: BeamLoads {
                            distributed_force: force,
                            ..BeamLoads::none()
                        },
                        rho_inf,
                        initial_velocity: v0,
                    }),
                    _ => None,
                }
            }
            _ => None,
        };

        let algorithm = (|| {
            let variant = r.parse("coupling.algorithm", None, |s| {
                s.parse::<CouplingVariant>().map_err(|e| e.to_string())
            })?;
            let mut a = CouplingAlgorithm::new(variant, r.f64("coupling.epsilon", None)?);
            let d = AitkenParams::default();
            a.aitken = AitkenParams {
                omega_init: r.f64("coupling.omega_init", Some(d.omega_init))?,
                omega_min: r.f64("coupling.omega_min", Some(d.omega_min))?,
                omega_max: r.f64("coupling.omega_max", Some(d.omega_max))?,
            };
            a.tol_partition = r.f64("coupling.tol_partition", Some(a.tol_partition))?;
            a.max_outer = r.usize("coupling.max_outer", Some(a.max_outer))?;
            a.gauss_points = r.usize("coupling.gauss_points", Some(a.gauss_points))?;
            a.search_radius = match raw.get("coupling.search_radius") {
                Some(_) => Some(r.positive("coupling.search_radius", None)?),
                None => None,
            };
            Some(a)
        })();
        if let Some(Err(e)) = algorithm.as_ref().map(|a| a.validate()) {
            match e {
                FbiError::Validation(v) => r.errors.extend(v),
                e => r.errors.push(e.to_string()),
            }
        }
        if let (Some(a), Some(BeamModel::Rigid(_))) = (&algorithm, &beam) {
            if a.variant == CouplingVariant::FluidToBeam {
                r.fail("coupling.algorithm", "fluid_to_beam needs beam.mode = elastic".into());
            }
        }

        let dt = r.positive("time.dt", None);
        let t_end = r.positive("time.t_end", None);
        if let (Some(dt), Some(t_end)) = (dt, t_end) {
            if t_end < dt {
                r.fail("time.t_end", format!("must be at least time.dt = {dt}, got {t_end}"));
            }
        }

        let output = (|| {
            let dir = PathBuf::from(r.parse("output.dir", Some("out".to_string()), |s| Ok(s.to_string()))?);
            let csv = r.parse("output.csv", Some("steps.csv".to_string()), |s| Ok(s.to_string()))?;
            let profile = match (raw.get("output.profile_start"), raw.get("output.profile_end")) {
                (None, None) => None,
                _ => Some((
                    r.vec3("output.profile_start", None)?,
                    r.vec3("output.profile_end", None)?,
                    r.usize("output.profile_points", Some(101))?,
                )),
            };
            Some(OutputConfig {
                dir,
                csv: (!csv.is_empty() && csv != "none").then_some(csv),
                vtk_every_n: r.usize("output.vtk_every_n", Some(0))?,
                segments: r.bool("output.segments", Some(false))?,
                profile,
            })
        })();
        if let Some((_, _, n)) = output.as_ref().and_then(|o| o.profile) {
            if n < 2 {
                r.fail("output.profile_points", format!("must be at least 2, got {n}"));
            }
        }

        if let (Some(MeshSource::Box { patches, .. }), Some(bcs)) = (&mesh, &bcs) {
            for rec in &bcs.records {
                if !patches.names().any(|n| n == rec.patch) {
                    r.errors
                        .push(format!("boundary condition refers to unknown patch '{}'", rec.patch));
                }
            }
        }

        let errors = std::mem::take(&mut r.errors);
        if !errors.is_empty() {
            return Err(FbiError::Validation(errors));
        }
        let preset = raw.get("preset").map(str::to_string);
        Ok(SimulationConfig {
            preset,
            mesh: mesh.expect("validated"),
            fluid: fluid.expect("validated"),
            bcs: bcs.expect("validated"),
            beam_start: beam_start.expect("validated"),
            beam_end: beam_end.expect("validated"),
            beam_elements: beam_elements.expect("validated"),
            beam: beam.expect("validated"),
            algorithm: algorithm.expect("validated"),
            dt: dt.expect("validated"),
            t_end: t_end.expect("validated"),
            output: output.expect("validated"),
            raw,
        })
    }

    pub fn build_mesh(&self) -> Result<FluidMesh> {
        match &self.mesh {
            MeshSource::Box { dims, cells, patches } => build_box_mesh(*dims, *cells, patches),
            MeshSource::File(path) => {
                let f = std::fs::File::open(path)
                    .map_err(|e| FbiError::Config(format!("cannot open mesh file {}: {e}", path.display())))?;
                read_mesh(std::io::BufReader::new(f))
            }
        }
    }

    /// Builds the mesh and assembles the driver input.
    pub fn setup(&self) -> Result<Setup> {
        let mesh = self.build_mesh()?;
        self.bcs.validate(&mesh)?;
        Ok(Setup {
            fluid_mesh: Arc::new(mesh),
            fluid_params: self.fluid.clone(),
            bcs: self.bcs.clone(),
            beam_mesh: BeamMesh::straight(self.beam_start, self.beam_end, self.beam_elements)?,
            beam: self.beam.clone(),
            algorithm: self.algorithm.clone(),
            dt: self.dt,
            t_end: self.t_end,
        })
    }
}

fn read_bcs(r: &mut Reader<'_>, raw: &RawConfig) -> Option<BoundaryConditions> {
    let mut names: Vec<&str> = Vec::new();
    for k in &raw.order {
        if let Some((name, _)) = k.strip_prefix("bc.").and_then(|rest| rest.rsplit_once('.')) {
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    let mut bcs = BoundaryConditions::new();
    let mut ok = true;
    for name in names {
        let key = |f: &str| format!("bc.{name}.{f}");
        let patch = raw.get(&key("patch")).unwrap_or(name).to_string();
        let function = r.function(&key("function"));
        let kind = r.parse(&key("type"), None, |s| match s {
            "dirichlet" | "neumann" => Ok(s.to_string()),
            _ => Err(format!("expected dirichlet or neumann, got '{s}'")),
        });
        match kind.as_deref() {
            Some("dirichlet") => {
                if raw.get(&key("traction")).is_some() {
                    r.fail(&key("traction"), "only valid for neumann conditions".into());
                }
                let comps = r.parse(&key("components"), Some([true; 3]), parse_components);
                let value = r.vec3(&key("value"), Some(Vec3::zeros()));
                match (comps, value, function) {
                    (Some(c), Some(v), Some(f)) => bcs = bcs.dirichlet(&patch, c, v, f),
                    _ => ok = false,
                }
            }
            Some("neumann") => {
                for f in ["components", "value"] {
                    if raw.get(&key(f)).is_some() {
                        r.fail(&key(f), "only valid for dirichlet conditions".into());
                    }
                }
                match (r.vec3(&key("traction"), Some(Vec3::zeros())), function) {
                    (Some(t), Some(f)) => bcs = bcs.neumann(&patch, t, f),
                    _ => ok = false,
                }
            }
            _ => ok = false,
        }
    }
    ok.then_some(bcs)
}

/// Reads, overrides and validates a configuration file or preset name.
pub fn parse_config<S: AsRef<str>>(source: &str, overrides: &[S]) -> Result<SimulationConfig> {
    let mut raw = RawConfig::load(source)?;
    raw.apply_overrides(overrides)?;
    SimulationConfig::from_raw(raw)
}
