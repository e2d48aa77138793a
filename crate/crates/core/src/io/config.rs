//! Run configuration: a flat `section.key = value` text format.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! config     := line*
//! line       := ws* (statement)? ws* comment?
//! statement  := key ws* "=" ws* value
//! key        := section "." ident          # e.g. material.alpha
//! comment    := "#" any*
//! ```
//!
//! Unknown keys are rejected; parsing reports every problem at once with
//! its line number instead of stopping at the first. All values are
//! validated before a [`RunConfig`] is produced.
//!
//! Recognized keys, with defaults in parentheses (`*` = required):
//!
//! ```text
//! geometry.l1*  geometry.l2*  geometry.l3*        block extent
//! mesh.nx*      mesh.ny*      mesh.nz*            element divisions
//! material.model*    stvk | stvk_normalized | double_well
//! material.lambda    material.mu                  stvk only, required there
//! material.alpha     material.eps_well            double_well only, required there
//! material.h_chi (0) material.k_grad (0)          regularization; h_chi > 0
//!                                                 selects the mixed formulation
//! material.k_vol (0)                              volumetric modulus
//! bc.kind*           biaxial_affine | fixed_top_bottom | fixed_all
//! load.total (0)     load.steps (1)
//! solver.newton_tol (1e-10)   solver.newton_abs_tol (1e-9)
//! solver.max_iters (60)       solver.perturbation_amplitude (0)
//! solver.step_halving_max (8) solver.seed (0)
//! output.dir (out)   output.prefix (run)
//! output.fields (F11,F12,detF,Ceq)
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::material::{MaterialParams, Model};
use crate::mesh::Formulation;
use crate::solver::{BcKind, SolverConfig};

/// One configuration problem, with a 1-based line number when the problem
/// is tied to a line.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigIssue {
    MissingRequired { key: &'static str },
    UnknownKey { key: String, line: usize },
    TypeMismatch { key: String, line: usize, expected: &'static str, got: String },
    Invalid { key: String, line: usize, message: String },
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigIssue::MissingRequired { key } => write!(f, "missing required key `{key}`"),
            ConfigIssue::UnknownKey { key, line } => {
                write!(f, "line {line}: unknown key `{key}`")
            }
            ConfigIssue::TypeMismatch { key, line, expected, got } => {
                write!(f, "line {line}: key `{key}` expects {expected}, got `{got}`")
            }
            ConfigIssue::Invalid { key, line, message } => {
                if *line == 0 {
                    write!(f, "key `{key}`: {message}")
                } else {
                    write!(f, "line {line}: key `{key}`: {message}")
                }
            }
        }
    }
}

/// Per-cell scalar fields available for export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CellField {
    F11,
    F12,
    DetF,
    Ceq,
    SmNorm,
}

impl CellField {
    pub const DEFAULT: [CellField; 4] =
        [CellField::F11, CellField::F12, CellField::DetF, CellField::Ceq];

    /// Name used in VTK CELL_DATA and in `output.fields`.
    pub fn name(self) -> &'static str {
        match self {
            CellField::F11 => "F11",
            CellField::F12 => "F12",
            CellField::DetF => "detF",
            CellField::Ceq => "Ceq",
            CellField::SmNorm => "Smnorm",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "F11" => Some(CellField::F11),
            "F12" => Some(CellField::F12),
            "detF" => Some(CellField::DetF),
            "Ceq" => Some(CellField::Ceq),
            "Smnorm" => Some(CellField::SmNorm),
            _ => None,
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: [f64; 3],
    pub mesh_divisions: [usize; 3],
    pub material: MaterialParams,
    pub bc: BcKind,
    pub load_total: f64,
    pub load_steps: usize,
    pub solver: SolverConfig,
    pub output_dir: String,
    pub output_prefix: String,
    pub output_fields: Vec<CellField>,
}

impl RunConfig {
    /// Mixed when the penalty modulus is positive, displacement-only
    /// otherwise.
    pub fn formulation(&self) -> Formulation {
        if self.material.h_chi > 0.0 {
            Formulation::Mixed
        } else {
            Formulation::Local
        }
    }
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::StVenantKirchhoff => "stvk",
        Model::StVenantKirchhoffNormalized => "stvk_normalized",
        Model::DoubleWell => "double_well",
    }
}

fn bc_name(b: BcKind) -> &'static str {
    match b {
        BcKind::BiaxialAffine => "biaxial_affine",
        BcKind::FixedTopBottom => "fixed_top_bottom",
        BcKind::FixedAll => "fixed_all",
    }
}

const KNOWN_KEYS: &[&str] = &[
    "geometry.l1",
    "geometry.l2",
    "geometry.l3",
    "mesh.nx",
    "mesh.ny",
    "mesh.nz",
    "material.model",
    "material.lambda",
    "material.mu",
    "material.alpha",
    "material.eps_well",
    "material.h_chi",
    "material.k_grad",
    "material.k_vol",
    "bc.kind",
    "load.total",
    "load.steps",
    "solver.newton_tol",
    "solver.newton_abs_tol",
    "solver.max_iters",
    "solver.perturbation_amplitude",
    "solver.step_halving_max",
    "solver.seed",
    "output.dir",
    "output.prefix",
    "output.fields",
];

struct Raw<'a> {
    entries: BTreeMap<&'a str, (usize, &'a str)>,
    issues: Vec<ConfigIssue>,
}

impl Raw<'_> {
    fn f64_key(&mut self, key: &'static str) -> Option<f64> {
        let &(line, raw) = self.entries.get(key)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.issues.push(ConfigIssue::TypeMismatch {
                    key: key.to_string(),
                    line,
                    expected: "a finite number",
                    got: raw.to_string(),
                });
                None
            }
        }
    }

    fn usize_key(&mut self, key: &'static str) -> Option<usize> {
        let &(line, raw) = self.entries.get(key)?;
        match raw.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.issues.push(ConfigIssue::TypeMismatch {
                    key: key.to_string(),
                    line,
                    expected: "a non-negative integer",
                    got: raw.to_string(),
                });
                None
            }
        }
    }

    fn u64_key(&mut self, key: &'static str) -> Option<u64> {
        let &(line, raw) = self.entries.get(key)?;
        match raw.parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.issues.push(ConfigIssue::TypeMismatch {
                    key: key.to_string(),
                    line,
                    expected: "a non-negative integer",
                    got: raw.to_string(),
                });
                None
            }
        }
    }

    fn require_f64(&mut self, key: &'static str) -> Option<f64> {
        if !self.entries.contains_key(key) {
            self.issues.push(ConfigIssue::MissingRequired { key });
            return None;
        }
        self.f64_key(key)
    }

    fn require_usize(&mut self, key: &'static str) -> Option<usize> {
        if !self.entries.contains_key(key) {
            self.issues.push(ConfigIssue::MissingRequired { key });
            return None;
        }
        self.usize_key(key)
    }

    fn invalid(&mut self, key: &str, message: String) {
        let line = self.entries.get(key).map(|&(l, _)| l).unwrap_or(0);
        self.issues.push(ConfigIssue::Invalid {
            key: key.to_string(),
            line,
            message,
        });
    }
}

/// Parses and validates configuration text; returns either a complete
/// [`RunConfig`] or every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigIssue>> {
    let mut raw = Raw {
        entries: BTreeMap::new(),
        issues: Vec::new(),
    };

    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = full_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            raw.issues.push(ConfigIssue::TypeMismatch {
                key: line.to_string(),
                line: line_no,
                expected: "`key = value`",
                got: full_line.trim().to_string(),
            });
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match KNOWN_KEYS.iter().find(|&&k| k == key) {
            Some(&canonical) => {
                raw.entries.insert(canonical, (line_no, value));
            }
            None => raw.issues.push(ConfigIssue::UnknownKey {
                key: key.to_string(),
                line: line_no,
            }),
        }
    }

    // geometry and mesh
    let l1 = raw.require_f64("geometry.l1");
    let l2 = raw.require_f64("geometry.l2");
    let l3 = raw.require_f64("geometry.l3");
    for (key, v) in [("geometry.l1", l1), ("geometry.l2", l2), ("geometry.l3", l3)] {
        if let Some(v) = v {
            if v <= 0.0 {
                raw.invalid(key, format!("must be positive, got {v}"));
            }
        }
    }
    let nx = raw.require_usize("mesh.nx");
    let ny = raw.require_usize("mesh.ny");
    let nz = raw.require_usize("mesh.nz");
    for (key, v) in [("mesh.nx", nx), ("mesh.ny", ny), ("mesh.nz", nz)] {
        if v == Some(0) {
            raw.invalid(key, "must be at least 1".to_string());
        }
    }

    // material
    let model = match raw.entries.get("material.model") {
        None => {
            raw.issues.push(ConfigIssue::MissingRequired {
                key: "material.model",
            });
            None
        }
        Some(&(line, s)) => match s {
            "stvk" => Some(Model::StVenantKirchhoff),
            "stvk_normalized" => Some(Model::StVenantKirchhoffNormalized),
            "double_well" => Some(Model::DoubleWell),
            other => {
                raw.issues.push(ConfigIssue::TypeMismatch {
                    key: "material.model".to_string(),
                    line,
                    expected: "stvk | stvk_normalized | double_well",
                    got: other.to_string(),
                });
                None
            }
        },
    };
    let material = model.map(|model| {
        let mut m = match model {
            Model::StVenantKirchhoff => {
                let lambda = raw.require_f64("material.lambda").unwrap_or(0.0);
                let mu = raw.require_f64("material.mu").unwrap_or(0.0);
                MaterialParams::st_venant_kirchhoff(lambda, mu)
            }
            Model::StVenantKirchhoffNormalized => MaterialParams::st_venant_kirchhoff_normalized(),
            Model::DoubleWell => {
                let alpha = raw.require_f64("material.alpha").unwrap_or(0.0);
                let eps = raw.require_f64("material.eps_well").unwrap_or(0.0);
                MaterialParams::double_well(alpha, eps)
            }
        };
        m.h_chi = raw.f64_key("material.h_chi").unwrap_or(0.0);
        m.k_grad = raw.f64_key("material.k_grad").unwrap_or(0.0);
        m.k_vol = raw.f64_key("material.k_vol").unwrap_or(0.0);
        m
    });
    if raw.issues.is_empty() {
        if let Some(m) = &material {
            let mixed = m.h_chi > 0.0;
            if m.k_grad > 0.0 && !mixed {
                raw.invalid(
                    "material.k_grad",
                    "gradient modulus requires material.h_chi > 0".to_string(),
                );
            } else if let Err(e) = m.validate(mixed) {
                raw.invalid("material.model", e.to_string());
            }
        }
    }

    // boundary conditions and load
    let bc = match raw.entries.get("bc.kind") {
        None => {
            raw.issues.push(ConfigIssue::MissingRequired { key: "bc.kind" });
            None
        }
        Some(&(line, s)) => match s {
            "biaxial_affine" => Some(BcKind::BiaxialAffine),
            "fixed_top_bottom" => Some(BcKind::FixedTopBottom),
            "fixed_all" => Some(BcKind::FixedAll),
            other => {
                raw.issues.push(ConfigIssue::TypeMismatch {
                    key: "bc.kind".to_string(),
                    line,
                    expected: "biaxial_affine | fixed_top_bottom | fixed_all",
                    got: other.to_string(),
                });
                None
            }
        },
    };
    let load_total = raw.f64_key("load.total").unwrap_or(0.0);
    let load_steps = raw.usize_key("load.steps").unwrap_or(1).max(1);
    if !(0.0..1.0).contains(&load_total) {
        raw.invalid(
            "load.total",
            format!("compression fraction must lie in [0, 1), got {load_total}"),
        );
    }

    // solver
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        newton_tol: raw.f64_key("solver.newton_tol").unwrap_or(defaults.newton_tol),
        newton_abs_tol: raw
            .f64_key("solver.newton_abs_tol")
            .unwrap_or(defaults.newton_abs_tol),
        max_iters: raw.usize_key("solver.max_iters").unwrap_or(defaults.max_iters),
        perturbation_amplitude: raw
            .f64_key("solver.perturbation_amplitude")
            .unwrap_or(defaults.perturbation_amplitude),
        step_halving_max: raw
            .usize_key("solver.step_halving_max")
            .unwrap_or(defaults.step_halving_max as usize) as u32,
        seed: raw.u64_key("solver.seed").unwrap_or(defaults.seed),
    };
    if let Err(e) = solver.validate() {
        raw.invalid("solver.newton_tol", e);
    }

    // output
    let output_dir = raw
        .entries
        .get("output.dir")
        .map(|&(_, v)| v.to_string())
        .unwrap_or_else(|| "out".to_string());
    let output_prefix = raw
        .entries
        .get("output.prefix")
        .map(|&(_, v)| v.to_string())
        .unwrap_or_else(|| "run".to_string());
    let output_fields = match raw.entries.get("output.fields") {
        None => CellField::DEFAULT.to_vec(),
        Some(&(line, s)) => {
            let mut fields = Vec::new();
            for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                match CellField::from_name(part) {
                    Some(f) => fields.push(f),
                    None => raw.issues.push(ConfigIssue::TypeMismatch {
                        key: "output.fields".to_string(),
                        line,
                        expected: "comma list of F11, F12, detF, Ceq, Smnorm",
                        got: part.to_string(),
                    }),
                }
            }
            fields
        }
    };

    if !raw.issues.is_empty() {
        return Err(raw.issues);
    }
    Ok(RunConfig {
        geometry: [l1.unwrap(), l2.unwrap(), l3.unwrap()],
        mesh_divisions: [nx.unwrap(), ny.unwrap(), nz.unwrap()],
        material: material.unwrap(),
        bc: bc.unwrap(),
        load_total,
        load_steps,
        solver,
        output_dir,
        output_prefix,
        output_fields,
    })
}

/// Canonical text form; `parse_config(serialize_config(c))` reparses to an
/// identical configuration.
pub fn serialize_config(c: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    kv("geometry.l1", format!("{}", c.geometry[0]));
    kv("geometry.l2", format!("{}", c.geometry[1]));
    kv("geometry.l3", format!("{}", c.geometry[2]));
    kv("mesh.nx", format!("{}", c.mesh_divisions[0]));
    kv("mesh.ny", format!("{}", c.mesh_divisions[1]));
    kv("mesh.nz", format!("{}", c.mesh_divisions[2]));
    kv("material.model", model_name(c.material.model).to_string());
    match c.material.model {
        Model::StVenantKirchhoff => {
            kv("material.lambda", format!("{}", c.material.lambda_lame));
            kv("material.mu", format!("{}", c.material.mu_lame));
        }
        Model::StVenantKirchhoffNormalized => {}
        Model::DoubleWell => {
            kv("material.alpha", format!("{}", c.material.alpha));
            kv("material.eps_well", format!("{}", c.material.eps_well));
        }
    }
    kv("material.h_chi", format!("{}", c.material.h_chi));
    kv("material.k_grad", format!("{}", c.material.k_grad));
    kv("material.k_vol", format!("{}", c.material.k_vol));
    kv("bc.kind", bc_name(c.bc).to_string());
    kv("load.total", format!("{}", c.load_total));
    kv("load.steps", format!("{}", c.load_steps));
    kv("solver.newton_tol", format!("{}", c.solver.newton_tol));
    kv("solver.newton_abs_tol", format!("{}", c.solver.newton_abs_tol));
    kv("solver.max_iters", format!("{}", c.solver.max_iters));
    kv(
        "solver.perturbation_amplitude",
        format!("{}", c.solver.perturbation_amplitude),
    );
    kv(
        "solver.step_halving_max",
        format!("{}", c.solver.step_halving_max),
    );
    kv("solver.seed", format!("{}", c.solver.seed));
    kv("output.dir", c.output_dir.clone());
    kv("output.prefix", c.output_prefix.clone());
    kv(
        "output.fields",
        c.output_fields
            .iter()
            .map(|f| f.name())
            .collect::<Vec<_>>()
            .join(","),
    );
    s
}

/// Names of the built-in experiment presets.
pub fn preset_names() -> Vec<&'static str> {
    vec![
        "stvk_fig1",
        "stvk_fig2",
        "dw_local_mesh10",
        "dw_local_mesh20",
        "dw_local_mesh50",
        "dw_grad_K1",
        "dw_grad_K10",
        "dw_grad_K50",
        "dw_grad_K250",
    ]
}

/// Builds a preset configuration.
///
/// The presets run the laminate experiments at desk scale: biaxial
/// compression of the normalized St. Venant-Kirchhoff block (plain, which
/// laminates, and regularized, which does not), mesh-sensitivity
/// relaxations of the local double-well block, and the internal-length
/// sweep of the regularized double-well block.
pub fn preset(name: &str) -> Option<RunConfig> {
    let block = [5.0, 5.0, 0.5];
    let solver = SolverConfig {
        newton_tol: 1e-8,
        newton_abs_tol: 1e-8,
        max_iters: 250,
        perturbation_amplitude: 1e-3,
        step_halving_max: 8,
        seed: 11,
    };
    let dw_material = MaterialParams::double_well(1e9, 0.05);
    let cfg = match name {
        "stvk_fig1" => RunConfig {
            geometry: block,
            mesh_divisions: [16, 16, 2],
            material: MaterialParams::st_venant_kirchhoff_normalized(),
            bc: BcKind::BiaxialAffine,
            load_total: 0.2175,
            load_steps: 20,
            solver: SolverConfig { seed: 7, ..solver },
            output_dir: "out".to_string(),
            output_prefix: "stvk_fig1".to_string(),
            output_fields: CellField::DEFAULT.to_vec(),
        },
        "stvk_fig2" => RunConfig {
            load_total: 0.25,
            material: MaterialParams::st_venant_kirchhoff_normalized()
                .with_regularization(100.0, 100.0),
            output_prefix: "stvk_fig2".to_string(),
            ..preset("stvk_fig1")?
        },
        "dw_local_mesh10" | "dw_local_mesh20" | "dw_local_mesh50" => {
            let n = match name {
                "dw_local_mesh10" => 10,
                "dw_local_mesh20" => 20,
                _ => 50,
            };
            RunConfig {
                geometry: block,
                mesh_divisions: [n, n, 1],
                material: dw_material,
                bc: BcKind::FixedTopBottom,
                load_total: 0.0,
                load_steps: 1,
                solver,
                output_dir: "out".to_string(),
                output_prefix: name.to_string(),
                output_fields: CellField::DEFAULT.to_vec(),
            }
        }
        "dw_grad_K1" | "dw_grad_K10" | "dw_grad_K50" | "dw_grad_K250" => {
            let k = match name {
                "dw_grad_K1" => 1.0,
                "dw_grad_K10" => 10.0,
                "dw_grad_K50" => 50.0,
                _ => 250.0,
            };
            RunConfig {
                geometry: block,
                mesh_divisions: [20, 20, 1],
                material: dw_material.with_regularization(1e5, k),
                bc: BcKind::FixedAll,
                load_total: 0.0,
                load_steps: 1,
                solver,
                output_dir: "out".to_string(),
                output_prefix: name.to_string(),
                output_fields: CellField::DEFAULT.to_vec(),
            }
        }
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dw_text() -> String {
        serialize_config(&preset("dw_grad_K10").unwrap())
    }

    #[test]
    fn preset_dw_k10_matches_experiment_parameters() {
        let c = preset("dw_grad_K10").unwrap();
        assert_eq!(c.material.alpha, 1e9);
        assert_eq!(c.material.h_chi, 1e5);
        assert_eq!(c.material.eps_well, 0.05);
        assert_eq!(c.material.k_grad, 10.0);
        assert_eq!(c.geometry, [5.0, 5.0, 0.5]);
        // derived internal length
        assert!((c.material.internal_length() - 0.01).abs() <= 1e-14);
        assert_eq!(c.formulation(), Formulation::Mixed);
    }

    #[test]
    fn empty_text_reports_every_required_key() {
        let errs = parse_config("").unwrap_err();
        let missing: Vec<_> = errs
            .iter()
            .filter_map(|e| match e {
                ConfigIssue::MissingRequired { key } => Some(*key),
                _ => None,
            })
            .collect();
        for key in [
            "geometry.l1",
            "geometry.l2",
            "geometry.l3",
            "mesh.nx",
            "mesh.ny",
            "mesh.nz",
            "material.model",
            "bc.kind",
        ] {
            assert!(missing.contains(&key), "missing {key} not reported");
        }
    }

    #[test]
    fn all_errors_reported_with_lines() {
        let text = "geometry.l1 = fast\nbogus.key = 3\nmesh.nx = -2\n";
        let errs = parse_config(text).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ConfigIssue::TypeMismatch { line: 1, .. })));
        assert!(errs
            .iter()
            .any(|e| matches!(e, ConfigIssue::UnknownKey { line: 2, .. })));
        assert!(errs
            .iter()
            .any(|e| matches!(e, ConfigIssue::TypeMismatch { line: 3, .. })));
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let text = format!("# heading\n\n{}\n  # trailing comment line\n", dw_text());
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn round_trip_is_identity() {
        for name in preset_names() {
            let c = preset(name).unwrap();
            let text = serialize_config(&c);
            let reparsed = parse_config(&text).expect("serialized config parses");
            assert_eq!(reparsed, c, "round trip failed for {name}");
            assert_eq!(serialize_config(&reparsed), text);
        }
    }

    #[test]
    fn every_preset_validates() {
        for name in preset_names() {
            let c = preset(name).unwrap();
            assert!(c
                .material
                .validate(c.formulation() == Formulation::Mixed)
                .is_ok());
            assert!(c.solver.validate().is_ok());
        }
        assert!(preset("nonexistent").is_none());
    }

    #[test]
    fn gradient_without_penalty_rejected() {
        let text = dw_text().replace("material.h_chi = 100000", "material.h_chi = 0");
        assert_ne!(text, dw_text());
        let errs = parse_config(&text).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ConfigIssue::Invalid { key, .. } if key == "material.k_grad")));
    }

    #[test]
    fn stvk_requires_lame_constants() {
        let text = "geometry.l1 = 1\ngeometry.l2 = 1\ngeometry.l3 = 1\n\
                    mesh.nx = 1\nmesh.ny = 1\nmesh.nz = 1\n\
                    material.model = stvk\nbc.kind = fixed_all\n";
        let errs = parse_config(text).unwrap_err();
        let missing: Vec<_> = errs
            .iter()
            .filter_map(|e| match e {
                ConfigIssue::MissingRequired { key } => Some(*key),
                _ => None,
            })
            .collect();
        assert!(missing.contains(&"material.lambda"));
        assert!(missing.contains(&"material.mu"));
    }
}
